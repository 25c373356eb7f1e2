#pragma once

#include <cstddef>
#include <vector>

namespace mixts {

enum class Setting { kBandit, kMdp };

// Running over-estimation totals G(s) and sample counts N(s) per latent
// state, used to form the confidence set of latent states that remain
// consistent with the observed rewards. Never consulted when acting.
struct LatentDiagnostics {
  std::vector<double> over_estimation;  // G
  std::vector<std::size_t> visits;      // N
  double horizon;                       // n in the log n thresholds
  double eta;                           // width multiplier

  std::size_t rounds() const;
};

// eta = sqrt(2 log n / log(d n)) so that eta times the confidence width
// equals ||a||_Sigma * 2 sqrt(d log n).
LatentDiagnostics bandit_diagnostics(std::size_t num_latent, double horizon,
                                     std::size_t dim);

// eta = sqrt(2).
LatentDiagnostics mdp_diagnostics(std::size_t num_latent, double horizon);

// G[s] += mu_bar - eta * width - y; N[s] += 1.
LatentDiagnostics record_bandit_round(LatentDiagnostics diag, std::size_t s,
                                      double mu_bar, double width, double y);

// G[s] += vbar - h * eta * width_sum - episode_return; N[s] += 1.
LatentDiagnostics record_mdp_episode(LatentDiagnostics diag, std::size_t s,
                                     double vbar, double width_sum,
                                     double episode_return, std::size_t h);

// Bandit: {s : G[s] <= 2 sigma sqrt(N[s] log n)}.
// MDP:    {s : G[s] <= sqrt(h N[s] log n)}.
// `scale` is sigma for the bandit and h for the MDP. Inclusive at the
// threshold.
std::vector<std::size_t> confidence_set(const LatentDiagnostics& diag,
                                        Setting setting, double scale);

bool in_confidence_set(const LatentDiagnostics& diag, Setting setting,
                       double scale, std::size_t s);

}  // namespace mixts
