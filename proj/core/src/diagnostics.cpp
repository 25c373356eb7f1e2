#include "mixts/diagnostics.hpp"

#include <cmath>
#include <numeric>

#include "mixts/errors.hpp"

namespace mixts {

namespace {

void check_latent(const LatentDiagnostics& diag, std::size_t s) {
  if (s >= diag.over_estimation.size()) throw InputError("diagnostics: latent index out of range");
}

void check_finite(std::initializer_list<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("diagnostics: non-finite input");
  }
}

double threshold(const LatentDiagnostics& diag, Setting setting, double scale,
                 std::size_t s) {
  const double n_visits = static_cast<double>(diag.visits[s]);
  const double log_n = std::log(diag.horizon);
  if (setting == Setting::kBandit) return 2.0 * scale * std::sqrt(n_visits * log_n);
  return std::sqrt(scale * n_visits * log_n);
}

}  // namespace

std::size_t LatentDiagnostics::rounds() const {
  return std::accumulate(visits.begin(), visits.end(), std::size_t{0});
}

LatentDiagnostics bandit_diagnostics(std::size_t num_latent, double horizon,
                                     std::size_t dim) {
  const double dn = static_cast<double>(dim) * horizon;
  if (!(horizon >= 2.0) || !(dn > 1.0)) throw DomainError("bandit_diagnostics: need n >= 2");
  const double eta = std::sqrt(2.0 * std::log(horizon) / std::log(dn));
  return {std::vector<double>(num_latent, 0.0), std::vector<std::size_t>(num_latent, 0),
          horizon, eta};
}

LatentDiagnostics mdp_diagnostics(std::size_t num_latent, double horizon) {
  if (!(horizon >= 2.0)) throw DomainError("mdp_diagnostics: need n >= 2");
  return {std::vector<double>(num_latent, 0.0), std::vector<std::size_t>(num_latent, 0),
          horizon, std::sqrt(2.0)};
}

LatentDiagnostics record_bandit_round(LatentDiagnostics diag, std::size_t s,
                                      double mu_bar, double width, double y) {
  check_latent(diag, s);
  check_finite({mu_bar, width, y});
  diag.over_estimation[s] += mu_bar - diag.eta * width - y;
  diag.visits[s] += 1;
  return diag;
}

LatentDiagnostics record_mdp_episode(LatentDiagnostics diag, std::size_t s,
                                     double vbar, double width_sum,
                                     double episode_return, std::size_t h) {
  check_latent(diag, s);
  check_finite({vbar, width_sum, episode_return});
  diag.over_estimation[s] +=
      vbar - static_cast<double>(h) * diag.eta * width_sum - episode_return;
  diag.visits[s] += 1;
  return diag;
}

bool in_confidence_set(const LatentDiagnostics& diag, Setting setting,
                       double scale, std::size_t s) {
  check_latent(diag, s);
  return diag.over_estimation[s] <= threshold(diag, setting, scale, s);
}

std::vector<std::size_t> confidence_set(const LatentDiagnostics& diag,
                                        Setting setting, double scale) {
  if (!(diag.horizon >= 2.0)) throw DomainError("confidence_set: need n >= 2");
  std::vector<std::size_t> members;
  for (std::size_t s = 0; s < diag.over_estimation.size(); ++s) {
    if (in_confidence_set(diag, setting, scale, s)) members.push_back(s);
  }
  return members;
}

}  // namespace mixts
