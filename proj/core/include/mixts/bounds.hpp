#pragma once

#include <cstddef>

namespace mixts {

struct BoundInputsLinear {
  double n;
  double d;
  double num_latent;
  double sigma;
  double kappa;
  double lambda0_max;  // max eigenvalue of the prior covariances
};

struct BoundInputsMDP {
  double n;
  double num_states;
  double num_actions;
  double horizon;
  double num_latent;
  double lambda0_min;  // min prior pseudo-count l1-norm over components and pairs
};

// Bayes regret upper bound for MixTS in a linear bandit:
//   6 sigma d sqrt(n (1 + k^2 lam / sigma^2) log(1 + n k^2 lam / (sigma^2 d)) log(d n))
//   + 2 sigma sqrt(L n log n).
// The polylogarithmic additive constant is omitted unless `full_constants`
// is set, in which case the trailing terms
//   3 L sqrt(2 k^2 lam d log(d n)) + 2 sqrt(k^2 lam d / (2 pi)) + 4 L k
// are added. Throws DomainError outside the domain (d n <= 1, n < 1, ...).
double theorem1_bound(const BoundInputsLinear& in, bool full_constants = false);

// Bayes regret upper bound for MixTS in a tabular MDP:
//   4 nX h sqrt(2 nA n h log(4 nX nA n) log(1 + n h / (2 nX nA Lambda)))
//   + sqrt(L n h log n),
// without the additive constant.
double theorem2_bound(const BoundInputsMDP& in);

}  // namespace mixts
