#include "mixts/bounds.hpp"

#include <cmath>
#include <numbers>

#include "mixts/errors.hpp"

namespace mixts {

double theorem1_bound(const BoundInputsLinear& in, bool full_constants) {
  const double n = in.n;
  const double d = in.d;
  const double L = in.num_latent;
  const double sigma = in.sigma;
  const double k2 = in.kappa * in.kappa;
  const double lam = in.lambda0_max;
  if (!(n >= 1.0 && d >= 1.0 && L >= 1.0 && sigma > 0.0 && in.kappa > 0.0 && lam >= 0.0)) {
    throw DomainError("theorem1_bound: inputs must be positive");
  }
  if (!(d * n > 1.0)) throw DomainError("theorem1_bound: requires d * n > 1");
  if (!std::isfinite(n * d * L * sigma * k2 * (1.0 + lam))) {
    throw DomainError("theorem1_bound: non-finite input");
  }

  const double s2 = sigma * sigma;
  const double log_dn = std::log(d * n);
  const double learning =
      6.0 * sigma * d *
      std::sqrt(n * (1.0 + k2 * lam / s2) * std::log1p(n * k2 * lam / (s2 * d)) * log_dn);
  const double identification = 2.0 * sigma * std::sqrt(L * n * std::log(n));
  double bound = learning + identification;
  if (full_constants) {
    bound += 3.0 * L * std::sqrt(2.0 * k2 * lam * d * log_dn) +
             2.0 * std::sqrt(k2 * lam * d / (2.0 * std::numbers::pi)) + 4.0 * L * in.kappa;
  }
  return bound;
}

double theorem2_bound(const BoundInputsMDP& in) {
  const double n = in.n;
  const double nX = in.num_states;
  const double nA = in.num_actions;
  const double h = in.horizon;
  const double L = in.num_latent;
  const double lam = in.lambda0_min;
  if (!(n >= 1.0 && nX >= 1.0 && nA >= 1.0 && h >= 1.0 && L >= 1.0 && lam > 0.0)) {
    throw DomainError("theorem2_bound: inputs must be positive");
  }
  const double learning =
      4.0 * nX * h *
      std::sqrt(2.0 * nA * n * h * std::log(4.0 * nX * nA * n) *
                std::log1p(n * h / (2.0 * nX * nA * lam)));
  const double identification = std::sqrt(L * n * h * std::log(n));
  return learning + identification;
}

}  // namespace mixts
