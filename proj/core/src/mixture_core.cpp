#include "mixts/mixture_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixts/errors.hpp"

namespace mixts {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A vector already normalized to within this many nats is returned as-is,
// which makes normalize() idempotent bit for bit.
constexpr double kNormalizedSlack = 1e-14;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  double max_value = kNegInf;
  for (double v : values) max_value = std::max(max_value, v);
  if (!std::isfinite(max_value)) return max_value;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

MixtureWeights normalize(std::span<const double> raw_log_weights) {
  if (raw_log_weights.empty()) {
    throw DegenerateWeightsError("normalize: empty weight vector");
  }
  bool any_finite = false;
  for (double v : raw_log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw DegenerateWeightsError("normalize: NaN or +inf log weight");
    }
    any_finite = any_finite || std::isfinite(v);
  }
  if (!any_finite) {
    throw DegenerateWeightsError("normalize: every log weight is -inf");
  }
  std::vector<double> out(raw_log_weights.begin(), raw_log_weights.end());
  // One shift can leave a residual above the slack when the raw values are
  // large; a second pass on values near zero always lands inside it.
  for (int pass = 0; pass < 4; ++pass) {
    const double lse = log_sum_exp(out);
    if (std::abs(lse) <= kNormalizedSlack) break;
    for (double& v : out) v -= lse;
  }
  return MixtureWeights(std::move(out));
}

MixtureWeights MixtureWeights::uniform(std::size_t size) {
  if (size == 0) throw InputError("MixtureWeights::uniform: size must be >= 1");
  return MixtureWeights(
      std::vector<double>(size, -std::log(static_cast<double>(size))));
}

double MixtureWeights::probability(std::size_t s) const {
  return std::exp(log_w_.at(s));
}

std::vector<double> MixtureWeights::probabilities() const {
  std::vector<double> p(log_w_.size());
  std::transform(log_w_.begin(), log_w_.end(), p.begin(),
                 [](double v) { return std::exp(v); });
  return p;
}

MixtureWeights MixtureWeights::updated(
    std::span<const double> log_likelihood) const {
  if (log_likelihood.size() != log_w_.size()) {
    throw InputError("MixtureWeights::updated: size mismatch");
  }
  std::vector<double> raw(log_w_);
  for (std::size_t s = 0; s < raw.size(); ++s) raw[s] += log_likelihood[s];
  return normalize(raw);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::normal() {
  return std::normal_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::normal(double mean, double sd) { return mean + sd * normal(); }

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw InputError("uniform_index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double RngStream::log_gamma(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InputError("log_gamma: shape must be positive and finite, got " +
                     std::to_string(shape));
  }
  if (shape >= 1.0) {
    return std::log(std::gamma_distribution<double>(shape, 1.0)(engine_));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a); kept in log space since U^(1/a)
  // underflows for small a.
  const double boosted = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
  double u = uniform();
  while (u <= 0.0) u = uniform();
  return std::log(boosted) + std::log(u) / shape;
}

double RngStream::gamma(double shape) { return std::exp(log_gamma(shape)); }

double RngStream::beta(double a, double b) {
  const double la = log_gamma(a);
  const double lb = log_gamma(b);
  // a / (a + b) computed as a logistic in the log-ratio.
  return 1.0 / (1.0 + std::exp(lb - la));
}

std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

std::size_t sample_categorical(const MixtureWeights& weights, RngStream& rng) {
  const auto log_w = weights.log_weights();
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_supported = 0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    if (log_w[i] == kNegInf) continue;
    last_supported = i;
    cumulative += std::exp(log_w[i]);
    if (u < cumulative) return i;
  }
  // Rounding left the cumulative sum slightly below one.
  return last_supported;
}

}  // namespace mixts
