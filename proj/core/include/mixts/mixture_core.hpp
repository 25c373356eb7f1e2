#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace mixts {

// logsumexp over a span; returns -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> values);

// Normalized log-probability vector over L latent states.
//
// Entries are finite or -inf, at least one is finite, and their logsumexp
// is zero to within 1e-9. Only normalize() and uniform() construct one.
class MixtureWeights {
 public:
  static MixtureWeights uniform(std::size_t size);

  std::size_t size() const { return log_w_.size(); }
  std::span<const double> log_weights() const { return log_w_; }
  double log_weight(std::size_t s) const { return log_w_[s]; }
  double probability(std::size_t s) const;
  std::vector<double> probabilities() const;

  // Adds a per-component log-likelihood and renormalizes.
  MixtureWeights updated(std::span<const double> log_likelihood) const;

  friend bool operator==(const MixtureWeights&, const MixtureWeights&) = default;

 private:
  explicit MixtureWeights(std::vector<double> log_w) : log_w_(std::move(log_w)) {}
  friend MixtureWeights normalize(std::span<const double> raw_log_weights);

  std::vector<double> log_w_;
};

// Shifts raw log weights by a single constant so that they sum to one in
// linear space. Throws DegenerateWeightsError when every entry is -inf or
// any entry is NaN or +inf.
MixtureWeights normalize(std::span<const double> raw_log_weights);
inline MixtureWeights normalize(std::initializer_list<double> raw) {
  return normalize(std::span<const double>(raw.begin(), raw.size()));
}

// Deterministic random stream identified by (seed, stream_id).
//
// Two streams with the same identity produce the same draws; the engine
// state is seeded through std::seed_seq from all 128 identity bits, so
// distinct stream ids give unrelated sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double uniform();                       // [0, 1)
  double normal();                        // N(0, 1)
  double normal(double mean, double sd);
  bool bernoulli(double p);
  std::size_t uniform_index(std::size_t n);  // [0, n)
  // log of a Gamma(shape, 1) draw; well defined for arbitrarily small shape.
  double log_gamma(double shape);
  double gamma(double shape);
  double beta(double a, double b);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

// Combines a list of integers into one 64-bit stream id (splitmix64 chain).
std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts);

// Draws an index with probability exp(log_w[i]). Never returns an index
// whose weight is -inf.
std::size_t sample_categorical(const MixtureWeights& weights, RngStream& rng);

}  // namespace mixts
