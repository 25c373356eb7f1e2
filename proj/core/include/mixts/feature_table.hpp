#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mixts/linalg.hpp"
#include "mixts/mixture_core.hpp"

namespace mixts {

// Labelled feature vectors (one row per item, e.g. one image embedding).
//
// On disk: UTF-8 CSV, header `class,f0,f1,...,f{d-1}`, one row per item,
// integer class label first, LF line endings.
struct FeatureTable {
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t rows() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  // Row indices grouped by class.
  std::vector<std::vector<std::size_t>> rows_by_class() const;
};

FeatureTable read_feature_table(std::istream& in);
FeatureTable read_feature_table(const std::filesystem::path& path);
void write_feature_table(std::ostream& out, const FeatureTable& table);
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);

// Synthetic stand-in for precomputed embeddings: class c has a random
// unit-norm center, items are center + N(0, noise_sd^2 I).
FeatureTable synthesize_feature_table(std::size_t num_classes, std::size_t dim,
                                      std::size_t rows_per_class, double noise_sd,
                                      RngStream& rng);

}  // namespace mixts
