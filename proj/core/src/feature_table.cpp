#include "mixts/feature_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mixts/csv.hpp"
#include "mixts/errors.hpp"

namespace mixts {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("feature file line " + std::to_string(line_no) + ": cannot parse '" +
                      std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::vector<std::vector<std::size_t>> FeatureTable::rows_by_class() const {
  std::vector<std::vector<std::size_t>> groups(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

FeatureTable read_feature_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("feature file: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "class") {
    throw ConfigError("feature file: header must be class,f0,f1,...");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j + 1] != "f" + std::to_string(j)) {
      throw ConfigError("feature file: expected column f" + std::to_string(j));
    }
  }

  std::vector<double> values;
  FeatureTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != d + 1) {
      throw ConfigError("feature file line " + std::to_string(line_no) + ": expected " +
                        std::to_string(d + 1) + " fields");
    }
    table.labels.push_back(parse_number<std::size_t>(fields[0], line_no));
    for (std::size_t j = 0; j < d; ++j) {
      const double v = parse_number<double>(fields[j + 1], line_no);
      if (!std::isfinite(v)) throw ConfigError("feature file: non-finite feature");
      values.push_back(v);
    }
  }
  if (table.labels.empty()) throw ConfigError("feature file: no rows");
  const auto n = static_cast<Eigen::Index>(table.labels.size());
  table.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(values.data(), n,
                                                                    static_cast<Eigen::Index>(d));
  std::size_t max_label = 0;
  for (std::size_t l : table.labels) max_label = std::max(max_label, l);
  table.num_classes = max_label + 1;
  return table;
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feature file " + path.string());
  return read_feature_table(in);
}

void write_feature_table(std::ostream& out, const FeatureTable& table) {
  out << "class";
  for (std::size_t j = 0; j < table.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << table.labels[i];
    for (std::size_t j = 0; j < table.dim(); ++j) {
      out << ',' << format_double(table.features(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write feature file " + path.string());
  write_feature_table(out, table);
}

FeatureTable synthesize_feature_table(std::size_t num_classes, std::size_t dim,
                                      std::size_t rows_per_class, double noise_sd,
                                      RngStream& rng) {
  if (num_classes == 0 || dim == 0 || rows_per_class == 0) {
    throw InputError("synthesize_feature_table: sizes must be positive");
  }
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < num_classes; ++c) {
    Vector center(d);
    for (Eigen::Index j = 0; j < d; ++j) center[j] = rng.normal();
    centers.push_back(center / center.norm());
  }
  FeatureTable table;
  table.num_classes = num_classes;
  table.features.resize(static_cast<Eigen::Index>(num_classes * rows_per_class), d);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t k = 0; k < rows_per_class; ++k, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) {
        table.features(row, j) = centers[c][j] + noise_sd * rng.normal();
      }
      table.labels.push_back(c);
    }
  }
  return table;
}

}  // namespace mixts
