#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mixts/errors.hpp"
#include "mixts/prior_fitting.hpp"

namespace mixts {

namespace {

constexpr const char* kFormatTag = "mixts-prior";
constexpr int kFormatVersion = 1;

using nlohmann::json;

json encode_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double decode_number(const json& j, const char* field) {
  if (!j.is_number()) throw ConfigError(std::string("prior file: non-numeric entry in ") + field);
  return j.get<double>();
}

}  // namespace

void save_prior(std::ostream& out, const GaussianMixturePrior& prior) {
  validate(prior);
  json doc;
  doc["format"] = kFormatTag;
  doc["version"] = kFormatVersion;
  doc["d"] = prior.dim();
  doc["L"] = prior.num_components();
  doc["sigma"] = prior.noise_sd;
  json log_w = json::array();
  for (double lw : prior.latent_prior.log_weights()) {
    if (std::isfinite(lw)) {
      log_w.push_back(lw);
    } else {
      log_w.push_back(nullptr);
    }
  }
  doc["log_weights"] = std::move(log_w);
  json comps = json::array();
  for (const auto& c : prior.components) {
    json cov = json::array();
    for (Eigen::Index i = 0; i < c.cov.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cov.cols(); ++j) cov.push_back(c.cov(i, j));
    }
    comps.push_back({{"mean", encode_vector(c.mean)}, {"cov", std::move(cov)}});
  }
  doc["components"] = std::move(comps);
  out << doc.dump(1) << '\n';
  if (!out) throw ConfigError("prior file: write failed");
}

void save_prior(const std::filesystem::path& path, const GaussianMixturePrior& prior) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write prior file " + path.string());
  save_prior(out, prior);
}

GaussianMixturePrior load_prior(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("prior file: ") + e.what());
  }
  try {
    if (doc.value("format", std::string()) != kFormatTag) {
      throw ConfigError("prior file: missing or wrong format tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw ConfigError("prior file: unsupported version " + std::to_string(version));
    }
    const auto d = doc.at("d").get<std::size_t>();
    const auto L = doc.at("L").get<std::size_t>();
    const double sigma = decode_number(doc.at("sigma"), "sigma");

    const json& log_w_json = doc.at("log_weights");
    if (!log_w_json.is_array() || log_w_json.size() != L) {
      throw ConfigError("prior file: log_weights must have L entries");
    }
    std::vector<double> log_w;
    for (const auto& v : log_w_json) {
      log_w.push_back(v.is_null() ? -std::numeric_limits<double>::infinity()
                                  : decode_number(v, "log_weights"));
    }

    const json& comps = doc.at("components");
    if (!comps.is_array() || comps.size() != L) {
      throw ConfigError("prior file: components must have L entries");
    }
    const auto di = static_cast<Eigen::Index>(d);
    std::vector<GaussianComponent> components;
    for (const auto& c : comps) {
      const json& mean = c.at("mean");
      const json& cov = c.at("cov");
      if (mean.size() != d || cov.size() != d * d) {
        throw ConfigError("prior file: component dimensions disagree with d");
      }
      GaussianComponent comp{Vector(di), Matrix(di, di)};
      for (Eigen::Index i = 0; i < di; ++i) {
        comp.mean[i] = decode_number(mean[static_cast<std::size_t>(i)], "mean");
        for (Eigen::Index j = 0; j < di; ++j) {
          comp.cov(i, j) = decode_number(cov[static_cast<std::size_t>(i * di + j)], "cov");
        }
      }
      components.push_back(std::move(comp));
    }
    // The stored weights are already normalized; normalize() leaves them
    // untouched when their logsumexp is within rounding of zero.
    GaussianMixturePrior prior{std::move(components), normalize(log_w), sigma};
    try {
      validate(prior);
    } catch (const InputError& e) {
      throw ConfigError(std::string("prior file: ") + e.what());
    }
    return prior;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("prior file: ") + e.what());
  }
}

GaussianMixturePrior load_prior(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open prior file " + path.string());
  return load_prior(in);
}

}  // namespace mixts
