#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tribogen/errors.hpp"
#include "tribogen/dataset.hpp"

using nlohmann::json;

namespace tribogen::dataset {

namespace {

// Record layout: [theta 23, N, F 128]; inputs are ordered [F 128, N].
constexpr int kThetaOffset = 0;
constexpr int kNOffset = contact::kParamCount;
constexpr int kLawOffset = contact::kParamCount + 1;

void widen_degenerate(double& lo, double& hi) {
  if (hi - lo > 0.0) return;
  const double pad = 1e-9 * std::max(std::abs(lo), 1.0);
  lo -= pad;
  hi += pad;
}

}  // namespace

ScalerParams fit_scaler(const Manifest& manifest) {
  const auto train = manifest.split_shards("train");
  if (train.empty()) throw std::invalid_argument("empty training split");

  ScalerParams s;
  s.input_min.fill(std::numeric_limits<double>::infinity());
  s.input_max.fill(-std::numeric_limits<double>::infinity());
  s.target_min.fill(std::numeric_limits<double>::infinity());
  s.target_max.fill(-std::numeric_limits<double>::infinity());

  std::uint64_t seen = 0;
  for (const auto* shard : train) {
    const auto records = read_shard(manifest.shard_file(*shard));
    const std::size_t count = records.size() / kRecordFloats;
    seen += count;
    for (std::size_t r = 0; r < count; ++r) {
      const float* rec = records.data() + r * kRecordFloats;
      for (int i = 0; i < contact::kParamCount; ++i) {
        const double v = rec[kThetaOffset + i];
        s.target_min[i] = std::min(s.target_min[i], v);
        s.target_max[i] = std::max(s.target_max[i], v);
      }
      for (int i = 0; i < contact::kLawPoints; ++i) {
        const double v = rec[kLawOffset + i];
        s.input_min[i] = std::min(s.input_min[i], v);
        s.input_max[i] = std::max(s.input_max[i], v);
      }
      const double n = rec[kNOffset];
      s.input_min[contact::kLawPoints] =
          std::min(s.input_min[contact::kLawPoints], n);
      s.input_max[contact::kLawPoints] =
          std::max(s.input_max[contact::kLawPoints], n);
    }
  }
  if (seen == 0) throw std::invalid_argument("training split has no records");

  for (int i = 0; i < kInputFeatures; ++i)
    widen_degenerate(s.input_min[i], s.input_max[i]);
  for (int i = 0; i < contact::kParamCount; ++i)
    widen_degenerate(s.target_min[i], s.target_max[i]);
  return s;
}

double scale_value(double v, double lo, double hi) {
  return 2.0 * (v - lo) / (hi - lo) - 1.0;
}

double unscale_value(double s, double lo, double hi) {
  return lo + 0.5 * (s + 1.0) * (hi - lo);
}

std::array<double, contact::kParamCount> scale_targets(
    const std::array<double, contact::kParamCount>& values,
    const ScalerParams& scaler) {
  std::array<double, contact::kParamCount> out;
  for (int i = 0; i < contact::kParamCount; ++i)
    out[i] = scale_value(values[i], scaler.target_min[i], scaler.target_max[i]);
  return out;
}

std::array<double, contact::kParamCount> unscale_targets(
    const std::array<double, contact::kParamCount>& scaled,
    const ScalerParams& scaler) {
  std::array<double, contact::kParamCount> out;
  for (int i = 0; i < contact::kParamCount; ++i)
    out[i] =
        unscale_value(scaled[i], scaler.target_min[i], scaler.target_max[i]);
  return out;
}

std::vector<double> scale_inputs(const std::vector<double>& law_values,
                                 double asperity_count,
                                 const ScalerParams& scaler) {
  if (law_values.size() != contact::kLawPoints)
    throw std::invalid_argument("law must hold 128 values");
  std::vector<double> out(kInputFeatures);
  for (int i = 0; i < contact::kLawPoints; ++i)
    out[i] = scale_value(law_values[i], scaler.input_min[i], scaler.input_max[i]);
  out[contact::kLawPoints] =
      scale_value(asperity_count, scaler.input_min[contact::kLawPoints],
                  scaler.input_max[contact::kLawPoints]);
  return out;
}

void ScalerParams::save(const std::string& path) const {
  json j;
  j["schema_version"] = schema_version;
  j["input_min"] = input_min;
  j["input_max"] = input_max;
  j["target_min"] = target_min;
  j["target_max"] = target_max;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scaler " + path);
  out << j.dump(2) << "\n";
}

ScalerParams ScalerParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scaler " + path);
  json j;
  in >> j;
  ScalerParams s;
  s.schema_version = j.at("schema_version");
  for (int i = 0; i < kInputFeatures; ++i) {
    s.input_min[i] = j.at("input_min")[i];
    s.input_max[i] = j.at("input_max")[i];
  }
  for (int i = 0; i < contact::kParamCount; ++i) {
    s.target_min[i] = j.at("target_min")[i];
    s.target_max[i] = j.at("target_max")[i];
  }
  return s;
}

}  // namespace tribogen::dataset
