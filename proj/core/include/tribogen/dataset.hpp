#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tribogen/contact.hpp"

namespace tribogen::dataset {

inline constexpr int kInputFeatures = 129;  // 128 law values + asperity count
inline constexpr int kRecordFloats = 152;   // [theta 23, N, F 128]
inline constexpr char kShardMagic[16] = {'T', 'R', 'I', 'B', 'O', 'G', 'E', 'N',
                                         '-', 'S', 'H', 'A', 'R', 'D', '1', 0};

// Per-parameter sampling bounds, indexed in GmmParams flattened order.
struct BoundsTable {
  std::array<contact::Interval, contact::kParamCount> bounds;

  static BoundsTable defaults();
  void validate() const;
  const contact::Interval& operator[](int i) const { return bounds[i]; }
};

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
  std::vector<double> make() const { return contact::linspace(lo, hi, count); }
};

std::vector<int> default_n_grid();  // 16 counts, 30..12000

struct GenerationConfig {
  std::uint64_t recipe_count = 1000;
  std::vector<int> n_grid = default_n_grid();
  GridSpec delta_grid{0.001, 300.0, 256};
  GridSpec p_grid{0.01, 2.0, contact::kLawPoints};
  contact::PhysicalConstants constants;
  BoundsTable bounds = BoundsTable::defaults();
  std::uint64_t base_seed = 0;
  std::uint64_t sobol_skip = 1;  // drop the all-zeros point
  std::uint64_t shard_size = 16384;

  void validate() const;
  std::uint64_t total_samples() const {
    return recipe_count * n_grid.size();
  }
  std::string to_json_string() const;
  static GenerationConfig from_json_string(const std::string& text);
  // Stable content hash of the canonical JSON form.
  std::string digest() const;
};

struct Sample {
  contact::GmmParams theta;
  int n = 0;
  contact::FrictionLaw law;
};

// Affine map of a unit-cube point onto the bounds, component-wise.
std::array<double, contact::kParamCount> map_to_bounds(const double* unit,
                                                       const BoundsTable& b);

// Renormalize the three free weights when their sum exceeds one (the fourth
// weight is derived); stored targets are the post-constraint values.
contact::GmmParams enforce_weight_constraint(
    const std::array<double, contact::kParamCount>& raw);

Sample generate_sample(const contact::GmmParams& theta, int n,
                       const contact::PhysicalConstants& constants,
                       const std::vector<double>& delta_grid,
                       const std::vector<double>& p_grid, std::uint64_t seed);

struct ShardInfo {
  std::string path;           // relative to the manifest directory
  std::uint64_t count = 0;
  std::string split;          // "", "train", "val" or "test"
};

struct Manifest {
  int schema_version = 1;
  std::string config_digest;
  std::uint64_t split_seed = 0;
  bool has_splits = false;
  std::string scaler_path;
  std::vector<ShardInfo> shards;
  std::vector<std::string> notes;

  std::string base_dir;  // where the manifest was loaded from; not serialized

  std::uint64_t total_count() const;
  std::vector<const ShardInfo*> split_shards(const std::string& split) const;
  std::string shard_file(const ShardInfo& s) const;

  void save(const std::string& path) const;
  static Manifest load(const std::string& path);
};

// Generate all shards under out_dir and write manifest.json last. Output is
// byte-identical for a fixed config regardless of worker count.
Manifest generate_dataset(const GenerationConfig& config,
                          const std::string& out_dir, int workers = 1);

// Shard-level random split; every shard lands in exactly one split.
Manifest split_shards(Manifest manifest,
                      std::array<double, 3> fractions = {0.70, 0.15, 0.15},
                      std::uint64_t seed = 42);

// Raw shard records, kRecordFloats little-endian floats each.
void write_shard(const std::string& path, const std::vector<float>& records);
std::vector<float> read_shard(const std::string& path);

// Min-max scaling to [-1, 1] fitted on the training split only. Input
// features are ordered [F1..F128, N]; targets follow the GmmParams
// flattened order.
struct ScalerParams {
  int schema_version = 1;
  std::array<double, kInputFeatures> input_min{}, input_max{};
  std::array<double, contact::kParamCount> target_min{}, target_max{};

  void save(const std::string& path) const;
  static ScalerParams load(const std::string& path);
};

ScalerParams fit_scaler(const Manifest& manifest);

double scale_value(double v, double lo, double hi);
double unscale_value(double s, double lo, double hi);

std::array<double, contact::kParamCount> scale_targets(
    const std::array<double, contact::kParamCount>& values,
    const ScalerParams& scaler);
std::array<double, contact::kParamCount> unscale_targets(
    const std::array<double, contact::kParamCount>& scaled,
    const ScalerParams& scaler);

// law must hold 128 values; returns the 129 scaled input features.
std::vector<double> scale_inputs(const std::vector<double>& law_values,
                                 double asperity_count,
                                 const ScalerParams& scaler);

}  // namespace tribogen::dataset
