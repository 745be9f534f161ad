#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "tribogen/contact.hpp"
#include "tribogen/dataset.hpp"

namespace fs = std::filesystem;
using namespace tribogen;
using namespace tribogen::dataset;

namespace {

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

GenerationConfig small_config() {
  GenerationConfig cfg;
  cfg.recipe_count = 10;
  cfg.shard_size = 32;
  cfg.base_seed = 99;
  // Small counts keep the forward simulations cheap.
  cfg.n_grid = {30, 50, 100, 150, 250, 400, 600, 1000,
                1100, 1200, 1300, 1400, 1500, 1600, 1700, 1800};
  return cfg;
}

std::map<std::string, std::uint64_t> shard_digests(const Manifest& m) {
  std::map<std::string, std::uint64_t> d;
  for (const auto& s : m.shards) d[s.path] = file_digest(m.shard_file(s));
  return d;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("map_to_bounds midpoint matches the dataset means") {
  const auto bounds = BoundsTable::defaults();
  double unit[contact::kParamCount];
  for (auto& u : unit) u = 0.5;
  const auto mid = map_to_bounds(unit, bounds);
  CHECK(mid[0] == doctest::Approx(0.5));    // w1
  CHECK(mid[3] == doctest::Approx(150.0));  // mu_h1
  CHECK(mid[4] == doctest::Approx(275.0));  // mu_r1
  CHECK(mid[11] == doctest::Approx(45.0));  // sigma_h1
  CHECK(mid[12] == doctest::Approx(55.0));  // sigma_r1
  CHECK(mid[19] == doctest::Approx(0.0));   // rho1
}

TEST_CASE("map_to_bounds endpoints") {
  const auto bounds = BoundsTable::defaults();
  double lo[contact::kParamCount], hi[contact::kParamCount];
  for (int i = 0; i < contact::kParamCount; ++i) {
    lo[i] = 0.0;
    hi[i] = 1.0 - 1e-12;
  }
  const auto at_lo = map_to_bounds(lo, bounds);
  const auto at_hi = map_to_bounds(hi, bounds);
  for (int i = 0; i < contact::kParamCount; ++i) {
    CHECK(at_lo[i] == bounds[i].lo);
    CHECK(at_hi[i] == doctest::Approx(bounds[i].hi).epsilon(1e-9));
  }
  double bad[contact::kParamCount] = {};
  bad[5] = 1.0;
  CHECK_THROWS_AS(map_to_bounds(bad, bounds), std::invalid_argument);
}

TEST_CASE("enforce_weight_constraint renormalizes violating weights") {
  double unit[contact::kParamCount];
  for (auto& u : unit) u = 0.5;
  auto raw = map_to_bounds(unit, BoundsTable::defaults());

  raw[0] = 0.5;
  raw[1] = 0.4;
  raw[2] = 0.3;
  auto t = enforce_weight_constraint(raw);
  CHECK(t.w[0] == doctest::Approx(0.416667).epsilon(1e-5));
  CHECK(t.w[1] == doctest::Approx(0.333333).epsilon(1e-5));
  CHECK(t.w[2] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(t.w4() == doctest::Approx(0.0).epsilon(1e-12));

  raw[0] = 0.2;
  raw[1] = 0.3;
  raw[2] = 0.1;
  t = enforce_weight_constraint(raw);
  CHECK(t.w[0] == 0.2);
  CHECK(t.w[1] == 0.3);
  CHECK(t.w[2] == 0.1);
  CHECK(t.w4() == doctest::Approx(0.4));

  raw[0] = raw[1] = raw[2] = 1.0;
  t = enforce_weight_constraint(raw);
  CHECK(t.w[0] == doctest::Approx(1.0 / 3.0));
  CHECK(t.w[1] == doctest::Approx(1.0 / 3.0));
  CHECK(t.w[2] == doctest::Approx(1.0 / 3.0));
  CHECK(t.w4() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("generate_sample is deterministic and well-shaped") {
  const auto bounds = BoundsTable::defaults();
  double unit[contact::kParamCount];
  for (auto& u : unit) u = 0.5;
  const auto theta = enforce_weight_constraint(map_to_bounds(unit, bounds));
  const contact::PhysicalConstants pc;
  const auto delta = contact::default_delta_grid();
  const auto p = contact::default_p_grid();

  const auto a = generate_sample(theta, 100, pc, delta, p, 5);
  const auto b = generate_sample(theta, 100, pc, delta, p, 5);
  CHECK(a.law.f_values == b.law.f_values);
  CHECK(a.law.f_values.size() == 128);
  CHECK(a.n == 100);
  const auto c = generate_sample(theta, 100, pc, delta, p, 6);
  CHECK(a.law.f_values != c.law.f_values);
}

TEST_CASE("generate_dataset counts, determinism and record format") {
  TempDir dir_a("tribogen_test_gen_a");
  TempDir dir_b("tribogen_test_gen_b");
  TempDir dir_c("tribogen_test_gen_c");
  const auto cfg = small_config();

  const auto m1 = generate_dataset(cfg, dir_a.str(), 1);
  CHECK(m1.total_count() == 160);
  CHECK(m1.shards.size() == 5);  // ceil(160 / 32)
  CHECK(m1.config_digest == cfg.digest());

  // Same config, new run and a different worker count: identical bytes.
  const auto m2 = generate_dataset(cfg, dir_b.str(), 1);
  const auto m3 = generate_dataset(cfg, dir_c.str(), 4);
  CHECK(shard_digests(m1) == shard_digests(m2));
  CHECK(shard_digests(m1) == shard_digests(m3));

  // Record size is exactly 152 x 4 bytes plus the fixed header.
  const auto& shard = m1.shards.front();
  CHECK(fs::file_size(m1.shard_file(shard)) ==
        16 + 8 + shard.count * kRecordFloats * 4);

  // Round trip is bit-exact.
  const auto records = read_shard(m1.shard_file(shard));
  const std::string copy = (dir_a.path / "copy.bin").string();
  write_shard(copy, records);
  CHECK(file_digest(copy) == file_digest(m1.shard_file(shard)));

  // Manifest reload preserves counts.
  const auto loaded =
      Manifest::load((dir_a.path / "manifest.json").string());
  CHECK(loaded.total_count() == 160);
  CHECK(loaded.config_digest == m1.config_digest);
}

TEST_CASE("stored parameters satisfy bounds and the weight constraint") {
  TempDir dir("tribogen_test_gen_bounds");
  auto cfg = small_config();
  cfg.recipe_count = 20;
  const auto m = generate_dataset(cfg, dir.str(), 2);
  const auto bounds = BoundsTable::defaults();
  for (const auto& s : m.shards) {
    const auto records = read_shard(m.shard_file(s));
    for (std::size_t r = 0; r < s.count; ++r) {
      const float* rec = records.data() + r * kRecordFloats;
      double wsum = 0.0;
      for (int i = 0; i < contact::kParamCount; ++i) {
        CHECK(rec[i] >= bounds[i].lo - 1e-6);
        CHECK(rec[i] <= bounds[i].hi + 1e-6);
      }
      for (int i = 0; i < 3; ++i) wsum += rec[i];
      CHECK(wsum <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("split_shards assigns every shard exactly once") {
  Manifest m;
  for (int i = 0; i < 100; ++i)
    m.shards.push_back({"shard_" + std::to_string(i), 10, ""});

  const auto split = split_shards(m, {0.70, 0.15, 0.15}, 42);
  int train = 0, val = 0, test = 0;
  for (const auto& s : split.shards) {
    if (s.split == "train") ++train;
    else if (s.split == "val") ++val;
    else if (s.split == "test") ++test;
  }
  CHECK(train == 70);
  CHECK(val == 15);
  CHECK(test == 15);

  const auto again = split_shards(m, {0.70, 0.15, 0.15}, 42);
  const auto other = split_shards(m, {0.70, 0.15, 0.15}, 43);
  bool same42 = true, same43 = true;
  for (std::size_t i = 0; i < m.shards.size(); ++i) {
    same42 &= split.shards[i].split == again.shards[i].split;
    same43 &= split.shards[i].split == other.shards[i].split;
  }
  CHECK(same42);
  CHECK_FALSE(same43);

  CHECK_THROWS_AS(split_shards(m, {0.5, 0.1, 0.1}, 42), std::invalid_argument);
  Manifest tiny;
  tiny.shards.push_back({"a", 1, ""});
  CHECK_THROWS_AS(split_shards(tiny), std::invalid_argument);
}

TEST_CASE("scaler fit, round trip and extension") {
  TempDir dir("tribogen_test_scaler");
  auto cfg = small_config();
  cfg.recipe_count = 12;
  cfg.shard_size = 24;
  auto m = generate_dataset(cfg, dir.str(), 1);
  m = split_shards(m, {0.70, 0.15, 0.15}, 42);

  const auto scaler = fit_scaler(m);

  // Fitted ranges bracket every training value and stay inside the
  // generation bounds for the targets.
  const auto bounds = BoundsTable::defaults();
  for (int i = 0; i < contact::kParamCount; ++i) {
    CHECK(scaler.target_min[i] >= bounds[i].lo - 1e-6);
    CHECK(scaler.target_max[i] <= bounds[i].hi + 1e-6);
    CHECK(scaler.target_min[i] < scaler.target_max[i]);
  }
  for (const auto* shard : m.split_shards("train")) {
    const auto records = read_shard(m.shard_file(*shard));
    for (std::size_t r = 0; r < shard->count; ++r) {
      const float* rec = records.data() + r * kRecordFloats;
      for (int i = 0; i < contact::kParamCount; ++i) {
        CHECK(rec[i] >= scaler.target_min[i]);
        CHECK(rec[i] <= scaler.target_max[i]);
      }
    }
  }

  // Boundary values and the affine round trip.
  CHECK(scale_value(scaler.target_min[0], scaler.target_min[0],
                    scaler.target_max[0]) == doctest::Approx(-1.0));
  CHECK(scale_value(scaler.target_max[0], scaler.target_min[0],
                    scaler.target_max[0]) == doctest::Approx(1.0));
  CHECK(scale_value(scaler.target_max[0] + 1.0, scaler.target_min[0],
                    scaler.target_max[0]) > 1.0);
  std::array<double, contact::kParamCount> values;
  for (int i = 0; i < contact::kParamCount; ++i)
    values[i] = 0.3 * scaler.target_min[i] + 0.7 * scaler.target_max[i];
  const auto back = unscale_targets(scale_targets(values, scaler), scaler);
  for (int i = 0; i < contact::kParamCount; ++i)
    CHECK(back[i] == doctest::Approx(values[i]).epsilon(1e-12));

  // JSON round trip.
  const std::string path = (dir.path / "scaler.json").string();
  scaler.save(path);
  const auto loaded = ScalerParams::load(path);
  CHECK(loaded.input_min == scaler.input_min);
  CHECK(loaded.target_max == scaler.target_max);

  // Empty training split is rejected.
  Manifest unsplit = m;
  for (auto& s : unsplit.shards) s.split = "";
  CHECK_THROWS_AS(fit_scaler(unsplit), std::invalid_argument);
}

TEST_CASE("degenerate constant feature gets a widened range") {
  // All shard records share the same N, so that input feature is constant.
  TempDir dir("tribogen_test_degenerate");
  std::vector<float> records;
  for (int r = 0; r < 8; ++r) {
    for (int i = 0; i < contact::kParamCount; ++i)
      records.push_back(0.5f + 0.01f * r);
    records.push_back(100.0f);  // constant N
    for (int i = 0; i < contact::kLawPoints; ++i)
      records.push_back(0.001f * (r + i));
  }
  write_shard((dir.path / "s0.bin").string(), records);
  Manifest m;
  m.base_dir = dir.str();
  m.shards.push_back({"s0.bin", 8, "train"});
  const auto scaler = fit_scaler(m);
  const int n_idx = contact::kLawPoints;
  CHECK(scaler.input_min[n_idx] < 100.0);
  CHECK(scaler.input_max[n_idx] > 100.0);
  CHECK(scale_value(100.0, scaler.input_min[n_idx], scaler.input_max[n_idx]) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("config JSON round trip and digest stability") {
  const auto cfg = small_config();
  const auto text = cfg.to_json_string();
  const auto back = GenerationConfig::from_json_string(text);
  CHECK(back.digest() == cfg.digest());
  auto other = cfg;
  other.base_seed = 100;
  CHECK(other.digest() != cfg.digest());
  GenerationConfig bad;
  bad.n_grid = {10};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
