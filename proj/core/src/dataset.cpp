#include "tribogen/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "tribogen/errors.hpp"
#include "tribogen/rng.hpp"
#include "tribogen/sobol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tribogen::dataset {

BoundsTable BoundsTable::defaults() {
  BoundsTable t;
  for (int i = 0; i < 3; ++i) t.bounds[i] = {0.0, 1.0};  // weights
  for (int k = 0; k < 4; ++k) {
    t.bounds[3 + 2 * k] = {50.0, 250.0};    // mu_h
    t.bounds[4 + 2 * k] = {50.0, 500.0};    // mu_r
    t.bounds[11 + 2 * k] = {10.0, 80.0};    // sigma_h
    t.bounds[12 + 2 * k] = {10.0, 100.0};   // sigma_r
    t.bounds[19 + k] = {-0.9, 0.9};         // rho
  }
  return t;
}

void BoundsTable::validate() const {
  for (const auto& b : bounds)
    if (!(b.lo < b.hi)) throw std::invalid_argument("bounds lower >= upper");
}

std::vector<int> default_n_grid() {
  return {30,   50,   100,  150,  250,   400,   600,   1000,
          1500, 2500, 4000, 6000, 8000, 10000, 11000, 12000};
}

void GenerationConfig::validate() const {
  if (recipe_count < 1) throw std::invalid_argument("recipe_count must be >= 1");
  if (n_grid.empty()) throw std::invalid_argument("empty n_grid");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 30 || n_grid[i] > 12000)
      throw std::invalid_argument("asperity counts must lie in [30, 12000]");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw std::invalid_argument("n_grid must be ascending");
  }
  if (shard_size < 1) throw std::invalid_argument("shard_size must be >= 1");
  constants.validate();
  bounds.validate();
}

namespace {

json grid_to_json(const GridSpec& g) {
  return json{{"lo", g.lo}, {"hi", g.hi}, {"count", g.count}};
}

GridSpec grid_from_json(const json& j) {
  return GridSpec{j.at("lo"), j.at("hi"), j.at("count")};
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace

std::string GenerationConfig::to_json_string() const {
  json j;
  j["schema_version"] = 1;
  j["recipe_count"] = recipe_count;
  j["n_grid"] = n_grid;
  j["delta_grid"] = grid_to_json(delta_grid);
  j["p_grid"] = grid_to_json(p_grid);
  j["constants"] = {{"e_star", constants.e_star},
                    {"sigma_s", constants.sigma_s},
                    {"b_ratio", constants.b_ratio},
                    {"h_bounds", {constants.h_bounds.lo, constants.h_bounds.hi}},
                    {"r_bounds", {constants.r_bounds.lo, constants.r_bounds.hi}}};
  json jb = json::array();
  for (const auto& b : bounds.bounds) jb.push_back({b.lo, b.hi});
  j["bounds"] = jb;
  j["base_seed"] = base_seed;
  j["sobol_skip"] = sobol_skip;
  j["shard_size"] = shard_size;
  return j.dump(2);
}

GenerationConfig GenerationConfig::from_json_string(const std::string& text) {
  const json j = json::parse(text);
  GenerationConfig c;
  c.recipe_count = j.at("recipe_count");
  c.n_grid = j.at("n_grid").get<std::vector<int>>();
  c.delta_grid = grid_from_json(j.at("delta_grid"));
  c.p_grid = grid_from_json(j.at("p_grid"));
  const json& pc = j.at("constants");
  c.constants.e_star = pc.at("e_star");
  c.constants.sigma_s = pc.at("sigma_s");
  c.constants.b_ratio = pc.at("b_ratio");
  c.constants.h_bounds = {pc.at("h_bounds")[0], pc.at("h_bounds")[1]};
  c.constants.r_bounds = {pc.at("r_bounds")[0], pc.at("r_bounds")[1]};
  const json& jb = j.at("bounds");
  for (int i = 0; i < contact::kParamCount; ++i)
    c.bounds.bounds[i] = {jb[i][0], jb[i][1]};
  c.base_seed = j.at("base_seed");
  c.sobol_skip = j.at("sobol_skip");
  c.shard_size = j.at("shard_size");
  return c;
}

std::string GenerationConfig::digest() const {
  return hex64(fnv1a64(to_json_string()));
}

std::array<double, contact::kParamCount> map_to_bounds(const double* unit,
                                                       const BoundsTable& b) {
  std::array<double, contact::kParamCount> out;
  for (int i = 0; i < contact::kParamCount; ++i) {
    const double u = unit[i];
    if (u < 0.0 || u >= 1.0)
      throw std::invalid_argument("unit-cube component outside [0, 1)");
    out[i] = b[i].lo + u * b[i].width();
  }
  return out;
}

contact::GmmParams enforce_weight_constraint(
    const std::array<double, contact::kParamCount>& raw) {
  auto a = raw;
  const double sum = a[0] + a[1] + a[2];
  if (sum > 1.0) {
    a[0] /= sum;
    a[1] /= sum;
    a[2] /= sum;
  }
  return contact::GmmParams::from_array(a);
}

Sample generate_sample(const contact::GmmParams& theta, int n,
                       const contact::PhysicalConstants& constants,
                       const std::vector<double>& delta_grid,
                       const std::vector<double>& p_grid, std::uint64_t seed) {
  Sample s;
  s.theta = theta;
  s.n = n;
  const auto pop = contact::sample_asperities(theta, n, constants, seed);
  const auto sweep = contact::force_sweep(pop, delta_grid, constants);
  s.law = contact::extract_friction_law(sweep.p, sweep.f, p_grid, n);
  return s;
}

std::uint64_t Manifest::total_count() const {
  std::uint64_t total = 0;
  for (const auto& s : shards) total += s.count;
  return total;
}

std::vector<const ShardInfo*> Manifest::split_shards(
    const std::string& split) const {
  std::vector<const ShardInfo*> out;
  for (const auto& s : shards)
    if (s.split == split) out.push_back(&s);
  return out;
}

std::string Manifest::shard_file(const ShardInfo& s) const {
  return (fs::path(base_dir) / s.path).string();
}

void Manifest::save(const std::string& path) const {
  json j;
  j["schema_version"] = schema_version;
  j["config_digest"] = config_digest;
  j["split_seed"] = split_seed;
  j["has_splits"] = has_splits;
  j["scaler_path"] = scaler_path;
  json js = json::array();
  for (const auto& s : shards)
    js.push_back({{"path", s.path}, {"count", s.count}, {"split", s.split}});
  j["shards"] = js;
  j["notes"] = notes;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path);
  out << j.dump(2) << "\n";
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path);
  json j;
  in >> j;
  Manifest m;
  m.schema_version = j.at("schema_version");
  m.config_digest = j.at("config_digest");
  m.split_seed = j.at("split_seed");
  m.has_splits = j.at("has_splits");
  m.scaler_path = j.at("scaler_path");
  for (const auto& s : j.at("shards"))
    m.shards.push_back({s.at("path"), s.at("count"), s.at("split")});
  m.notes = j.at("notes").get<std::vector<std::string>>();
  m.base_dir = fs::path(path).parent_path().string();
  return m;
}

namespace {

std::string shard_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard_%05llu.bin",
                static_cast<unsigned long long>(index));
  return buf;
}

}  // namespace

Manifest generate_dataset(const GenerationConfig& config,
                          const std::string& out_dir, int workers) {
  config.validate();
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  fs::create_directories(out_dir);

  // Recipes are drawn up front so shard workers share one Sobol stream.
  const std::size_t n_count = config.n_grid.size();
  std::vector<contact::GmmParams> thetas(config.recipe_count);
  {
    SobolSequence seq(contact::kParamCount);
    seq.skip(config.sobol_skip);
    double unit[contact::kParamCount];
    for (std::uint64_t r = 0; r < config.recipe_count; ++r) {
      seq.next(unit);
      thetas[r] =
          enforce_weight_constraint(map_to_bounds(unit, config.bounds));
    }
  }

  const auto delta_grid = config.delta_grid.make();
  const auto p_grid = config.p_grid.make();
  const std::uint64_t total = config.total_samples();
  const std::uint64_t shard_count =
      (total + config.shard_size - 1) / config.shard_size;

  std::vector<ShardInfo> shards(shard_count);
  std::vector<std::vector<std::string>> shard_notes(shard_count);
  std::atomic<std::uint64_t> next_shard{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto run_shard = [&](std::uint64_t s) {
    const std::uint64_t begin = s * config.shard_size;
    const std::uint64_t end = std::min(total, begin + config.shard_size);
    std::vector<float> records;
    records.reserve((end - begin) * kRecordFloats);
    for (std::uint64_t i = begin; i < end; ++i) {
      const std::uint64_t recipe = i / n_count;
      const std::uint64_t n_index = i % n_count;
      const std::uint64_t seed =
          mix_seed(config.base_seed, recipe, n_index);
      try {
        const Sample sample =
            generate_sample(thetas[recipe], config.n_grid[n_index],
                            config.constants, delta_grid, p_grid, seed);
        const auto theta = sample.theta.to_array();
        for (double v : theta) records.push_back(static_cast<float>(v));
        records.push_back(static_cast<float>(sample.n));
        for (double v : sample.law.f_values)
          records.push_back(static_cast<float>(v));
      } catch (const std::exception& e) {
        shard_notes[s].push_back(
            "skipped sample " + std::to_string(i) + " (recipe " +
            std::to_string(recipe) + ", N " +
            std::to_string(config.n_grid[n_index]) + "): " + e.what());
      }
    }
    const std::string name = shard_name(s);
    write_shard((fs::path(out_dir) / name).string(), records);
    shards[s] = {name, records.size() / kRecordFloats, ""};
  };

  auto worker_loop = [&] {
    for (;;) {
      const std::uint64_t s = next_shard.fetch_add(1);
      if (s >= shard_count) return;
      try {
        run_shard(s);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker_loop);
    for (auto& t : pool) t.join();
  }

  Manifest manifest;
  manifest.config_digest = config.digest();
  manifest.shards = shards;
  manifest.base_dir = out_dir;
  for (auto& notes : shard_notes)
    manifest.notes.insert(manifest.notes.end(), notes.begin(), notes.end());

  if (first_error) {
    manifest.notes.push_back("generation aborted; manifest is partial");
    manifest.save((fs::path(out_dir) / "manifest.partial.json").string());
    std::rethrow_exception(first_error);
  }

  manifest.save((fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

Manifest split_shards(Manifest manifest, std::array<double, 3> fractions,
                      std::uint64_t seed) {
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  const std::size_t count = manifest.shards.size();
  if (count < 3) throw std::invalid_argument("need at least 3 shards to split");

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = count - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);

  const auto n_train =
      static_cast<std::size_t>(std::lround(fractions[0] * count));
  const auto n_val =
      static_cast<std::size_t>(std::lround(fractions[1] * count));
  for (std::size_t i = 0; i < count; ++i) {
    auto& shard = manifest.shards[order[i]];
    shard.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
  }
  manifest.has_splits = true;
  manifest.split_seed = seed;
  return manifest;
}

}  // namespace tribogen::dataset
