#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "tribogen/inverse.hpp"
#include "tribogen/metrics.hpp"

using namespace tribogen;
using namespace tribogen::inverse;

namespace {

contact::GmmParams make_theta(std::uint64_t seed) {
  const auto bounds = dataset::BoundsTable::defaults();
  Rng rng(seed);
  double unit[contact::kParamCount];
  for (double& u : unit) u = 0.2 + 0.6 * rng.uniform();  // keep well inside
  const auto raw = dataset::map_to_bounds(unit, bounds);
  return dataset::enforce_weight_constraint(raw);
}

contact::FrictionLaw simulate_law(const contact::GmmParams& theta, int n,
                                  std::uint64_t seed) {
  contact::PhysicalConstants constants;
  const auto pop = contact::sample_asperities(theta, n, constants, seed);
  const auto sweep =
      contact::force_sweep(pop, contact::default_delta_grid(), constants);
  return contact::extract_friction_law(sweep.p, sweep.f,
                                       contact::default_p_grid(), n);
}

// Scaler fitted on a handful of simulated laws plus the parameter bounds.
const dataset::ScalerParams& shared_scaler() {
  static const dataset::ScalerParams scaler = [] {
    dataset::ScalerParams s;
    const auto bounds = dataset::BoundsTable::defaults();
    for (int i = 0; i < contact::kParamCount; ++i) {
      s.target_min[i] = bounds[i].lo;
      s.target_max[i] = bounds[i].hi;
    }
    for (int i = 0; i < dataset::kInputFeatures; ++i) {
      s.input_min[i] = 1e300;
      s.input_max[i] = -1e300;
    }
    for (int t = 0; t < 20; ++t) {
      const auto law = simulate_law(make_theta(100 + t), 10000, 900 + t);
      for (int i = 0; i < contact::kLawPoints; ++i) {
        s.input_min[i] = std::min(s.input_min[i], law.f_values[i]);
        s.input_max[i] = std::max(s.input_max[i], law.f_values[i]);
      }
    }
    for (int i = 0; i < contact::kLawPoints; ++i)
      if (s.input_max[i] - s.input_min[i] < 1e-9) {
        s.input_min[i] -= 1e-9;
        s.input_max[i] += 1e-9;
      }
    s.input_min[contact::kLawPoints] = 30.0;
    s.input_max[contact::kLawPoints] = 12000.0;
    return s;
  }();
  return scaler;
}

neural::Checkpoint tiny_decoder_checkpoint() {
  neural::NetworkSpec spec;
  spec.encoder_widths = {16};
  spec.encoder_dropout = {0.0};
  spec.decoder_widths = {24, 16};
  spec.decoder_dropout = {0.0, 0.0};
  spec.latent_dim = 6;
  spec.conditional = false;
  neural::Network<float> net(spec);
  net.init(77);
  neural::Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.params = net.params();
  ckpt.stats = net.stats();
  return ckpt;
}

}  // namespace

TEST_CASE("direct inversion: warm start recovers the law") {
  const auto& scaler = shared_scaler();
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  const int n = 10000;

  std::vector<double> smapes;
  for (int t = 0; t < 2; ++t) {
    const auto theta = make_theta(7 + t);
    const auto target = simulate_law(theta, n, 5000 + t);

    InversionConfig config;
    config.iterations = 40;
    config.sigma0 = 0.05;
    config.seed = 31 + t;
    const auto warm = dataset::scale_targets(theta.to_array(), scaler);
    config.warm_start.assign(warm.begin(), warm.end());

    const auto result =
        invert_direct(target, n, scaler, bounds, constants, config);
    CHECK(result.best_theta.valid());
    const auto arr = result.best_theta.to_array();
    for (int i = 0; i < contact::kParamCount; ++i) {
      CHECK(arr[i] >= bounds[i].lo - 1e-9);
      CHECK(arr[i] <= bounds[i].hi + 1e-9);
    }
    for (std::size_t i = 1; i < result.trace.size(); ++i)
      CHECK(result.trace[i].best_mse <= result.trace[i - 1].best_mse);
    CHECK(result.evaluations == 40 * cmaes::default_lambda(23));
    smapes.push_back(result.functional_smape);
  }
  CHECK(metrics::percentile(smapes, 0.5) <= 5.0);
}

TEST_CASE("direct inversion is deterministic") {
  const auto& scaler = shared_scaler();
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  const auto theta = make_theta(42);
  const auto target = simulate_law(theta, 1500, 6100);

  InversionConfig config;
  config.iterations = 10;
  config.seed = 12;

  const auto a = invert_direct(target, 1500, scaler, bounds, constants, config);
  const auto b = invert_direct(target, 1500, scaler, bounds, constants, config);
  CHECK(a.best_theta.to_array() == b.best_theta.to_array());
  CHECK(a.best_objective == b.best_objective);
  CHECK(a.functional_smape == b.functional_smape);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i)
    CHECK(a.trace[i].best_mse == b.trace[i].best_mse);
}

TEST_CASE("latent inversion: warm start at a known code") {
  const auto& scaler = shared_scaler();
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  const auto ckpt = tiny_decoder_checkpoint();
  const int n = 10000;

  // theta* reached by decoding z*, so z* is an exact pre-image.
  neural::Network<float> net(ckpt.spec);
  net.params() = ckpt.params;
  net.stats() = ckpt.stats;
  neural::Matrix<float> z_star(1, ckpt.spec.latent_dim);
  for (int i = 0; i < ckpt.spec.latent_dim; ++i)
    z_star(0, i) = 0.4f * static_cast<float>(i % 3) - 0.2f;
  const auto decoded = net.decode(z_star, nullptr);
  std::array<double, contact::kParamCount> scaled;
  for (int i = 0; i < contact::kParamCount; ++i) scaled[i] = decoded(0, i);
  const auto theta_star =
      neural::postprocess(dataset::unscale_targets(scaled, scaler), bounds);
  const auto target = simulate_law(theta_star, n, 8600);

  InversionConfig config;
  config.iterations = 10;
  config.sigma0 = 0.05;
  config.seed = 5;
  config.warm_start.resize(ckpt.spec.latent_dim);
  for (int i = 0; i < ckpt.spec.latent_dim; ++i)
    config.warm_start[i] = z_star(0, i);

  const auto result =
      invert_latent(ckpt, target, n, scaler, bounds, constants, config);
  CHECK(result.best_theta.valid());
  for (std::size_t i = 1; i < result.trace.size(); ++i)
    CHECK(result.trace[i].best_mse <= result.trace[i - 1].best_mse);
  // Starting on the optimum: only Monte Carlo resampling noise remains.
  CHECK(result.functional_smape < 10.0);
}

TEST_CASE("latent inversion rejects conditional checkpoints") {
  auto ckpt = tiny_decoder_checkpoint();
  ckpt.spec.conditional = true;
  const auto target = simulate_law(make_theta(3), 1500, 777);
  const contact::PhysicalConstants constants;
  InversionConfig config;
  CHECK_THROWS_AS(invert_latent(ckpt, target, 1500, shared_scaler(),
                                dataset::BoundsTable::defaults(), constants,
                                config),
                  std::invalid_argument);
}

TEST_CASE("result serialization") {
  const auto& scaler = shared_scaler();
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  const auto target = simulate_law(make_theta(9), 1500, 321);

  InversionConfig config;
  config.iterations = 5;
  config.seed = 2;
  const auto result =
      invert_direct(target, 1500, scaler, bounds, constants, config);

  const auto j = result.to_json_string();
  CHECK(j.find("best_theta") != std::string::npos);
  CHECK(j.find("functional_smape") != std::string::npos);
  CHECK(j.find("wall_time_seconds") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "tribogen_trace_test.csv").string();
  result.write_trace_csv(path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  bool header_ok = false;
  while (std::getline(in, line)) {
    if (lines == 0) header_ok = line == "iteration,best_mse,functional_smape";
    ++lines;
  }
  std::filesystem::remove(path);
  CHECK(header_ok);
  CHECK(lines == 6);  // header + 5 iterations
}
