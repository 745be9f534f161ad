#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <vector>

#include "tribogen/analysis.hpp"

using namespace tribogen;
using namespace tribogen::analysis;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("tribogen_analysis_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

contact::FrictionLaw simulate_law(const contact::GmmParams& theta, int n,
                                  std::uint64_t seed) {
  contact::PhysicalConstants constants;
  const auto pop = contact::sample_asperities(theta, n, constants, seed);
  const auto sweep =
      contact::force_sweep(pop, contact::default_delta_grid(), constants);
  return contact::extract_friction_law(sweep.p, sweep.f,
                                       contact::default_p_grid(), n);
}

const dataset::ScalerParams& shared_scaler() {
  static const dataset::ScalerParams scaler = [] {
    dataset::ScalerParams s;
    const auto bounds = dataset::BoundsTable::defaults();
    for (int i = 0; i < contact::kParamCount; ++i) {
      s.target_min[i] = bounds[i].lo;
      s.target_max[i] = bounds[i].hi;
    }
    for (int i = 0; i < dataset::kInputFeatures; ++i) {
      s.input_min[i] = 0.0;
      s.input_max[i] = 10.0;
    }
    s.input_max[contact::kLawPoints] = 12000.0;
    return s;
  }();
  return scaler;
}

neural::Checkpoint tiny_cvae_checkpoint() {
  neural::NetworkSpec spec;
  spec.encoder_widths = {24};
  spec.encoder_dropout = {0.0};
  spec.decoder_widths = {24};
  spec.decoder_dropout = {0.0};
  spec.latent_dim = 5;
  spec.conditional = true;
  neural::Network<float> net(spec);
  net.init(13);
  neural::Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.params = net.params();
  ckpt.stats = net.stats();
  return ckpt;
}

}  // namespace

TEST_CASE("sensitivity: shape, non-negativity, zero perturbation") {
  const auto bounds = dataset::BoundsTable::defaults();
  const auto theta0 = default_sensitivity_theta(bounds);
  const contact::PhysicalConstants constants;

  const auto zero =
      sensitivity(theta0, {200}, 0.0, constants, bounds, 3);
  for (const auto& row : zero.cells)
    for (double cell : row) CHECK(cell == 0.0);

  const auto table =
      sensitivity(theta0, {200, 1000}, 0.05, constants, bounds, 3);
  REQUIRE(table.cells.size() == contact::kParamCount);
  REQUIRE(table.n_list == std::vector<int>{200, 1000});
  bool any_positive = false;
  for (const auto& row : table.cells)
    for (double cell : row) {
      CHECK(cell >= 0.0);
      if (cell > 0.0) any_positive = true;
    }
  CHECK(any_positive);
  // mid-bounds rho values are 0, so a relative perturbation has no effect
  for (int k = 0; k < 4; ++k)
    for (double cell : table.cells[19 + k]) CHECK(cell == 0.0);

  const auto csv = table.to_csv();
  CHECK(csv.find("param,name,n,smape") == 0);
  CHECK(csv.find("w1") != std::string::npos);
  CHECK(csv.find("rho4") != std::string::npos);
  const auto j = table.to_json_string();
  CHECK(j.find("sigma_r2") != std::string::npos);
}

TEST_CASE("regime heatmap: partition and trivial cases") {
  const std::vector<EvalRecord> one{{100, 0.5, 3.0}};
  const auto single = regime_heatmap(one);
  CHECK(single.total_count() == 1);
  CHECK(single.n_values == std::vector<int>{100});
  double found = -1.0;
  for (const auto& row : single.mean_smape)
    for (double cell : row)
      if (cell > 0.0) found = cell;
  CHECK(found == doctest::Approx(3.0));

  Rng rng(5);
  std::vector<EvalRecord> records;
  const std::vector<int> n_options{100, 1500, 10000};
  for (int i = 0; i < 500; ++i)
    records.push_back({n_options[rng.below(3)], rng.uniform() * 4.0,
                       rng.uniform() * 20.0});
  const auto map = regime_heatmap(records);
  CHECK(map.total_count() == 500);
  CHECK(map.n_values.size() == 3);
  for (std::size_t b = 1; b < map.f_edges.size(); ++b)
    CHECK(map.f_edges[b] >= map.f_edges[b - 1]);

  CHECK_THROWS_AS(regime_heatmap({}), std::invalid_argument);

  const auto csv = map.to_csv();
  CHECK(csv.find("n,f_lo,f_hi,count,mean_smape") == 0);
}

TEST_CASE("latent convergence: running mean definition") {
  const auto ckpt = tiny_cvae_checkpoint();
  const auto& scaler = shared_scaler();
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  const auto theta0 = default_sensitivity_theta(bounds);
  const auto target = simulate_law(theta0, 1000, 88);

  const int max_m = 6;
  const auto curve = latent_convergence(ckpt, target, 1000, max_m, 21, scaler,
                                        bounds, constants);
  REQUIRE(curve.size() == max_m);

  // Recover the individual values and re-average them directly.
  std::vector<double> values(max_m);
  values[0] = curve[0];
  for (int m = 1; m < max_m; ++m)
    values[m] = (m + 1) * curve[m] - m * curve[m - 1];
  double acc = 0.0;
  for (int m = 0; m < max_m; ++m) {
    acc += values[m];
    CHECK(curve[m] == doctest::Approx(acc / (m + 1)).epsilon(1e-9));
    CHECK(values[m] >= 0.0);
    CHECK(values[m] <= 200.0);
  }

  const auto again = latent_convergence(ckpt, target, 1000, max_m, 21, scaler,
                                        bounds, constants);
  CHECK(curve == again);
}

TEST_CASE("uncertainty envelope: trivial std, determinism") {
  const auto ckpt = tiny_cvae_checkpoint();
  const auto& scaler = shared_scaler();
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  const auto theta0 = default_sensitivity_theta(bounds);
  const auto target = simulate_law(theta0, 1000, 89);

  const auto solo = uncertainty_envelope(ckpt, target, 1000, 1, 4, scaler,
                                         bounds, constants);
  REQUIRE(solo.std_f.size() == contact::kLawPoints);
  for (double s : solo.std_f) CHECK(s == 0.0);

  const auto env = uncertainty_envelope(ckpt, target, 1000, 5, 4, scaler,
                                        bounds, constants);
  for (std::size_t i = 0; i < env.std_f.size(); ++i) {
    CHECK(env.std_f[i] >= 0.0);
    CHECK(env.mean_f[i] >= 0.0);
  }
  const auto again = uncertainty_envelope(ckpt, target, 1000, 5, 4, scaler,
                                          bounds, constants);
  CHECK(env.mean_f == again.mean_f);
  CHECK(env.std_f == again.std_f);

  const auto csv = env.to_csv();
  CHECK(csv.find("p,mean_f,std_f") == 0);
}

TEST_CASE("correlation matrices") {
  // columns: x, 2x (perfect), -x (perfect negative), constant
  const std::size_t rows = 50;
  std::vector<double> data;
  Rng rng(31);
  for (std::size_t r = 0; r < rows; ++r) {
    const double x = rng.gaussian();
    data.push_back(x);
    data.push_back(2.0 * x);
    data.push_back(-x);
    data.push_back(7.0);
  }
  const auto corr = correlation_matrix(data, rows, 4);
  CHECK(corr(0, 0) == doctest::Approx(1.0));
  CHECK(corr(1, 1) == doctest::Approx(1.0));
  CHECK(corr(0, 1) == doctest::Approx(1.0));
  CHECK(corr(0, 2) == doctest::Approx(-1.0));
  CHECK(corr(1, 2) == doctest::Approx(-1.0));
  CHECK(corr(0, 1) == doctest::Approx(corr(1, 0)));
  CHECK(std::isnan(corr(0, 3)));
  CHECK(std::isnan(corr(3, 3)));

  // independent columns: small correlation
  std::vector<double> ind;
  for (std::size_t r = 0; r < 20000; ++r) {
    ind.push_back(rng.gaussian());
    ind.push_back(rng.gaussian());
  }
  const auto corr2 = correlation_matrix(ind, 20000, 2);
  CHECK(std::abs(corr2(0, 1)) < 0.03);

  CHECK_THROWS_AS(cross_correlation(data, 4, ind, 2, 0),
                  std::invalid_argument);
}

TEST_CASE("cross correlation validates shapes") {
  std::vector<double> a(10, 1.0), b(6, 2.0);
  CHECK_THROWS_AS(cross_correlation(a, 2, b, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(cross_correlation(a, 2, b, 3, 1), std::invalid_argument);

  std::vector<double> x, y;
  Rng rng(9);
  for (int r = 0; r < 40; ++r) {
    const double v = rng.gaussian();
    x.push_back(v);
    y.push_back(3.0 * v + 1.0);
    y.push_back(rng.gaussian());
  }
  const auto rect = cross_correlation(x, 1, y, 2, 40);
  CHECK(rect.rows() == 1);
  CHECK(rect.cols() == 2);
  CHECK(rect(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(rect(0, 1)) < 0.5);
}

TEST_CASE("csv writers") {
  TempDir dir;
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.5, 0.5, 1.0;
  write_matrix_csv(dir.file("m.csv"), m);
  std::ifstream in(dir.file("m.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "1,0.5");

  write_curve_csv(dir.file("c.csv"), {1.5, 2.5}, "smape");
  std::ifstream cin(dir.file("c.csv"));
  std::getline(cin, line);
  CHECK(line == "index,smape");
  std::getline(cin, line);
  CHECK(line == "0,1.5");
}

TEST_CASE("eval report on a generated mini-corpus") {
  TempDir dir;
  dataset::GenerationConfig config;
  config.recipe_count = 420;
  config.n_grid = {100, 400, 1500};
  config.shard_size = 10;
  config.base_seed = 77;
  auto manifest = dataset::generate_dataset(config, dir.file("data"));
  manifest = dataset::split_shards(manifest);
  const auto scaler = dataset::fit_scaler(manifest);

  neural::NetworkSpec spec;
  spec.encoder_widths = {32};
  spec.encoder_dropout = {0.0};
  spec.decoder_widths = {32};
  spec.decoder_dropout = {0.0};
  spec.latent_dim = 8;
  spec.conditional = true;
  neural::Network<float> net(spec);
  net.init(3);
  neural::Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.params = net.params();
  ckpt.stats = net.stats();

  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;

  EvalOptions options;
  options.functional = true;
  options.functional_samples = 5;
  options.per_sample_csv = dir.file("per_sample.csv");
  std::vector<EvalRecord> records;
  const auto report = eval_report(ckpt, manifest, scaler, bounds, constants,
                                  options, &records);

  CHECK(report.sample_count > 0);
  CHECK(report.smape_p25 <= report.smape_median);
  CHECK(report.smape_median <= report.smape_p75);
  CHECK(report.smape_p75 <= report.smape_p99);
  CHECK(report.smape_p25 >= 0.0);
  CHECK(report.smape_p99 <= 200.0);
  CHECK(report.adjusted_r2 <= 1.0);
  CHECK(report.wasserstein >= 0.0);
  REQUIRE(report.has_functional);
  CHECK(report.functional_ci_lo <= report.functional_mean);
  CHECK(report.functional_mean <= report.functional_ci_hi);
  CHECK(records.size() == 5);

  // per-sample CSV has one row per evaluated sample plus the header
  std::ifstream in(options.per_sample_csv);
  std::string line;
  std::uint64_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == report.sample_count + 1);

  // an untrained checkpoint cannot be perfect, but the pipeline must agree
  // with itself: rerunning yields the identical report
  std::vector<EvalRecord> records2;
  EvalOptions options2 = options;
  options2.per_sample_csv.clear();
  const auto again = eval_report(ckpt, manifest, scaler, bounds, constants,
                                 options2, &records2);
  CHECK(again.smape_median == report.smape_median);
  CHECK(again.adjusted_r2 == report.adjusted_r2);
  CHECK(again.functional_mean == report.functional_mean);

  // max_samples truncation and empty-split error
  EvalOptions limited;
  limited.max_samples = 7;
  const auto small = eval_report(ckpt, manifest, scaler, bounds, constants,
                                 limited);
  CHECK(small.sample_count == 7);

  EvalOptions missing;
  missing.split = "nonexistent";
  CHECK_THROWS_AS(eval_report(ckpt, manifest, scaler, bounds, constants,
                              missing),
                  std::invalid_argument);
}
