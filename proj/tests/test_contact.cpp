#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "tribogen/contact.hpp"
#include "tribogen/errors.hpp"

using namespace tribogen;
using namespace tribogen::contact;

namespace {

GmmParams single_component(double mu_h, double mu_r, double sh, double sr,
                           double rho = 0.0) {
  GmmParams t;
  t.w = {1.0, 0.0, 0.0};
  for (int k = 0; k < 4; ++k) {
    t.mu_h[k] = mu_h;
    t.mu_r[k] = mu_r;
    t.sigma_h[k] = sh;
    t.sigma_r[k] = sr;
    t.rho[k] = rho;
  }
  return t;
}

AsperityPopulation one_asperity(double h, double r) {
  AsperityPopulation pop;
  pop.heights = {h};
  pop.radii = {r};
  return pop;
}

}  // namespace

TEST_CASE("gmm_pdf single-component peak matches the closed form") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0);
  const double expected = 1.0 / (2.0 * std::numbers::pi * 45.0 * 55.0);
  CHECK(gmm_pdf(t, 150.0, 275.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(6.4305e-5).epsilon(1e-4));
}

TEST_CASE("gmm_pdf vanishes in the tail") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0);
  CHECK(gmm_pdf(t, 1e6, 275.0) == 0.0);
}

TEST_CASE("gmm_pdf mixture linearity") {
  auto two = single_component(150.0, 275.0, 45.0, 55.0, 0.3);
  two.w = {0.5, 0.5, 0.0};
  const auto one = single_component(150.0, 275.0, 45.0, 55.0, 0.3);
  CHECK(gmm_pdf(two, 140.0, 300.0) ==
        doctest::Approx(gmm_pdf(one, 140.0, 300.0)).epsilon(1e-14));
}

TEST_CASE("gmm_pdf rejects non-finite inputs and degenerate covariance") {
  auto t = single_component(150.0, 275.0, 45.0, 55.0);
  CHECK_THROWS_AS(gmm_pdf(t, std::nan(""), 275.0), std::domain_error);
  t.rho = {1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(gmm_pdf(t, 150.0, 275.0), std::domain_error);
}

TEST_CASE("sample_asperities is deterministic in the seed") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0, 0.4);
  const PhysicalConstants pc;
  const auto a = sample_asperities(t, 1000, pc, 7);
  const auto b = sample_asperities(t, 1000, pc, 7);
  CHECK(a.heights == b.heights);
  CHECK(a.radii == b.radii);
  const auto c = sample_asperities(t, 1000, pc, 8);
  CHECK(a.heights != c.heights);
}

TEST_CASE("sample_asperities mean within 3 standard errors") {
  const auto t = single_component(150.0, 275.0, 10.0, 10.0);
  const PhysicalConstants pc;
  const std::size_t n = 100000;
  const auto pop = sample_asperities(t, n, pc, 11);
  const double mean_h =
      std::accumulate(pop.heights.begin(), pop.heights.end(), 0.0) / n;
  const double se = 10.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean_h - 150.0) < 3.0 * se);
}

TEST_CASE("sample_asperities respects absolute bounds") {
  const auto t = single_component(50.0, 275.0, 80.0, 55.0);
  const PhysicalConstants pc;
  const auto pop = sample_asperities(t, 5000, pc, 3);
  for (double h : pop.heights) {
    CHECK(h >= pc.h_bounds.lo);
    CHECK(h <= pc.h_bounds.hi);
  }
  for (double r : pop.radii) {
    CHECK(r >= pc.r_bounds.lo);
    CHECK(r <= pc.r_bounds.hi);
  }
}

TEST_CASE("sample_asperities exhausts when mass is outside the bounds") {
  auto t = single_component(150.0, 275.0, 10.0, 10.0);
  PhysicalConstants pc;
  pc.h_bounds = {0.0, 1e-6};  // effectively no acceptable heights
  CHECK_THROWS_AS(sample_asperities(t, 10, pc, 1), SamplingExhaustedError);
}

TEST_CASE("normal_force single asperity closed form") {
  const auto pop = one_asperity(150.0, 100.0);
  const double expected = (4.0 / 3.0) * 1.36 * 10.0 * 1000.0 * 1e-6;
  CHECK(normal_force(pop, 50.0, 1.36) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.813333e-2).epsilon(1e-6));
}

TEST_CASE("friction_force single asperity closed form") {
  const auto pop = one_asperity(150.0, 100.0);
  const double expected = 0.40 * 0.85 * std::numbers::pi * 100.0 * 100.0 * 1e-6;
  CHECK(friction_force(pop, 50.0, 0.40, 0.85) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.068142e-2).epsilon(1e-6));
}

TEST_CASE("forces vanish without contact, scale with population") {
  const auto pop = one_asperity(150.0, 100.0);
  CHECK(normal_force(pop, 150.0, 1.36) == 0.0);
  CHECK(normal_force(pop, 200.0, 1.36) == 0.0);
  CHECK(friction_force(pop, 200.0, 0.40, 0.85) == 0.0);
  CHECK(friction_force(one_asperity(150.0, 100.0), 50.0, 0.40, 0.0) == 0.0);

  AsperityPopulation doubled;
  doubled.heights = {150.0, 80.0, 150.0, 80.0};
  doubled.radii = {100.0, 40.0, 100.0, 40.0};
  AsperityPopulation half;
  half.heights = {150.0, 80.0};
  half.radii = {100.0, 40.0};
  CHECK(normal_force(doubled, 20.0, 1.36) ==
        2.0 * normal_force(half, 20.0, 1.36));
  CHECK(friction_force(doubled, 20.0, 0.40, 0.85) ==
        2.0 * friction_force(half, 20.0, 0.40, 0.85));
}

TEST_CASE("unit consistency with direct SI evaluation") {
  const auto pop = one_asperity(237.5, 431.0);
  const double delta = 31.25;
  const double p = normal_force(pop, delta, 1.36);
  // Same computation in meters and pascals.
  const double e_star_pa = 1.36e6;
  const double r_m = 431.0e-6, h_m = 237.5e-6, d_m = 31.25e-6;
  const double p_si =
      (4.0 / 3.0) * e_star_pa * std::sqrt(r_m) * std::pow(h_m - d_m, 1.5);
  CHECK(p == doctest::Approx(p_si).epsilon(1e-12));
}

TEST_CASE("force_sweep matches the scalar per-delta reference") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0, -0.5);
  const PhysicalConstants pc;
  const auto pop = sample_asperities(t, 500, pc, 21);
  const auto grid = linspace(0.001, 300.0, 64);
  const auto sweep = force_sweep(pop, grid, pc);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double p_ref = normal_force(pop, grid[j], pc.e_star);
    const double f_ref = friction_force(pop, grid[j], pc.sigma_s, pc.b_ratio);
    CHECK(sweep.p[j] == doctest::Approx(p_ref).epsilon(1e-12));
    CHECK(sweep.f[j] == doctest::Approx(f_ref).epsilon(1e-12));
  }
  for (std::size_t j = 1; j < grid.size(); ++j) {
    CHECK(sweep.p[j] <= sweep.p[j - 1]);
    CHECK(sweep.f[j] <= sweep.f[j - 1]);
  }
}

TEST_CASE("force_sweep edge cases") {
  const auto pop = one_asperity(150.0, 100.0);
  const PhysicalConstants pc;
  const auto sweep = force_sweep(pop, {0.001, 300.0}, pc);
  CHECK(sweep.p[1] == 0.0);
  CHECK(sweep.f[1] == 0.0);
  CHECK_THROWS_AS(force_sweep(pop, {}, pc), std::invalid_argument);
  CHECK_THROWS_AS(force_sweep(pop, {1.0, 1.0}, pc), std::invalid_argument);
}

TEST_CASE("extract_friction_law interpolates linearly") {
  const auto law = extract_friction_law({2.0, 0.0}, {2.0, 0.0}, {1.0});
  CHECK(law.f_values[0] == doctest::Approx(1.0));
  CHECK_FALSE(law.extrapolated);
}

TEST_CASE("extract_friction_law flags extrapolation and clamps at zero") {
  const auto law = extract_friction_law({1.0, 0.5}, {1.0, 0.5}, {0.1, 2.0});
  CHECK(law.extrapolated);
  CHECK(law.f_values[0] == doctest::Approx(0.1));  // linear through origin
  CHECK(law.f_values[1] == doctest::Approx(2.0));
}

TEST_CASE("extract_friction_law rejects degenerate sweeps") {
  CHECK_THROWS_AS(extract_friction_law({1.0, 1.0}, {1.0, 1.0}, {0.5}),
                  DegenerateLawError);
}

TEST_CASE("single-asperity law follows the Hertz 2/3 power") {
  const PhysicalConstants pc;
  const auto pop = one_asperity(300.0, 600.0);
  const auto sweep = force_sweep(pop, default_delta_grid(), pc);
  const auto law =
      extract_friction_law(sweep.p, sweep.f, default_p_grid(), 1);
  const double p_max = sweep.p[0];
  const double coeff = pc.sigma_s * pc.b_ratio * std::numbers::pi *
                       std::pow(600.0, 2.0 / 3.0) *
                       std::pow(3.0 / (4.0 * pc.e_star), 2.0 / 3.0) *
                       std::pow(1e6, 2.0 / 3.0) * 1e-6;
  int interior = 0;
  for (std::size_t i = 0; i < law.p_grid.size(); ++i) {
    if (law.p_grid[i] >= p_max) break;
    const double expected = coeff * std::pow(law.p_grid[i], 2.0 / 3.0);
    CHECK(law.f_values[i] == doctest::Approx(expected).epsilon(0.01));
    ++interior;
  }
  CHECK(interior > 10);
}

TEST_CASE("re-extraction is deterministic") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0);
  const PhysicalConstants pc;
  const auto pop = sample_asperities(t, 200, pc, 5);
  const auto sweep = force_sweep(pop, default_delta_grid(), pc);
  const auto a = extract_friction_law(sweep.p, sweep.f, default_p_grid(), 200);
  const auto b = extract_friction_law(sweep.p, sweep.f, default_p_grid(), 200);
  CHECK(a.f_values == b.f_values);
  CHECK(a.extrapolated == b.extrapolated);
}

TEST_CASE("theoretical_forces empty domain") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0);
  const PhysicalConstants pc;
  const auto [p, f] = theoretical_forces(t, 1000, 300.0, pc);
  CHECK(p == 0.0);
  CHECK(f == 0.0);
}

TEST_CASE("theoretical_forces tight component approaches the point mass") {
  const auto t = single_component(150.0, 275.0, 1e-3, 1e-3);
  const PhysicalConstants pc;
  const auto [p, f] = theoretical_forces(t, 100, 50.0, pc);
  const auto pop = one_asperity(150.0, 275.0);
  CHECK(p == doctest::Approx(100.0 * normal_force(pop, 50.0, pc.e_star))
                 .epsilon(1e-4));
  CHECK(f == doctest::Approx(100.0 * friction_force(pop, 50.0, pc.sigma_s,
                                                    pc.b_ratio))
                 .epsilon(1e-4));
}

TEST_CASE("Monte Carlo forces converge to the quadrature value") {
  const auto t = single_component(150.0, 275.0, 45.0, 55.0, 0.2);
  const PhysicalConstants pc;
  const std::size_t n = 100000;
  const auto pop = sample_asperities(t, n, pc, 17);
  const double delta = 60.0;
  const auto [p_th, f_th] = theoretical_forces(t, n, delta, pc);
  CHECK(normal_force(pop, delta, pc.e_star) ==
        doctest::Approx(p_th).epsilon(0.01));
  CHECK(friction_force(pop, delta, pc.sigma_s, pc.b_ratio) ==
        doctest::Approx(f_th).epsilon(0.01));
}

TEST_CASE("law CSV round trip") {
  const PhysicalConstants pc;
  const auto pop = one_asperity(300.0, 600.0);
  const auto sweep = force_sweep(pop, default_delta_grid(), pc);
  const auto law =
      extract_friction_law(sweep.p, sweep.f, default_p_grid(), 1);
  const std::string path = "test_law_roundtrip.csv";
  write_law_csv(path, law);
  const auto back = read_law_csv(path);
  REQUIRE(back.p_grid.size() == law.p_grid.size());
  for (std::size_t i = 0; i < law.p_grid.size(); ++i) {
    CHECK(back.p_grid[i] == doctest::Approx(law.p_grid[i]).epsilon(1e-15));
    CHECK(back.f_values[i] == doctest::Approx(law.f_values[i]).epsilon(1e-15));
  }
  std::remove(path.c_str());
}

TEST_CASE("parameter array round trip") {
  auto t = single_component(150.0, 275.0, 45.0, 55.0, 0.3);
  t.w = {0.2, 0.3, 0.1};
  const auto a = t.to_array();
  const auto back = GmmParams::from_array(a);
  CHECK(back.to_array() == a);
  CHECK(back.w4() == doctest::Approx(0.4));
}
