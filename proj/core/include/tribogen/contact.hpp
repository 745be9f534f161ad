#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tribogen::contact {

inline constexpr int kComponentCount = 4;
inline constexpr int kParamCount = 23;
inline constexpr int kLawPoints = 128;

// Forces are accumulated in µN (µm · MPa convention) and exposed in N.
inline constexpr double kMicroNewtonToNewton = 1e-6;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

struct PhysicalConstants {
  double e_star = 1.36;    // composite elastic modulus, MPa
  double sigma_s = 0.40;   // interfacial shear strength, MPa
  double b_ratio = 0.85;   // area reduction ratio
  Interval h_bounds{0.0, 300.0};   // absolute asperity height bounds, µm
  Interval r_bounds{10.0, 600.0};  // absolute asperity radius bounds, µm

  void validate() const;
};

// The 23 topography parameters: three free mixture weights (the fourth is
// derived), per-component means, standard deviations and height-radius
// correlations. Flattened order: w1..w3, (mu_h, mu_r) x4, (sigma_h, sigma_r) x4,
// rho1..rho4.
struct GmmParams {
  std::array<double, 3> w{};
  std::array<double, kComponentCount> mu_h{};
  std::array<double, kComponentCount> mu_r{};
  std::array<double, kComponentCount> sigma_h{};
  std::array<double, kComponentCount> sigma_r{};
  std::array<double, kComponentCount> rho{};

  double w4() const { return 1.0 - w[0] - w[1] - w[2]; }
  double weight(int k) const { return k < 3 ? w[k] : w4(); }

  std::array<double, kParamCount> to_array() const;
  static GmmParams from_array(const std::array<double, kParamCount>& a);

  // Structural validity: non-negative weights summing to at most one,
  // positive standard deviations, |rho| <= 0.9.
  bool valid() const;
  void validate() const;
};

struct AsperityPopulation {
  std::vector<double> heights;  // µm
  std::vector<double> radii;    // µm
  std::size_t count() const { return heights.size(); }
};

struct FrictionLaw {
  std::vector<double> p_grid;    // normal-force knots, N
  std::vector<double> f_values;  // friction forces, N
  int asperity_count = 0;
  bool extrapolated = false;  // simulated P range did not cover the grid
};

struct ForceSweep {
  std::vector<double> delta;  // µm, strictly increasing
  std::vector<double> p;      // N, non-increasing
  std::vector<double> f;      // N, non-increasing
};

std::vector<double> linspace(double lo, double hi, int n);
std::vector<double> default_delta_grid();  // 256 points, 0.001..300 µm
std::vector<double> default_p_grid();      // 128 points, 0.01..2.0 N

// Mixture density at (h, R), per µm².
double gmm_pdf(const GmmParams& theta, double h, double r);

// Draw n (h, R) pairs: categorical component pick, bivariate-normal draw,
// rejection against the absolute bounds. Fully determined by seed.
AsperityPopulation sample_asperities(const GmmParams& theta, std::size_t n,
                                     const PhysicalConstants& constants,
                                     std::uint64_t seed);

// Hertzian normal force of the population at indentation delta, in N.
double normal_force(const AsperityPopulation& pop, double delta, double e_star);

// Linear-overlap friction force of the population at indentation delta, in N.
double friction_force(const AsperityPopulation& pop, double delta,
                      double sigma_s, double b_ratio);

// (P(delta), F(delta)) over a strictly increasing indentation grid.
ForceSweep force_sweep(const AsperityPopulation& pop,
                       const std::vector<double>& delta_grid,
                       const PhysicalConstants& constants);

// Resample a sweep onto the standardized normal-force grid: sort knots by
// ascending P, drop duplicate-P knots (keeping the smallest-delta one),
// interpolate linearly and extrapolate linearly beyond the simulated range.
FrictionLaw extract_friction_law(const std::vector<double>& p_of_delta,
                                 const std::vector<double>& f_of_delta,
                                 const std::vector<double>& p_grid,
                                 int asperity_count = 0);

// Expected (P, F) at indentation delta for a population of n asperities drawn
// from the bounded mixture, by 2-D quadrature. The truncated mixture mass is
// divided out so the value matches what rejection sampling produces.
std::pair<double, double> theoretical_forces(const GmmParams& theta,
                                             std::size_t n, double delta,
                                             const PhysicalConstants& constants);

// CSV exchange format for externally measured target laws: header "P,F",
// SI units.
void write_law_csv(const std::string& path, const FrictionLaw& law);
FrictionLaw read_law_csv(const std::string& path);

}  // namespace tribogen::contact
