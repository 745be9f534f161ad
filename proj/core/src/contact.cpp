#include "tribogen/contact.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "tribogen/errors.hpp"
#include "tribogen/rng.hpp"

namespace tribogen::contact {

namespace {

bool finite(double x) { return std::isfinite(x); }

double hertz_kernel(double e_star, double sqrt_r, double overlap) {
  return (4.0 / 3.0) * e_star * sqrt_r * overlap * std::sqrt(overlap);
}

double shear_kernel(double sigma_s, double b_ratio, double r, double overlap) {
  return sigma_s * b_ratio * std::numbers::pi * r * overlap;
}

}  // namespace

void PhysicalConstants::validate() const {
  if (!(e_star > 0.0) || !(sigma_s > 0.0))
    throw std::invalid_argument("moduli must be positive");
  if (!(b_ratio > 0.0) || b_ratio > 1.0)
    throw std::invalid_argument("b_ratio must be in (0, 1]");
  if (!(h_bounds.lo < h_bounds.hi) || h_bounds.lo < 0.0)
    throw std::invalid_argument("bad height bounds");
  if (!(r_bounds.lo < r_bounds.hi) || r_bounds.lo < 0.0)
    throw std::invalid_argument("bad radius bounds");
}

std::array<double, kParamCount> GmmParams::to_array() const {
  std::array<double, kParamCount> a;
  a[0] = w[0];
  a[1] = w[1];
  a[2] = w[2];
  for (int k = 0; k < kComponentCount; ++k) {
    a[3 + 2 * k] = mu_h[k];
    a[4 + 2 * k] = mu_r[k];
    a[11 + 2 * k] = sigma_h[k];
    a[12 + 2 * k] = sigma_r[k];
    a[19 + k] = rho[k];
  }
  return a;
}

GmmParams GmmParams::from_array(const std::array<double, kParamCount>& a) {
  GmmParams t;
  t.w = {a[0], a[1], a[2]};
  for (int k = 0; k < kComponentCount; ++k) {
    t.mu_h[k] = a[3 + 2 * k];
    t.mu_r[k] = a[4 + 2 * k];
    t.sigma_h[k] = a[11 + 2 * k];
    t.sigma_r[k] = a[12 + 2 * k];
    t.rho[k] = a[19 + k];
  }
  return t;
}

bool GmmParams::valid() const {
  double sum = 0.0;
  for (double wi : w) {
    if (!finite(wi) || wi < 0.0) return false;
    sum += wi;
  }
  if (sum > 1.0 + 1e-12) return false;
  for (int k = 0; k < kComponentCount; ++k) {
    if (!finite(mu_h[k]) || !finite(mu_r[k])) return false;
    if (!(sigma_h[k] > 0.0) || !(sigma_r[k] > 0.0)) return false;
    if (!finite(rho[k]) || std::abs(rho[k]) > 0.9) return false;
  }
  return true;
}

void GmmParams::validate() const {
  if (!valid()) throw std::invalid_argument("invalid GMM parameters");
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace needs at least 2 points");
  std::vector<double> v(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = lo + step * i;
  v.back() = hi;
  return v;
}

std::vector<double> default_delta_grid() { return linspace(0.001, 300.0, 256); }

std::vector<double> default_p_grid() { return linspace(0.01, 2.0, kLawPoints); }

double gmm_pdf(const GmmParams& theta, double h, double r) {
  if (!finite(h) || !finite(r)) throw std::domain_error("non-finite input");
  double density = 0.0;
  for (int k = 0; k < kComponentCount; ++k) {
    const double rho = theta.rho[k];
    const double one_minus_rho2 = 1.0 - rho * rho;
    if (one_minus_rho2 <= 0.0)
      throw std::domain_error("degenerate component covariance");
    const double sh = theta.sigma_h[k];
    const double sr = theta.sigma_r[k];
    if (!(sh > 0.0) || !(sr > 0.0))
      throw std::domain_error("non-positive standard deviation");
    const double zh = (h - theta.mu_h[k]) / sh;
    const double zr = (r - theta.mu_r[k]) / sr;
    const double q = (zh * zh - 2.0 * rho * zh * zr + zr * zr) / one_minus_rho2;
    const double norm =
        2.0 * std::numbers::pi * sh * sr * std::sqrt(one_minus_rho2);
    density += theta.weight(k) * std::exp(-0.5 * q) / norm;
  }
  return density;
}

AsperityPopulation sample_asperities(const GmmParams& theta, std::size_t n,
                                     const PhysicalConstants& constants,
                                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one asperity");
  theta.validate();
  constants.validate();

  Rng rng(seed);
  AsperityPopulation pop;
  pop.heights.reserve(n);
  pop.radii.reserve(n);

  double cum[kComponentCount];
  double acc = 0.0;
  for (int k = 0; k < kComponentCount; ++k) {
    acc += theta.weight(k);
    cum[k] = acc;
  }

  const std::size_t budget = std::max<std::size_t>(1000000, 100 * n);
  std::size_t attempts = 0;
  while (pop.heights.size() < n) {
    if (++attempts > budget)
      throw SamplingExhaustedError(
          "rejection budget exhausted: mixture mass lies outside the bounds");
    const double u = rng.uniform() * acc;
    int k = 0;
    while (k < kComponentCount - 1 && u > cum[k]) ++k;
    const double z1 = rng.gaussian();
    const double z2 = rng.gaussian();
    const double h = theta.mu_h[k] + theta.sigma_h[k] * z1;
    const double rho = theta.rho[k];
    const double r = theta.mu_r[k] +
                     theta.sigma_r[k] * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    if (!constants.h_bounds.contains(h) || !constants.r_bounds.contains(r))
      continue;
    pop.heights.push_back(h);
    pop.radii.push_back(r);
  }
  return pop;
}

double normal_force(const AsperityPopulation& pop, double delta, double e_star) {
  if (!finite(delta) || delta < 0.0) throw std::domain_error("bad indentation");
  double total = 0.0;  // µN
  for (std::size_t i = 0; i < pop.count(); ++i) {
    const double overlap = pop.heights[i] - delta;
    if (overlap > 0.0)
      total += hertz_kernel(e_star, std::sqrt(pop.radii[i]), overlap);
  }
  return total * kMicroNewtonToNewton;
}

double friction_force(const AsperityPopulation& pop, double delta,
                      double sigma_s, double b_ratio) {
  if (!finite(delta) || delta < 0.0) throw std::domain_error("bad indentation");
  double total = 0.0;  // µN
  for (std::size_t i = 0; i < pop.count(); ++i) {
    const double overlap = pop.heights[i] - delta;
    if (overlap > 0.0)
      total += shear_kernel(sigma_s, b_ratio, pop.radii[i], overlap);
  }
  return total * kMicroNewtonToNewton;
}

ForceSweep force_sweep(const AsperityPopulation& pop,
                       const std::vector<double>& delta_grid,
                       const PhysicalConstants& constants) {
  if (delta_grid.empty()) throw std::invalid_argument("empty indentation grid");
  for (std::size_t i = 1; i < delta_grid.size(); ++i)
    if (!(delta_grid[i] > delta_grid[i - 1]))
      throw std::invalid_argument("indentation grid must be strictly increasing");

  const std::size_t n = pop.count();
  // Sort by descending height so each indentation touches a prefix.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pop.heights[a] > pop.heights[b];
  });

  std::vector<double> h_sorted(n), sqrt_r(n);
  std::vector<double> prefix_r(n + 1, 0.0), prefix_rh(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = pop.heights[order[i]];
    const double r = pop.radii[order[i]];
    h_sorted[i] = h;
    sqrt_r[i] = std::sqrt(r);
    prefix_r[i + 1] = prefix_r[i] + r;
    prefix_rh[i + 1] = prefix_rh[i] + r * h;
  }

  const double hertz_scale = (4.0 / 3.0) * constants.e_star;
  const double shear_scale =
      constants.sigma_s * constants.b_ratio * std::numbers::pi;

  ForceSweep sweep;
  sweep.delta = delta_grid;
  sweep.p.resize(delta_grid.size());
  sweep.f.resize(delta_grid.size());
  for (std::size_t j = 0; j < delta_grid.size(); ++j) {
    const double delta = delta_grid[j];
    // First index with h <= delta.
    const std::size_t cnt =
        std::lower_bound(h_sorted.begin(), h_sorted.end(), delta,
                         [](double h, double d) { return h > d; }) -
        h_sorted.begin();
    double p_total = 0.0;  // µN
    for (std::size_t i = 0; i < cnt; ++i) {
      const double overlap = h_sorted[i] - delta;
      p_total += sqrt_r[i] * overlap * std::sqrt(overlap);
    }
    sweep.p[j] = hertz_scale * p_total * kMicroNewtonToNewton;
    sweep.f[j] = shear_scale * (prefix_rh[cnt] - delta * prefix_r[cnt]) *
                 kMicroNewtonToNewton;
  }
  return sweep;
}

FrictionLaw extract_friction_law(const std::vector<double>& p_of_delta,
                                 const std::vector<double>& f_of_delta,
                                 const std::vector<double>& p_grid,
                                 int asperity_count) {
  if (p_of_delta.size() != f_of_delta.size())
    throw std::invalid_argument("mismatched sweep arrays");

  // The sweep is ordered by ascending delta, hence descending P. Keep the
  // first occurrence of each P value (smallest delta), then flip to
  // ascending P.
  std::vector<double> pk, fk;
  pk.reserve(p_of_delta.size());
  fk.reserve(p_of_delta.size());
  for (std::size_t j = 0; j < p_of_delta.size(); ++j) {
    if (!pk.empty() && p_of_delta[j] == pk.back()) continue;
    pk.push_back(p_of_delta[j]);
    fk.push_back(f_of_delta[j]);
  }
  std::reverse(pk.begin(), pk.end());
  std::reverse(fk.begin(), fk.end());
  for (std::size_t j = 1; j < pk.size(); ++j)
    if (!(pk[j] > pk[j - 1]))
      throw std::invalid_argument("sweep P values must be monotone");

  if (pk.size() < 2)
    throw DegenerateLawError("fewer than two distinct normal-force knots");

  FrictionLaw law;
  law.p_grid = p_grid;
  law.f_values.resize(p_grid.size());
  law.asperity_count = asperity_count;
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const double p = p_grid[i];
    std::size_t hi;
    if (p <= pk.front()) {
      hi = 1;
      if (p < pk.front()) law.extrapolated = true;
    } else if (p >= pk.back()) {
      hi = pk.size() - 1;
      if (p > pk.back()) law.extrapolated = true;
    } else {
      hi = std::upper_bound(pk.begin(), pk.end(), p) - pk.begin();
    }
    const double t = (p - pk[hi - 1]) / (pk[hi] - pk[hi - 1]);
    law.f_values[i] = std::max(0.0, fk[hi - 1] + t * (fk[hi] - fk[hi - 1]));
  }
  return law;
}

namespace {

// Composite Gauss-Legendre quadrature of a single truncated bivariate normal
// component against a force kernel. 16-point rule per panel, panels refined
// until the estimate stabilizes.
constexpr int kGlPoints = 16;
constexpr double kGlX[kGlPoints] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
constexpr double kGlW[kGlPoints] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1825334094236891, 0.1895146198983793, 0.1895146198983793,
    0.1825334094236891, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

template <typename F>
double panel_integral_1d(const F& f, double a, double b, int panels) {
  double total = 0.0;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + w * (p + 0.5);
    const double half = 0.5 * w;
    double s = 0.0;
    for (int i = 0; i < kGlPoints; ++i)
      s += kGlW[i] * f(mid + half * kGlX[i]);
    total += s * half;
  }
  return total;
}

// Integrate kernel(h, r) * N(h, r | component) over [h_lo, h_hi] x [r_lo, r_hi].
template <typename Kernel>
double component_integral(const GmmParams& theta, int k, double h_lo,
                          double h_hi, double r_lo, double r_hi,
                          const Kernel& kernel) {
  if (h_lo >= h_hi || r_lo >= r_hi) return 0.0;
  const double mu_h = theta.mu_h[k], mu_r = theta.mu_r[k];
  const double sh = theta.sigma_h[k], sr = theta.sigma_r[k];
  const double rho = theta.rho[k];
  const double cond_sr = sr * std::sqrt(1.0 - rho * rho);
  const double inv_norm_h = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sh);
  const double inv_norm_r = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * cond_sr);

  auto integrand_h = [&](double h, int r_panels) {
    const double zh = (h - mu_h) / sh;
    const double cond_mu = mu_r + rho * sr * zh;
    // Restrict to where the conditional density has mass.
    const double ra = std::max(r_lo, cond_mu - 10.0 * cond_sr);
    const double rb = std::min(r_hi, cond_mu + 10.0 * cond_sr);
    if (ra >= rb) return 0.0;
    auto inner = [&](double r) {
      const double zr = (r - cond_mu) / cond_sr;
      return kernel(h, r) * std::exp(-0.5 * zr * zr) * inv_norm_r;
    };
    return panel_integral_1d(inner, ra, rb, r_panels) *
           std::exp(-0.5 * zh * zh) * inv_norm_h;
  };

  const double ha = std::max(h_lo, mu_h - 10.0 * sh);
  const double hb = std::min(h_hi, mu_h + 10.0 * sh);
  if (ha >= hb) return 0.0;

  double prev = 0.0;
  for (int refine = 0; refine < 6; ++refine) {
    const int panels = 4 << refine;
    auto outer = [&](double h) { return integrand_h(h, panels); };
    const double value = panel_integral_1d(outer, ha, hb, panels);
    if (refine > 0 &&
        std::abs(value - prev) <= 1e-8 * std::max(std::abs(value), 1e-30))
      return value;
    prev = value;
  }
  // One more check at the final resolution before giving up.
  return prev;
}

}  // namespace

std::pair<double, double> theoretical_forces(const GmmParams& theta,
                                             std::size_t n, double delta,
                                             const PhysicalConstants& constants) {
  theta.validate();
  constants.validate();
  if (!finite(delta) || delta < 0.0) throw std::domain_error("bad indentation");

  const double h_lo = constants.h_bounds.lo, h_hi = constants.h_bounds.hi;
  const double r_lo = constants.r_bounds.lo, r_hi = constants.r_bounds.hi;
  const double h_cut = std::max(delta, h_lo);
  if (h_cut >= h_hi) return {0.0, 0.0};

  auto one = [](double, double) { return 1.0; };
  auto hertz = [&](double h, double r) {
    const double overlap = h - delta;
    return (4.0 / 3.0) * constants.e_star * std::sqrt(r) * overlap *
           std::sqrt(overlap);
  };
  auto shear = [&](double h, double r) {
    return constants.sigma_s * constants.b_ratio * std::numbers::pi * r *
           (h - delta);
  };

  double mass = 0.0, p_int = 0.0, f_int = 0.0;
  for (int k = 0; k < kComponentCount; ++k) {
    const double wk = theta.weight(k);
    if (wk <= 0.0) continue;
    mass += wk * component_integral(theta, k, h_lo, h_hi, r_lo, r_hi, one);
    p_int += wk * component_integral(theta, k, h_cut, h_hi, r_lo, r_hi, hertz);
    f_int += wk * component_integral(theta, k, h_cut, h_hi, r_lo, r_hi, shear);
  }
  if (!(mass > 1e-12))
    throw NumericError("mixture mass inside the bounds is numerically zero");

  const double scale = static_cast<double>(n) / mass * kMicroNewtonToNewton;
  return {p_int * scale, f_int * scale};
}

void write_law_csv(const std::string& path, const FrictionLaw& law) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << "P,F\n";
  out.precision(17);
  for (std::size_t i = 0; i < law.p_grid.size(); ++i)
    out << law.p_grid[i] << "," << law.f_values[i] << "\n";
}

FrictionLaw read_law_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV " + path);
  FrictionLaw law;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double p, f;
    char comma;
    if (!(ss >> p >> comma >> f))
      throw IoError("malformed CSV row in " + path);
    law.p_grid.push_back(p);
    law.f_values.push_back(f);
  }
  if (law.p_grid.size() < 2) throw DegenerateLawError("CSV law too short");
  return law;
}

}  // namespace tribogen::contact
