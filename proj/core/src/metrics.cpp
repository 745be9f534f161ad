#include "tribogen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tribogen/rng.hpp"

using nlohmann::json;

namespace tribogen::metrics {

namespace {
constexpr double kSmapeEpsilon = 1e-12;
}

double smape(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty() || y.size() != y_hat.size())
    throw std::invalid_argument("smape needs equal-length non-empty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double denom = std::abs(y[i]) + std::abs(y_hat[i]) + kSmapeEpsilon;
    acc += 2.0 * std::abs(y[i] - y_hat[i]) / denom;
  }
  return 100.0 * acc / static_cast<double>(y.size());
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

double adjusted_r2(const std::vector<double>& y, const std::vector<double>& y_hat,
                   std::size_t samples, std::size_t targets, int predictors,
                   int* skipped) {
  if (y.size() != samples * targets || y_hat.size() != y.size())
    throw std::invalid_argument("matrix shape mismatch");
  if (samples < static_cast<std::size_t>(predictors) + 2)
    throw std::invalid_argument("need at least p+2 samples");

  const double n = static_cast<double>(samples);
  const double adjust = (n - 1.0) / (n - predictors - 1.0);
  double sum = 0.0;
  int used = 0, skip = 0;
  for (std::size_t t = 0; t < targets; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < samples; ++i) mean += y[i * targets + t];
    mean /= n;
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double truth = y[i * targets + t];
      const double err = truth - y_hat[i * targets + t];
      sse += err * err;
      sst += (truth - mean) * (truth - mean);
    }
    if (sst <= 0.0) {
      ++skip;
      continue;
    }
    const double r2 = 1.0 - sse / sst;
    sum += 1.0 - (1.0 - r2) * adjust;
    ++used;
  }
  if (skipped) *skipped = skip;
  if (used == 0) throw std::invalid_argument("all targets have zero variance");
  return sum / used;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("empty sample in wasserstein_1d");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  // Integrate |F_a - F_b| over the merged support.
  double distance = 0.0;
  std::size_t ia = 0, ib = 0;
  double prev = std::min(a.front(), b.front());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (ia < a.size() || ib < b.size()) {
    const double next =
        ib >= b.size() || (ia < a.size() && a[ia] <= b[ib]) ? a[ia] : b[ib];
    distance += std::abs(ia / na - ib / nb) * (next - prev);
    prev = next;
    if (ia < a.size() && a[ia] == next) ++ia;
    else ++ib;
  }
  return distance;
}

std::pair<double, double> bootstrap_ci(std::span<const double> values,
                                       int resamples, double level,
                                       std::uint64_t seed) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      acc += values[rng.below(values.size())];
    means[r] = acc / static_cast<double>(values.size());
  }
  const double alpha = (1.0 - level) / 2.0;
  return {percentile(means, alpha), percentile(std::move(means), 1.0 - alpha)};
}

double functional_smape(const contact::FrictionLaw& target,
                        const contact::GmmParams& theta_hat, int n,
                        const contact::PhysicalConstants& constants,
                        std::uint64_t seed) {
  const auto pop = contact::sample_asperities(theta_hat, n, constants, seed);
  const auto sweep =
      contact::force_sweep(pop, contact::default_delta_grid(), constants);
  const auto law =
      contact::extract_friction_law(sweep.p, sweep.f, target.p_grid, n);
  return smape(target.f_values, law.f_values);
}

std::string EvalReport::to_json_string() const {
  json j;
  j["smape"] = {{"p25", smape_p25},
                {"median", smape_median},
                {"mean", smape_mean},
                {"p75", smape_p75},
                {"p99", smape_p99}};
  j["adjusted_r2"] = adjusted_r2;
  j["wasserstein"] = wasserstein;
  j["sample_count"] = sample_count;
  j["skipped_targets"] = skipped_targets;
  if (has_functional) {
    j["functional"] = {{"mean", functional_mean},
                       {"ci_lo", functional_ci_lo},
                       {"ci_hi", functional_ci_hi}};
  }
  return j.dump(2);
}

std::string EvalReport::csv_header() {
  return "smape_p25,smape_median,smape_mean,smape_p75,smape_p99,"
         "adjusted_r2,wasserstein";
}

std::string EvalReport::to_csv_row() const {
  std::ostringstream out;
  out.precision(10);
  out << smape_p25 << "," << smape_median << "," << smape_mean << ","
      << smape_p75 << "," << smape_p99 << "," << adjusted_r2 << ","
      << wasserstein;
  return out.str();
}

}  // namespace tribogen::metrics
