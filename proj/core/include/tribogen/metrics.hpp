#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tribogen/contact.hpp"

namespace tribogen::metrics {

struct EvalReport {
  double smape_p25 = 0.0;
  double smape_median = 0.0;
  double smape_mean = 0.0;
  double smape_p75 = 0.0;
  double smape_p99 = 0.0;
  double adjusted_r2 = 0.0;
  double wasserstein = 0.0;
  std::uint64_t sample_count = 0;
  int skipped_targets = 0;

  bool has_functional = false;
  double functional_mean = 0.0;
  double functional_ci_lo = 0.0;
  double functional_ci_hi = 0.0;

  std::string to_json_string() const;
  // One row matching the reported column order:
  // P25, median, mean, P75, P99, adjusted R2, Wasserstein.
  static std::string csv_header();
  std::string to_csv_row() const;
};

// Symmetric mean absolute percentage error in percent, range [0, 200].
double smape(std::span<const double> y, std::span<const double> y_hat);

// Linear-interpolated percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

// Uniform average over targets of 1 - (1 - R2) (n-1)/(n-p-1). Zero-variance
// targets are skipped and counted. Matrices are row-major samples x targets.
double adjusted_r2(const std::vector<double>& y, const std::vector<double>& y_hat,
                   std::size_t samples, std::size_t targets, int predictors = 129,
                   int* skipped = nullptr);

// First Wasserstein distance between two empirical distributions.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

// Percentile bootstrap confidence interval of the mean.
std::pair<double, double> bootstrap_ci(std::span<const double> values,
                                       int resamples = 1000,
                                       double level = 0.95,
                                       std::uint64_t seed = 0);

// Forward-simulate (theta_hat, n) and compare against the target law on the
// target's own normal-force grid.
double functional_smape(const contact::FrictionLaw& target,
                        const contact::GmmParams& theta_hat, int n,
                        const contact::PhysicalConstants& constants,
                        std::uint64_t seed);

}  // namespace tribogen::metrics
