#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tribogen/metrics.hpp"
#include "tribogen/neural.hpp"

namespace tribogen::analysis {

extern const std::array<const char*, contact::kParamCount> kParamNames;

// Functional sMAPE of a +perturbation relative change, one parameter at a
// time, under common random numbers.
struct SensitivityTable {
  std::vector<int> n_list;
  // cells[param][n_index]
  std::vector<std::vector<double>> cells;

  std::string to_json_string() const;
  std::string to_csv() const;  // param,name,n,smape
};

SensitivityTable sensitivity(const contact::GmmParams& theta0,
                             const std::vector<int>& n_list,
                             double perturbation,
                             const contact::PhysicalConstants& constants,
                             const dataset::BoundsTable& bounds,
                             std::uint64_t seed);

// Mid-bounds baseline with equal weights.
contact::GmmParams default_sensitivity_theta(const dataset::BoundsTable& bounds);

struct EvalRecord {
  int n = 0;
  double mean_f = 0.0;
  double smape = 0.0;
};

// x-bins: the distinct asperity counts; y-bins: deciles of mean friction
// force over the evaluated records.
struct RegimeHeatmap {
  std::vector<int> n_values;
  std::vector<double> f_edges;  // bin count + 1 ascending edges
  std::vector<std::vector<double>> mean_smape;  // [n_index][f_bin]
  std::vector<std::vector<int>> counts;

  int total_count() const;
  std::string to_json_string() const;
  std::string to_csv() const;  // n,f_lo,f_hi,count,mean_smape
};

RegimeHeatmap regime_heatmap(const std::vector<EvalRecord>& records,
                             int f_bins = 10);

// Running mean of functional sMAPE over max_m prior draws decoded against
// one target law (conditional checkpoint).
std::vector<double> latent_convergence(const neural::Checkpoint& ckpt,
                                       const contact::FrictionLaw& target,
                                       int n, int max_m, std::uint64_t seed,
                                       const dataset::ScalerParams& scaler,
                                       const dataset::BoundsTable& bounds,
                                       const contact::PhysicalConstants& constants);

struct Envelope {
  std::vector<double> p_grid;
  std::vector<double> mean_f;
  std::vector<double> std_f;

  std::string to_csv() const;  // p,mean_f,std_f
};

Envelope uncertainty_envelope(const neural::Checkpoint& ckpt,
                              const contact::FrictionLaw& target, int n,
                              int samples, std::uint64_t seed,
                              const dataset::ScalerParams& scaler,
                              const dataset::BoundsTable& bounds,
                              const contact::PhysicalConstants& constants);

// Pearson coefficients of a row-major samples x cols matrix; zero-variance
// columns yield NaN entries.
Eigen::MatrixXd correlation_matrix(const std::vector<double>& data,
                                   std::size_t rows, std::size_t cols);

// Rectangular Pearson block between two column sets over shared rows.
Eigen::MatrixXd cross_correlation(const std::vector<double>& a,
                                  std::size_t a_cols,
                                  const std::vector<double>& b,
                                  std::size_t b_cols, std::size_t rows);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
void write_curve_csv(const std::string& path,
                     const std::vector<double>& values,
                     const std::string& value_name);

struct EvalOptions {
  std::string split = "test";
  std::uint64_t max_samples = 0;      // 0: all
  bool functional = false;
  std::uint64_t functional_samples = 200;
  std::uint64_t seed = 0;
  std::string per_sample_csv;         // empty: skip
};

// Reconstruction-path evaluation (z = mu, eval mode): parameter sMAPE
// percentiles over unscaled post-processed predictions, adjusted R^2 and
// average Wasserstein distance in scaled space; optional functional pass
// with a bootstrap CI. Fills records for regime analysis when functional.
metrics::EvalReport eval_report(const neural::Checkpoint& ckpt,
                                const dataset::Manifest& manifest,
                                const dataset::ScalerParams& scaler,
                                const dataset::BoundsTable& bounds,
                                const contact::PhysicalConstants& constants,
                                const EvalOptions& options,
                                std::vector<EvalRecord>* records = nullptr);

}  // namespace tribogen::analysis
