#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tribogen/analysis.hpp"

using nlohmann::json;

namespace tribogen::analysis {

const std::array<const char*, contact::kParamCount> kParamNames = {
    "w1",      "w2",      "w3",      "mu_h1",    "mu_r1",    "mu_h2",
    "mu_r2",   "mu_h3",   "mu_r3",   "mu_h4",    "mu_r4",    "sigma_h1",
    "sigma_r1", "sigma_h2", "sigma_r2", "sigma_h3", "sigma_r3", "sigma_h4",
    "sigma_r4", "rho1",    "rho2",    "rho3",     "rho4"};

namespace {

contact::FrictionLaw simulate(const contact::GmmParams& theta, int n,
                              const contact::PhysicalConstants& constants,
                              const std::vector<double>& p_grid,
                              std::uint64_t seed) {
  const auto pop = contact::sample_asperities(theta, n, constants, seed);
  const auto sweep =
      contact::force_sweep(pop, contact::default_delta_grid(), constants);
  return contact::extract_friction_law(sweep.p, sweep.f, p_grid, n);
}

}  // namespace

contact::GmmParams default_sensitivity_theta(
    const dataset::BoundsTable& bounds) {
  std::array<double, contact::kParamCount> mid;
  for (int i = 0; i < contact::kParamCount; ++i)
    mid[i] = 0.5 * (bounds[i].lo + bounds[i].hi);
  mid[0] = mid[1] = mid[2] = 0.25;
  return contact::GmmParams::from_array(mid);
}

SensitivityTable sensitivity(const contact::GmmParams& theta0,
                             const std::vector<int>& n_list,
                             double perturbation,
                             const contact::PhysicalConstants& constants,
                             const dataset::BoundsTable& bounds,
                             std::uint64_t seed) {
  theta0.validate();
  if (n_list.empty()) throw std::invalid_argument("empty n list");

  SensitivityTable table;
  table.n_list = n_list;
  table.cells.assign(contact::kParamCount,
                     std::vector<double>(n_list.size(), 0.0));
  const auto base_arr = theta0.to_array();
  const auto p_grid = contact::default_p_grid();

  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const int n = n_list[ni];
    const std::uint64_t sim_seed = mix_seed(seed, 0xa5e, ni);
    const auto baseline = simulate(theta0, n, constants, p_grid, sim_seed);
    for (int pi = 0; pi < contact::kParamCount; ++pi) {
      auto arr = base_arr;
      arr[pi] += perturbation * std::abs(arr[pi]);
      if (arr[pi] == base_arr[pi]) continue;  // zero value: no perturbation
      const auto theta = neural::postprocess(arr, bounds);
      const auto law = simulate(theta, n, constants, p_grid, sim_seed);
      table.cells[pi][ni] =
          metrics::smape(baseline.f_values, law.f_values);
    }
  }
  return table;
}

std::string SensitivityTable::to_json_string() const {
  json j;
  j["n_list"] = n_list;
  json rows = json::object();
  for (int pi = 0; pi < contact::kParamCount; ++pi)
    rows[kParamNames[pi]] = cells[pi];
  j["smape"] = rows;
  return j.dump(2);
}

std::string SensitivityTable::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "param,name,n,smape\n";
  for (int pi = 0; pi < contact::kParamCount; ++pi)
    for (std::size_t ni = 0; ni < n_list.size(); ++ni)
      out << pi << "," << kParamNames[pi] << "," << n_list[ni] << ","
          << cells[pi][ni] << "\n";
  return out.str();
}

RegimeHeatmap regime_heatmap(const std::vector<EvalRecord>& records,
                             int f_bins) {
  if (records.empty()) throw std::invalid_argument("no evaluation records");
  if (f_bins < 1) throw std::invalid_argument("need at least one bin");

  RegimeHeatmap map;
  for (const auto& r : records) map.n_values.push_back(r.n);
  std::sort(map.n_values.begin(), map.n_values.end());
  map.n_values.erase(std::unique(map.n_values.begin(), map.n_values.end()),
                     map.n_values.end());

  std::vector<double> forces;
  forces.reserve(records.size());
  for (const auto& r : records) forces.push_back(r.mean_f);
  map.f_edges.resize(f_bins + 1);
  for (int b = 0; b <= f_bins; ++b)
    map.f_edges[b] =
        metrics::percentile(forces, static_cast<double>(b) / f_bins);

  map.mean_smape.assign(map.n_values.size(), std::vector<double>(f_bins, 0.0));
  map.counts.assign(map.n_values.size(), std::vector<int>(f_bins, 0));

  for (const auto& r : records) {
    const auto nit =
        std::lower_bound(map.n_values.begin(), map.n_values.end(), r.n);
    const auto ni = static_cast<std::size_t>(nit - map.n_values.begin());
    int bin = f_bins - 1;
    for (int b = 0; b < f_bins; ++b)
      if (r.mean_f < map.f_edges[b + 1]) {
        bin = b;
        break;
      }
    map.mean_smape[ni][bin] += r.smape;
    map.counts[ni][bin] += 1;
  }
  for (std::size_t ni = 0; ni < map.n_values.size(); ++ni)
    for (int b = 0; b < f_bins; ++b)
      if (map.counts[ni][b] > 0) map.mean_smape[ni][b] /= map.counts[ni][b];
  return map;
}

int RegimeHeatmap::total_count() const {
  int total = 0;
  for (const auto& row : counts)
    for (int c : row) total += c;
  return total;
}

std::string RegimeHeatmap::to_json_string() const {
  json j;
  j["n_values"] = n_values;
  j["f_edges"] = f_edges;
  j["mean_smape"] = mean_smape;
  j["counts"] = counts;
  return j.dump(2);
}

std::string RegimeHeatmap::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "n,f_lo,f_hi,count,mean_smape\n";
  for (std::size_t ni = 0; ni < n_values.size(); ++ni)
    for (std::size_t b = 0; b + 1 < f_edges.size(); ++b)
      out << n_values[ni] << "," << f_edges[b] << "," << f_edges[b + 1] << ","
          << counts[ni][b] << "," << mean_smape[ni][b] << "\n";
  return out.str();
}

std::vector<double> latent_convergence(
    const neural::Checkpoint& ckpt, const contact::FrictionLaw& target, int n,
    int max_m, std::uint64_t seed, const dataset::ScalerParams& scaler,
    const dataset::BoundsTable& bounds,
    const contact::PhysicalConstants& constants) {
  if (max_m < 1) throw std::invalid_argument("max_m must be >= 1");
  const auto cond = dataset::scale_inputs(target.f_values,
                                          static_cast<double>(n), scaler);
  const auto thetas = neural::infer(ckpt, cond, max_m, seed, scaler, bounds);

  std::vector<double> curve(max_m);
  double acc = 0.0;
  for (int m = 0; m < max_m; ++m) {
    acc += metrics::functional_smape(target, thetas[m], n, constants,
                                     mix_seed(seed, 0x10c, m));
    curve[m] = acc / (m + 1);
  }
  return curve;
}

Envelope uncertainty_envelope(const neural::Checkpoint& ckpt,
                              const contact::FrictionLaw& target, int n,
                              int samples, std::uint64_t seed,
                              const dataset::ScalerParams& scaler,
                              const dataset::BoundsTable& bounds,
                              const contact::PhysicalConstants& constants) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const auto cond = dataset::scale_inputs(target.f_values,
                                          static_cast<double>(n), scaler);
  const auto thetas = neural::infer(ckpt, cond, samples, seed, scaler, bounds);

  Envelope env;
  env.p_grid = target.p_grid;
  const std::size_t knots = target.p_grid.size();
  std::vector<double> sum(knots, 0.0), sq(knots, 0.0);
  for (int m = 0; m < samples; ++m) {
    const auto law = simulate(thetas[m], n, constants, target.p_grid,
                              mix_seed(seed, 0xe97, m));
    for (std::size_t i = 0; i < knots; ++i) {
      sum[i] += law.f_values[i];
      sq[i] += law.f_values[i] * law.f_values[i];
    }
  }
  env.mean_f.resize(knots);
  env.std_f.resize(knots);
  for (std::size_t i = 0; i < knots; ++i) {
    env.mean_f[i] = sum[i] / samples;
    const double var =
        std::max(0.0, sq[i] / samples - env.mean_f[i] * env.mean_f[i]);
    env.std_f[i] = samples > 1 ? std::sqrt(var) : 0.0;
  }
  return env;
}

std::string Envelope::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "p,mean_f,std_f\n";
  for (std::size_t i = 0; i < p_grid.size(); ++i)
    out << p_grid[i] << "," << mean_f[i] << "," << std_f[i] << "\n";
  return out.str();
}

Eigen::MatrixXd correlation_matrix(const std::vector<double>& data,
                                   std::size_t rows, std::size_t cols) {
  return cross_correlation(data, cols, data, cols, rows);
}

Eigen::MatrixXd cross_correlation(const std::vector<double>& a,
                                  std::size_t a_cols,
                                  const std::vector<double>& b,
                                  std::size_t b_cols, std::size_t rows) {
  if (rows < 2) throw std::invalid_argument("need at least two rows");
  if (a.size() != rows * a_cols || b.size() != rows * b_cols)
    throw std::invalid_argument("matrix shape mismatch");

  const auto standardize = [&](const std::vector<double>& m, std::size_t cols) {
    Eigen::MatrixXd out(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mean += m[r * cols + c];
      mean /= static_cast<double>(rows);
      double var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = m[r * cols + c] - mean;
        var += d * d;
      }
      const double std_dev = std::sqrt(var);
      for (std::size_t r = 0; r < rows; ++r)
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            std_dev > 0.0
                ? (m[r * cols + c] - mean) / std_dev
                : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  };
  const Eigen::MatrixXd za = standardize(a, a_cols);
  const Eigen::MatrixXd zb = standardize(b, b_cols);
  return za.transpose() * zb;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(10);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? "," : "") << m(r, c);
    out << "\n";
  }
}

void write_curve_csv(const std::string& path, const std::vector<double>& values,
                     const std::string& value_name) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "index," << value_name << "\n";
  out.precision(10);
  for (std::size_t i = 0; i < values.size(); ++i)
    out << i << "," << values[i] << "\n";
}

metrics::EvalReport eval_report(const neural::Checkpoint& ckpt,
                                const dataset::Manifest& manifest,
                                const dataset::ScalerParams& scaler,
                                const dataset::BoundsTable& bounds,
                                const contact::PhysicalConstants& constants,
                                const EvalOptions& options,
                                std::vector<EvalRecord>* records) {
  const auto shards = manifest.split_shards(options.split);
  if (shards.empty())
    throw std::invalid_argument("split '" + options.split + "' is empty");

  neural::Network<float> net(ckpt.spec);
  net.params() = ckpt.params;
  net.stats() = ckpt.stats;
  const bool conditional = ckpt.spec.conditional;

  std::ofstream per_sample;
  if (!options.per_sample_csv.empty()) {
    per_sample.open(options.per_sample_csv, std::ios::trunc);
    if (!per_sample)
      throw std::runtime_error("cannot write " + options.per_sample_csv);
    per_sample << "sample,n,param_smape\n";
    per_sample.precision(10);
  }

  std::vector<double> sample_smapes;
  std::vector<double> scaled_truth, scaled_pred;  // rows x 23, flat
  std::vector<float> batch_raw;                   // raw records of this batch
  std::vector<contact::GmmParams> theta_hats;
  std::vector<int> batch_n;
  std::uint64_t taken = 0;
  std::uint64_t sample_index = 0;

  const auto flush_batch = [&](const std::vector<float>& raw,
                               std::size_t count) {
    if (count == 0) return;
    neural::Matrix<float> x(static_cast<Eigen::Index>(count),
                            ckpt.spec.param_dim);
    neural::Matrix<float> cond;
    if (conditional)
      cond.resize(static_cast<Eigen::Index>(count), ckpt.spec.cond_dim);
    for (std::size_t r = 0; r < count; ++r) {
      const float* rec = raw.data() + r * dataset::kRecordFloats;
      for (int c = 0; c < contact::kParamCount; ++c)
        x(static_cast<Eigen::Index>(r), c) =
            static_cast<float>(dataset::scale_value(
                rec[c], scaler.target_min[c], scaler.target_max[c]));
      if (conditional) {
        for (int c = 0; c < contact::kLawPoints; ++c)
          cond(static_cast<Eigen::Index>(r), c) =
              static_cast<float>(dataset::scale_value(
                  rec[contact::kParamCount + 1 + c], scaler.input_min[c],
                  scaler.input_max[c]));
        cond(static_cast<Eigen::Index>(r), contact::kLawPoints) =
            static_cast<float>(dataset::scale_value(
                rec[contact::kParamCount],
                scaler.input_min[contact::kLawPoints],
                scaler.input_max[contact::kLawPoints]));
      }
    }
    const auto out =
        net.forward(x, conditional ? &cond : nullptr, false, 0, nullptr, false);
    for (std::size_t r = 0; r < count; ++r) {
      const float* rec = raw.data() + r * dataset::kRecordFloats;
      std::array<double, contact::kParamCount> pred_scaled, truth;
      for (int c = 0; c < contact::kParamCount; ++c) {
        pred_scaled[c] = out.x_hat(static_cast<Eigen::Index>(r), c);
        truth[c] = rec[c];
        scaled_truth.push_back(x(static_cast<Eigen::Index>(r), c));
        scaled_pred.push_back(pred_scaled[c]);
      }
      const auto theta_hat = neural::postprocess(
          dataset::unscale_targets(pred_scaled, scaler), bounds);
      theta_hats.push_back(theta_hat);
      const auto pred = theta_hat.to_array();
      std::vector<double> y(truth.begin(), truth.end());
      std::vector<double> y_hat(pred.begin(), pred.end());
      const double sm = metrics::smape(y, y_hat);
      sample_smapes.push_back(sm);
      const int n = static_cast<int>(rec[contact::kParamCount]);
      batch_n.push_back(n);
      if (per_sample.is_open())
        per_sample << sample_index << "," << n << "," << sm << "\n";
      ++sample_index;
    }
  };

  for (const auto* shard : shards) {
    if (options.max_samples && taken >= options.max_samples) break;
    auto raw = dataset::read_shard(manifest.shard_file(*shard));
    std::size_t count = raw.size() / dataset::kRecordFloats;
    if (options.max_samples && taken + count > options.max_samples) {
      count = options.max_samples - taken;
      raw.resize(count * dataset::kRecordFloats);
    }
    // Bounded forward batches keep activation memory flat on wide networks.
    const std::size_t chunk = 2048;
    for (std::size_t start = 0; start < count; start += chunk) {
      const std::size_t size = std::min(chunk, count - start);
      const std::vector<float> piece(
          raw.begin() +
              static_cast<std::ptrdiff_t>(start * dataset::kRecordFloats),
          raw.begin() + static_cast<std::ptrdiff_t>(
                            (start + size) * dataset::kRecordFloats));
      flush_batch(piece, size);
    }
    batch_raw.insert(batch_raw.end(), raw.begin(), raw.end());
    taken += count;
  }
  if (sample_smapes.empty())
    throw std::invalid_argument("no samples in split '" + options.split + "'");

  metrics::EvalReport report;
  report.sample_count = sample_smapes.size();
  report.smape_p25 = metrics::percentile(sample_smapes, 0.25);
  report.smape_median = metrics::percentile(sample_smapes, 0.50);
  report.smape_p75 = metrics::percentile(sample_smapes, 0.75);
  report.smape_p99 = metrics::percentile(sample_smapes, 0.99);
  report.smape_mean =
      std::accumulate(sample_smapes.begin(), sample_smapes.end(), 0.0) /
      static_cast<double>(sample_smapes.size());

  const std::size_t rows = sample_smapes.size();
  int skipped = 0;
  if (rows >= static_cast<std::size_t>(dataset::kInputFeatures) + 2) {
    report.adjusted_r2 = metrics::adjusted_r2(
        scaled_truth, scaled_pred, rows, contact::kParamCount,
        dataset::kInputFeatures, &skipped);
  } else {
    // Too few samples to adjust for the regressor count.
    report.adjusted_r2 = std::numeric_limits<double>::quiet_NaN();
  }
  report.skipped_targets = skipped;

  double w_sum = 0.0;
  for (int c = 0; c < contact::kParamCount; ++c) {
    std::vector<double> a(rows), b(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      a[r] = scaled_truth[r * contact::kParamCount + c];
      b[r] = scaled_pred[r * contact::kParamCount + c];
    }
    w_sum += metrics::wasserstein_1d(std::move(a), std::move(b));
  }
  report.wasserstein = w_sum / contact::kParamCount;

  if (options.functional) {
    const std::size_t budget =
        options.functional_samples
            ? std::min<std::size_t>(options.functional_samples, rows)
            : rows;
    std::vector<double> fn_smapes;
    const auto p_grid = contact::default_p_grid();
    for (std::size_t r = 0; r < budget; ++r) {
      const float* rec = batch_raw.data() + r * dataset::kRecordFloats;
      contact::FrictionLaw target;
      target.p_grid = p_grid;
      target.f_values.resize(contact::kLawPoints);
      double mean_f = 0.0;
      for (int c = 0; c < contact::kLawPoints; ++c) {
        target.f_values[c] = rec[contact::kParamCount + 1 + c];
        mean_f += target.f_values[c];
      }
      mean_f /= contact::kLawPoints;
      const int n = batch_n[r];
      const double sm = metrics::functional_smape(
          target, theta_hats[r], n, constants, mix_seed(options.seed, 0xfe, r));
      fn_smapes.push_back(sm);
      if (records) records->push_back({n, mean_f, sm});
    }
    report.has_functional = true;
    report.functional_mean =
        std::accumulate(fn_smapes.begin(), fn_smapes.end(), 0.0) /
        static_cast<double>(fn_smapes.size());
    const auto [lo, hi] =
        metrics::bootstrap_ci(fn_smapes, 1000, 0.95, options.seed);
    report.functional_ci_lo = lo;
    report.functional_ci_hi = hi;
  }
  return report;
}

}  // namespace tribogen::analysis
