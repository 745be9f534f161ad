#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tribogen/errors.hpp"
#include "tribogen/inverse.hpp"
#include "tribogen/metrics.hpp"

using nlohmann::json;

namespace tribogen::inverse {

namespace {

struct Objective {
  const contact::FrictionLaw* target = nullptr;
  std::vector<double> scaled_target;  // target F values in scaled space
  int n = 0;
  const dataset::ScalerParams* scaler = nullptr;
  const contact::PhysicalConstants* constants = nullptr;
  std::uint64_t sim_seed = 0;

  // Returns (mse, smape); infinite MSE marks a failed simulation.
  std::pair<double, double> evaluate(const contact::GmmParams& theta) const {
    try {
      const auto pop =
          contact::sample_asperities(theta, n, *constants, sim_seed);
      const auto sweep =
          contact::force_sweep(pop, contact::default_delta_grid(), *constants);
      const auto law =
          contact::extract_friction_law(sweep.p, sweep.f, target->p_grid, n);
      double mse = 0.0;
      for (std::size_t i = 0; i < law.f_values.size(); ++i) {
        const double s = dataset::scale_value(law.f_values[i],
                                              scaler->input_min[i],
                                              scaler->input_max[i]);
        const double d = s - scaled_target[i];
        mse += d * d;
      }
      mse /= static_cast<double>(law.f_values.size());
      const double sm = metrics::smape(target->f_values, law.f_values);
      return {mse, sm};
    } catch (const std::exception&) {
      return {std::numeric_limits<double>::infinity(), 200.0};
    }
  }
};

Objective make_objective(const contact::FrictionLaw& target, int n,
                         const dataset::ScalerParams& scaler,
                         const contact::PhysicalConstants& constants,
                         std::uint64_t seed) {
  if (target.p_grid.size() != contact::kLawPoints ||
      target.f_values.size() != contact::kLawPoints)
    throw std::invalid_argument("target law must hold 128 knots");
  Objective obj;
  obj.target = &target;
  obj.n = n;
  obj.scaler = &scaler;
  obj.constants = &constants;
  obj.sim_seed = mix_seed(seed, 0x51e3d, 0);
  obj.scaled_target.resize(contact::kLawPoints);
  for (int i = 0; i < contact::kLawPoints; ++i)
    obj.scaled_target[i] = dataset::scale_value(
        target.f_values[i], scaler.input_min[i], scaler.input_max[i]);
  return obj;
}

InversionResult run_cmaes(
    int dim, const InversionConfig& config, const Objective& obj,
    const std::function<contact::GmmParams(const Eigen::VectorXd&)>& to_theta) {
  const auto t_start = std::chrono::steady_clock::now();

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
  if (!config.warm_start.empty()) {
    if (config.warm_start.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("warm start dimension mismatch");
    for (int i = 0; i < dim; ++i) x0[i] = config.warm_start[i];
  }

  auto state =
      cmaes::cmaes_init(dim, x0, config.sigma0, config.lambda, config.seed);

  InversionResult result;
  double best_mse = std::numeric_limits<double>::infinity();
  double best_smape = 200.0;
  Eigen::VectorXd best_x;
  int evaluations = 0;

  for (int iter = 0; iter < config.iterations; ++iter) {
    const auto candidates = cmaes::cmaes_ask(state);
    std::vector<double> fitnesses(candidates.size());
    bool any_finite = false;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const auto theta = to_theta(candidates[k]);
      const auto [mse, sm] = obj.evaluate(theta);
      fitnesses[k] = mse;
      ++evaluations;
      if (std::isfinite(mse)) {
        any_finite = true;
        if (mse < best_mse) {
          best_mse = mse;
          best_smape = sm;
          best_x = candidates[k];
        }
      }
    }
    if (!any_finite)
      throw NumericError("every candidate simulation failed in one generation");
    cmaes::cmaes_tell(state, candidates, fitnesses);
    result.trace.push_back({iter, best_mse, best_smape});
  }

  result.best_theta = to_theta(best_x);
  result.best_objective = best_mse;
  result.evaluations = evaluations;

  // Guard against seed overfitting: mean functional sMAPE over fresh seeds.
  double sm_sum = 0.0;
  for (int i = 0; i < config.reeval_seeds; ++i)
    sm_sum += metrics::functional_smape(*obj.target, result.best_theta, obj.n,
                                        *obj.constants,
                                        mix_seed(config.seed, 0xf2e5, i + 1));
  result.functional_smape =
      config.reeval_seeds > 0 ? sm_sum / config.reeval_seeds : best_smape;

  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace

InversionResult invert_latent(const neural::Checkpoint& ckpt,
                              const contact::FrictionLaw& target, int n,
                              const dataset::ScalerParams& scaler,
                              const dataset::BoundsTable& bounds,
                              const contact::PhysicalConstants& constants,
                              const InversionConfig& config) {
  if (ckpt.spec.conditional)
    throw std::invalid_argument(
        "latent inversion expects an unconditional decoder");
  const int dim = ckpt.spec.latent_dim;
  neural::Network<float> net(ckpt.spec);
  net.params() = ckpt.params;
  net.stats() = ckpt.stats;

  const auto obj = make_objective(target, n, scaler, constants, config.seed);
  const auto to_theta = [&](const Eigen::VectorXd& z) {
    neural::Matrix<float> zf(1, dim);
    for (int i = 0; i < dim; ++i) zf(0, i) = static_cast<float>(z[i]);
    const auto out = net.decode(zf, nullptr);
    std::array<double, contact::kParamCount> scaled;
    for (int i = 0; i < contact::kParamCount; ++i) scaled[i] = out(0, i);
    return neural::postprocess(dataset::unscale_targets(scaled, scaler),
                               bounds);
  };
  return run_cmaes(dim, config, obj, to_theta);
}

InversionResult invert_direct(const contact::FrictionLaw& target, int n,
                              const dataset::ScalerParams& scaler,
                              const dataset::BoundsTable& bounds,
                              const contact::PhysicalConstants& constants,
                              const InversionConfig& config) {
  const int dim = contact::kParamCount;
  const auto obj = make_objective(target, n, scaler, constants, config.seed);
  const auto to_theta = [&](const Eigen::VectorXd& x) {
    std::array<double, contact::kParamCount> scaled;
    for (int i = 0; i < dim; ++i) scaled[i] = x[i];
    return neural::postprocess(dataset::unscale_targets(scaled, scaler),
                               bounds);
  };
  return run_cmaes(dim, config, obj, to_theta);
}

std::string InversionResult::to_json_string() const {
  json j;
  j["best_theta"] = best_theta.to_array();
  j["best_objective"] = best_objective;
  j["functional_smape"] = functional_smape;
  j["wall_time_seconds"] = wall_time_seconds;
  j["evaluations"] = evaluations;
  j["iterations"] = trace.size();
  return j.dump(2);
}

void InversionResult::write_trace_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace " + path);
  out << "iteration,best_mse,functional_smape\n";
  out.precision(10);
  for (const auto& p : trace)
    out << p.iteration << "," << p.best_mse << "," << p.functional_smape
        << "\n";
}

}  // namespace tribogen::inverse
