#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tribogen/cmaes.hpp"
#include "tribogen/neural.hpp"

namespace tribogen::inverse {

struct InversionConfig {
  int iterations = 500;
  int lambda = 0;        // 0: CMA-ES default 4 + floor(3 ln n)
  double sigma0 = 0.3;   // in latent units / scaled-box units
  std::uint64_t seed = 0;
  int reeval_seeds = 5;  // fresh-seed re-evaluations of the final theta
  std::vector<double> warm_start;  // search-space coordinates; empty = cold
};

struct TracePoint {
  int iteration = 0;
  double best_mse = 0.0;
  double functional_smape = 0.0;  // of the best-so-far candidate
};

struct InversionResult {
  contact::GmmParams best_theta;
  double best_objective = 0.0;  // MSE in scaled law space
  std::vector<TracePoint> trace;
  double functional_smape = 0.0;  // mean over reeval_seeds fresh seeds
  double wall_time_seconds = 0.0;
  int evaluations = 0;

  std::string to_json_string() const;
  void write_trace_csv(const std::string& path) const;
};

// Latent-space inversion: CMA-ES over z, decoding through an unconditional
// VAE checkpoint, simulating postprocess(unscale(decode(z))) with one shared
// asperity seed per run.
InversionResult invert_latent(const neural::Checkpoint& ckpt,
                              const contact::FrictionLaw& target, int n,
                              const dataset::ScalerParams& scaler,
                              const dataset::BoundsTable& bounds,
                              const contact::PhysicalConstants& constants,
                              const InversionConfig& config);

// Direct inversion: CMA-ES over the 23 parameters in scaled [-1,1] space.
InversionResult invert_direct(const contact::FrictionLaw& target, int n,
                              const dataset::ScalerParams& scaler,
                              const dataset::BoundsTable& bounds,
                              const contact::PhysicalConstants& constants,
                              const InversionConfig& config);

}  // namespace tribogen::inverse
