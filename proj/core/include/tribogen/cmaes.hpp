#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tribogen/rng.hpp"

namespace tribogen::cmaes {

// Standard (mu/mu_w, lambda) CMA-ES with rank-1 and rank-mu covariance
// updates and cumulative step-size adaptation.
struct CmaesState {
  int n = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd mean;
  double sigma = 0.3;
  Eigen::MatrixXd C;
  Eigen::VectorXd p_sigma, p_c;
  Eigen::VectorXd weights;  // mu positive recombination weights, sum 1
  double mu_eff = 0.0;
  double c_sigma = 0.0, d_sigma = 0.0, c_c = 0.0, c1 = 0.0, c_mu = 0.0;
  double chi_n = 0.0;
  std::uint64_t generation = 0;
  Rng rng{0};

  // Eigendecomposition cache, refreshed by ask().
  Eigen::MatrixXd B;
  Eigen::VectorXd D;  // standard deviations along the eigenbasis
  bool eigen_fresh = false;

  double best_f = 0.0;
  Eigen::VectorXd best_x;
  bool has_best = false;
};

int default_lambda(int n);

CmaesState cmaes_init(int n, const Eigen::VectorXd& x0, double sigma0,
                      int lambda = 0, std::uint64_t seed = 0);

// Draw lambda candidates m + sigma * B D z. Symmetrizes C and floors its
// eigenvalues at 1e-14 of the largest before sampling.
std::vector<Eigen::VectorXd> cmaes_ask(CmaesState& state);

// Rank-based update. Non-finite fitnesses rank worst; candidates must come
// from the matching ask (the pre-update mean is used to form the steps).
void cmaes_tell(CmaesState& state,
                const std::vector<Eigen::VectorXd>& candidates,
                const std::vector<double>& fitnesses);

}  // namespace tribogen::cmaes
