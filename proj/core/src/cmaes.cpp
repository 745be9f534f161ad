#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tribogen/cmaes.hpp"
#include "tribogen/errors.hpp"

namespace tribogen::cmaes {

namespace {
constexpr double kEigenFloorRatio = 1e-14;
}

int default_lambda(int n) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
}

CmaesState cmaes_init(int n, const Eigen::VectorXd& x0, double sigma0,
                      int lambda, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("dimension must be >= 1");
  if (x0.size() != n) throw std::invalid_argument("x0 dimension mismatch");
  if (sigma0 <= 0.0) throw std::invalid_argument("sigma0 must be positive");
  if (lambda == 0) lambda = default_lambda(n);
  if (lambda < 2) throw std::invalid_argument("lambda must be >= 2");

  CmaesState s;
  s.n = n;
  s.lambda = lambda;
  s.mu = lambda / 2;
  s.mean = x0;
  s.sigma = sigma0;
  s.C = Eigen::MatrixXd::Identity(n, n);
  s.p_sigma = Eigen::VectorXd::Zero(n);
  s.p_c = Eigen::VectorXd::Zero(n);
  s.rng = Rng(seed);

  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i)
    s.weights[i] = std::log((lambda + 1.0) / 2.0) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  const double nn = n;
  s.c_sigma = (s.mu_eff + 2.0) / (nn + s.mu_eff + 5.0);
  s.d_sigma = 1.0 +
              2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (nn + 1.0)) - 1.0) +
              s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / nn) / (nn + 4.0 + 2.0 * s.mu_eff / nn);
  s.c1 = 2.0 / ((nn + 1.3) * (nn + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c1, 2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) /
                                    ((nn + 2.0) * (nn + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(nn) * (1.0 - 1.0 / (4.0 * nn) + 1.0 / (21.0 * nn * nn));
  return s;
}

std::vector<Eigen::VectorXd> cmaes_ask(CmaesState& s) {
  if (!s.eigen_fresh) {
    const Eigen::MatrixXd sym = 0.5 * (s.C + s.C.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success)
      throw NumericError("covariance eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues();
    const double floor_val = std::max(evals.maxCoeff(), 0.0) * kEigenFloorRatio;
    if (floor_val <= 0.0)
      throw NumericError("covariance collapsed to zero");
    for (int i = 0; i < s.n; ++i) evals[i] = std::max(evals[i], floor_val);
    s.B = solver.eigenvectors();
    s.D = evals.cwiseSqrt();
    s.C = s.B * evals.asDiagonal() * s.B.transpose();
    s.eigen_fresh = true;
  }

  std::vector<Eigen::VectorXd> out;
  out.reserve(s.lambda);
  for (int k = 0; k < s.lambda; ++k) {
    Eigen::VectorXd z(s.n);
    for (int i = 0; i < s.n; ++i) z[i] = s.rng.gaussian();
    out.push_back(s.mean + s.sigma * (s.B * (s.D.asDiagonal() * z)));
  }
  return out;
}

void cmaes_tell(CmaesState& s, const std::vector<Eigen::VectorXd>& candidates,
                const std::vector<double>& fitnesses) {
  if (candidates.size() != static_cast<std::size_t>(s.lambda) ||
      fitnesses.size() != candidates.size())
    throw std::invalid_argument("candidate/fitness count must equal lambda");
  if (!s.eigen_fresh)
    throw std::invalid_argument("tell requires a preceding ask");

  std::vector<int> order(s.lambda);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const bool fa = std::isfinite(fitnesses[a]);
    const bool fb = std::isfinite(fitnesses[b]);
    if (fa != fb) return fa;
    if (!fa) return a < b;
    if (fitnesses[a] != fitnesses[b]) return fitnesses[a] < fitnesses[b];
    return a < b;
  });

  if (std::isfinite(fitnesses[order[0]]) &&
      (!s.has_best || fitnesses[order[0]] < s.best_f)) {
    s.best_f = fitnesses[order[0]];
    s.best_x = candidates[order[0]];
    s.has_best = true;
  }

  // Weighted recombination of the mu best steps.
  Eigen::VectorXd y_w = Eigen::VectorXd::Zero(s.n);
  std::vector<Eigen::VectorXd> ys(s.mu);
  for (int i = 0; i < s.mu; ++i) {
    ys[i] = (candidates[order[i]] - s.mean) / s.sigma;
    y_w += s.weights[i] * ys[i];
  }
  s.mean += s.sigma * y_w;

  // Step-size path (C^{-1/2} = B D^{-1} B^T from the ask-time cache).
  const Eigen::VectorXd c_inv_sqrt_yw =
      s.B * (s.D.cwiseInverse().asDiagonal() * (s.B.transpose() * y_w));
  s.p_sigma = (1.0 - s.c_sigma) * s.p_sigma +
              std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * c_inv_sqrt_yw;

  const double ps_norm = s.p_sigma.norm();
  const double expected =
      std::sqrt(1.0 - std::pow(1.0 - s.c_sigma,
                               2.0 * static_cast<double>(s.generation + 1)));
  const bool h_sigma =
      ps_norm / expected < (1.4 + 2.0 / (s.n + 1.0)) * s.chi_n;

  s.p_c = (1.0 - s.c_c) * s.p_c +
          (h_sigma ? std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) : 0.0) * y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(s.n, s.n);
  for (int i = 0; i < s.mu; ++i)
    rank_mu += s.weights[i] * (ys[i] * ys[i].transpose());
  const double c1a =
      s.c1 * (1.0 - (h_sigma ? 0.0 : 1.0) * s.c_c * (2.0 - s.c_c));
  s.C = (1.0 - c1a - s.c_mu) * s.C +
        s.c1 * (s.p_c * s.p_c.transpose()) + s.c_mu * rank_mu;

  s.sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
  if (!std::isfinite(s.sigma) || s.sigma <= 0.0)
    throw NumericError("step size diverged");

  ++s.generation;
  s.eigen_fresh = false;
}

}  // namespace tribogen::cmaes
