#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tribogen/errors.hpp"
#include "tribogen/neural.hpp"

using nlohmann::json;

namespace tribogen::neural {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kInitialSlope = 0.25;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

NetworkSpec NetworkSpec::cvae_default() {
  NetworkSpec s;
  s.encoder_widths = {1915, 1723, 767};
  s.encoder_dropout = {0.163, 0.080, 0.090};
  s.decoder_widths = {347, 308, 328};
  s.decoder_dropout = {0.024, 0.073, 0.123};
  s.latent_dim = 56;
  s.conditional = true;
  return s;
}

NetworkSpec NetworkSpec::vae_default() {
  NetworkSpec s = cvae_default();
  s.conditional = false;
  return s;
}

void NetworkSpec::validate() const {
  if (encoder_widths.size() != encoder_dropout.size() ||
      decoder_widths.size() != decoder_dropout.size())
    throw std::invalid_argument("width/dropout lists must align");
  if (encoder_widths.empty() || decoder_widths.empty())
    throw std::invalid_argument("need at least one hidden layer per stack");
  for (int w : encoder_widths)
    if (w < 1) throw std::invalid_argument("encoder width < 1");
  for (int w : decoder_widths)
    if (w < 1) throw std::invalid_argument("decoder width < 1");
  for (double d : encoder_dropout)
    if (d < 0.0 || d >= 1.0) throw std::invalid_argument("dropout outside [0,1)");
  for (double d : decoder_dropout)
    if (d < 0.0 || d >= 1.0) throw std::invalid_argument("dropout outside [0,1)");
  if (latent_dim < 1 || param_dim < 1 || (conditional && cond_dim < 1))
    throw std::invalid_argument("dimensions must be positive");
}

std::string NetworkSpec::to_json_string() const {
  json j;
  j["encoder_widths"] = encoder_widths;
  j["encoder_dropout"] = encoder_dropout;
  j["decoder_widths"] = decoder_widths;
  j["decoder_dropout"] = decoder_dropout;
  j["latent_dim"] = latent_dim;
  j["param_dim"] = param_dim;
  j["cond_dim"] = cond_dim;
  j["conditional"] = conditional;
  return j.dump();
}

NetworkSpec NetworkSpec::from_json_string(const std::string& text) {
  const json j = json::parse(text);
  NetworkSpec s;
  s.encoder_widths = j.at("encoder_widths").get<std::vector<int>>();
  s.encoder_dropout = j.at("encoder_dropout").get<std::vector<double>>();
  s.decoder_widths = j.at("decoder_widths").get<std::vector<int>>();
  s.decoder_dropout = j.at("decoder_dropout").get<std::vector<double>>();
  s.latent_dim = j.at("latent_dim");
  s.param_dim = j.at("param_dim");
  s.cond_dim = j.at("cond_dim");
  s.conditional = j.at("conditional");
  s.validate();
  return s;
}

std::string NetworkSpec::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json_string())));
  return buf;
}

Layout Layout::build(const NetworkSpec& spec) {
  spec.validate();
  Layout lay;
  std::size_t p = 0, s = 0;
  const auto build_mlp = [&](const std::vector<int>& widths,
                             const std::vector<double>& dropout, int in_dim,
                             int out_dim) {
    Mlp mlp;
    int in = in_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      Block blk;
      blk.in = in;
      blk.out = widths[i];
      blk.dropout = dropout[i];
      blk.w = p, p += static_cast<std::size_t>(blk.out) * blk.in;
      blk.b = p, p += blk.out;
      blk.gamma = p, p += blk.out;
      blk.beta = p, p += blk.out;
      blk.slope = p, p += 1;
      blk.mean = s, s += blk.out;
      blk.var = s, s += blk.out;
      mlp.blocks.push_back(blk);
      in = blk.out;
    }
    mlp.out_in = in;
    mlp.out_dim = out_dim;
    mlp.w_out = p, p += static_cast<std::size_t>(out_dim) * in;
    mlp.b_out = p, p += out_dim;
    return mlp;
  };
  lay.encoder = build_mlp(spec.encoder_widths, spec.encoder_dropout,
                          spec.encoder_input(), 2 * spec.latent_dim);
  lay.decoder = build_mlp(spec.decoder_widths, spec.decoder_dropout,
                          spec.decoder_input(), spec.param_dim);
  lay.param_count = p;
  lay.stats_count = s;
  return lay;
}

template <typename S>
struct Network<S>::BlockCache {
  Matrix<S> input;    // x entering the linear layer
  Matrix<S> lin;      // a = x W^T + b
  Matrix<S> norm;     // (a - mean) / sqrt(var + eps)
  Matrix<S> act_in;   // gamma * norm + beta (PReLU input)
  Matrix<S> mask;     // inverted dropout mask (all ones in eval)
  Vector<S> inv_std;  // 1 / sqrt(batch var + eps)
};

template <typename S>
struct Network<S>::MlpCache {
  std::vector<BlockCache> blocks;
  Matrix<S> head_in;
};

template <typename S>
Network<S>::Network(NetworkSpec spec)
    : spec_(std::move(spec)), layout_(Layout::build(spec_)) {
  params_.assign(layout_.param_count, S(0));
  stats_.assign(layout_.stats_count, S(0));
}

template <typename S>
void Network<S>::init(std::uint64_t seed) {
  Rng rng(seed);
  const auto init_mlp = [&](const Layout::Mlp& mlp) {
    for (const auto& blk : mlp.blocks) {
      const double std = std::sqrt(2.0 / blk.in);
      for (std::size_t i = 0; i < static_cast<std::size_t>(blk.out) * blk.in; ++i)
        params_[blk.w + i] = static_cast<S>(std * rng.gaussian());
      for (int i = 0; i < blk.out; ++i) {
        params_[blk.b + i] = S(0);
        params_[blk.gamma + i] = S(1);
        params_[blk.beta + i] = S(0);
        stats_[blk.mean + i] = S(0);
        stats_[blk.var + i] = S(1);
      }
      params_[blk.slope] = static_cast<S>(kInitialSlope);
    }
    const double std = std::sqrt(2.0 / mlp.out_in);
    for (std::size_t i = 0;
         i < static_cast<std::size_t>(mlp.out_dim) * mlp.out_in; ++i)
      params_[mlp.w_out + i] = static_cast<S>(std * rng.gaussian());
    for (int i = 0; i < mlp.out_dim; ++i) params_[mlp.b_out + i] = S(0);
  };
  init_mlp(layout_.encoder);
  init_mlp(layout_.decoder);
}

template <typename S>
Matrix<S> Network<S>::mlp_forward(const Layout::Mlp& lay, const Matrix<S>& input,
                                  bool train, bool update_stats, Rng* rng,
                                  MlpCache* cache) {
  const Eigen::Index batch = input.rows();
  Matrix<S> x = input;
  if (cache) cache->blocks.resize(lay.blocks.size());
  for (std::size_t li = 0; li < lay.blocks.size(); ++li) {
    const auto& blk = lay.blocks[li];
    Eigen::Map<const Matrix<S>> W(params_.data() + blk.w, blk.out, blk.in);
    Eigen::Map<const Vector<S>> b(params_.data() + blk.b, blk.out);
    Eigen::Map<const Vector<S>> gamma(params_.data() + blk.gamma, blk.out);
    Eigen::Map<const Vector<S>> beta(params_.data() + blk.beta, blk.out);
    const S slope = params_[blk.slope];
    Eigen::Map<Vector<S>> run_mean(stats_.data() + blk.mean, blk.out);
    Eigen::Map<Vector<S>> run_var(stats_.data() + blk.var, blk.out);

    Matrix<S> lin = x * W.transpose();
    lin.rowwise() += b.transpose();

    Matrix<S> norm(batch, blk.out);
    Vector<S> inv_std(blk.out);
    if (train) {
      const Vector<S> mean = lin.colwise().mean();
      Vector<S> var(blk.out);
      for (int c = 0; c < blk.out; ++c)
        var[c] = (lin.col(c).array() - mean[c]).square().mean();
      inv_std = (var.array() + S(kBnEps)).rsqrt();
      norm = (lin.rowwise() - mean.transpose()).array().rowwise() *
             inv_std.transpose().array();
      if (update_stats) {
        const S unbias = batch > 1
                             ? static_cast<S>(batch) / static_cast<S>(batch - 1)
                             : S(1);
        run_mean = (S(1) - S(kBnMomentum)) * run_mean + S(kBnMomentum) * mean;
        run_var =
            (S(1) - S(kBnMomentum)) * run_var + S(kBnMomentum) * unbias * var;
      }
    } else {
      inv_std = (run_var.array() + S(kBnEps)).rsqrt();
      norm = (lin.rowwise() - run_mean.transpose()).array().rowwise() *
             inv_std.transpose().array();
    }

    Matrix<S> act_in = norm.array().rowwise() * gamma.transpose().array();
    act_in.rowwise() += beta.transpose();

    Matrix<S> out =
        act_in.array().max(S(0)) + slope * act_in.array().min(S(0));

    Matrix<S> mask;
    if (train && blk.dropout > 0.0) {
      mask.resize(batch, blk.out);
      const S keep = S(1) - static_cast<S>(blk.dropout);
      for (Eigen::Index r = 0; r < batch; ++r)
        for (int c = 0; c < blk.out; ++c)
          mask(r, c) = rng->uniform() < blk.dropout ? S(0) : S(1) / keep;
      out.array() *= mask.array();
    }

    if (cache) {
      auto& bc = cache->blocks[li];
      bc.input = std::move(x);
      bc.lin = std::move(lin);
      bc.norm = std::move(norm);
      bc.act_in = std::move(act_in);
      bc.mask = std::move(mask);
      bc.inv_std = std::move(inv_std);
    }
    x = std::move(out);
  }

  Eigen::Map<const Matrix<S>> Wout(params_.data() + lay.w_out, lay.out_dim,
                                   lay.out_in);
  Eigen::Map<const Vector<S>> bout(params_.data() + lay.b_out, lay.out_dim);
  Matrix<S> head = x * Wout.transpose();
  head.rowwise() += bout.transpose();
  if (cache) cache->head_in = std::move(x);
  return head;
}

template <typename S>
Matrix<S> Network<S>::mlp_backward(const Layout::Mlp& lay,
                                   const MlpCache& cache, const Matrix<S>& d_out,
                                   std::vector<S>& grads) {
  Eigen::Map<const Matrix<S>> Wout(params_.data() + lay.w_out, lay.out_dim,
                                   lay.out_in);
  Eigen::Map<Matrix<S>> dWout(grads.data() + lay.w_out, lay.out_dim,
                              lay.out_in);
  Eigen::Map<Vector<S>> dbout(grads.data() + lay.b_out, lay.out_dim);
  dWout += d_out.transpose() * cache.head_in;
  dbout += d_out.colwise().sum().transpose();
  Matrix<S> dx = d_out * Wout;

  for (std::size_t li = lay.blocks.size(); li-- > 0;) {
    const auto& blk = lay.blocks[li];
    const auto& bc = cache.blocks[li];
    const Eigen::Index batch = bc.lin.rows();

    if (bc.mask.size() > 0) dx.array() *= bc.mask.array();

    // PReLU
    const S slope = params_[blk.slope];
    S dslope = S(0);
    Matrix<S> d_act(batch, blk.out);
    for (Eigen::Index r = 0; r < batch; ++r)
      for (int c = 0; c < blk.out; ++c) {
        const S a = bc.act_in(r, c);
        if (a > S(0)) {
          d_act(r, c) = dx(r, c);
        } else {
          d_act(r, c) = dx(r, c) * slope;
          dslope += dx(r, c) * a;
        }
      }
    grads[blk.slope] += dslope;

    // Scale/shift
    Eigen::Map<const Vector<S>> gamma(params_.data() + blk.gamma, blk.out);
    Eigen::Map<Vector<S>> dgamma(grads.data() + blk.gamma, blk.out);
    Eigen::Map<Vector<S>> dbeta(grads.data() + blk.beta, blk.out);
    dgamma += (d_act.array() * bc.norm.array()).colwise().sum().transpose()
                  .matrix();
    dbeta += d_act.colwise().sum().transpose();

    // Batch-norm (train-mode batch statistics)
    Matrix<S> d_norm = d_act.array().rowwise() * gamma.transpose().array();
    const Vector<S> sum_dnorm = d_norm.colwise().sum();
    const Vector<S> sum_dnorm_norm =
        (d_norm.array() * bc.norm.array()).colwise().sum();
    const S invb = S(1) / static_cast<S>(batch);
    Matrix<S> d_lin(batch, blk.out);
    for (int c = 0; c < blk.out; ++c)
      d_lin.col(c) =
          bc.inv_std[c] * invb *
          (static_cast<S>(batch) * d_norm.col(c).array() - sum_dnorm[c] -
           bc.norm.col(c).array() * sum_dnorm_norm[c])
              .matrix();

    // Linear
    Eigen::Map<const Matrix<S>> W(params_.data() + blk.w, blk.out, blk.in);
    Eigen::Map<Matrix<S>> dW(grads.data() + blk.w, blk.out, blk.in);
    Eigen::Map<Vector<S>> db(grads.data() + blk.b, blk.out);
    dW += d_lin.transpose() * bc.input;
    db += d_lin.colwise().sum().transpose();
    dx = d_lin * W;
  }
  return dx;
}

template <typename S>
ForwardOut<S> Network<S>::forward(const Matrix<S>& x, const Matrix<S>* cond,
                                  bool train, std::uint64_t seed,
                                  const Matrix<S>* noise, bool update_stats) {
  if (x.cols() != spec_.param_dim)
    throw std::invalid_argument("input width must equal param_dim");
  if (spec_.conditional) {
    if (!cond || cond->rows() != x.rows() || cond->cols() != spec_.cond_dim)
      throw std::invalid_argument("conditional network needs a matching cond batch");
  } else if (cond) {
    throw std::invalid_argument("unconditional network takes no condition");
  }
  if (train && x.rows() < 2)
    throw std::invalid_argument("batch norm needs batch size >= 2 in train mode");

  Rng rng(seed);
  const Eigen::Index batch = x.rows();
  const int latent = spec_.latent_dim;

  Matrix<S> enc_in(batch, spec_.encoder_input());
  if (spec_.conditional) {
    enc_in.leftCols(spec_.cond_dim) = *cond;
    enc_in.rightCols(spec_.param_dim) = x;
  } else {
    enc_in = x;
  }

  const Matrix<S> head =
      mlp_forward(layout_.encoder, enc_in, train, update_stats, &rng, nullptr);

  ForwardOut<S> out;
  out.mu = head.leftCols(latent);
  out.logvar = head.rightCols(latent);

  Matrix<S> eps;
  if (noise) {
    if (noise->rows() != batch || noise->cols() != latent)
      throw std::invalid_argument("noise batch shape mismatch");
    eps = *noise;
  } else if (train) {
    eps.resize(batch, latent);
    for (Eigen::Index r = 0; r < batch; ++r)
      for (int c = 0; c < latent; ++c) eps(r, c) = static_cast<S>(rng.gaussian());
  } else {
    eps = Matrix<S>::Zero(batch, latent);
  }
  out.z = out.mu.array() + (out.logvar.array() * S(0.5)).exp() * eps.array();

  Matrix<S> dec_in(batch, spec_.decoder_input());
  if (spec_.conditional) {
    dec_in.leftCols(spec_.cond_dim) = *cond;
    dec_in.rightCols(latent) = out.z;
  } else {
    dec_in = out.z;
  }
  out.x_hat =
      mlp_forward(layout_.decoder, dec_in, train, update_stats, &rng, nullptr)
          .array()
          .tanh();
  return out;
}

template <typename S>
Matrix<S> Network<S>::decode(const Matrix<S>& z, const Matrix<S>* cond) {
  if (z.cols() != spec_.latent_dim)
    throw std::invalid_argument("latent width mismatch");
  if (spec_.conditional) {
    if (!cond || cond->rows() != z.rows() || cond->cols() != spec_.cond_dim)
      throw std::invalid_argument("conditional decode needs a matching cond batch");
  } else if (cond) {
    throw std::invalid_argument("unconditional network takes no condition");
  }
  Matrix<S> dec_in(z.rows(), spec_.decoder_input());
  if (spec_.conditional) {
    dec_in.leftCols(spec_.cond_dim) = *cond;
    dec_in.rightCols(spec_.latent_dim) = z;
  } else {
    dec_in = z;
  }
  return mlp_forward(layout_.decoder, dec_in, false, false, nullptr, nullptr)
      .array()
      .tanh()
      .matrix();
}

double smooth_l1(double residual) {
  const double a = std::abs(residual);
  return a < 1.0 ? 0.5 * a * a : a - 0.5;
}

template <typename S>
LossParts vae_loss(const Matrix<S>& x, const Matrix<S>& x_hat,
                   const Matrix<S>& mu, const Matrix<S>& logvar, double beta) {
  LossParts out;
  double recon = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      recon += smooth_l1(static_cast<double>(x_hat(r, c)) - x(r, c));
  out.recon = recon / static_cast<double>(x.size());

  double kl = 0.0;
  for (Eigen::Index r = 0; r < mu.rows(); ++r)
    for (Eigen::Index c = 0; c < mu.cols(); ++c) {
      const double m = mu(r, c), lv = logvar(r, c);
      kl += -0.5 * (1.0 + lv - m * m - std::exp(lv));
    }
  out.kl = kl / static_cast<double>(mu.rows());
  out.total = out.recon + beta * out.kl;
  if (!std::isfinite(out.total))
    throw NumericError("non-finite loss (recon=" + std::to_string(out.recon) +
                       ", kl=" + std::to_string(out.kl) + ")");
  return out;
}

template <typename S>
LossParts Network<S>::backward(const Matrix<S>& x, const Matrix<S>* cond,
                               double beta, std::uint64_t seed,
                               std::vector<S>& grads, bool update_stats) {
  if (x.cols() != spec_.param_dim)
    throw std::invalid_argument("input width must equal param_dim");
  if (spec_.conditional) {
    if (!cond || cond->rows() != x.rows() || cond->cols() != spec_.cond_dim)
      throw std::invalid_argument("conditional network needs a matching cond batch");
  } else if (cond) {
    throw std::invalid_argument("unconditional network takes no condition");
  }
  if (x.rows() < 2)
    throw std::invalid_argument("batch norm needs batch size >= 2 in train mode");

  grads.assign(layout_.param_count, S(0));
  Rng rng(seed);
  const Eigen::Index batch = x.rows();
  const int latent = spec_.latent_dim;

  // Forward with caches, replaying the same randomness as forward().
  Matrix<S> enc_in(batch, spec_.encoder_input());
  if (spec_.conditional) {
    enc_in.leftCols(spec_.cond_dim) = *cond;
    enc_in.rightCols(spec_.param_dim) = x;
  } else {
    enc_in = x;
  }
  MlpCache enc_cache;
  const Matrix<S> head = mlp_forward(layout_.encoder, enc_in, true,
                                     update_stats, &rng, &enc_cache);
  const Matrix<S> mu = head.leftCols(latent);
  const Matrix<S> logvar = head.rightCols(latent);

  Matrix<S> eps(batch, latent);
  for (Eigen::Index r = 0; r < batch; ++r)
    for (int c = 0; c < latent; ++c) eps(r, c) = static_cast<S>(rng.gaussian());
  const Matrix<S> sigma = (logvar.array() * S(0.5)).exp();
  const Matrix<S> z = mu.array() + sigma.array() * eps.array();

  Matrix<S> dec_in(batch, spec_.decoder_input());
  if (spec_.conditional) {
    dec_in.leftCols(spec_.cond_dim) = *cond;
    dec_in.rightCols(latent) = z;
  } else {
    dec_in = z;
  }
  MlpCache dec_cache;
  const Matrix<S> dec_head = mlp_forward(layout_.decoder, dec_in, true,
                                         update_stats, &rng, &dec_cache);
  const Matrix<S> x_hat = dec_head.array().tanh();

  const LossParts loss = vae_loss<S>(x, x_hat, mu, logvar, beta);

  // d recon / d x_hat: Huber derivative averaged over all elements.
  const S inv_elems = S(1) / static_cast<S>(x.size());
  Matrix<S> d_head(batch, spec_.param_dim);
  for (Eigen::Index r = 0; r < batch; ++r)
    for (int c = 0; c < spec_.param_dim; ++c) {
      const S res = x_hat(r, c) - x(r, c);
      const S dh = std::abs(res) < S(1) ? res : (res > S(0) ? S(1) : S(-1));
      d_head(r, c) =
          dh * inv_elems * (S(1) - x_hat(r, c) * x_hat(r, c));  // tanh'
    }

  const Matrix<S> d_dec_in =
      mlp_backward(layout_.decoder, dec_cache, d_head, grads);
  const Matrix<S> dz = spec_.conditional
                           ? d_dec_in.rightCols(latent).eval()
                           : d_dec_in;

  // KL gradients plus the reparameterization path.
  const S invb = S(1) / static_cast<S>(batch);
  Matrix<S> d_enc_head(batch, 2 * latent);
  for (Eigen::Index r = 0; r < batch; ++r)
    for (int c = 0; c < latent; ++c) {
      const S m = mu(r, c);
      const S sv = sigma(r, c);
      const S dmu = dz(r, c) + static_cast<S>(beta) * m * invb;
      const S dlv = dz(r, c) * eps(r, c) * S(0.5) * sv +
                    static_cast<S>(beta) * S(0.5) * (sv * sv - S(1)) * invb;
      d_enc_head(r, c) = dmu;
      d_enc_head(r, latent + c) = dlv;
    }
  mlp_backward(layout_.encoder, enc_cache, d_enc_head, grads);
  return loss;
}

template <typename S>
void adamw_step(std::vector<S>& params, const std::vector<S>& grads,
                std::vector<S>& m, std::vector<S>& v, std::uint64_t& step,
                double lr, double weight_decay, double beta1, double beta2,
                double eps) {
  if (grads.size() != params.size() || m.size() != params.size() ||
      v.size() != params.size())
    throw std::invalid_argument("optimizer buffer size mismatch");
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double p = params[i] * (1.0 - lr * weight_decay);
    const double g = grads[i];
    m[i] = static_cast<S>(beta1 * m[i] + (1.0 - beta1) * g);
    v[i] = static_cast<S>(beta2 * v[i] + (1.0 - beta2) * g * g);
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p -= lr * m_hat / (std::sqrt(v_hat) + eps);
    params[i] = static_cast<S>(p);
  }
}

double onecycle_lr(std::uint64_t step, std::uint64_t total_steps, double max_lr,
                   double warmup_frac, double div, double final_div) {
  if (total_steps == 0) throw std::invalid_argument("total_steps must be > 0");
  const double initial = max_lr / div;
  const double final_lr = initial / final_div;
  const double peak_step = warmup_frac * static_cast<double>(total_steps);
  const double s = std::min(static_cast<double>(step),
                            static_cast<double>(total_steps));
  const auto cosine = [](double lo, double hi, double t) {
    return lo + 0.5 * (hi - lo) * (1.0 + std::cos(M_PI * (1.0 - t)));
  };
  if (s <= peak_step) {
    const double t = peak_step > 0.0 ? s / peak_step : 1.0;
    return cosine(initial, max_lr, t);
  }
  const double t = (s - peak_step) / (total_steps - peak_step);
  return cosine(final_lr, max_lr, 1.0 - t);
}

double kl_beta(std::uint64_t step, std::uint64_t warmup_steps,
               double beta_final) {
  if (warmup_steps == 0 || step >= warmup_steps) return beta_final;
  return beta_final * static_cast<double>(step) /
         static_cast<double>(warmup_steps);
}

contact::GmmParams postprocess(
    const std::array<double, contact::kParamCount>& theta_raw,
    const dataset::BoundsTable& bounds) {
  std::array<double, contact::kParamCount> clamped;
  for (int i = 0; i < contact::kParamCount; ++i)
    clamped[i] = std::clamp(theta_raw[i], bounds[i].lo, bounds[i].hi);
  return dataset::enforce_weight_constraint(clamped);
}

std::vector<contact::GmmParams> infer(const Checkpoint& ckpt,
                                      const std::vector<double>& scaled_cond,
                                      int samples, std::uint64_t seed,
                                      const dataset::ScalerParams& scaler,
                                      const dataset::BoundsTable& bounds) {
  if (!ckpt.spec.conditional)
    throw std::invalid_argument("infer requires a conditional checkpoint");
  if (scaled_cond.size() != static_cast<std::size_t>(ckpt.spec.cond_dim))
    throw std::invalid_argument("condition vector width mismatch");
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");

  Network<float> net(ckpt.spec);
  net.params() = ckpt.params;
  net.stats() = ckpt.stats;

  Matrix<float> cond(samples, ckpt.spec.cond_dim);
  for (int r = 0; r < samples; ++r)
    for (int c = 0; c < ckpt.spec.cond_dim; ++c)
      cond(r, c) = static_cast<float>(scaled_cond[c]);

  Rng rng(seed);
  Matrix<float> z(samples, ckpt.spec.latent_dim);
  for (int r = 0; r < samples; ++r)
    for (int c = 0; c < ckpt.spec.latent_dim; ++c)
      z(r, c) = static_cast<float>(rng.gaussian());

  const Matrix<float> x_hat = net.decode(z, &cond);

  std::vector<contact::GmmParams> result;
  result.reserve(samples);
  for (int r = 0; r < samples; ++r) {
    std::array<double, contact::kParamCount> scaled;
    for (int c = 0; c < ckpt.spec.param_dim; ++c) scaled[c] = x_hat(r, c);
    result.push_back(postprocess(dataset::unscale_targets(scaled, scaler), bounds));
  }
  return result;
}

template class Network<float>;
template class Network<double>;

template LossParts vae_loss<float>(const Matrix<float>&, const Matrix<float>&,
                                   const Matrix<float>&, const Matrix<float>&,
                                   double);
template LossParts vae_loss<double>(const Matrix<double>&,
                                    const Matrix<double>&,
                                    const Matrix<double>&,
                                    const Matrix<double>&, double);
template void adamw_step<float>(std::vector<float>&, const std::vector<float>&,
                                std::vector<float>&, std::vector<float>&,
                                std::uint64_t&, double, double, double, double,
                                double);
template void adamw_step<double>(std::vector<double>&,
                                 const std::vector<double>&,
                                 std::vector<double>&, std::vector<double>&,
                                 std::uint64_t&, double, double, double, double,
                                 double);

}  // namespace tribogen::neural
