#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tribogen/dataset.hpp"
#include "tribogen/rng.hpp"

namespace tribogen::neural {

inline constexpr char kCheckpointMagic[16] = {'T', 'R', 'I', 'B', 'O', 'G',
                                              'E', 'N', '-', 'C', 'K', 'P',
                                              'T', '1', 0, 0};

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Architecture description. Hidden layers are Linear -> BatchNorm1d -> PReLU
// -> Dropout blocks; the encoder head emits (mu, logvar), the decoder head a
// tanh-squashed parameter vector.
struct NetworkSpec {
  std::vector<int> encoder_widths;
  std::vector<double> encoder_dropout;
  std::vector<int> decoder_widths;
  std::vector<double> decoder_dropout;
  int latent_dim = 56;
  int param_dim = contact::kParamCount;
  int cond_dim = dataset::kInputFeatures;
  bool conditional = true;

  static NetworkSpec cvae_default();
  static NetworkSpec vae_default();

  int encoder_input() const {
    return (conditional ? cond_dim : 0) + param_dim;
  }
  int decoder_input() const {
    return (conditional ? cond_dim : 0) + latent_dim;
  }

  void validate() const;
  std::string to_json_string() const;
  static NetworkSpec from_json_string(const std::string& text);
  std::string digest() const;
};

// Flat-buffer offsets for every learned parameter and running statistic.
struct Layout {
  struct Block {
    int in = 0, out = 0;
    double dropout = 0.0;
    std::size_t w = 0, b = 0, gamma = 0, beta = 0, slope = 0;  // params
    std::size_t mean = 0, var = 0;                             // stats
  };
  struct Mlp {
    std::vector<Block> blocks;
    int out_dim = 0;
    std::size_t w_out = 0, b_out = 0;
    int out_in = 0;  // fan-in of the head layer
  };
  Mlp encoder, decoder;
  std::size_t param_count = 0;
  std::size_t stats_count = 0;

  static Layout build(const NetworkSpec& spec);
};

struct LossParts {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

template <typename S>
struct ForwardOut {
  Matrix<S> x_hat;   // batch x param_dim, in (-1, 1)
  Matrix<S> mu;      // batch x latent
  Matrix<S> logvar;  // batch x latent
  Matrix<S> z;       // batch x latent
};

// Full VAE/CVAE compute engine over flat parameter/statistic buffers.
// Training-mode randomness (dropout masks and the latent noise) is derived
// entirely from the seed passed to each call.
template <typename S>
class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const Layout& layout() const { return layout_; }

  std::vector<S>& params() { return params_; }
  const std::vector<S>& params() const { return params_; }
  std::vector<S>& stats() { return stats_; }
  const std::vector<S>& stats() const { return stats_; }

  // Kaiming-normal linear weights, zero biases, unit batch-norm scale,
  // slope 0.25, running stats (0, 1).
  void init(std::uint64_t seed);

  // Train mode uses batch statistics, dropout and z = mu + sigma * eps;
  // when update_stats is set the running statistics are advanced. Eval mode
  // is deterministic: running stats, no dropout, z = mu unless noise given.
  ForwardOut<S> forward(const Matrix<S>& x, const Matrix<S>* cond, bool train,
                        std::uint64_t seed, const Matrix<S>* noise = nullptr,
                        bool update_stats = true);

  // Decoder-only eval pass: z (batch x latent) -> tanh outputs. Used for
  // prior sampling and latent-space inversion.
  Matrix<S> decode(const Matrix<S>& z, const Matrix<S>* cond);

  // Forward in train mode followed by exact reverse-mode differentiation of
  // loss(x, ...) w.r.t. every learned parameter. Identical randomness to a
  // forward() call with the same seed.
  LossParts backward(const Matrix<S>& x, const Matrix<S>* cond, double beta,
                     std::uint64_t seed, std::vector<S>& grads,
                     bool update_stats = true);

 private:
  struct BlockCache;
  struct MlpCache;

  Matrix<S> mlp_forward(const Layout::Mlp& lay, const Matrix<S>& input,
                        bool train, bool update_stats, Rng* rng,
                        MlpCache* cache);
  Matrix<S> mlp_backward(const Layout::Mlp& lay, const MlpCache& cache,
                         const Matrix<S>& d_out, std::vector<S>& grads);

  NetworkSpec spec_;
  Layout layout_;
  std::vector<S> params_;
  std::vector<S> stats_;
};

extern template class Network<float>;
extern template class Network<double>;

// Smooth-L1 (Huber, transition 1.0) of a scalar residual.
double smooth_l1(double residual);

// recon: Smooth-L1 averaged over every element; kl: mean over the batch of
// -1/2 sum_latent (1 + logvar - mu^2 - e^logvar); total = recon + beta * kl.
template <typename S>
LossParts vae_loss(const Matrix<S>& x, const Matrix<S>& x_hat,
                   const Matrix<S>& mu, const Matrix<S>& logvar, double beta);

// Decoupled weight decay, then bias-corrected Adam moments. step is the
// number of completed steps before this call and is incremented.
template <typename S>
void adamw_step(std::vector<S>& params, const std::vector<S>& grads,
                std::vector<S>& m, std::vector<S>& v, std::uint64_t& step,
                double lr, double weight_decay, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

// One-cycle schedule: cosine warmup from max_lr/div over the first
// warmup_frac of steps, cosine anneal down to max_lr/(div*final_div).
double onecycle_lr(std::uint64_t step, std::uint64_t total_steps, double max_lr,
                   double warmup_frac = 0.3, double div = 25.0,
                   double final_div = 1e4);

// Linear KL warmup from 0 to beta_final at warmup_steps, constant after.
double kl_beta(std::uint64_t step, std::uint64_t warmup_steps,
               double beta_final);

// Clamp to bounds, renormalize the free weights if their sum exceeds one.
contact::GmmParams postprocess(
    const std::array<double, contact::kParamCount>& theta_raw,
    const dataset::BoundsTable& bounds);

struct TrainConfig {
  int batch_size = 8192;
  double max_lr = 1.98e-4;
  double weight_decay = 1.10e-6;
  double beta_final = 1.06e-5;
  std::uint64_t warmup_steps = 20000;
  std::uint64_t total_steps = 100000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;
  std::uint64_t val_interval = 500;  // steps between validation passes
  double lr_warmup_frac = 0.3;
  double lr_div = 25.0;
  double lr_final_div = 1e4;

  void validate() const;
};

struct Checkpoint {
  NetworkSpec spec;
  std::vector<float> params;
  std::vector<float> stats;
  std::vector<float> m, v;  // AdamW moments
  std::uint64_t step = 0;
  std::uint64_t rng_state = 0;
  double best_val_loss = 0.0;
  std::string note;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct TraceRow {
  std::uint64_t step = 0;
  double lr = 0.0;
  double beta = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN between validation passes
};

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace);

struct TrainResult {
  Checkpoint best;            // lowest validation loss seen
  Checkpoint last;
  std::vector<TraceRow> trace;
  double best_val_loss = 0.0;
  bool aborted_non_finite = false;
};

// In-memory training set: row-major batches of scaled values. cond may be
// empty for unconditional specs.
struct TrainData {
  std::vector<float> x;     // samples x param_dim
  std::vector<float> cond;  // samples x cond_dim, or empty
  std::size_t count = 0;
};

TrainResult train(const NetworkSpec& spec, const TrainConfig& config,
                  const TrainData& train_data, const TrainData& val_data,
                  std::ostream* log = nullptr);

// Load a split from a dataset manifest and scale it for training.
TrainData load_split(const dataset::Manifest& manifest,
                     const dataset::ScalerParams& scaler,
                     const std::string& split, bool conditional);

TrainResult train_from_manifest(const NetworkSpec& spec,
                                const TrainConfig& config,
                                const dataset::Manifest& manifest,
                                const dataset::ScalerParams& scaler,
                                std::ostream* log = nullptr);

// Conditional inference: M prior draws decoded against one scaled condition
// vector (129 values), unscaled and post-processed.
std::vector<contact::GmmParams> infer(const Checkpoint& ckpt,
                                      const std::vector<double>& scaled_cond,
                                      int samples, std::uint64_t seed,
                                      const dataset::ScalerParams& scaler,
                                      const dataset::BoundsTable& bounds);

}  // namespace tribogen::neural
