#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "tribogen/errors.hpp"
#include "tribogen/neural.hpp"

namespace tribogen::neural {

namespace {

// Deterministic epoch shuffle: permutation of sample indices per epoch.
std::vector<std::uint32_t> epoch_order(std::size_t count, std::uint64_t seed,
                                       std::uint64_t epoch) {
  std::vector<std::uint32_t> order(count);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(mix_seed(seed, 0x5af1e, epoch));
  for (std::size_t i = count; i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

void gather_batch(const TrainData& data, const NetworkSpec& spec,
                  const std::vector<std::uint32_t>& order, std::size_t start,
                  std::size_t size, Matrix<float>& x, Matrix<float>& cond) {
  x.resize(static_cast<Eigen::Index>(size), spec.param_dim);
  if (spec.conditional) cond.resize(static_cast<Eigen::Index>(size), spec.cond_dim);
  for (std::size_t r = 0; r < size; ++r) {
    const std::size_t idx = order[start + r];
    const float* xs = data.x.data() + idx * spec.param_dim;
    for (int c = 0; c < spec.param_dim; ++c) x(static_cast<Eigen::Index>(r), c) = xs[c];
    if (spec.conditional) {
      const float* cs = data.cond.data() + idx * spec.cond_dim;
      for (int c = 0; c < spec.cond_dim; ++c)
        cond(static_cast<Eigen::Index>(r), c) = cs[c];
    }
  }
}

double validation_loss(Network<float>& net, const TrainData& val,
                       double beta) {
  const auto& spec = net.spec();
  const std::size_t count = val.count;
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t chunk = 4096;
  double recon_sum = 0.0, kl_sum = 0.0;
  std::vector<std::uint32_t> order(count);
  std::iota(order.begin(), order.end(), 0u);
  Matrix<float> x, cond;
  for (std::size_t start = 0; start < count; start += chunk) {
    const std::size_t size = std::min(chunk, count - start);
    gather_batch(val, spec, order, start, size, x, cond);
    const auto out = net.forward(x, spec.conditional ? &cond : nullptr, false,
                                 0, nullptr, false);
    const auto parts = vae_loss<float>(x, out.x_hat, out.mu, out.logvar, beta);
    recon_sum += parts.recon * static_cast<double>(size);
    kl_sum += parts.kl * static_cast<double>(size);
  }
  return (recon_sum + beta * kl_sum) / static_cast<double>(count);
}

Checkpoint snapshot(const Network<float>& net, const std::vector<float>& m,
                    const std::vector<float>& v, std::uint64_t step,
                    double best_val) {
  Checkpoint ckpt;
  ckpt.spec = net.spec();
  ckpt.params = net.params();
  ckpt.stats = net.stats();
  ckpt.m = m;
  ckpt.v = v;
  ckpt.step = step;
  ckpt.best_val_loss = best_val;
  return ckpt;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (max_lr <= 0.0 || beta_final < 0.0 || weight_decay < 0.0)
    throw std::invalid_argument("rates must be non-negative (lr positive)");
  if (total_steps == 0) throw std::invalid_argument("total_steps must be > 0");
  if (warmup_steps > total_steps)
    throw std::invalid_argument("warmup_steps must not exceed total_steps");
}

TrainData load_split(const dataset::Manifest& manifest,
                     const dataset::ScalerParams& scaler,
                     const std::string& split, bool conditional) {
  const auto shards = manifest.split_shards(split);
  if (shards.empty())
    throw std::invalid_argument("split '" + split + "' has no shards");

  TrainData data;
  for (const auto* shard : shards) {
    const auto records = dataset::read_shard(manifest.shard_file(*shard));
    const std::size_t count = records.size() / dataset::kRecordFloats;
    for (std::size_t r = 0; r < count; ++r) {
      const float* rec = records.data() + r * dataset::kRecordFloats;
      for (int i = 0; i < contact::kParamCount; ++i)
        data.x.push_back(static_cast<float>(dataset::scale_value(
            rec[i], scaler.target_min[i], scaler.target_max[i])));
      if (conditional) {
        for (int i = 0; i < contact::kLawPoints; ++i)
          data.cond.push_back(static_cast<float>(
              dataset::scale_value(rec[contact::kParamCount + 1 + i],
                                   scaler.input_min[i], scaler.input_max[i])));
        data.cond.push_back(static_cast<float>(dataset::scale_value(
            rec[contact::kParamCount], scaler.input_min[contact::kLawPoints],
            scaler.input_max[contact::kLawPoints])));
      }
    }
    data.count += count;
  }
  return data;
}

TrainResult train(const NetworkSpec& spec, const TrainConfig& config,
                  const TrainData& train_data, const TrainData& val_data,
                  std::ostream* log) {
  spec.validate();
  config.validate();
  if (train_data.count < 2)
    throw std::invalid_argument("need at least two training samples");
  if (train_data.x.size() != train_data.count * spec.param_dim)
    throw std::invalid_argument("training buffer shape mismatch");
  if (spec.conditional &&
      train_data.cond.size() != train_data.count * spec.cond_dim)
    throw std::invalid_argument("condition buffer shape mismatch");

  Network<float> net(spec);
  net.init(mix_seed(config.seed, 0xdeed, 0));
  const Layout& layout = net.layout();
  std::vector<float> m(layout.param_count, 0.0f);
  std::vector<float> v(layout.param_count, 0.0f);
  std::vector<float> grads;

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  const std::size_t batch =
      std::min<std::size_t>(config.batch_size, train_data.count);
  const std::size_t batches_per_epoch = train_data.count / batch;

  std::uint64_t adam_step = 0;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  Matrix<float> x, cond;
  Checkpoint last_good = snapshot(net, m, v, 0, result.best_val_loss);

  while (step < config.total_steps) {
    const auto order = epoch_order(train_data.count, config.seed, epoch);
    for (std::size_t bi = 0;
         bi < std::max<std::size_t>(batches_per_epoch, 1) &&
         step < config.total_steps;
         ++bi, ++step) {
      const std::size_t start = (bi * batch) % (train_data.count - batch + 1);
      gather_batch(train_data, spec, order, start, batch, x, cond);

      const double lr = onecycle_lr(step, config.total_steps, config.max_lr,
                                    config.lr_warmup_frac, config.lr_div,
                                    config.lr_final_div);
      const double beta = kl_beta(step, config.warmup_steps, config.beta_final);
      const std::uint64_t step_seed = mix_seed(config.seed, 0xba7c4, step);

      LossParts parts;
      try {
        parts = net.backward(x, spec.conditional ? &cond : nullptr, beta,
                             step_seed, grads);
      } catch (const NumericError&) {
        result.aborted_non_finite = true;
        result.last = last_good;
        if (result.trace.empty() ||
            !std::isfinite(result.best_val_loss))
          result.best = last_good;
        return result;
      }
      adamw_step(net.params(), grads, m, v, adam_step, lr, config.weight_decay,
                 config.adam_beta1, config.adam_beta2);

      TraceRow row;
      row.step = step;
      row.lr = lr;
      row.beta = beta;
      row.train_loss = parts.total;
      row.val_loss = std::numeric_limits<double>::quiet_NaN();

      const bool validate_now = val_data.count > 0 &&
                                ((step + 1) % config.val_interval == 0 ||
                                 step + 1 == config.total_steps);
      if (validate_now) {
        row.val_loss = validation_loss(net, val_data, config.beta_final);
        if (row.val_loss < result.best_val_loss) {
          result.best_val_loss = row.val_loss;
          result.best = snapshot(net, m, v, step + 1, result.best_val_loss);
        }
        if (log)
          *log << "step " << step + 1 << " lr " << lr << " train "
               << parts.total << " val " << row.val_loss << "\n";
      }
      result.trace.push_back(row);
      // Refresh the fallback checkpoint only at validation points: snapshots
      // copy the full parameter set and are too costly per step.
      if (validate_now) last_good = snapshot(net, m, v, step + 1, result.best_val_loss);
    }
    ++epoch;
  }

  result.last = snapshot(net, m, v, step, result.best_val_loss);
  if (!std::isfinite(result.best_val_loss)) result.best = result.last;
  return result;
}

TrainResult train_from_manifest(const NetworkSpec& spec,
                                const TrainConfig& config,
                                const dataset::Manifest& manifest,
                                const dataset::ScalerParams& scaler,
                                std::ostream* log) {
  const TrainData train_data =
      load_split(manifest, scaler, "train", spec.conditional);
  const TrainData val_data =
      load_split(manifest, scaler, "val", spec.conditional);
  return train(spec, config, train_data, val_data, log);
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace " + path);
  out << "step,lr,beta,train_loss,val_loss\n";
  out.precision(10);
  for (const auto& row : trace) {
    out << row.step << "," << row.lr << "," << row.beta << ","
        << row.train_loss << ",";
    if (std::isfinite(row.val_loss)) out << row.val_loss;
    out << "\n";
  }
}

}  // namespace tribogen::neural
