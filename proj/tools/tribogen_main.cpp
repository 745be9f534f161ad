// tribogen: dataset generation, surrogate training, evaluation, inverse
// design and analyses for rough-surface friction laws, driven by a JSON
// config file with flag overrides.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tribogen/analysis.hpp"
#include "tribogen/errors.hpp"
#include "tribogen/inverse.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tribogen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// One line-delimited JSON log record on stderr.
void log_event(const std::string& event, json fields = json::object()) {
  fields["ts"] = now_seconds();
  fields["level"] = "info";
  fields["event"] = event;
  std::cerr << fields.dump() << "\n";
}

void log_error(const std::string& kind, const std::string& message, int code) {
  json j;
  j["ts"] = now_seconds();
  j["level"] = "error";
  j["event"] = "error";
  j["kind"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string short_digest(const json& section) {
  std::ostringstream out;
  out << std::hex << fnv1a64(section.dump());
  auto s = out.str();
  return s.size() > 8 ? s.substr(0, 8) : s;
}

void reject_unknown_keys(const json& section, const std::string& name,
                         const std::set<std::string>& allowed) {
  if (!section.is_object())
    throw std::invalid_argument("config section '" + name +
                                "' must be an object");
  for (const auto& item : section.items())
    if (!allowed.count(item.key()))
      throw std::invalid_argument("unknown key '" + item.key() +
                                  "' in config section '" + name + "'");
}

// Re-emits plain progress lines from the training loop as JSON log records.
class JsonLineBuf : public std::streambuf {
 public:
  explicit JsonLineBuf(std::string event) : event_(std::move(event)) {}
  ~JsonLineBuf() override {
    if (!line_.empty()) flush_line();
  }

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return ch;
    if (ch == '\n')
      flush_line();
    else
      line_.push_back(static_cast<char>(ch));
    return ch;
  }

 private:
  void flush_line() {
    log_event(event_, {{"message", line_}});
    line_.clear();
  }
  std::string event_;
  std::string line_;
};

// Global run settings shared by every subcommand; flags win over the file.
struct RunContext {
  json config = json::object();
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = "runs/default";

  std::optional<std::uint64_t> seed_flag;
  std::optional<int> workers_flag;
  std::optional<std::string> out_flag;

  json section(const std::string& name) const {
    return config.contains(name) ? config.at(name) : json::object();
  }
};

const std::set<std::string> kTopLevelKeys = {
    "schema_version", "seed",   "workers", "out",
    "generate",       "train",  "eval",    "invert",
    "analyze"};

void load_config(RunContext& ctx, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    ctx.config = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  reject_unknown_keys(ctx.config, "(top level)", kTopLevelKeys);
  if (ctx.config.contains("schema_version") &&
      ctx.config.at("schema_version").get<int>() != 1)
    throw std::invalid_argument("unsupported config schema_version");
  if (ctx.config.contains("seed")) ctx.seed = ctx.config.at("seed");
  if (ctx.config.contains("workers")) ctx.workers = ctx.config.at("workers");
  if (ctx.config.contains("out")) ctx.out = ctx.config.at("out");
}

void finalize(RunContext& ctx) {
  if (ctx.seed_flag) ctx.seed = *ctx.seed_flag;
  if (ctx.workers_flag) ctx.workers = *ctx.workers_flag;
  if (ctx.out_flag) ctx.out = *ctx.out_flag;
  if (ctx.workers < 1)
    throw std::invalid_argument("workers must be at least 1");
}

template <typename T>
void maybe(const json& section, const char* key, T& value) {
  if (section.contains(key)) value = section.at(key).get<T>();
}

dataset::GenerationConfig parse_generation(const json& section,
                                           std::uint64_t seed) {
  reject_unknown_keys(section, "generate",
                      {"recipe_count", "n_grid", "base_seed", "sobol_skip",
                       "shard_size", "delta_grid", "p_grid", "constants",
                       "bounds", "fractions", "split_seed"});
  dataset::GenerationConfig config;
  config.base_seed = seed;
  maybe(section, "recipe_count", config.recipe_count);
  maybe(section, "n_grid", config.n_grid);
  maybe(section, "base_seed", config.base_seed);
  maybe(section, "sobol_skip", config.sobol_skip);
  maybe(section, "shard_size", config.shard_size);
  auto parse_grid = [&](const char* key, dataset::GridSpec& g) {
    if (!section.contains(key)) return;
    const json& jg = section.at(key);
    reject_unknown_keys(jg, key, {"lo", "hi", "count"});
    maybe(jg, "lo", g.lo);
    maybe(jg, "hi", g.hi);
    maybe(jg, "count", g.count);
  };
  parse_grid("delta_grid", config.delta_grid);
  parse_grid("p_grid", config.p_grid);
  if (section.contains("constants")) {
    const json& pc = section.at("constants");
    reject_unknown_keys(pc, "constants",
                        {"e_star", "sigma_s", "b_ratio", "h_bounds",
                         "r_bounds"});
    maybe(pc, "e_star", config.constants.e_star);
    maybe(pc, "sigma_s", config.constants.sigma_s);
    maybe(pc, "b_ratio", config.constants.b_ratio);
    if (pc.contains("h_bounds"))
      config.constants.h_bounds = {pc.at("h_bounds").at(0),
                                   pc.at("h_bounds").at(1)};
    if (pc.contains("r_bounds"))
      config.constants.r_bounds = {pc.at("r_bounds").at(0),
                                   pc.at("r_bounds").at(1)};
  }
  if (section.contains("bounds")) {
    const json& jb = section.at("bounds");
    if (!jb.is_array() || jb.size() != contact::kParamCount)
      throw std::invalid_argument("bounds must list 23 [lo, hi] pairs");
    for (int i = 0; i < contact::kParamCount; ++i)
      config.bounds.bounds[i] = {jb.at(i).at(0), jb.at(i).at(1)};
  }
  return config;
}

int cmd_generate(RunContext& ctx) {
  const json section = ctx.section("generate");
  const auto config = parse_generation(section, ctx.seed);
  config.validate();

  std::array<double, 3> fractions{0.70, 0.15, 0.15};
  if (section.contains("fractions")) {
    const auto f = section.at("fractions").get<std::vector<double>>();
    if (f.size() != 3)
      throw std::invalid_argument("fractions must hold three values");
    fractions = {f[0], f[1], f[2]};
  }
  std::uint64_t split_seed = 42;
  maybe(section, "split_seed", split_seed);

  const fs::path data_dir = fs::path(ctx.out) / "data";
  const fs::path manifest_path = data_dir / "manifest.json";
  const std::string digest = config.digest();

  if (fs::exists(manifest_path)) {
    const auto existing = dataset::Manifest::load(manifest_path.string());
    if (existing.config_digest == digest && existing.has_splits &&
        !existing.scaler_path.empty() &&
        fs::exists(fs::path(existing.base_dir) / existing.scaler_path)) {
      log_event("generate_up_to_date", {{"digest", digest}});
      std::cout << "up-to-date: " << existing.total_count() << " samples in "
                << existing.shards.size() << " shards under "
                << data_dir.string() << "\n";
      return kExitOk;
    }
  }

  log_event("generate_start", {{"digest", digest},
                               {"samples", config.total_samples()},
                               {"workers", ctx.workers}});
  const double t0 = now_seconds();
  auto manifest = dataset::generate_dataset(config, data_dir.string(),
                                            ctx.workers);
  manifest = dataset::split_shards(manifest, fractions, split_seed);
  const auto scaler = dataset::fit_scaler(manifest);
  scaler.save((data_dir / "scaler.json").string());
  manifest.scaler_path = "scaler.json";
  manifest.save(manifest_path.string());
  const double elapsed = now_seconds() - t0;

  const double throughput =
      elapsed > 0.0 ? static_cast<double>(config.total_samples()) / elapsed
                    : 0.0;
  log_event("generate_done", {{"digest", digest},
                              {"samples", manifest.total_count()},
                              {"shards", manifest.shards.size()},
                              {"seconds", elapsed},
                              {"samples_per_second", throughput}});
  std::cout << "generated " << manifest.total_count() << " samples in "
            << manifest.shards.size() << " shards (" << std::fixed
            << elapsed << " s, " << throughput << " samples/s)\n"
            << "manifest: " << manifest_path.string() << "\n";
  return kExitOk;
}

dataset::ScalerParams load_scaler_for(const dataset::Manifest& manifest) {
  if (manifest.scaler_path.empty())
    throw std::invalid_argument(
        "manifest has no scaler reference; run generate first");
  return dataset::ScalerParams::load(
      (fs::path(manifest.base_dir) / manifest.scaler_path).string());
}

dataset::Manifest load_manifest(const json& section, const char* who) {
  if (!section.contains("dataset"))
    throw std::invalid_argument(std::string(who) +
                                " config needs a 'dataset' manifest path");
  return dataset::Manifest::load(section.at("dataset").get<std::string>());
}

int cmd_train(RunContext& ctx, const std::string& model_flag) {
  const json section = ctx.section("train");
  reject_unknown_keys(
      section, "train",
      {"model", "dataset", "batch_size", "max_lr", "weight_decay",
       "beta_final", "warmup_steps", "total_steps", "adam_beta1",
       "adam_beta2", "val_interval", "lr_warmup_frac", "lr_div",
       "lr_final_div", "encoder_widths", "encoder_dropout", "decoder_widths",
       "decoder_dropout", "latent_dim"});

  std::string model = section.value("model", std::string("cvae"));
  if (!model_flag.empty()) model = model_flag;
  if (model != "vae" && model != "cvae")
    throw std::invalid_argument("model must be 'vae' or 'cvae'");

  auto spec = model == "cvae" ? neural::NetworkSpec::cvae_default()
                              : neural::NetworkSpec::vae_default();
  maybe(section, "encoder_widths", spec.encoder_widths);
  maybe(section, "encoder_dropout", spec.encoder_dropout);
  maybe(section, "decoder_widths", spec.decoder_widths);
  maybe(section, "decoder_dropout", spec.decoder_dropout);
  maybe(section, "latent_dim", spec.latent_dim);
  spec.validate();

  neural::TrainConfig config;
  config.seed = ctx.seed;
  maybe(section, "batch_size", config.batch_size);
  maybe(section, "max_lr", config.max_lr);
  maybe(section, "weight_decay", config.weight_decay);
  maybe(section, "beta_final", config.beta_final);
  maybe(section, "warmup_steps", config.warmup_steps);
  maybe(section, "total_steps", config.total_steps);
  maybe(section, "adam_beta1", config.adam_beta1);
  maybe(section, "adam_beta2", config.adam_beta2);
  maybe(section, "val_interval", config.val_interval);
  maybe(section, "lr_warmup_frac", config.lr_warmup_frac);
  maybe(section, "lr_div", config.lr_div);
  maybe(section, "lr_final_div", config.lr_final_div);
  config.validate();

  const auto manifest = load_manifest(section, "train");
  const auto scaler = load_scaler_for(manifest);

  fs::create_directories(ctx.out);
  log_event("train_start", {{"model", model},
                            {"spec_digest", spec.digest()},
                            {"total_steps", config.total_steps},
                            {"samples", manifest.total_count()}});
  const double t0 = now_seconds();
  JsonLineBuf log_buf("train_log");
  std::ostream log_stream(&log_buf);
  const auto result =
      neural::train_from_manifest(spec, config, manifest, scaler, &log_stream);
  const double elapsed = now_seconds() - t0;

  const fs::path ckpt_path = fs::path(ctx.out) / (model + ".ckpt");
  const fs::path trace_path = fs::path(ctx.out) / (model + "_trace.csv");
  neural::save_checkpoint(ckpt_path.string(), result.best);
  neural::write_trace_csv(trace_path.string(), result.trace);

  log_event("train_done", {{"model", model},
                           {"best_val_loss", result.best_val_loss},
                           {"steps", result.last.step},
                           {"seconds", elapsed},
                           {"aborted_non_finite", result.aborted_non_finite}});
  std::cout << "trained " << model << " for " << result.last.step
            << " steps in " << std::fixed << elapsed
            << " s; best validation loss " << std::scientific
            << result.best_val_loss << "\n"
            << "checkpoint: " << ckpt_path.string() << "\n"
            << "trace: " << trace_path.string() << "\n";
  if (result.aborted_non_finite)
    std::cout << "warning: training aborted on non-finite loss; the "
                 "checkpoint holds the last good state\n";
  return kExitOk;
}

int cmd_eval(RunContext& ctx) {
  const json section = ctx.section("eval");
  reject_unknown_keys(section, "eval",
                      {"checkpoint", "dataset", "split", "max_samples",
                       "functional", "functional_samples", "per_sample"});
  if (!section.contains("checkpoint"))
    throw std::invalid_argument("eval config needs a 'checkpoint' path");

  const auto ckpt =
      neural::load_checkpoint(section.at("checkpoint").get<std::string>());
  const auto manifest = load_manifest(section, "eval");
  const auto scaler = load_scaler_for(manifest);
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;

  analysis::EvalOptions options;
  options.seed = ctx.seed;
  maybe(section, "split", options.split);
  maybe(section, "max_samples", options.max_samples);
  maybe(section, "functional", options.functional);
  maybe(section, "functional_samples", options.functional_samples);

  fs::create_directories(ctx.out);
  const std::string digest = short_digest(section);
  if (section.value("per_sample", false))
    options.per_sample_csv =
        (fs::path(ctx.out) / ("eval_samples_" + digest + ".csv")).string();

  log_event("eval_start", {{"split", options.split},
                           {"digest", digest},
                           {"functional", options.functional}});
  const auto report = analysis::eval_report(ckpt, manifest, scaler, bounds,
                                            constants, options);

  json stamped = json::parse(report.to_json_string());
  stamped["config_digest"] = digest;
  stamped["seed"] = ctx.seed;
  const fs::path json_path = fs::path(ctx.out) / ("eval_" + digest + ".json");
  const fs::path csv_path = fs::path(ctx.out) / ("eval_" + digest + ".csv");
  {
    std::ofstream out(json_path);
    out << stamped.dump(2) << "\n";
    std::ofstream csv(csv_path);
    csv << metrics::EvalReport::csv_header() << "\n"
        << report.to_csv_row() << "\n";
  }

  log_event("eval_done", {{"samples", report.sample_count},
                          {"median_smape", report.smape_median}});
  std::cout << "evaluated " << report.sample_count << " samples on split '"
            << options.split << "'\n"
            << "median parameter sMAPE " << report.smape_median
            << "%, adjusted R^2 " << report.adjusted_r2 << ", Wasserstein "
            << report.wasserstein << "\n";
  if (report.has_functional)
    std::cout << "functional sMAPE " << report.functional_mean << "% (95% CI "
              << report.functional_ci_lo << ".." << report.functional_ci_hi
              << ")\n";
  std::cout << "report: " << json_path.string() << "\n";
  return kExitOk;
}

int cmd_invert(RunContext& ctx, const std::string& target_flag) {
  const json section = ctx.section("invert");
  reject_unknown_keys(section, "invert",
                      {"mode", "checkpoint", "dataset", "target", "n",
                       "iterations", "lambda", "sigma0", "reeval_seeds",
                       "warm_start"});

  const std::string mode = section.value("mode", std::string("direct"));
  if (mode != "direct" && mode != "latent")
    throw std::invalid_argument("invert mode must be 'direct' or 'latent'");

  std::string target_path = section.value("target", std::string());
  if (!target_flag.empty()) target_path = target_flag;
  if (target_path.empty())
    throw std::invalid_argument("invert needs a target law CSV "
                                "(--target or config key)");
  const auto target = contact::read_law_csv(target_path);

  const auto manifest = load_manifest(section, "invert");
  const auto scaler = load_scaler_for(manifest);
  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;

  const int n = section.value("n", 10000);
  if (n < 1) throw std::invalid_argument("n must be positive");

  inverse::InversionConfig config;
  config.seed = ctx.seed;
  maybe(section, "iterations", config.iterations);
  maybe(section, "lambda", config.lambda);
  maybe(section, "sigma0", config.sigma0);
  maybe(section, "reeval_seeds", config.reeval_seeds);
  maybe(section, "warm_start", config.warm_start);

  fs::create_directories(ctx.out);
  const std::string digest = short_digest(section);
  log_event("invert_start", {{"mode", mode},
                             {"target", target_path},
                             {"iterations", config.iterations},
                             {"digest", digest}});

  inverse::InversionResult result;
  if (mode == "latent") {
    if (!section.contains("checkpoint"))
      throw std::invalid_argument("latent inversion needs a 'checkpoint'");
    const auto ckpt =
        neural::load_checkpoint(section.at("checkpoint").get<std::string>());
    result = inverse::invert_latent(ckpt, target, n, scaler, bounds,
                                    constants, config);
  } else {
    result = inverse::invert_direct(target, n, scaler, bounds, constants,
                                    config);
  }

  json stamped = json::parse(result.to_json_string());
  stamped["config_digest"] = digest;
  stamped["seed"] = ctx.seed;
  stamped["mode"] = mode;
  const fs::path json_path =
      fs::path(ctx.out) / ("invert_" + digest + ".json");
  const fs::path trace_path =
      fs::path(ctx.out) / ("invert_trace_" + digest + ".csv");
  {
    std::ofstream out(json_path);
    out << stamped.dump(2) << "\n";
  }
  result.write_trace_csv(trace_path.string());

  log_event("invert_done", {{"best_mse", result.best_objective},
                            {"functional_smape", result.functional_smape},
                            {"evaluations", result.evaluations}});
  std::cout << mode << " inversion: best MSE " << std::scientific
            << result.best_objective << ", functional sMAPE " << std::fixed
            << result.functional_smape << "% over " << result.evaluations
            << " evaluations (" << result.wall_time_seconds << " s)\n"
            << "result: " << json_path.string() << "\n";
  return kExitOk;
}

int cmd_analyze(RunContext& ctx) {
  const json section = ctx.section("analyze");
  reject_unknown_keys(section, "analyze",
                      {"analyses", "dataset", "checkpoint", "target", "n",
                       "n_list", "perturbation", "max_m", "samples",
                       "correlation_samples", "functional_samples"});

  std::vector<std::string> analyses{"sensitivity"};
  maybe(section, "analyses", analyses);
  const std::set<std::string> known{"sensitivity", "heatmap", "convergence",
                                    "envelope", "correlation"};
  for (const auto& a : analyses)
    if (!known.count(a))
      throw std::invalid_argument("unknown analysis '" + a + "'");

  const auto bounds = dataset::BoundsTable::defaults();
  const contact::PhysicalConstants constants;
  fs::create_directories(ctx.out);
  const std::string digest = short_digest(section);
  const auto out_file = [&](const std::string& stem, const char* ext) {
    return (fs::path(ctx.out) / (stem + "_" + digest + ext)).string();
  };

  auto need = [&](const char* key) -> json {
    if (!section.contains(key))
      throw std::invalid_argument(std::string("analysis needs config key '") +
                                  key + "'");
    return section.at(key);
  };

  for (const auto& a : analyses) {
    log_event("analyze_start", {{"analysis", a}, {"digest", digest}});
    if (a == "sensitivity") {
      std::vector<int> n_list{100, 1500, 10000};
      maybe(section, "n_list", n_list);
      double perturbation = 0.05;
      maybe(section, "perturbation", perturbation);
      const auto theta0 = analysis::default_sensitivity_theta(bounds);
      const auto table = analysis::sensitivity(theta0, n_list, perturbation,
                                               constants, bounds, ctx.seed);
      std::ofstream csv(out_file("sensitivity", ".csv"));
      csv << table.to_csv();
      json j = json::parse(table.to_json_string());
      j["config_digest"] = digest;
      j["seed"] = ctx.seed;
      std::ofstream jout(out_file("sensitivity", ".json"));
      jout << j.dump(2) << "\n";
      std::cout << "sensitivity: " << table.cells.size() << " params x "
                << n_list.size() << " N values -> "
                << out_file("sensitivity", ".csv") << "\n";
    } else if (a == "heatmap") {
      const auto ckpt =
          neural::load_checkpoint(need("checkpoint").get<std::string>());
      const auto manifest = load_manifest(section, "analyze");
      const auto scaler = load_scaler_for(manifest);
      analysis::EvalOptions options;
      options.seed = ctx.seed;
      options.functional = true;
      options.functional_samples = section.value("functional_samples",
                                                 std::uint64_t{200});
      std::vector<analysis::EvalRecord> records;
      analysis::eval_report(ckpt, manifest, scaler, bounds, constants,
                            options, &records);
      const auto map = analysis::regime_heatmap(records);
      std::ofstream csv(out_file("heatmap", ".csv"));
      csv << map.to_csv();
      json j = json::parse(map.to_json_string());
      j["config_digest"] = digest;
      j["seed"] = ctx.seed;
      std::ofstream jout(out_file("heatmap", ".json"));
      jout << j.dump(2) << "\n";
      std::cout << "heatmap: " << map.total_count() << " records -> "
                << out_file("heatmap", ".csv") << "\n";
    } else if (a == "convergence" || a == "envelope") {
      const auto ckpt =
          neural::load_checkpoint(need("checkpoint").get<std::string>());
      const auto manifest = load_manifest(section, "analyze");
      const auto scaler = load_scaler_for(manifest);
      const auto target =
          contact::read_law_csv(need("target").get<std::string>());
      const int n = section.value("n", 10000);
      if (a == "convergence") {
        const int max_m = section.value("max_m", 1000);
        const auto curve = analysis::latent_convergence(
            ckpt, target, n, max_m, ctx.seed, scaler, bounds, constants);
        analysis::write_curve_csv(out_file("convergence", ".csv"), curve,
                                  "running_mean_smape");
        std::cout << "convergence: " << curve.size() << " points, final "
                  << curve.back() << "% -> "
                  << out_file("convergence", ".csv") << "\n";
      } else {
        const int samples = section.value("samples", 100);
        const auto env = analysis::uncertainty_envelope(
            ckpt, target, n, samples, ctx.seed, scaler, bounds, constants);
        std::ofstream csv(out_file("envelope", ".csv"));
        csv << env.to_csv();
        std::cout << "envelope: " << samples << " draws -> "
                  << out_file("envelope", ".csv") << "\n";
      }
    } else {  // correlation
      const auto manifest = load_manifest(section, "analyze");
      std::uint64_t budget = section.value("correlation_samples",
                                           std::uint64_t{100000});
      std::vector<double> data;
      std::uint64_t rows = 0;
      for (const auto& shard : manifest.shards) {
        if (rows >= budget) break;
        const auto records = dataset::read_shard(manifest.shard_file(shard));
        const std::size_t count = records.size() / dataset::kRecordFloats;
        for (std::size_t r = 0; r < count && rows < budget; ++r, ++rows)
          for (int c = 0; c < contact::kParamCount; ++c)
            data.push_back(records[r * dataset::kRecordFloats + c]);
      }
      const auto corr =
          analysis::correlation_matrix(data, rows, contact::kParamCount);
      analysis::write_matrix_csv(out_file("correlation", ".csv"), corr);
      std::cout << "correlation: " << rows << " samples -> "
                << out_file("correlation", ".csv") << "\n";
    }
    log_event("analyze_done", {{"analysis", a}});
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rough-surface friction-law toolkit"};
  app.require_subcommand(1);

  RunContext ctx;
  std::string config_path;
  std::uint64_t seed_val = 0;
  int workers_val = 0;
  std::string out_val;
  std::string model_flag;
  std::string target_flag;

  app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_val, "global seed override");
  auto* workers_opt =
      app.add_option("--workers", workers_val, "worker pool size");
  auto* out_opt = app.add_option("--out", out_val, "output directory");

  auto* gen = app.add_subcommand("generate", "generate a dataset");
  auto* train = app.add_subcommand("train", "train a surrogate");
  train->add_option("--model", model_flag, "vae or cvae");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* invert = app.add_subcommand("invert", "invert a target law");
  invert->add_option("--target", target_flag, "target law CSV (P,F)");
  auto* analyze = app.add_subcommand("analyze", "run analyses");
  for (auto* sub : {gen, train, eval, invert, analyze}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (!config_path.empty()) load_config(ctx, config_path);
    if (seed_opt->count()) ctx.seed_flag = seed_val;
    if (workers_opt->count()) ctx.workers_flag = workers_val;
    if (out_opt->count()) ctx.out_flag = out_val;
    finalize(ctx);

    if (gen->parsed()) return cmd_generate(ctx);
    if (train->parsed()) return cmd_train(ctx, model_flag);
    if (eval->parsed()) return cmd_eval(ctx);
    if (invert->parsed()) return cmd_invert(ctx, target_flag);
    if (analyze->parsed()) return cmd_analyze(ctx);
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    log_error("validation", e.what(), kExitValidation);
    return kExitValidation;
  } catch (const json::exception& e) {
    log_error("validation", e.what(), kExitValidation);
    return kExitValidation;
  } catch (const IoError& e) {
    log_error("io", e.what(), kExitIo);
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    log_error("io", e.what(), kExitIo);
    return kExitIo;
  } catch (const std::exception& e) {
    log_error("runtime", e.what(), kExitRuntime);
    return kExitRuntime;
  }
}
