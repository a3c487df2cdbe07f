// jsi: data synthesis, training, inference and evaluation front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical abort.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "jsi/checkpoint.hpp"
#include "jsi/config.hpp"
#include "jsi/gradcheck.hpp"
#include "jsi/image_io.hpp"
#include "jsi/metrics.hpp"
#include "jsi/parallel.hpp"
#include "jsi/run_manifest.hpp"
#include "jsi/snapshot.hpp"
#include "jsi/synth.hpp"
#include "jsi/trainer.hpp"

namespace fs = std::filesystem;
using namespace jsi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// Input side limit for inference: a 41-tap filter centered on a pixel reaches
// 20 pixels either way.
constexpr int kMinInferSide = 21;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir))
    throw UsageError(dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw UsageError(dir.string() + " is not empty (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string with_commas(std::size_t n) {
  std::string digits = std::to_string(n), out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

// ---------------------------------------------------------------- synth-data

struct SynthArgs {
  std::uint64_t seed = 1;
  int count = 16;
  int scale = 4;
  int lr_size = 0;
  std::string out;
  bool force = false;
};

int run_synth(const SynthArgs& a) {
  prepare_out_dir(a.out, a.force);
  RunManifest rm;
  rm.command = "synth-data";
  rm.seed = a.seed;
  rm.output_dir = a.out;
  rm.started = utc_timestamp();
  const auto pairs = synth_dataset(a.seed, a.count, a.scale, a.lr_size);
  save_archive(a.out, pairs, a.seed);
  rm.finished = utc_timestamp();
  rm.extra = {{"count", a.count}, {"scale", a.scale}, {"lr_size", a.lr_size > 0 ? a.lr_size : default_lr_size(a.scale)}};
  rm.write();
  std::cout << "wrote " << pairs.size() << " pairs (LR " << pairs.front().lr_sdr.data.shape().h
            << "x" << pairs.front().lr_sdr.data.shape().w << ", HR "
            << pairs.front().hr_hdr.data.shape().h << "x" << pairs.front().hr_hdr.data.shape().w
            << ") to " << a.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string phase = "pretrain";
  std::string config;
  std::string data;
  std::string out;
  std::string resume;
  std::string pretrained;
  std::vector<std::string> sets;
  std::int64_t steps = -1;
  std::int64_t stop_at = -1;
  long long seed = -1;
  bool force = false;
};

template <typename T>
int train_with(const TrainArgs& a, const TrainConfig& cfg, Phase phase,
               std::vector<PatchPair> data, RunManifest& rm) {
  Trainer<T> trainer(cfg, phase, std::move(data));
  if (!a.resume.empty()) trainer.resume(a.resume);
  else if (!a.pretrained.empty()) trainer.load_pretrained(a.pretrained);
  const fs::path out(a.out);
  std::ofstream log(out / "log.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw std::runtime_error("cannot open " + (out / "log.jsonl").string());
  const std::int64_t first = trainer.current_step();
  try {
    trainer.run(&log, out / "checkpoint", a.stop_at);
  } catch (const DivergenceError& e) {
    rm.finished = utc_timestamp();
    rm.extra["status"] = "diverged";
    rm.extra["error"] = e.what();
    rm.write();
    std::cerr << "jsi train: " << e.what() << "\n";
    return kExitNumerical;
  }
  rm.finished = utc_timestamp();
  rm.extra["status"] = "completed";
  rm.extra["first_step"] = first;
  rm.extra["last_step"] = trainer.current_step();
  rm.write();
  std::cout << "trained " << (trainer.current_step() - first) << " steps (" << to_string(phase)
            << "), checkpoint " << (out / "checkpoint").string() << "\n";
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  const Phase phase = phase_from_string(a.phase);
  if (phase == Phase::gan && a.resume.empty() && a.pretrained.empty())
    throw UsageError("gan phase needs --pretrained CHECKPOINT or --resume CHECKPOINT");

  // Precedence: flags > config file > checkpoint being resumed > defaults.
  TrainConfig cfg;
  KeyValues given;
  if (!a.resume.empty()) {
    const CheckpointInfo info = read_checkpoint_info(a.resume);
    for (const auto& [k, v] : info.config.items()) cfg.set(k, v.get<std::string>());
  }
  std::string config_text;
  if (!a.config.empty()) {
    config_text = read_text(a.config);
    given = parse_key_values(config_text, a.config);
  }
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    given[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (a.steps >= 0) given["steps"] = std::to_string(a.steps);
  if (a.seed >= 0) given["seed"] = std::to_string(a.seed);
  try {
    cfg.apply(given);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  ArchiveInfo ai;
  auto data = load_archive(a.data, &ai);
  if (!given.count("scale") && a.resume.empty()) cfg.scale = ai.scale;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const fs::path out(a.out);
  if (a.resume.empty()) prepare_out_dir(out, a.force);
  else fs::create_directories(out);

  RunManifest rm;
  rm.command = "train --phase " + a.phase;
  rm.config_path = a.config;
  rm.seed = cfg.seed;
  rm.config_hash = git_blob_hash(cfg.to_text());
  rm.output_dir = a.out;
  rm.started = utc_timestamp();
  rm.extra = {{"data", a.data},
              {"resume", a.resume},
              {"pretrained", a.pretrained},
              {"config", cfg.to_key_values()},
              {"config_file_hash", config_text.empty() ? "" : git_blob_hash(config_text)}};
  if (cfg.precision == "double") return train_with<double>(a, cfg, phase, std::move(data), rm);
  return train_with<float>(a, cfg, phase, std::move(data), rm);
}

// --------------------------------------------------------------------- infer

struct InferArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  bool dump = false;
  bool force = false;
};

Tensor<double> scaled_for_display(const Tensor<double>& t, double gain, double offset) {
  Tensor<double> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::clamp(offset + gain * t[i], 0.0, 1.0);
  return out;
}

template <typename T>
int infer_with(const InferArgs& a, const TrainConfig& cfg, const Tensor<double>& x) {
  Generator<T> g(cfg.generator(), 0);
  load_checkpoint<T>(a.checkpoint, {{"generator", &g.params()}}, false);
  NoGradGuard guard;
  const GeneratorOutput<T> o = g.forward(constant(tensor_cast<T>(x)));
  const fs::path out(a.out);
  const Tensor<double> p = tensor_cast<double>(o.P.value());
  save_snapshot(out / "prediction.jsit", p);
  write_png(out / "prediction.png", p, 10);
  if (a.dump) {
    // |D| is small, so it is amplified 64x; the mask spans [0, 2].
    Tensor<double> d = tensor_cast<double>(o.D.value());
    for (auto& v : d.values()) v = std::abs(v);
    write_png(out / "I.png", scaled_for_display(tensor_cast<double>(o.I.value()), 1.0, 0.0), 8);
    write_png(out / "D.png", scaled_for_display(d, 64.0, 0.0), 8);
    write_png(out / "C_l.png", scaled_for_display(tensor_cast<double>(o.C_l.value()), 0.5, 0.0), 8);
    write_png(out / "X_d.png",
              scaled_for_display(tensor_cast<double>(o.input.detail.value()), 0.5, 0.0), 8);
  }
  std::cout << "wrote " << p.shape().str() << " prediction to " << (out / "prediction.png").string()
            << "\n";
  return kExitOk;
}

int run_infer(const InferArgs& a) {
  const CheckpointInfo info = read_checkpoint_info(a.checkpoint);
  TrainConfig cfg;
  for (const auto& [k, v] : info.config.items()) cfg.set(k, v.get<std::string>());
  const Tensor<double> x = read_image(a.input);
  const Shape s = x.shape();
  if (s.h < kMinInferSide || s.w < kMinInferSide)
    throw UsageError("input " + a.input + " is " + std::to_string(s.w) + "x" + std::to_string(s.h) +
                     "; both sides must be at least " + std::to_string(kMinInferSide));
  if (2 * cfg.guided.radius > std::min(s.h, s.w))
    throw UsageError("input " + a.input + " is too small for guided-filter radius " +
                     std::to_string(cfg.guided.radius));
  prepare_out_dir(a.out, a.force);
  RunManifest rm;
  rm.command = "infer";
  rm.seed = info.seed;
  rm.config_hash = git_blob_hash(cfg.to_text());
  rm.output_dir = a.out;
  rm.started = utc_timestamp();
  rm.extra = {{"checkpoint", a.checkpoint}, {"input", a.input}, {"scale", cfg.scale}};
  const int rc = cfg.precision == "double" ? infer_with<double>(a, cfg, x) : infer_with<float>(a, cfg, x);
  rm.finished = utc_timestamp();
  rm.write();
  return rc;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string pred;
  std::string data;
  std::string out;
  bool force = false;
};

template <typename T>
MetricReport eval_checkpoint(const EvalArgs& a, const TrainConfig& cfg,
                             const std::vector<PatchPair>& pairs) {
  Generator<T> g(cfg.generator(), 0);
  load_checkpoint<T>(a.checkpoint, {{"generator", &g.params()}}, false);
  MetricReport report;
  for (const auto& p : pairs) {
    const Tensor<double> pred = predict(g, p.lr_sdr.data);
    report.add(psnr(p.hr_hdr.data, pred), ssim(p.hr_hdr.data, pred));
  }
  return report;
}

int run_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.pred.empty())
    throw UsageError("eval needs exactly one of --checkpoint or --pred");
  const auto pairs = load_archive(a.data);
  MetricReport report;
  RunManifest rm;
  rm.command = "eval";
  rm.output_dir = a.out;
  rm.started = utc_timestamp();
  if (!a.checkpoint.empty()) {
    const CheckpointInfo info = read_checkpoint_info(a.checkpoint);
    TrainConfig cfg;
    for (const auto& [k, v] : info.config.items()) cfg.set(k, v.get<std::string>());
    if (!pairs.empty() && pairs.front().scale != cfg.scale)
      throw UsageError("checkpoint scale " + std::to_string(cfg.scale) + " does not match data scale " +
                       std::to_string(pairs.front().scale));
    rm.seed = info.seed;
    rm.config_hash = git_blob_hash(cfg.to_text());
    report = cfg.precision == "double" ? eval_checkpoint<double>(a, cfg, pairs)
                                       : eval_checkpoint<float>(a, cfg, pairs);
  } else {
    const auto preds = load_archive(a.pred);
    if (preds.size() != pairs.size())
      throw UsageError("--pred archive has " + std::to_string(preds.size()) + " pairs, data has " +
                       std::to_string(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i)
      report.add(psnr(pairs[i].hr_hdr.data, preds[i].hr_hdr.data),
                 ssim(pairs[i].hr_hdr.data, preds[i].hr_hdr.data));
  }
  prepare_out_dir(a.out, a.force);
  {
    std::ofstream out(fs::path(a.out) / "metrics.json");
    out << report.to_json().dump(2) << '\n';
  }
  rm.finished = utc_timestamp();
  rm.extra = {{"checkpoint", a.checkpoint}, {"pred", a.pred}, {"data", a.data}};
  rm.write();
  std::cout << report.table();
  return kExitOk;
}

// ------------------------------------------------------------------ gradcheck

int run_gradcheck(const std::string& op, bool list) {
  const auto suite = gradcheck_suite();
  if (list) {
    for (const auto& c : suite) std::cout << c.name << "\n";
    return kExitOk;
  }
  int failed = 0, ran = 0;
  for (const auto& c : suite) {
    if (!op.empty() && c.name != op) continue;
    const GradcheckResult r = c.run();
    ++ran;
    std::printf("%-24s %s  coords %5zu  max rel err %.3e  max abs err %.3e\n", r.name.c_str(),
                r.passed() ? "ok  " : "FAIL", r.checked, r.max_rel_err, r.max_abs_err);
    if (!r.passed()) {
      ++failed;
      std::printf("    worst: %s\n", r.worst.c_str());
    }
  }
  if (ran == 0) throw UsageError("no gradcheck case named '" + op + "' (see --list)");
  std::printf("%d/%d passed\n", ran - failed, ran);
  return failed ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------- param-count

int run_param_count(int scale) {
  GeneratorConfig cfg;
  cfg.scale = scale;
  const std::size_t count = param_count(cfg);
  const double target = scale == 2 ? 1.45e6 : 3.03e6;
  const double deviation = 100.0 * (static_cast<double>(count) - target) / target;
  std::printf("scale %d: %s parameters\n", scale, with_commas(count).c_str());
  std::printf("target %.2fM, deviation %+.1f%%\n", target / 1e6, deviation);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"Joint super-resolution and inverse tone mapping toolkit"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic SDR/HDR patch archive");
  synth->add_option("--seed", sa.seed, "Random seed");
  synth->add_option("--count", sa.count, "Number of pairs")->check(CLI::PositiveNumber);
  synth->add_option("--scale", sa.scale, "Scale factor")->check(CLI::IsMember({2, 4}));
  synth->add_option("--lr-size", sa.lr_size, "LR patch side (default 80 at x2, 40 at x4)");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_flag("--force", sa.force, "Overwrite a non-empty output directory");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Pretrain the generator or fine-tune adversarially");
  train->add_option("--phase", ta.phase, "pretrain or gan")->check(CLI::IsMember({"pretrain", "gan"}));
  train->add_option("--config", ta.config, "key = value config file");
  train->add_option("--data", ta.data, "Patch archive directory")->required();
  train->add_option("--out", ta.out, "Run directory")->required();
  train->add_option("--resume", ta.resume, "Continue from a checkpoint of the same phase");
  train->add_option("--pretrained", ta.pretrained, "Initialize the generator from a checkpoint");
  train->add_option("--set", ta.sets, "Override a config key (key=value), repeatable");
  train->add_option("--steps", ta.steps, "Total steps of the phase");
  train->add_option("--stop-at", ta.stop_at, "Stop (and checkpoint) after this step");
  train->add_option("--seed", ta.seed, "Random seed");
  train->add_flag("--force", ta.force, "Overwrite a non-empty run directory");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Predict an HR HDR image from an SDR input");
  infer->add_option("--checkpoint", ia.checkpoint, "Checkpoint directory")->required();
  infer->add_option("--input", ia.input, "PNG or raw planar YUV (with .json sidecar)")->required();
  infer->add_option("--out", ia.out, "Output directory")->required();
  infer->add_flag("--dump-intermediates", ia.dump, "Also write I, D, C_l and X_d images");
  infer->add_flag("--force", ia.force, "Overwrite a non-empty output directory");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM on a patch archive");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint to evaluate");
  eval->add_option("--pred", ea.pred, "Archive whose HR images are taken as predictions");
  eval->add_option("--data", ea.data, "Reference patch archive")->required();
  eval->add_option("--out", ea.out, "Output directory")->required();
  eval->add_flag("--force", ea.force, "Overwrite a non-empty output directory");

  std::string gc_op;
  bool gc_list = false;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc->add_option("--op", gc_op, "Run a single case");
  gc->add_flag("--list", gc_list, "List case names");

  int pc_scale = 2;
  auto* pc = app.add_subcommand("param-count", "Generator parameter count");
  pc->add_option("--scale", pc_scale, "Scale factor")->check(CLI::IsMember({2, 4}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return run_synth(sa);
    if (*train) return run_train(ta);
    if (*infer) return run_infer(ia);
    if (*eval) return run_eval(ea);
    if (*gc) return run_gradcheck(gc_op, gc_list);
    if (*pc) return run_param_count(pc_scale);
  } catch (const UsageError& e) {
    std::cerr << "jsi: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "jsi: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "jsi: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
