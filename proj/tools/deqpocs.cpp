// deqpocs command-line tool: data generation, training, reconstruction,
// baselines, theory checks and evaluation.
//
// Exit status: 0 success, 1 check or quality failure, 2 usage or IO error.

#include "deqpocs/consistency_net.hpp"
#include "deqpocs/deq_train.hpp"
#include "deqpocs/errors.hpp"
#include "deqpocs/harness.hpp"
#include "deqpocs/io.hpp"
#include "deqpocs/metrics.hpp"
#include "deqpocs/phantom.hpp"
#include "deqpocs/rng.hpp"
#include "deqpocs/spirit.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace deqpocs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitUsage = 2;

// Thrown for check/quality failures that should map to exit status 1.
struct CheckFailure : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void ensure_dir(fs::path const &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void require_file(fs::path const &p, std::string_view what)
{
  if (!fs::is_regular_file(p)) {
    throw IoError(fmt::format("{} '{}' does not exist", what, p.string()));
  }
}

SolverSettings make_solver(std::string const &name, double tol, int max_iter)
{
  if (name == "picard") {
    return SolverSettings::picard(tol, max_iter);
  }
  if (name == "anderson") {
    return SolverSettings::anderson(tol, max_iter);
  }
  throw ConfigError("unknown solver '" + name + "' (expected picard or anderson)");
}

/*
 * --config FILE: key=value lines become --key=value arguments unless the
 * same flag is already on the command line, so explicit flags win.
 */
std::vector<std::string> expand_config(int argc, char **argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> config;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); i++) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        throw ConfigError("--config needs a file argument");
      }
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (!config) {
    return kept;
  }
  std::ifstream in(*config);
  if (!in) {
    throw IoError("cannot read config file " + *config);
  }
  auto given = [&](std::string const &key) {
    std::string const flag = "--" + key;
    for (auto const &a : kept) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        return true;
      }
    }
    return false;
  };
  std::string line;
  int lineno = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    lineno++;
    auto const first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key=value", *config, lineno));
    }
    auto trim = [](std::string s) {
      auto const b = s.find_first_not_of(" \t\r");
      auto const e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string const key = trim(line.substr(0, eq));
    std::string const value = trim(line.substr(eq + 1));
    if (!given(key)) {
      extra.push_back("--" + key + "=" + value);
    }
  }
  kept.insert(kept.end(), extra.begin(), extra.end());
  return kept;
}

void print_metrics_table(MetricsReport const &r, std::string_view title)
{
  fmt::print("{}\n", title);
  fmt::print("  {:<12} {:>12} {:>9} {:>8}\n", "sample", "NMSE", "PSNR", "SSIM");
  for (auto const &m : r.rows) {
    fmt::print("  {:<12} {:>12.4e} {:>9.3f} {:>8.4f}\n", m.id, m.nmse, m.psnr, m.ssim);
  }
  fmt::print(
    "  {:<12} {:>12.4e} {:>9.3f} {:>8.4f}\n  {:<12} {:>12.4e} {:>9.3f} {:>8.4f}\n",
    "mean", r.mean.nmse, r.mean.psnr, r.mean.ssim, "std", r.stddev.nmse, r.stddev.psnr, r.stddev.ssim);
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts
{
  std::string out;
  int n = 8;
  int size = 32;
  int coils = 4;
  std::string mask = "1d-cal";
  double accel = 4.0;
  int acs = 0;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

int cmd_gen_data(GenDataOpts const &o)
{
  if (o.n < 1) {
    throw ConfigError("--n must be >= 1");
  }
  if (o.size < 8) {
    throw ConfigError("--size must be >= 8");
  }
  if (o.coils < 1) {
    throw ConfigError("--coils must be >= 1");
  }
  if (!(o.accel >= 1.0)) {
    throw ConfigError(fmt::format("--accel must be >= 1 (got {})", o.accel));
  }
  if (!(o.noise >= 0.0)) {
    throw ConfigError("--noise must be >= 0");
  }
  DatasetSpec spec;
  spec.count = o.n;
  spec.height = o.size;
  spec.width = o.size;
  spec.coils = o.coils;
  spec.mask.kind = parse_mask_kind(o.mask);
  spec.mask.accel = o.accel;
  if (o.acs > 0) {
    spec.mask.acs = is_1d(spec.mask.kind) ? AcsSpec::lines(o.acs) : AcsSpec::region(o.acs, o.acs);
  }
  spec.noise = o.noise;
  spec.seed = o.seed;
  auto const entries = make_dataset(spec);
  save_dataset(o.out, spec, entries);
  fmt::print("wrote {} samples ({}x{}x{}, {} R={}) to {}\n", entries.size(), o.size, o.size, o.coils, o.mask, o.accel, o.out);
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOpts
{
  std::string data;
  std::string out = "model.ck01";
  std::string report;
  std::string steps;
  int epochs = 50;
  double lr = 1e-4;
  int blocks = 10;
  int features = 16;
  std::string variant = "kspace";
  std::uint64_t seed = 1;
  std::uint64_t shuffle_seed = 2;
  std::string solver = "anderson";
  double tol = 1e-4;
  int max_iter = 60;
  int fixed_iters = 0;
  double backward_tol = 1e-4;
  int backward_max_iter = 200;
  bool quiet = false;
};

int cmd_train(TrainOpts const &o)
{
  if (o.epochs < 1) {
    throw ConfigError(fmt::format("--epochs must be >= 1 (got {})", o.epochs));
  }
  if (!(o.lr > 0.0)) {
    throw ConfigError("--lr must be > 0");
  }
  if (!fs::is_directory(o.data)) {
    throw IoError("dataset directory '" + o.data + "' does not exist");
  }
  auto const loaded = load_dataset(o.data);
  std::vector<TrainingSample> samples;
  for (auto const &e : loaded.entries) {
    samples.push_back({e.sample.full, e.meas});
  }
  GridShape const grid{loaded.spec.height, loaded.spec.width};
  auto params = init_params(parse_variant(o.variant), o.blocks, o.features, loaded.spec.coils, o.seed, grid);

  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.lr = o.lr;
  cfg.forward = make_solver(o.solver, o.tol, o.max_iter);
  cfg.forward.fixed_iterations = o.fixed_iters;
  cfg.backward_tol = o.backward_tol;
  cfg.backward_max_iter = o.backward_max_iter;
  cfg.shuffle_seed = o.shuffle_seed;
  if (!o.quiet) {
    cfg.on_epoch = [](EpochStats const &e) {
      fmt::print(
        "epoch {:4d}  loss {:.6e}  fwd iters {:.1f}  bwd iters {:.1f}  L {:.6f}\n",
        e.epoch, e.mean_loss, e.mean_fwd_iters, e.mean_bwd_iters, e.max_L);
      std::fflush(stdout);
    };
  }
  TrainReport report;
  try {
    std::tie(params, report) = train(samples, cfg, std::move(params));
  } catch (TrainingError const &e) {
    throw CheckFailure(e.what());
  }
  save_checkpoint(o.out, params);
  fs::path const report_path = o.report.empty() ? fs::path(o.out).replace_extension(".csv") : fs::path(o.report);
  write_file(report_path, train_report_csv(report));
  if (!o.steps.empty()) {
    std::string csv = "step,L\n";
    for (std::size_t i = 0; i < report.step_L.size(); i++) {
      csv += fmt::format("{},{:.17g}\n", i + 1, report.step_L[i]);
    }
    write_file(o.steps, csv);
  }
  fmt::print(
    "checkpoint {} (L = {:.6f}), report {}, training residual eps_hat = {:.6e}\n",
    o.out, certified_lipschitz(params).L, report_path.string(), report.eps_hat);
  return kExitOk;
}

// ---------------------------------------------------------------- inputs

struct MeasInput
{
  std::string data;
  int index = 0;
  std::string meas;
  std::string mask;
  std::string reference;
};

struct LoadedInput
{
  Measurement meas;
  std::optional<ComplexTensor> reference;
};

void add_meas_options(CLI::App *cmd, MeasInput &in)
{
  cmd->add_option("--data", in.data, "dataset directory (use with --index)");
  cmd->add_option("--index", in.index, "sample index within --data");
  cmd->add_option("--meas", in.meas, "measurement k-space (CT01)");
  cmd->add_option("--mask", in.mask, "sampling mask (MK01)");
  cmd->add_option("--reference", in.reference, "fully sampled reference k-space (CT01)");
}

LoadedInput load_input(MeasInput const &in)
{
  LoadedInput out;
  if (!in.data.empty()) {
    if (!fs::is_directory(in.data)) {
      throw IoError("dataset directory '" + in.data + "' does not exist");
    }
    std::string const stem = sample_stem(in.index);
    fs::path const dir(in.data);
    require_file(dir / (stem + "_meas.ct01"), "measurement");
    out.meas.y = load_ct01(dir / (stem + "_meas.ct01"));
    out.meas.mask = load_mk01(dir / (stem + "_mask.mk01"));
    out.reference = load_ct01(dir / (stem + "_full.ct01"));
  } else {
    if (in.meas.empty() || in.mask.empty()) {
      throw ConfigError("give either --data/--index or both --meas and --mask");
    }
    require_file(in.meas, "measurement");
    require_file(in.mask, "mask");
    out.meas.y = load_ct01(in.meas);
    out.meas.mask = load_mk01(in.mask);
  }
  if (!in.reference.empty()) {
    require_file(in.reference, "reference");
    out.reference = load_ct01(in.reference);
  }
  if (out.meas.y.grid() != out.meas.mask.grid()) {
    throw ShapeError("measurement and mask grids differ");
  }
  if (out.reference) {
    require_same_shape(*out.reference, out.meas.y, "reference");
  }
  return out;
}

void write_outputs(fs::path const &dir, std::string const &name, ComplexTensor const &k)
{
  save_ct01(dir / (name + ".ct01"), k);
  save_pgm16(dir / (name + ".pgm"), ssos_image(k));
}

struct SpiritOpts
{
  int ksize = 5;
  double lambda = 1e-2;
  int max_iter = 100;
  double tol = 1e-5;
};

void add_spirit_options(CLI::App *cmd, SpiritOpts &s)
{
  cmd->add_option("--spirit-ksize", s.ksize, "SPIRiT kernel size (odd)")->capture_default_str();
  cmd->add_option("--spirit-lambda", s.lambda, "SPIRiT ridge, relative to the normal-matrix diagonal")
    ->capture_default_str();
  cmd->add_option("--spirit-iters", s.max_iter, "SPIRiT POCS iterations")->capture_default_str();
  cmd->add_option("--spirit-tol", s.tol, "SPIRiT POCS tolerance")->capture_default_str();
}

struct Candidate
{
  std::string name;
  ComplexTensor kspace;
};

// Runs the requested baselines into `dir`, returns their outputs.
std::vector<Candidate> run_baselines(
  std::vector<std::string> const &names, Measurement const &meas, SpiritOpts const &so, fs::path const &dir)
{
  std::vector<Candidate> out;
  for (auto const &b : names) {
    if (b == "zerofill") {
      write_outputs(dir, "zerofill", meas.y);
      out.push_back({"zerofill", meas.y});
    } else if (b == "spirit") {
      SpiritKernels const kernels = calibrate_kernels(extract_acs(meas.y, meas.mask), so.ksize, so.lambda);
      save_sp01(dir / "spirit_kernels.sp01", kernels);
      double const opnorm = spirit_operator_norm(kernels, meas.y.grid());
      FixedPointResult const r = spirit_pocs_recon(kernels, meas, so.max_iter, so.tol);
      write_outputs(dir, "spirit", r.solution);
      write_file(dir / "spirit_residuals.csv", diagnostics_csv(r));
      fmt::print(
        "spirit: operator norm {:.4f}, {} iterations, {}\n", opnorm, r.iterations,
        r.converged ? "converged" : "stopped without converging");
      out.push_back({"spirit", r.solution});
    } else {
      throw ConfigError("unknown baseline '" + b + "' (expected zerofill or spirit)");
    }
  }
  return out;
}

// ---------------------------------------------------------------- recon

struct ReconOpts
{
  std::string checkpoint;
  MeasInput input;
  std::string out = "recon";
  std::vector<std::string> baselines;
  std::string solver = "anderson";
  double tol = 1e-5;
  int max_iter = 200;
  SpiritOpts spirit;
};

int cmd_recon(ReconOpts const &o)
{
  require_file(o.checkpoint, "checkpoint");
  LoadedInput const in = load_input(o.input);
  auto const ckpt = load_checkpoint(o.checkpoint, in.meas.y.grid());
  ensure_dir(o.out);
  fs::path const dir(o.out);

  FixedPointResult const r = reconstruct(ckpt.params, in.meas, make_solver(o.solver, o.tol, o.max_iter));
  write_outputs(dir, "recon", r.solution);
  write_file(dir / "residuals.csv", diagnostics_csv(r));
  fmt::print(
    "deq-pocs: L = {:.6f}, {} iterations, {}\n", ckpt.recomputed_L, r.iterations,
    r.converged ? "converged" : "NOT converged");

  std::vector<Candidate> cands{{"deq-pocs", r.solution}};
  auto base = run_baselines(o.baselines, in.meas, o.spirit, dir);
  cands.insert(cands.end(), base.begin(), base.end());
  if (in.reference) {
    bool have_zf = false;
    for (auto const &c : cands) {
      have_zf = have_zf || c.name == "zerofill";
    }
    if (!have_zf) {
      cands.push_back({"zerofill", in.meas.y});
    }
    std::vector<SampleMetrics> rows;
    for (auto const &c : cands) {
      rows.push_back(evaluate_kspace(c.name, c.kspace, *in.reference));
    }
    auto const report = summarize(rows);
    write_file(dir / "metrics.csv", metrics_csv(report));
    fmt::print("  {:<10} {:>12} {:>9} {:>8}\n", "method", "NMSE", "PSNR", "SSIM");
    for (auto const &m : report.rows) {
      fmt::print("  {:<10} {:>12.4e} {:>9.3f} {:>8.4f}\n", m.id, m.nmse, m.psnr, m.ssim);
    }
  }
  return r.converged ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------- baseline

struct BaselineOpts
{
  MeasInput input;
  std::string out = "baseline";
  std::string method = "spirit";
  SpiritOpts spirit;
};

int cmd_baseline(BaselineOpts const &o)
{
  LoadedInput const in = load_input(o.input);
  ensure_dir(o.out);
  auto const cands = run_baselines({o.method}, in.meas, o.spirit, o.out);
  if (in.reference) {
    std::vector<SampleMetrics> rows;
    for (auto const &c : cands) {
      rows.push_back(evaluate_kspace(c.name, c.kspace, *in.reference));
    }
    if (o.method != "zerofill") {
      rows.push_back(evaluate_kspace("zerofill", in.meas.y, *in.reference));
    }
    auto const report = summarize(rows);
    write_file(fs::path(o.out) / "metrics.csv", metrics_csv(report));
    for (auto const &m : report.rows) {
      fmt::print("  {:<10} NMSE {:.4e}  PSNR {:.3f}  SSIM {:.4f}\n", m.id, m.nmse, m.psnr, m.ssim);
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOpts
{
  std::string checkpoint;
  bool fresh = false;
  int blocks = 10;
  int features = 16;
  std::string variant = "kspace";
  std::uint64_t init_seed = 1;
  std::string data;
  int samples = 4;
  int inits = 3;
  double slack = 1.05;
  double tol = 1e-5;
  int max_iter = 400;
  std::vector<double> noise_levels{0.005, 0.01, 0.05, 0.1};
  int trials = 20;
  std::vector<double> init_levels{0.5, 2.0};
  int init_trials = 1;
  std::uint64_t seed = 11;
  std::string out;
};

int cmd_verify(VerifyOpts const &o)
{
  if (o.checkpoint.empty() == !o.fresh) {
    throw ConfigError("give exactly one of --checkpoint or --fresh");
  }
  if (!fs::is_directory(o.data)) {
    throw IoError("dataset directory '" + o.data + "' does not exist");
  }
  auto const loaded = load_dataset(o.data);
  GridShape const grid{loaded.spec.height, loaded.spec.width};
  ConsistencyNetParams params;
  if (o.fresh) {
    params = init_params(parse_variant(o.variant), o.blocks, o.features, loaded.spec.coils, o.init_seed, grid);
  } else {
    require_file(o.checkpoint, "checkpoint");
    params = load_checkpoint(o.checkpoint, grid).params;
  }
  double const L = certified_lipschitz(params).L;
  fmt::print("certificate L = {:.6f}\n", L);

  int const n = std::min<int>(o.samples, static_cast<int>(loaded.entries.size()));
  if (n < 1) {
    throw ConfigError("--samples must be >= 1");
  }
  std::vector<Measurement> meas;
  for (int i = 0; i < n; i++) {
    meas.push_back(loaded.entries[i].meas);
  }
  SolverSettings const picard = SolverSettings::picard(o.tol, o.max_iter);

  auto const conv = verify_convergence(params, meas, o.inits, o.slack, picard, o.seed);
  auto const robust = verify_robustness(params, meas.front(), o.noise_levels, o.trials, derive_seed(o.seed, 1), picard);
  auto const init = verify_init_independence(params, meas.front(), o.init_levels, o.init_trials, derive_seed(o.seed, 2), picard);

  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_file(fs::path(o.out) / "convergence.csv", conv.csv());
    write_file(fs::path(o.out) / "robustness.csv", robust.csv());
    write_file(fs::path(o.out) / "init_independence.csv", init.csv());
  }

  auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
  fmt::print("convergence (rate <= {} L^k r0, inits agree): {}\n", o.slack, verdict(conv.pass));
  for (auto const &r : conv.rows) {
    if (!r.converged || !r.rate_ok) {
      fmt::print("  sample {} init {}: iterations {} converged {} rate_ok {}\n", r.sample, r.init, r.iterations, r.converged, r.rate_ok);
    }
  }
  for (std::size_t s = 0; s < conv.max_pairwise.size(); s++) {
    if (conv.max_pairwise[s] > conv.agreement_limit[s]) {
      fmt::print("  sample {}: inits disagree by {:.3e} > {:.3e}\n", s, conv.max_pairwise[s], conv.agreement_limit[s]);
    }
  }
  fmt::print("robustness (||x_d - x|| <= delta/(1-L) + 20 tol): {}\n", verdict(robust.all_within_bound && robust.recursion_ok));
  for (auto const &t : robust.trials) {
    if (t.margin < -1e-6 * t.bound || !t.recursion_ok) {
      fmt::print(
        "  delta_rel {} trial {}: observed {:.4e} bound {:.4e} recursion {}\n", t.delta_rel, t.trial, t.observed, t.bound,
        t.recursion_ok ? "ok" : "violated");
    }
  }
  fmt::print("init independence (max pairwise {:.3e} <= {:.3e}): {}\n", init.max_pairwise, init.limit, verdict(init.pass));
  bool const ok = conv.pass && robust.all_within_bound && robust.recursion_ok && init.pass;
  return ok ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------- eval

struct EvalOpts
{
  std::vector<std::string> recon;
  std::vector<std::string> reference;
  std::string data;
  std::string recon_dir;
  bool zerofill = false;
  std::string out;
};

int cmd_eval(EvalOpts const &o)
{
  std::vector<SampleMetrics> rows;
  if (!o.data.empty()) {
    if (!fs::is_directory(o.data)) {
      throw IoError("dataset directory '" + o.data + "' does not exist");
    }
    if (o.zerofill == !o.recon_dir.empty()) {
      throw ConfigError("with --data give exactly one of --zerofill or --recon-dir");
    }
    auto const loaded = load_dataset(o.data);
    for (std::size_t i = 0; i < loaded.entries.size(); i++) {
      std::string const stem = sample_stem(static_cast<int>(i));
      auto const &e = loaded.entries[i];
      ComplexTensor recon;
      if (o.zerofill) {
        recon = e.meas.y;
      } else {
        fs::path const p = fs::path(o.recon_dir) / (stem + "_recon.ct01");
        require_file(p, "reconstruction");
        recon = load_ct01(p);
      }
      rows.push_back(evaluate_kspace(stem, recon, e.sample.full));
    }
  } else {
    if (o.recon.empty() || o.recon.size() != o.reference.size()) {
      throw ConfigError("give matching numbers of --recon and --reference files");
    }
    for (std::size_t i = 0; i < o.recon.size(); i++) {
      require_file(o.recon[i], "reconstruction");
      require_file(o.reference[i], "reference");
      rows.push_back(evaluate_kspace(fs::path(o.recon[i]).stem().string(), load_ct01(o.recon[i]), load_ct01(o.reference[i])));
    }
  }
  auto const report = summarize(rows);
  print_metrics_table(report, "NMSE / PSNR (dB) / SSIM on SSoS images");
  if (!o.out.empty()) {
    write_file(o.out, metrics_csv(report));
  }
  return kExitOk;
}

void apply_thread_cap()
{
  if (char const *env = std::getenv("DEQPOCS_THREADS")) {
    try {
      int const n = std::stoi(env);
      if (n >= 1) {
        omp_set_num_threads(n);
      }
    } catch (std::logic_error const &) {
      throw ConfigError(std::string("DEQPOCS_THREADS must be a positive integer, got '") + env + "'");
    }
  }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Calibration-free parallel-MRI k-space interpolation with a certified contractive fixed-point network"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");
  app.footer("Flags may also come from --config FILE (key=value lines, flags on the command line win).\n"
             "DEQPOCS_THREADS caps the number of worker threads.");

  GenDataOpts gen;
  auto *g = app.add_subcommand("gen-data", "Generate a synthetic multi-coil phantom dataset");
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--n", gen.n, "number of samples")->capture_default_str();
  g->add_option("--size", gen.size, "grid size (square)")->capture_default_str();
  g->add_option("--coils", gen.coils, "number of coils")->capture_default_str();
  g->add_option("--mask", gen.mask, "mask kind: 1d-cal, 2d-cal, 1d-free, 2d-free")->capture_default_str();
  g->add_option("--accel", gen.accel, "acceleration factor R >= 1")->capture_default_str();
  g->add_option("--acs", gen.acs, "ACS lines (1-D) or region side (2-D); 0 = scaled default")->capture_default_str();
  g->add_option("--noise", gen.noise, "relative measurement noise level")->capture_default_str();
  g->add_option("--seed", gen.seed, "dataset seed")->capture_default_str();

  TrainOpts tr;
  auto *t = app.add_subcommand("train", "Train the consistency network by implicit differentiation");
  t->add_option("--data", tr.data, "training dataset directory")->required();
  t->add_option("--out", tr.out, "checkpoint path (CK01)")->capture_default_str();
  t->add_option("--report", tr.report, "per-epoch report CSV (default: checkpoint path with .csv)");
  t->add_option("--steps", tr.steps, "per-step certificate CSV");
  t->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
  t->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--blocks", tr.blocks, "residual blocks")->capture_default_str();
  t->add_option("--features", tr.features, "feature width")->capture_default_str();
  t->add_option("--variant", tr.variant, "kspace or hybrid")->capture_default_str();
  t->add_option("--seed", tr.seed, "initialisation seed")->capture_default_str();
  t->add_option("--shuffle-seed", tr.shuffle_seed, "sample order seed")->capture_default_str();
  t->add_option("--solver", tr.solver, "forward solver: anderson or picard")->capture_default_str();
  t->add_option("--tol", tr.tol, "forward relative tolerance")->capture_default_str();
  t->add_option("--max-iter", tr.max_iter, "forward iteration cap")->capture_default_str();
  t->add_option("--fixed-iters", tr.fixed_iters, "run exactly this many forward iterations (0 = tolerance mode)")
    ->capture_default_str();
  t->add_option("--backward-tol", tr.backward_tol, "adjoint relative tolerance")->capture_default_str();
  t->add_option("--backward-max-iter", tr.backward_max_iter, "adjoint iteration cap")->capture_default_str();
  t->add_flag("--quiet", tr.quiet, "no per-epoch output");

  ReconOpts rc;
  auto *r = app.add_subcommand("recon", "Reconstruct a measurement with a trained checkpoint");
  r->add_option("--checkpoint", rc.checkpoint, "checkpoint (CK01)")->required();
  add_meas_options(r, rc.input);
  r->add_option("--out", rc.out, "output directory")->capture_default_str();
  r->add_option("--baseline", rc.baselines, "also run zerofill and/or spirit")->delimiter(',');
  r->add_option("--solver", rc.solver, "anderson or picard")->capture_default_str();
  r->add_option("--tol", rc.tol, "relative tolerance")->capture_default_str();
  r->add_option("--max-iter", rc.max_iter, "iteration cap")->capture_default_str();
  add_spirit_options(r, rc.spirit);

  BaselineOpts bl;
  auto *b = app.add_subcommand("baseline", "Run a classical baseline (SPIRiT POCS or zero filling)");
  add_meas_options(b, bl.input);
  b->add_option("--out", bl.out, "output directory")->capture_default_str();
  b->add_option("--method", bl.method, "spirit or zerofill")->capture_default_str();
  add_spirit_options(b, bl.spirit);

  VerifyOpts vf;
  auto *v = app.add_subcommand("verify", "Check convergence, robustness and init independence of a network");
  v->add_option("--checkpoint", vf.checkpoint, "checkpoint (CK01)");
  v->add_flag("--fresh", vf.fresh, "verify a freshly initialised network instead of a checkpoint");
  v->add_option("--blocks", vf.blocks, "blocks for --fresh")->capture_default_str();
  v->add_option("--features", vf.features, "feature width for --fresh")->capture_default_str();
  v->add_option("--variant", vf.variant, "variant for --fresh")->capture_default_str();
  v->add_option("--init-seed", vf.init_seed, "initialisation seed for --fresh")->capture_default_str();
  v->add_option("--data", vf.data, "dataset directory")->required();
  v->add_option("--samples", vf.samples, "samples used")->capture_default_str();
  v->add_option("--inits", vf.inits, "initialisations per sample")->capture_default_str();
  v->add_option("--slack", vf.slack, "rate check slack")->capture_default_str();
  v->add_option("--tol", vf.tol, "Picard relative tolerance")->capture_default_str();
  v->add_option("--max-iter", vf.max_iter, "Picard iteration cap")->capture_default_str();
  v->add_option("--noise-levels", vf.noise_levels, "relative measurement noise levels")->delimiter(',');
  v->add_option("--trials", vf.trials, "trials per noise level")->capture_default_str();
  v->add_option("--init-levels", vf.init_levels, "relative initial-input noise levels")->delimiter(',');
  v->add_option("--init-trials", vf.init_trials, "trials per initial-input level")->capture_default_str();
  v->add_option("--seed", vf.seed, "seed for inits and noise")->capture_default_str();
  v->add_option("--out", vf.out, "directory for report CSVs");

  EvalOpts ev;
  auto *e = app.add_subcommand("eval", "Compute NMSE / PSNR / SSIM against references");
  e->add_option("--recon", ev.recon, "reconstruction k-space files (CT01)");
  e->add_option("--reference", ev.reference, "reference k-space files (CT01), paired with --recon");
  e->add_option("--data", ev.data, "dataset directory (references from sample_*_full.ct01)");
  e->add_option("--recon-dir", ev.recon_dir, "directory of sample_NNNN_recon.ct01 files, with --data");
  e->add_flag("--zerofill", ev.zerofill, "evaluate the zero-filled measurements of --data");
  e->add_option("--out", ev.out, "metrics CSV path");

  try {
    apply_thread_cap();
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (CLI::ParseError const &err) {
    int const code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (std::exception const &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }

  try {
    if (g->parsed()) {
      return cmd_gen_data(gen);
    }
    if (t->parsed()) {
      return cmd_train(tr);
    }
    if (r->parsed()) {
      return cmd_recon(rc);
    }
    if (b->parsed()) {
      return cmd_baseline(bl);
    }
    if (v->parsed()) {
      return cmd_verify(vf);
    }
    if (e->parsed()) {
      return cmd_eval(ev);
    }
  } catch (CheckFailure const &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitCheck;
  } catch (DivergenceError const &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitCheck;
  } catch (std::exception const &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
