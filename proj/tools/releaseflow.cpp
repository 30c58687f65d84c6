// releaseflow command-line tool: fit, train, bench, synth, replay.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "releaseflow/bench.hpp"
#include "releaseflow/classical.hpp"
#include "releaseflow/dataset.hpp"
#include "releaseflow/error.hpp"
#include "releaseflow/json_io.hpp"
#include "releaseflow/pinn.hpp"
#include "releaseflow/uq.hpp"
#include "releaseflow/version.hpp"

namespace fs = std::filesystem;
using namespace releaseflow;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kNotConverged = 2, kDiverged = 3 };

struct FitArgs {
  std::string data;
  std::string film;
  std::string model = "fick";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FitArgs, data, film, model)

struct TrainArgs {
  std::string data;
  std::string film = "flat";
  int epochs = 2500;
  int colloc = 10000;
  double d = 0.01;
  bool learn_d = false;
  double lr = 1e-3;
  double dropout_keep = 1.0;
  std::uint64_t seed = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainArgs, data, film, epochs, colloc, d, learn_d,
                                                lr, dropout_keep, seed)

struct ComparisonArgs {
  std::string data_dir;
  int epochs = 2500;
  int colloc = 10000;
  double d = 0.01;
  bool learn_d = false;
  std::uint64_t seed = 0;
  int jobs = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ComparisonArgs, data_dir, epochs, colloc, d,
                                                learn_d, seed, jobs)

struct NoiseArgs {
  std::string data_dir;
  int members = 50;
  double sigma = 0.1;
  int passes = 100;
  int epochs = 5000;
  int bpinn_epochs = 10000;
  int colloc = 10000;
  double keep = 0.9;
  double d = 0.01;
  bool learn_d = false;
  bool hmc = false;
  int hmc_samples = 2000;
  int hmc_burn_in = 1000;
  int hmc_leapfrog = 50;
  double hmc_step = 1e-3;
  int hmc_colloc = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NoiseArgs, data_dir, members, sigma, passes, epochs,
                                                bpinn_epochs, colloc, keep, d, learn_d, hmc,
                                                hmc_samples, hmc_burn_in, hmc_leapfrog, hmc_step,
                                                hmc_colloc, seed, jobs)

struct LimitedArgs {
  std::string data_dir;
  int epochs = 2000;
  int colloc = 1000;
  double d = 0.01;
  bool learn_d = false;
  double threshold = 0.05;
  std::vector<int> ns = LimitedDataConfig::default_ns();
  std::vector<std::string> films = {"flat", "wrinkled", "crumpled"};
  std::uint64_t seed = 0;
  int jobs = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LimitedArgs, data_dir, epochs, colloc, d, learn_d,
                                                threshold, ns, films, seed, jobs)

struct SynthArgs {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthArgs, sigma, seed)

// Collects everything the manifest needs while a command runs.
struct Run {
  fs::path out;
  json inputs = json::array();
  json outputs = json::array();

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void progress(const std::string& msg) { std::cerr << "[releaseflow] " << msg << '\n'; }

PinnConfig pinn_config(PinnConfig base, int epochs, int colloc, double d, bool learn_d,
                       std::uint64_t seed) {
  base.epochs = epochs;
  base.n_collocation = colloc;
  base.d = d;
  base.d_mode = learn_d ? DiffusivityMode::Learnable : DiffusivityMode::Fixed;
  base.seed = seed;
  return base;
}

std::vector<ReleaseCurve> bench_curves(const std::string& data_dir, Run& run) {
  if (data_dir.empty()) return shipped_curves();
  run.inputs.push_back(data_dir);
  return load_curve_dir(data_dir);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_fit(const FitArgs& a, Run& run) {
  const ModelKind kind = parse_model_kind(a.model);
  run.inputs.push_back(a.data);
  std::optional<FilmType> film;
  if (!a.film.empty()) film = parse_film(a.film);
  const ReleaseCurve curve = load_curve(a.data, film);
  const FitResult r = fit(kind, curve);
  json j = r;
  j["film"] = to_string(curve.film);
  write_json(run.file("fit_" + std::string(to_string(kind)) + ".json"), j);
  std::string params;
  for (double p : r.model.params) params += (params.empty() ? "" : ",") + fmt(p);
  std::cout << to_string(kind) << " [" << to_string(curve.film) << "] params=(" << params
            << ") mae=" << fmt(r.mae) << " rmse=" << fmt(r.rmse)
            << (r.converged ? " converged" : " NOT converged") << " after " << r.iterations
            << " iterations\n";
  return r.converged ? kOk : kNotConverged;
}

int cmd_train(const TrainArgs& a, Run& run) {
  ReleaseCurve curve;
  if (!a.data.empty()) {
    run.inputs.push_back(a.data);
    curve = load_curve(a.data, parse_film(a.film));
  } else {
    curve = reference_curve(parse_film(a.film));
  }
  PinnConfig cfg = pinn_config(PinnConfig::classical_comparison(), a.epochs, a.colloc, a.d,
                               a.learn_d, a.seed);
  cfg.learning_rate = a.lr;
  cfg.dropout_keep = a.dropout_keep;
  TrainOptions opts;
  const int every = std::max(1, a.epochs / 10);
  opts.on_epoch = [&](int epoch, const LossBreakdown& l) {
    if (epoch % every == 0) progress("epoch " + std::to_string(epoch) + " loss " + fmt(l.total));
  };
  const TrainedPinn model = train(cfg, curve, opts);
  save_trained(run.out / "model", model);
  run.outputs.push_back("model");

  const std::vector<double> pred = release_fractions(model.params, curve.times, cfg.quadrature_points);
  const ErrorMetrics m = metrics(curve.fractions, pred);
  std::string csv = "t,observed,predicted\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    csv += fmt(curve.times[i]) + "," + fmt(curve.fractions[i]) + "," + fmt(pred[i]) + "\n";
  }
  write_text(run.file("predictions.csv"), csv);
  write_json(run.file("metrics.json"), json{{"mae", m.mae}, {"rmse", m.rmse}, {"d", model.d_value}});
  std::cout << "trained " << cfg.epochs << " epochs on " << to_string(curve.film)
            << ": rmse=" << fmt(m.rmse) << " mae=" << fmt(m.mae) << " d=" << fmt(model.d_value)
            << '\n';
  return kOk;
}

int cmd_comparison(const ComparisonArgs& a, Run& run) {
  const auto curves = bench_curves(a.data_dir, run);
  const PinnConfig cfg = pinn_config(PinnConfig::classical_comparison(), a.epochs, a.colloc, a.d,
                                     a.learn_d, a.seed);
  const ComparisonReport rep = run_comparison(curves, cfg, {a.jobs, progress});
  write_comparison_csv(run.file("comparison.csv"), rep);
  write_json(run.file("comparison.json"), rep);
  for (const auto& f : rep.films) std::cout << to_string(f.film) << ": winner " << f.winner << '\n';
  return kOk;
}

int cmd_noise(const NoiseArgs& a, Run& run) {
  const auto curves = bench_curves(a.data_dir, run);
  NoiseBenchConfig cfg;
  cfg.members = a.members;
  cfg.sigma = a.sigma;
  cfg.passes = a.passes;
  cfg.ensemble = pinn_config(PinnConfig::ensemble_member(), a.epochs, a.colloc, a.d, a.learn_d, a.seed);
  cfg.bpinn = pinn_config(PinnConfig::bayesian_dropout(), a.bpinn_epochs, a.colloc, a.d, a.learn_d, a.seed);
  cfg.bpinn.dropout_keep = a.keep;
  cfg.use_hmc = a.hmc;
  cfg.hmc.n_samples = a.hmc_samples;
  cfg.hmc.burn_in = a.hmc_burn_in;
  cfg.hmc.leapfrog_steps = a.hmc_leapfrog;
  cfg.hmc.step_size = a.hmc_step;
  cfg.hmc.seed = a.seed;
  cfg.hmc_collocation = a.hmc_colloc;
  const NoiseReport rep = run_noise_benchmark(curves, cfg, {a.jobs, progress});
  write_noise_csvs(run.out, rep);
  for (const auto& f : rep.films) run.outputs.push_back("noise_bands_" + std::string(to_string(f.film)) + ".csv");
  run.outputs.push_back("noise_metrics.csv");
  write_json(run.file("noise.json"), rep);
  for (const auto& f : rep.films) {
    std::cout << to_string(f.film) << ": ensemble rmse=" << fmt(f.ensemble_metrics.rmse)
              << " std=" << fmt(f.ensemble.mean_std()) << "; " << to_string(f.bpinn.method)
              << " rmse=" << fmt(f.bpinn_metrics.rmse) << " std=" << fmt(f.bpinn.mean_std())
              << '\n';
  }
  return kOk;
}

int cmd_limited(const LimitedArgs& a, Run& run) {
  const auto curves = bench_curves(a.data_dir, run);
  LimitedDataConfig cfg;
  cfg.pinn = pinn_config(PinnConfig::limited_data(), a.epochs, a.colloc, a.d, a.learn_d, a.seed);
  cfg.threshold = a.threshold;
  cfg.ns = a.ns;
  cfg.films.clear();
  for (const auto& f : a.films) cfg.films.push_back(parse_film(f));
  const LimitedDataReport rep = run_limited_data(curves, cfg, {a.jobs, progress});
  write_limited_csv(run.file("limited_rmse.csv"), rep);
  std::string csv = "film,model,minimal_n\n";
  for (const auto& m : rep.minimal) {
    csv += std::string(to_string(m.film)) + "," + m.model + "," +
           (m.n ? std::to_string(*m.n) : std::string()) + "\n";
    std::cout << to_string(m.film) << " " << m.model << ": minimal n = "
              << (m.n ? std::to_string(*m.n) : std::string("none")) << '\n';
  }
  write_text(run.file("limited_minimal.csv"), csv);
  write_json(run.file("limited.json"), rep);
  return kOk;
}

int cmd_synth(const SynthArgs& a, Run& run) {
  for (const ReleaseCurve& c : shipped_curves()) {
    const ReleaseCurve out = a.sigma > 0.0 ? add_gaussian_noise(c, a.sigma, a.seed) : c;
    save_curve(run.file(std::string(to_string(c.film)) + ".csv"), out);
  }
  std::cout << "wrote shipped curves to " << run.out.string() << '\n';
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::NonFiniteLoss:
    case ErrorKind::DivergentTrajectory:
      return kDiverged;
    default:
      return kInputError;
  }
}

fs::path resolve_out(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RELEASEFLOW_OUT"); env != nullptr && *env != '\0') return env;
  return fallback;
}

// Runs one command and writes manifest.json on success and on failure.
int execute(const std::string& command, const json& config, const fs::path& out) {
  Run run{out};
  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  std::string error;
  try {
    fs::create_directories(out);
    if (command == "fit") code = cmd_fit(config.get<FitArgs>(), run);
    else if (command == "train") code = cmd_train(config.get<TrainArgs>(), run);
    else if (command == "bench comparison") code = cmd_comparison(config.get<ComparisonArgs>(), run);
    else if (command == "bench noise") code = cmd_noise(config.get<NoiseArgs>(), run);
    else if (command == "bench limited") code = cmd_limited(config.get<LimitedArgs>(), run);
    else if (command == "synth") code = cmd_synth(config.get<SynthArgs>(), run);
    else fail(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
  } catch (const NonFiniteLossError& e) {
    error = e.what();
    code = kDiverged;
    std::cerr << "error: " << error << " (epoch " << e.epoch() << ")\n";
  } catch (const Error& e) {
    error = e.what();
    code = exit_code_for(e);
    std::cerr << "error: " << error << '\n';
  } catch (const std::exception& e) {
    error = e.what();
    code = kInputError;
    std::cerr << "error: " << error << '\n';
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest{{"command", command},
                {"tool_version", kVersion},
                {"config", config},
                {"seeds", {{"seed", config.value("seed", std::uint64_t{0})}}},
                {"inputs", run.inputs},
                {"output_dir", fs::absolute(out).string()},
                {"outputs", run.outputs},
                {"exit_code", code},
                {"status", code == kOk ? "ok" : "error"},
                {"wall_clock_seconds", seconds}};
  if (!error.empty()) manifest["error"] = error;
  try {
    write_json(out / "manifest.json", manifest);
  } catch (const std::exception& e) {
    std::cerr << "error: could not write manifest: " << e.what() << '\n';
    if (code == kOk) code = kInputError;
  }
  return code;
}

int replay(const std::string& manifest_path, const std::string& out_flag) {
  std::ifstream in(manifest_path);
  if (!in) {
    std::cerr << "error: cannot open manifest '" << manifest_path << "'\n";
    return kInputError;
  }
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    std::cerr << "error: manifest '" << manifest_path << "' is not valid JSON: " << e.what() << '\n';
    return kInputError;
  }
  if (!m.contains("command") || !m.contains("config")) {
    std::cerr << "error: manifest lacks command/config\n";
    return kInputError;
  }
  const fs::path out = resolve_out(out_flag, m.value("output_dir", std::string("run")) + "-replay");
  return execute(m.at("command").get<std::string>(), m.at("config"), out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drug-release modelling: classical fits, physics-informed networks and UQ"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(kVersion));
  std::string out_flag;
  const std::string out_help = "Output directory (falls back to $RELEASEFLOW_OUT, then ./run)";

  FitArgs fit_a;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a classical release model to a CSV curve");
  fit_cmd->add_option("--data", fit_a.data, "Release curve CSV (time,fraction)")->required();
  fit_cmd->add_option("--film", fit_a.film, "Film type (flat|wrinkled|crumpled); default from the file header");
  fit_cmd->add_option("--model", fit_a.model, "Model: fick|higuchi|peppas");
  fit_cmd->add_option("--out", out_flag, out_help);

  TrainArgs train_a;
  auto* train_cmd = app.add_subcommand("train", "Train one physics-informed network");
  train_cmd->add_option("--data", train_a.data, "Release curve CSV; the shipped curve for --film if empty");
  train_cmd->add_option("--film", train_a.film, "Film type");
  train_cmd->add_option("--epochs", train_a.epochs, "Adam epochs");
  train_cmd->add_option("--colloc", train_a.colloc, "Collocation points");
  train_cmd->add_option("--d", train_a.d, "Diffusivity (initial value with --learn-d)");
  train_cmd->add_flag("--learn-d", train_a.learn_d, "Learn the diffusivity");
  train_cmd->add_option("--lr", train_a.lr, "Learning rate");
  train_cmd->add_option("--dropout-keep", train_a.dropout_keep, "Dropout keep probability (1 = off)");
  train_cmd->add_option("--seed", train_a.seed, "Random seed");
  train_cmd->add_option("--out", out_flag, out_help);

  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark protocol");
  bench_cmd->require_subcommand(1);

  ComparisonArgs cmp_a;
  auto* cmp_cmd = bench_cmd->add_subcommand("comparison", "Classical models vs PINN on each film");
  cmp_cmd->add_option("--data-dir", cmp_a.data_dir, "Directory with flat.csv, wrinkled.csv, crumpled.csv (shipped curves if empty)");
  cmp_cmd->add_option("--epochs", cmp_a.epochs, "PINN epochs");
  cmp_cmd->add_option("--colloc", cmp_a.colloc, "Collocation points");
  cmp_cmd->add_option("--d", cmp_a.d, "Diffusivity (initial value with --learn-d)");
  cmp_cmd->add_flag("--learn-d", cmp_a.learn_d, "Learn the diffusivity");
  cmp_cmd->add_option("--seed", cmp_a.seed, "Random seed");
  cmp_cmd->add_option("--jobs", cmp_a.jobs, "Worker threads");
  cmp_cmd->add_option("--out", out_flag, out_help);

  NoiseArgs noise_a;
  auto* noise_cmd = bench_cmd->add_subcommand("noise", "Ensemble and BPINN bands on noised data");
  noise_cmd->add_option("--data-dir", noise_a.data_dir, "Directory with one CSV per film (shipped curves if empty)");
  noise_cmd->add_option("--members", noise_a.members, "Ensemble members");
  noise_cmd->add_option("--sigma", noise_a.sigma, "Gaussian noise std added to the data");
  noise_cmd->add_option("--passes", noise_a.passes, "MC-dropout forward passes");
  noise_cmd->add_option("--epochs", noise_a.epochs, "Epochs per ensemble member");
  noise_cmd->add_option("--bpinn-epochs", noise_a.bpinn_epochs, "Epochs for the BPINN");
  noise_cmd->add_option("--colloc", noise_a.colloc, "Collocation points");
  noise_cmd->add_option("--keep", noise_a.keep, "Dropout keep probability of the BPINN");
  noise_cmd->add_option("--d", noise_a.d, "Diffusivity (initial value with --learn-d)");
  noise_cmd->add_flag("--learn-d", noise_a.learn_d, "Learn the diffusivity");
  noise_cmd->add_flag("--hmc", noise_a.hmc, "Use HMC instead of MC dropout for the BPINN band");
  noise_cmd->add_option("--hmc-samples", noise_a.hmc_samples, "HMC draws kept");
  noise_cmd->add_option("--hmc-burn-in", noise_a.hmc_burn_in, "HMC burn-in iterations");
  noise_cmd->add_option("--hmc-leapfrog", noise_a.hmc_leapfrog, "Leapfrog steps per HMC iteration");
  noise_cmd->add_option("--hmc-step", noise_a.hmc_step, "Leapfrog step size");
  noise_cmd->add_option("--hmc-colloc", noise_a.hmc_colloc, "Collocation points in the HMC likelihood");
  noise_cmd->add_option("--seed", noise_a.seed, "Random seed (noise, init, masks)");
  noise_cmd->add_option("--jobs", noise_a.jobs, "Worker threads for ensemble members");
  noise_cmd->add_option("--out", out_flag, out_help);

  LimitedArgs lim_a;
  auto* lim_cmd = bench_cmd->add_subcommand("limited", "Held-out RMSE when training on the first n points");
  lim_cmd->add_option("--data-dir", lim_a.data_dir, "Directory with one 15-point CSV per film (shipped curves if empty)");
  lim_cmd->add_option("--epochs", lim_a.epochs, "PINN epochs");
  lim_cmd->add_option("--colloc", lim_a.colloc, "Collocation points");
  lim_cmd->add_option("--d", lim_a.d, "Diffusivity (initial value with --learn-d)");
  lim_cmd->add_flag("--learn-d", lim_a.learn_d, "Learn the diffusivity");
  lim_cmd->add_option("--threshold", lim_a.threshold, "RMSE threshold for the minimal n");
  lim_cmd->add_option("--ns", lim_a.ns, "Training prefix lengths")->delimiter(',');
  lim_cmd->add_option("--films", lim_a.films, "Films to run")->delimiter(',');
  lim_cmd->add_option("--seed", lim_a.seed, "Random seed");
  lim_cmd->add_option("--jobs", lim_a.jobs, "Worker threads");
  lim_cmd->add_option("--out", out_flag, out_help);

  SynthArgs synth_a;
  auto* synth_cmd = app.add_subcommand("synth", "Write the shipped reference curves as CSV");
  synth_cmd->add_option("--sigma", synth_a.sigma, "Optional Gaussian noise std");
  synth_cmd->add_option("--seed", synth_a.seed, "Noise seed");
  synth_cmd->add_option("--out", out_flag, out_help);

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its manifest.json");
  replay_cmd->add_option("--manifest", manifest_path, "Path to manifest.json")->required();
  replay_cmd->add_option("--out", out_flag, "Output directory (default: <original>-replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*replay_cmd) return replay(manifest_path, out_flag);
  if (*fit_cmd) return execute("fit", fit_a, resolve_out(out_flag, "run"));
  if (*train_cmd) return execute("train", train_a, resolve_out(out_flag, "run"));
  if (*synth_cmd) return execute("synth", synth_a, resolve_out(out_flag, "run"));
  if (*cmp_cmd) return execute("bench comparison", cmp_a, resolve_out(out_flag, "run"));
  if (*noise_cmd) return execute("bench noise", noise_a, resolve_out(out_flag, "run"));
  if (*lim_cmd) return execute("bench limited", lim_a, resolve_out(out_flag, "run"));
  return kInputError;
}
