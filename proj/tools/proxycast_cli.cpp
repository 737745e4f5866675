// Command-line front end: synthetic task generation, experiment runs,
// parameter sweeps, and replay-log runs, all emitting CSV.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "proxycast/config.hpp"
#include "proxycast/csv.hpp"
#include "proxycast/harness.hpp"
#include "proxycast/neural.hpp"
#include "proxycast/replay_log.hpp"

namespace px = proxycast;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config_path;
  std::string preset;
  std::string forecasters;
  std::string comparator;
  std::string out;
  std::string log_path;
  std::string param;
  std::string values;
  std::string dump_weights_prefix;
  std::optional<int> instances, proxies, outcomes, delay, proxy_delay;
  std::optional<std::int64_t> rounds;
  std::optional<double> mu, epsilon, fraction;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, jobs, smooth_loss, t_scale;
  bool dump_config = false;
};

void add_task_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--preset", f.preset, "Task preset (appendix)");
  cmd->add_option("--instances", f.instances, "Number of instances N");
  cmd->add_option("--proxies", f.proxies, "Number of proxy symbols |Z|");
  cmd->add_option("--outcomes", f.outcomes, "Number of outcomes |Y|");
  cmd->add_option("--rounds", f.rounds, "Number of rounds T");
  cmd->add_option("--delay", f.delay, "Outcome delay D in rounds");
  cmd->add_option("--proxy-delay", f.proxy_delay, "Proxy delay D_z in rounds");
  cmd->add_option("--epsilon", f.epsilon, "Matrix interpolation epsilon in [0,1]");
  cmd->add_option("--mu", f.mu, "Uniform-schedule mixing probability in [0,1]");
  cmd->add_option("--fraction", f.fraction, "Useful-proxy fraction in [0,1]");
}

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "Configuration file (see README for the grammar)");
  cmd->add_option("--seed", f.seed, "Master seed (default 1)");
  cmd->add_option("--trials", f.trials, "Number of independent trials");
  cmd->add_option("--forecasters", f.forecasters,
                  "Comma-separated forecaster specs, e.g. tabular-df:kt,nn-rff:github");
  cmd->add_option("--comparator", f.comparator,
                  "true-model | hindsight | external:<path>");
  cmd->add_option("--jobs", f.jobs, "Parallel trial workers");
  cmd->add_option("-o,--out", f.out, "Output CSV path (default: stdout)");
  cmd->add_option("--smooth-loss", f.smooth_loss,
                  "Centered moving-average window for the emitted loss series");
}

px::RunConfig assemble_config(const Flags& f) {
  px::RunConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + f.config_path);
    cfg = px::parse_config_file(in, f.config_path);
  }
  if (!f.preset.empty()) {
    if (f.preset != "appendix")
      throw std::invalid_argument("unknown task preset '" + f.preset + "'");
    cfg.task = px::TaskParams::appendix_preset();
  }
  if (f.instances) cfg.task.n_instances = *f.instances;
  if (f.proxies) cfg.task.n_proxies = *f.proxies;
  if (f.outcomes) cfg.task.n_outcomes = *f.outcomes;
  if (f.rounds) cfg.task.rounds = *f.rounds;
  if (f.delay) cfg.task.outcome_delay = *f.delay;
  if (f.proxy_delay) cfg.task.proxy_delay = *f.proxy_delay;
  if (f.epsilon) cfg.task.epsilon = *f.epsilon;
  if (f.mu) cfg.task.mu = *f.mu;
  if (f.fraction) cfg.task.useful_proxy_fraction = *f.fraction;
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.smooth_loss) cfg.smooth_loss = *f.smooth_loss;
  if (!f.comparator.empty()) cfg.comparator = f.comparator;
  if (!f.out.empty()) cfg.out_path = f.out;
  if (!f.forecasters.empty()) {
    cfg.forecaster_specs.clear();
    std::istringstream ss(f.forecasters);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cfg.forecaster_specs.push_back(item);
    }
  }
  return cfg;
}

std::vector<double> load_external_losses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open comparator file: " + path);
  std::vector<double> losses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    losses.push_back(
        px::detail::parse_double_value(line, path + ":" + std::to_string(line_no)));
  }
  return losses;
}

px::ExperimentSpec to_experiment_spec(const px::RunConfig& cfg) {
  px::ExperimentSpec spec;
  spec.task = cfg.task;
  spec.n_trials = cfg.trials;
  spec.seed = cfg.seed;
  spec.jobs = cfg.jobs;
  const auto [kind, path] = px::parse_comparator_string(cfg.comparator);
  spec.comparator = kind;
  if (kind == px::ComparatorKind::External) spec.external_losses = load_external_losses(path);
  return spec;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + out_path);
}

std::string sanitize_name(std::string name) {
  for (char& c : name)
    if (c == ':' || c == '/') c = '-';
  return name;
}

// Re-runs trial 0 sequentially for each neural forecaster and dumps its
// trained weights to <prefix><name>.weights.csv (debugging aid).
void dump_trained_weights(const px::RunConfig& cfg, const px::ExperimentSpec& spec,
                          const std::string& prefix) {
  const std::uint64_t trial_seed = px::mix_seed(spec.seed, 0);
  px::TaskParams params = spec.task;
  params.seed = px::mix_seed(trial_seed, px::kTrialTaskTag);
  const px::GeneratedTask generated = px::generate_task(params);
  for (std::size_t j = 0; j < cfg.forecaster_specs.size(); ++j) {
    const px::ForecasterChoice choice = px::parse_forecaster_spec(cfg.forecaster_specs[j]);
    if (choice.kind == px::ForecasterKind::TabularDirect ||
        choice.kind == px::ForecasterKind::TabularFactored)
      continue;
    const px::NeuralConfig nc = px::resolve_neural_config(cfg, choice);
    const std::uint64_t f_seed = px::mix_seed(trial_seed, px::kTrialForecasterBaseTag + j);
    std::unique_ptr<px::Forecaster> forecaster;
    const px::NeuralDirectForecaster* df = nullptr;
    const px::NeuralFactoredForecaster* ff = nullptr;
    const px::NeuralResidualForecaster* rff = nullptr;
    switch (choice.kind) {
      case px::ForecasterKind::NeuralDirect: {
        auto p = std::make_unique<px::NeuralDirectForecaster>(generated.task.spaces, nc, f_seed);
        df = p.get();
        forecaster = std::move(p);
        break;
      }
      case px::ForecasterKind::NeuralFactored: {
        auto p = std::make_unique<px::NeuralFactoredForecaster>(generated.task.spaces, nc, f_seed);
        ff = p.get();
        forecaster = std::move(p);
        break;
      }
      default: {
        auto p = std::make_unique<px::NeuralResidualForecaster>(generated.task.spaces, nc, f_seed);
        rff = p.get();
        forecaster = std::move(p);
        break;
      }
    }
    px::ComparatorSpec comparator{px::ComparatorKind::Hindsight, nullptr, 1e-6, {}};
    px::run_trial(*forecaster, generated.stream, generated.task.spaces, comparator);
    const std::string path = prefix + sanitize_name(cfg.forecaster_specs[j]) + ".weights.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open weight dump file: " + path);
    if (df) df->dump_weights(out);
    if (ff) ff->dump_weights(out);
    if (rff) rff->dump_weights(out);
  }
}

int cmd_gen_task(const Flags& flags) {
  px::RunConfig cfg = assemble_config(flags);
  cfg.task.seed = cfg.seed;  // gen-task uses the master seed as the task seed
  cfg.task.validate();
  if (flags.out.empty()) throw std::invalid_argument("gen-task requires -o <directory>");
  const fs::path dir(flags.out);
  if (!fs::is_directory(dir))
    throw std::runtime_error("output directory does not exist: " + dir.string());

  const px::GeneratedTask generated = px::generate_task(cfg.task);
  {
    std::ofstream out(dir / "instance_to_proxy.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write instance_to_proxy.csv");
    px::write_matrix_csv(out, generated.task.instance_to_proxy);
  }
  {
    std::ofstream out(dir / "proxy_to_outcome.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write proxy_to_outcome.csv");
    px::write_matrix_csv(out, generated.task.proxy_to_outcome);
  }
  {
    std::ofstream out(dir / "stream.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write stream.csv");
    px::write_replay_log(out, generated.task.spaces, generated.stream);
  }
  std::cerr << "wrote task files to " << dir.string() << "\n";
  return 0;
}

int cmd_run(const Flags& flags) {
  px::RunConfig cfg = assemble_config(flags);
  px::validate_run_config(cfg);
  if (flags.dump_config) {
    px::dump_config(std::cout, cfg);
    return 0;
  }
  const auto setups = px::build_forecaster_setups(cfg);
  const px::ExperimentSpec spec = to_experiment_spec(cfg);
  const px::ExperimentResult result = px::run_experiment(spec, setups);
  std::ostringstream csv;
  px::write_run_csv(csv, result, cfg.smooth_loss);
  write_output(cfg.out_path, csv.str());
  if (!flags.dump_weights_prefix.empty())
    dump_trained_weights(cfg, spec, flags.dump_weights_prefix);
  return 0;
}

int cmd_sweep(const Flags& flags) {
  px::RunConfig cfg = assemble_config(flags);
  px::validate_run_config(cfg);
  if (flags.param != "mu" && flags.param != "delay" && flags.param != "fraction")
    throw std::invalid_argument("--param must be one of mu, delay, fraction");
  std::vector<double> values;
  {
    std::istringstream ss(flags.values);
    std::string item;
    while (std::getline(ss, item, ','))
      values.push_back(px::detail::parse_double_value(item, "--values"));
  }
  if (values.empty()) throw std::invalid_argument("--values must list at least one value");

  const auto setups = px::build_forecaster_setups(cfg);
  px::ExperimentSpec base = to_experiment_spec(cfg);
  std::vector<px::SweepRow> rows;
  if (flags.param == "mu") {
    rows = px::sweep_mu(base, values, setups);
  } else if (flags.param == "fraction") {
    rows = px::sweep_fraction(base, values, setups);
  } else {
    rows = px::sweep_delay(base, values, flags.t_scale.value_or(4), setups);
  }
  std::ostringstream csv;
  px::write_sweep_csv(csv, rows);
  write_output(cfg.out_path, csv.str());
  return 0;
}

int cmd_replay(const Flags& flags) {
  px::RunConfig cfg = assemble_config(flags);
  if (flags.log_path.empty()) throw std::invalid_argument("replay requires --log <path>");
  if (cfg.comparator == "true-model")
    throw std::invalid_argument(
        "replay logs carry no generating model; use --comparator hindsight or external:<path>");
  px::validate_run_config(cfg);
  const px::ReplayLog log = px::load_replay_log(flags.log_path);
  const px::EventStream stream = log.to_stream();

  const auto setups = px::build_forecaster_setups(cfg);
  px::ExperimentSpec spec = to_experiment_spec(cfg);
  spec.replay_stream = &stream;
  spec.replay_spaces = log.spaces;
  const px::ExperimentResult result = px::run_experiment(spec, setups);
  std::ostringstream csv;
  px::write_run_csv(csv, result, cfg.smooth_loss);
  write_output(cfg.out_path, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online forecasting of delayed outcomes via less-delayed proxies"};
  app.require_subcommand(1);

  Flags gen_flags, run_flags, sweep_flags, replay_flags;

  CLI::App* gen = app.add_subcommand("gen-task", "Generate a synthetic task and event stream");
  add_task_flags(gen, gen_flags);
  gen->add_option("--seed", gen_flags.seed, "Task seed (default 1)");
  gen->add_option("-o,--out", gen_flags.out, "Output directory (must exist)")->required();

  CLI::App* run = app.add_subcommand("run", "Run forecasters over a synthetic task");
  add_task_flags(run, run_flags);
  add_run_flags(run, run_flags);
  run->add_flag("--dump-config", run_flags.dump_config,
                "Print the effective configuration and exit");
  run->add_option("--dump-weights", run_flags.dump_weights_prefix,
                  "Dump trial-0 trained neural weights to <prefix><name>.weights.csv");

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep mu, delay, or fraction");
  add_task_flags(sweep, sweep_flags);
  add_run_flags(sweep, sweep_flags);
  sweep->add_option("--param", sweep_flags.param, "Swept parameter: mu | delay | fraction")
      ->required();
  sweep->add_option("--values", sweep_flags.values, "Comma-separated sweep values")->required();
  sweep->add_option("--t-scale", sweep_flags.t_scale,
                    "Delay sweeps run at T = t-scale * N * D (default 4)");

  CLI::App* replay = app.add_subcommand("replay", "Run forecasters over a replay log");
  add_run_flags(replay, replay_flags);
  replay->add_option("--log", replay_flags.log_path, "Replay log path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_task(gen_flags);
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags);
    if (replay->parsed()) return cmd_replay(replay_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
