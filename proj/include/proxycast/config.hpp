#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proxycast/csv.hpp"
#include "proxycast/harness.hpp"
#include "proxycast/neural.hpp"
#include "proxycast/tabular.hpp"

namespace proxycast {

// Seed used when none is given, fixed so unseeded runs stay reproducible.
inline constexpr std::uint64_t kDefaultSeed = 1;

enum class ForecasterKind {
  TabularDirect,
  TabularFactored,
  NeuralDirect,
  NeuralFactored,
  NeuralResidual,
};

// A forecaster spec string is `kind[:variant]` where kind is one of
// tabular-df, tabular-ff, nn-df, nn-ff, nn-rff; the variant selects the
// estimator (laplace, kt) for tabular kinds and the neural preset
// (github, marketplace) for nn kinds.
struct ForecasterChoice {
  ForecasterKind kind = ForecasterKind::TabularDirect;
  double estimator_alpha = 1.0;
  std::string neural_preset;  // empty: use the config default
  std::string spec;           // normalized spec string, used as the display name
};

inline ForecasterChoice parse_forecaster_spec(const std::string& raw) {
  const std::size_t colon = raw.find(':');
  const std::string kind = raw.substr(0, colon);
  const std::string variant = colon == std::string::npos ? "" : raw.substr(colon + 1);

  ForecasterChoice choice;
  choice.spec = raw;
  const bool tabular = kind == "tabular-df" || kind == "tabular-ff";
  if (kind == "tabular-df") choice.kind = ForecasterKind::TabularDirect;
  else if (kind == "tabular-ff") choice.kind = ForecasterKind::TabularFactored;
  else if (kind == "nn-df") choice.kind = ForecasterKind::NeuralDirect;
  else if (kind == "nn-ff") choice.kind = ForecasterKind::NeuralFactored;
  else if (kind == "nn-rff") choice.kind = ForecasterKind::NeuralResidual;
  else
    throw std::invalid_argument(
        "unknown forecaster '" + raw +
        "' (expected tabular-df, tabular-ff, nn-df, nn-ff or nn-rff)");

  if (tabular) {
    if (variant.empty() || variant == "laplace") choice.estimator_alpha = 1.0;
    else if (variant == "kt") choice.estimator_alpha = 0.5;
    else
      throw std::invalid_argument("unknown estimator '" + variant +
                                  "' for " + kind + " (expected laplace or kt)");
  } else if (!variant.empty()) {
    if (variant != "github" && variant != "marketplace")
      throw std::invalid_argument("unknown neural preset '" + variant +
                                  "' for " + kind + " (expected github or marketplace)");
    choice.neural_preset = variant;
  }
  return choice;
}

// Declarative run description mirroring the CLI. Comparator strings are
// true-model, hindsight, or external:<path>.
struct RunConfig {
  TaskParams task;
  std::vector<std::string> forecaster_specs;
  std::string neural_preset = "github";  // default preset for nn specs without one
  std::vector<std::pair<std::string, std::string>> neural_overrides;
  int trials = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string comparator = "true-model";
  int jobs = 1;
  std::string out_path;  // empty writes to stdout
  int smooth_loss = 1;

  bool operator==(const RunConfig&) const = default;
};

inline std::pair<ComparatorKind, std::string> parse_comparator_string(const std::string& s) {
  if (s.rfind("external:", 0) == 0) {
    const std::string path = s.substr(9);
    if (path.empty()) throw std::invalid_argument("external comparator needs a path");
    return {ComparatorKind::External, path};
  }
  return {parse_comparator_kind(s), ""};
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double_value(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size())
    throw std::invalid_argument(where + ": expected a number, got '" + v + "'");
  return out;
}

inline std::int64_t parse_int_value(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size())
    throw std::invalid_argument(where + ": expected an integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint_value(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size())
    throw std::invalid_argument(where + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_int_value(trim(item), where)));
  if (out.empty()) throw std::invalid_argument(where + ": expected a comma-separated list");
  return out;
}

}  // namespace detail

inline void apply_neural_override(NeuralConfig& cfg, const std::string& key,
                                  const std::string& value, const std::string& where) {
  if (key == "hidden") cfg.hidden_sizes = detail::parse_int_list(value, where);
  else if (key == "learning_rate") cfg.learning_rate = detail::parse_double_value(value, where);
  else if (key == "outcome_learning_rate")
    cfg.outcome_learning_rate = detail::parse_double_value(value, where);
  else if (key == "l2_scale") cfg.l2_scale = detail::parse_double_value(value, where);
  else if (key == "buffer") cfg.buffer_capacity = static_cast<int>(detail::parse_int_value(value, where));
  else if (key == "min_fill") cfg.min_fill = static_cast<int>(detail::parse_int_value(value, where));
  else if (key == "batch") cfg.batch_size = static_cast<int>(detail::parse_int_value(value, where));
  else if (key == "steps_per_trigger")
    cfg.cadence.steps_per_trigger = static_cast<int>(detail::parse_int_value(value, where));
  else if (key == "trigger_every")
    cfg.cadence.trigger_every_rounds = static_cast<int>(detail::parse_int_value(value, where));
  else
    throw std::invalid_argument(where + ": unknown neural key '" + key + "'");
}

// Effective neural config for one forecaster: its preset (or the config
// default), with [neural] overrides applied on top.
inline NeuralConfig resolve_neural_config(const RunConfig& cfg, const ForecasterChoice& choice) {
  NeuralConfig nc = NeuralConfig::preset(
      choice.neural_preset.empty() ? cfg.neural_preset : choice.neural_preset);
  for (const auto& [key, value] : cfg.neural_overrides)
    apply_neural_override(nc, key, value, "neural override");
  nc.validate();
  return nc;
}

// Validates everything that can fail before any trial runs and returns the
// per-forecaster factories.
inline std::vector<ForecasterSetup> build_forecaster_setups(const RunConfig& cfg) {
  if (cfg.forecaster_specs.empty())
    throw std::invalid_argument("at least one forecaster must be configured");
  std::vector<ForecasterSetup> setups;
  setups.reserve(cfg.forecaster_specs.size());
  for (const auto& spec : cfg.forecaster_specs) {
    const ForecasterChoice choice = parse_forecaster_spec(spec);
    ForecasterSetup setup;
    setup.name = choice.spec;
    switch (choice.kind) {
      case ForecasterKind::TabularDirect:
        setup.build = [alpha = choice.estimator_alpha](const ProblemSpaces& spaces, std::uint64_t) {
          return std::unique_ptr<Forecaster>(new TabularDirectForecaster(spaces, alpha));
        };
        break;
      case ForecasterKind::TabularFactored:
        setup.build = [alpha = choice.estimator_alpha](const ProblemSpaces& spaces, std::uint64_t) {
          return std::unique_ptr<Forecaster>(new TabularFactoredForecaster(spaces, alpha));
        };
        break;
      case ForecasterKind::NeuralDirect: {
        const NeuralConfig nc = resolve_neural_config(cfg, choice);
        setup.build = [nc](const ProblemSpaces& spaces, std::uint64_t seed) {
          return std::unique_ptr<Forecaster>(new NeuralDirectForecaster(spaces, nc, seed));
        };
        break;
      }
      case ForecasterKind::NeuralFactored: {
        const NeuralConfig nc = resolve_neural_config(cfg, choice);
        setup.build = [nc](const ProblemSpaces& spaces, std::uint64_t seed) {
          return std::unique_ptr<Forecaster>(new NeuralFactoredForecaster(spaces, nc, seed));
        };
        break;
      }
      case ForecasterKind::NeuralResidual: {
        const NeuralConfig nc = resolve_neural_config(cfg, choice);
        setup.build = [nc](const ProblemSpaces& spaces, std::uint64_t seed) {
          return std::unique_ptr<Forecaster>(new NeuralResidualForecaster(spaces, nc, seed));
        };
        break;
      }
    }
    setups.push_back(std::move(setup));
  }
  return setups;
}

inline void validate_run_config(const RunConfig& cfg) {
  cfg.task.validate();
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (cfg.smooth_loss < 1) throw std::invalid_argument("smooth_loss must be >= 1");
  parse_comparator_string(cfg.comparator);
  for (const auto& spec : cfg.forecaster_specs) {
    const ForecasterChoice choice = parse_forecaster_spec(spec);
    if (choice.kind != ForecasterKind::TabularDirect &&
        choice.kind != ForecasterKind::TabularFactored)
      resolve_neural_config(cfg, choice);
  }
}

// Config file grammar (flat key = value lines under [section] headers,
// '#' starts a comment line, unknown keys are rejected):
//
//   [task]        preset | instances proxies outcomes rounds delay
//                 proxy_delay epsilon mu fraction seed(task draw only via run seed)
//   [forecasters] forecaster = <spec>      (repeatable)
//   [neural]      preset | hidden learning_rate outcome_learning_rate
//                 l2_scale buffer min_fill batch steps_per_trigger trigger_every
//   [run]         trials seed comparator jobs out smooth_loss
inline RunConfig parse_config_file(std::istream& in, const std::string& source_name) {
  RunConfig cfg;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::ostringstream where_s;
    where_s << source_name << ":" << line_no;
    const std::string where = where_s.str();

    if (text.front() == '[') {
      if (text.back() != ']') throw std::invalid_argument(where + ": malformed section header");
      section = text.substr(1, text.size() - 2);
      if (section != "task" && section != "forecasters" && section != "neural" && section != "run")
        throw std::invalid_argument(where + ": unknown section '" + section + "'");
      continue;
    }

    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(where + ": expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument(where + ": expected 'key = value'");

    if (section == "task") {
      if (key == "preset") {
        if (value != "appendix")
          throw std::invalid_argument(where + ": unknown task preset '" + value + "'");
        cfg.task = TaskParams::appendix_preset();
      } else if (key == "instances") cfg.task.n_instances = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "proxies") cfg.task.n_proxies = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "outcomes") cfg.task.n_outcomes = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "rounds") cfg.task.rounds = detail::parse_int_value(value, where);
      else if (key == "delay") cfg.task.outcome_delay = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "proxy_delay") cfg.task.proxy_delay = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "epsilon") cfg.task.epsilon = detail::parse_double_value(value, where);
      else if (key == "mu") cfg.task.mu = detail::parse_double_value(value, where);
      else if (key == "fraction") cfg.task.useful_proxy_fraction = detail::parse_double_value(value, where);
      else throw std::invalid_argument(where + ": unknown task key '" + key + "'");
    } else if (section == "forecasters") {
      if (key != "forecaster")
        throw std::invalid_argument(where + ": unknown forecasters key '" + key + "'");
      parse_forecaster_spec(value);  // existence check
      cfg.forecaster_specs.push_back(value);
    } else if (section == "neural") {
      if (key == "preset") {
        NeuralConfig::preset(value);  // existence check
        cfg.neural_preset = value;
      } else {
        NeuralConfig probe = NeuralConfig::github();
        apply_neural_override(probe, key, value, where);  // key/value check
        cfg.neural_overrides.emplace_back(key, value);
      }
    } else if (section == "run") {
      if (key == "trials") cfg.trials = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "seed") cfg.seed = detail::parse_uint_value(value, where);
      else if (key == "comparator") cfg.comparator = value;
      else if (key == "jobs") cfg.jobs = static_cast<int>(detail::parse_int_value(value, where));
      else if (key == "out") cfg.out_path = value;
      else if (key == "smooth_loss") cfg.smooth_loss = static_cast<int>(detail::parse_int_value(value, where));
      else throw std::invalid_argument(where + ": unknown run key '" + key + "'");
    } else {
      throw std::invalid_argument(where + ": key outside any section");
    }
  }
  return cfg;
}

// Emits the effective configuration; re-parsing the output yields an
// equivalent RunConfig.
inline void dump_config(std::ostream& out, const RunConfig& cfg) {
  out << "[task]\n";
  out << "instances = " << cfg.task.n_instances << "\n";
  out << "proxies = " << cfg.task.n_proxies << "\n";
  out << "outcomes = " << cfg.task.n_outcomes << "\n";
  out << "rounds = " << cfg.task.rounds << "\n";
  out << "delay = " << cfg.task.outcome_delay << "\n";
  out << "proxy_delay = " << cfg.task.proxy_delay << "\n";
  out << "epsilon = " << format_double(cfg.task.epsilon, "%.17g") << "\n";
  out << "mu = " << format_double(cfg.task.mu, "%.17g") << "\n";
  out << "fraction = " << format_double(cfg.task.useful_proxy_fraction, "%.17g") << "\n";
  out << "\n[forecasters]\n";
  for (const auto& spec : cfg.forecaster_specs) out << "forecaster = " << spec << "\n";
  out << "\n[neural]\n";
  out << "preset = " << cfg.neural_preset << "\n";
  for (const auto& [key, value] : cfg.neural_overrides) out << key << " = " << value << "\n";
  out << "\n[run]\n";
  out << "trials = " << cfg.trials << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "comparator = " << cfg.comparator << "\n";
  out << "jobs = " << cfg.jobs << "\n";
  if (!cfg.out_path.empty()) out << "out = " << cfg.out_path << "\n";
  out << "smooth_loss = " << cfg.smooth_loss << "\n";
}

}  // namespace proxycast
