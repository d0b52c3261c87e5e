#include "stfem_cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace stfem::cli {

namespace {

const std::set<std::string> kTargets{"smooth", "hat", "cube", "noisy", "zero"};
const std::set<std::string> kFormats{"csv", "json", "gnuplot", "vtk"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  if (!value.empty() && value.back() == ',') items.emplace_back();
  return items;
}

std::optional<double> parse_plain(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + text.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(begin, &end, 10);
  if (end != begin + text.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string coupling_name(Coupling c) { return to_string(c); }

std::optional<Coupling> parse_coupling(const std::string& s) {
  if (s == "rho_eq_h2") return Coupling::RhoEqH2;
  if (s == "fixed_rho") return Coupling::FixedRho;
  if (s == "noise") return Coupling::Noise;
  return std::nullopt;
}

std::optional<StudyKind> parse_study(const std::string& s) {
  if (s == "convergence") return StudyKind::Convergence;
  if (s == "noise") return StudyKind::Noise;
  if (s == "adaptive") return StudyKind::Adaptive;
  if (s == "solve") return StudyKind::Solve;
  return std::nullopt;
}

class Parser {
 public:
  ExperimentConfig run(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string content = trim(raw.substr(0, raw.find('#')));
      if (content.empty()) continue;
      const auto eq = content.find('=');
      if (eq == std::string::npos) {
        error(line, "expected 'key = value'");
        continue;
      }
      const std::string key = trim(content.substr(0, eq));
      const std::string value = trim(content.substr(eq + 1));
      if (key.empty()) {
        error(line, "missing key before '='");
        continue;
      }
      const auto handler = handlers().find(key);
      if (handler == handlers().end()) {
        error(line, "unknown key '" + key + "'");
        continue;
      }
      if (auto [it, fresh] = seen_.emplace(key, line); !fresh) {
        error(line, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
        continue;
      }
      if (value.empty()) {
        error(line, "missing value for '" + key + "'");
        continue;
      }
      line_ = line;
      handler->second(*this, key, value);
    }
    check();
    if (!issues_.empty()) throw ConfigError(issues_);
    return config_;
  }

 private:
  using Handler = std::function<void(Parser&, const std::string&, const std::string&)>;

  static const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table{
        {"name", [](Parser& p, auto&, auto& v) { p.config_.name = v; }},
        {"study",
         [](Parser& p, auto& k, auto& v) {
           if (auto s = parse_study(v)) {
             p.config_.study = *s;
           } else {
             p.error(p.line_, k + ": expected convergence, noise, adaptive or solve, got '" + v + "'");
           }
         }},
        {"dimension", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.dimension); }},
        {"target",
         [](Parser& p, auto& k, auto& v) {
           if (kTargets.count(v)) {
             p.config_.target = v;
           } else {
             p.error(p.line_, k + ": unknown target '" + v + "' (smooth, hat, cube, noisy, zero)");
           }
         }},
        {"levels",
         [](Parser& p, auto& k, auto& v) {
           std::vector<int> levels;
           for (const auto& item : split_list(v)) {
             int m = 0;
             if (!p.integer(k, item, m)) return;
             levels.push_back(m);
           }
           p.config_.levels = levels;
         }},
        {"cells", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.cells); }},
        {"coupling",
         [](Parser& p, auto& k, auto& v) {
           if (auto c = parse_coupling(v)) {
             p.config_.coupling = *c;
           } else {
             p.error(p.line_, k + ": expected rho_eq_h2, fixed_rho or noise, got '" + v + "'");
           }
         }},
        {"rho",
         [](Parser& p, auto& k, auto& v) {
           double rho = 0.0;
           if (p.real(k, v, rho)) p.config_.rho = rho;
         }},
        {"noise_levels",
         [](Parser& p, auto& k, auto& v) {
           std::vector<double> deltas;
           for (const auto& item : split_list(v)) {
             double d = 0.0;
             if (!p.real(k, item, d)) return;
             deltas.push_back(d);
           }
           p.config_.noise_levels = deltas;
         }},
        {"noise_delta", [](Parser& p, auto& k, auto& v) { p.real(k, v, p.config_.noise_delta); }},
        {"method",
         [](Parser& p, auto& k, auto& v) {
           try {
             p.config_.method = parse_solve_method(v);
           } catch (const std::exception&) {
             p.error(p.line_, k + ": expected saddle_gmres_ilu0, schur_cg or dense_lu, got '" + v + "'");
           }
         }},
        {"gmres_tol", [](Parser& p, auto& k, auto& v) { p.real(k, v, p.config_.gmres_tol); }},
        {"gmres_restart", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.gmres_restart); }},
        {"gmres_maxit", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.gmres_maxit); }},
        {"error_depth",
         [](Parser& p, auto& k, auto& v) {
           int d = 0;
           if (p.integer(k, v, d)) p.config_.error_depth = d;
         }},
        {"estimator_depth", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.estimator_depth); }},
        {"theta", [](Parser& p, auto& k, auto& v) { p.real(k, v, p.config_.theta); }},
        {"initial_cells", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.initial_cells); }},
        {"max_dofs",
         [](Parser& p, auto& k, auto& v) {
           long long n = 0;
           if (p.integer(k, v, n)) {
             if (n < 1) {
               p.error(p.line_, k + " must be positive");
             } else {
               p.config_.max_dofs = static_cast<std::size_t>(n);
             }
           }
         }},
        {"max_levels", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.max_levels); }},
        {"output_dir", [](Parser& p, auto&, auto& v) { p.config_.output_dir = v; }},
        {"formats",
         [](Parser& p, auto& k, auto& v) {
           std::vector<std::string> formats;
           for (const auto& item : split_list(v)) {
             if (!kFormats.count(item)) {
               p.error(p.line_, k + ": unknown format '" + item + "' (csv, json, gnuplot, vtk)");
               return;
             }
             if (std::find(formats.begin(), formats.end(), item) == formats.end()) formats.push_back(item);
           }
           p.config_.formats = formats;
         }},
        {"threads", [](Parser& p, auto& k, auto& v) { p.integer(k, v, p.config_.threads); }},
        {"slice_time", [](Parser& p, auto& k, auto& v) { p.real(k, v, p.config_.slice_time); }},
    };
    return table;
  }

  void error(int line, std::string message) { issues_.push_back({line, std::move(message)}); }

  template <class Int>
  bool integer(const std::string& key, const std::string& value, Int& out) {
    const auto v = parse_integer(value);
    if (!v || *v < static_cast<long long>(std::numeric_limits<Int>::min()) ||
        *v > static_cast<long long>(std::numeric_limits<Int>::max())) {
      error(line_, key + ": expected an integer, got '" + value + "'");
      return false;
    }
    out = static_cast<Int>(*v);
    return true;
  }

  bool real(const std::string& key, const std::string& value, double& out) {
    const auto v = parse_number(value);
    if (!v) {
      error(line_, key + ": expected a number, got '" + value + "'");
      return false;
    }
    out = *v;
    return true;
  }

  int line_of(const std::string& key) const {
    const auto it = seen_.find(key);
    return it == seen_.end() ? 0 : it->second;
  }

  void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) error(line_of(key), message);
  }

  void check() {
    const ExperimentConfig& c = config_;
    if (!seen_.count("dimension")) error(0, "missing required key 'dimension'");
    if (!seen_.count("target")) error(0, "missing required key 'target'");
    require(c.dimension >= 2 && c.dimension <= 4, "dimension", "dimension must be 2, 3 or 4");
    require(!c.rho || *c.rho > 0.0, "rho", "rho must be positive");
    require(c.cells >= 1, "cells", "cells must be positive");
    require(std::all_of(c.levels.begin(), c.levels.end(), [](int m) { return m >= 1; }), "levels",
            "levels must be positive cell counts");
    require(c.noise_delta >= 0.0, "noise_delta", "noise_delta must be nonnegative");
    require(c.gmres_tol > 0.0 && c.gmres_tol < 1.0, "gmres_tol", "gmres_tol must lie in (0, 1)");
    require(c.gmres_restart >= 1, "gmres_restart", "gmres_restart must be positive");
    require(c.gmres_maxit >= 1, "gmres_maxit", "gmres_maxit must be positive");
    require(!c.error_depth || (*c.error_depth >= 0 && *c.error_depth <= 8), "error_depth",
            "error_depth must lie in [0, 8]");
    require(c.estimator_depth >= 0 && c.estimator_depth <= 8, "estimator_depth",
            "estimator_depth must lie in [0, 8]");
    require(c.theta > 0.0 && c.theta <= 1.0, "theta", "theta must lie in (0, 1]");
    require(c.initial_cells >= 1, "initial_cells", "initial_cells must be positive");
    require(c.max_levels >= 1, "max_levels", "max_levels must be positive");
    require(c.threads >= 1, "threads", "threads must be positive");
    require(c.slice_time >= 0.0 && c.slice_time <= 1.0, "slice_time", "slice_time must lie in [0, 1]");
    require(!c.formats.empty(), "formats", "at least one output format is needed");
    require(c.target != "noisy" || c.dimension == 3, "target", "the noisy target needs dimension = 3");

    switch (c.study) {
      case StudyKind::Convergence:
        require(!c.levels.empty(), "levels", "a convergence study needs levels");
        require(c.coupling != Coupling::Noise, "coupling", "coupling = noise needs study = noise");
        require(c.target != "noisy", "target", "the noisy target needs study = noise, adaptive or solve");
        require(c.coupling != Coupling::FixedRho || c.rho.has_value(), "coupling",
                "coupling = fixed_rho needs rho");
        require(c.coupling == Coupling::FixedRho || !c.rho, "rho", "rho is used only with coupling = fixed_rho");
        break;
      case StudyKind::Noise:
        require(c.target == "noisy", "target", "a noise study needs target = noisy");
        require(!c.noise_levels.empty(), "noise_levels", "a noise study needs noise_levels");
        require(!seen_.count("coupling") || c.coupling == Coupling::Noise, "coupling",
                "a noise study uses coupling = noise");
        require(!c.rho, "rho", "a noise study sets rho = h^2");
        for (double delta : c.noise_levels) {
          try {
            noise_cells(delta);
          } catch (const std::exception& e) {
            error(line_of("noise_levels"), std::string("noise_levels: ") + e.what());
            break;
          }
        }
        break;
      case StudyKind::Adaptive:
      case StudyKind::Solve:
        require(c.target != "noisy" || c.noise_delta > 0.0, "noise_delta",
                "the noisy target needs noise_delta > 0");
        break;
    }
  }

  ExperimentConfig config_;
  std::map<std::string, int> seen_;
  std::vector<ConfigIssue> issues_;
  int line_ = 0;
};

std::string summarize(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid config:";
  for (const auto& issue : issues) {
    out += "\n  ";
    out += issue.line > 0 ? "line " + std::to_string(issue.line) + ": " : std::string();
    out += issue.message;
  }
  return out;
}

}  // namespace

const char* to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::Convergence: return "convergence";
    case StudyKind::Noise: return "noise";
    case StudyKind::Adaptive: return "adaptive";
    case StudyKind::Solve: return "solve";
  }
  return "?";
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

std::optional<double> parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto caret = s.find('^');
  if (caret == std::string::npos) return parse_plain(s);
  const auto base = parse_plain(trim(s.substr(0, caret)));
  const auto exponent = parse_plain(trim(s.substr(caret + 1)));
  if (!base || !exponent || *base <= 0.0) return std::nullopt;
  const double v = std::pow(*base, *exponent);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

ExperimentConfig parse_config(const std::string& text) { return Parser().run(text); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{0, "cannot open config file '" + path + "'"}});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto join = [](const auto& items, const auto& fmt) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + fmt(items[i]);
    return s;
  };
  out << "name = " << c.name << '\n';
  out << "study = " << to_string(c.study) << '\n';
  out << "dimension = " << c.dimension << '\n';
  out << "target = " << c.target << '\n';
  if (!c.levels.empty()) out << "levels = " << join(c.levels, [](int m) { return std::to_string(m); }) << '\n';
  out << "cells = " << c.cells << '\n';
  if (c.coupling != Coupling::RhoEqH2) out << "coupling = " << coupling_name(c.coupling) << '\n';
  if (c.rho) out << "rho = " << number(*c.rho) << '\n';
  if (!c.noise_levels.empty()) out << "noise_levels = " << join(c.noise_levels, number) << '\n';
  out << "noise_delta = " << number(c.noise_delta) << '\n';
  out << "method = " << to_string(c.method) << '\n';
  out << "gmres_tol = " << number(c.gmres_tol) << '\n';
  out << "gmres_restart = " << c.gmres_restart << '\n';
  out << "gmres_maxit = " << c.gmres_maxit << '\n';
  if (c.error_depth) out << "error_depth = " << *c.error_depth << '\n';
  out << "estimator_depth = " << c.estimator_depth << '\n';
  out << "theta = " << number(c.theta) << '\n';
  out << "initial_cells = " << c.initial_cells << '\n';
  out << "max_dofs = " << c.max_dofs << '\n';
  out << "max_levels = " << c.max_levels << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  out << "formats = " << join(c.formats, [](const std::string& f) { return f; }) << '\n';
  out << "threads = " << c.threads << '\n';
  out << "slice_time = " << number(c.slice_time) << '\n';
  return out.str();
}

SolveOptions to_solve_options(const ExperimentConfig& c) {
  SolveOptions options;
  options.method = c.method;
  options.gmres.tol = c.gmres_tol;
  options.gmres.restart = c.gmres_restart;
  options.gmres.maxit = c.gmres_maxit;
  return options;
}

StudyConfig to_study_config(const ExperimentConfig& c) {
  StudyConfig s;
  s.dim = c.dimension;
  s.target = c.target;
  s.levels = c.levels;
  s.coupling = c.study == StudyKind::Noise ? Coupling::Noise : c.coupling;
  s.fixed_rho = c.rho.value_or(0.0);
  s.noise_deltas = c.noise_levels;
  s.solver = to_solve_options(c);
  s.error_depth = c.error_depth;
  s.threads = c.threads;
  return s;
}

AdaptConfig to_adapt_config(const ExperimentConfig& c) {
  AdaptConfig a;
  a.dim = c.dimension;
  a.target = c.target;
  a.noise_delta = c.noise_delta;
  a.initial_cells = c.initial_cells;
  a.theta = c.theta;
  a.max_dofs = c.max_dofs;
  a.max_levels = c.max_levels;
  a.fixed_rho = c.rho;
  a.estimator_depth = c.estimator_depth;
  a.solver = to_solve_options(c);
  a.error_depth = c.error_depth;
  a.threads = c.threads;
  return a;
}

}  // namespace stfem::cli
