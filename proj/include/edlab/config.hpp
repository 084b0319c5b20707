// Run configuration: INI text with [scenario], [params], [grid], [potential]
// and [run] sections. Unknown sections or keys are rejected.

#ifndef EDLAB_CONFIG_HPP_
#define EDLAB_CONFIG_HPP_

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edlab/core.hpp"

namespace edlab {

struct GridSpec {
  int dims = 1;
  int points = 1024;
  double extent = 40.0;
};

struct RunSpec {
  double duration = 1.0;
  double cadence = 0.25;
  std::size_t walkers = 100000;
  std::uint64_t seed = 12345;
  int substeps = 4;
  std::vector<double> epsilons;  // empty: use params.epsilon only
  std::size_t recorded_walkers = 200;
};

struct RunConfig {
  ScenarioSpec scenario;
  ModelParams params;
  GridSpec grid;
  PotentialSpec potential = FreePotential{};
  RunSpec run;

  std::vector<double> epsilon_list() const {
    return run.epsilons.empty() ? std::vector<double>{params.epsilon} : run.epsilons;
  }
  ModelParams params_for(double epsilon) const {
    ModelParams p = params;
    p.epsilon = epsilon;
    p.validate();
    return p;
  }
  Grid make_grid() const { return build_grid(grid.dims, grid.points, grid.extent); }
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw Error("config: key '" + key + "' expects a number list, got '" + text + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw Error("config: key '" + key + "' expects a number list, got '" + text + "'");
    }
  }
  if (out.empty()) throw Error("config: key '" + key + "' is empty");
  return out;
}

inline double parse_number(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 1) throw Error("config: key '" + key + "' expects a single number");
  return v.front();
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (text.find('-') != std::string::npos) throw std::invalid_argument("negative");
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  if (text.find_first_not_of(" \t", used) != std::string::npos) {
    throw Error("config: key '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace detail

/// Parses configuration text. `origin` names the source in error messages.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config " + origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::map<std::string, std::set<std::string>> allowed{
      {"scenario", {"name", "x0", "sigma0", "k0", "omega", "separation", "correlation"}},
      {"params", {"class", "hbar", "mass", "epsilon", "eta_tilde", "dt"}},
      {"grid", {"dims", "points", "extent"}},
      {"potential",
       {"kind", "omega", "height", "width", "center", "wall_width", "separation", "slit_width"}},
      {"run", {"duration", "cadence", "walkers", "seed", "substeps", "epsilons", "recorded_walkers"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) {
      throw Error("config " + origin + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!value.empty()) throw Error("config " + origin + ": nested keys are not allowed");
      if (!it->second.count(key)) {
        throw Error("config " + origin + ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  auto number = [&](const std::string& path, double fallback) {
    const auto v = get(path);
    return v ? detail::parse_number(path, *v) : fallback;
  };

  RunConfig cfg;
  try {
    // [params]
    const std::string cls = get("params.class").value_or("quantum");
    const double hbar = number("params.hbar", 1.0);
    if (cls == "quantum") {
      cfg.params = ModelParams::quantum(hbar);
    } else if (cls == "hybrid") {
      cfg.params = ModelParams::hybrid(hbar);
    } else {
      throw Error("config: params.class must be 'quantum' or 'hybrid'");
    }
    if (auto m = get("params.mass")) cfg.params.masses = detail::parse_list("params.mass", *m);
    cfg.params.epsilon = number("params.epsilon", 1.0);
    cfg.params.eta_tilde = number("params.eta_tilde", 1.0);
    cfg.params.dt = number("params.dt", 1e-3);
    if (cfg.params.epsilon < 0.0) throw Error("config: params.epsilon must be >= 0");
    cfg.params.validate();

    // [grid]
    cfg.grid.dims = static_cast<int>(number("grid.dims", 1));
    cfg.grid.points = static_cast<int>(number("grid.points", 1024));
    cfg.grid.extent = number("grid.extent", 40.0);

    // [scenario]
    cfg.scenario.kind = ScenarioSpec::parse_kind(get("scenario.name").value_or("gaussian"));
    cfg.scenario.x0 = number("scenario.x0", 0.0);
    cfg.scenario.sigma0 = number("scenario.sigma0", 1.0);
    cfg.scenario.k0 = number("scenario.k0", 0.0);
    cfg.scenario.omega = number("scenario.omega", 1.0);
    cfg.scenario.separation = number("scenario.separation", 2.0);
    cfg.scenario.correlation = number("scenario.correlation", 0.0);

    // [potential]
    const std::string kind = get("potential.kind").value_or("free");
    if (kind == "free") {
      cfg.potential = FreePotential{};
    } else if (kind == "harmonic") {
      HarmonicPotential h;
      h.omega = get("potential.omega") ? detail::parse_list("potential.omega", *get("potential.omega"))
                                       : std::vector<double>{1.0};
      cfg.potential = h;
    } else if (kind == "barrier") {
      cfg.potential = BarrierPotential{number("potential.height", 1.0), number("potential.width", 0.5),
                                       number("potential.center", 0.0)};
    } else if (kind == "double-gaussian-slit") {
      DoubleSlitPotential d;
      d.height = number("potential.height", d.height);
      d.wall_width = number("potential.wall_width", d.wall_width);
      d.center = number("potential.center", d.center);
      d.separation = number("potential.separation", d.separation);
      d.slit_width = number("potential.slit_width", d.slit_width);
      cfg.potential = d;
    } else {
      throw Error("config: unknown potential.kind '" + kind + "'");
    }

    // [run]
    cfg.run.duration = number("run.duration", cfg.run.duration);
    cfg.run.cadence = number("run.cadence", cfg.run.cadence);
    if (auto v = get("run.walkers")) cfg.run.walkers = detail::parse_unsigned("run.walkers", *v);
    if (auto v = get("run.seed")) cfg.run.seed = detail::parse_unsigned("run.seed", *v);
    if (auto v = get("run.substeps")) {
      cfg.run.substeps = static_cast<int>(detail::parse_unsigned("run.substeps", *v));
    }
    if (auto v = get("run.recorded_walkers")) {
      cfg.run.recorded_walkers = detail::parse_unsigned("run.recorded_walkers", *v);
    }
    if (auto v = get("run.epsilons")) cfg.run.epsilons = detail::parse_list("run.epsilons", *v);
  } catch (const Error& e) {
    std::string msg = e.what();
    if (msg.rfind("config: ", 0) == 0) msg = msg.substr(8);
    throw Error("config " + origin + ": " + msg);
  }
  for (double e : cfg.run.epsilons) {
    if (!(e >= 0.0)) throw Error("config " + origin + ": run.epsilons entries must be >= 0");
  }
  if (cfg.run.walkers == 0) throw Error("config " + origin + ": run.walkers must be >= 1");
  if (cfg.run.substeps < 1 || cfg.run.substeps > 16) {
    throw Error("config " + origin + ": run.substeps must be in [1, 16]");
  }
  if (!(cfg.run.duration > 0.0) || !(cfg.run.cadence > 0.0)) {
    throw Error("config " + origin + ": run.duration and run.cadence must be > 0");
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

/// Canonical text form: every field written out explicitly, so that
/// parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const RunConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "[scenario]\n"
     << "name = " << c.scenario.name() << "\n"
     << "x0 = " << format_double(c.scenario.x0) << "\n"
     << "sigma0 = " << format_double(c.scenario.sigma0) << "\n"
     << "k0 = " << format_double(c.scenario.k0) << "\n"
     << "omega = " << format_double(c.scenario.omega) << "\n"
     << "separation = " << format_double(c.scenario.separation) << "\n"
     << "correlation = " << format_double(c.scenario.correlation) << "\n\n";
  os << "[params]\n"
     << "class = " << (c.params.dynamics_class() == DynamicsClass::quantum ? "quantum" : "hybrid") << "\n"
     << "hbar = " << format_double(c.params.hbar) << "\n"
     << "mass = " << detail::join_doubles(c.params.masses) << "\n"
     << "epsilon = " << format_double(c.params.epsilon) << "\n"
     << "eta_tilde = " << format_double(c.params.eta_tilde) << "\n"
     << "dt = " << format_double(c.params.dt) << "\n\n";
  os << "[grid]\n"
     << "dims = " << c.grid.dims << "\n"
     << "points = " << c.grid.points << "\n"
     << "extent = " << format_double(c.grid.extent) << "\n\n";
  os << "[potential]\n" << "kind = " << potential_name(c.potential) << "\n";
  if (const auto* h = std::get_if<HarmonicPotential>(&c.potential)) {
    os << "omega = " << detail::join_doubles(h->omega) << "\n";
  } else if (const auto* b = std::get_if<BarrierPotential>(&c.potential)) {
    os << "height = " << format_double(b->height) << "\nwidth = " << format_double(b->width)
       << "\ncenter = " << format_double(b->center) << "\n";
  } else if (const auto* d = std::get_if<DoubleSlitPotential>(&c.potential)) {
    os << "height = " << format_double(d->height) << "\nwall_width = " << format_double(d->wall_width)
       << "\ncenter = " << format_double(d->center) << "\nseparation = " << format_double(d->separation)
       << "\nslit_width = " << format_double(d->slit_width) << "\n";
  }
  os << "\n[run]\n"
     << "duration = " << format_double(c.run.duration) << "\n"
     << "cadence = " << format_double(c.run.cadence) << "\n"
     << "walkers = " << c.run.walkers << "\n"
     << "seed = " << c.run.seed << "\n"
     << "substeps = " << c.run.substeps << "\n";
  if (!c.run.epsilons.empty()) os << "epsilons = " << detail::join_doubles(c.run.epsilons) << "\n";
  os << "recorded_walkers = " << c.run.recorded_walkers << "\n";
  return os.str();
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_config_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace edlab

#endif  // EDLAB_CONFIG_HPP_
