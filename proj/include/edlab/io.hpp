// Output formats: field snapshot CSV, trajectory CSV, a compact binary
// trajectory layout, and JSON serialization of reports and manifests.

#ifndef EDLAB_IO_HPP_
#define EDLAB_IO_HPP_

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "edlab/ensemble.hpp"
#include "edlab/fields.hpp"
#include "edlab/observables.hpp"

namespace edlab {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr char kTrajectoryMagic[8] = {'E', 'D', 'T', 'R', 'A', 'J', '0', '1'};

namespace detail {
inline std::ofstream open_output(const std::filesystem::path& path,
                                 std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 8);
}
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("trajectory file truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }
}  // namespace detail

/// Columns: coordinates, rho, Phi, v per coordinate, u per coordinate.
inline void write_field_csv(const std::filesystem::path& path, const WaveState& s,
                            const VelocityFields& f) {
  auto out = detail::open_output(path);
  const Grid& g = s.grid;
  const std::size_t d = g.dims();
  if (d == 1) {
    out << "x,rho,phase,v,u\n";
  } else {
    out << "x0,x1,rho,phase,v0,v1,u0,u1\n";
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t a = 0; a < d; ++a) out << g.position(i, a) << ',';
    out << s.rho[i] << ',' << s.phase[i];
    for (std::size_t a = 0; a < d; ++a) out << ',' << f.current[a][i];
    for (std::size_t a = 0; a < d; ++a) out << ',' << f.osmotic[a][i];
    out << '\n';
  }
}

inline void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& r) {
  auto out = detail::open_output(path);
  out << "time,walker";
  for (std::size_t a = 0; a < r.dims; ++a) out << ",x" << a;
  out << '\n';
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    for (std::size_t w = 0; w < r.walkers; ++w) {
      out << r.times[k] << ',' << w;
      for (std::size_t a = 0; a < r.dims; ++a) out << ',' << r.positions[k][w * r.dims + a];
      out << '\n';
    }
  }
}

/// Layout (all little-endian): 8-byte magic "EDTRAJ01", u64 M, u64 D,
/// f64 cadence, u64 n_times, then per time one f64 time followed by M*D f64
/// positions (walker-major).
inline void write_trajectory_binary(const std::filesystem::path& path, const TrajectoryRecord& r,
                                    double cadence) {
  auto out = detail::open_output(path, std::ios::out | std::ios::binary);
  out.write(kTrajectoryMagic, 8);
  detail::put_u64(out, r.walkers);
  detail::put_u64(out, r.dims);
  detail::put_f64(out, cadence);
  detail::put_u64(out, r.times.size());
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    detail::put_f64(out, r.times[k]);
    for (std::size_t i = 0; i < r.walkers * r.dims; ++i) detail::put_f64(out, r.positions[k][i]);
  }
}

struct BinaryTrajectory {
  TrajectoryRecord record;
  double cadence = 0.0;
};

inline BinaryTrajectory read_trajectory_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kTrajectoryMagic, 8) != 0) {
    throw Error(path.string() + " is not a trajectory file");
  }
  BinaryTrajectory t;
  t.record.walkers = detail::get_u64(in);
  t.record.dims = detail::get_u64(in);
  t.cadence = detail::get_f64(in);
  const std::uint64_t n = detail::get_u64(in);
  for (std::uint64_t k = 0; k < n; ++k) {
    t.record.times.push_back(detail::get_f64(in));
    std::vector<double> pos(t.record.walkers * t.record.dims);
    for (auto& x : pos) x = detail::get_f64(in);
    t.record.positions.push_back(std::move(pos));
  }
  return t;
}

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw Error("csv: missing column " + name);
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + " is empty");
  std::stringstream header(line);
  for (std::string c; std::getline(header, c, ',');) t.columns.push_back(c);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) row.push_back(std::stod(c));
    if (row.size() != t.columns.size()) throw Error(path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return json::parse(in);
}

inline json to_json(const ModelParams& p) {
  return {{"masses", p.masses},
          {"hbar", p.hbar},
          {"xi", p.xi},
          {"epsilon", p.epsilon},
          {"eta_tilde", p.eta_tilde},
          {"dt", p.dt},
          {"class", p.dynamics_class() == DynamicsClass::quantum ? "quantum" : "hybrid"}};
}

inline json to_json(const UncertaintyReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  }
  json j{{"time", r.time},
         {"hbar", r.hbar},
         {"mean_x", r.mean_x},
         {"var_x", r.var_x},
         {"mean_p_local", r.mean_p_local},
         {"var_p_local", r.var_p_local},
         {"mean_p_operator", r.mean_p_operator},
         {"var_p_operator", r.var_p_operator},
         {"mean_p_osmotic", r.mean_p_osmotic},
         {"var_dlnrho", r.var_dlnrho},
         {"fisher_I", r.fisher_I},
         {"cov_p_x", r.cov_p_x},
         {"cov_p_local_x", r.cov_p_local_x},
         {"cov_dlnrho_x", r.cov_dlnrho_x},
         {"variance_identity_error", r.variance_identity_error},
         {"schrodinger_lhs", r.schrodinger_lhs},
         {"schrodinger_rhs", r.schrodinger_rhs},
         {"schrodinger_slack", r.schrodinger_slack},
         {"heisenberg_product", r.heisenberg_product},
         {"checks", checks},
         {"pass", r.all_pass()}};
  if (r.ensemble_mean_x) {
    j["ensemble_mean_x"] = *r.ensemble_mean_x;
    j["ensemble_var_x"] = *r.ensemble_var_x;
  }
  return j;
}

}  // namespace edlab

#endif  // EDLAB_IO_HPP_
