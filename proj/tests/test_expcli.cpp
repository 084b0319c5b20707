#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "edlab/experiments.hpp"

using namespace edlab;
namespace fs = std::filesystem;

namespace {

const char* kSmallRun = R"(
[scenario]
name = gaussian
sigma0 = 1
k0 = 0.5

[params]
class = quantum
epsilon = 0
dt = 0.01

[grid]
points = 256
extent = 30

[run]
duration = 0.5
cadence = 0.25
walkers = 2000
seed = 7
substeps = 1
recorded_walkers = 50
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("edlab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_path(const std::string& name) { return std::string(EDLAB_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST(Config, ParsesShippedConfigs) {
  for (const char* name : {"free_packet.ini", "harmonic_coherent.ini", "interference.ini", "correlated_pair.ini",
                           "hybrid_harmonic.ini", "hybrid_free.ini", "bohmian_convergence.ini",
                           "hybrid_bohmian.ini", "maxent.ini"}) {
    EXPECT_NO_THROW(load_config(config_path(name))) << name;
  }
  const RunConfig c = load_config(config_path("free_packet.ini"));
  EXPECT_EQ(c.scenario.kind, ScenarioKind::gaussian);
  EXPECT_EQ(c.params.dynamics_class(), DynamicsClass::quantum);
  EXPECT_EQ(c.grid.points, 1024);
  EXPECT_EQ(c.run.walkers, 100000u);
  EXPECT_EQ(c.epsilon_list(), (std::vector<double>{0.0, 0.25, 1.0, 4.0}));
}

TEST(Config, Defaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.grid.dims, 1);
  EXPECT_EQ(c.grid.points, 1024);
  EXPECT_DOUBLE_EQ(c.grid.extent, 40.0);
  EXPECT_EQ(c.run.seed, 12345u);
  EXPECT_TRUE(std::holds_alternative<FreePotential>(c.potential));
  EXPECT_EQ(c.epsilon_list(), std::vector<double>{1.0});
}

TEST(Config, HybridClassAndPotential) {
  const RunConfig c = parse_config("[params]\nclass = hybrid\nhbar = 2\n[potential]\nkind = harmonic\nomega = 3\n");
  EXPECT_EQ(c.params.xi, 0.0);
  EXPECT_EQ(c.params.hbar, 2.0);
  ASSERT_TRUE(std::holds_alternative<HarmonicPotential>(c.potential));
  EXPECT_EQ(std::get<HarmonicPotential>(c.potential).omega, std::vector<double>{3.0});
  const RunConfig q = parse_config("[params]\nhbar = 2\n");
  EXPECT_DOUBLE_EQ(q.params.xi, 0.5);
}

TEST(Config, RejectsNegativeEpsilon) {
  EXPECT_THROW(parse_config("[params]\nepsilon = -0.5\n"), Error);
  EXPECT_THROW(parse_config("[run]\nepsilons = 0, -1\n"), Error);
}

TEST(Config, RejectsUnknownKeysAndSections) {
  try {
    parse_config("[params]\nepsilonn = 1\n", "x.ini");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epsilonn"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("x.ini"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[extras]\na = 1\n"), Error);
  EXPECT_THROW(parse_config("[scenario]\nname = square\n"), Error);
  EXPECT_THROW(parse_config("[params]\nclass = classical\n"), Error);
  EXPECT_THROW(parse_config("[run]\nsubsteps = 17\n"), Error);
  EXPECT_THROW(parse_config("[run]\nwalkers = -5\n"), Error);
  EXPECT_THROW(parse_config("[grid]\npoints = many\n"), Error);
}

TEST(Config, SyntaxErrorsCarryLineNumbers) {
  try {
    parse_config("[run]\nseed = 1\nthis line is broken\n", "broken.ini");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("broken.ini:3"), std::string::npos) << e.what();
  }
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/edlab.ini"), Error); }

TEST(Config, CanonicalTextRoundTrips) {
  const RunConfig c = load_config(config_path("interference.ini"));
  const std::string text = to_config_text(c);
  const RunConfig again = parse_config(text);
  EXPECT_EQ(to_config_text(again), text);
  EXPECT_EQ(config_hash(again), config_hash(c));
}

TEST(Config, HashChangesWithAnyParameter) {
  const RunConfig base = parse_config(kSmallRun);
  const std::string h = config_hash(base);
  EXPECT_EQ(h.size(), 16u);
  RunConfig c = base;
  c.run.seed += 1;
  EXPECT_NE(config_hash(c), h);
  c = base;
  c.params.dt = 0.005;
  EXPECT_NE(config_hash(c), h);
  c = base;
  c.scenario.sigma0 = 1.0000001;
  EXPECT_NE(config_hash(c), h);
  c = base;
  c.potential = HarmonicPotential{{1.0}};
  EXPECT_NE(config_hash(c), h);
  // Comments and whitespace are not part of the configuration.
  EXPECT_EQ(config_hash(parse_config(std::string("; note\n") + kSmallRun)), h);
}

TEST(Report, ChecksAndJson) {
  ExperimentReport rep{"demo", parse_config(kSmallRun)};
  rep.check("a", 0.5, "<", 1.0);
  rep.check("b", 2.0, "<=", 1.0);
  rep.require("c", true);
  EXPECT_FALSE(rep.pass());
  EXPECT_THROW(rep.check("d", 1.0, "~", 1.0), Error);
  const json j = rep.to_json();
  EXPECT_EQ(j.at("experiment"), "demo");
  EXPECT_EQ(j.at("pass"), false);
  EXPECT_EQ(j.at("metrics").size(), 3u);
  EXPECT_EQ(j.at("provenance").at("seed"), 7u);
  EXPECT_EQ(j.at("provenance").at("config_hash"), config_hash(rep.config));
  // The embedded config reproduces the run configuration.
  EXPECT_EQ(config_hash(parse_config(j.at("provenance").at("config").get<std::string>())),
            config_hash(rep.config));
  EXPECT_EQ(rep.matching("a").size(), 1u);
}

TEST(CmdRun, WritesArtifacts) {
  const fs::path out = scratch("run");
  const ExperimentReport rep = cmd_run(parse_config(kSmallRun), out);
  EXPECT_TRUE(rep.pass());
  for (const char* f : {"manifest.json", "series.csv", "trajectories.csv", "trajectories.bin", "uncertainty.json",
                        "fields_0.csv", "fields_2.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const json manifest = read_json(out / "manifest.json");
  EXPECT_EQ(manifest.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(manifest.at("times").size(), 3u);
  EXPECT_EQ(manifest.at("config_hash"), config_hash(parse_config(kSmallRun)));

  const CsvTable fields = read_csv(out / "fields_1.csv");
  EXPECT_EQ(fields.columns, (std::vector<std::string>{"x", "rho", "phase", "v", "u"}));
  EXPECT_EQ(fields.rows.size(), 256u);
  const CsvTable traj = read_csv(out / "trajectories.csv");
  EXPECT_EQ(traj.rows.size(), 3u * 50u);

  const BinaryTrajectory bin = read_trajectory_binary(out / "trajectories.bin");
  EXPECT_EQ(bin.record.walkers, 50u);
  EXPECT_EQ(bin.record.dims, 1u);
  EXPECT_DOUBLE_EQ(bin.cadence, 0.25);
  ASSERT_EQ(bin.record.times.size(), 3u);
  for (std::size_t r = 0; r < traj.rows.size(); ++r) {
    const auto k = r / 50, w = r % 50;
    EXPECT_EQ(traj.rows[r][0], bin.record.times[k]);
    EXPECT_EQ(traj.rows[r][1], static_cast<double>(w));
    EXPECT_EQ(traj.rows[r][2], bin.record.positions[k][w]);
  }
  fs::remove_all(out);
}

TEST(CmdRun, IsBitReproducible) {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  RunConfig cfg = parse_config(kSmallRun);
  cfg.params.epsilon = 0.5;
  cmd_run(cfg, a);
  cmd_run(cfg, b);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (const char* f : {"trajectories.bin", "series.csv", "uncertainty.json", "manifest.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CmdRun, HybridCausticIsAStructuredFailure) {
  RunConfig cfg = load_config(config_path("hybrid_harmonic.ini"));
  cfg.run.duration = 2.0;
  cfg.run.cadence = 0.25;
  cfg.run.walkers = 200;
  cfg.run.substeps = 1;
  const fs::path out = scratch("caustic");
  const ExperimentReport rep = cmd_run(cfg, out);
  EXPECT_FALSE(rep.pass());
  ASSERT_FALSE(rep.diagnostics.empty());
  EXPECT_NE(rep.diagnostics.front().find("caustic"), std::string::npos);
  const json manifest = read_json(out / "manifest.json");
  EXPECT_TRUE(manifest.at("halted").is_string());
  fs::remove_all(out);
}

TEST(BinaryTrajectory, RoundTripAndBadMagic) {
  TrajectoryRecord r;
  r.walkers = 2;
  r.dims = 2;
  r.times = {0.0, 0.5};
  r.positions = {{1.0, 2.0, 3.0, 4.0}, {-1.0, 1e-300, 5.5, 0.125}};
  const fs::path dir = scratch("bin");
  write_trajectory_binary(dir / "t.bin", r, 0.5);
  EXPECT_EQ(fs::file_size(dir / "t.bin"), 8u + 8 + 8 + 8 + 8 + 2 * (8 + 4 * 8));
  const auto back = read_trajectory_binary(dir / "t.bin");
  EXPECT_EQ(back.record.positions, r.positions);
  EXPECT_EQ(back.record.times, r.times);
  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOTATRAJECTORY";
  }
  EXPECT_THROW(read_trajectory_binary(dir / "bad.bin"), Error);
  fs::remove_all(dir);
}

TEST(ExportPlots, FromBohmianRun) {
  const fs::path run = scratch("plots_run"), out = scratch("plots_out");
  cmd_run(parse_config(kSmallRun), run);
  const ExperimentReport rep = cmd_export_plots(run, out);
  EXPECT_TRUE(rep.pass());
  for (const char* f : {"rho_profiles.csv", "ks_vs_time.csv", "uncertainty_vs_time.csv", "trajectory_fan.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(read_csv(out / "rho_profiles.csv").rows.size(), 3u * 256u);
  const auto crossings = rep.matching("trajectory_crossings");
  ASSERT_EQ(crossings.size(), 1u);
  EXPECT_EQ(crossings.front().value, 0.0);
  ASSERT_EQ(rep.matching("var_x_monotone_growth").size(), 1u);
  fs::remove_all(run);
  fs::remove_all(out);
}

TEST(ExportPlots, EmptyDirectoryIsAnError) {
  const fs::path empty = scratch("empty");
  fs::create_directories(empty);
  EXPECT_THROW(cmd_export_plots(empty, empty / "plots"), Error);
  EXPECT_THROW(cmd_export_plots(empty / "missing", empty / "plots"), Error);
  fs::remove_all(empty);
}

TEST(MaxentCheck, BatteryPasses) {
  const ExperimentReport rep = cmd_maxent_check(load_config(config_path("maxent.ini")));
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.cases.size(), 10u);
}

TEST(Universality, NeedsTwoEpsilons) {
  RunConfig cfg = parse_config(kSmallRun);
  EXPECT_THROW(universality_experiment(cfg), Error);
}

TEST(Universality, SmallLadder) {
  RunConfig cfg = parse_config(kSmallRun);
  cfg.params.dt = 0.001;
  cfg.run.epsilons = {0.0, 1.0};
  cfg.run.walkers = 5000;
  const auto res = universality_experiment(cfg);
  EXPECT_TRUE(res.report.pass());
  EXPECT_EQ(res.seconds.size(), 2u);
  EXPECT_FALSE(res.report.matching("uncertainty_report_identical_across_epsilon").empty());
}

TEST(BohmianConvergence, NeedsTwoDecades) {
  RunConfig cfg = parse_config(kSmallRun);
  cfg.run.epsilons = {0.01, 0.1};
  EXPECT_THROW(cmd_bohmian_convergence(cfg), Error);
}

TEST(BohmianConvergence, HybridDeviationFollowsLinearGaussianSolution) {
  // For a focusing Gaussian in a harmonic well everything is linear, and the
  // walker-to-Bohmian-twin deviation at time T has
  //   <dx^2> = 2 sigma0^2 cos^2 T (1 - exp(-eps tan T / (2 sigma0^2)))   (m = w = 1).
  RunConfig cfg = load_config(config_path("hybrid_bohmian.ini"));
  cfg.run.walkers = 4000;
  cfg.run.epsilons = {1e-3, 1e-2, 1e-1};
  const ExperimentReport rep = cmd_bohmian_convergence(cfg);
  const double s0 = cfg.scenario.sigma0, T = cfg.run.duration;
  int seen = 0;
  for (const auto& c : rep.cases) {
    if (!c.contains("ladder")) continue;
    for (const auto& row : c["ladder"]) {
      const double e = row["epsilon"].get<double>();
      const double expected =
          std::sqrt(2.0 * s0 * s0 * std::cos(T) * std::cos(T) * (1.0 - std::exp(-e * std::tan(T) / (2.0 * s0 * s0))));
      EXPECT_NEAR(row["rms_deviation"].get<double>() / expected, 1.0, 0.05) << "eps = " << e;
      ++seen;
    }
  }
  EXPECT_EQ(seen, 3);
  EXPECT_LE(rep.matching("classical_orbit_max_relative_deviation").front().value, 5e-3);
}

TEST(HybridClassical, RequiresHybridClass) {
  EXPECT_THROW(hybrid_classical_experiment(parse_config(kSmallRun)), Error);
}
