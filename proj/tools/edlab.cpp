// edlab: batch front end for the entropic-dynamics experiments.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "edlab/experiments.hpp"

namespace {

void set_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("EDLAB_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int finish(const edlab::ExperimentReport& rep, const std::filesystem::path& out) {
  const auto j = rep.to_json();
  if (!out.empty()) edlab::write_json(out / (rep.experiment + "_report.json"), j);
  for (const auto& m : rep.metrics) {
    std::cout << (m.pass ? "PASS " : "FAIL ") << m.name << " = " << m.value << " (" << m.op << ' ' << m.bound
              << ")\n";
  }
  for (const auto& d : rep.diagnostics) std::cout << "note: " << d << '\n';
  std::cout << rep.experiment << ": " << (rep.pass() ? "PASS" : "FAIL") << '\n';
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic dynamics simulation laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir, run_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "INI run configuration");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--threads", threads, "worker threads (default: EDLAB_THREADS or all cores)");
  };

  auto* run = app.add_subcommand("run", "coupled field + walker run with all artifacts");
  add_common(run, true);
  auto* uni = app.add_subcommand("universality", "equivariance across an epsilon list");
  add_common(uni, true);
  auto* bohm = app.add_subcommand("bohmian-convergence", "RMS deviation from the epsilon = 0 paths");
  add_common(bohm, true);
  auto* hyb = app.add_subcommand("hybrid-classical", "hybrid class against classical characteristics");
  add_common(hyb, true);
  auto* me = app.add_subcommand("maxent-check", "numeric maximum entropy against the Gaussian kernel");
  add_common(me, false);
  auto* plots = app.add_subcommand("export-plots", "plot-ready CSVs from a run directory");
  plots->add_option("run_dir", run_dir, "directory written by `run`")->required();
  plots->add_option("--out", out_dir, "output directory (default: <run_dir>/plots)");
  plots->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);
  set_threads(threads);

  try {
    auto load = [&]() {
      edlab::RunConfig cfg = config_path.empty() ? edlab::RunConfig{} : edlab::load_config(config_path);
      if (seed) cfg.run.seed = *seed;
      return cfg;
    };
    if (*run) {
      if (out_dir.empty()) throw edlab::Error("run: --out is required");
      return finish(edlab::cmd_run(load(), out_dir), out_dir);
    }
    if (*uni) return finish(edlab::cmd_universality(load()), out_dir);
    if (*bohm) return finish(edlab::cmd_bohmian_convergence(load()), out_dir);
    if (*hyb) return finish(edlab::cmd_hybrid_classical(load()), out_dir);
    if (*me) return finish(edlab::cmd_maxent_check(load()), out_dir);
    if (*plots) {
      const std::filesystem::path out =
          out_dir.empty() ? std::filesystem::path(run_dir) / "plots" : std::filesystem::path(out_dir);
      return finish(edlab::cmd_export_plots(run_dir, out), out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
