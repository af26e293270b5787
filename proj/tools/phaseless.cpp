// Command-line driver for the two-stage phaseless inversion pipeline.
//
// Verbs: simulate | retrieve | propagate | invert | pipeline | metrics | export
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "phaseless/export.hpp"
#include "phaseless/io.hpp"
#include "phaseless/pipeline.hpp"

using namespace phaseless;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_config = true) {
  auto* c = cmd->add_option("--config", args.config_path, "pipeline config file (key = value)");
  if (need_config) c->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--seed", args.seed, "noise seed (overrides seed)")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--verbose", args.verbose, "progress to stderr");
}

PipelineConfig make_config(const CommonArgs& args) {
  PipelineConfig cfg = load_pipeline_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed_set) cfg.seed = args.seed;
  cfg.verbose = cfg.verbose || args.verbose;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage phaseless inverse scattering pipeline"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* simulate = app.add_subcommand("simulate", "synthesize intensity data");
  add_common(simulate, args);
  auto* retrieve = app.add_subcommand("retrieve", "recover amplitude and travel time");
  add_common(retrieve, args);
  auto* propagate = app.add_subcommand("propagate", "move the field to the near plane and complete boundary data");
  add_common(propagate, args);
  auto* invert = app.add_subcommand("invert", "run the frequency cascade");
  add_common(invert, args);
  auto* pipeline = app.add_subcommand("pipeline", "run all stages");
  add_common(pipeline, args);
  auto* metrics = app.add_subcommand("metrics", "compare estimate against the truth");
  add_common(metrics, args);

  auto* exp = app.add_subcommand("export", "plain-format exports for plotting");
  CommonArgs eargs;
  add_common(exp, eargs, /*need_config=*/false);
  std::string exp_phasemap, exp_medium, exp_csv, exp_vtk;
  double exp_k = 0;
  std::size_t exp_from = 0, exp_to = 0;
  std::string exp_axis = "z";
  double exp_coord = 0;
  exp->add_option("--phasemap", exp_phasemap, "phase map file for a line export");
  exp->add_option("--medium", exp_medium, "medium file for a slice or volume export");
  exp->add_option("--k", exp_k, "wavenumber for the synthesized line export");
  exp->add_option("--from", exp_from, "first flat pixel index");
  exp->add_option("--to", exp_to, "one past the last flat pixel index");
  exp->add_option("--axis", exp_axis, "slice axis: x, y or z");
  exp->add_option("--coord", exp_coord, "slice coordinate along the axis");
  exp->add_option("--csv", exp_csv, "CSV output path");
  exp->add_option("--vtk", exp_vtk, "legacy structured-points output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) {
      const PipelineConfig cfg = make_config(args);
      OutputLock lock(cfg.out_dir);
      run_simulate(cfg);
    } else if (retrieve->parsed()) {
      const PipelineConfig cfg = make_config(args);
      OutputLock lock(cfg.out_dir);
      run_retrieve(cfg);
    } else if (propagate->parsed()) {
      const PipelineConfig cfg = make_config(args);
      OutputLock lock(cfg.out_dir);
      run_propagate(cfg);
    } else if (invert->parsed()) {
      const PipelineConfig cfg = make_config(args);
      OutputLock lock(cfg.out_dir);
      run_invert(cfg);
    } else if (pipeline->parsed()) {
      const PipelineConfig cfg = make_config(args);
      OutputLock lock(cfg.out_dir);
      run_full_pipeline(cfg, std::cout);
    } else if (metrics->parsed()) {
      const PipelineConfig cfg = make_config(args);
      run_metrics(cfg, std::cout);
    } else if (exp->parsed()) {
      if (!exp_phasemap.empty()) {
        if (exp_csv.empty()) throw config_error("export --phasemap needs --csv");
        if (exp_k <= 0) throw config_error("export --phasemap needs --k");
        const PhaseMap map = read_phase_map(exp_phasemap);
        if (exp_to == 0) exp_to = map.plane.size();
        export_phasemap_line(exp_csv, map, exp_k, exp_from, exp_to);
      } else if (!exp_medium.empty()) {
        const Medium m = read_medium(exp_medium);
        if (!exp_vtk.empty()) {
          export_medium_vtk(exp_vtk, m);
        } else if (!exp_csv.empty()) {
          const int axis = exp_axis == "x" ? 0 : exp_axis == "y" ? 1 : 2;
          export_medium_slice(exp_csv, m, axis, exp_coord);
        } else {
          throw config_error("export --medium needs --csv or --vtk");
        }
      } else {
        throw config_error("export needs --phasemap or --medium");
      }
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
