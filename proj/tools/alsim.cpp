// alsim: run active-learning experiments from a JSON config and emit CSV
// results and gnuplot files.
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 runtime error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>

#include <CLI11.hpp>

#include "alsim/config.hpp"
#include "alsim/report.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_runtime = 4;

constexpr const char* out_dir_env = "ALSIM_OUT_DIR";

std::string resolve_out_dir(const std::string& flag, const alsim::RunConfig& rc) {
  if (!flag.empty()) return flag;
  if (!rc.output_dir.empty()) return rc.output_dir;
  if (const char* env = std::getenv(out_dir_env); env && *env) return env;
  return "alsim_out";
}

nlohmann::json schedule_json(const alsim::PowerSchedule& s) {
  auto j = nlohmann::json::array();
  for (const auto& p : s.pieces) j.push_back({{"t_start", p.t_start}, {"a", p.a}, {"b", p.b}, {"alpha", p.alpha}});
  return j;
}

struct RunOptions {
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::string progress_file;
  bool quiet = false;
};

int cmd_validate(const std::string& path) {
  const auto rc = alsim::load_config(path);
  const auto& c = rc.experiment;
  std::cout << path << ": ok (" << c.schemes.size() << " schemes, " << c.rounds << " rounds, " << c.trials << " trials)\n";
  return 0;
}

int cmd_run(const RunOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  auto doc = alsim::read_config_document(opt.config);
  if (opt.trials) doc["trials"] = *opt.trials;
  if (opt.seed) doc["base_seed"] = *opt.seed;
  auto rc = alsim::parse_config(doc, opt.config, std::filesystem::absolute(opt.config).parent_path());
  auto& config = rc.experiment;
  const auto out_dir = resolve_out_dir(opt.out, rc);
  alsim::detail::prepare_dir(out_dir);

  std::ofstream progress_file;
  if (!opt.progress_file.empty()) {
    progress_file.open(opt.progress_file);
    if (!progress_file) throw alsim::error("cannot write progress log '" + opt.progress_file + "'");
  }
  std::mutex progress_mutex;
  const bool verbose = !opt.quiet && rc.verbosity > 0;
  alsim::ProgressSink progress = [&](const alsim::ProgressLine& p) {
    const auto line = alsim::format_progress(p);
    std::lock_guard lock(progress_mutex);
    if (progress_file.is_open()) progress_file << line << '\n';
    else if (verbose) std::cerr << line << '\n';
  };

  const auto data = alsim::load_data(config.source);

  alsim::RunManifest manifest;
  for (const auto& req : rc.power_fits) {
    auto& scheme = config.schemes[req.scheme_index];
    auto probe = config;
    probe.trials = req.trials;
    if (verbose) std::cerr << "fitting schedule for " << scheme.name << " over " << req.trials << " trial(s)\n";
    const auto fit = alsim::fit_power_schedule_by_simulation(probe, data, scheme, req.grid, req.rho, opt.jobs);
    scheme.schedule = fit.schedule;
    manifest.fitted_schedules[scheme.name] = {{"schedule", schedule_json(fit.schedule)}, {"objective", fit.objective},
                                              {"evaluated", fit.evaluated}};
  }

  const auto result = alsim::run_experiment(config, data, opt.jobs, progress);

  manifest.config_hash = alsim::config_hash(doc);
  manifest.base_seed = config.base_seed;
  manifest.trials = config.trials;
  manifest.jobs = opt.jobs;
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const auto files = alsim::write_run_outputs(out_dir, config, result, manifest);
  if (verbose) std::cerr << "wrote " << files.size() << " files to " << out_dir << '\n';
  return 0;
}

int cmd_plot(const std::string& csv_path, std::string out) {
  std::ifstream in(csv_path);
  if (!in) throw alsim::data_error("cannot read '" + csv_path + "'");
  const auto rows = alsim::read_aggregate_csv(in);
  if (out.empty()) out = std::filesystem::path(csv_path).parent_path().string();
  if (out.empty()) out = ".";
  const auto files = alsim::emit_plot_data(rows, out);
  std::cout << "wrote " << files.data.string() << " (" << files.blocks << " blocks) and " << files.script.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning simulation harness"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_opt.config, "Experiment config (JSON)")->required();
  run->add_option("--out", run_opt.out, std::string("Output directory (default: config output_dir, then $") + out_dir_env + ", then ./alsim_out)");
  run->add_option("--jobs", run_opt.jobs, "Trials run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--trials", run_opt.trials, "Override the number of trials")->check(CLI::PositiveNumber);
  run->add_option("--seed", run_opt.seed, "Override the base seed");
  run->add_option("--progress", run_opt.progress_file, "Write the progress log to this file instead of stderr");
  run->add_flag("--quiet", run_opt.quiet, "No progress output on stderr");

  std::string plot_csv, plot_out;
  auto* plot = app.add_subcommand("plot", "Write gnuplot data and script from an aggregate CSV");
  plot->add_option("aggregate", plot_csv, "aggregate.csv from a run")->required();
  plot->add_option("--out", plot_out, "Output directory (default: next to the CSV)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file and exit");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_config;
  }

  try {
    if (*run) return cmd_run(run_opt);
    if (*plot) return cmd_plot(plot_csv, plot_out);
    if (*validate) return cmd_validate(validate_path);
  } catch (const alsim::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const alsim::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return 0;
}
