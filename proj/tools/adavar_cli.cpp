// Command-line front end: run | falsify | validate | report.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "adavar/harness.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  int jobs = -1;
  std::uint64_t seed_offset = 0;
};

void add_run_flags(CLI::App* cmd, Args& a) {
  cmd->add_option("config_file", a.config, "Experiment config (JSON)");
  cmd->add_option("--config", a.config, "Experiment config (JSON)");
  cmd->add_option("--out", a.out, "Output directory (overrides output_dir)");
  cmd->add_option("--jobs", a.jobs, "Worker threads (0: all processors)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed-offset", a.seed_offset, "Added to every seed");
}

adavar::SweepOptions options_from(const Args& a) {
  adavar::SweepOptions o;
  o.out_dir = a.out;
  o.jobs = a.jobs;
  o.seed_offset = a.seed_offset;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-adaptive bandit and linear mixture MDP experiments", "adavar"};
  app.require_subcommand(1);

  Args args;
  CLI::App* run = app.add_subcommand("run", "Run a seed sweep and write per-run CSVs");
  add_run_flags(run, args);
  CLI::App* falsify =
      app.add_subcommand("falsify", "Monte-Carlo check of the vector martingale bound");
  add_run_flags(falsify, args);
  CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config_file", args.config, "Experiment config (JSON)");
  validate->add_option("--config", args.config, "Experiment config (JSON)");
  CLI::App* rep = app.add_subcommand("report", "Print summary.csv and write curves.csv");
  rep->add_option("dir", args.out, "Sweep output directory");
  rep->add_option("--out", args.out, "Sweep output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  if (cmd == rep ? args.out.empty() : args.config.empty()) {
    std::cerr << "adavar " << cmd->get_name() << ": missing "
              << (cmd == rep ? "directory" : "config") << "\n"
              << cmd->help();
    return 2;
  }

  try {
    if (cmd == rep) {
      adavar::report(args.out, std::cout);
      return 0;
    }
    const adavar::ExperimentConfig cfg = adavar::parse_config(args.config);
    if (cmd == validate) {
      std::cout << args.config << ": ok (" << adavar::to_string(cfg.kind) << ", K=" << cfg.horizon
                << ", " << cfg.seeds.size() << " seeds, " << cfg.learners.size()
                << " learners)\n";
      return 0;
    }
    const adavar::SweepResult res = cmd == falsify
                                        ? adavar::run_falsify(cfg, options_from(args))
                                        : adavar::run_sweep(cfg, options_from(args));
    std::cout << "wrote " << res.runs.size() << " run files to " << res.out_dir.string() << "\n";
    adavar::report(res.out_dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "adavar " << cmd->get_name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
