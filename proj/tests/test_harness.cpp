#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adavar/csv.hpp"
#include "adavar/harness.hpp"

namespace fs = std::filesystem;
using namespace adavar;

namespace {

fs::path scratch(const std::string& tag) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() /
               ("adavar_test_" + std::string(info->name()) + "_" + tag + "_" +
                std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ADAVAR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallBandit = R"({
  "kind": "bandit", "K": 300, "d": 2, "seeds": [4, 5, 6],
  "instance": {"sigma": {"schedule": "alternating", "levels": [0.1, 0.5]}},
  "learners": ["save", "oful"]
})";

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

TEST(Config, MinimalBanditDefaults) {
  const auto cfg = parse_config_text(R"({"kind": "bandit", "d": 3, "K": 1000, "seeds": [1]})");
  EXPECT_EQ(cfg.kind, ExperimentKind::kBandit);
  EXPECT_EQ(cfg.horizon, 1000u);
  EXPECT_EQ(cfg.bandit.dim, 3u);
  EXPECT_EQ(cfg.bandit.big_r, 1.0);
  ASSERT_EQ(cfg.learners.size(), 1u);
  const auto& l = cfg.learners[0];
  EXPECT_EQ(l.name, "save");
  EXPECT_EQ(l.delta, 0.05);
  EXPECT_EQ(l.big_r, 1.0);
  EXPECT_NEAR(l.alpha, 1.0 / std::pow(1000.0, 1.5), 1e-18);
}

TEST(Config, MinimalMdpDefaults) {
  const auto cfg = parse_config_text(R"({"kind": "mdp", "d": 4, "K": 100, "seeds": [1]})");
  ASSERT_EQ(cfg.learners.size(), 1u);
  const auto& l = cfg.learners[0];
  EXPECT_EQ(l.name, "ucrl_ave");
  EXPECT_NEAR(l.alpha, 1.0 / std::pow(100.0 * 5.0, 1.5), 1e-18);
  EXPECT_NEAR(l.big_b, 2.0, 1e-15);
  EXPECT_NEAR(l.lambda, 0.25, 1e-15);
  EXPECT_EQ(l.varhat_leading_factor, 8.0);
}

TEST(Config, DeltaOutOfRangeNamesDelta) {
  try {
    parse_config_text(R"({"kind": "bandit", "d": 2, "K": 10, "seeds": [1], "delta": 1.5})");
    FAIL() << "accepted delta = 1.5";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("delta"), std::string::npos) << e.what();
  }
}

TEST(Config, DuplicateSeedsRejected) {
  try {
    parse_config_text(R"({"kind": "bandit", "d": 2, "K": 10, "seeds": [3, 1, 3]})");
    FAIL() << "accepted duplicate seeds";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("seeds"), std::string::npos) << e.what();
  }
}

TEST(Config, SyntaxErrorCarriesLineAndColumn) {
  try {
    parse_config_text("{\n  \"kind\": \"bandit\",\n  \"K\": ,\n}", "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("bad.json:3:", 0), 0u) << e.what();
  }
}

TEST(Config, RejectsUnknownFieldsAndBadValues) {
  EXPECT_THROW(parse_config_text(R"({"kind": "bandit", "K": 10, "seeds": [1], "bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"kind": "bandit", "K": 0, "seeds": [1]})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"kind": "bandit", "K": 10, "seeds": []})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"kind": "bandit", "K": 10, "seeds": [1], "learners": ["ucrl_ave"]})"),
               ConfigError);
  EXPECT_THROW(parse_config_text(R"({"kind": "bandit", "K": 10, "seeds": [1], "learners": ["save", "save"]})"),
               ConfigError);
  EXPECT_THROW(parse_config_text(
                   R"({"kind": "bandit", "K": 10, "seeds": [1], "R": 0.2, "instance": {"sigma": {"levels": [0.5]}}})"),
               ConfigError);
  EXPECT_THROW(parse_config_text(R"({"kind": "falsifier", "K": 10, "seeds": [1], "falsifier": {"noise": {"bound": null}}})"),
               ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::recursive_directory_iterator(ADAVAR_CONFIG_DIR)) {
    if (entry.path().extension() == ".json") {
      EXPECT_NO_THROW(parse_config(entry.path())) << entry.path();
    }
  }
}

// ---------------------------------------------------------------------------
// Aggregation helpers

TEST(Summary, Checkpoints) {
  EXPECT_EQ(summary_checkpoints(1000), (std::vector<std::uint64_t>{100, 250, 500, 1000}));
  EXPECT_EQ(summary_checkpoints(3), (std::vector<std::uint64_t>{1, 3}));
  const auto sc = slope_checkpoints(10000);
  EXPECT_EQ(sc.size(), 20u);
  EXPECT_EQ(sc.front(), 1000u);
  EXPECT_EQ(sc.back(), 10000u);
}

TEST(Summary, SlopeOfPowerLaw) {
  std::vector<double> curve(10000);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    curve[i] = 3.0 * std::sqrt(static_cast<double>(i + 1));
  }
  EXPECT_NEAR(loglog_slope(curve), 0.5, 1e-3);
  std::fill(curve.begin(), curve.end(), 0.0);
  EXPECT_TRUE(std::isnan(loglog_slope(curve)));
}

TEST(Summary, MedianAndStandardError) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  EXPECT_NEAR(standard_error(xs), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(standard_error(std::vector<double>{7.0}), 0.0);
}

// ---------------------------------------------------------------------------
// Sweeps

TEST(Sweep, FileCountAndSummaryMedian) {
  const auto cfg = parse_config_text(kSmallBandit);
  SweepOptions o;
  o.out_dir = scratch("a");
  const auto res = run_sweep(cfg, o);
  EXPECT_EQ(res.runs.size(), 6u);
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(o.out_dir)) {
    csvs += e.path().extension() == ".csv" && e.path().filename() != "summary.csv" ? 1 : 0;
  }
  EXPECT_EQ(csvs, 6u);
  ASSERT_TRUE(fs::exists(o.out_dir / "summary.csv"));
  ASSERT_TRUE(fs::exists(o.out_dir / "manifest.json"));

  // median at K recomputed from the per-run files
  std::vector<double> finals;
  for (std::uint64_t s : {4u, 5u, 6u}) {
    const auto t = read_csv_file((o.out_dir / ("save_seed" + std::to_string(s) + ".csv")).string());
    finals.push_back(std::stod(t.rows.back()[t.column("cum_regret")]));
  }
  std::sort(finals.begin(), finals.end());
  const auto summary = read_csv_file((o.out_dir / "summary.csv").string());
  bool found = false;
  for (const auto& row : summary.rows) {
    if (row[summary.column("learner")] == "save" && row[summary.column("k")] == "300") {
      EXPECT_EQ(std::stod(row[summary.column("median_cum_regret")]), finals[1]);
      EXPECT_EQ(row[summary.column("runs")], "3");
      found = true;
    }
  }
  EXPECT_TRUE(found);
  fs::remove_all(o.out_dir);
}

TEST(Sweep, RerunIsByteIdentical) {
  const auto cfg = parse_config_text(kSmallBandit);
  SweepOptions a, b;
  a.out_dir = scratch("a");
  a.jobs = 1;
  b.out_dir = scratch("b");
  b.jobs = 4;
  const auto ra = run_sweep(cfg, a);
  run_sweep(cfg, b);
  for (const auto& run : ra.runs) {
    EXPECT_EQ(slurp(a.out_dir / run.file), slurp(b.out_dir / run.file)) << run.file;
  }
  EXPECT_EQ(slurp(a.out_dir / "summary.csv"), slurp(b.out_dir / "summary.csv"));
  fs::remove_all(a.out_dir);
  fs::remove_all(b.out_dir);
}

TEST(Sweep, SerialMatchesParallel) {
  const auto cfg = parse_config_text(R"({"kind": "mdp", "K": 40, "seeds": [1, 2, 3, 4],
    "instance": {"generator": "goal", "S": 6}, "learners": ["ucrl_ave", "optimal"]})");
  SweepOptions a, b;
  a.out_dir = scratch("serial");
  b.out_dir = scratch("omp");
  const auto ra = run_sweep_serial(cfg, a);
  run_sweep(cfg, b);
  for (const auto& run : ra.runs) {
    EXPECT_EQ(slurp(a.out_dir / run.file), slurp(b.out_dir / run.file)) << run.file;
  }
  EXPECT_EQ(slurp(a.out_dir / "summary.csv"), slurp(b.out_dir / "summary.csv"));
  fs::remove_all(a.out_dir);
  fs::remove_all(b.out_dir);
}

TEST(Sweep, SeedOffsetShiftsRuns) {
  const auto cfg = parse_config_text(kSmallBandit);
  SweepOptions o;
  o.out_dir = scratch("off");
  o.seed_offset = 10;
  const auto res = run_sweep(cfg, o);
  EXPECT_TRUE(fs::exists(o.out_dir / "save_seed14.csv"));
  EXPECT_EQ(res.runs.front().seed, 14u);
  fs::remove_all(o.out_dir);
}

TEST(Sweep, ManifestRecordsProvenance) {
  const auto cfg = parse_config_text(kSmallBandit);
  SweepOptions o;
  o.out_dir = scratch("m");
  run_sweep(cfg, o);
  const auto m = nlohmann::json::parse(slurp(o.out_dir / "manifest.json"));
  EXPECT_EQ(m.at("config"), cfg.source);
  EXPECT_EQ(m.at("code_version").get<std::string>(), code_version());
  EXPECT_TRUE(m.at("wall_clock_seconds").is_number());
  EXPECT_EQ(m.at("runs").size(), 6u);
  fs::remove_all(o.out_dir);
}

TEST(Sweep, FalsifyWritesReports) {
  const auto cfg = parse_config_text(R"({"kind": "falsifier", "K": 50, "seeds": [1, 2],
    "falsifier": {"trials": 20, "noise": {"levels": [0.2], "bound": 0.2}}})");
  SweepOptions o;
  o.out_dir = scratch("f");
  const auto res = run_falsify(cfg, o);
  EXPECT_EQ(res.runs.size(), 2u);
  const auto t = read_csv_file((o.out_dir / "falsifier_seed1.csv").string());
  EXPECT_EQ(t.header, (std::vector<std::string>{"trial", "first_violation_step", "max_ratio"}));
  EXPECT_EQ(t.rows.size(), 20u);
  fs::remove_all(o.out_dir);
}

TEST(Report, ReprintsSummaryVerbatim) {
  const auto cfg = parse_config_text(kSmallBandit);
  SweepOptions o;
  o.out_dir = scratch("r");
  run_sweep(cfg, o);
  std::ostringstream os;
  report(o.out_dir, os);
  const auto summary = read_csv_file((o.out_dir / "summary.csv").string());
  EXPECT_EQ(os.str(), format_table(summary.header, summary.rows));
  // every summary cell appears unchanged in the table
  for (const auto& row : summary.rows) {
    for (const auto& cell : row) {
      EXPECT_NE(os.str().find(cell), std::string::npos) << cell;
    }
  }
  const auto curves = read_csv_file((o.out_dir / "curves.csv").string());
  EXPECT_EQ(curves.header, (std::vector<std::string>{"k", "learner", "mean_cum_regret", "stderr"}));
  EXPECT_EQ(curves.rows.size(), 2u * 300u);
  fs::remove_all(o.out_dir);
}

TEST(Report, TableAlignment) {
  const std::string t = format_table({"learner", "k"}, {{"save", "10"}, {"weighted_oful", "1000"}});
  EXPECT_EQ(t,
            "learner           k\n"
            "save             10\n"
            "weighted_oful  1000\n");
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, ValidateWritesNothing) {
  const fs::path dir = scratch("v");
  fs::create_directories(dir);
  const fs::path cfg = dir / "c.json";
  std::ofstream(cfg) << R"({"kind": "bandit", "K": 50, "seeds": [1], "output_dir": ")" << (dir / "out").string()
                     << "\"}";
  EXPECT_EQ(run_cli("validate " + cfg.string(), dir / "log.txt"), 0);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_EQ(run_cli(std::string("validate --config ") + ADAVAR_CONFIG_DIR + "/bandit_example.json", dir / "log.txt"), 0);
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwo) {
  const fs::path dir = scratch("u");
  fs::create_directories(dir);
  EXPECT_EQ(run_cli("frobnicate", dir / "log.txt"), 2);
  EXPECT_NE(slurp(dir / "log.txt").find("run"), std::string::npos);  // usage lists subcommands
  EXPECT_EQ(run_cli("", dir / "log.txt"), 2);
  EXPECT_EQ(run_cli("run", dir / "log.txt"), 2);
  EXPECT_EQ(run_cli("run --jobs notanumber x.json", dir / "log.txt"), 2);
  fs::remove_all(dir);
}

TEST(Cli, RunErrorsExitOne) {
  const fs::path dir = scratch("e");
  fs::create_directories(dir);
  EXPECT_EQ(run_cli("validate " + (dir / "missing.json").string(), dir / "log.txt"), 1);
  std::ofstream(dir / "bad.json") << R"({"kind": "bandit", "K": 5, "seeds": [1], "delta": 1.5})";
  EXPECT_EQ(run_cli("validate " + (dir / "bad.json").string(), dir / "log.txt"), 1);
  EXPECT_NE(slurp(dir / "log.txt").find("delta"), std::string::npos);
  EXPECT_EQ(run_cli("report " + (dir / "nothing").string(), dir / "log.txt"), 1);
  fs::remove_all(dir);
}

TEST(Cli, RunThenReport) {
  const fs::path dir = scratch("run");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << kSmallBandit;
  const fs::path out = dir / "out";
  EXPECT_EQ(run_cli("run --config " + (dir / "c.json").string() + " --out " + out.string() +
                        " --jobs 2 --seed-offset 1",
                    dir / "log.txt"),
            0);
  EXPECT_TRUE(fs::exists(out / "save_seed5.csv"));
  EXPECT_TRUE(fs::exists(out / "curves.csv"));
  fs::remove(out / "curves.csv");
  EXPECT_EQ(run_cli("report " + out.string(), dir / "report.txt"), 0);
  EXPECT_TRUE(fs::exists(out / "curves.csv"));
  std::ostringstream expect;
  report(out, expect);
  EXPECT_EQ(slurp(dir / "report.txt"), expect.str());
  fs::remove_all(dir);
}
