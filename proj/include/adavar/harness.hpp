#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "adavar/bandit.hpp"
#include "adavar/confidence.hpp"
#include "adavar/mdp.hpp"

namespace adavar {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { kBandit, kMdp, kFalsifier };

enum class MdpGenerator { kRandom, kRiverSwim, kDeterministic, kGoal };

struct MdpInstanceSpec {
  MdpGenerator generator = MdpGenerator::kRandom;
  int n_states = 5;
  int n_actions = 2;
  int horizon = 5;
  std::size_t dim = 3;
};

MdpSpec make_mdp_spec(const MdpInstanceSpec& spec, std::uint64_t seed);

/// Learner name plus its parameters, with defaults already filled in.
struct LearnerSpec {
  std::string name;  // save | oful | weighted_oful | ucrl_ave | optimal
  double alpha = 0.0;
  double delta = 0.05;
  double big_r = 1.0;
  double lambda = 1.0;
  double big_b = 0.0;
  double varhat_leading_factor = 8.0;
  double sigma_min = 0.01;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kBandit;
  std::string name;
  std::uint64_t horizon = 0;  // K: rounds or episodes
  std::vector<std::uint64_t> seeds;
  /// Fixes the instance across seeds; by default each seed draws its own.
  std::optional<std::uint64_t> instance_seed;
  BanditSpec bandit;
  MdpInstanceSpec mdp;
  FalsifierConfig falsifier;
  std::vector<LearnerSpec> learners;
  std::string output_dir;
  int jobs = 0;  // 0: all available processors
  nlohmann::json source;
};

/// Parses and validates a JSON config. Throws ConfigError whose message
/// carries line and column for syntax errors and the offending field name
/// for validation errors.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "config");
ExperimentConfig parse_config(const std::filesystem::path& path);

std::string to_string(ExperimentKind kind);

struct SweepOptions {
  std::filesystem::path out_dir;  // empty: config output_dir
  int jobs = -1;                  // < 0: config value
  std::uint64_t seed_offset = 0;
};

struct RunFile {
  std::string learner;
  std::uint64_t seed;
  std::string file;
};

struct SweepResult {
  std::filesystem::path out_dir;
  std::vector<RunFile> runs;
};

/// Cumulative regret curve and violation flags of one finished run.
struct RunTrace {
  std::string learner;
  std::uint64_t seed;
  std::vector<double> cum_regret;  // index k - 1
  std::vector<bool> violation;     // coverage (bandit) or optimism (mdp) failures
};

/// One row per learner and checkpoint.
struct SummaryRow {
  std::string learner;
  std::uint64_t k;
  std::size_t runs;
  double mean_cum_regret;
  double median_cum_regret;
  double stderr_cum_regret;
  double violation_run_fraction;
  double violation_step_fraction;
  double loglog_slope;
};

/// Checkpoints K/10, K/4, K/2, K (at least 1, duplicates dropped).
std::vector<std::uint64_t> summary_checkpoints(std::uint64_t horizon);
/// 20 log-spaced rounds over [K/10, K], duplicates dropped.
std::vector<std::uint64_t> slope_checkpoints(std::uint64_t horizon);
/// Least-squares slope of log(mean cumulative regret) against log(k) over
/// slope_checkpoints; NaN when a mean is not positive or K < 10.
double loglog_slope(std::span<const double> mean_cum_regret);

double median(std::vector<double> xs);
/// Sample standard deviation over sqrt(n); 0 for n < 2.
double standard_error(std::span<const double> xs);

std::vector<SummaryRow> aggregate(std::span<const RunTrace> traces, std::uint64_t horizon);
void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);

/// Runs one (learner, seed) pair and returns the per-run CSV text.
std::string run_one(const ExperimentConfig& cfg, const LearnerSpec& learner, std::uint64_t seed,
                    RunTrace* trace = nullptr);

/// Runs every (learner, seed) pair over a pool of OpenMP threads, then
/// writes summary.csv and manifest.json. Per-run files are written
/// atomically as each run finishes. Throws the first run error after the
/// in-flight runs finish; completed files are kept.
SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opts = {});
/// Same outputs, one run after another on the calling thread.
SweepResult run_sweep_serial(const ExperimentConfig& cfg, const SweepOptions& opts = {});

/// Falsifier experiment: one report per seed, falsifier_seed<s>.csv plus
/// summary.csv and manifest.json.
SweepResult run_falsify(const ExperimentConfig& cfg, const SweepOptions& opts = {});

/// Reprints summary.csv from `dir` as an aligned table on `os` and writes
/// curves.csv (k, learner, mean_cum_regret, stderr) from the run files
/// listed in manifest.json.
void report(const std::filesystem::path& dir, std::ostream& os);

/// Renders rows as a whitespace-aligned table.
std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

std::string code_version();

}  // namespace adavar
