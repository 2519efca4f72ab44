#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "adavar/csv.hpp"
#include "adavar/harness.hpp"

#ifndef ADAVAR_GIT_REVISION
#define ADAVAR_GIT_REVISION ""
#endif

namespace adavar {
namespace {

namespace fs = std::filesystem;

std::unique_ptr<BanditLearner> make_bandit_learner(const LearnerSpec& l, std::size_t dim) {
  if (l.name == "save") {
    return std::make_unique<SaveLearner>(dim, SaveConfig{l.alpha, l.delta, l.big_r, l.lambda});
  }
  if (l.name == "oful") {
    OfulConfig c;
    c.lambda = l.lambda;
    c.delta = l.delta;
    c.big_r = l.big_r;
    return std::make_unique<OfulLearner>(dim, c);
  }
  if (l.name == "weighted_oful") {
    WeightedOfulConfig c;
    c.lambda = l.lambda;
    c.delta = l.delta;
    c.sigma_min = l.sigma_min;
    return std::make_unique<WeightedOfulLearner>(dim, c);
  }
  throw std::invalid_argument("unknown bandit learner " + l.name);
}

std::unique_ptr<MdpLearner> make_mdp_learner(const LearnerSpec& l, const MixtureMdp& mdp) {
  if (l.name == "ucrl_ave") {
    UcrlAveConfig c;
    c.alpha = l.alpha;
    c.delta = l.delta;
    c.lambda = l.lambda;
    c.big_b = l.big_b;
    c.varhat_leading_factor = l.varhat_leading_factor;
    return std::make_unique<UcrlAveLearner>(mdp, c);
  }
  if (l.name == "optimal") {
    return std::make_unique<OptimalPolicyLearner>(mdp);
  }
  throw std::invalid_argument("unknown mdp learner " + l.name);
}

std::string run_file_name(const std::string& learner, std::uint64_t seed) {
  return learner + "_seed" + std::to_string(seed) + ".csv";
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int resolve_jobs(const ExperimentConfig& cfg, const SweepOptions& opts) {
  const int jobs = opts.jobs >= 0 ? opts.jobs : cfg.jobs;
  return jobs > 0 ? jobs : omp_get_num_procs();
}

fs::path resolve_out(const ExperimentConfig& cfg, const SweepOptions& opts) {
  fs::path out = opts.out_dir.empty() ? fs::path(cfg.output_dir) : opts.out_dir;
  fs::create_directories(out);
  return out;
}

struct Task {
  const LearnerSpec* learner;
  std::uint64_t seed;
};

void write_manifest(const fs::path& out, const ExperimentConfig& cfg, const SweepOptions& opts,
                    int jobs, const std::string& started, double seconds,
                    const std::vector<RunFile>& runs) {
  nlohmann::json m;
  m["name"] = cfg.name;
  m["kind"] = to_string(cfg.kind);
  m["code_version"] = code_version();
  m["config"] = cfg.source;
  m["seed_offset"] = opts.seed_offset;
  m["jobs"] = jobs;
  m["started_at"] = started;
  m["wall_clock_seconds"] = seconds;
  m["summary"] = "summary.csv";
  m["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    m["runs"].push_back({{"learner", r.learner}, {"seed", r.seed}, {"file", r.file}});
  }
  write_file_atomic((out / "manifest.json").string(), m.dump(2) + "\n");
}

SweepResult sweep(const ExperimentConfig& cfg, const SweepOptions& opts, bool parallel) {
  if (cfg.kind == ExperimentKind::kFalsifier) {
    return run_falsify(cfg, opts);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  const fs::path out = resolve_out(cfg, opts);
  const int jobs = resolve_jobs(cfg, opts);

  std::vector<Task> tasks;
  for (const auto& l : cfg.learners) {
    for (std::uint64_t s : cfg.seeds) {
      tasks.push_back({&l, s + opts.seed_offset});
    }
  }
  const auto n = static_cast<std::int64_t>(tasks.size());
  std::vector<RunTrace> traces(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<bool> failed{false};

  auto run_task = [&](std::int64_t i) {
    if (failed.load()) {
      return;
    }
    const Task& t = tasks[static_cast<std::size_t>(i)];
    try {
      const std::string text = run_one(cfg, *t.learner, t.seed, &traces[static_cast<std::size_t>(i)]);
      write_file_atomic((out / run_file_name(t.learner->name, t.seed)).string(), text);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] =
          t.learner->name + " seed " + std::to_string(t.seed) + ": " + e.what();
      failed.store(true);
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (std::int64_t i = 0; i < n; ++i) {
      run_task(i);
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      run_task(i);
    }
  }

  for (const auto& e : errors) {
    if (!e.empty()) {
      throw std::runtime_error("run failed: " + e);
    }
  }

  std::ostringstream summary;
  write_summary_csv(summary, aggregate(traces, cfg.horizon));
  write_file_atomic((out / "summary.csv").string(), summary.str());

  SweepResult result{out, {}};
  for (const auto& t : tasks) {
    result.runs.push_back({t.learner->name, t.seed, run_file_name(t.learner->name, t.seed)});
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out, cfg, opts, parallel ? jobs : 1, started, seconds, result.runs);
  return result;
}

}  // namespace

MdpSpec make_mdp_spec(const MdpInstanceSpec& spec, std::uint64_t seed) {
  switch (spec.generator) {
    case MdpGenerator::kRandom:
      return random_mdp_spec(spec.n_states, spec.n_actions, spec.horizon, spec.dim, seed);
    case MdpGenerator::kRiverSwim:
      return river_swim_spec(spec.n_states, spec.horizon, spec.dim, seed);
    case MdpGenerator::kDeterministic:
      return deterministic_mdp_spec(spec.n_states, spec.n_actions, spec.horizon, spec.dim, seed);
    case MdpGenerator::kGoal:
      return goal_mdp_spec(spec.n_states, spec.n_actions, spec.horizon, spec.dim, seed);
  }
  throw std::invalid_argument("unknown mdp generator");
}

std::string code_version() {
  std::string v = "adavar 0.1.0";
  const std::string rev = ADAVAR_GIT_REVISION;
  if (!rev.empty()) {
    v += " (" + rev + ")";
  }
  return v;
}

std::string run_one(const ExperimentConfig& cfg, const LearnerSpec& learner, std::uint64_t seed,
                    RunTrace* trace) {
  const std::uint64_t instance_seed = cfg.instance_seed.value_or(seed);
  std::ostringstream os;
  RunTrace local{learner.name, seed, {}, {}};
  if (cfg.kind == ExperimentKind::kBandit) {
    const BanditInstance inst = BanditInstance::build(cfg.bandit, instance_seed);
    auto l = make_bandit_learner(learner, inst.dim());
    const auto records = run_bandit(inst, *l, seed);
    write_bandit_csv(os, records);
    for (const auto& r : records) {
      local.cum_regret.push_back(r.cum_regret);
      local.violation.push_back(!r.coverage_flag);
    }
  } else if (cfg.kind == ExperimentKind::kMdp) {
    const MixtureMdp mdp = build_mixture_mdp(make_mdp_spec(cfg.mdp, instance_seed));
    auto l = make_mdp_learner(learner, mdp);
    const auto records = run_mdp(mdp, *l, cfg.horizon, seed);
    write_mdp_csv(os, records);
    for (const auto& r : records) {
      local.cum_regret.push_back(r.cum_regret);
      local.violation.push_back(!r.optimism_flag);
    }
  } else {
    throw std::invalid_argument("run_one: falsifier configs have no learners");
  }
  if (trace != nullptr) {
    *trace = std::move(local);
  }
  return os.str();
}

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opts) {
  return sweep(cfg, opts, true);
}

SweepResult run_sweep_serial(const ExperimentConfig& cfg, const SweepOptions& opts) {
  return sweep(cfg, opts, false);
}

SweepResult run_falsify(const ExperimentConfig& cfg, const SweepOptions& opts) {
  if (cfg.kind != ExperimentKind::kFalsifier) {
    throw std::invalid_argument("falsify: config kind is " + to_string(cfg.kind) +
                                ", expected falsifier");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  const fs::path out = resolve_out(cfg, opts);
  const int jobs = resolve_jobs(cfg, opts);

  SweepResult result{out, {}};
  std::ostringstream summary;
  write_csv_row(summary, {"seed", "trials", "violations", "violation_fraction", "allowed_fraction"});
  for (std::uint64_t s : cfg.seeds) {
    FalsifierConfig fc = cfg.falsifier;
    fc.seed = s + opts.seed_offset;
    const FalsifierReport rep = martingale_falsifier(fc, jobs);
    std::ostringstream os;
    write_csv_row(os, {"trial", "first_violation_step", "max_ratio"});
    std::uint64_t violations = 0;
    for (const auto& t : rep.trials) {
      violations += t.first_violation_step >= 0 ? 1 : 0;
      write_csv_row(os, {std::to_string(t.trial), std::to_string(t.first_violation_step),
                         format_double(t.max_ratio)});
    }
    const std::string file = "falsifier_seed" + std::to_string(fc.seed) + ".csv";
    write_file_atomic((out / file).string(), os.str());
    result.runs.push_back({"falsifier", fc.seed, file});
    write_csv_row(summary, {std::to_string(fc.seed), std::to_string(rep.trials.size()),
                            std::to_string(violations), format_double(rep.violation_fraction),
                            format_double(rep.allowed_fraction)});
  }
  write_file_atomic((out / "summary.csv").string(), summary.str());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out, cfg, opts, jobs, started, seconds, result.runs);
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation

std::vector<std::uint64_t> summary_checkpoints(std::uint64_t horizon) {
  std::vector<std::uint64_t> ks;
  for (std::uint64_t div : {10, 4, 2, 1}) {
    const std::uint64_t k = std::max<std::uint64_t>(1, horizon / div);
    if (ks.empty() || ks.back() != k) {
      ks.push_back(k);
    }
  }
  return ks;
}

std::vector<std::uint64_t> slope_checkpoints(std::uint64_t horizon) {
  std::vector<std::uint64_t> ks;
  if (horizon < 10) {
    return ks;
  }
  const double lo = static_cast<double>(horizon / 10);
  const double ratio = static_cast<double>(horizon) / lo;
  for (int i = 0; i < 20; ++i) {
    auto k = static_cast<std::uint64_t>(std::llround(lo * std::pow(ratio, i / 19.0)));
    k = std::clamp<std::uint64_t>(k, 1, horizon);
    if (ks.empty() || ks.back() != k) {
      ks.push_back(k);
    }
  }
  return ks;
}

double loglog_slope(std::span<const double> mean_cum_regret) {
  const auto ks = slope_checkpoints(mean_cum_regret.size());
  if (ks.size() < 2) {
    return std::nan("");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto k : ks) {
    const double y = mean_cum_regret[k - 1];
    if (!(y > 0.0)) {
      return std::nan("");
    }
    const double lx = std::log(static_cast<double>(k)), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(ks.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double median(std::vector<double> xs) {
  if (xs.empty()) {
    return std::nan("");
  }
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) {
    return 0.0;
  }
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) {
    ss += (x - mean) * (x - mean);
  }
  return std::sqrt(ss / (n - 1.0) / n);
}

std::vector<SummaryRow> aggregate(std::span<const RunTrace> traces, std::uint64_t horizon) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunTrace*>> groups;
  for (const auto& t : traces) {
    if (t.cum_regret.size() != horizon) {
      throw std::invalid_argument("aggregate: run " + t.learner + " seed " +
                                  std::to_string(t.seed) + " has the wrong length");
    }
    if (groups.find(t.learner) == groups.end()) {
      order.push_back(t.learner);
    }
    groups[t.learner].push_back(&t);
  }

  const auto checkpoints = summary_checkpoints(horizon);
  std::vector<SummaryRow> rows;
  for (const auto& name : order) {
    const auto& runs = groups[name];
    const double n = static_cast<double>(runs.size());

    std::vector<double> mean_curve(horizon, 0.0);
    double any_violation = 0.0, step_violation = 0.0;
    for (const RunTrace* r : runs) {
      for (std::size_t i = 0; i < horizon; ++i) {
        mean_curve[i] += r->cum_regret[i] / n;
      }
      const auto bad = std::count(r->violation.begin(), r->violation.end(), true);
      any_violation += bad > 0 ? 1.0 : 0.0;
      step_violation += static_cast<double>(bad) / static_cast<double>(horizon);
      double prev = -std::numeric_limits<double>::infinity();
      for (auto k : checkpoints) {
        if (r->cum_regret[k - 1] < prev - 1e-9) {
          throw std::logic_error("aggregate: cumulative regret decreases between checkpoints");
        }
        prev = r->cum_regret[k - 1];
      }
    }
    const double slope = loglog_slope(mean_curve);

    for (auto k : checkpoints) {
      std::vector<double> at_k;
      for (const RunTrace* r : runs) {
        at_k.push_back(r->cum_regret[k - 1]);
      }
      rows.push_back({name, k, runs.size(), mean_curve[k - 1], median(at_k),
                      standard_error(at_k), any_violation / n, step_violation / n, slope});
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  write_csv_row(os, {"learner", "k", "runs", "mean_cum_regret", "median_cum_regret",
                     "stderr_cum_regret", "violation_run_fraction", "violation_step_fraction",
                     "loglog_slope"});
  for (const auto& r : rows) {
    write_csv_row(os, {r.learner, std::to_string(r.k), std::to_string(r.runs),
                       format_double(r.mean_cum_regret), format_double(r.median_cum_regret),
                       format_double(r.stderr_cum_regret),
                       format_double(r.violation_run_fraction),
                       format_double(r.violation_step_fraction), format_double(r.loglog_slope)});
  }
}

}  // namespace adavar
