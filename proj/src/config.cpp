#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "adavar/harness.hpp"

namespace adavar {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("invalid config: " + field + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return item.key() == a; })) {
      fail(where.empty() ? item.key() : where + "." + item.key(), "unknown field");
    }
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) {
    fail(path_of(where, key), "expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    fail(path_of(where, key), "must be finite");
  }
  return x;
}

std::uint64_t get_count(const json& obj, const std::string& where, const char* key,
                        std::uint64_t fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    fail(path_of(where, key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_string()) {
    fail(path_of(where, key), "expected a string");
  }
  return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    fail(path_of(where, key), "expected true or false");
  }
  return v.get<bool>();
}

std::vector<double> get_levels(const json& obj, const std::string& where, const char* key,
                               std::vector<double> fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) {
    fail(path_of(where, key), "expected a non-empty array of numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      fail(path_of(where, key), "expected a non-empty array of numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

const json& get_object(const json& obj, const char* key) {
  static const json empty = json::object();
  if (!obj.contains(key)) {
    return empty;
  }
  if (!obj.at(key).is_object()) {
    fail(key, "expected an object");
  }
  return obj.at(key);
}

void check_delta(double delta, const std::string& field) {
  if (!(delta > 0.0 && delta < 1.0)) {
    fail(field, "delta must lie in (0, 1)");
  }
}

void parse_bandit_instance(const json& inst, ExperimentConfig& cfg) {
  reject_unknown(inst, "instance", {"arms", "n_arms", "gap", "noise", "theta_norm", "sigma"});
  BanditSpec& b = cfg.bandit;
  const std::string arms = get_string(inst, "instance", "arms", "fresh_sphere");
  if (arms == "fresh_sphere") {
    b.arms = ArmGenerator::kFreshSphere;
  } else if (arms == "fixed_sphere") {
    b.arms = ArmGenerator::kFixedSphere;
  } else if (arms == "hard_two_arm") {
    b.arms = ArmGenerator::kHardTwoArm;
  } else {
    fail("instance.arms", "expected fresh_sphere, fixed_sphere or hard_two_arm");
  }
  b.n_arms = get_count(inst, "instance", "n_arms", 10);
  b.gap = get_number(inst, "instance", "gap", 0.5);
  b.theta_norm = get_number(inst, "instance", "theta_norm", 1.0);
  const std::string noise = get_string(inst, "instance", "noise", "two_point");
  if (noise == "two_point") {
    b.noise = NoiseLaw::kTwoPoint;
  } else if (noise == "truncated_gaussian") {
    b.noise = NoiseLaw::kTruncatedGaussian;
  } else {
    fail("instance.noise", "expected two_point or truncated_gaussian");
  }

  const json& sig = inst.contains("sigma") ? inst.at("sigma") : json::object();
  if (!sig.is_object()) {
    fail("instance.sigma", "expected an object");
  }
  reject_unknown(sig, "instance.sigma", {"schedule", "levels", "switch_round"});
  const std::string schedule = get_string(sig, "instance.sigma", "schedule", "constant");
  if (schedule == "constant") {
    b.sigma.kind = SigmaSchedule::Kind::kConstant;
  } else if (schedule == "alternating") {
    b.sigma.kind = SigmaSchedule::Kind::kAlternating;
  } else if (schedule == "random_levels") {
    b.sigma.kind = SigmaSchedule::Kind::kRandomLevels;
  } else if (schedule == "two_phase") {
    b.sigma.kind = SigmaSchedule::Kind::kTwoPhase;
  } else {
    fail("instance.sigma.schedule",
         "expected constant, alternating, random_levels or two_phase");
  }
  b.sigma.levels = get_levels(sig, "instance.sigma", "levels", {0.0});
  b.sigma.switch_round = get_count(sig, "instance.sigma", "switch_round", cfg.horizon / 2);
  for (double s : b.sigma.levels) {
    if (s < 0.0 || s > b.big_r) {
      fail("instance.sigma.levels", "every level must lie in [0, R]");
    }
  }
  if (b.sigma.kind == SigmaSchedule::Kind::kTwoPhase && b.sigma.levels.size() != 2) {
    fail("instance.sigma.levels", "two_phase needs exactly two levels");
  }
}

void parse_mdp_instance(const json& inst, ExperimentConfig& cfg) {
  reject_unknown(inst, "instance", {"generator", "S", "A", "H"});
  MdpInstanceSpec& m = cfg.mdp;
  const std::string gen = get_string(inst, "instance", "generator", "random");
  if (gen == "random") {
    m.generator = MdpGenerator::kRandom;
  } else if (gen == "river_swim") {
    m.generator = MdpGenerator::kRiverSwim;
  } else if (gen == "deterministic") {
    m.generator = MdpGenerator::kDeterministic;
  } else if (gen == "goal") {
    m.generator = MdpGenerator::kGoal;
  } else {
    fail("instance.generator", "expected random, river_swim, deterministic or goal");
  }
  m.n_states = static_cast<int>(get_count(inst, "instance", "S", 5));
  m.n_actions = static_cast<int>(get_count(inst, "instance", "A", 2));
  m.horizon = static_cast<int>(get_count(inst, "instance", "H", 5));
  if (m.n_states < 1 || m.n_actions < 1 || m.horizon < 1) {
    fail("instance", "S, A and H must be at least 1");
  }
  if (m.generator == MdpGenerator::kRiverSwim && m.n_actions != 2) {
    fail("instance.A", "river_swim has exactly two actions");
  }
}

void parse_falsifier(const json& f, ExperimentConfig& cfg) {
  reject_unknown(f, "falsifier", {"trials", "delta", "lambda", "rho", "fixed_direction", "noise"});
  FalsifierConfig& fc = cfg.falsifier;
  fc.steps = cfg.horizon;
  fc.trials = get_count(f, "falsifier", "trials", 500);
  fc.delta = get_number(f, "falsifier", "delta", 0.05);
  fc.lambda = get_number(f, "falsifier", "lambda", 1.0);
  fc.rho = get_number(f, "falsifier", "rho", 1.0);
  fc.fixed_direction = get_bool(f, "falsifier", "fixed_direction", false);
  check_delta(fc.delta, "falsifier.delta");

  const json& noise = f.contains("noise") ? f.at("noise") : json::object();
  if (!noise.is_object()) {
    fail("falsifier.noise", "expected an object");
  }
  reject_unknown(noise, "falsifier.noise", {"levels", "alternate", "bound"});
  fc.noise.levels = get_levels(noise, "falsifier.noise", "levels", {0.5, 0.1});
  fc.noise.alternate = get_bool(noise, "falsifier.noise", "alternate", true);
  if (noise.contains("bound") && noise.at("bound").is_null()) {
    fc.noise.bound = std::numeric_limits<double>::infinity();  // no almost-sure bound
  } else {
    fc.noise.bound = get_number(noise, "falsifier.noise", "bound", 1.0);
  }
  if (cfg.bandit.dim > 0) {
    fc.dim = cfg.bandit.dim;
  }
  try {
    validate_falsifier_config(fc);
  } catch (const std::invalid_argument& e) {
    fail("falsifier", e.what());
  }
}

LearnerSpec parse_learner(const json& l, std::size_t index, const ExperimentConfig& cfg,
                          double default_alpha, double default_delta) {
  const std::string where = "learners[" + std::to_string(index) + "]";
  if (l.is_string()) {
    return parse_learner(json{{"name", l}}, index, cfg, default_alpha, default_delta);
  }
  if (!l.is_object()) {
    fail(where, "expected an object or a learner name");
  }
  LearnerSpec spec;
  spec.name = get_string(l, where, "name", "");
  spec.delta = get_number(l, where, "delta", default_delta);
  check_delta(spec.delta, where + ".delta");

  if (cfg.kind == ExperimentKind::kBandit) {
    const double big_r = cfg.bandit.big_r;
    if (spec.name == "save") {
      reject_unknown(l, where, {"name", "alpha", "delta", "R", "lambda"});
      spec.big_r = get_number(l, where, "R", big_r);
      const double alpha_default =
          default_alpha > 0.0 ? default_alpha : save_default_alpha(spec.big_r, cfg.horizon);
      spec.alpha = get_number(l, where, "alpha", alpha_default);
      spec.lambda = get_number(l, where, "lambda", 1.0);
    } else if (spec.name == "oful") {
      reject_unknown(l, where, {"name", "delta", "R", "lambda"});
      spec.big_r = get_number(l, where, "R", big_r);
      spec.lambda = get_number(l, where, "lambda", 1.0);
    } else if (spec.name == "weighted_oful") {
      reject_unknown(l, where, {"name", "delta", "lambda", "sigma_min"});
      spec.lambda = get_number(l, where, "lambda", 1.0);
      spec.sigma_min = get_number(l, where, "sigma_min", 0.01);
      if (!(spec.sigma_min > 0.0)) {
        fail(where + ".sigma_min", "must be positive");
      }
    } else {
      fail(where + ".name", "unknown bandit learner '" + spec.name +
                                "' (expected save, oful or weighted_oful)");
    }
    if (!(spec.big_r > 0.0)) {
      fail(where + ".R", "must be positive");
    }
  } else {
    if (spec.name == "ucrl_ave") {
      reject_unknown(l, where,
                     {"name", "alpha", "delta", "lambda", "B", "varhat_leading_factor"});
      const double alpha_default =
          default_alpha > 0.0 ? default_alpha : ucrl_default_alpha(cfg.horizon, cfg.mdp.horizon);
      spec.alpha = get_number(l, where, "alpha", alpha_default);
      spec.big_b = get_number(l, where, "B", std::sqrt(static_cast<double>(cfg.mdp.dim)));
      spec.lambda = get_number(l, where, "lambda", 1.0 / (spec.big_b * spec.big_b));
      spec.varhat_leading_factor = get_number(l, where, "varhat_leading_factor", 8.0);
      if (!(spec.big_b > 0.0)) {
        fail(where + ".B", "must be positive");
      }
      if (!(spec.varhat_leading_factor > 0.0)) {
        fail(where + ".varhat_leading_factor", "must be positive");
      }
    } else if (spec.name == "optimal") {
      reject_unknown(l, where, {"name"});
    } else {
      fail(where + ".name",
           "unknown mdp learner '" + spec.name + "' (expected ucrl_ave or optimal)");
    }
  }
  if (spec.name == "save" || spec.name == "ucrl_ave") {
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) {
      fail(where + ".alpha", "must lie in (0, 1)");
    }
  }
  if (!(spec.lambda > 0.0)) {
    fail(where + ".lambda", "must be positive");
  }
  return spec;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kBandit:
      return "bandit";
    case ExperimentKind::kMdp:
      return "mdp";
    case ExperimentKind::kFalsifier:
      return "falsifier";
  }
  return "?";
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is one past the offending character
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": parse error: " + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError(origin + ": top level must be a JSON object");
  }
  reject_unknown(doc, "", {"kind", "name", "K", "seeds", "instance_seed", "d", "R", "alpha",
                           "delta", "output_dir", "jobs", "instance", "learners", "falsifier"});

  ExperimentConfig cfg;
  cfg.source = doc;
  if (!doc.contains("kind")) {
    fail("kind", "missing (expected bandit, mdp or falsifier)");
  }
  const std::string kind = get_string(doc, "", "kind", "");
  if (kind == "bandit") {
    cfg.kind = ExperimentKind::kBandit;
  } else if (kind == "mdp") {
    cfg.kind = ExperimentKind::kMdp;
  } else if (kind == "falsifier") {
    cfg.kind = ExperimentKind::kFalsifier;
  } else {
    fail("kind", "expected bandit, mdp or falsifier");
  }
  cfg.name = get_string(doc, "", "name", kind);

  if (!doc.contains("K")) {
    fail("K", "missing");
  }
  cfg.horizon = get_count(doc, "", "K", 0);
  if (cfg.horizon < 1) {
    fail("K", "must be at least 1");
  }

  if (!doc.contains("seeds") || !doc.at("seeds").is_array() || doc.at("seeds").empty()) {
    fail("seeds", "expected a non-empty array of integers");
  }
  std::set<std::uint64_t> seen;
  for (const auto& s : doc.at("seeds")) {
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
      fail("seeds", "expected non-negative integers");
    }
    const auto seed = s.get<std::uint64_t>();
    if (!seen.insert(seed).second) {
      fail("seeds", "duplicate seed " + std::to_string(seed));
    }
    cfg.seeds.push_back(seed);
  }
  if (doc.contains("instance_seed")) {
    cfg.instance_seed = get_count(doc, "", "instance_seed", 0);
  }

  const std::uint64_t d = get_count(doc, "", "d", cfg.kind == ExperimentKind::kMdp ? 3 : 2);
  if (d < 1) {
    fail("d", "must be at least 1");
  }
  cfg.bandit.dim = d;
  cfg.bandit.horizon = cfg.horizon;
  cfg.mdp.dim = d;
  cfg.bandit.big_r = get_number(doc, "", "R", 1.0);
  if (!(cfg.bandit.big_r > 0.0)) {
    fail("R", "must be positive");
  }
  const double default_delta = get_number(doc, "", "delta", 0.05);
  check_delta(default_delta, "delta");
  const double default_alpha = get_number(doc, "", "alpha", 0.0);
  if (doc.contains("alpha") && !(default_alpha > 0.0 && default_alpha < 1.0)) {
    fail("alpha", "must lie in (0, 1)");
  }
  cfg.output_dir = get_string(doc, "", "output_dir", "out/" + cfg.name);
  const std::uint64_t jobs = get_count(doc, "", "jobs", 0);
  cfg.jobs = static_cast<int>(jobs);

  const json& inst = get_object(doc, "instance");
  switch (cfg.kind) {
    case ExperimentKind::kBandit:
      parse_bandit_instance(inst, cfg);
      try {
        (void)BanditInstance::build(cfg.bandit, cfg.instance_seed.value_or(cfg.seeds.front()));
      } catch (const std::invalid_argument& e) {
        fail("instance", e.what());
      }
      break;
    case ExperimentKind::kMdp:
      parse_mdp_instance(inst, cfg);
      try {
        (void)build_mixture_mdp(
            make_mdp_spec(cfg.mdp, cfg.instance_seed.value_or(cfg.seeds.front())));
      } catch (const std::invalid_argument& e) {
        fail("instance", e.what());
      }
      break;
    case ExperimentKind::kFalsifier:
      if (!inst.empty()) {
        fail("instance", "not used by falsifier experiments");
      }
      break;
  }

  if (cfg.kind == ExperimentKind::kFalsifier) {
    if (doc.contains("learners")) {
      fail("learners", "not used by falsifier experiments");
    }
    parse_falsifier(get_object(doc, "falsifier"), cfg);
    return cfg;
  }
  if (doc.contains("falsifier")) {
    fail("falsifier", "only used when kind is falsifier");
  }

  json learners = doc.contains("learners") ? doc.at("learners") : json::array();
  if (!learners.is_array()) {
    fail("learners", "expected an array");
  }
  if (learners.empty()) {
    learners.push_back(cfg.kind == ExperimentKind::kBandit ? "save" : "ucrl_ave");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < learners.size(); ++i) {
    cfg.learners.push_back(parse_learner(learners[i], i, cfg, default_alpha, default_delta));
    if (!names.insert(cfg.learners.back().name).second) {
      fail("learners[" + std::to_string(i) + "].name",
           "duplicate learner '" + cfg.learners.back().name + "'");
    }
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

}  // namespace adavar
