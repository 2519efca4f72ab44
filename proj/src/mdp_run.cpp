#include <cmath>
#include <ostream>

#include "adavar/csv.hpp"
#include "adavar/mdp.hpp"

namespace adavar {

std::vector<EpisodeRecord> run_mdp(const MixtureMdp& mdp, MdpLearner& learner,
                                   std::uint64_t episodes, std::uint64_t seed,
                                   const MdpObserver& observer) {
  const ValueTables star = exact_dp(mdp);
  const int s1 = mdp.start_state();
  const double v_star = star.v(1, s1);
  Rng rng = make_rng(seed, Stream::kTransition);

  std::vector<EpisodeRecord> records;
  records.reserve(episodes);
  double cum = 0.0, var_star = 0.0;
  for (std::uint64_t k = 1; k <= episodes; ++k) {
    const ValueTables& tables = learner.plan(k);
    const double v_pi = evaluate_policy(mdp, tables)[static_cast<std::size_t>(s1)];
    const double regret = v_star - v_pi;
    const bool optimistic = tables.v(1, s1) >= v_star - 1e-9;

    int s = s1;
    for (int h = 1; h <= mdp.horizon(); ++h) {
      const int a = tables.action(h, s);
      const int next = sample_next_state(mdp, s, a, rng);
      var_star += conditional_variance(mdp, s, a, star.v_row(h + 1));
      const StepRecord rec = learner.observe(k, h, s, a, next);
      if (observer.on_step) {
        observer.on_step(rec, learner);
      }
      s = next;
    }
    learner.end_episode(k);
    if (observer.on_episode_end) {
      observer.on_episode_end(k, learner);
    }
    cum += regret;
    records.push_back({k, regret, cum, var_star, optimistic, learner.layer_counts()});
  }
  return records;
}

void write_mdp_csv(std::ostream& os, std::span<const EpisodeRecord> records) {
  os << "k,regret,cum_regret,var_k_star_cum,optimism_flag,layer_counts\n";
  for (const auto& r : records) {
    std::string counts;
    for (std::size_t i = 0; i < r.layer_counts.size(); ++i) {
      if (i > 0) {
        counts += ';';
      }
      counts += std::to_string(r.layer_counts[i]);
    }
    os << r.k << ',' << format_double(r.regret) << ',' << format_double(r.cum_regret) << ','
       << format_double(r.var_k_star_cum) << ',' << (r.optimism_flag ? 1 : 0) << ','
       << csv_field(counts) << '\n';
  }
}

double mdp_count_cap_unscaled(int ell, std::size_t dim, std::uint64_t episodes, int horizon,
                              double lambda) {
  const double d = static_cast<double>(dim);
  const double kh = static_cast<double>(episodes) * horizon;
  return 2.0 * d * std::log1p(kh / (std::ldexp(1.0, -2 * ell) * d * lambda));
}

double mdp_count_cap(int ell, std::size_t dim, std::uint64_t episodes, int horizon,
                     double lambda) {
  return std::ldexp(1.0, 2 * ell) * mdp_count_cap_unscaled(ell, dim, episodes, horizon, lambda);
}

}  // namespace adavar
