#include "adavar/confidence.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adavar {
namespace {

void check_delta(double delta, const char* where) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument(std::string(where) + ": delta must lie in (0, 1), got " +
                                std::to_string(delta));
  }
}

double sq(double x) { return x * x; }

// log(4 k^2 c / delta)
double log_term(double k, double c, double delta) { return std::log(4.0 * k * k * c / delta); }

}  // namespace

double bernstein_radius(const BernsteinRadiusInput& in) {
  check_delta(in.delta, "bernstein_radius");
  if (!(in.rho > 0.0) || in.v < 0.0 || in.k == 0) {
    throw std::invalid_argument("bernstein_radius: need rho > 0, v >= 0, k >= 1");
  }
  const double lg = log_term(static_cast<double>(in.k), 1.0, in.delta);
  return 16.0 * in.rho * std::sqrt(in.v * lg) + 6.0 * in.rho * in.big_r * lg;
}

bool save_uses_residual_branch(int ell, std::uint64_t k, int big_l, double delta) {
  const double kp1 = static_cast<double>(k) + 1.0;
  return std::ldexp(1.0, ell) >= 64.0 * std::sqrt(log_term(kp1, big_l, delta));
}

double varhat_branch(int ell, std::uint64_t k, int big_l, double delta, double big_r,
                     double weighted_sq_residuals, std::uint64_t psi_count) {
  check_delta(delta, "varhat_branch");
  if (save_uses_residual_branch(ell, k, big_l, delta)) {
    return weighted_sq_residuals;
  }
  return sq(big_r) * static_cast<double>(psi_count);
}

double save_radius(const SaveRadiusInput& in) {
  check_delta(in.delta, "save_radius");
  if (in.ell < 1 || in.ell > in.big_l || in.varhat < 0.0 || in.k == 0) {
    throw std::invalid_argument("save_radius: need 1 <= ell <= L, varhat >= 0, k >= 1");
  }
  const double k = static_cast<double>(in.k);
  const double scale = std::ldexp(1.0, -in.ell);  // 2^{-l}
  const double inner_log = log_term(k + 1.0, in.big_l, in.delta);
  const double outer_log = log_term(k, in.big_l, in.delta);
  const double radicand =
      (8.0 * in.varhat + 6.0 * sq(in.big_r) * inner_log + std::ldexp(1.0, -2 * in.ell + 4)) *
      outer_log;
  return 16.0 * scale * std::sqrt(radicand) + 6.0 * scale * in.big_r * outer_log +
         std::ldexp(1.0, -in.ell + 1);
}

bool mdp_uses_residual_branch(int ell, std::uint64_t k, int big_h, int big_l, double delta) {
  const double lg = log_term(static_cast<double>(k), sq(big_h) * big_l, delta);
  return std::ldexp(1.0, ell) >= 64.0 * std::sqrt(lg);
}

double mdp_varhat_branch(int ell, std::uint64_t k, int big_h, int big_l, double delta,
                         double weighted_sq_residuals, std::uint64_t psi_count,
                         double leading_factor) {
  check_delta(delta, "mdp_varhat_branch");
  if (mdp_uses_residual_branch(ell, k, big_h, big_l, delta)) {
    return leading_factor * weighted_sq_residuals;
  }
  return static_cast<double>(psi_count);
}

double mdp_radius(const MdpRadiusInput& in) {
  check_delta(in.delta, "mdp_radius");
  if (in.ell < 1 || in.ell > in.big_l || in.varhat < 0.0 || in.k == 0 || in.big_h < 1 ||
      !(in.lambda > 0.0) || !(in.big_b > 0.0)) {
    throw std::invalid_argument("mdp_radius: invalid input");
  }
  const double scale = std::ldexp(1.0, -in.ell);
  const double lg = log_term(static_cast<double>(in.k), sq(in.big_h) * in.big_l, in.delta);
  const double radicand =
      (8.0 * in.varhat + 8.0 * lg + std::ldexp(1.0, -2 * in.ell + 5) * in.lambda * sq(in.big_b)) *
      lg;
  return 16.0 * scale * std::sqrt(radicand) + 6.0 * scale * lg +
         scale * std::sqrt(in.lambda) * in.big_b;
}

double freedman_radius(double v, double m, double delta) {
  check_delta(delta, "freedman_radius");
  if (v < 0.0 || !(m > 0.0)) {
    throw std::invalid_argument("freedman_radius: need v >= 0 and M > 0");
  }
  const double lg = std::log(1.0 / delta);
  return std::sqrt(2.0 * v * lg) + (2.0 / 3.0) * m * lg;
}

}  // namespace adavar
