#include "adavar/linalg.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adavar {

PsdAccumulator::PsdAccumulator(std::size_t dim, double reg) : dim_(dim), reg_(reg) {
  if (dim == 0) {
    throw std::invalid_argument("PsdAccumulator: dim must be >= 1");
  }
  if (!(reg > 0.0) || !std::isfinite(reg)) {
    throw std::invalid_argument("PsdAccumulator: reg must be a positive finite number, got " +
                                std::to_string(reg));
  }
  const auto n = static_cast<Eigen::Index>(dim);
  gram_ = Matrix::Identity(n, n) * reg;
  data_gram_ = Matrix::Zero(n, n);
  gram_inv_ = Matrix::Identity(n, n) * (1.0 / reg);
  moment_ = Vector::Zero(n);
}

void PsdAccumulator::rank_one_update(double w, const Vector& x, double y) {
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw std::invalid_argument("rank_one_update: weight must be finite and >= 0");
  }
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw std::invalid_argument("rank_one_update: dimension mismatch");
  }
  if (!x.allFinite() || !std::isfinite(y)) {
    throw std::invalid_argument("rank_one_update: non-finite input");
  }
  ++count_;
  if (w == 0.0) {
    return;
  }
  const double w2 = w * w;
  const Matrix outer = x * x.transpose();
  data_gram_.noalias() += w2 * outer;
  gram_ = data_gram_;
  gram_.diagonal().array() += reg_;
  moment_.noalias() += (w2 * y) * x;

  if (++since_refactor_ >= kRefactorPeriod) {
    refactor();
  } else {
    const Vector u = gram_inv_ * x;
    const double denom = 1.0 + w2 * x.dot(u);
    gram_inv_.noalias() -= (w2 / denom) * (u * u.transpose());
  }
  gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
  assert(gram_inv_ == gram_inv_.transpose());
}

double PsdAccumulator::elliptical_norm(const Vector& x) const {
  const double q = x.dot(gram_inv_ * x);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

double PsdAccumulator::gram_norm(const Vector& v) const {
  const double q = v.dot(gram_ * v);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

Vector PsdAccumulator::solve_theta() const { return gram_inv_ * moment_; }

double PsdAccumulator::quadratic_form_data(const Vector& v) const {
  const double q = v.dot(data_gram_ * v);
  if (q < -1e-12) {
    throw std::logic_error("quadratic_form_data: data Gram matrix is not PSD (value " +
                           std::to_string(q) + ")");
  }
  return q < 0.0 ? 0.0 : q;
}

void PsdAccumulator::refactor() {
  const auto n = static_cast<Eigen::Index>(dim_);
  gram_inv_ = gram_.llt().solve(Matrix::Identity(n, n));
  since_refactor_ = 0;
}

}  // namespace adavar
