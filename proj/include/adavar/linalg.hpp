#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace adavar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Regularized weighted Gram matrix with a maintained inverse.
///
/// Holds gram = reg * I + sum w_i^2 x_i x_i^T, its inverse, and the moment
/// vector sum w_i^2 y_i x_i. The inverse is kept current with the rank-1
/// (Sherman-Morrison) identity, so an update costs O(d^2). Every
/// kRefactorPeriod updates the inverse is recomputed from gram by Cholesky to
/// bound drift.
///
/// One writer at a time; concurrent const access is safe.
class PsdAccumulator {
 public:
  static constexpr std::uint64_t kRefactorPeriod = 1u << 12;

  /// Throws std::invalid_argument for dim == 0 or reg <= 0 (or non-finite).
  PsdAccumulator(std::size_t dim, double reg);

  /// gram += w^2 x x^T, moment += w^2 y x, count += 1.
  ///
  /// w is the square root of the regression weight. The layered learners
  /// always pass w in [0, 1]; the oracle-variance baseline passes 1/sigma.
  /// Throws std::invalid_argument for negative or non-finite w, a dimension
  /// mismatch or non-finite x.
  void rank_one_update(double w, const Vector& x, double y);

  /// sqrt(x^T gram^{-1} x).
  double elliptical_norm(const Vector& x) const;

  /// sqrt(v^T gram v).
  double gram_norm(const Vector& v) const;

  /// Ridge solution gram^{-1} moment.
  Vector solve_theta() const;

  /// v^T (gram - reg * I) v, i.e. sum w_i^2 <v, x_i>^2. Values in
  /// (-1e-12, 0) are clamped to 0; anything lower throws std::logic_error.
  double quadratic_form_data(const Vector& v) const;

  std::size_t dim() const { return dim_; }
  double reg() const { return reg_; }
  std::uint64_t count() const { return count_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& gram_inv() const { return gram_inv_; }
  const Vector& moment() const { return moment_; }
  /// gram - reg * I, accumulated separately so it carries no cancellation.
  const Matrix& data_gram() const { return data_gram_; }

 private:
  void refactor();

  std::size_t dim_;
  double reg_;
  Matrix gram_;
  Matrix data_gram_;
  Matrix gram_inv_;
  Vector moment_;
  std::uint64_t count_ = 0;
  std::uint64_t since_refactor_ = 0;
};

}  // namespace adavar
