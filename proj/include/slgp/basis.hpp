#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace slgp {

enum class BasisKind { cosine, sine };

std::string_view to_string(BasisKind kind);

/// Integer frequencies of one Fourier term: omega_t multiplies the response
/// coordinate t, omega_x the index coordinate x.
struct FrequencyPair {
  int omega_t = 0;
  int omega_x = 0;

  friend bool operator==(const FrequencyPair&, const FrequencyPair&) = default;
};

/// cos or sin of 2*pi*(omega_t*t + omega_x*x). `weight` is the square root of
/// the term's eigenvalue; it is applied when the field is evaluated, never
/// folded into eval_basis.
struct BasisFunction {
  BasisKind kind = BasisKind::cosine;
  FrequencyPair freq;
  double weight = 1.0;

  double eigenvalue() const { return weight * weight; }
  double operator()(double x, double t) const;
};

/// Bivariate Fourier basis, sorted by non-increasing eigenvalue.
class BasisSet {
 public:
  BasisSet(int order, std::vector<BasisFunction> functions);

  int order() const { return order_; }
  std::size_t rank() const { return functions_.size(); }
  std::span<const BasisFunction> functions() const { return functions_; }
  const BasisFunction& operator[](std::size_t j) const { return functions_[j]; }

  /// Vector of sqrt(lambda_j).
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  int order_;
  std::vector<BasisFunction> functions_;
  Eigen::VectorXd weights_;
};

/// All sin/cos terms with 1 <= omega_t <= q and -q <= omega_x <= q, each
/// with lambda = 1 / (1 + |omega_t| + |omega_x|). Rank is 2q(2q+1).
BasisSet build_fourier_basis(int order);

/// Unweighted basis values e_j(x, t), x and t in [0, 1].
Eigen::VectorXd eval_basis(const BasisSet& basis, double x, double t);

/// Row i * |t_grid| + k holds eval_basis(x_grid[i], t_grid[k]).
Eigen::MatrixXd eval_basis_grid(const BasisSet& basis,
                                std::span<const double> x_grid,
                                std::span<const double> t_grid);

}  // namespace slgp
