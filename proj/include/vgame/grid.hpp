#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vgame/error.hpp"

namespace vgame {

using NodeVectors = std::vector<Eigen::VectorXd>;

enum class QuadratureRule { kTrapezoid, kSimpson };

QuadratureRule parse_rule(std::string_view name);
std::string_view to_string(QuadratureRule rule);

/// Uniform discretization of [t0, t1] with composite quadrature weights.
///
/// Besides the full-interval weights the grid hands out the weight tables
/// used by Volterra and backward (tail) integrals:
///  - `forward_table()(i, j)`: weight of node j in the rule on [t0, t_i];
///  - `tail_table()(i, k)`: weight of node k in the rule on [t_i, t1];
///  - `adjoint_tail_table()(i, k) = w_k * forward(k, i) / w_i`, the transpose
///    of the forward rule under the grid inner product. Backward equations
///    built with it are the exact discrete adjoints of forward Nyström solves.
class TimeGrid {
 public:
  TimeGrid(double t0, double t1, std::size_t n, QuadratureRule rule);

  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return t1_; }
  double step() const noexcept { return h_; }
  double length() const noexcept { return t1_ - t0_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  QuadratureRule rule() const noexcept { return rule_; }

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double node(std::size_t i) const { return nodes_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }

  /// Weights of the composite rule on nodes lo..hi (entry k-lo for node k).
  std::vector<double> segment_weights(std::size_t lo, std::size_t hi) const;

  const Eigen::MatrixXd& forward_table() const noexcept { return forward_; }
  const Eigen::MatrixXd& tail_table() const noexcept { return tail_; }
  const Eigen::MatrixXd& adjoint_tail_table() const noexcept { return adjoint_; }

  /// Index of the node equal to t (relative tolerance 1e-12), else throws
  /// NodeNotOnGrid.
  std::size_t index_of(double t) const;

  bool operator==(const TimeGrid& other) const;

 private:
  double t0_;
  double t1_;
  double h_;
  QuadratureRule rule_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  Eigen::MatrixXd forward_;
  Eigen::MatrixXd tail_;
  Eigen::MatrixXd adjoint_;
};

TimeGrid make_grid(double t0, double t1, std::size_t n,
                   QuadratureRule rule = QuadratureRule::kTrapezoid);

/// Matrix-valued function of one time argument, tabulated on a grid.
class Kernel1 {
 public:
  Kernel1() = default;
  Kernel1(std::size_t nodes, Eigen::Index rows, Eigen::Index cols);
  explicit Kernel1(std::vector<Eigen::MatrixXd> values);

  static Kernel1 constant(std::size_t nodes, const Eigen::MatrixXd& value);

  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  const Eigen::MatrixXd& at(std::size_t i) const { return values_[i]; }
  Eigen::MatrixXd& at(std::size_t i) { return values_[i]; }
  const std::vector<Eigen::MatrixXd>& values() const noexcept { return values_; }

  bool operator==(const Kernel1& other) const;

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<Eigen::MatrixXd> values_;
};

/// Matrix-valued function of two time arguments, one matrix per ordered node
/// pair, stored with the first index major.
class Kernel2 {
 public:
  Kernel2() = default;
  Kernel2(std::size_t nodes, Eigen::Index rows, Eigen::Index cols);

  static Kernel2 constant(std::size_t nodes, const Eigen::MatrixXd& value);

  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return nodes_; }

  const Eigen::MatrixXd& at(std::size_t i, std::size_t j) const {
    return values_[i * nodes_ + j];
  }
  Eigen::MatrixXd& at(std::size_t i, std::size_t j) {
    return values_[i * nodes_ + j];
  }
  const std::vector<Eigen::MatrixXd>& values() const noexcept { return values_; }

  /// K(i, j)ᵀ stored at (j, i).
  Kernel2 adjoint() const;

  bool operator==(const Kernel2& other) const;

 private:
  std::size_t nodes_ = 0;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<Eigen::MatrixXd> values_;
};

enum class KernelFamily { kConstant, kTable, kExponential, kPolynomial };

std::string_view to_string(KernelFamily family);
KernelFamily parse_family(std::string_view name);

/// Term c · t^t_power · s^s_power of a polynomial kernel (c entrywise).
struct PolynomialTerm {
  int t_power = 0;
  int s_power = 0;
  Eigen::MatrixXd coefficient;

  bool operator==(const PolynomialTerm&) const = default;
};

/// Config-level description of a kernel, materialized onto a grid.
///
/// `exponential` is entrywise scale ⊙ exp(rate ⊙ (t − s)); `polynomial` is
/// Σ coefficient · tᵖ sᵠ. Arity-1 kernels are evaluated with s = 0.
/// `table` holds one matrix per node (arity 1) or per node pair, first index
/// major (arity 2).
struct KernelSpec {
  KernelFamily family = KernelFamily::kConstant;
  Eigen::MatrixXd value;                 // constant
  Eigen::MatrixXd scale;                 // exponential
  Eigen::MatrixXd rate;                  // exponential
  std::vector<PolynomialTerm> terms;     // polynomial
  std::vector<Eigen::MatrixXd> table;    // table

  static KernelSpec constant(Eigen::MatrixXd value);
  static KernelSpec exponential(Eigen::MatrixXd scale, Eigen::MatrixXd rate);
  static KernelSpec polynomial(std::vector<PolynomialTerm> terms);
  static KernelSpec from_table(std::vector<Eigen::MatrixXd> table);

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  bool is_analytic() const noexcept { return family != KernelFamily::kTable; }

  /// Value at (t, s); table kernels cannot be evaluated off-grid.
  Eigen::MatrixXd evaluate(double t, double s = 0.0) const;
  /// ∂/∂t of evaluate(t, s); analytic families only.
  Eigen::MatrixXd dt(double t, double s = 0.0) const;

  bool operator==(const KernelSpec& other) const;
};

Kernel1 materialize1(const KernelSpec& spec, const TimeGrid& grid);
Kernel2 materialize2(const KernelSpec& spec, const TimeGrid& grid);

KernelSpec to_table_spec(const Kernel1& kernel);
KernelSpec to_table_spec(const Kernel2& kernel);

/// Σ weights[i] · f[i].
double integrate1(const TimeGrid& grid, std::span<const double> f);

/// ∫∫ f(x, y) by the tensor product of the 1-D weights; f is first-index
/// major with grid.size()² entries.
double integrate2(const TimeGrid& grid, std::span<const double> f);

/// Per-node vectors of length `dim`, all zero.
NodeVectors zero_vectors(std::size_t nodes, Eigen::Index dim);

/// Stack per-node vectors into one column (node major).
Eigen::VectorXd stack(const NodeVectors& v);
NodeVectors unstack(const Eigen::VectorXd& x, std::size_t nodes, Eigen::Index dim);

double max_norm(const NodeVectors& v);
double max_abs_diff(const NodeVectors& a, const NodeVectors& b);

}  // namespace vgame
