#include "vgame/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vgame {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInterval: return "InvalidInterval";
    case ErrorCode::kTooFewNodes: return "TooFewNodes";
    case ErrorCode::kInvalidQuadrature: return "InvalidQuadrature";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNotCertified: return "NotCertified";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kBasisNotOrthonormal: return "BasisNotOrthonormal";
    case ErrorCode::kSingularStep: return "SingularStep";
    case ErrorCode::kAsymmetryDetected: return "AsymmetryDetected";
    case ErrorCode::kNodeNotOnGrid: return "NodeNotOnGrid";
    case ErrorCode::kSingularG11: return "SingularG11";
    case ErrorCode::kSingularG3: return "SingularG3";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kTransversalityViolated: return "TransversalityViolated";
    case ErrorCode::kSingularWeight: return "SingularWeight";
    case ErrorCode::kCaptureNotBracketed: return "CaptureNotBracketed";
    case ErrorCode::kInnerNoConvergence: return "InnerNoConvergence";
    case ErrorCode::kInvariantViolated: return "InvariantViolated";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

QuadratureRule parse_rule(std::string_view name) {
  if (name == "trapezoid") return QuadratureRule::kTrapezoid;
  if (name == "simpson") return QuadratureRule::kSimpson;
  throw Error(ErrorCode::kInvalidQuadrature,
              "unknown quadrature rule '" + std::string(name) + "'");
}

std::string_view to_string(QuadratureRule rule) {
  return rule == QuadratureRule::kSimpson ? "simpson" : "trapezoid";
}

namespace {

// Unit-step weights of the composite rule over `panels` panels.
std::vector<double> unit_pattern(std::size_t panels, QuadratureRule rule) {
  std::vector<double> w(panels + 1, 0.0);
  if (panels == 0) return w;
  if (rule == QuadratureRule::kTrapezoid || panels == 1) {
    for (std::size_t k = 0; k < panels; ++k) {
      w[k] += 0.5;
      w[k + 1] += 0.5;
    }
    return w;
  }
  std::size_t simpson_panels = panels % 2 == 0 ? panels : panels - 3;
  for (std::size_t k = 0; k + 1 < simpson_panels; k += 2) {
    w[k] += 1.0 / 3.0;
    w[k + 1] += 4.0 / 3.0;
    w[k + 2] += 1.0 / 3.0;
  }
  if (simpson_panels != panels) {
    const std::size_t k = simpson_panels;
    w[k] += 3.0 / 8.0;
    w[k + 1] += 9.0 / 8.0;
    w[k + 2] += 9.0 / 8.0;
    w[k + 3] += 3.0 / 8.0;
  }
  return w;
}

}  // namespace

TimeGrid::TimeGrid(double t0, double t1, std::size_t n, QuadratureRule rule)
    : t0_(t0), t1_(t1), h_(0.0), rule_(rule) {
  if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
    throw Error(ErrorCode::kInvalidInterval,
                "need t1 > t0, got [" + std::to_string(t0) + ", " +
                    std::to_string(t1) + "]");
  }
  if (n < 2) {
    throw Error(ErrorCode::kTooFewNodes,
                "need at least 2 nodes, got " + std::to_string(n));
  }
  if (rule == QuadratureRule::kSimpson && n % 2 == 0) {
    throw Error(ErrorCode::kInvalidQuadrature,
                "simpson needs an odd node count, got " + std::to_string(n));
  }
  h_ = (t1 - t0) / static_cast<double>(n - 1);
  nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes_[i] = t0 + h_ * static_cast<double>(i);
  }
  nodes_.back() = t1;
  weights_ = segment_weights(0, n - 1);

  const auto N = static_cast<Eigen::Index>(n);
  forward_ = Eigen::MatrixXd::Zero(N, N);
  tail_ = Eigen::MatrixXd::Zero(N, N);
  adjoint_ = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fw = segment_weights(0, i);
    for (std::size_t j = 0; j <= i; ++j) forward_(i, j) = fw[j];
    const auto tw = segment_weights(i, n - 1);
    for (std::size_t k = i; k < n; ++k) tail_(i, k) = tw[k - i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i; k < n; ++k) {
      adjoint_(i, k) = weights_[k] * forward_(k, i) / weights_[i];
    }
  }
}

std::vector<double> TimeGrid::segment_weights(std::size_t lo,
                                              std::size_t hi) const {
  if (hi < lo || hi >= nodes_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "bad segment node range");
  }
  auto w = unit_pattern(hi - lo, rule_);
  for (auto& x : w) x *= h_;
  return w;
}

std::size_t TimeGrid::index_of(double t) const {
  const double scale = std::max({1.0, std::abs(t0_), std::abs(t1_)});
  const double tol = 1e-12 * scale;
  if (t < t0_ - tol || t > t1_ + tol) {
    throw Error(ErrorCode::kNodeNotOnGrid, "t = " + std::to_string(t));
  }
  const auto i = static_cast<std::size_t>(std::llround((t - t0_) / h_));
  if (i >= nodes_.size() || std::abs(nodes_[i] - t) > tol) {
    throw Error(ErrorCode::kNodeNotOnGrid, "t = " + std::to_string(t));
  }
  return i;
}

bool TimeGrid::operator==(const TimeGrid& other) const {
  return t0_ == other.t0_ && t1_ == other.t1_ && rule_ == other.rule_ &&
         nodes_.size() == other.nodes_.size();
}

TimeGrid make_grid(double t0, double t1, std::size_t n, QuadratureRule rule) {
  return TimeGrid(t0, t1, n, rule);
}

// ---------------------------------------------------------------------------

Kernel1::Kernel1(std::size_t nodes, Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols),
      values_(nodes, Eigen::MatrixXd::Zero(rows, cols)) {}

Kernel1::Kernel1(std::vector<Eigen::MatrixXd> values)
    : values_(std::move(values)) {
  if (values_.empty()) return;
  rows_ = values_.front().rows();
  cols_ = values_.front().cols();
  for (const auto& v : values_) {
    if (v.rows() != rows_ || v.cols() != cols_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "kernel matrices must share dimensions");
    }
  }
}

Kernel1 Kernel1::constant(std::size_t nodes, const Eigen::MatrixXd& value) {
  return Kernel1(std::vector<Eigen::MatrixXd>(nodes, value));
}

bool Kernel1::operator==(const Kernel1& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ &&
         values_ == other.values_;
}

Kernel2::Kernel2(std::size_t nodes, Eigen::Index rows, Eigen::Index cols)
    : nodes_(nodes), rows_(rows), cols_(cols),
      values_(nodes * nodes, Eigen::MatrixXd::Zero(rows, cols)) {}

Kernel2 Kernel2::constant(std::size_t nodes, const Eigen::MatrixXd& value) {
  Kernel2 k(nodes, value.rows(), value.cols());
  for (auto& v : k.values_) v = value;
  return k;
}

Kernel2 Kernel2::adjoint() const {
  Kernel2 out(nodes_, cols_, rows_);
  for (std::size_t i = 0; i < nodes_; ++i) {
    for (std::size_t j = 0; j < nodes_; ++j) {
      out.at(j, i) = at(i, j).transpose();
    }
  }
  return out;
}

bool Kernel2::operator==(const Kernel2& other) const {
  return nodes_ == other.nodes_ && rows_ == other.rows_ &&
         cols_ == other.cols_ && values_ == other.values_;
}

// ---------------------------------------------------------------------------

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kConstant: return "constant";
    case KernelFamily::kTable: return "table";
    case KernelFamily::kExponential: return "exponential";
    case KernelFamily::kPolynomial: return "polynomial";
  }
  return "constant";
}

KernelFamily parse_family(std::string_view name) {
  if (name == "constant") return KernelFamily::kConstant;
  if (name == "table") return KernelFamily::kTable;
  if (name == "exponential") return KernelFamily::kExponential;
  if (name == "polynomial") return KernelFamily::kPolynomial;
  throw Error(ErrorCode::kValidationError,
              "unknown kernel family '" + std::string(name) + "'");
}

KernelSpec KernelSpec::constant(Eigen::MatrixXd value) {
  KernelSpec s;
  s.family = KernelFamily::kConstant;
  s.value = std::move(value);
  return s;
}

KernelSpec KernelSpec::exponential(Eigen::MatrixXd scale, Eigen::MatrixXd rate) {
  if (scale.rows() != rate.rows() || scale.cols() != rate.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "exponential scale and rate must have equal shapes");
  }
  KernelSpec s;
  s.family = KernelFamily::kExponential;
  s.scale = std::move(scale);
  s.rate = std::move(rate);
  return s;
}

KernelSpec KernelSpec::polynomial(std::vector<PolynomialTerm> terms) {
  if (terms.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "polynomial needs terms");
  }
  for (const auto& term : terms) {
    if (term.coefficient.rows() != terms.front().coefficient.rows() ||
        term.coefficient.cols() != terms.front().coefficient.cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "polynomial coefficients must share dimensions");
    }
    if (term.t_power < 0 || term.s_power < 0) {
      throw Error(ErrorCode::kValidationError, "negative polynomial power");
    }
  }
  KernelSpec s;
  s.family = KernelFamily::kPolynomial;
  s.terms = std::move(terms);
  return s;
}

KernelSpec KernelSpec::from_table(std::vector<Eigen::MatrixXd> table) {
  if (table.empty()) {
    throw Error(ErrorCode::kGridMismatch, "empty kernel table");
  }
  for (const auto& m : table) {
    if (m.rows() != table.front().rows() || m.cols() != table.front().cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "table matrices must share dimensions");
    }
  }
  KernelSpec s;
  s.family = KernelFamily::kTable;
  s.table = std::move(table);
  return s;
}

Eigen::Index KernelSpec::rows() const {
  switch (family) {
    case KernelFamily::kConstant: return value.rows();
    case KernelFamily::kExponential: return scale.rows();
    case KernelFamily::kPolynomial: return terms.front().coefficient.rows();
    case KernelFamily::kTable: return table.front().rows();
  }
  return 0;
}

Eigen::Index KernelSpec::cols() const {
  switch (family) {
    case KernelFamily::kConstant: return value.cols();
    case KernelFamily::kExponential: return scale.cols();
    case KernelFamily::kPolynomial: return terms.front().coefficient.cols();
    case KernelFamily::kTable: return table.front().cols();
  }
  return 0;
}

Eigen::MatrixXd KernelSpec::evaluate(double t, double s) const {
  switch (family) {
    case KernelFamily::kConstant:
      return value;
    case KernelFamily::kExponential:
      return scale.cwiseProduct((rate * (t - s)).array().exp().matrix());
    case KernelFamily::kPolynomial: {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), cols());
      for (const auto& term : terms) {
        out += term.coefficient * (std::pow(t, term.t_power) *
                                   std::pow(s, term.s_power));
      }
      return out;
    }
    case KernelFamily::kTable:
      break;
  }
  throw Error(ErrorCode::kGridMismatch,
              "table kernels can only be evaluated on their grid");
}

Eigen::MatrixXd KernelSpec::dt(double t, double s) const {
  switch (family) {
    case KernelFamily::kConstant:
      return Eigen::MatrixXd::Zero(rows(), cols());
    case KernelFamily::kExponential:
      return scale.cwiseProduct(rate).cwiseProduct(
          (rate * (t - s)).array().exp().matrix());
    case KernelFamily::kPolynomial: {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), cols());
      for (const auto& term : terms) {
        if (term.t_power == 0) continue;
        out += term.coefficient *
               (term.t_power * std::pow(t, term.t_power - 1) *
                std::pow(s, term.s_power));
      }
      return out;
    }
    case KernelFamily::kTable:
      break;
  }
  throw Error(ErrorCode::kGridMismatch,
              "table kernels have no analytic time derivative");
}

bool KernelSpec::operator==(const KernelSpec& other) const {
  if (family != other.family) return false;
  switch (family) {
    case KernelFamily::kConstant: return value == other.value;
    case KernelFamily::kExponential:
      return scale == other.scale && rate == other.rate;
    case KernelFamily::kPolynomial: return terms == other.terms;
    case KernelFamily::kTable: return table == other.table;
  }
  return false;
}

Kernel1 materialize1(const KernelSpec& spec, const TimeGrid& grid) {
  const std::size_t n = grid.size();
  if (spec.family == KernelFamily::kTable) {
    if (spec.table.size() != n) {
      throw Error(ErrorCode::kGridMismatch,
                  "grid mismatch: table has " + std::to_string(spec.table.size()) +
                      " matrices, grid has " + std::to_string(n) + " nodes");
    }
    return Kernel1(spec.table);
  }
  std::vector<Eigen::MatrixXd> values;
  values.reserve(n);
  for (double t : grid.nodes()) values.push_back(spec.evaluate(t, 0.0));
  return Kernel1(std::move(values));
}

Kernel2 materialize2(const KernelSpec& spec, const TimeGrid& grid) {
  const std::size_t n = grid.size();
  Kernel2 out(n, spec.rows(), spec.cols());
  if (spec.family == KernelFamily::kTable) {
    if (spec.table.size() != n * n) {
      throw Error(ErrorCode::kGridMismatch,
                  "grid mismatch: table has " + std::to_string(spec.table.size()) +
                      " matrices, grid needs " + std::to_string(n * n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) = spec.table[i * n + j];
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.at(i, j) = spec.evaluate(grid.node(i), grid.node(j));
    }
  }
  return out;
}

KernelSpec to_table_spec(const Kernel1& kernel) {
  return KernelSpec::from_table(kernel.values());
}

KernelSpec to_table_spec(const Kernel2& kernel) {
  return KernelSpec::from_table(kernel.values());
}

double integrate1(const TimeGrid& grid, std::span<const double> f) {
  if (f.size() != grid.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(grid.size()) + " values, got " +
                    std::to_string(f.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += grid.weight(i) * f[i];
  return sum;
}

double integrate2(const TimeGrid& grid, std::span<const double> f) {
  const std::size_t n = grid.size();
  if (f.size() != n * n) {
    throw Error(ErrorCode::kLengthMismatch, "expected n² values");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += grid.weight(j) * f[i * n + j];
    sum += grid.weight(i) * row;
  }
  return sum;
}

NodeVectors zero_vectors(std::size_t nodes, Eigen::Index dim) {
  return NodeVectors(nodes, Eigen::VectorXd::Zero(dim));
}

Eigen::VectorXd stack(const NodeVectors& v) {
  Eigen::Index total = 0;
  for (const auto& x : v) total += x.size();
  Eigen::VectorXd out(total);
  Eigen::Index k = 0;
  for (const auto& x : v) {
    out.segment(k, x.size()) = x;
    k += x.size();
  }
  return out;
}

NodeVectors unstack(const Eigen::VectorXd& x, std::size_t nodes,
                    Eigen::Index dim) {
  if (x.size() != static_cast<Eigen::Index>(nodes) * dim) {
    throw Error(ErrorCode::kLengthMismatch, "unstack size mismatch");
  }
  NodeVectors out(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    out[i] = x.segment(static_cast<Eigen::Index>(i) * dim, dim);
  }
  return out;
}

double max_norm(const NodeVectors& v) {
  double m = 0.0;
  for (const auto& x : v) {
    if (x.size() > 0) m = std::max(m, x.cwiseAbs().maxCoeff());
  }
  return m;
}

double max_abs_diff(const NodeVectors& a, const NodeVectors& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "node count mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) {
      throw Error(ErrorCode::kDimensionMismatch, "vector size mismatch");
    }
    if (a[i].size() > 0) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace vgame
