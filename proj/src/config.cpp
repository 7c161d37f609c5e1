#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <sstream>

#include "vgame/cli.hpp"

namespace vgame::cli {

using Eigen::Index;
using Eigen::MatrixXd;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kValidationError, field + ": " + what);
}

std::string join(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

void only_keys(const json& obj, std::initializer_list<std::string_view> allowed,
               const std::string& field) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) invalid(join(field, key), "unknown field");
  }
}

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& object_at(const json& obj, std::string_view key, const std::string& field) {
  const json* v = find(obj, key);
  if (!v) invalid(join(field, key), "required");
  if (!v->is_object()) invalid(join(field, key), "expected an object");
  return *v;
}

double real(const json& obj, std::string_view key, const std::string& field,
            std::optional<double> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) invalid(join(field, key), "required");
    return *fallback;
  }
  if (!v->is_number()) invalid(join(field, key), "expected a number");
  return v->get<double>();
}

long long integer(const json& obj, std::string_view key, const std::string& field,
                  std::optional<long long> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) invalid(join(field, key), "required");
    return *fallback;
  }
  if (!v->is_number_integer()) invalid(join(field, key), "expected an integer");
  return v->get<long long>();
}

std::string text(const json& obj, std::string_view key, const std::string& field,
                 std::optional<std::string> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) invalid(join(field, key), "required");
    return *fallback;
  }
  if (!v->is_string()) invalid(join(field, key), "expected a string");
  return v->get<std::string>();
}

bool boolean(const json& obj, std::string_view key, const std::string& field, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) invalid(join(field, key), "expected true or false");
  return v->get<bool>();
}

// A number is a 1×1 matrix, a flat array a column, nested arrays are rows.
MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) invalid(field, "expected a number or a non-empty array");
  if (!j.front().is_array()) {
    MatrixXd col(static_cast<Index>(j.size()), 1);
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (!j[k].is_number()) invalid(field, "expected numbers");
      col(static_cast<Index>(k), 0) = j[k].get<double>();
    }
    return col;
  }
  const std::size_t cols = j.front().size();
  if (cols == 0) invalid(field, "empty row");
  MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) invalid(field, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) invalid(field, "expected numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const MatrixXd& m) {
  if (m.rows() == 1 && m.cols() == 1) return m(0, 0);
  json out = json::array();
  if (m.cols() == 1) {
    for (Index r = 0; r < m.rows(); ++r) out.push_back(m(r, 0));
    return out;
  }
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::string shape(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

std::string_view side_name(GameSide side) {
  return side == GameSide::kUpper ? "upper" : "lower";
}

GameSide parse_side(const std::string& name, const std::string& field) {
  if (name == "lower") return GameSide::kLower;
  if (name == "upper") return GameSide::kUpper;
  invalid(field, "expected 'lower' or 'upper', got '" + name + "'");
}

// ---- roles ---------------------------------------------------------------

struct Ref {
  std::string field;
  std::string name;
  const KernelSpec* spec = nullptr;

  explicit operator bool() const { return spec != nullptr; }
};

void check_roles(const RunConfig& c, std::initializer_list<std::string_view> allowed) {
  if (!c.roles.is_object()) invalid("roles", "expected an object");
  only_keys(c.roles, allowed, "roles");
}

Ref resolve(const RunConfig& c, const json& ref, const std::string& field) {
  if (!ref.is_string()) invalid(field, "expected a kernel name");
  const auto name = ref.get<std::string>();
  const auto it = c.kernels.find(name);
  if (it == c.kernels.end()) invalid(field, "undefined kernel '" + name + "'");
  return {field, name, &it->second};
}

Ref optional_role(const RunConfig& c, std::string_view role) {
  const json* v = find(c.roles, role);
  if (!v) return {};
  return resolve(c, *v, join("roles", role));
}

Ref required_role(const RunConfig& c, std::string_view role) {
  const json* v = find(c.roles, role);
  if (!v) invalid(join("roles", role), "required");
  return resolve(c, *v, join("roles", role));
}

void expect_shape(const Ref& r, Index rows, Index cols) {
  if (r.spec->rows() != rows || r.spec->cols() != cols) {
    invalid(r.field, "kernel '" + r.name + "' is " + shape(r.spec->rows(), r.spec->cols()) +
                         ", expected " + shape(rows, cols));
  }
}

void expect_table_size(const Ref& r, const TimeGrid& grid, std::size_t expected) {
  if (r.spec->family == KernelFamily::kTable && r.spec->table.size() != expected) {
    invalid(r.field, "grid mismatch: kernel '" + r.name + "' has " +
                         std::to_string(r.spec->table.size()) + " matrices, grid with n = " +
                         std::to_string(grid.size()) + " needs " + std::to_string(expected));
  }
}

Kernel1 arity1(const Ref& r, const TimeGrid& grid, Index rows, Index cols) {
  if (!r) return Kernel1::constant(grid.size(), MatrixXd::Zero(rows, cols));
  expect_shape(r, rows, cols);
  expect_table_size(r, grid, grid.size());
  return materialize1(*r.spec, grid);
}

Kernel2 arity2(const Ref& r, const TimeGrid& grid, Index rows, Index cols) {
  if (!r) return Kernel2::constant(grid.size(), MatrixXd::Zero(rows, cols));
  expect_shape(r, rows, cols);
  expect_table_size(r, grid, grid.size() * grid.size());
  return materialize2(*r.spec, grid);
}

MatrixXd constant_matrix(const Ref& r, Index rows, Index cols) {
  if (!r) return MatrixXd::Zero(rows, cols);
  if (r.spec->family != KernelFamily::kConstant) {
    invalid(r.field, "kernel '" + r.name + "' must be a constant kernel");
  }
  expect_shape(r, rows, cols);
  return r.spec->value;
}

// Diagonal blocks of a quadratic form must be symmetric: K = Kᵀ, L(x, y) = L(y, x)ᵀ.
void expect_symmetric(const Kernel1& K, const Ref& k_ref, const Kernel2& L, const Ref& l_ref) {
  double scale = 1.0;
  for (const auto& k : K.values()) scale = std::max(scale, k.cwiseAbs().maxCoeff());
  for (const auto& l : L.values()) scale = std::max(scale, l.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  for (const auto& k : K.values()) {
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > tol) {
      invalid(k_ref.field, "kernel '" + k_ref.name + "' is not symmetric");
    }
  }
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t j = i; j < L.size(); ++j) {
      if ((L.at(i, j) - L.at(j, i).transpose()).cwiseAbs().maxCoeff() > tol) {
        invalid(l_ref.field, "kernel '" + l_ref.name + "' violates L(x, y) = L(y, x)ᵀ");
      }
    }
  }
}

NodeVectors columns(const Kernel1& k) {
  NodeVectors out;
  out.reserve(k.size());
  for (const auto& m : k.values()) out.push_back(m.col(0));
  return out;
}

Index square_rows(const Ref& r) {
  if (r.spec->rows() != r.spec->cols()) {
    invalid(r.field, "kernel '" + r.name + "' must be square, got " +
                         shape(r.spec->rows(), r.spec->cols()));
  }
  return r.spec->rows();
}

// ---- lqc model ------------------------------------------------------------

double ipow(double x, int d) {
  double r = 1.0;
  for (int k = 0; k < d; ++k) r *= x;
  return r;
}

Vec power(const Vec& y, int d) {
  return y.unaryExpr([d](double x) { return ipow(x, d); });
}

struct PowerTerm1 {
  int power;
  Kernel1 kernel;
};
struct PowerTerm2 {
  int power;
  Kernel2 kernel;
};

// Tabulated model data shared by the LQC callables.
struct LQCTables {
  TimeGrid grid;
  Index p, m, n;
  std::vector<PowerTerm2> f0;
  Kernel2 F1, F2;
  Kernel1 P;
  std::vector<PowerTerm1> g0;
  Kernel1 g1, g2, G11, G12, G22;
};

int term_power(const json& term, const std::string& field) {
  if (!term.is_object()) invalid(field, "expected an object with power and kernel");
  only_keys(term, {"power", "kernel"}, field);
  const long long d = integer(term, "power", field);
  if (d < 1 || d > 16) invalid(join(field, "power"), "expected an integer in 1..16");
  return static_cast<int>(d);
}

const json& term_list(const json& obj, std::string_view key, const std::string& field) {
  static const json empty = json::array();
  const json* v = find(obj, key);
  if (!v) return empty;
  if (!v->is_array()) invalid(join(field, key), "expected an array of terms");
  return *v;
}

}  // namespace

// ---- names -----------------------------------------------------------------

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kQuadform: return "quadform";
    case ProblemKind::kLQ: return "lq";
    case ProblemKind::kLQC: return "lqc";
    case ProblemKind::kPursuit: return "pursuit";
  }
  return "lq";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "quadform") return ProblemKind::kQuadform;
  if (name == "lq") return ProblemKind::kLQ;
  if (name == "lqc") return ProblemKind::kLQC;
  if (name == "pursuit") return ProblemKind::kPursuit;
  invalid("problem", "unknown problem kind '" + std::string(name) + "'");
}

bool RunConfig::operator==(const RunConfig& other) const {
  return kind == other.kind && grid == other.grid && kernels == other.kernels &&
         roles == other.roles && solver == other.solver && output == other.output;
}

// ---- kernels -----------------------------------------------------------------

json kernel_to_json(const KernelSpec& spec) {
  json out;
  out["family"] = std::string(to_string(spec.family));
  switch (spec.family) {
    case KernelFamily::kConstant:
      out["value"] = matrix_to_json(spec.value);
      break;
    case KernelFamily::kExponential:
      out["scale"] = matrix_to_json(spec.scale);
      out["rate"] = matrix_to_json(spec.rate);
      break;
    case KernelFamily::kPolynomial: {
      json terms = json::array();
      for (const auto& t : spec.terms) {
        terms.push_back({{"t_power", t.t_power},
                         {"s_power", t.s_power},
                         {"coefficient", matrix_to_json(t.coefficient)}});
      }
      out["terms"] = std::move(terms);
      break;
    }
    case KernelFamily::kTable: {
      json values = json::array();
      for (const auto& m : spec.table) values.push_back(matrix_to_json(m));
      out["values"] = std::move(values);
      break;
    }
  }
  return out;
}

KernelSpec kernel_from_json(const json& doc, const std::string& field) {
  if (!doc.is_object()) invalid(field, "expected an object");
  const std::string name = text(doc, "family", field);
  KernelFamily family;
  try {
    family = parse_family(name);
  } catch (const Error&) {
    invalid(join(field, "family"), "unknown family '" + name + "'");
  }
  switch (family) {
    case KernelFamily::kConstant: {
      only_keys(doc, {"family", "value"}, field);
      if (!find(doc, "value")) invalid(join(field, "value"), "required");
      return KernelSpec::constant(matrix_from_json(doc["value"], join(field, "value")));
    }
    case KernelFamily::kExponential: {
      only_keys(doc, {"family", "scale", "rate"}, field);
      if (!find(doc, "scale")) invalid(join(field, "scale"), "required");
      if (!find(doc, "rate")) invalid(join(field, "rate"), "required");
      MatrixXd scale = matrix_from_json(doc["scale"], join(field, "scale"));
      MatrixXd rate = matrix_from_json(doc["rate"], join(field, "rate"));
      if (scale.rows() != rate.rows() || scale.cols() != rate.cols()) {
        invalid(join(field, "rate"), "shape " + shape(rate.rows(), rate.cols()) +
                                         " differs from scale " +
                                         shape(scale.rows(), scale.cols()));
      }
      return KernelSpec::exponential(std::move(scale), std::move(rate));
    }
    case KernelFamily::kPolynomial: {
      only_keys(doc, {"family", "terms"}, field);
      const json& list = term_list(doc, "terms", field);
      if (list.empty()) invalid(join(field, "terms"), "at least one term required");
      std::vector<PolynomialTerm> terms;
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string f = join(field, "terms") + "[" + std::to_string(k) + "]";
        if (!list[k].is_object()) invalid(f, "expected an object");
        only_keys(list[k], {"t_power", "s_power", "coefficient"}, f);
        const long long tp = integer(list[k], "t_power", f, 0);
        const long long sp = integer(list[k], "s_power", f, 0);
        if (tp < 0 || sp < 0) invalid(f, "powers must be nonnegative");
        if (!find(list[k], "coefficient")) invalid(join(f, "coefficient"), "required");
        MatrixXd c = matrix_from_json(list[k]["coefficient"], join(f, "coefficient"));
        if (!terms.empty() && (c.rows() != terms.front().coefficient.rows() ||
                               c.cols() != terms.front().coefficient.cols())) {
          invalid(join(f, "coefficient"), "terms must share one shape");
        }
        terms.push_back({static_cast<int>(tp), static_cast<int>(sp), std::move(c)});
      }
      return KernelSpec::polynomial(std::move(terms));
    }
    case KernelFamily::kTable: {
      only_keys(doc, {"family", "values"}, field);
      const json& list = term_list(doc, "values", field);
      if (list.empty()) invalid(join(field, "values"), "at least one matrix required");
      std::vector<MatrixXd> table;
      table.reserve(list.size());
      for (std::size_t k = 0; k < list.size(); ++k) {
        table.push_back(matrix_from_json(list[k], join(field, "values") + "[" +
                                                      std::to_string(k) + "]"));
        if (table.back().rows() != table.front().rows() ||
            table.back().cols() != table.front().cols()) {
          invalid(join(field, "values"), "table matrices must share one shape");
        }
      }
      return KernelSpec::from_table(std::move(table));
    }
  }
  invalid(field, "unknown family");
}

// ---- problems -------------------------------------------------------------

TimeGrid build_grid(const RunConfig& c) {
  if (c.kind == ProblemKind::kPursuit) {
    invalid("grid", "pursuit grids follow the terminal time; no fixed grid");
  }
  try {
    return make_grid(c.grid.t0, c.grid.t1, c.grid.n, c.grid.rule);
  } catch (const Error& e) {
    invalid("grid", e.what());
  }
}

BlockQuadraticForm build_quadform(const RunConfig& c) {
  check_roles(c, {"K11", "K22", "K12", "L11", "L22", "L12", "q1", "q2"});
  const TimeGrid grid = build_grid(c);
  const Ref K11 = required_role(c, "K11");
  const Ref K22 = required_role(c, "K22");
  const Ref L11 = optional_role(c, "L11");
  const Ref L22 = optional_role(c, "L22");
  const Index m = square_rows(K11);
  const Index n = square_rows(K22);
  BlockQuadraticForm form{grid,
                          arity1(K11, grid, m, m),
                          arity1(K22, grid, n, n),
                          arity1(optional_role(c, "K12"), grid, m, n),
                          arity2(L11, grid, m, m),
                          arity2(L22, grid, n, n),
                          arity2(optional_role(c, "L12"), grid, m, n),
                          columns(arity1(optional_role(c, "q1"), grid, m, 1)),
                          columns(arity1(optional_role(c, "q2"), grid, n, 1))};
  expect_symmetric(form.K11, K11, form.L11, L11);
  expect_symmetric(form.K22, K22, form.L22, L22);
  return form;
}

LQGameProblem build_lq(const RunConfig& c) {
  check_roles(c, {"y0", "A", "B", "C", "P0", "P1", "P2", "Q1", "Q2", "R1", "R2"});
  const TimeGrid grid = build_grid(c);
  const Ref A = required_role(c, "A");
  const Ref B = required_role(c, "B");
  const Ref C = required_role(c, "C");
  const Index p = square_rows(A);
  const Index m = B.spec->cols();
  const Index n = C.spec->cols();
  LQGameProblem pr{grid,
                   columns(arity1(required_role(c, "y0"), grid, p, 1)),
                   arity2(A, grid, p, p),
                   arity2(B, grid, p, m),
                   arity2(C, grid, p, n),
                   constant_matrix(optional_role(c, "P0"), p, p),
                   arity1(optional_role(c, "P1"), grid, p, p),
                   arity2(optional_role(c, "P2"), grid, p, p),
                   arity1(required_role(c, "Q1"), grid, m, m),
                   arity2(optional_role(c, "Q2"), grid, m, m),
                   arity1(required_role(c, "R1"), grid, n, n),
                   arity2(optional_role(c, "R2"), grid, n, n)};
  try {
    pr.validate();
  } catch (const Error& e) {
    invalid("roles", e.what());
  }
  return pr;
}

LQCProblem build_lqc(const RunConfig& c) {
  check_roles(c, {"y0", "f0", "F1", "F2", "g0", "g1", "g2", "G11", "G12", "G22"});
  const TimeGrid grid = build_grid(c);
  const Ref y0 = required_role(c, "y0");
  const Ref G11 = required_role(c, "G11");
  const Ref G22 = required_role(c, "G22");
  const Index p = y0.spec->rows();
  const Index m = square_rows(G11);
  const Index n = square_rows(G22);

  auto tables = std::make_shared<LQCTables>(LQCTables{
      grid, p, m, n, {},
      arity2(required_role(c, "F1"), grid, p, m),
      arity2(required_role(c, "F2"), grid, p, n),
      Kernel1::constant(grid.size(), MatrixXd::Zero(p, p)),
      {},
      arity1(optional_role(c, "g1"), grid, m, 1),
      arity1(optional_role(c, "g2"), grid, n, 1),
      arity1(G11, grid, m, m),
      arity1(optional_role(c, "G12"), grid, m, n),
      arity1(G22, grid, n, n)});

  if (const json* f0 = find(c.roles, "f0")) {
    if (!f0->is_array()) invalid("roles.f0", "expected an array of power/kernel terms");
    for (std::size_t k = 0; k < f0->size(); ++k) {
      const std::string f = "roles.f0[" + std::to_string(k) + "]";
      const int d = term_power((*f0)[k], f);
      if (!find((*f0)[k], "kernel")) invalid(join(f, "kernel"), "required");
      tables->f0.push_back({d, arity2(resolve(c, (*f0)[k]["kernel"], join(f, "kernel")), grid, p, p)});
    }
  }
  if (const json* g0 = find(c.roles, "g0")) {
    if (!g0->is_object()) invalid("roles.g0", "expected an object with P and terms");
    only_keys(*g0, {"P", "terms"}, "roles.g0");
    if (const json* P = find(*g0, "P")) tables->P = arity1(resolve(c, *P, "roles.g0.P"), grid, p, p);
    const json& terms = term_list(*g0, "terms", "roles.g0");
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const std::string f = "roles.g0.terms[" + std::to_string(k) + "]";
      const int d = term_power(terms[k], f);
      if (!find(terms[k], "kernel")) invalid(join(f, "kernel"), "required");
      tables->g0.push_back({d, arity1(resolve(c, terms[k]["kernel"], join(f, "kernel")), grid, 1, p)});
    }
  }

  LQCProblem pr(grid);
  pr.y0 = columns(arity1(y0, grid, p, 1));
  pr.p = p;
  pr.m = m;
  pr.n = n;
  std::shared_ptr<const LQCTables> T = std::move(tables);
  pr.f0 = [T](double t, double s, const Vec& y) {
    const std::size_t i = T->grid.index_of(t), j = T->grid.index_of(s);
    Vec out = Vec::Zero(T->p);
    for (const auto& term : T->f0) out += term.kernel.at(i, j) * power(y, term.power);
    return out;
  };
  pr.F1 = [T](double t, double s, const Vec&) {
    return T->F1.at(T->grid.index_of(t), T->grid.index_of(s));
  };
  pr.F2 = [T](double t, double s, const Vec&) {
    return T->F2.at(T->grid.index_of(t), T->grid.index_of(s));
  };
  pr.g0 = [T](double t, const Vec& y) {
    const std::size_t i = T->grid.index_of(t);
    double out = 0.5 * y.dot(T->P.at(i) * y);
    for (const auto& term : T->g0) out += (term.kernel.at(i) * power(y, term.power))(0, 0);
    return out;
  };
  pr.g1 = [T](double t, const Vec&) -> Vec { return T->g1.at(T->grid.index_of(t)).col(0); };
  pr.g2 = [T](double t, const Vec&) -> Vec { return T->g2.at(T->grid.index_of(t)).col(0); };
  pr.G11 = [T](double t, const Vec&) { return T->G11.at(T->grid.index_of(t)); };
  pr.G12 = [T](double t, const Vec&) { return T->G12.at(T->grid.index_of(t)); };
  pr.G22 = [T](double t, const Vec&) { return T->G22.at(T->grid.index_of(t)); };
  pr.cost_y = [T](double t, const Vec& y, const Vec&, const Vec&) {
    const std::size_t i = T->grid.index_of(t);
    const MatrixXd& P = T->P.at(i);
    Vec out = 0.5 * (P + P.transpose()) * y;
    for (const auto& term : T->g0) {
      out += (term.kernel.at(i).transpose().array() * term.power *
              power(y, term.power - 1).array())
                 .matrix();
    }
    return out;
  };
  pr.dynamics_y = [T](double t, double s, const Vec& y, const Vec&, const Vec&) {
    const std::size_t i = T->grid.index_of(t), j = T->grid.index_of(s);
    Mat out = Mat::Zero(T->p, T->p);
    for (const auto& term : T->f0) {
      const Vec slope = term.power * power(y, term.power - 1);
      out += term.kernel.at(i, j) * slope.asDiagonal();
    }
    return out;
  };
  return pr;
}

PursuitProblem build_pursuit(const RunConfig& c) {
  check_roles(c, {"y0", "A", "B", "C", "M", "M0", "M1", "Q", "R"});
  const Ref M = required_role(c, "M");
  const Ref Q = required_role(c, "Q");
  const Ref R = required_role(c, "R");
  const Index p = square_rows(M);
  const Index m = square_rows(Q);
  const Index n = square_rows(R);
  auto analytic = [&](std::string_view role, Index rows, Index cols) {
    const Ref r = required_role(c, role);
    if (!r.spec->is_analytic()) {
      invalid(r.field, "kernel '" + r.name + "' must be analytic for pursuit runs");
    }
    expect_shape(r, rows, cols);
    return *r.spec;
  };
  PursuitProblem pr;
  pr.t0 = c.grid.t0;
  pr.nodes = c.grid.n;
  pr.rule = c.grid.rule;
  pr.y0 = analytic("y0", p, 1);
  pr.A = analytic("A", p, p);
  pr.B = analytic("B", p, m);
  pr.C = analytic("C", p, n);
  pr.M = constant_matrix(M, p, p);
  pr.M0 = constant_matrix(optional_role(c, "M0"), p, p);
  pr.M1 = constant_matrix(optional_role(c, "M1"), p, p);
  pr.Q = constant_matrix(Q, m, m);
  pr.R = constant_matrix(R, n, n);
  pr.t_lo = c.grid.t_lo;
  pr.t_hi = c.grid.t_hi;
  try {
    pr.validate();
    pr.grid_for(pr.t_lo);
  } catch (const Error& e) {
    invalid("roles", e.what());
  }
  return pr;
}

// ---- documents ------------------------------------------------------------

namespace {

GridConfig grid_from_json(const json& g, ProblemKind kind) {
  only_keys(g, {"t0", "t1", "n", "rule", "bracket"}, "grid");
  GridConfig out;
  out.t0 = real(g, "t0", "grid", 0.0);
  const long long n = integer(g, "n", "grid");
  if (n < 2) invalid("grid.n", "at least 2 nodes required");
  out.n = static_cast<std::size_t>(n);
  const std::string rule = text(g, "rule", "grid", "trapezoid");
  try {
    out.rule = parse_rule(rule);
  } catch (const Error&) {
    invalid("grid.rule", "expected 'trapezoid' or 'simpson', got '" + rule + "'");
  }
  if (kind == ProblemKind::kPursuit) {
    if (find(g, "t1")) invalid("grid.t1", "pursuit runs take grid.bracket instead");
    const json* b = find(g, "bracket");
    if (!b) invalid("grid.bracket", "required");
    if (!b->is_array() || b->size() != 2 || !(*b)[0].is_number() || !(*b)[1].is_number()) {
      invalid("grid.bracket", "expected [t_lo, t_hi]");
    }
    out.t_lo = (*b)[0].get<double>();
    out.t_hi = (*b)[1].get<double>();
    if (!(out.t0 < out.t_lo && out.t_lo < out.t_hi)) {
      invalid("grid.bracket", "expected t0 < t_lo < t_hi");
    }
  } else {
    if (find(g, "bracket")) invalid("grid.bracket", "only pursuit runs take a bracket");
    out.t1 = real(g, "t1", "grid");
  }
  return out;
}

SolverConfig solver_from_json(const json& s) {
  only_keys(s, {"tol", "max_iter", "damping", "seed", "override_certification", "side",
                "multiplier_rule", "mercer_trials"},
            "solver");
  SolverConfig out;
  out.tol = real(s, "tol", "solver", out.tol);
  if (!(out.tol > 0)) invalid("solver.tol", "must be positive");
  const long long max_iter = integer(s, "max_iter", "solver", 0);
  if (max_iter < 0) invalid("solver.max_iter", "must be nonnegative");
  out.max_iter = static_cast<int>(max_iter);
  out.damping = real(s, "damping", "solver", out.damping);
  if (!(out.damping > 0 && out.damping <= 1)) invalid("solver.damping", "expected a value in (0, 1]");
  if (const json* seed = find(s, "seed")) {
    if (!seed->is_number_unsigned()) invalid("solver.seed", "expected a nonnegative integer");
    out.seed = seed->get<std::uint64_t>();
  }
  out.override_certification = boolean(s, "override_certification", "solver", false);
  out.side = parse_side(text(s, "side", "solver", "lower"), "solver.side");
  const std::string rule = text(s, "multiplier_rule", "solver", "closed_form");
  try {
    out.multiplier_rule = parse_multiplier_rule(rule);
  } catch (const Error&) {
    invalid("solver.multiplier_rule", "expected 'closed_form' or 'elimination', got '" + rule + "'");
  }
  const long long trials = integer(s, "mercer_trials", "solver", out.mercer_trials);
  if (trials < 1) invalid("solver.mercer_trials", "must be positive");
  out.mercer_trials = static_cast<int>(trials);
  return out;
}

OutputConfig output_from_json(const json& o) {
  only_keys(o, {"directory", "formats"}, "output");
  OutputConfig out;
  out.directory = text(o, "directory", "output", out.directory);
  if (const json* formats = find(o, "formats")) {
    if (!formats->is_array()) invalid("output.formats", "expected an array");
    out.csv = out.json = false;
    for (const auto& f : *formats) {
      if (f == "csv") {
        out.csv = true;
      } else if (f == "json") {
        out.json = true;
      } else {
        invalid("output.formats", "expected 'csv' or 'json', got " + f.dump());
      }
    }
  }
  return out;
}

// Builds the problem once so every shape is checked before any numerics.
void check_problem(const RunConfig& c) {
  try {
    switch (c.kind) {
      case ProblemKind::kQuadform: build_quadform(c); break;
      case ProblemKind::kLQ: build_lq(c); break;
      case ProblemKind::kLQC: build_lqc(c); break;
      case ProblemKind::kPursuit: build_pursuit(c); break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidationError) throw;
    invalid("roles", e.what());
  }
}

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) invalid("document", "expected an object");
  only_keys(doc, {"schema_version", "problem", "grid", "kernels", "roles", "solver", "output"}, "");
  const long long version = integer(doc, "schema_version", "");
  if (version != kSchemaVersion) {
    invalid("schema_version", "unsupported version " + std::to_string(version) + ", expected " +
                                  std::to_string(kSchemaVersion));
  }
  RunConfig c;
  c.kind = parse_problem_kind(text(doc, "problem", ""));
  c.grid = grid_from_json(object_at(doc, "grid", ""), c.kind);
  for (const auto& [name, spec] : object_at(doc, "kernels", "").items()) {
    c.kernels.emplace(name, kernel_from_json(spec, "kernels." + name));
  }
  c.roles = object_at(doc, "roles", "");
  if (find(doc, "solver")) c.solver = solver_from_json(object_at(doc, "solver", ""));
  if (find(doc, "output")) c.output = output_from_json(object_at(doc, "output", ""));
  check_problem(c);
  return c;
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> position(std::string_view text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t k = 0; k < std::min(offset, text.size()); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte counts the offending character itself.
    const auto [line, column] = position(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream msg;
    msg << "line " << line << ", column " << column << ": " << e.what();
    throw Error(ErrorCode::kParseError, msg.str());
  }
  return config_from_json(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

json to_json(const RunConfig& c) {
  json grid = {{"t0", c.grid.t0}, {"n", c.grid.n}, {"rule", std::string(to_string(c.grid.rule))}};
  if (c.kind == ProblemKind::kPursuit) {
    grid["bracket"] = {c.grid.t_lo, c.grid.t_hi};
  } else {
    grid["t1"] = c.grid.t1;
  }
  json kernels = json::object();
  for (const auto& [name, spec] : c.kernels) kernels[name] = kernel_to_json(spec);
  json formats = json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.json) formats.push_back("json");
  return {{"schema_version", kSchemaVersion},
          {"problem", std::string(to_string(c.kind))},
          {"grid", std::move(grid)},
          {"kernels", std::move(kernels)},
          {"roles", c.roles},
          {"solver",
           {{"tol", c.solver.tol},
            {"max_iter", c.solver.max_iter},
            {"damping", c.solver.damping},
            {"seed", c.solver.seed},
            {"override_certification", c.solver.override_certification},
            {"side", std::string(side_name(c.solver.side))},
            {"multiplier_rule", std::string(to_string(c.solver.multiplier_rule))},
            {"mercer_trials", c.solver.mercer_trials}}},
          {"output", {{"directory", c.output.directory}, {"formats", std::move(formats)}}}};
}

std::string serialize(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace vgame::cli
