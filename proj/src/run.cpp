#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vgame/cli.hpp"

namespace vgame::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

[[noreturn]] void malformed(std::size_t line, std::size_t column, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ", column " +
                                          std::to_string(column) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto k = line.find(sep, start);
    out.push_back(line.substr(start, k == std::string_view::npos ? k : k - start));
    if (k == std::string_view::npos) return out;
    start = k + 1;
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingArtifact, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string read_artifact(const fs::path& dir, std::string_view name) {
  const fs::path path = dir / name;
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingArtifact, path.string());
  return read_file(path);
}

Eigen::Index dim(const NodeVectors& v) { return v.empty() ? 0 : v.front().size(); }

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Eigen::VectorXd vector_from_json(const json& doc, std::string_view key) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) {
    throw Error(ErrorCode::kParseError, std::string(kTerminalFile) + ": missing " + std::string(key));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(it->size()));
  for (std::size_t k = 0; k < it->size(); ++k) {
    out(static_cast<Eigen::Index>(k)) =
        (*it)[k].is_null() ? std::numeric_limits<double>::quiet_NaN() : (*it)[k].get<double>();
  }
  return out;
}

// ω is unbounded at an exact capture and then stored as null.
json terminal_to_json(const TerminalState& ts) {
  return {{"t1", ts.t1},
          {"Y", vector_to_json(ts.Y)},
          {"U", vector_to_json(ts.U)},
          {"V", vector_to_json(ts.V)},
          {"W", vector_to_json(ts.W)},
          {"psi_cap", vector_to_json(ts.psi_cap)},
          {"omega", std::isfinite(ts.omega) ? json(ts.omega) : json(nullptr)}};
}

TerminalState terminal_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string(kTerminalFile) + ": " + e.what());
  }
  TerminalState ts;
  if (!doc.is_object() || !doc.contains("t1") || !doc["t1"].is_number()) {
    throw Error(ErrorCode::kParseError, std::string(kTerminalFile) + ": missing t1");
  }
  ts.t1 = doc["t1"].get<double>();
  ts.Y = vector_from_json(doc, "Y");
  ts.U = vector_from_json(doc, "U");
  ts.V = vector_from_json(doc, "V");
  ts.W = vector_from_json(doc, "W");
  ts.psi_cap = vector_from_json(doc, "psi_cap");
  ts.omega = doc.contains("omega") && doc["omega"].is_number()
                 ? doc["omega"].get<double>()
                 : std::numeric_limits<double>::quiet_NaN();
  return ts;
}

json certification_to_json(const DefinitenessReport& r) {
  return {{"jointly_pd_11", r.jointly_pd_11},
          {"jointly_nd_22", r.jointly_nd_22},
          {"min_eig_11", r.min_eig_11},
          {"max_eig_22", r.max_eig_22},
          {"method", std::string(to_string(r.method))},
          {"certified", r.certified()}};
}

Kernel1 negated(const Kernel1& k) {
  std::vector<Eigen::MatrixXd> values;
  for (const auto& m : k.values()) values.push_back(-m);
  return Kernel1(std::move(values));
}

Kernel2 negated(const Kernel2& k) {
  Kernel2 out(k.size(), k.rows(), k.cols());
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (std::size_t j = 0; j < k.size(); ++j) out.at(i, j) = -k.at(i, j);
  }
  return out;
}

// ---- residual suites -------------------------------------------------------

Check grid_check(const std::vector<double>& t, const TimeGrid& grid) {
  double gap = 0.0;
  if (t.size() != grid.size()) {
    gap = kInf;
  } else {
    for (std::size_t i = 0; i < t.size(); ++i) gap = std::max(gap, std::abs(t[i] - grid.node(i)));
  }
  return {"grid", gap, 1e-12 * std::max({1.0, std::abs(grid.t0()), std::abs(grid.t1())})};
}

// Column counts of the trajectory against the problem dimensions.
Check column_check(const Trajectory& tr, Eigen::Index p, Eigen::Index m, Eigen::Index n,
                   bool with_psi) {
  const bool ok = dim(tr.y) == p && dim(tr.u) == m && dim(tr.v) == n &&
                  dim(tr.psi) == (with_psi ? p : 0);
  return {"columns", ok ? 0.0 : kInf, 0.0};
}

bool usable(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    if (!c.pass()) return false;
  }
  return true;
}

double stationarity_of(const BlockQuadraticForm& form, const Trajectory& tr) {
  const auto [r1, r2] = stationarity_residual(form, ControlPair{tr.u, tr.v});
  return std::max(max_norm(r1), max_norm(r2));
}

std::string_view side_name(GameSide side) {
  return side == GameSide::kUpper ? "upper" : "lower";
}

}  // namespace

// ---- CSV ------------------------------------------------------------------

std::string format_csv(const Trajectory& tr) {
  const std::size_t N = tr.t.size();
  const std::pair<const NodeVectors*, std::string_view> blocks[] = {
      {&tr.y, "y"}, {&tr.u, "u"}, {&tr.v, "v"}, {&tr.psi, "psi"}};
  std::string out = "t";
  for (const auto& [block, name] : blocks) {
    if (!block->empty() && block->size() != N) {
      throw Error(ErrorCode::kLengthMismatch, std::string(name) + " has " +
                                                  std::to_string(block->size()) + " rows, t has " +
                                                  std::to_string(N));
    }
    for (Eigen::Index k = 0; k < dim(*block); ++k) {
      out += "," + std::string(name) + "_" + std::to_string(k + 1);
    }
  }
  out += "\n";
  for (std::size_t i = 0; i < N; ++i) {
    out += format_number(tr.t[i]);
    for (const auto& [block, name] : blocks) {
      if (block->empty()) continue;
      for (Eigen::Index k = 0; k < (*block)[i].size(); ++k) {
        out += "," + format_number((*block)[i](k));
      }
    }
    out += "\n";
  }
  return out;
}

Trajectory parse_csv(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  if (lines.empty()) malformed(1, 1, "empty trajectory");

  const auto header = split(lines[0], ',');
  if (header[0] != "t") malformed(1, 1, "first column must be t");
  const std::string_view names[] = {"y", "u", "v", "psi"};
  Eigen::Index counts[4] = {0, 0, 0, 0};
  int block = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto us = header[c].find('_');
    const std::string_view prefix = header[c].substr(0, us);
    int b = block;
    while (b < 4 && names[b] != prefix) ++b;
    if (b == 4 || us == std::string_view::npos) {
      malformed(1, c + 1, "unexpected column '" + std::string(header[c]) + "'");
    }
    block = b;
    const std::string expected = std::to_string(counts[b] + 1);
    if (header[c].substr(us + 1) != expected) {
      malformed(1, c + 1, "expected " + std::string(prefix) + "_" + expected);
    }
    ++counts[b];
  }

  Trajectory tr;
  NodeVectors* targets[] = {&tr.y, &tr.u, &tr.v, &tr.psi};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != header.size()) {
      malformed(i + 1, 1, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto f = fields[c];
      const auto r = std::from_chars(f.data(), f.data() + f.size(), row[c]);
      if (r.ec != std::errc() || r.ptr != f.data() + f.size()) {
        malformed(i + 1, c + 1, "not a number: '" + std::string(f) + "'");
      }
    }
    tr.t.push_back(row[0]);
    std::size_t c = 1;
    for (int b = 0; b < 4; ++b) {
      if (counts[b] == 0) continue;
      Eigen::VectorXd x(counts[b]);
      for (Eigen::Index k = 0; k < counts[b]; ++k) x(k) = row[c++];
      targets[b]->push_back(std::move(x));
    }
  }
  return tr;
}

void write_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---- commands and statuses ------------------------------------------------------

std::string_view to_string(Command command) {
  switch (command) {
    case Command::kQuadformSaddle: return "quadform saddle";
    case Command::kQuadformCheck: return "quadform check";
    case Command::kLQSolve: return "lq solve";
    case Command::kLQCSolve: return "lqc solve";
    case Command::kPursuitSolve: return "pursuit solve";
  }
  return "";
}

ProblemKind kind_of(Command command) {
  switch (command) {
    case Command::kQuadformSaddle:
    case Command::kQuadformCheck: return ProblemKind::kQuadform;
    case Command::kLQSolve: return ProblemKind::kLQ;
    case Command::kLQCSolve: return ProblemKind::kLQC;
    case Command::kPursuitSolve: return ProblemKind::kPursuit;
  }
  return ProblemKind::kLQ;
}

int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotCertified:
      return kExitNotCertified;
    case ErrorCode::kNoConvergence:
    case ErrorCode::kInnerNoConvergence:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kSingularStep:
    case ErrorCode::kSingularG11:
    case ErrorCode::kSingularG3:
    case ErrorCode::kTransversalityViolated:
      return kExitNoConvergence;
    case ErrorCode::kCaptureNotBracketed:
      return kExitNotBracketed;
    case ErrorCode::kInvalidInterval:
    case ErrorCode::kTooFewNodes:
    case ErrorCode::kInvalidQuadrature:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kGridMismatch:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kNotSymmetric:
    case ErrorCode::kAsymmetryDetected:
    case ErrorCode::kNodeNotOnGrid:
    case ErrorCode::kSingularWeight:
    case ErrorCode::kInvariantViolated:
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
      return kExitConfigError;
    case ErrorCode::kBasisNotOrthonormal:
    case ErrorCode::kMissingArtifact:
      return kExitVerifyFailed;
  }
  return kExitVerifyFailed;
}

double default_tolerance(ProblemKind kind) {
  return kind == ProblemKind::kPursuit ? 1e-6 : 1e-7;
}

// ---- residual recomputation ------------------------------------------------------

std::vector<Check> recompute_checks(const RunConfig& config, const fs::path& dir,
                                    std::optional<double> tol) {
  const Trajectory tr = parse_csv(read_artifact(dir, kTrajectoryFile));
  const double limit = tol.value_or(default_tolerance(config.kind));
  std::vector<Check> checks;
  switch (config.kind) {
    case ProblemKind::kQuadform: {
      const auto form = build_quadform(config);
      checks.push_back(grid_check(tr.t, form.grid));
      checks.push_back(column_check(tr, 0, form.m(), form.n(), false));
      if (!usable(checks)) break;
      checks.push_back({"stationarity", stationarity_of(form, tr), limit});
      break;
    }
    case ProblemKind::kLQ: {
      const auto problem = build_lq(config);
      checks.push_back(grid_check(tr.t, problem.grid));
      checks.push_back(column_check(tr, problem.p(), problem.m(), problem.n(), false));
      if (!usable(checks)) break;
      checks.push_back({"state", max_abs_diff(tr.y, solve_state(problem, tr.u, tr.v)), limit});
      checks.push_back({"stationarity", stationarity_of(assemble_form(problem), tr), limit});
      break;
    }
    case ProblemKind::kLQC: {
      const auto problem = build_lqc(config);
      checks.push_back(grid_check(tr.t, problem.grid));
      checks.push_back(column_check(tr, problem.p, problem.m, problem.n, true));
      if (!usable(checks)) break;
      const auto r = recheck(problem, config.solver.side, tr.y, tr.psi, tr.u, tr.v);
      checks.push_back({"state", r.state, limit});
      checks.push_back({"costate", r.costate, limit});
      checks.push_back({"stationarity", r.controls, limit});
      break;
    }
    case ProblemKind::kPursuit: {
      const auto problem = build_pursuit(config);
      const TerminalState ts = terminal_from_json(read_artifact(dir, kTerminalFile));
      const TimeGrid grid = problem.grid_for(ts.t1);
      checks.push_back(grid_check(tr.t, grid));
      checks.push_back(column_check(tr, problem.p(), problem.m(), problem.n(), true));
      const bool terminal_ok = ts.Y.size() == problem.p() && ts.U.size() == problem.m() &&
                               ts.V.size() == problem.n() && ts.W.size() == problem.p() &&
                               ts.psi_cap.size() == problem.p();
      checks.push_back({"terminal_columns", terminal_ok ? 0.0 : kInf, 0.0});
      if (!usable(checks)) break;
      const auto r = pursuit_residuals(problem, grid, ts, tr.psi, tr.u, tr.v, tr.y,
                                       config.solver.multiplier_rule);
      for (const auto& [name, value] : r.named()) checks.push_back({name, value, limit});
      break;
    }
  }
  return checks;
}

namespace {

void record_checks(RunReport& report) {
  json residuals = json::object();
  json list = json::array();
  for (const auto& c : report.checks) {
    residuals[c.name] = c.value;
    list.push_back({{"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass()}});
  }
  report.document["residuals"] = std::move(residuals);
  report.document["checks"] = std::move(list);
}

void write_trajectory(const RunConfig& config, const fs::path& dir, const Trajectory& tr) {
  if (config.output.csv) write_atomic(dir / kTrajectoryFile, format_csv(tr));
}

Trajectory trajectory_on(const TimeGrid& grid) {
  Trajectory tr;
  tr.t = grid.nodes();
  return tr;
}

SaddleOptions saddle_options(const RunConfig& config) {
  SaddleOptions opt;
  opt.residual_tol = config.solver.tol;
  opt.override_certification = config.solver.override_certification;
  return opt;
}

void run_quadform_saddle(const RunConfig& config, const fs::path& dir, RunReport& report) {
  const auto form = build_quadform(config);
  report.document["certification"] = certification_to_json(certify(form));
  const ControlPair w = saddle_point(form, saddle_options(config));
  report.document["value"] = evaluate(form, w);
  Trajectory tr = trajectory_on(form.grid);
  tr.u = w.w1;
  tr.v = w.w2;
  write_trajectory(config, dir, tr);
}

void run_quadform_check(const RunConfig& config, RunReport& report) {
  const auto form = build_quadform(config);
  const DefinitenessReport cert = certify(form);
  const InvertibilityReport inv = check_pointwise_invertibility(form);
  const auto seed = config.solver.seed;
  const int trials = config.solver.mercer_trials;
  report.document["certification"] = certification_to_json(cert);
  report.document["block_M"] = {
      {"pd_11", block_M_condition(form.K11, form.L11, form.grid)},
      {"nd_22", block_M_condition(negated(form.K22), negated(form.L22), form.grid)}};
  report.document["mercer_sample"] = {
      {"trials", trials},
      {"seed", seed},
      {"L11_nonnegative", mercer_sample_check(form.L11, form.grid, trials, seed)},
      {"L22_nonpositive", mercer_sample_check(negated(form.L22), form.grid, trials, seed + 1)}};
  report.document["invertibility"] = {{"ok", inv.ok}, {"worst_condition", inv.worst_condition}};
  if (!cert.certified() && !config.solver.override_certification) {
    report.exit_status = kExitNotCertified;
  }
}

void run_lq(const RunConfig& config, const fs::path& dir, RunReport& report) {
  const auto problem = build_lq(config);
  report.document["certification"] = certification_to_json(certify(assemble_form(problem)));
  const LQSolution sol = solve_lq_game(problem, saddle_options(config));
  report.document["value"] = sol.value;
  Trajectory tr = trajectory_on(problem.grid);
  tr.y = sol.y_star;
  tr.u = sol.u_star;
  tr.v = sol.v_star;
  write_trajectory(config, dir, tr);
}

void run_lqc(const RunConfig& config, const fs::path& dir, RunReport& report) {
  const auto problem = build_lqc(config);
  LQCOptions opt;
  opt.damping = config.solver.damping;
  opt.tol = config.solver.tol;
  if (config.solver.max_iter > 0) opt.max_iter = config.solver.max_iter;
  report.document["side"] = std::string(side_name(config.solver.side));
  const LQCSolution sol = solve_game(problem, config.solver.side, opt);
  report.document["value"] = sol.value;
  report.document["iterations"] = sol.pair.iterations;
  report.document["fixed_point_residual"] = sol.pair.residual;
  Trajectory tr = trajectory_on(problem.grid);
  tr.y = sol.pair.y;
  tr.u = sol.u;
  tr.v = sol.v;
  tr.psi = sol.pair.psi;
  write_trajectory(config, dir, tr);
}

PursuitOptions pursuit_options(const RunConfig& config) {
  PursuitOptions opt;
  opt.damping = config.solver.damping;
  opt.tol = config.solver.tol;
  if (config.solver.max_iter > 0) opt.max_iter = config.solver.max_iter;
  opt.rule = config.solver.multiplier_rule;
  return opt;
}

std::string sign_of(double x) { return x > 0 ? "+" : x < 0 ? "-" : "0"; }

// Capture residual signs at both bracket ends, for the report.
json bracket_signs(const PursuitProblem& problem, const PursuitOptions& opt) {
  json out = {{"t_lo", problem.t_lo}, {"t_hi", problem.t_hi}};
  for (const auto& [t, key] : {std::pair{problem.t_lo, "lo"}, std::pair{problem.t_hi, "hi"}}) {
    try {
      const double value = signed_capture(problem, solve_at(problem, t, opt).terminal.Y);
      out[std::string("signed_capture_") + key] = value;
      out[std::string("sign_") + key] = sign_of(value);
    } catch (const Error& e) {
      out[std::string("sign_") + key] = "?";
      out[std::string("error_") + key] = e.what();
    }
  }
  return out;
}

void run_pursuit(const RunConfig& config, const fs::path& dir, RunReport& report) {
  const auto problem = build_pursuit(config);
  const PursuitOptions opt = pursuit_options(config);
  PursuitSolution sol = [&] {
    try {
      return solve_pursuit(problem, opt);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kCaptureNotBracketed) {
        report.document["bracket"] = bracket_signs(problem, opt);
      }
      throw;
    }
  }();
  report.document["t1"] = sol.terminal.t1;
  report.document["terminal"] = terminal_to_json(sol.terminal);
  report.document["iterations"] = {{"inner", sol.inner_iterations},
                                   {"outer", sol.outer_iterations}};
  report.document["elimination_gap"] = sol.elimination_gap;
  report.document["converged"] = sol.converged;
  if (!sol.converged) report.exit_status = kExitNoConvergence;
  Trajectory tr = trajectory_on(sol.grid);
  tr.y = sol.y_star;
  tr.u = sol.u_star;
  tr.v = sol.v_star;
  tr.psi = sol.psi;
  write_trajectory(config, dir, tr);
  if (config.output.csv) {
    write_atomic(dir / kTerminalFile, terminal_to_json(sol.terminal).dump(2) + "\n");
  }
}

void record_error(RunReport& report, std::string_view code, const std::string& message,
                  int status) {
  report.exit_status = status;
  report.document["error"] = {{"code", std::string(code)}, {"message", message}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void finish(RunReport& report, const RunConfig& config, const fs::path& path,
            std::chrono::steady_clock::time_point start) {
  report.document["exit_status"] = report.exit_status;
  report.document["status"] = report.exit_status == kExitOk ? "ok" : "failed";
  report.document["wall_time_s"] = seconds_since(start);
  if (!config.output.json) return;
  try {
    write_atomic(path, report.document.dump(2) + "\n");
  } catch (const std::exception& e) {
    record_error(report, "WriteFailed", e.what(), kExitVerifyFailed);
  }
}

}  // namespace

RunReport run(const RunConfig& config, Command command, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.document = {{"schema_version", kSchemaVersion},
                     {"command", std::string(to_string(command))},
                     {"problem", std::string(to_string(config.kind))},
                     {"config", to_json(config)}};
  try {
    if (kind_of(command) != config.kind) {
      throw Error(ErrorCode::kValidationError,
                  "command '" + std::string(to_string(command)) + "' does not match problem '" +
                      std::string(to_string(config.kind)) + "'");
    }
    fs::create_directories(out_dir);
    bool wrote = true;
    switch (command) {
      case Command::kQuadformSaddle: run_quadform_saddle(config, out_dir, report); break;
      case Command::kQuadformCheck:
        run_quadform_check(config, report);
        wrote = false;
        break;
      case Command::kLQSolve: run_lq(config, out_dir, report); break;
      case Command::kLQCSolve: run_lqc(config, out_dir, report); break;
      case Command::kPursuitSolve: run_pursuit(config, out_dir, report); break;
    }
    if (wrote && config.output.csv) {
      report.checks = recompute_checks(config, out_dir);
      record_checks(report);
      if (report.exit_status == kExitOk && !usable(report.checks)) {
        report.exit_status = kExitVerifyFailed;
      }
    }
  } catch (const Error& e) {
    record_error(report, to_string(e.code()), e.what(), exit_status_for(e.code()));
  } catch (const std::exception& e) {
    record_error(report, "Internal", e.what(), kExitVerifyFailed);
  }
  finish(report, config, out_dir / kReportFile, start);
  return report;
}

RunReport verify(const RunConfig& config, const fs::path& artifacts, std::optional<double> tol) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.document = {{"schema_version", kSchemaVersion},
                     {"command", "verify"},
                     {"problem", std::string(to_string(config.kind))},
                     {"config", to_json(config)},
                     {"artifacts", artifacts.string()}};
  try {
    report.checks = recompute_checks(config, artifacts, tol);
    record_checks(report);
    report.exit_status = usable(report.checks) ? kExitOk : kExitVerifyFailed;
  } catch (const Error& e) {
    record_error(report, to_string(e.code()), e.what(), kExitVerifyFailed);
  } catch (const std::exception& e) {
    record_error(report, "Internal", e.what(), kExitVerifyFailed);
  }
  report.document["passed"] = report.exit_status == kExitOk;
  if (fs::is_directory(artifacts)) {
    finish(report, config, artifacts / kVerifyFile, start);
  } else {
    report.document["exit_status"] = report.exit_status;
    report.document["wall_time_s"] = seconds_since(start);
  }
  return report;
}

}  // namespace vgame::cli
