#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vgame/grid.hpp"
#include "vgame/lqcgame.hpp"
#include "vgame/lqgame.hpp"
#include "vgame/pursuit.hpp"
#include "vgame/quadform.hpp"

namespace vgame::cli {

inline constexpr int kSchemaVersion = 1;

enum class ProblemKind { kQuadform, kLQ, kLQC, kPursuit };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view name);

/// [t0, t1] with n nodes; pursuit runs use the bracket [t_lo, t_hi] for the
/// terminal time instead of t1.
struct GridConfig {
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t n = 33;
  QuadratureRule rule = QuadratureRule::kTrapezoid;
  double t_lo = 0.0;
  double t_hi = 0.0;

  bool operator==(const GridConfig&) const = default;
};

/// max_iter = 0 keeps the solver's own default.
struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 0;
  double damping = 0.5;
  std::uint64_t seed = 0;
  bool override_certification = false;
  GameSide side = GameSide::kLower;
  MultiplierRule multiplier_rule = MultiplierRule::kClosedForm;
  int mercer_trials = 50;

  bool operator==(const SolverConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  bool csv = true;
  bool json = true;

  bool operator==(const OutputConfig&) const = default;
};

/// One run. `roles` maps the slots of the problem kind to kernel names
/// (for lqc, `f0` and `g0` hold lists of power/kernel terms).
struct RunConfig {
  ProblemKind kind = ProblemKind::kLQ;
  GridConfig grid;
  std::map<std::string, KernelSpec> kernels;
  nlohmann::json roles = nlohmann::json::object();
  SolverConfig solver;
  OutputConfig output;

  bool operator==(const RunConfig& other) const;
};

/// ParseError carries the line and column of a malformed document;
/// ValidationError names the offending field. All problem data are built
/// and shape-checked here, before any numerics.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);
std::string serialize(const RunConfig& config);

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& doc, const std::string& field);

TimeGrid build_grid(const RunConfig& config);
BlockQuadraticForm build_quadform(const RunConfig& config);
LQGameProblem build_lq(const RunConfig& config);
LQCProblem build_lqc(const RunConfig& config);
PursuitProblem build_pursuit(const RunConfig& config);

/// Node-major trajectory as written to CSV; empty blocks are omitted.
struct Trajectory {
  std::vector<double> t;
  NodeVectors y, u, v, psi;
};

/// Header `t,y_1..y_p,u_1..u_m,v_1..v_n,psi_1..psi_p`, 17 significant digits.
std::string format_csv(const Trajectory& trajectory);
Trajectory parse_csv(std::string_view text);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

inline constexpr std::string_view kTrajectoryFile = "trajectory.csv";
inline constexpr std::string_view kTerminalFile = "terminal.json";
inline constexpr std::string_view kReportFile = "report.json";
inline constexpr std::string_view kVerifyFile = "verify.json";

enum class Command { kQuadformSaddle, kQuadformCheck, kLQSolve, kLQCSolve, kPursuitSolve };

std::string_view to_string(Command command);
ProblemKind kind_of(Command command);

enum ExitStatus : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitNotCertified = 2,
  kExitNoConvergence = 3,
  kExitNotBracketed = 4,
  kExitConfigError = 5,
};

int exit_status_for(ErrorCode code);

struct Check {
  std::string name;
  double value = 0.0;
  double tol = 0.0;

  bool pass() const { return value <= tol; }  // NaN fails
};

struct RunReport {
  nlohmann::json document;
  std::vector<Check> checks;
  int exit_status = kExitOk;
};

/// Default acceptance threshold of each residual for a problem kind.
double default_tolerance(ProblemKind kind);

/// Residual suite of the problem kind, recomputed from the artifacts in
/// `dir` alone. MissingArtifact when a required file is absent.
std::vector<Check> recompute_checks(const RunConfig& config, const std::filesystem::path& dir,
                                    std::optional<double> tol = std::nullopt);

/// Solves, writes the requested artifacts into `out_dir`, then re-reads them
/// to fill the residual table. Failures become exit statuses, never throws
/// for solver errors.
RunReport run(const RunConfig& config, Command command, const std::filesystem::path& out_dir);

/// Pass/fail per residual against the artifacts of a prior run.
RunReport verify(const RunConfig& config, const std::filesystem::path& artifacts,
                 std::optional<double> tol = std::nullopt);

}  // namespace vgame::cli
