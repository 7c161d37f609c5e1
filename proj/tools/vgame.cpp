// Command-line front end: vgame <command> --config run.json [--out DIR] ...
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vgame/cli.hpp"

namespace {

using namespace vgame::cli;

void print_report(std::string_view command, const RunReport& report) {
  std::cout << command << ": exit " << report.exit_status;
  if (report.document.contains("error")) {
    std::cout << " (" << report.document["error"]["message"].get<std::string>() << ")";
  }
  std::cout << "\n";
  if (report.document.contains("certification")) {
    const auto& c = report.document["certification"];
    std::cout << "  certified " << (c["certified"].get<bool>() ? "yes" : "no")
              << ", min eig (K11, L11) " << c["min_eig_11"] << ", max eig (K22, L22) "
              << c["max_eig_22"] << "\n";
  }
  if (report.document.contains("t1")) {
    std::cout << "  t1 = " << std::setprecision(17) << report.document["t1"].get<double>() << "\n";
  }
  if (report.document.contains("bracket")) {
    const auto& b = report.document["bracket"];
    std::cout << "  sign at t_lo " << b["sign_lo"].get<std::string>() << ", sign at t_hi "
              << b["sign_hi"].get<std::string>() << "\n";
  }
  for (const auto& c : report.checks) {
    std::cout << "  " << std::left << std::setw(20) << c.name << std::setprecision(3)
              << std::scientific << c.value << "  (tol " << c.tol << ")  "
              << (c.pass() ? "PASS" : "FAIL") << "\n"
              << std::defaultfloat;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers for Volterra-type differential games"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  double tol = 0.0;
  std::uint64_t seed = 0;
  bool override_certification = false;
  std::string side;
  app.add_option("--config", config_path, "run configuration (JSON, schema_version 1)")
      ->required();
  auto* out_opt = app.add_option("--out", out_dir, "artifact directory (overrides output.directory)");
  auto* tol_opt = app.add_option("--tol", tol, "solver tolerance; for verify, the check tolerance")
                      ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "seed of the sampled definiteness check");
  app.add_flag("--override-certification", override_certification,
               "solve even when the definiteness certificate fails");

  auto* quadform = app.add_subcommand("quadform", "block quadratic forms")->require_subcommand(1);
  auto* q_saddle = quadform->add_subcommand("saddle", "saddle point of the form");
  auto* q_check = quadform->add_subcommand("check", "definiteness checks only");
  auto* lq = app.add_subcommand("lq", "linear-quadratic games")->require_subcommand(1);
  auto* lq_solve = lq->add_subcommand("solve", "saddle point by the assembled form");
  auto* lqc = app.add_subcommand("lqc", "games nonlinear in the state")->require_subcommand(1);
  auto* lqc_solve = lqc->add_subcommand("solve", "lower or upper game by Picard iteration");
  auto* pursuit = app.add_subcommand("pursuit", "free terminal time games")->require_subcommand(1);
  auto* p_solve = pursuit->add_subcommand("solve", "capture time and optimal controls");
  auto* verify_cmd = app.add_subcommand("verify", "recompute residuals from artifacts");
  for (auto* cmd : {lqc_solve, verify_cmd}) {
    cmd->add_option("--side", side, "lower or upper game (lqc)")
        ->check(CLI::IsMember({"lower", "upper"}));
  }
  for (auto* cmd : {quadform, q_saddle, q_check, lq, lq_solve, lqc, lqc_solve, pursuit, p_solve,
                    verify_cmd}) {
    cmd->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const vgame::Error& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitConfigError;
  }
  if (*seed_opt) config.solver.seed = seed;
  if (override_certification) config.solver.override_certification = true;
  if (!side.empty()) config.solver.side = side == "upper" ? vgame::GameSide::kUpper : vgame::GameSide::kLower;
  if (*out_opt) config.output.directory = out_dir;

  if (verify_cmd->parsed()) {
    const RunReport report = verify(config, config.output.directory,
                                    *tol_opt ? std::optional<double>(tol) : std::nullopt);
    print_report("verify", report);
    return report.exit_status;
  }

  if (*tol_opt) config.solver.tol = tol;
  Command command = Command::kLQSolve;
  if (q_saddle->parsed()) command = Command::kQuadformSaddle;
  if (q_check->parsed()) command = Command::kQuadformCheck;
  if (lqc_solve->parsed()) command = Command::kLQCSolve;
  if (p_solve->parsed()) command = Command::kPursuitSolve;
  const RunReport report = run(config, command, config.output.directory);
  print_report(to_string(command), report);
  return report.exit_status;
}
