#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gpd/harness.hpp"
#include "gpd/serialize.hpp"
#include "gpd/solver.hpp"

namespace {

int run_gen_network(int links, double radius, double density, std::uint64_t seed,
                    const std::string& out) {
  gpd::GenNetworkOptions options;
  options.links = links;
  options.radius = radius;
  options.density = density;
  options.seed = seed;
  const gpd::NetworkSpec net = gpd::gen_network(options);
  gpd::save_network(net, out);
  std::cout << "wrote " << out << " (" << net.link_count << " links, "
            << net.mode_count(0) << " modes)\n";
  return 0;
}

int run_simulate(const std::string& config_path, std::int64_t slots_override,
                 std::int64_t seed_override, const std::string& out_override,
                 const std::string& oracle_override) {
  gpd::RunConfig config = gpd::load_run_config(config_path);
  if (slots_override > 0) config.slots = slots_override;
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) config.out_dir = out_override;
  if (!oracle_override.empty()) config.oracle = oracle_override == "on";
  const gpd::RunSummary summary = gpd::simulate(config);
  std::cout << "slots " << summary.slots << "  f " << summary.f_final << "  g "
            << summary.g_final << "  max_queue " << summary.max_queue_over_run << '\n';
  if (summary.oracle_enabled)
    std::cout << "oracle f " << summary.oracle_f << "  relative cost gap "
              << summary.cost_gap_rel << '\n';
  std::cout << "outputs in " << config.out_dir << '\n';
  return 0;
}

int run_solve(const std::string& config_path, std::int64_t iters, double tol,
              const std::string& out_override) {
  gpd::RunConfig config = gpd::load_run_config(config_path);
  if (!out_override.empty()) config.out_dir = out_override;
  if (config.out_dir.empty()) config.out_dir = ".";
  std::filesystem::create_directories(config.out_dir);

  const gpd::UncertainParams y = gpd::true_params(config);
  gpd::FwOptions options;
  if (iters > 0) options.max_iters = iters;
  options.gap_tol = tol;
  options.trace_cadence = std::max<std::int64_t>(1, options.max_iters / 2000);
  const gpd::SolverResult res = gpd::solve_pen_fw(y, config.problem, config.network, options);

  const auto dir = std::filesystem::path(config.out_dir);
  {
    std::ofstream trace(dir / "solve_trace.csv");
    trace << "iter,g,gap\n";
    for (const auto& p : res.trace)
      trace << p.iter << ',' << gpd::format_double(p.g) << ',' << gpd::format_double(p.gap)
            << '\n';
  }
  {
    std::ofstream rep(dir / "solve_report.json");
    rep << "{\n";
    rep << "  \"g_star\": " << gpd::format_double(res.g_star) << ",\n";
    rep << "  \"f_at_x_star\": " << gpd::format_double(res.f_at_x_star) << ",\n";
    rep << "  \"penalty_at_star\": " << gpd::format_double(res.penalty_at_star) << ",\n";
    rep << "  \"fw_gap\": " << gpd::format_double(res.fw_gap) << ",\n";
    rep << "  \"iterations\": " << res.iterations << ",\n";
    rep << "  \"gap_converged\": " << (res.gap_converged ? "true" : "false");
    int total_modes = 0;
    for (int m = 0; m < config.network.state_count(); ++m)
      total_modes += config.network.mode_count(m);
    if (total_modes <= gpd::kMaxExactModes) {
      const gpd::ExactOptResult exact =
          gpd::solve_opt_exact_small(y, config.problem, config.network);
      rep << ",\n  \"exact\": {\n";
      rep << "    \"feasible\": " << (exact.feasible_eps ? "true" : "false") << ",\n";
      rep << "    \"f0\": " << gpd::format_double(exact.f0) << ",\n";
      rep << "    \"f_eps\": " << gpd::format_double(exact.f_eps) << ",\n";
      rep << "    \"sensitivity_holds\": " << (exact.sensitivity_holds ? "true" : "false")
          << "\n  }";
    }
    rep << "\n}\n";
  }
  std::cout << "g* " << res.g_star << "  f(x*) " << res.f_at_x_star << "  gap " << res.fw_gap
            << "  iters " << res.iterations << '\n';
  std::cout << "report in " << config.out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-slotted wireless scheduling simulator and PEN solver"};
  app.require_subcommand(1);

  // gen-network
  auto* gen = app.add_subcommand("gen-network", "Generate a random network spec file");
  int links = 7;
  double radius = -1.0, density = -1.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "network.json";
  gen->add_option("--links", links, "Number of links");
  gen->add_option("--radius", radius, "Geometric interference radius");
  gen->add_option("--density", density, "Conflict probability per link pair");
  gen->add_option("--seed", gen_seed, "Placement seed");
  gen->add_option("--out", gen_out, "Output network file");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the per-slot scheduler");
  std::string sim_config;
  std::int64_t sim_slots = -1, sim_seed = -1;
  std::string sim_out, sim_oracle;
  sim->add_option("--config", sim_config, "Run config file")->required();
  sim->add_option("--slots", sim_slots, "Override slot count");
  sim->add_option("--seed", sim_seed, "Override seed");
  sim->add_option("--out", sim_out, "Override output directory");
  sim->add_option("--oracle", sim_oracle, "Override oracle (on|off)")
      ->check(CLI::IsMember({"on", "off"}));

  // solve
  auto* solve = app.add_subcommand("solve", "Solve PEN on the configured true parameters");
  std::string solve_config, solve_out;
  std::int64_t solve_iters = -1;
  double solve_tol = 1e-6;
  solve->add_option("--config", solve_config, "Run config file")->required();
  solve->add_option("--iters", solve_iters, "Iteration budget");
  solve->add_option("--tol", solve_tol, "Duality-gap stop");
  solve->add_option("--out", solve_out, "Output directory");

  // report
  auto* rep = app.add_subcommand("report", "Emit plot-data files for a run directory");
  std::string rep_dir;
  rep->add_option("--run", rep_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_network(links, radius, density, gen_seed, gen_out);
    if (sim->parsed()) return run_simulate(sim_config, sim_slots, sim_seed, sim_out, sim_oracle);
    if (solve->parsed()) return run_solve(solve_config, solve_iters, solve_tol, solve_out);
    if (rep->parsed()) {
      gpd::report(rep_dir);
      std::cout << "report files in " << rep_dir << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
