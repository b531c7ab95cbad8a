#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "stms/errors.hpp"
#include "stms/parallel.hpp"

namespace {

// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 data error.
int run(int argc, char** argv) {
  CLI::App app{"Space-time max-autoregressive Brown-Resnick modelling: simulation, "
               "pairwise-likelihood fitting, ensemble forecasting, diagnostics and scoring"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  using namespace stms::cli;
  SimulateConfig sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a space-time field");
  c_sim->add_option("--m1", sim.m1, "Grid sites along x")->capture_default_str();
  c_sim->add_option("--m2", sim.m2, "Grid sites along y")->capture_default_str();
  c_sim->add_option("--mesh", sim.mesh, "Grid spacing")->capture_default_str();
  c_sim->add_option("--origin-x", sim.origin_x)->capture_default_str();
  c_sim->add_option("--origin-y", sim.origin_y)->capture_default_str();
  c_sim->add_option("--T", sim.T, "Time steps")->capture_default_str();
  c_sim->add_option("--kappa", sim.kappa, "Range parameter")->capture_default_str();
  c_sim->add_option("--hurst", sim.hurst, "Hurst index H (smoothness 2H)")->capture_default_str();
  c_sim->add_option("--tau1", sim.tau1, "Advection x component")->capture_default_str();
  c_sim->add_option("--tau2", sim.tau2, "Advection y component")->capture_default_str();
  c_sim->add_option("--a", sim.a, "Temporal decay in (0,1)")->capture_default_str();
  c_sim->add_option("--refine", sim.refine, "Simulation lattice refinement")->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--output", sim.output, "Output field CSV")->required();

  FitConfig fit;
  auto* c_fit = app.add_subcommand("fit", "Two-step pairwise-likelihood estimation");
  c_fit->add_option("--input", fit.input)->required();
  c_fit->add_option("--scale", fit.scale, "raw or frechet")->capture_default_str();
  c_fit->add_option("--r", fit.r, "Spatial lag radius (grid units; 0 = all pairs)")
      ->capture_default_str();
  c_fit->add_option("--r-time", fit.r_time, "Radius for the space-time step (0 = same as --r)")
      ->capture_default_str();
  c_fit->add_option("--p", fit.p, "Maximum temporal lag")->capture_default_str();
  c_fit->add_option("--epsilon", fit.epsilon, "Exclusion radius (0 = default rule)")
      ->capture_default_str();
  c_fit->add_option("--bootstrap", fit.bootstrap, "Bootstrap replicates (0 = off)")
      ->capture_default_str();
  c_fit->add_option("--level", fit.level, "Confidence level")->capture_default_str();
  c_fit->add_option("--seed", fit.seed)->capture_default_str();
  c_fit->add_option("--max-evals1", fit.max_evals1)->capture_default_str();
  c_fit->add_option("--max-evals2", fit.max_evals2)->capture_default_str();
  c_fit->add_flag("--skip-sensitivity", fit.skip_sensitivity,
                  "Skip the epsilon sensitivity report");
  c_fit->add_flag("--joint", fit.joint)->group("");  // hidden: one-step fit
  c_fit->add_option("--output", fit.output, "Output prefix")->required();

  ForecastConfig fc;
  std::string fc_leads = "1";
  auto* c_fc = app.add_subcommand("forecast", "Markovian ensemble forecasts on the grid");
  c_fc->add_option("--input", fc.input)->required();
  c_fc->add_option("--scale", fc.scale)->capture_default_str();
  c_fc->add_option("--marginals", fc.marginals, "GEV table CSV (for the raw scale)");
  c_fc->add_option("--params", fc.params, "Fit output text file")->required();
  c_fc->add_option("--t0", fc.t0, "Base time (0 = last slice)")->capture_default_str();
  c_fc->add_option("--lead", fc_leads, "Leads, e.g. 1,2,3 or 1-7")->capture_default_str();
  c_fc->add_option("--ensemble-size", fc.ensemble_size)->capture_default_str();
  c_fc->add_option("--seed", fc.seed)->capture_default_str();
  c_fc->add_option("--output", fc.output, "Output prefix")->required();

  DiagnoseConfig dg;
  auto* c_dg = app.add_subcommand("diagnose", "Ratio-field, F-madogram and cross-correlations");
  c_dg->add_option("--input", dg.input)->required();
  c_dg->add_option("--scale", dg.scale)->capture_default_str();
  c_dg->add_option("--marginals", dg.marginals);
  c_dg->add_option("--params", dg.params, "Fit output for model overlays");
  c_dg->add_option("--lags", dg.lags, "Ratio-field lags 'z1,z2,u;...'")->capture_default_str();
  c_dg->add_option("--fmad-bin", dg.fmad_bin, "F-madogram bin width")->capture_default_str();
  c_dg->add_option("--competitor", dg.competitor,
                   "key=value file (kappa_s,kappa_t,psi_s,psi_t) adding a symmetric-model "
                   "cross-correlation column");
  c_dg->add_option("--output", dg.output, "Output prefix")->required();

  ScoreConfig sc;
  std::string sc_leads = "1-7";
  auto* c_sc = app.add_subcommand("score", "CRPS/RMSE forecast verification");
  c_sc->add_option("--input", sc.input)->required();
  c_sc->add_option("--scale", sc.scale)->capture_default_str();
  c_sc->add_option("--marginals", sc.marginals);
  c_sc->add_option("--params", sc.params)->required();
  c_sc->add_option("--lead", sc_leads, "Leads, e.g. 1-7")->capture_default_str();
  c_sc->add_option("--events", sc.events)->capture_default_str();
  c_sc->add_option("--ensemble-size", sc.ensemble_size)->capture_default_str();
  c_sc->add_option("--seed", sc.seed)->capture_default_str();
  c_sc->add_flag("--raw-scale-scores", sc.raw_scale_scores,
                 "Score on the Frechet scale instead of Gumbel");
  c_sc->add_option("--output", sc.output, "Output prefix")->required();

  CLI11_PARSE(app, argc, argv);
  stms::set_num_threads(threads);

  if (c_sim->parsed()) return cmd_simulate(sim);
  if (c_fit->parsed()) return cmd_fit(fit);
  if (c_fc->parsed()) {
    fc.leads = parse_leads(fc_leads);
    return cmd_forecast(fc);
  }
  if (c_dg->parsed()) return cmd_diagnose(dg);
  if (c_sc->parsed()) {
    sc.leads = parse_leads(sc_leads);
    return cmd_score(sc);
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const stms::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const stms::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const stms::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
