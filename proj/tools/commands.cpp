#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stms/csv.hpp"
#include "stms/diagnostics.hpp"
#include "stms/errors.hpp"
#include "stms/forecast.hpp"
#include "stms/gev.hpp"
#include "stms/inference.hpp"
#include "stms/scoring.hpp"
#include "stms/stats.hpp"

#include <map>

namespace stms::cli {

namespace {

// Provenance sidecar written next to every output file.
void write_sidecar(const std::string& out_path, const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream s;
  s << "command=" << command << '\n';
  for (const auto& [k, v] : kv) s << k << '=' << v << '\n';
  write_text_file(out_path + ".meta", s.str());
}

std::string fmt(double v) { return format_full(v); }

SpaceTimeField load_input(const std::string& path, const std::string& scale) {
  return load_field(path, parse_scale(scale));
}

// Standardize if needed; returns the Frechet field and, when fitted here,
// the marginal model.
SpaceTimeField to_frechet_field(const SpaceTimeField& field, const std::string& marginals_path,
                                MarginalModel* model_out) {
  if (field.scale() == Scale::frechet) return field;
  if (field.scale() == Scale::gumbel)
    throw ValidationError("gumbel-scale input is not supported here; supply frechet or raw");
  MarginalModel model;
  if (!marginals_path.empty())
    model = load_marginals(marginals_path, field.grid());
  else
    model = fit_marginals(field);
  if (model_out) *model_out = model;
  return standardize_field(field, model);
}

double cover_all_pairs_radius(const SpatialGrid& g) {
  return std::ceil(std::hypot(static_cast<double>(g.m1 - 1), static_cast<double>(g.m2 - 1))) + 1.0;
}

FitResult read_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open params file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_fit_result(buf.str());
}

}  // namespace

std::vector<int> parse_leads(const std::string& text) {
  std::vector<int> leads;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    if (dash != std::string::npos) {
      const int lo = std::stoi(tok.substr(0, dash));
      const int hi = std::stoi(tok.substr(dash + 1));
      for (int u = lo; u <= hi; ++u) leads.push_back(u);
    } else if (!tok.empty()) {
      leads.push_back(std::stoi(tok));
    }
  }
  if (leads.empty()) throw ValidationError("no leads given");
  return leads;
}

int cmd_simulate(const SimulateConfig& cfg) {
  SpatialGrid grid;
  grid.mesh = cfg.mesh;
  grid.m1 = cfg.m1;
  grid.m2 = cfg.m2;
  grid.origin = {cfg.origin_x, cfg.origin_y};
  ModelParams params{Semivariogram{cfg.kappa, cfg.hurst}, {cfg.tau1, cfg.tau2}, cfg.a};

  const auto t_start = std::chrono::steady_clock::now();
  const SpaceTimeField field = simulate_st(grid, cfg.T, params, cfg.seed, cfg.refine);
  save_field(field, cfg.output);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  write_sidecar(cfg.output, "simulate",
                {{"m1", std::to_string(cfg.m1)},
                 {"m2", std::to_string(cfg.m2)},
                 {"mesh", fmt(cfg.mesh)},
                 {"origin_x", fmt(cfg.origin_x)},
                 {"origin_y", fmt(cfg.origin_y)},
                 {"T", std::to_string(cfg.T)},
                 {"kappa", fmt(cfg.kappa)},
                 {"hurst", fmt(cfg.hurst)},
                 {"tau1", fmt(cfg.tau1)},
                 {"tau2", fmt(cfg.tau2)},
                 {"a", fmt(cfg.a)},
                 {"refine", std::to_string(cfg.refine)},
                 {"seed", std::to_string(cfg.seed)},
                 {"scale", "frechet"}});
  std::cout << "simulated " << cfg.m1 << "x" << cfg.m2 << "x" << cfg.T << " field in " << secs
            << " s -> " << cfg.output << "\n";
  return 0;
}

int cmd_fit(const FitConfig& cfg) {
  const SpaceTimeField input = load_input(cfg.input, cfg.scale);
  MarginalModel model;
  const bool fitted_margins = input.scale() == Scale::raw;
  const SpaceTimeField field = to_frechet_field(input, "", fitted_margins ? &model : nullptr);
  const SpatialGrid& g = field.grid();

  const double r_s = cfg.r > 0.0 ? cfg.r : cover_all_pairs_radius(g);
  const double r_st = cfg.r_time > 0.0 ? cfg.r_time : r_s;
  const DesignMask mask_s = build_mask(g.mesh, r_s, cfg.p, true);
  const DesignMask mask_st = build_mask(g.mesh, r_st, cfg.p, false);
  const double eps = cfg.epsilon > 0.0 ? cfg.epsilon : default_epsilon(g.mesh, cfg.p);

  FitOptions fopt;
  fopt.max_evals_step1 = cfg.max_evals1;
  fopt.max_evals_step2 = cfg.max_evals2;

  FitResult fit;
  if (cfg.joint) {
    fit = fit_joint(field, mask_s, mask_st, eps, fopt);
  } else {
    fit = fit_two_step(field, mask_s, mask_st, eps, fopt);
  }
  write_text_file(cfg.output + "_fit.txt", fit.to_text());
  if (fitted_margins) save_marginals(model, g, cfg.output + "_marginals.csv");

  std::cout << "fit: kappa=" << fit.params.sv.kappa << " 2H=" << 2.0 * fit.params.sv.hurst
            << " tau=(" << fit.params.tau.x << "," << fit.params.tau.y << ") a=" << fit.params.a
            << (fit.boundary_warning ? "  [boundary solution]" : "") << "\n";

  // Sensitivity of the second step to the exclusion radius.
  if (!cfg.skip_sensitivity) {
    std::ostringstream rep;
    rep << "epsilon,kappa,hurst,tau1,tau2,a\n";
    for (double f : {0.5, 1.0, 2.0}) {
      const double e = eps * f;
      const FitResult r = fit_two_step(field, mask_s, mask_st, e, fopt);
      rep << fmt(e) << ',' << fmt(r.params.sv.kappa) << ',' << fmt(r.params.sv.hurst) << ','
          << fmt(r.params.tau.x) << ',' << fmt(r.params.tau.y) << ',' << fmt(r.params.a) << '\n';
    }
    write_text_file(cfg.output + "_epsilon_sensitivity.csv", rep.str());
  }

  if (cfg.bootstrap > 0) {
    if (input.scale() != Scale::raw)
      throw ValidationError(
          "bootstrap needs the raw-scale field (marginal refits are part of the procedure)");
    BootstrapOptions bopt;
    bopt.B = cfg.bootstrap;
    bopt.level = cfg.level;
    bopt.seed = cfg.seed;
    bopt.fit = fopt;
    const BootstrapResult boot = bootstrap_ci(input, mask_s, mask_st, eps, bopt);
    write_text_file(cfg.output + "_bootstrap.csv", boot.to_csv());
    std::cout << "bootstrap: " << boot.replicates.size() << " replicates (" << boot.n_failed
              << " failed)\n";
  }

  write_sidecar(cfg.output + "_fit.txt", "fit",
                {{"input", cfg.input},
                 {"scale", cfg.scale},
                 {"r", fmt(r_s)},
                 {"r_time", fmt(r_st)},
                 {"p", std::to_string(cfg.p)},
                 {"epsilon", fmt(eps)},
                 {"bootstrap", std::to_string(cfg.bootstrap)},
                 {"level", fmt(cfg.level)},
                 {"seed", std::to_string(cfg.seed)}});
  return 0;
}

int cmd_forecast(const ForecastConfig& cfg) {
  const SpaceTimeField input = load_input(cfg.input, cfg.scale);
  MarginalModel model;
  bool have_margins = false;
  SpaceTimeField field = input;
  if (input.scale() == Scale::raw) {
    field = to_frechet_field(input, cfg.marginals, &model);
    have_margins = true;
  } else if (!cfg.marginals.empty()) {
    model = load_marginals(cfg.marginals, input.grid());
    have_margins = true;
  }
  if (cfg.params.empty()) throw ValidationError("forecast needs --params (fit output)");
  const FitResult fit = read_fit(cfg.params);

  const int t0 = cfg.t0 > 0 ? cfg.t0 : field.T();
  for (int u : cfg.leads) {
    const GridForecast gf = forecast_grid(field, t0, u, cfg.ensemble_size, fit.params,
                                          have_margins ? &model : nullptr, cfg.seed);
    const std::string path = cfg.output + "_lead" + std::to_string(u) + ".csv";
    write_text_file(path, grid_forecast_to_csv(gf, field.grid()));
    write_sidecar(path, "forecast",
                  {{"input", cfg.input},
                   {"params", cfg.params},
                   {"t0", std::to_string(t0)},
                   {"lead", std::to_string(u)},
                   {"ensemble_size", std::to_string(cfg.ensemble_size)},
                   {"seed", std::to_string(cfg.seed)},
                   {"n_missing", std::to_string(gf.n_missing)}});
    std::cout << "lead " << u << ": " << gf.per_site.size() - gf.n_missing << " sites forecast, "
              << gf.n_missing << " missing -> " << path << "\n";
  }
  return 0;
}

int cmd_diagnose(const DiagnoseConfig& cfg) {
  const SpaceTimeField input = load_input(cfg.input, cfg.scale);
  const SpaceTimeField field = to_frechet_field(input, cfg.marginals, nullptr);
  const SpatialGrid& g = field.grid();

  bool have_params = false;
  FitResult fit;
  if (!cfg.params.empty()) {
    fit = read_fit(cfg.params);
    have_params = true;
  }
  bool have_competitor = false;
  SymmetricBrParams comp;
  if (!cfg.competitor.empty()) {
    std::ifstream in(cfg.competitor);
    if (!in) throw DataError("cannot open competitor parameter file: " + cfg.competitor);
    std::string line;
    std::map<std::string, double> kv;
    while (std::getline(in, line)) {
      const auto pos = line.find('=');
      if (pos != std::string::npos) kv[line.substr(0, pos)] = std::stod(line.substr(pos + 1));
    }
    for (const char* k : {"kappa_s", "kappa_t", "psi_s", "psi_t"})
      if (!kv.count(k)) throw DataError("competitor file missing key: " + std::string(k));
    comp = SymmetricBrParams{kv["kappa_s"], kv["kappa_t"], kv["psi_s"], kv["psi_t"]};
    have_competitor = true;
  }

  // Ratio-field CDFs per requested (h1,h2,u); plot-ready long format.
  {
    std::ostringstream out;
    out << "h1,h2,u,value,cdf\n";
    std::ostringstream atoms;
    atoms << "h1,h2,u,atom_location,atom_mass\n";
    std::stringstream ss(cfg.lags);
    std::string item;
    while (std::getline(ss, item, ';')) {
      if (item.empty()) continue;
      std::stringstream ls(item);
      std::string a, b, c;
      std::getline(ls, a, ',');
      std::getline(ls, b, ',');
      std::getline(ls, c, ',');
      const int z1 = std::stoi(a), z2 = std::stoi(b), u = std::stoi(c);
      const RatioFieldCdf r = ratio_field_cdf(field, {z1, z2}, u);
      const std::size_t stride = std::max<std::size_t>(1, r.sorted_values.size() / 400);
      for (std::size_t i = 0; i < r.sorted_values.size(); i += stride)
        out << z1 * g.mesh << ',' << z2 * g.mesh << ',' << u << ',' << fmt(r.sorted_values[i])
            << ',' << fmt((i + 1.0) / r.sorted_values.size()) << '\n';
      if (const auto atom = detect_atom(r))
        atoms << z1 * g.mesh << ',' << z2 * g.mesh << ',' << u << ',' << fmt(atom->location)
              << ',' << fmt(atom->mass) << '\n';
    }
    write_text_file(cfg.output + "_ratio_cdf.csv", out.str());
    write_text_file(cfg.output + "_ratio_atoms.csv", atoms.str());
  }

  // Binned F-madogram curve, with the fitted model curve when available.
  {
    const double bin = cfg.fmad_bin > 0.0 ? cfg.fmad_bin : 0.5 * g.mesh;
    const auto curve = fmadogram_binned(field, bin);
    std::ostringstream out;
    out << "distance,theta_empirical" << (have_params ? ",theta_model" : "") << "\n";
    for (const auto& ptn : curve) {
      out << fmt(ptn.distance) << ',' << fmt(ptn.theta);
      if (have_params) out << ',' << fmt(extremal_coeff({{ptn.distance, 0.0}, 0}, fit.params));
      out << '\n';
    }
    write_text_file(cfg.output + "_fmadogram.csv", out.str());
  }

  // Cross-correlations for a default fan of space-time lags.
  {
    std::ostringstream out;
    out << "h1,h2,u,rho_mean,q025,q975" << (have_params ? ",rho_model" : "")
        << (have_competitor ? ",rho_competitor" : "") << "\n";
    const std::vector<std::pair<int, int>> lags{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}, {1, -1}};
    for (int u = 0; u <= 3; ++u) {
      for (const auto& [z1, z2] : lags) {
        if (u == 0 && z1 == 0 && z2 == 0) continue;
        CrossCorrEstimate e;
        try {
          e = empirical_crosscorr(field, {z1, z2}, u);
        } catch (const ValidationError&) {
          continue;
        }
        out << z1 * g.mesh << ',' << z2 * g.mesh << ',' << u << ',' << fmt(e.mean) << ','
            << fmt(e.q025) << ',' << fmt(e.q975);
        if (have_params)
          out << ',' << fmt(theoretical_crosscorr({{z1 * g.mesh, z2 * g.mesh}, u}, fit.params));
        if (have_competitor)
          out << ',' << fmt(symmetric_br_crosscorr({{z1 * g.mesh, z2 * g.mesh}, u}, comp));
        out << '\n';
      }
    }
    write_text_file(cfg.output + "_crosscorr.csv", out.str());
  }

  write_sidecar(cfg.output + "_ratio_cdf.csv", "diagnose",
                {{"input", cfg.input}, {"lags", cfg.lags}, {"params", cfg.params}});
  std::cout << "diagnostics written with prefix " << cfg.output << "\n";
  return 0;
}

int cmd_score(const ScoreConfig& cfg) {
  const SpaceTimeField input = load_input(cfg.input, cfg.scale);
  const SpaceTimeField field = to_frechet_field(input, cfg.marginals, nullptr);
  if (cfg.params.empty()) throw ValidationError("score needs --params (fit output)");
  const FitResult fit = read_fit(cfg.params);

  ProtocolOptions opt;
  opt.leads = cfg.leads;
  opt.n_events = cfg.events;
  opt.ensemble_size = cfg.ensemble_size;
  opt.seed = cfg.seed;
  opt.gumbel_scale = !cfg.raw_scale_scores;
  std::vector<std::pair<int, VerificationEvent>> events;
  const auto rows = evaluate_protocol(field, fit.params, opt, &events);
  write_text_file(cfg.output + "_scores.csv", score_table_to_csv(rows));
  {
    std::ostringstream pairs;
    pairs << "lead,i1,i2,t,observed,forecast_mean,forecast_q50\n";
    for (auto& [lead, ev] : events) {
      const auto [i1, i2] = field.grid().site_coords(ev.site);
      std::vector<double> ens = ev.ensemble;
      pairs << lead << ',' << i1 << ',' << i2 << ',' << ev.t << ',' << fmt(ev.observed) << ','
            << fmt(mean(ens)) << ',' << fmt(quantile(ens, 0.5)) << '\n';
    }
    write_text_file(cfg.output + "_pairs.csv", pairs.str());
  }
  write_sidecar(cfg.output + "_scores.csv", "score",
                {{"input", cfg.input},
                 {"params", cfg.params},
                 {"events", std::to_string(cfg.events)},
                 {"ensemble_size", std::to_string(cfg.ensemble_size)},
                 {"seed", std::to_string(cfg.seed)}});
  for (const auto& r : rows)
    std::cout << "lead " << r.lead << ": mean CRPS " << r.mean_crps << ", RMSE " << r.rmse << " ("
              << r.n_events << " events, " << r.n_excluded << " excluded)\n";
  return 0;
}

}  // namespace stms::cli
