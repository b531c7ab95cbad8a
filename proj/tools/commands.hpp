#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stms::cli {

struct SimulateConfig {
  int m1 = 10, m2 = 10;
  double mesh = 1.0;
  double origin_x = 0.0, origin_y = 0.0;
  int T = 50;
  double kappa = 1.0, hurst = 0.5, tau1 = 0.0, tau2 = 0.0, a = 0.5;
  int refine = 1;
  std::uint64_t seed = 1;
  std::string output;
};

struct FitConfig {
  std::string input;
  std::string scale = "raw";
  double r = 0.0;       // 0: cover all spatial pairs
  double r_time = 0.0;  // 0: same as r
  int p = 1;
  double epsilon = 0.0;  // 0: default rule
  int bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string output;  // prefix
  int max_evals1 = 400, max_evals2 = 500;
  bool skip_sensitivity = false;
  bool joint = false;  // one-step optimization of all five parameters
};

struct ForecastConfig {
  std::string input;
  std::string scale = "frechet";
  std::string marginals;  // optional CSV
  std::string params;     // fit text file
  int t0 = 0;             // 0: last slice
  std::vector<int> leads{1};
  int ensemble_size = 100;
  std::uint64_t seed = 1;
  std::string output;  // prefix
};

struct DiagnoseConfig {
  std::string input;
  std::string scale = "frechet";
  std::string marginals;
  std::string params;  // optional: theory overlays
  std::string lags = "1,0,1;0,1,1;2,0,1;1,0,2";
  double fmad_bin = 0.0;        // 0: mesh/2
  std::string competitor;       // key=value file with kappa_s,kappa_t,psi_s,psi_t
  std::string output;           // prefix
};

struct ScoreConfig {
  std::string input;
  std::string scale = "frechet";
  std::string marginals;
  std::string params;
  std::vector<int> leads{1, 2, 3, 4, 5, 6, 7};
  int events = 2000;
  int ensemble_size = 500;
  std::uint64_t seed = 1;
  bool raw_scale_scores = false;
  std::string output;  // prefix
};

int cmd_simulate(const SimulateConfig& cfg);
int cmd_fit(const FitConfig& cfg);
int cmd_forecast(const ForecastConfig& cfg);
int cmd_diagnose(const DiagnoseConfig& cfg);
int cmd_score(const ScoreConfig& cfg);

std::vector<int> parse_leads(const std::string& text);

}  // namespace stms::cli
