#pragma once

#include "strobe/hf_solver.hpp"
#include "strobe/models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace strobe {

/// Everything that defines an offline/online experiment.
struct StudyConfig {
  std::string name = "custom";
  std::string model = "burgers";
  int nx = 24, nt = 15, order = 2;
  bool custom_viscosity = false;
  ViscosityParams viscosity;

  int n_train = 30, n_test = 10;
  std::string sampling = "uniform";  // uniform | grid (training set only)
  std::uint64_t seed = 1;
  NewtonOptions newton;

  // registration
  int mbar = 8;
  int n_max = 3;
  double xi = 1e-4;
  double tol_pod = 1e-4;
  double greedy_tol = 1e-6;  // relative proximity
  double eps = 0.1, c_exp = 0.0025, delta = 0.0;
  int filter_window = 5;
  int bfgs_max_iter = 200;

  // reduced models
  std::vector<int> rom_N = {2, 4, 6};
  std::vector<int> j_factors = {1, 2, 3};
  int j_factor = 2;
  bool continuous = true;
  std::vector<double> eqp_tols = {1e-8, 2.5e-11};
  int cv_folds = 5;
  double r2_min = 0.75;
  int timing_repeats = 5;

  std::string output_dir = "out";

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

StudyConfig config_from_json(const std::string& text);
std::string config_to_json(const StudyConfig& cfg);
StudyConfig load_config(const std::string& path);
/// Built-in presets: burgers-paper, burgers-desk, sw-paper, sw-desk.
StudyConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace strobe
