#include "strobe/config.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace strobe {

using nlohmann::json;

void StudyConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (model != "burgers" && model != "shallow-water") fail("unknown model '" + model + "'");
  if (nx < 2 || nt < 1) fail("mesh needs nx >= 2 and nt >= 1");
  if (order != 2) fail("only p = 2 is supported");
  if (n_train < 1) fail("empty training set");
  if (n_test < 1) fail("empty test set");
  if (sampling != "uniform" && sampling != "grid") fail("sampling must be 'uniform' or 'grid'");
  if (mbar < 1) fail("mbar must be positive");
  if (n_max < 1) fail("n_max must be positive");
  if (!(xi > 0.0)) fail("xi must be positive");
  if (!(tol_pod > 0.0 && tol_pod < 1.0)) fail("tol_pod must lie in (0,1)");
  if (!(greedy_tol > 0.0)) fail("greedy_tol must be positive");
  if (!(eps > 0.0) || !(c_exp > 0.0) || delta < 0.0) fail("bijectivity constants must be positive");
  if (filter_window < 1 || filter_window % 2 == 0) fail("filter_window must be odd and positive");
  if (bfgs_max_iter < 1) fail("bfgs_max_iter must be positive");
  if (rom_N.empty()) fail("rom_N is empty");
  for (int n : rom_N)
    if (n < 1) fail("rom_N entries must be positive");
  if (j_factor < 1) fail("j_factor must be positive");
  for (int j : j_factors)
    if (j < 1) fail("j_factors entries must be positive");
  for (double t : eqp_tols)
    if (!(t > 0.0)) fail("EQP tolerances must be positive");
  if (eqp_tols.empty()) fail("eqp_tols is empty");
  if (cv_folds < 2 || cv_folds > n_train) fail("cv_folds must lie in [2, n_train]");
  if (!(r2_min <= 1.0)) fail("r2_min must not exceed 1");
  if (timing_repeats < 1) fail("timing_repeats must be positive");
  if (!(newton.rel_tol > 0.0) || !(newton.abs_floor > 0.0)) fail("Newton tolerances must be positive");
  if (custom_viscosity && (viscosity.eps0 < 0.0 || viscosity.eps_base < 0.0)) fail("viscosity must be nonnegative");
}

namespace {

template <class T>
void take(const json& j, const char* key, T& v, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) v = j.at(key).get<T>();
}

}  // namespace

StudyConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  StudyConfig c;
  std::set<std::string> seen;
  try {
    take(j, "name", c.name, seen);
    take(j, "model", c.model, seen);
    take(j, "nx", c.nx, seen);
    take(j, "nt", c.nt, seen);
    take(j, "order", c.order, seen);
    seen.insert("viscosity");
    if (j.contains("viscosity")) {
      const json& v = j.at("viscosity");
      std::set<std::string> vs;
      c.custom_viscosity = true;
      take(v, "s0", c.viscosity.s0, vs);
      take(v, "kappa", c.viscosity.kappa, vs);
      take(v, "eps0", c.viscosity.eps0, vs);
      take(v, "eps_base", c.viscosity.eps_base, vs);
      for (auto it = v.begin(); it != v.end(); ++it)
        if (!vs.count(it.key())) throw ConfigError("config: unknown viscosity key '" + it.key() + "'");
    }
    take(j, "n_train", c.n_train, seen);
    take(j, "n_test", c.n_test, seen);
    take(j, "sampling", c.sampling, seen);
    take(j, "seed", c.seed, seen);
    seen.insert("newton");
    if (j.contains("newton")) {
      const json& v = j.at("newton");
      std::set<std::string> ns;
      take(v, "max_iter", c.newton.max_iter, ns);
      take(v, "rel_tol", c.newton.rel_tol, ns);
      take(v, "abs_floor", c.newton.abs_floor, ns);
      take(v, "picard_patience", c.newton.picard_patience, ns);
      for (auto it = v.begin(); it != v.end(); ++it)
        if (!ns.count(it.key())) throw ConfigError("config: unknown newton key '" + it.key() + "'");
    }
    take(j, "mbar", c.mbar, seen);
    take(j, "n_max", c.n_max, seen);
    take(j, "xi", c.xi, seen);
    take(j, "tol_pod", c.tol_pod, seen);
    take(j, "greedy_tol", c.greedy_tol, seen);
    take(j, "eps", c.eps, seen);
    take(j, "c_exp", c.c_exp, seen);
    take(j, "delta", c.delta, seen);
    take(j, "filter_window", c.filter_window, seen);
    take(j, "bfgs_max_iter", c.bfgs_max_iter, seen);
    take(j, "rom_N", c.rom_N, seen);
    take(j, "j_factors", c.j_factors, seen);
    take(j, "j_factor", c.j_factor, seen);
    take(j, "continuous", c.continuous, seen);
    take(j, "eqp_tols", c.eqp_tols, seen);
    take(j, "cv_folds", c.cv_folds, seen);
    take(j, "r2_min", c.r2_min, seen);
    take(j, "timing_repeats", c.timing_repeats, seen);
    take(j, "output_dir", c.output_dir, seen);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: wrong value type: ") + e.what());
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!seen.count(it.key())) throw ConfigError("config: unknown key '" + it.key() + "'");
  c.validate();
  return c;
}

std::string config_to_json(const StudyConfig& c) {
  json j;
  j["name"] = c.name;
  j["model"] = c.model;
  j["nx"] = c.nx;
  j["nt"] = c.nt;
  j["order"] = c.order;
  if (c.custom_viscosity)
    j["viscosity"] = {{"s0", c.viscosity.s0}, {"kappa", c.viscosity.kappa}, {"eps0", c.viscosity.eps0},
                      {"eps_base", c.viscosity.eps_base}};
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["sampling"] = c.sampling;
  j["seed"] = c.seed;
  j["newton"] = {{"max_iter", c.newton.max_iter},
                 {"rel_tol", c.newton.rel_tol},
                 {"abs_floor", c.newton.abs_floor},
                 {"picard_patience", c.newton.picard_patience}};
  j["mbar"] = c.mbar;
  j["n_max"] = c.n_max;
  j["xi"] = c.xi;
  j["tol_pod"] = c.tol_pod;
  j["greedy_tol"] = c.greedy_tol;
  j["eps"] = c.eps;
  j["c_exp"] = c.c_exp;
  j["delta"] = c.delta;
  j["filter_window"] = c.filter_window;
  j["bfgs_max_iter"] = c.bfgs_max_iter;
  j["rom_N"] = c.rom_N;
  j["j_factors"] = c.j_factors;
  j["j_factor"] = c.j_factor;
  j["continuous"] = c.continuous;
  j["eqp_tols"] = c.eqp_tols;
  j["cv_folds"] = c.cv_folds;
  j["r2_min"] = c.r2_min;
  j["timing_repeats"] = c.timing_repeats;
  j["output_dir"] = c.output_dir;
  return j.dump(2);
}

StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

StudyConfig preset(const std::string& name) {
  StudyConfig c;
  c.name = name;
  if (name == "burgers-desk") {
    c.output_dir = "out/burgers-desk";
  } else if (name == "burgers-paper") {
    c.nx = 48;
    c.nt = 27;
    c.n_train = 200;
    c.n_test = 20;
    c.rom_N = {1, 2, 3, 4, 5, 6, 7, 8};
    c.output_dir = "out/burgers-paper";
  } else if (name == "sw-desk" || name == "sw-paper") {
    c.model = "shallow-water";
    c.nx = 30;
    c.nt = 12;
    c.n_max = 5;
    c.filter_window = 5;
    c.output_dir = "out/" + name;
    if (name == "sw-paper") {
      c.nx = 40;
      c.nt = 30;
      c.n_train = 100;
      c.n_test = 20;
      c.rom_N = {1, 2, 4, 6, 8, 10};
    }
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() { return {"burgers-desk", "burgers-paper", "sw-desk", "sw-paper"}; }

}  // namespace strobe
