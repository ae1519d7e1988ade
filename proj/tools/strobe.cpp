#include "strobe/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace strobe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config, preset, out;
  std::string model;
  int nx = 0, nt = 0;
  long long seed = -1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--preset", c.preset, "built-in configuration")->check(CLI::IsMember(preset_names()));
  app->add_option("--out", c.out, "output directory (default: from the configuration)");
  app->add_option("--model", c.model, "burgers or shallow-water");
  app->add_option("--nx", c.nx, "elements along x");
  app->add_option("--nt", c.nt, "elements along t");
  app->add_option("--seed", c.seed, "sampling seed");
}

StudyConfig resolve(const Common& c) {
  StudyConfig cfg;
  if (!c.config.empty() && !c.preset.empty()) throw ConfigError("give either --config or --preset");
  if (!c.config.empty()) cfg = load_config(c.config);
  if (!c.preset.empty()) cfg = preset(c.preset);
  if (!c.model.empty()) {
    if (c.preset.empty() && c.config.empty() && c.model == "shallow-water") cfg = preset("sw-desk");
    cfg.model = c.model;
  }
  if (c.nx > 0) cfg.nx = c.nx;
  if (c.nt > 0) cfg.nt = c.nt;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

Vector parse_mu(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad parameter value '" + tok + "'");
    }
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw FormatError("cannot write " + p.string());
  f << j.dump(2) << "\n";
}

fs::path dir_or(const std::string& given, const StudyConfig& cfg, const char* sub) {
  return given.empty() ? fs::path(cfg.output_dir) / sub : fs::path(given);
}

std::unique_ptr<OfflineModel> load_offline(const StudyConfig& cfg, const fs::path& snaps, const fs::path& comp) {
  auto off = setup_offline(cfg);
  load_snapshots(*off, snaps.string());
  if (!comp.empty()) load_compression(*off, comp.string());
  return off;
}

int run(int argc, char** argv) {
  CLI::App app{"strobe: registration-based space-time model reduction"};
  app.require_subcommand(1);
  Common common;

  // hf-solve
  auto* hf = app.add_subcommand("hf-solve", "solve the full-order problem at one parameter");
  add_common(hf, common);
  std::string mu_s;
  hf->add_option("--mu", mu_s, "parameter, comma separated")->required();

  // snapshots
  auto* sn = app.add_subcommand("snapshots", "solve at the training parameters");
  add_common(sn, common);
  bool train_grid = false;
  sn->add_flag("--train-grid", train_grid, "tensor grid instead of seeded uniform samples");
  int n_train = 0;
  sn->add_option("--n-train", n_train, "number of training parameters");

  // compress
  auto* co = app.add_subcommand("compress", "registration, RePOD and map regression");
  add_common(co, common);
  std::string snap_dir;
  co->add_option("--snapshots", snap_dir, "snapshot container");
  int nmax = 0;
  double xi = 0.0, tolpod = 0.0;
  co->add_option("--nmax", nmax, "template space size");
  co->add_option("--xi", xi, "H2 penalty weight");
  co->add_option("--tolpod", tolpod, "POD tolerance");

  // train-rom
  auto* tr = app.add_subcommand("train-rom", "test space, hyper-reduction and regressors");
  add_common(tr, common);
  std::string comp_dir;
  tr->add_option("--snapshots", snap_dir, "snapshot container");
  tr->add_option("--compression", comp_dir, "compression container");
  int rom_n = 4, rom_j = 0;
  double eqp_tol = 0.0;
  bool discontinuous = false;
  tr->add_option("--N", rom_n, "trial dimension");
  tr->add_option("--J", rom_j, "test dimension (default: j_factor N)");
  tr->add_option("--eqp-tol", eqp_tol, "NNLS step tolerance (default: tightest configured)");
  tr->add_flag("--discontinuous", discontinuous, "use the discontinuous trial and test spaces");

  // online
  auto* on = app.add_subcommand("online", "solve the reduced model at one parameter");
  std::string rom_dir, emit;
  on->add_option("--rom", rom_dir, "reduced model container")->required();
  on->add_option("--mu", mu_s, "parameter, comma separated")->required();
  on->add_option("--model", common.model, "expected model name");
  on->add_option("--emit-solution", emit, "write the reconstructed reference-frame solution");
  bool full_quadrature = false;
  on->add_flag("--hf-quadrature", full_quadrature, "use all elements instead of the sampled ones");

  // study
  auto* st = app.add_subcommand("study", "run the numerical studies and write CSV files");
  add_common(st, common);
  std::vector<std::string> studies;
  st->add_option("--study", studies, "study name or all")->check(CLI::IsMember([] {
    auto v = study_names();
    v.push_back("all");
    return v;
  }()));
  st->add_option("--snapshots", snap_dir, "reuse a snapshot container");
  st->add_option("--compression", comp_dir, "reuse a compression container (needs --snapshots)");

  // report
  auto* rp = app.add_subcommand("report", "summaries of stored artifacts");
  rp->add_option("--compression", comp_dir, "compression container");
  rp->add_option("--rom", rom_dir, "reduced model container");
  bool regression = false;
  rp->add_flag("--regression", regression, "per-target cross-validated R2 as CSV");
  std::string report_out, show_preset;
  rp->add_option("--out", report_out, "write the CSV here instead of stdout");
  rp->add_option("--preset", show_preset, "print a built-in configuration as JSON")->check(CLI::IsMember(preset_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*hf) {
    const StudyConfig cfg = resolve(common);
    auto off = setup_offline(cfg);
    const Vector mu = parse_mu(mu_s);
    if (mu.size() != off->law->box.dim()) throw ConfigError("parameter has the wrong dimension");
    Assembler as(off->law, off->mesh);
    as.set_parameter(mu);
    NewtonReport rep;
    const Vector U = solve_hf(as, cfg.newton, &rep);
    Container c;
    c.model = off->law->name();
    c.mesh_hash = off->mesh->hash();
    c.metadata = config_to_json(cfg);
    c.created = timestamp_utc();
    c.put("mus", Matrix(mu));
    c.put("U", Matrix(U));
    c.put("residual_norms", Vector(Vector::Constant(1, rep.residual_norm)));
    const fs::path dir = fs::path(cfg.output_dir) / "hf-solve";
    c.save(dir.string());
    std::cout << json{{"mu", to_std(mu)},          {"residual_norm", rep.residual_norm},
                      {"iterations", rep.iterations}, {"wall_time", rep.seconds},
                      {"output", dir.string()}}
                     .dump()
              << "\n";
    return 0;
  }

  if (*sn) {
    StudyConfig cfg = resolve(common);
    if (train_grid) cfg.sampling = "grid";
    if (n_train > 0) cfg.n_train = n_train;
    cfg.validate();
    auto off = setup_offline(cfg);
    offline_snapshots(*off, &std::cerr);
    const fs::path dir = fs::path(cfg.output_dir) / "snapshots";
    save_snapshots(*off, dir.string());
    std::cout << json{{"snapshots", off->train.size()}, {"failed", off->train.failed.size()}, {"output", dir.string()}}.dump()
              << "\n";
    return 0;
  }

  if (*co) {
    StudyConfig cfg = resolve(common);
    if (nmax > 0) cfg.n_max = nmax;
    if (xi > 0.0) cfg.xi = xi;
    if (tolpod > 0.0) cfg.tol_pod = tolpod;
    cfg.validate();
    auto off = load_offline(cfg, dir_or(snap_dir, cfg, "snapshots"), {});
    offline_compress(*off, &std::cerr);
    const fs::path dir = fs::path(cfg.output_dir) / "compression";
    save_compression(*off, dir.string());
    json log = json::array();
    for (const auto& it : off->greedy.log)
      log.push_back({{"N", it.N}, {"M", it.M}, {"max_f_relative", it.max_f_relative}, {"worst", it.worst},
                     {"f_relative", it.f_relative}, {"unconverged", it.unconverged}});
    json summary{{"N_repod", off->repod.N},
                 {"N_pod", pod_cardinality(off->unregistered.eigenvalues, cfg.tol_pod)},
                 {"M", off->greedy.W.cols()},
                 {"templates", off->greedy.templates.size()},
                 {"greedy", log},
                 {"output", dir.string()}};
    write_json(dir / "log.json", summary);
    std::cout << summary.dump() << "\n";
    return 0;
  }

  if (*tr) {
    const StudyConfig cfg = resolve(common);
    auto off = load_offline(cfg, dir_or(snap_dir, cfg, "snapshots"), dir_or(comp_dir, cfg, "compression"));
    const int J = rom_j > 0 ? rom_j : cfg.j_factor * rom_n;
    const double tol = eqp_tol > 0.0 ? eqp_tol : *std::min_element(cfg.eqp_tols.begin(), cfg.eqp_tols.end());
    const RomBuild b = train_rom(*off, rom_n, J, !discontinuous, tol);
    const fs::path dir = fs::path(cfg.output_dir) / ("rom-N" + std::to_string(rom_n));
    save_rom(b.rom, cfg, dir.string());
    json summary{{"N", rom_n},
                 {"J", J},
                 {"M", off->greedy.W.cols()},
                 {"sampled", b.rom.sampled.size()},
                 {"elements", off->mesh->num_elements()},
                 {"eqp_tol", tol},
                 {"constraint_residual", b.eqp.constraint_residual},
                 {"seconds", b.seconds},
                 {"output", dir.string()}};
    write_json(dir / "summary.json", summary);
    std::cout << summary.dump() << "\n";
    return 0;
  }

  if (*on) {
    StudyConfig cfg;
    const ReducedModel rom = load_rom(rom_dir, &cfg);
    if (!common.model.empty() && common.model != rom.model) throw ConfigError("reduced model is for " + rom.model);
    const ModelPtr law = cfg.custom_viscosity ? make_model(cfg.model, cfg.viscosity) : make_model(cfg.model);
    const Vector mu = parse_mu(mu_s);
    if (mu.size() != law->box.dim()) throw ConfigError("parameter has the wrong dimension");
    const OnlineSolver solver(rom, law, !full_quadrature);
    const OnlineResult r = solver.solve(mu);
    if (!emit.empty()) write_array(emit, to_array(Vector(rom.Z * r.alpha)));
    std::cout << json{{"alpha", to_std(r.alpha)},
                      {"a", to_std(r.a)},
                      {"residual_norm", r.report.residual_norm},
                      {"iterations", r.report.iterations},
                      {"converged", r.report.converged},
                      {"map_fallback", r.map_fallback},
                      {"wall_time", r.seconds}}
                     .dump()
              << "\n";
    return r.report.converged ? 0 : 3;
  }

  if (*st) {
    const StudyConfig cfg = resolve(common);
    if (studies.empty()) studies = {"all"};
    std::unique_ptr<OfflineModel> off;
    if (!snap_dir.empty()) {
      off = load_offline(cfg, snap_dir, {});
      if (!comp_dir.empty())
        load_compression(*off, comp_dir);
      else
        offline_compress(*off, &std::cerr);
    } else {
      off = run_offline(cfg, &std::cerr);
      save_snapshots(*off, (fs::path(cfg.output_dir) / "snapshots").string());
      save_compression(*off, (fs::path(cfg.output_dir) / "compression").string());
    }
    const StudyResults res = run_study(*off, studies, cfg.output_dir, &std::cerr);
    json secs = off->seconds;
    for (const auto& [k, v] : res.seconds) secs[k] = v;
    json summary{{"model", cfg.model},
                 {"elements", off->mesh->num_elements()},
                 {"snapshots", off->train.size()},
                 {"N_repod", off->repod.N},
                 {"M", off->greedy.W.cols()},
                 {"seconds", secs}};
    write_json(fs::path(cfg.output_dir) / "summary.json", summary);
    std::cout << summary.dump() << "\n";
    return 0;
  }

  if (*rp) {
    std::ostringstream csv;
    if (!show_preset.empty()) {
      csv << config_to_json(preset(show_preset)) << "\n";
    } else if (regression) {
      csv << "# cross-validated R2 of every regression target (dimensionless)\nregressor,target,r2,active\n";
      auto emit_reg = [&](const std::string& name, const RbfRegressor& r) {
        for (int t = 0; t < r.targets(); ++t)
          csv << name << "," << t << "," << r.r2()(t) << "," << (r.active()[t] ? 1 : 0) << "\n";
      };
      if (!comp_dir.empty()) {
        const Container c = Container::load(comp_dir);
        StudyConfig cfg = config_from_json(c.metadata);
        auto off = setup_offline(cfg);
        load_compression(*off, comp_dir);
        emit_reg("map", off->map_regressor);
      }
      if (!rom_dir.empty()) {
        const ReducedModel rom = load_rom(rom_dir);
        emit_reg("map", rom.map_regressor);
        emit_reg("alpha", rom.alpha_regressor);
      }
      if (comp_dir.empty() && rom_dir.empty()) throw ConfigError("report --regression needs --compression or --rom");
    } else {
      json j;
      for (const auto& d : {comp_dir, rom_dir}) {
        if (d.empty()) continue;
        const Container c = Container::load(d);
        j[d] = {{"model", c.model}, {"mesh_hash", std::to_string(c.mesh_hash)}, {"arrays", c.names()},
                {"created", c.created}};
      }
      csv << j.dump(2) << "\n";
    }
    if (report_out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream f(report_out);
      if (!f) throw FormatError("cannot write " + report_out);
      f << csv.str();
    }
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    std::cerr << "nonconvergence: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
