#include "strobe/pipeline.hpp"

#include "strobe/rk1d.hpp"
#include "strobe/space_only.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>

namespace strobe {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void note(std::ostream* log, const std::string& s) {
  if (log) *log << s << std::endl;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

double xnorm(const SparseMatrix& X, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(X * v))); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int nearest(const ParameterBox& box, const std::vector<Vector>& mus, const Vector& mu) {
  int best = 0;
  double dmin = std::numeric_limits<double>::infinity();
  const Vector m = box.normalize(mu);
  for (std::size_t k = 0; k < mus.size(); ++k) {
    const double d = (box.normalize(mus[k]) - m).norm();
    if (d < dmin) {
      dmin = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

RbfRegressor::Options regression_options(const StudyConfig& cfg) {
  RbfRegressor::Options o;
  o.folds = cfg.cv_folds;
  o.r2_min = cfg.r2_min;
  o.seed = cfg.seed;
  return o;
}

TrainingSet training_set(const OfflineModel& off, bool continuous) {
  TrainingSet ts;
  ts.law = off.law;
  ts.mesh = off.mesh;
  ts.space = off.space;
  ts.mus = off.train.mus;
  ts.mapped = off.basis(continuous).mapped;
  ts.W = off.greedy.W;
  ts.coefficients = off.greedy.coefficients;
  return ts;
}

EqpResult solve_eqp(const Matrix& G, const Vector& b, double tol) {
  EqpResult e;
  NnlsOptions o;
  o.step_tol = tol;
  o.kkt_tol = tol;
  e.nnls = nnls(G, b, o);
  e.rho = e.nnls.x;
  for (Eigen::Index k = 0; k < e.rho.size(); ++k)
    if (e.rho(k) > 0.0) e.sampled.push_back(static_cast<int>(k));
  e.constraint_residual = e.nnls.residual_norm;
  return e;
}

// regressor parts under a name prefix
void put_regressor(Container& c, const std::string& p, const RbfRegressor& r) {
  c.put(p + ".box_lo", r.box.lo);
  c.put(p + ".box_hi", r.box.hi);
  c.put(p + ".centers", r.centers);
  c.put(p + ".weights", r.weights);
  c.put(p + ".mean", r.mean_);
  c.put(p + ".r2", r.r2_);
  std::vector<std::int64_t> act(r.active_.begin(), r.active_.end());
  c.put(p + ".active", act);
}

RbfRegressor get_regressor(const Container& c, const std::string& p) {
  ParameterBox box{c.vector(p + ".box_lo"), c.vector(p + ".box_hi")};
  const auto act = c.ints(p + ".active");
  return RbfRegressor::from_parts(box, c.matrix(p + ".centers"), c.matrix(p + ".weights"), c.vector(p + ".mean"),
                                  c.vector(p + ".r2"), std::vector<char>(act.begin(), act.end()));
}

void put_pod(Container& c, const std::string& p, const PODResult& r) {
  c.put(p + ".modes", r.modes);
  c.put(p + ".eigenvalues", r.eigenvalues);
  c.put(p + ".coefficients", r.coefficients);
  c.put(p + ".N", std::vector<std::int64_t>{r.N});
}

PODResult get_pod(const Container& c, const std::string& p) {
  PODResult r;
  r.modes = c.matrix(p + ".modes");
  r.eigenvalues = c.vector(p + ".eigenvalues");
  r.coefficients = c.matrix(p + ".coefficients");
  r.N = static_cast<int>(c.ints(p + ".N").at(0));
  return r;
}

void put_repod(Container& c, const std::string& p, const RePODResult& r) {
  put_pod(c, p, r.pod);
  c.put(p + ".cardinality", std::vector<std::int64_t>{r.N});
  c.put(p + ".mapped", r.mapped);
}

RePODResult get_repod(const Container& c, const std::string& p) {
  RePODResult r;
  r.pod = get_pod(c, p);
  r.N = static_cast<int>(c.ints(p + ".cardinality").at(0));
  r.mapped = c.matrix(p + ".mapped");
  r.alpha = r.pod.coefficients;
  return r;
}

std::vector<Vector> columns(const Matrix& M) {
  std::vector<Vector> v;
  for (Eigen::Index j = 0; j < M.cols(); ++j) v.push_back(M.col(j));
  return v;
}

Container open_checked(const std::string& dir, const OfflineModel& off) {
  Container c = Container::load(dir);
  if (c.model != off.law->name()) throw FormatError("container " + dir + " holds model " + c.model);
  c.expect_mesh(off.mesh->hash());
  return c;
}

// CSV with a leading comment line
class Csv {
 public:
  Csv(const std::string& dir, const std::string& name, const std::string& comment, const std::string& header) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    out_.open(std::filesystem::path(dir) / name);
    if (!out_) throw FormatError("cannot write " + name);
    out_ << "# " << comment << "\n" << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    if (!out_.is_open()) return;
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace

// ---------------------------------------------------------------- sampling

std::vector<Vector> sample_uniform(const ParameterBox& box, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  for (int k = 0; k < n; ++k) {
    Vector mu(box.dim());
    for (int d = 0; d < box.dim(); ++d) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      mu(d) = box.lo(d) + u * (box.hi(d) - box.lo(d));
    }
    out.push_back(mu);
  }
  return out;
}

std::vector<Vector> sample_grid(const ParameterBox& box, int n) {
  if (box.dim() != 2) throw InvalidArgument("grid sampling needs two parameters");
  const int n1 = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
  const int n2 = (n + n1 - 1) / n1;
  auto at = [](double lo, double hi, int i, int m) { return m == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (m - 1.0); };
  std::vector<Vector> out;
  for (int j = 0; j < n2 && static_cast<int>(out.size()) < n; ++j)
    for (int i = 0; i < n1 && static_cast<int>(out.size()) < n; ++i)
      out.push_back(Vector{{at(box.lo(0), box.hi(0), i, n1), at(box.lo(1), box.hi(1), j, n2)}});
  return out;
}

Matrix stack_columns(const std::vector<Vector>& v) {
  if (v.empty()) return Matrix(0, 0);
  Matrix M(v[0].size(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) M.col(static_cast<Eigen::Index>(k)) = v[k];
  return M;
}

// ----------------------------------------------------------------- offline

std::unique_ptr<OfflineModel> setup_offline(const StudyConfig& cfg) {
  cfg.validate();
  auto off = std::make_unique<OfflineModel>();
  off->cfg = cfg;
  off->law = cfg.custom_viscosity ? make_model(cfg.model, cfg.viscosity) : make_model(cfg.model);
  off->mesh = build_structured_mesh(off->law->length(), off->law->final_time(), cfg.nx, cfg.nt, cfg.order);
  off->space = std::make_shared<const MapSpace>(cfg.mbar, off->law->length(), off->law->final_time());
  off->norms = assemble_norms(*off->mesh, off->D());
  RegistrationParams rp;
  rp.bijectivity = BijectivityParams{cfg.eps, cfg.c_exp, cfg.delta};
  rp.xi = cfg.xi;
  rp.bfgs.max_iter = cfg.bfgs_max_iter;
  off->registrar = std::make_unique<Registrar>(off->mesh, *off->space, rp);
  return off;
}

void offline_snapshots(OfflineModel& off, std::ostream* log) {
  const auto t0 = Clock::now();
  const StudyConfig& cfg = off.cfg;
  const auto mus = cfg.sampling == "grid" ? sample_grid(off.law->box, cfg.n_train)
                                          : sample_uniform(off.law->box, cfg.n_train, cfg.seed);
  off.train = generate_snapshots(off.law, off.mesh, mus, cfg.newton);
  if (off.train.size() < 2) throw NonConvergence("fewer than two training snapshots converged", Vector());
  off.seconds["snapshots"] = since(t0);
  note(log, "snapshots: " + std::to_string(off.train.size()) + " of " + std::to_string(mus.size()) + " converged in " +
                std::to_string(off.seconds["snapshots"]) + " s");
}

std::vector<ScalarField> training_sensors(const OfflineModel& off) {
  std::vector<ScalarField> s;
  const int comp = off.law->sensor_component();
  for (int k = 0; k < off.train.size(); ++k)
    s.emplace_back(off.mesh, sensor_of(*off.mesh, off.D(), comp, off.train.U.col(k), off.cfg.filter_window));
  return s;
}

std::vector<Vector> initial_templates(const OfflineModel& off) {
  Assembler as(off.law, off.mesh);
  as.set_parameter(off.law->box.centroid());
  const Vector Uc = solve_hf(as, off.cfg.newton);
  const Vector zero = Vector::Zero(off.space->size());
  std::vector<Vector> t;
  const ScalarField sc(off.mesh, sensor_of(*off.mesh, off.D(), off.law->sensor_component(), Uc, off.cfg.filter_window));
  t.push_back(off.registrar->compose(sc, zero));
  if (const auto* sw = dynamic_cast<const ShallowWater*>(off.law.get())) {
    const Vector hb = interpolate(*off.mesh, 1, [sw](const Vec2& X) {
      State s(1);
      s(0) = sw->base_flow(X(0))(0);
      return s;
    });
    t.push_back(off.registrar->compose(ScalarField(off.mesh, filter_sensor(*off.mesh, hb, off.cfg.filter_window)), zero));
  }
  return t;
}

void offline_compress(OfflineModel& off, std::ostream* log) {
  const StudyConfig& cfg = off.cfg;
  if (off.train.size() < 2) throw InvalidArgument("compression needs snapshots");
  auto t0 = Clock::now();
  const auto sensors = training_sensors(off);
  const auto templates = initial_templates(off);
  GreedyOptions go;
  go.tol_pod = cfg.tol_pod;
  go.n_max = std::max(cfg.n_max, static_cast<int>(templates.size()));
  go.tol = cfg.greedy_tol;
  off.greedy = greedy_registration(*off.registrar, sensors, templates, go);
  off.seconds["registration"] = since(t0);
  for (const auto& it : off.greedy.log)
    note(log, "registration: N = " + std::to_string(it.N) + ", M = " + std::to_string(it.M) +
                  ", max relative proximity " + fmt(it.max_f_relative) + ", unconverged " +
                  std::to_string(it.unconverged));

  t0 = Clock::now();
  const SparseMatrix& X = off.norms.X;
  off.repod = repod(*off.registrar, off.train.U, off.D(), off.greedy.W, off.greedy.coefficients, cfg.tol_pod, X, false);
  off.repod_continuous =
      repod(*off.registrar, off.train.U, off.D(), off.greedy.W, off.greedy.coefficients, cfg.tol_pod, X, true);
  off.unregistered = pod(off.train.U, cfg.tol_pod, &X, off.train.size());
  off.seconds["pod"] = since(t0);
  off.map_regressor = RbfRegressor::fit(off.law->box, stack_columns(off.train.mus), off.greedy.coefficients,
                                        regression_options(cfg));
  note(log, "compression: RePOD N = " + std::to_string(off.repod.N) + ", POD N = " +
                std::to_string(pod_cardinality(off.unregistered.eigenvalues, cfg.tol_pod)));
}

std::unique_ptr<OfflineModel> run_offline(const StudyConfig& cfg, std::ostream* log) {
  auto off = setup_offline(cfg);
  offline_snapshots(*off, log);
  offline_compress(*off, log);
  return off;
}

Vector register_state(const OfflineModel& off, const Vector& U, const Vector& c0, RegistrationResult* res) {
  const ScalarField s(off.mesh, sensor_of(*off.mesh, off.D(), off.law->sensor_component(), U, off.cfg.filter_window));
  RegistrationResult r = off.registrar->register_one(s, off.greedy.templates, off.greedy.W, c0);
  Vector c = r.c;
  if (res) *res = std::move(r);
  return c;
}

Vector predicted_map(const OfflineModel& off, const Vector& mu, bool* fallback) {
  Vector c = off.map_regressor.predict(mu);
  const bool bad = !(min_jacobian_on_grid(*off.space, off.greedy.W * c) > 0.0);
  if (bad) c = off.greedy.coefficients.col(nearest(off.law->box, off.train.mus, mu));
  if (fallback) *fallback = bad;
  return c;
}

// --------------------------------------------------------------- training

RomBuild train_rom(const OfflineModel& off, int N, int J, bool continuous, double eqp_tol) {
  const auto t0 = Clock::now();
  const RePODResult& rp = off.basis(continuous);
  if (N < 1 || N > rp.pod.modes.cols()) throw InvalidArgument("trial dimension out of range");
  if (J < N) throw InvalidArgument("test dimension must be at least the trial dimension");
  RomBuild b;
  const Matrix Z = rp.pod.modes.leftCols(N);
  const RieszSolver Y(off.norms.Y);
  const TrainingSet ts = training_set(off, continuous);
  b.test = build_test_space(ts, Z, Y, J, off.cfg.tol_pod, continuous);
  eqp_system(ts, Z, b.test.YJ, off.norms.X, b.G, b.b);
  b.eqp = solve_eqp(b.G, b.b, eqp_tol);
  b.eqp.G = b.G;
  b.eqp.b = b.b;

  ReducedModel& r = b.rom;
  r.model = off.law->name();
  r.mesh = off.mesh;
  r.space = off.space;
  r.W = off.greedy.W;
  r.Z = Z;
  r.YJ = b.test.YJ;
  r.rho = b.eqp.rho;
  r.sampled = b.eqp.sampled;
  r.map_regressor = off.map_regressor;
  const Matrix alpha = Z.transpose() * (off.norms.X * ts.mapped);
  r.alpha_regressor = RbfRegressor::fit(off.law->box, stack_columns(off.train.mus), alpha, regression_options(off.cfg));
  r.train_mus = off.train.mus;
  r.train_coefficients = off.greedy.coefficients;
  r.continuous = continuous;
  b.seconds = since(t0);
  return b;
}

void retune_eqp(RomBuild& build, double eqp_tol) {
  build.eqp = solve_eqp(build.G, build.b, eqp_tol);
  build.eqp.G = build.G;
  build.eqp.b = build.b;
  build.rom.rho = build.eqp.rho;
  build.rom.sampled = build.eqp.sampled;
}

double shock_band_fraction(const OfflineModel& off, const std::vector<int>& sampled, double half_width_fraction) {
  if (sampled.empty()) return 0.0;
  const SpaceTimeMesh& mesh = *off.mesh;
  const int k0 = nearest(off.law->box, off.train.mus, off.law->box.centroid());
  Assembler as(off.law, off.mesh);
  as.set_parameter(off.train.mus[k0]);
  const Vector eps = as.viscosity(off.repod.mapped.col(k0));
  const ViscosityParams& vp = off.law->viscosity;
  const double threshold = vp.eps_base + 0.1 * vp.eps0;
  auto centroid = [&](int k) {
    const auto& g = mesh.element(k);
    return Vec2((g.vertices[0] + g.vertices[1] + g.vertices[2]) / 3.0);
  };
  auto slab = [&](int k) { return std::min(mesh.nt() - 1, static_cast<int>(centroid(k)(1) / mesh.ht())); };
  std::vector<std::vector<double>> shock(mesh.nt());
  for (int k = 0; k < mesh.num_elements(); ++k)
    if (eps(k) > threshold) shock[slab(k)].push_back(centroid(k)(0));
  const double band = half_width_fraction * mesh.length();
  int inside = 0;
  for (int k : sampled) {
    const double x = centroid(k)(0);
    for (double xs : shock[slab(k)])
      if (std::abs(x - xs) <= band) {
        ++inside;
        break;
      }
  }
  return static_cast<double>(inside) / static_cast<double>(sampled.size());
}

// ------------------------------------------------------------- persistence

void save_snapshots(const OfflineModel& off, const std::string& dir) {
  Container c;
  c.model = off.law->name();
  c.mesh_hash = off.mesh->hash();
  c.metadata = config_to_json(off.cfg);
  c.created = timestamp_utc();
  c.put("mus", stack_columns(off.train.mus));
  c.put("U", off.train.U);
  Vector res(off.train.size());
  for (int k = 0; k < off.train.size(); ++k) res(k) = off.train.reports[k].residual_norm;
  c.put("residual_norms", res);
  c.save(dir);
}

void load_snapshots(OfflineModel& off, const std::string& dir) {
  const Container c = open_checked(dir, off);
  off.train = SnapshotSet{};
  off.train.model = c.model;
  off.train.mesh = off.mesh;
  off.train.mus = columns(c.matrix("mus"));
  off.train.U = c.matrix("U");
  off.train.reports.resize(off.train.mus.size());
  off.train.tolerances = off.cfg.newton;
  if (off.train.U.rows() != hf_size(*off.mesh, off.D()) || off.train.U.cols() != off.train.size())
    throw FormatError("snapshot container has the wrong shape");
}

void save_compression(const OfflineModel& off, const std::string& dir) {
  Container c;
  c.model = off.law->name();
  c.mesh_hash = off.mesh->hash();
  c.metadata = config_to_json(off.cfg);
  c.created = timestamp_utc();
  c.put("templates.weights", off.greedy.templates.weights());
  c.put("templates.basis", off.greedy.templates.basis());
  c.put("W", off.greedy.W);
  c.put("coefficients", off.greedy.coefficients);
  c.put("map_eigenvalues", off.greedy.eigenvalues);
  put_repod(c, "repod", off.repod);
  put_repod(c, "repod_continuous", off.repod_continuous);
  put_pod(c, "pod", off.unregistered);
  put_regressor(c, "map_regressor", off.map_regressor);
  c.save(dir);
}

void load_compression(OfflineModel& off, const std::string& dir) {
  const Container c = open_checked(dir, off);
  off.greedy = GreedyResult{};
  off.greedy.templates = TemplateSpace::from_basis(c.vector("templates.weights"), c.matrix("templates.basis"));
  off.greedy.W = c.matrix("W");
  off.greedy.coefficients = c.matrix("coefficients");
  off.greedy.eigenvalues = c.vector("map_eigenvalues");
  off.repod = get_repod(c, "repod");
  off.repod_continuous = get_repod(c, "repod_continuous");
  off.unregistered = get_pod(c, "pod");
  off.map_regressor = get_regressor(c, "map_regressor");
  if (off.greedy.coefficients.cols() != off.train.size())
    throw FormatError("compression does not match the snapshots");
}

void save_rom(const ReducedModel& rom, const StudyConfig& cfg, const std::string& dir) {
  Container c;
  c.model = rom.model;
  c.mesh_hash = rom.mesh->hash();
  c.metadata = config_to_json(cfg);
  c.created = timestamp_utc();
  c.put("W", rom.W);
  c.put("Z", rom.Z);
  c.put("YJ", rom.YJ);
  c.put("rho", rom.rho);
  c.put("sampled", std::vector<std::int64_t>(rom.sampled.begin(), rom.sampled.end()));
  put_regressor(c, "map_regressor", rom.map_regressor);
  put_regressor(c, "alpha_regressor", rom.alpha_regressor);
  c.put("train_mus", stack_columns(rom.train_mus));
  c.put("train_coefficients", rom.train_coefficients);
  c.put("continuous", std::vector<std::int64_t>{rom.continuous ? 1 : 0});
  c.save(dir);
}

ReducedModel load_rom(const std::string& dir, StudyConfig* cfg_out) {
  const Container c = Container::load(dir);
  const StudyConfig cfg = config_from_json(c.metadata);
  if (cfg.model != c.model) throw FormatError("reduced model metadata disagrees with its model");
  const ModelPtr law = cfg.custom_viscosity ? make_model(cfg.model, cfg.viscosity) : make_model(cfg.model);
  ReducedModel r;
  r.model = c.model;
  r.mesh = build_structured_mesh(law->length(), law->final_time(), cfg.nx, cfg.nt, cfg.order);
  c.expect_mesh(r.mesh->hash());
  r.space = std::make_shared<const MapSpace>(cfg.mbar, law->length(), law->final_time());
  r.W = c.matrix("W");
  r.Z = c.matrix("Z");
  r.YJ = c.matrix("YJ");
  r.rho = c.vector("rho");
  for (auto k : c.ints("sampled")) r.sampled.push_back(static_cast<int>(k));
  r.map_regressor = get_regressor(c, "map_regressor");
  r.alpha_regressor = get_regressor(c, "alpha_regressor");
  r.train_mus = columns(c.matrix("train_mus"));
  r.train_coefficients = c.matrix("train_coefficients");
  r.continuous = c.ints("continuous").at(0) != 0;
  const Eigen::Index nhf = hf_size(*r.mesh, law->dim());
  if (r.Z.rows() != nhf || r.YJ.rows() != nhf || r.W.rows() != r.space->size() ||
      r.rho.size() != r.mesh->num_elements())
    throw FormatError("reduced model arrays have inconsistent shapes");
  if (cfg_out) *cfg_out = cfg;
  return r;
}

// ------------------------------------------------------------------- tests

TestData prepare_test(const OfflineModel& off, std::ostream* log) {
  const auto t0 = Clock::now();
  TestData td;
  const auto mus = sample_uniform(off.law->box, off.cfg.n_test, off.cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const SnapshotSet s = generate_snapshots(off.law, off.mesh, mus, off.cfg.newton);
  td.mus = s.mus;
  td.U = s.U;
  double hf = 0.0;
  for (const auto& r : s.reports) hf += r.seconds;
  td.hf_seconds = s.size() ? hf / s.size() : 0.0;
  for (int k = 0; k < s.size(); ++k) {
    bool fb = false;
    td.a_regression.push_back(predicted_map(off, td.mus[k], &fb));
    td.fallback.push_back(fb ? 1 : 0);
    td.a_registered.push_back(register_state(off, td.U.col(k), td.a_regression.back()));
  }
  note(log, "test set: " + std::to_string(s.size()) + " solutions and maps in " + std::to_string(since(t0)) + " s");
  return td;
}

// ----------------------------------------------------------------- studies

std::vector<std::string> study_names() {
  return {"eig-decay", "bf-error", "rom-error", "eqp", "speedup", "space-only-baseline"};
}

StudyResults run_study(const OfflineModel& off, const std::vector<std::string>& studies, const std::string& outdir,
                       std::ostream* log) {
  const auto t_all = Clock::now();
  std::set<std::string> want;
  for (const auto& s : studies) {
    if (s == "all") {
      for (const auto& n : study_names()) want.insert(n);
      continue;
    }
    const auto names = study_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) throw ConfigError("unknown study: " + s);
    want.insert(s);
  }
  const StudyConfig& cfg = off.cfg;
  const SparseMatrix& X = off.norms.X;
  const int D = off.D();
  StudyResults res;

  if (want.count("eig-decay")) {
    const Vector& er = off.repod.pod.eigenvalues;
    const Vector& eu = off.unregistered.eigenvalues;
    res.eig_registered = er / er(0);
    res.eig_unregistered = eu / eu(0);
    Csv csv(outdir, "eig-decay.csv", "POD eigenvalue decay, eigenvalues normalized by the first (dimensionless)",
            "n,lambda_registered,lambda_unregistered");
    for (Eigen::Index n = 0; n < std::min(er.size(), eu.size()); ++n)
      csv.row({std::to_string(n + 1), fmt(res.eig_registered(n)), fmt(res.eig_unregistered(n))});
  }

  const bool need_test = want.count("bf-error") || want.count("rom-error") || want.count("eqp") || want.count("speedup");
  TestData td;
  if (need_test) td = prepare_test(off, log);
  const int n_test = static_cast<int>(td.mus.size());

  // mapped test solutions at the regression maps (the maps the ROM uses)
  std::vector<Vector> mapped_test(n_test);
  for (int k = 0; k < n_test; ++k)
    mapped_test[k] = mapped_snapshot(*off.registrar, td.U.col(k), D, off.greedy.W * td.a_regression[k]);

  if (want.count("bf-error")) {
    const auto t0 = Clock::now();
    const int nmax = static_cast<int>(std::min<Eigen::Index>(10, off.repod.pod.modes.cols()));
    Csv csv(outdir, "bf-error.csv",
            "max over test parameters of the relative L2 best-fit error (dimensionless)",
            "N,unregistered,registered,regression_map");
    for (int N = 1; N <= nmax; ++N) {
      const Matrix Zr = off.repod.pod.modes.leftCols(N);
      const Matrix Zu = off.unregistered.modes.leftCols(std::min<Eigen::Index>(N, off.unregistered.modes.cols()));
      double eu = 0.0, er = 0.0, eg = 0.0;
      for (int k = 0; k < n_test; ++k) {
        eu = std::max(eu, best_fit_error(td.U.col(k), Zu, X));
        er = std::max(er, registered_best_fit_error(*off.registrar, td.U.col(k), D, Zr, off.greedy.W * td.a_registered[k]));
        eg = std::max(eg, registered_best_fit_error(*off.registrar, td.U.col(k), D, Zr, off.greedy.W * td.a_regression[k]));
      }
      res.bf_N.push_back(N);
      res.bf_unregistered.push_back(eu);
      res.bf_registered.push_back(er);
      res.bf_regression.push_back(eg);
      csv.row({std::to_string(N), fmt(eu), fmt(er), fmt(eg)});
    }
    res.seconds["bf-error"] = since(t0);
  }

  auto rel_error = [&](const Vector& truth, const Vector& approx) { return xnorm(X, truth - approx) / xnorm(X, truth); };

  if (want.count("rom-error")) {
    const auto t0 = Clock::now();
    const RieszSolver Y(off.norms.Y);
    const GeometryBasis gb(*off.mesh, *off.space, off.greedy.W);
    std::vector<MapGeometry> geos;
    for (int k = 0; k < n_test; ++k) geos.push_back(gb.geometry(td.a_regression[k]));
    const int jmax = *std::max_element(cfg.j_factors.begin(), cfg.j_factors.end());
    Csv csv(outdir, "rom-error.csv",
            "mean relative L2 error in the reference configuration over the test set (dimensionless)",
            "N,variant,projection,galerkin,galerkin_failures,minres,J,amr");
    for (bool continuous : {false, true}) {
      const RePODResult& rp = off.basis(continuous);
      const TrainingSet ts = training_set(off, continuous);
      for (int N : cfg.rom_N) {
        if (N > rp.pod.modes.cols()) continue;
        const Matrix Z = rp.pod.modes.leftCols(N);
        const TestSpaceResult tsr = build_test_space(ts, Z, Y, jmax * N, cfg.tol_pod, continuous);
        const RbfRegressor areg = RbfRegressor::fit(off.law->box, stack_columns(off.train.mus),
                                                    Z.transpose() * (X * ts.mapped), regression_options(cfg));
        RomErrorRow row;
        row.N = N;
        row.continuous = continuous;
        std::vector<double> amr(cfg.j_factors.size(), 0.0);
        for (int k = 0; k < n_test; ++k) {
          const Vector& truth = mapped_test[k];
          Assembler as(off.law, off.mesh);
          as.set_parameter(td.mus[k]);
          const Vector a0 = areg.predict(td.mus[k]);
          row.projection += rel_error(truth, Z * (Z.transpose() * (X * truth)));
          RomReport rg, rm;
          const Vector ag = galerkin_solve(as, Z, geos[k], a0, {}, &rg);
          if (!rg.converged) ++row.galerkin_failures;
          row.galerkin += rel_error(truth, Z * ag);
          const Vector am = minres_solve(as, Z, Y, geos[k], a0, {}, &rm);
          row.minres += rel_error(truth, Z * am);
          for (std::size_t j = 0; j < cfg.j_factors.size(); ++j) {
            const int J = std::min<int>(cfg.j_factors[j] * N, static_cast<int>(tsr.YJ.cols()));
            const Vector aa = amr_solve(as, Z, tsr.YJ.leftCols(J), geos[k], a0);
            amr[j] += rel_error(truth, Z * aa);
          }
        }
        row.projection /= n_test;
        row.galerkin /= n_test;
        row.minres /= n_test;
        for (std::size_t j = 0; j < cfg.j_factors.size(); ++j) {
          row.J.push_back(std::min<int>(cfg.j_factors[j] * N, static_cast<int>(tsr.YJ.cols())));
          row.amr.push_back(amr[j] / n_test);
          csv.row({std::to_string(N), continuous ? "continuous" : "discontinuous", fmt(row.projection),
                   fmt(row.galerkin), std::to_string(row.galerkin_failures), fmt(row.minres),
                   std::to_string(row.J.back()), fmt(row.amr.back())});
        }
        res.rom.push_back(row);
        note(log, "rom-error: N = " + std::to_string(N) + (continuous ? " continuous" : " discontinuous") +
                      ", min-res " + fmt(row.minres));
      }
    }
    res.seconds["rom-error"] = since(t0);
  }

  // EQP and timings share the trained models
  if (want.count("eqp") || want.count("speedup")) {
    const auto t0 = Clock::now();
    Csv csv(want.count("eqp") ? outdir : "", "eqp.csv",
            "hyper-reduction: sampled elements and mean relative L2 errors (dimensionless)",
            "N,J,tol,Q,fraction,error_hq,error_hr,shock_fraction,constraint_residual");
    const double tight = *std::min_element(cfg.eqp_tols.begin(), cfg.eqp_tols.end());
    for (int N : cfg.rom_N) {
      if (N > off.basis(cfg.continuous).pod.modes.cols()) continue;
      const int J = cfg.j_factor * N;
      RomBuild b = train_rom(off, N, J, cfg.continuous, tight);
      const OnlineSolver hq(b.rom, off.law, false);
      std::vector<OnlineResult> out_hq;
      double e_hq = 0.0;
      for (int k = 0; k < n_test; ++k) {
        out_hq.push_back(hq.solve(td.mus[k], td.a_regression[k]));
        e_hq += rel_error(mapped_test[k], b.rom.Z * out_hq.back().alpha);
      }
      e_hq /= n_test;
      std::vector<double> tols = cfg.eqp_tols;
      std::sort(tols.begin(), tols.end(), std::greater<double>());  // tightest last, reused for timing
      for (double tol : tols) {
        retune_eqp(b, tol);
        EqpRow row;
        row.N = N;
        row.J = J;
        row.tol = tol;
        row.Q = static_cast<int>(b.rom.sampled.size());
        row.fraction = static_cast<double>(row.Q) / off.mesh->num_elements();
        row.error_hq = e_hq;
        row.shock_fraction = shock_band_fraction(off, b.rom.sampled);
        row.constraint_residual = b.eqp.constraint_residual;
        const OnlineSolver hr(b.rom, off.law, true);
        for (int k = 0; k < n_test; ++k)
          row.error_hr += rel_error(mapped_test[k], b.rom.Z * hr.solve(td.mus[k], td.a_regression[k]).alpha);
        row.error_hr /= n_test;
        res.eqp.push_back(row);
        csv.row({std::to_string(N), std::to_string(J), fmt(tol), std::to_string(row.Q), fmt(row.fraction),
                 fmt(row.error_hq), fmt(row.error_hr), fmt(row.shock_fraction), fmt(row.constraint_residual)});
        note(log, "eqp: N = " + std::to_string(N) + ", tol " + fmt(tol) + ", Q = " + std::to_string(row.Q) +
                      ", hq " + fmt(e_hq) + ", hr " + fmt(row.error_hr));
      }
      if (want.count("speedup")) {
        const OnlineSolver hr(b.rom, off.law, true);
        SpeedRow sr;
        sr.N = N;
        sr.hf = td.hf_seconds;
        std::vector<double> thq, thr, trk;
        for (int r = 0; r < cfg.timing_repeats; ++r) {
          double a = 0.0, h = 0.0, m = 0.0;
          for (int k = 0; k < n_test; ++k) {
            a += hq.solve(td.mus[k]).seconds;
            h += hr.solve(td.mus[k]).seconds;
            const auto tm = Clock::now();
            (void)march_1d(*off.law, td.mus[k], 4 * cfg.nx);
            m += since(tm);
          }
          thq.push_back(a / n_test);
          thr.push_back(h / n_test);
          trk.push_back(m / n_test);
        }
        sr.hq = median(thq);
        sr.hr = median(thr);
        sr.rkdg = median(trk);
        res.speed.push_back(sr);
      }
    }
    res.seconds["eqp"] = since(t0);
    if (want.count("speedup")) {
      Csv sp(outdir, "speedup.csv", "wall-clock seconds per solve, median of repeated runs (s)",
             "N,hf,rkdg_reference,rom_hf_quadrature,rom_hyper_reduced");
      for (const auto& r : res.speed) sp.row({std::to_string(r.N), fmt(r.hf), fmt(r.rkdg), fmt(r.hq), fmt(r.hr)});
    }
  }

  if (want.count("space-only-baseline")) {
    const auto t0 = Clock::now();
    const int k0 = nearest(off.law->box, off.train.mus, off.law->box.centroid());
    SliceRegistrationOptions so;
    so.n_max = cfg.n_max;
    so.xi = cfg.xi;
    so.tol_pod = cfg.tol_pod;
    so.eps = cfg.eps;
    so.bfgs.max_iter = cfg.bfgs_max_iter;
    const double T = off.law->final_time();
    Csv csv(outdir, "space-only-baseline.csv",
            "POD eigenvalues of time slices registered in space only, normalized by the first (dimensionless)",
            "t,n,lambda_registered,lambda_unregistered");
    const int ncol = std::min(10, off.train.size());
    res.space_only.resize(3, 2 * ncol);
    int row = 0;
    for (double frac : {0.25, 0.5, 0.75}) {
      const SliceBaseline sb =
          space_only_baseline(*off.mesh, D, off.law->sensor_component(), off.train.U, frac * T, k0, so);
      res.space_only_times.push_back(sb.t);
      for (int n = 0; n < ncol; ++n) {
        res.space_only(row, n) = sb.registered(n);
        res.space_only(row, ncol + n) = sb.unregistered(n);
        csv.row({fmt(sb.t), std::to_string(n + 1), fmt(sb.registered(n)), fmt(sb.unregistered(n))});
      }
      ++row;
    }
    res.seconds["space-only-baseline"] = since(t0);
  }
  res.seconds["total"] = since(t_all);
  return res;
}

}  // namespace strobe
