#pragma once

#include "strobe/config.hpp"
#include "strobe/container.hpp"
#include "strobe/registration.hpp"
#include "strobe/rom.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace strobe {

/// Seeded uniform samples of the parameter box (portable: no std distributions).
std::vector<Vector> sample_uniform(const ParameterBox& box, int n, std::uint64_t seed);
/// Tensor grid with n1 = round(sqrt(n)) points along the first parameter, first n points.
std::vector<Vector> sample_grid(const ParameterBox& box, int n);
Matrix stack_columns(const std::vector<Vector>& v);

/// Offline artifacts of one configuration.
struct OfflineModel {
  StudyConfig cfg;
  ModelPtr law;
  std::shared_ptr<const SpaceTimeMesh> mesh;
  std::shared_ptr<const MapSpace> space;
  NormPair norms;
  SnapshotSet train;
  std::unique_ptr<Registrar> registrar;
  GreedyResult greedy;
  RePODResult repod;             // discontinuous mapped snapshots
  RePODResult repod_continuous;  // facet-averaged
  PODResult unregistered;
  RbfRegressor map_regressor;
  std::map<std::string, double> seconds;

  int D() const { return law->dim(); }
  const RePODResult& basis(bool continuous) const { return continuous ? repod_continuous : repod; }
};

/// Model, mesh, norms and registrar for a configuration (no solves).
std::unique_ptr<OfflineModel> setup_offline(const StudyConfig& cfg);
/// hf snapshots at the training parameters.
void offline_snapshots(OfflineModel& off, std::ostream* log = nullptr);
/// Greedy registration, RePOD (both variants), unregistered POD, map regression.
void offline_compress(OfflineModel& off, std::ostream* log = nullptr);
/// All offline stages.
std::unique_ptr<OfflineModel> run_offline(const StudyConfig& cfg, std::ostream* log = nullptr);

/// Sensor fields of the training snapshots and the initial templates.
std::vector<ScalarField> training_sensors(const OfflineModel& off);
std::vector<Vector> initial_templates(const OfflineModel& off);

/// Registration of a state over the final templates and W_M, started from c0.
/// Returns the reduced coefficients.
Vector register_state(const OfflineModel& off, const Vector& U, const Vector& c0, RegistrationResult* res = nullptr);

/// Predicted reduced map coefficients at mu, replaced by the nearest training
/// map when the prediction folds the mesh.
Vector predicted_map(const OfflineModel& off, const Vector& mu, bool* fallback = nullptr);

/// Reduced model with N trial modes, J = j_factor N test modes and EQP weights
/// at one tolerance. The EQP system is returned for reuse.
struct RomBuild {
  ReducedModel rom;
  TestSpaceResult test;
  Matrix G;
  Vector b;
  EqpResult eqp;
  double seconds = 0.0;
};
RomBuild train_rom(const OfflineModel& off, int N, int J, bool continuous, double eqp_tol);
/// Re-solves the EQP problem of a build at another tolerance.
void retune_eqp(RomBuild& build, double eqp_tol);

/// Fraction of sampled elements within the band around the registered shock.
double shock_band_fraction(const OfflineModel& off, const std::vector<int>& sampled, double half_width_fraction = 0.05);

// persistence
void save_snapshots(const OfflineModel& off, const std::string& dir);
void load_snapshots(OfflineModel& off, const std::string& dir);
void save_compression(const OfflineModel& off, const std::string& dir);
void load_compression(OfflineModel& off, const std::string& dir);
void save_rom(const ReducedModel& rom, const StudyConfig& cfg, const std::string& dir);
ReducedModel load_rom(const std::string& dir, StudyConfig* cfg = nullptr);

/// Test parameters, hf test solutions and their maps.
struct TestData {
  std::vector<Vector> mus;
  Matrix U;
  std::vector<Vector> a_regression;  // predicted reduced map coefficients
  std::vector<Vector> a_registered;  // registration of the test sensor
  std::vector<char> fallback;
  double hf_seconds = 0.0;  // mean per solve
};
TestData prepare_test(const OfflineModel& off, std::ostream* log = nullptr);

struct RomErrorRow {
  int N = 0;
  bool continuous = false;
  double projection = 0.0;
  double galerkin = 0.0;
  int galerkin_failures = 0;
  double minres = 0.0;
  std::vector<int> J;
  std::vector<double> amr;
};

struct EqpRow {
  int N = 0, J = 0;
  double tol = 0.0;
  int Q = 0;
  double fraction = 0.0;
  double error_hq = 0.0, error_hr = 0.0;
  double shock_fraction = 0.0;
  double constraint_residual = 0.0;
};

struct SpeedRow {
  int N = 0;
  double hf = 0.0, rkdg = 0.0, hq = 0.0, hr = 0.0;
};

struct StudyResults {
  Vector eig_registered, eig_unregistered;  // normalized by the first
  std::vector<int> bf_N;
  std::vector<double> bf_unregistered, bf_registered, bf_regression;
  std::vector<RomErrorRow> rom;
  std::vector<EqpRow> eqp;
  std::vector<SpeedRow> speed;
  Matrix space_only;  // rows: slices; cols: normalized eigenvalues (registered then unregistered)
  std::vector<double> space_only_times;
  std::map<std::string, double> seconds;
};

std::vector<std::string> study_names();

/// Runs the named studies ("all" for every one) and writes one CSV per study
/// into outdir (skipped when empty).
StudyResults run_study(const OfflineModel& off, const std::vector<std::string>& studies, const std::string& outdir,
                       std::ostream* log = nullptr);

}  // namespace strobe
