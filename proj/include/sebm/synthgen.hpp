#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sebm/types.hpp"

namespace sebm::synth {

// Non-normal sampling family used by the misspecification experiments.
enum class IrregularFamily {
  none,            // plain Gaussian only
  triangular_mix,  // triangular + shifted Gaussian + shifted exponential
  pareto_mix,      // Pareto + uniform + logistic
  arcsine_mix,     // arcsine Beta + two-sided exponential + spiked Gaussian
  gamma_mix,       // Gamma + Weibull + shifted Gaussian
  cauchy_clip,     // clipped Cauchy
  spike_logistic,  // narrow Gaussian spike + logistic bulk
};

std::string family_name(IrregularFamily family);
IrregularFamily family_from_name(const std::string& name);

struct BiomarkerDef {
  std::string name;
  double theta_mean = 0.0, theta_std = 1.0;
  double phi_mean = 0.0, phi_std = 1.0;
  IrregularFamily family = IrregularFamily::none;
};

using BiomarkerTable = std::vector<BiomarkerDef>;

// The 12 reference biomarkers bundled as generation defaults.
BiomarkerTable default_biomarker_table();

EmissionParams emission_of(const BiomarkerTable& table);
std::vector<std::string> names_of(const BiomarkerTable& table);

struct GenerationSpec {
  int experiment_id = 1;  // 1..11
  std::size_t participants = 300;
  double healthy_ratio = 0.25;
  std::uint64_t seed = 0;
  BiomarkerTable biomarkers = default_biomarker_table();
  // Test hook: pin the subtype orderings instead of sampling them.
  std::optional<SubtypeOrderings> forced_orderings;
};

struct GroundTruth {
  int experiment_id = 1;
  std::uint64_t seed = 0;
  int n_subtypes = 1;
  SubtypeOrderings orderings;        // ordinal ranks; induced for 10-11
  Matrix event_times;                // T x N, populated for experiments 10-11
  std::vector<int> subtype_of;       // length J, healthy = -1
  std::vector<double> stage_of;      // length J, healthy = -1
  double dispersion = -1.0;          // -1 when not applicable
  double dm_prior = 0.0;
  std::vector<std::uint8_t> post_event;  // J x N true pre/post state mask
};

// Mallows draw around `reference` (rank vector) at the given dispersion;
// the per-discordance weight is exp(-1 / (dispersion * C(N,2))), so small
// dispersion concentrates on the reference.
std::vector<int> mallows_sample(std::span<const int> reference, double dispersion,
                                Rng& rng);

struct SubtypeStructure {
  int n_subtypes = 1;
  SubtypeOrderings orderings;
  double dispersion = 0.0;
};

// T ~ U{1..5}, dispersion ~ U[0.01, 0.5], Mallows draws around a random
// reference; duplicate sequences are resampled.
SubtypeStructure sample_subtype_structure(std::size_t n_biomarkers, Rng& rng);

struct SubtypeAssignment {
  std::vector<int> labels;  // per progressing participant
  std::vector<int> counts;  // per subtype, each >= 10
  double dm_prior = 0.0;    // drawn from {0.1, 2, 5, 20}
};

SubtypeAssignment assign_subtypes(std::size_t n_progressing, int n_subtypes, Rng& rng);

// Same with the Dirichlet-Multinomial prior pinned (used by tests).
SubtypeAssignment assign_subtypes_with_prior(std::size_t n_progressing, int n_subtypes,
                                             double dm_prior, Rng& rng);

// Stage per progressing participant, following the experiment's recipe:
// 1-2 ordinal via per-subtype Dirichlet-Multinomial with a bell base,
// 3-4 ordinal with a flat base, 5-6/8 continuous U[0,N),
// 7/9/10/11 continuous Beta(5,2) * N.
std::vector<double> sample_stages(int experiment_id, std::size_t n_biomarkers,
                                  std::span<const int> subtype_labels, Rng& rng);

struct RowContext {
  std::span<const double> event_positions;  // ranks as doubles, or event times
  double stage = -1.0;                      // k_j
  bool progressing = false;
};

inline bool is_post_event(double position, double stage, bool progressing) {
  return progressing && position <= stage;
}

// One participant row under the Gaussian measurement model.
std::vector<double> generate_ebm(const RowContext& ctx, const EmissionParams& params,
                                 Rng& rng);

enum class EventState { pre, post };

struct IrregularDraw {
  double value = 0.0;  // after the shared perturb-and-clip step
  double raw = 0.0;    // the bare mixture-component draw
  int component = 0;
};

// One draw from the biomarker's irregular mixture with (mu, sigma) taken
// from theta or phi per state, plus the shared perturb-and-clip step.
IrregularDraw sample_irregular_tagged(IrregularFamily family, double mu, double sigma,
                                      Rng& rng);
double sample_irregular(const BiomarkerTable& table, std::size_t biomarker,
                        EventState state, Rng& rng);

struct SigmoidParams {
  std::vector<int> direction_flip;  // I_n in {0, 1}
  std::vector<double> range;        // R_n = theta_mean - phi_mean
  std::vector<double> slope;        // rho_n >= 1
  std::vector<double> inflection;   // xi_n, filled per subtype
};

// I/R/rho from the emission parameters; inflection left empty.
SigmoidParams make_sigmoid_params(const EmissionParams& params, Rng& rng);

double sigmoid_offset(const SigmoidParams& sp, std::size_t n, double stage);

// Healthy rows are pure pre-event Gaussians; progressing rows add the
// monotone sigmoid deviation.
std::vector<double> generate_sigmoid(const RowContext& ctx, const EmissionParams& params,
                                     const SigmoidParams& sp, Rng& rng);

struct EventTimes {
  Matrix times;  // T x N, Beta(2,2) * N
  SubtypeOrderings induced;
};

// Continuous event times per subtype; rows inducing a duplicate ordering are
// redrawn.
EventTimes sample_event_times(std::size_t n_biomarkers, int n_subtypes, Rng& rng);

struct SyntheticData {
  Dataset dataset;
  GroundTruth truth;
};

SyntheticData generate_dataset(const GenerationSpec& spec);

}  // namespace sebm::synth
