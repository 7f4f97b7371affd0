#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sebm/core.hpp"

namespace sebm {

// Cross-sectional biomarker matrix with optional missing entries and a
// healthy(0)/progressing(1) diagnosis per participant.
struct Dataset {
  Matrix values;                              // J x N, raw units
  std::vector<std::uint8_t> labels;           // length J, 0 healthy / 1 progressing
  std::vector<std::uint8_t> missing;          // J x N row-major, 1 = value absent
  std::vector<std::string> biomarker_names;   // length N
  std::vector<std::string> participant_ids;   // length J

  std::size_t n_participants() const { return values.rows; }
  std::size_t n_biomarkers() const { return values.cols; }

  bool is_missing(std::size_t j, std::size_t n) const {
    return missing[j * values.cols + n] != 0;
  }
  std::span<const std::uint8_t> missing_row(std::size_t j) const {
    return {missing.data() + j * values.cols, values.cols};
  }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

// Per-subtype event orderings. ranks[t][n] is the 0-based rank of biomarker n
// in subtype t's progression; each row is a permutation of 0..N-1.
struct SubtypeOrderings {
  std::vector<std::vector<int>> ranks;

  std::size_t n_subtypes() const { return ranks.size(); }
  std::size_t n_biomarkers() const { return ranks.empty() ? 0 : ranks[0].size(); }

  void validate() const;
};

// position -> biomarker view of a rank row (inverse permutation).
std::vector<int> inverse_permutation(std::span<const int> ranks);

// Gaussian mean/std for each biomarker's post-event (theta) and pre-event
// (phi) measurement distribution, shared across subtypes.
struct EmissionParams {
  std::vector<double> theta_mean, theta_std, phi_mean, phi_std;

  std::size_t n_biomarkers() const { return theta_mean.size(); }
  void validate() const;  // stds strictly positive, everything finite
};

// Subtype simplex and per-subtype stage simplexes.
struct MixturePriors {
  std::vector<double> subtype;  // length T
  Matrix stage;                 // T x N, each row a simplex

  std::size_t n_subtypes() const { return subtype.size(); }
  void validate() const;  // rows sum to 1 within 1e-9, entries >= 0
};

// Stage/subtype posteriors for every participant plus the total data
// log-likelihood. Healthy participants carry all-zero rows by convention.
struct PosteriorState {
  Tensor3 stage_post;    // J x T x N
  Matrix subtype_post;   // J x T
  double total_loglik = 0.0;
  int degenerate_rows = 0;  // rows rescued by the uniform-posterior fallback
};

// Latent disease stage; -1 means healthy (no events). At stage k in subtype t
// the post-event set is exactly {n : ranks[t][n] <= k}.
struct DiseaseStage {
  int value = -1;
  // Reporting convention: number of events occurred, so a healthy call is 0.
  int count() const { return value + 1; }
};

// Marginal pre/post-event membership per (participant, biomarker).
struct EventWeights {
  Matrix theta;  // J x N
  Matrix phi;    // J x N, phi = 1 - theta
};

}  // namespace sebm
