#pragma once

#include <span>
#include <vector>

#include "sebm/types.hpp"

namespace sebm {

// Normal-Inverse-Gamma prior on an unknown Gaussian mean and variance.
struct NigPrior {
  double m0 = 0.0;     // prior mean
  double n0 = 1.0;     // mean pseudo-count
  double s0_sq = 1.0;  // prior variance
  double nu0 = 1.0;    // variance pseudo-count

  void validate() const;
};

struct NigPosterior {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  bool no_data = false;  // W == 0: prior returned unchanged
};

// Weighted conjugate update. Returns mu_hat = m' and sigma_hat = s'
// (the posterior scale itself, not the nu'/(nu'-2) expectation).
NigPosterior nig_update(std::span<const double> values,
                        std::span<const double> weights, const NigPrior& prior);

struct TwoClusterResult {
  std::vector<int> assignment;  // per participant: 0/1 cluster id, -1 missing
  double pre_mean = 0.0, pre_var = 0.0;    // phi cluster raw stats
  double post_mean = 0.0, post_var = 0.0;  // theta cluster raw stats
  int pre_cluster = 0;                     // which cluster id was labeled phi
  bool degenerate = false;                 // all values identical
};

// Deterministic 2-means over the non-missing values of one biomarker.
// Centroids start at the 10th/90th percentile values; the cluster holding
// the majority of controls is labeled pre-event.
TwoClusterResult kmeans_two_cluster(std::span<const double> column,
                                    std::span<const std::uint8_t> missing,
                                    std::span<const std::uint8_t> labels);

// Emission parameters plus the per-biomarker NIG priors the sampler reuses
// when refreshing theta/phi each iteration.
struct InitResult {
  EmissionParams params;
  std::vector<NigPrior> theta_prior;  // length N
  std::vector<NigPrior> phi_prior;    // length N
};

// K-means per biomarker, cluster raw stats as (m0, s0_sq) with
// n0 = nu0 = 1, then one unit-weight nig_update per cluster. Diagnosis
// labels are used here in both the labeled and the blind protocol.
InitResult initialize_params(const Dataset& data, bool blind = false);

// Floor applied to cluster stds: 1e-6 x column range (or 1 if zero range).
double std_floor(double column_range);

}  // namespace sebm
