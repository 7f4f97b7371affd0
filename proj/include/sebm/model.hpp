#pragma once

#include <span>

#include "sebm/types.hpp"

namespace sebm {

// log N(x; mean, std^2). Throws std::domain_error for non-finite x/mean or
// std <= 0.
double log_density_gaussian(double x, double mean, double std);

// Log-likelihood of a healthy participant: sum of pre-event log-densities
// over non-missing biomarkers. An all-missing row yields 0 and sets
// *all_missing when provided.
double loglik_healthy(std::span<const double> values,
                      std::span<const std::uint8_t> missing,
                      const EmissionParams& params,
                      bool* all_missing = nullptr);

// Log-likelihood of a progressing participant at stage k under one ordering:
// biomarkers with rank <= k score post-event, the rest pre-event.
double loglik_stage(std::span<const double> values,
                    std::span<const std::uint8_t> missing,
                    std::span<const int> ranks, int k,
                    const EmissionParams& params);

// Participant log-likelihood: pre-event product for z=0, mixture over
// subtypes and stages (max-shifted) for z=1.
double loglik_participant(std::span<const double> values,
                          std::span<const std::uint8_t> missing, int z,
                          const SubtypeOrderings& orderings,
                          const MixturePriors& priors,
                          const EmissionParams& params);

double total_loglik(const Dataset& data, const SubtypeOrderings& orderings,
                    const MixturePriors& priors, const EmissionParams& params);

// Per-participant log-densities under both states; missing cells hold 0 in
// both tables so they drop out of every sum.
struct DensityTable {
  Matrix log_theta;  // J x N
  Matrix log_phi;    // J x N
};

DensityTable make_density_table(const Dataset& data, const EmissionParams& params);

// Normalized stage and subtype posteriors plus total log-likelihood.
// Healthy rows are zeroed; a progressing row whose every mixture term is
// -inf falls back to a uniform posterior and bumps degenerate_rows.
PosteriorState compute_posteriors(const Dataset& data,
                                  const SubtypeOrderings& orderings,
                                  const MixturePriors& priors,
                                  const EmissionParams& params);

// Same, reusing a precomputed density table (the sampler's hot path).
PosteriorState compute_posteriors(const Dataset& data,
                                  const SubtypeOrderings& orderings,
                                  const MixturePriors& priors,
                                  const DensityTable& table);

// w_theta(j,n) = sum_t sum_{k >= ranks[t][n]} P_stage(k|j,t) P_subtype(t|j);
// w_phi = 1 - w_theta. Healthy rows come out fixed at (0, 1).
EventWeights event_weights(const PosteriorState& post,
                           const SubtypeOrderings& orderings);

}  // namespace sebm
