#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "sebm/sampler.hpp"
#include "sebm/types.hpp"

namespace sebm::selection {

// Disjoint index folds preserving the healthy/progressing proportion of each
// fold within one participant of the global split.
std::vector<std::vector<std::size_t>> stratified_kfold(
    std::span<const std::uint8_t> labels, int k, std::uint64_t seed);

struct CvicResult {
  double cvic = 0.0;
  std::vector<double> fold_logliks;  // held-out log-likelihood per fold
};

// Fit on K-1 folds, score the held-out fold under the best sample's
// orderings, params and priors; CVIC = -2 * sum of held-out log-likelihoods.
// K = 1 is a degenerate test-only mode: train and evaluate on everything.
CvicResult cvic_for_T(const Dataset& data, int n_subtypes, int k_folds,
                      const mcmc::ChainConfig& config);

// Smallest T whose score is within 6 of the minimum.
int select_T(const std::map<int, double>& cvic_scores);

constexpr double kCvicThreshold = 6.0;

}  // namespace sebm::selection
