#pragma once

#include <span>
#include <vector>

#include "sebm/core.hpp"

namespace sebm::metrics {

// Fraction of discordant pairs between two rank vectors, in [0, 1].
double kendall_tau_normalized(std::span<const int> a, std::span<const int> b);

struct MatchResult {
  double mean_tau = 0.0;
  // (estimated index, truth index) per matched pair, size min(|est|,|truth|).
  std::vector<std::pair<int, int>> matching;
};

// Hungarian matching on the tau-distance cost matrix; mean cost over the
// matched pairs. Handles rectangular inputs by padding.
MatchResult match_and_score_orderings(const std::vector<std::vector<int>>& estimated,
                                      const std::vector<std::vector<int>>& truth);

// Minimum-cost assignment of an n x m cost matrix (row -> column), padded to
// square internally; returns assignment[row] = column or -1 for dummy rows.
std::vector<int> hungarian_assignment(const Matrix& cost);

// Hubert & Arabie adjusted Rand index. Throws on fewer than two items.
double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b);

// Mean estimated stage count over control participants (ground truth 0).
double control_mean_stage(std::span<const int> ml_stage_counts,
                          std::span<const std::uint8_t> labels);

double subtype_count_mae(std::span<const int> estimates, std::span<const int> truths);

// Kendall's coefficient of concordance across T >= 2 rank rows.
double kendalls_w(const std::vector<std::vector<int>>& sequences);

// --- random-guess baselines ---------------------------------------------

// Mean Hungarian-matched tau of random orderings against `truth`.
double random_ordering_baseline(const std::vector<std::vector<int>>& truth,
                                int trials, Rng& rng);

// Monte-Carlo E|T_hat - T| with both drawn uniformly from {t_lo..t_hi}.
double random_subtype_count_mae(int t_lo, int t_hi, int trials, Rng& rng);

// Mean stage count assigned to controls when stages are guessed uniformly
// from {0..max_stage}.
double random_staging_baseline(int max_stage, int trials, Rng& rng);

// Mean ARI of uniform random subtype labels against `truth` (chance level).
double random_subtyping_baseline(std::span<const int> truth, int n_subtypes,
                                 int trials, Rng& rng);

}  // namespace sebm::metrics
