#pragma once

#include <cstdint>
#include <vector>

#include "sebm/init.hpp"
#include "sebm/model.hpp"
#include "sebm/types.hpp"

namespace sebm::mcmc {

struct ChainConfig {
  int iterations = 10000;
  int burn_in = 500;
  std::uint64_t seed = 0;
  int n_subtypes = 1;
  bool blind = false;            // ignore diagnosis labels after initialization
  double dirichlet_alpha = 1.0;  // weakly informative prior for both simplexes

  void validate() const;
};

struct ChainSample {
  SubtypeOrderings orderings;
  EmissionParams params;
  MixturePriors priors;
  double loglik = kNegInf;
  bool accepted = false;
  int iteration = 0;
};

struct BlindAssignment {
  std::vector<int> ml_subtype;  // -1 when the healthy hypothesis wins
  std::vector<int> ml_stage;    // stage count in {0..N}; 0 = healthy call
  double control_mean_stage = 0.0;
};

struct FitResult {
  ChainSample best_sample;           // highest post-burn-in log-likelihood
  std::vector<double> trace;         // loglik per iteration, fixed length
  std::vector<Matrix> rank_frequency;  // per subtype: N x N, (n, pos) occupancy
  std::vector<int> ml_subtype;
  std::vector<int> ml_stage;
  int accepted = 0;
  int non_finite_rejections = 0;  // proposals auto-rejected on a bad loglik
};

// Symmetric proposal: swap the ranks of two distinct biomarkers in each of
// two distinct subtypes (one subtype when T = 1).
SubtypeOrderings propose(const SubtypeOrderings& current, Rng& rng);

// log-space accept rule shared by every step: u < min(1, exp(delta)).
bool mh_accept(double log_ratio, double u);

// Mutable chain state carried across iterations.
struct ChainState {
  SubtypeOrderings orderings;
  EmissionParams params;
  MixturePriors priors;
  PosteriorState post;
  DensityTable table;
  double loglik = kNegInf;
};

enum class StepOutcome { accepted, rejected, rejected_non_finite };

// One Metropolis-Hastings step with the given proposal:
//  1. intermediate posteriors under (S', previous params, current priors);
//  2. refresh theta/phi by weighted conjugate updates;
//  3. recompute posteriors and loglik, accept with min(1, exp(l' - l));
//  4. on acceptance resample both prior simplexes from posterior counts.
// A non-finite proposed loglik is rejected outright and flagged.
StepOutcome mh_step_with_proposal(ChainState& state, const SubtypeOrderings& proposal,
                                  const Dataset& data, const InitResult& init,
                                  const ChainConfig& config, Rng& rng);

StepOutcome mh_step(ChainState& state, const Dataset& data, const InitResult& init,
                    const ChainConfig& config, Rng& rng);

FitResult run_chain(const Dataset& data, const ChainConfig& config);

// Label-blind assignment: a uniform prior over the full (t, k) grid with
// k in {-1, 0, .., N-1}, fitted priors discarded. The k = -1 state is
// subtype-agnostic, so its T grid cells merge into one healthy class; stage
// and subtype calls are marginal argmaxes over that posterior.
BlindAssignment blind_assign(const Dataset& data, const SubtypeOrderings& orderings,
                             const EmissionParams& params);

// Diagnostic kernel with frozen params and priors: only the orderings move.
// Returns the visit count of each sampled state keyed by its rank rows.
std::vector<std::pair<SubtypeOrderings, std::int64_t>> run_frozen_chain(
    const Dataset& data, const SubtypeOrderings& start,
    const EmissionParams& params, const MixturePriors& priors, int iterations,
    std::uint64_t seed);

}  // namespace sebm::mcmc
