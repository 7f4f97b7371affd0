#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "sebm/sampler.hpp"
#include "sebm/model.hpp"
#include "test_support.hpp"

using namespace sebm;
using namespace sebm::mcmc;
using namespace testsup;

namespace {

// Two-state emission with the given gap (in pre-event sds).
EmissionParams separated_emission(std::size_t N, double gap) {
  EmissionParams p;
  for (std::size_t n = 0; n < N; ++n) {
    p.phi_mean.push_back(0.0);
    p.phi_std.push_back(1.0);
    p.theta_mean.push_back(gap);
    p.theta_std.push_back(1.0);
  }
  return p;
}

// Progressing rows drawn exactly from the staged generative process.
Dataset staged_dataset(const std::vector<int>& true_ranks, const EmissionParams& p,
                       std::size_t n_healthy, const std::vector<int>& stages,
                       Rng& rng) {
  const std::size_t N = true_ranks.size();
  const std::size_t J = n_healthy + stages.size();
  Dataset d;
  d.values = Matrix(J, N);
  d.missing.assign(J * N, 0);
  for (std::size_t n = 0; n < N; ++n) d.biomarker_names.push_back("bm" + std::to_string(n));
  for (std::size_t j = 0; j < J; ++j) {
    const bool progressing = j >= n_healthy;
    d.labels.push_back(progressing ? 1 : 0);
    d.participant_ids.push_back("p" + std::to_string(j));
    for (std::size_t n = 0; n < N; ++n) {
      const bool post = progressing && true_ranks[n] <= stages[j - n_healthy];
      std::normal_distribution<double> dist(post ? p.theta_mean[n] : p.phi_mean[n],
                                            post ? p.theta_std[n] : p.phi_std[n]);
      d.values(j, n) = dist(rng);
    }
  }
  d.validate();
  return d;
}

}  // namespace

TEST_CASE("propose swaps exactly one pair per touched subtype") {
  Rng rng(51);
  SubtypeOrderings S{{{0, 1, 2, 3}, {3, 2, 1, 0}, {1, 0, 3, 2}}};
  for (int rep = 0; rep < 200; ++rep) {
    const SubtypeOrderings next = propose(S, rng);
    int touched = 0;
    for (std::size_t t = 0; t < 3; ++t) {
      std::size_t moved = 0;
      for (std::size_t n = 0; n < 4; ++n)
        if (next.ranks[t][n] != S.ranks[t][n]) ++moved;
      CHECK((moved == 0 || moved == 2));
      touched += moved == 2 ? 1 : 0;
      next.validate();
    }
    CHECK(touched == 2);
  }

  SubtypeOrderings single{{{0, 1, 2}}};
  const SubtypeOrderings moved = propose(single, rng);
  std::size_t changed = 0;
  for (std::size_t n = 0; n < 3; ++n)
    if (moved.ranks[0][n] != single.ranks[0][n]) ++changed;
  CHECK(changed == 2);

  SubtypeOrderings tiny{{{0}}};
  CHECK_THROWS_AS(propose(tiny, rng), std::domain_error);
}

TEST_CASE("propose is an involution under the same random draws") {
  SubtypeOrderings S{{{2, 0, 1, 3}, {0, 1, 2, 3}}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r1(seed), r2(seed);
    const SubtypeOrderings once = propose(S, r1);
    const SubtypeOrderings twice = propose(once, r2);
    CHECK(twice.ranks == S.ranks);
  }
}

TEST_CASE("propose is uniform over the transpositions at T=1, N=3") {
  Rng rng(52);
  SubtypeOrderings S{{{0, 1, 2}}};
  std::map<std::vector<int>, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[propose(S, rng).ranks[0]];
  CHECK(counts.size() == 3);
  for (const auto& [perm, count] : counts)
    CHECK(std::abs(static_cast<double>(count) / draws - 1.0 / 3.0) < 0.01);
}

TEST_CASE("mh_accept implements min(1, exp(delta))") {
  CHECK(mh_accept(0.0, 0.999999));
  CHECK(mh_accept(5.0, 0.999999));
  CHECK(mh_accept(-0.5, std::exp(-0.5) - 1e-9));
  CHECK_FALSE(mh_accept(-0.5, std::exp(-0.5) + 1e-9));
  // Injected huge drop: e^-1000 acceptance over many uniforms is never taken.
  Rng rng(53);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) CHECK_FALSE(mh_accept(-1000.0, unif(rng)));
}

TEST_CASE("a proposal identical to the current state is always accepted") {
  Rng rng(54);
  const EmissionParams gen = separated_emission(3, 1000.0);
  const std::vector<int> ranks{0, 1, 2};
  const std::vector<int> stages{0, 0, 1, 1, 2, 2, 0, 1, 2, 1};
  const Dataset d = staged_dataset(ranks, gen, 5, stages, rng);
  const InitResult init = initialize_params(d);
  ChainConfig config;
  config.n_subtypes = 1;

  for (int rep = 0; rep < 20; ++rep) {
    ChainState state;
    state.orderings = SubtypeOrderings{{ranks}};
    state.params = init.params;
    state.priors = random_priors(1, 3, rng);
    state.table = make_density_table(d, state.params);
    state.post = compute_posteriors(d, state.orderings, state.priors, state.table);
    state.loglik = state.post.total_loglik;
    // With fully separated clusters the refresh reproduces the same params,
    // so l' == l and alpha = 1.
    CHECK(mh_step_with_proposal(state, state.orderings, d, init, config, rng) ==
          StepOutcome::accepted);
  }
}

TEST_CASE("chain concentrates on the true ordering of two separated biomarkers") {
  Rng rng(55);
  const EmissionParams gen = separated_emission(2, 6.0);
  const std::vector<int> ranks{0, 1};
  std::vector<int> stages;
  for (int i = 0; i < 25; ++i) stages.push_back(0);  // only the first event
  for (int i = 0; i < 20; ++i) stages.push_back(1);
  const Dataset d = staged_dataset(ranks, gen, 15, stages, rng);

  ChainConfig config;
  config.iterations = 2000;
  config.burn_in = 200;
  config.seed = 7;
  config.n_subtypes = 1;
  const FitResult fit = run_chain(d, config);
  // Occupancy of the true ordering: biomarker 0 at rank 0.
  CHECK(fit.rank_frequency[0](0, 0) > 0.9);
  CHECK(fit.best_sample.orderings.ranks[0] == ranks);
}

TEST_CASE("trace length and burn-in bookkeeping") {
  Rng rng(56);
  const EmissionParams gen = separated_emission(3, 2.0);
  const Dataset d = staged_dataset({0, 1, 2}, gen, 4, {0, 1, 2, 1, 0, 2, 1, 1}, rng);
  ChainConfig config;
  config.iterations = 1;
  config.burn_in = 0;
  config.n_subtypes = 1;
  const FitResult fit = run_chain(d, config);
  CHECK(fit.trace.size() == 1);
  CHECK(fit.best_sample.loglik == fit.trace[0]);
}

TEST_CASE("identical seeds give identical fits") {
  Rng rng(57);
  const EmissionParams gen = separated_emission(3, 2.5);
  const Dataset d =
      staged_dataset({1, 0, 2}, gen, 6, {0, 0, 1, 2, 2, 1, 0, 1, 2, 2, 1, 0}, rng);
  ChainConfig config;
  config.iterations = 300;
  config.burn_in = 50;
  config.seed = 123;
  config.n_subtypes = 2;
  const FitResult a = run_chain(d, config);
  const FitResult b = run_chain(d, config);
  CHECK(a.trace == b.trace);
  CHECK(a.best_sample.orderings.ranks == b.best_sample.orderings.ranks);
  CHECK(a.best_sample.loglik == b.best_sample.loglik);
  CHECK(a.ml_subtype == b.ml_subtype);
  CHECK(a.ml_stage == b.ml_stage);
  CHECK(a.best_sample.params.theta_mean == b.best_sample.params.theta_mean);
}

TEST_CASE("best sample tracks the post-burn-in maximum") {
  Rng rng(58);
  const EmissionParams gen = separated_emission(3, 1.5);
  const Dataset d = staged_dataset({0, 2, 1}, gen, 5, {0, 1, 1, 2, 0, 2, 1, 0}, rng);
  ChainConfig config;
  config.iterations = 400;
  config.burn_in = 100;
  config.seed = 9;
  config.n_subtypes = 1;
  const FitResult fit = run_chain(d, config);
  const double max_post =
      *std::max_element(fit.trace.begin() + config.burn_in, fit.trace.end());
  CHECK(fit.best_sample.loglik == max_post);
  CHECK(fit.best_sample.iteration > config.burn_in);
}

TEST_CASE("posterior rank frequency slices are doubly stochastic") {
  Rng rng(59);
  const EmissionParams gen = separated_emission(4, 1.0);
  const Dataset d =
      staged_dataset({0, 1, 2, 3}, gen, 5, {0, 1, 2, 3, 0, 1, 2, 3, 1, 2}, rng);
  ChainConfig config;
  config.iterations = 500;
  config.burn_in = 100;
  config.seed = 40;
  config.n_subtypes = 2;
  const FitResult fit = run_chain(d, config);
  for (const Matrix& slice : fit.rank_frequency)
    for (std::size_t i = 0; i < 4; ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        row += slice(i, j);
        col += slice(j, i);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("dirichlet resample counts conserve posterior mass") {
  Rng rng(60);
  Dataset d = random_dataset(20, 4, 0.1, rng);
  const EmissionParams p = random_emission(4, rng);
  SubtypeOrderings S{{random_permutation(4, rng), random_permutation(4, rng)}};
  const MixturePriors priors = random_priors(2, 4, rng);
  const PosteriorState post = compute_posteriors(d, S, priors, p);

  std::size_t progressing = 0;
  for (auto z : d.labels) progressing += z;
  double subtype_total = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    double subtype_count = 0.0, stage_count = 0.0;
    for (std::size_t j = 0; j < 20; ++j) {
      subtype_count += post.subtype_post(j, t);
      for (std::size_t k = 0; k < 4; ++k)
        stage_count += post.stage_post(j, t, k) * post.subtype_post(j, t);
    }
    CHECK(stage_count == doctest::Approx(subtype_count).epsilon(1e-6));
    subtype_total += subtype_count;
  }
  CHECK(subtype_total == doctest::Approx(static_cast<double>(progressing)).epsilon(1e-6));
}

TEST_CASE("frozen kernel occupancy matches the enumerated posterior") {
  Rng rng(61);
  const EmissionParams gen = separated_emission(3, 0.9);
  const std::vector<int> true_ranks{0, 1, 2};
  const std::vector<int> stages{0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 0, 1, 2, 1, 0, 1, 1, 2};
  const Dataset d = staged_dataset(true_ranks, gen, 6, stages, rng);

  MixturePriors priors;
  priors.subtype = {1.0};
  priors.stage = Matrix(1, 3, 1.0 / 3.0);

  // Exact posterior over the 6 orderings under a uniform ordering prior.
  std::vector<std::vector<int>> perms;
  std::vector<int> base{0, 1, 2};
  std::vector<int> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end());
  do {
    perms.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  std::vector<double> logliks;
  for (const auto& perm : perms)
    logliks.push_back(total_loglik(d, SubtypeOrderings{{perm}}, priors, gen));
  const double lse = logsumexp(logliks);
  std::map<std::vector<int>, double> exact;
  for (std::size_t i = 0; i < perms.size(); ++i)
    exact[perms[i]] = std::exp(logliks[i] - lse);

  const int iterations = 200000;
  const auto occupancy =
      run_frozen_chain(d, SubtypeOrderings{{base}}, gen, priors, iterations, 77);
  std::map<std::vector<int>, double> empirical;
  for (const auto& [orderings, count] : occupancy)
    empirical[orderings.ranks[0]] = static_cast<double>(count) / iterations;

  double tv = 0.0;
  for (const auto& [perm, prob] : exact) {
    const auto it = empirical.find(perm);
    tv += std::abs(prob - (it == empirical.end() ? 0.0 : it->second));
  }
  tv *= 0.5;
  CHECK(tv < 0.03);
}

TEST_CASE("blind_assign fixed cases") {
  const std::size_t N = 3;
  EmissionParams p = separated_emission(N, 5.0);
  SubtypeOrderings S{{{0, 1, 2}, {2, 1, 0}}};

  Dataset d;
  d.values = Matrix(3, N);
  d.missing.assign(3 * N, 0);
  d.biomarker_names = {"a", "b", "c"};
  d.participant_ids = {"p0", "p1", "p2"};
  d.labels = {0, 1, 1};
  // Row 0 at the pre-event means: healthy call.
  for (std::size_t n = 0; n < N; ++n) d.values(0, n) = p.phi_mean[n];
  // Row 1 at the post-event means on subtype 0's ranks {0,1} = biomarkers {0,1}.
  d.values(1, 0) = p.theta_mean[0];
  d.values(1, 1) = p.theta_mean[1];
  d.values(1, 2) = p.phi_mean[2];
  // Row 2 matches subtype 1's ranks {0,1} = biomarkers {2,1}.
  d.values(2, 0) = p.phi_mean[0];
  d.values(2, 1) = p.theta_mean[1];
  d.values(2, 2) = p.theta_mean[2];

  const BlindAssignment a = blind_assign(d, S, p);
  CHECK(a.ml_stage[0] == 0);
  CHECK(a.ml_subtype[0] == -1);
  CHECK(a.ml_stage[1] == 2);
  CHECK(a.ml_subtype[1] == 0);
  CHECK(a.ml_stage[2] == 2);
  CHECK(a.ml_subtype[2] == 1);
  CHECK(a.control_mean_stage == 0.0);
}

TEST_CASE("blind_assign prefers the healthy call on exact ties") {
  // When the rank-0 biomarker is missing, the (t, 0) hypothesis scores
  // exactly like the healthy one; the tie goes to healthy.
  EmissionParams p = separated_emission(3, 4.0);
  Dataset d;
  d.values = Matrix(1, 3);
  d.missing = {1, 0, 0};
  d.values(0, 1) = p.phi_mean[1];
  d.values(0, 2) = p.phi_mean[2];
  d.labels = {1};
  d.biomarker_names = {"a", "b", "c"};
  d.participant_ids = {"p0"};
  SubtypeOrderings S{{{0, 1, 2}}};
  const BlindAssignment a = blind_assign(d, S, p);
  CHECK(a.ml_stage[0] == 0);
  CHECK(a.ml_subtype[0] == -1);
}

TEST_CASE("blind_assign matches the exhaustive hypothesis oracle") {
  Rng rng(62);
  for (int rep = 0; rep < 30; ++rep) {
    Dataset d = random_dataset(5, 3, 0.0, rng);
    const EmissionParams p = random_emission(3, rng);
    SubtypeOrderings S{{random_permutation(3, rng), random_permutation(3, rng)}};
    const BlindAssignment a = blind_assign(d, S, p);
    for (std::size_t j = 0; j < 5; ++j) {
      std::vector<double> row(d.values.row(j).begin(), d.values.row(j).end());
      std::vector<std::uint8_t> miss(d.missing_row(j).begin(), d.missing_row(j).end());
      // Exhaustive 2 x 4 grid in probability space (long double): the
      // healthy column appears once per subtype; stage and subtype calls are
      // marginal argmaxes. Identity is asserted only when the winner leads
      // by a clear margin (k = N-1 cells tie exactly across subtypes).
      const long double healthy = std::exp(
          static_cast<long double>(loglik_healthy(row, miss, p)));
      std::vector<long double> stage_mass(3, 0.0L);
      std::vector<long double> subtype_mass(2, 0.0L);
      for (int t = 0; t < 2; ++t)
        for (int k = 0; k < 3; ++k) {
          const long double m = std::exp(static_cast<long double>(
              oracle_loglik_stage(row, miss, S.ranks[t], k, p)));
          stage_mass[k] += m;
          subtype_mass[t] += m;
        }
      long double best_mass = 2.0L * healthy;
      int best_k = -1;
      for (int k = 0; k < 3; ++k)
        if (stage_mass[k] > best_mass * (1.0L + 1e-9L)) {
          best_mass = stage_mass[k];
          best_k = k;
        }
      long double runner_up = 2.0L * healthy;
      for (int k = 0; k < 3; ++k)
        if (k != best_k && stage_mass[k] > runner_up) runner_up = stage_mass[k];
      if (best_mass > runner_up * (1.0L + 1e-6L)) {
        CHECK(a.ml_stage[j] == best_k + 1);
        if (best_k < 0) {
          CHECK(a.ml_subtype[j] == -1);
        } else {
          const int best_t = subtype_mass[1] > subtype_mass[0] * (1.0L + 1e-9L) ? 1 : 0;
          CHECK(a.ml_subtype[j] == best_t);
        }
      }
    }
  }
}
