#include "sebm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sebm::mcmc {

void ChainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("ChainConfig: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw std::invalid_argument("ChainConfig: need 0 <= burn_in < iterations");
  if (n_subtypes < 1) throw std::invalid_argument("ChainConfig: n_subtypes must be >= 1");
  if (!(dirichlet_alpha > 0.0))
    throw std::invalid_argument("ChainConfig: dirichlet_alpha must be positive");
}

namespace {

void swap_two_ranks(std::vector<int>& ranks, Rng& rng) {
  const std::size_t n = ranks.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t a = pick(rng);
  std::uniform_int_distribution<std::size_t> pick_other(0, n - 2);
  std::size_t b = pick_other(rng);
  if (b >= a) ++b;
  std::swap(ranks[a], ranks[b]);
}

}  // namespace

SubtypeOrderings propose(const SubtypeOrderings& current, Rng& rng) {
  const std::size_t T = current.n_subtypes(), N = current.n_biomarkers();
  if (N < 2) throw std::domain_error("propose: need at least two biomarkers");
  SubtypeOrderings next = current;
  if (T == 1) {
    swap_two_ranks(next.ranks[0], rng);
    return next;
  }
  std::uniform_int_distribution<std::size_t> pick_t(0, T - 1);
  const std::size_t t1 = pick_t(rng);
  std::uniform_int_distribution<std::size_t> pick_other(0, T - 2);
  std::size_t t2 = pick_other(rng);
  if (t2 >= t1) ++t2;
  swap_two_ranks(next.ranks[t1], rng);
  swap_two_ranks(next.ranks[t2], rng);
  return next;
}

bool mh_accept(double log_ratio, double u) {
  if (log_ratio >= 0.0) return true;
  return u < std::exp(log_ratio);
}

namespace {

// Refresh theta/phi from event weights via one weighted conjugate update per
// biomarker and state, against the NIG priors fixed at initialization.
// Missing cells get weight zero.
EmissionParams refresh_params(const Dataset& data, const EventWeights& weights,
                              const InitResult& init) {
  const std::size_t J = data.n_participants(), N = data.n_biomarkers();
  EmissionParams params;
  params.theta_mean.resize(N);
  params.theta_std.resize(N);
  params.phi_mean.resize(N);
  params.phi_std.resize(N);
  std::vector<double> column(J), w_theta(J), w_phi(J);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < J; ++j) {
      column[j] = data.values(j, n);
      const bool miss = data.is_missing(j, n);
      w_theta[j] = miss ? 0.0 : weights.theta(j, n);
      w_phi[j] = miss ? 0.0 : weights.phi(j, n);
    }
    const NigPosterior theta = nig_update(column, w_theta, init.theta_prior[n]);
    const NigPosterior phi = nig_update(column, w_phi, init.phi_prior[n]);
    params.theta_mean[n] = theta.mu_hat;
    params.theta_std[n] = theta.sigma_hat;
    params.phi_mean[n] = phi.mu_hat;
    params.phi_std[n] = phi.sigma_hat;
  }
  return params;
}

MixturePriors resample_priors(const PosteriorState& post, double alpha, Rng& rng) {
  const std::size_t J = post.subtype_post.rows, T = post.subtype_post.cols,
                    N = post.stage_post.d2;
  std::vector<double> subtype_counts(T, alpha);
  Matrix stage_counts(T, N, alpha);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t t = 0; t < T; ++t) {
      const double pt = post.subtype_post(j, t);
      if (pt == 0.0) continue;
      subtype_counts[t] += pt;
      for (std::size_t k = 0; k < N; ++k)
        stage_counts(t, k) += pt * post.stage_post(j, t, k);
    }
  MixturePriors priors;
  priors.subtype = sample_dirichlet(subtype_counts, rng);
  priors.stage = Matrix(T, N);
  for (std::size_t t = 0; t < T; ++t) {
    const std::vector<double> row = sample_dirichlet(stage_counts.row(t), rng);
    std::copy(row.begin(), row.end(), priors.stage.row(t).begin());
  }
  return priors;
}

}  // namespace

StepOutcome mh_step_with_proposal(ChainState& state, const SubtypeOrderings& proposal,
                                  const Dataset& data, const InitResult& init,
                                  const ChainConfig& config, Rng& rng) {
  // Intermediate posteriors under the proposal with the previous params.
  const PosteriorState intermediate =
      compute_posteriors(data, proposal, state.priors, state.table);
  const EventWeights weights = event_weights(intermediate, proposal);
  EmissionParams proposed_params = refresh_params(data, weights, init);

  DensityTable proposed_table = make_density_table(data, proposed_params);
  PosteriorState proposed_post =
      compute_posteriors(data, proposal, state.priors, proposed_table);
  const double proposed_loglik = proposed_post.total_loglik;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (!std::isfinite(proposed_loglik)) return StepOutcome::rejected_non_finite;

  if (!mh_accept(proposed_loglik - state.loglik, u)) return StepOutcome::rejected;

  state.orderings = proposal;
  state.params = std::move(proposed_params);
  state.table = std::move(proposed_table);
  state.post = std::move(proposed_post);
  state.loglik = proposed_loglik;
  state.priors = resample_priors(state.post, config.dirichlet_alpha, rng);
  return StepOutcome::accepted;
}

StepOutcome mh_step(ChainState& state, const Dataset& data, const InitResult& init,
                    const ChainConfig& config, Rng& rng) {
  return mh_step_with_proposal(state, propose(state.orderings, rng), data, init,
                               config, rng);
}

namespace {

SubtypeOrderings random_orderings(std::size_t T, std::size_t N, Rng& rng) {
  SubtypeOrderings s;
  s.ranks.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (int attempt = 0;; ++attempt) {
      std::vector<int> perm(N);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      if (std::find(s.ranks.begin(), s.ranks.end(), perm) == s.ranks.end()) {
        s.ranks.push_back(std::move(perm));
        break;
      }
      if (attempt > 10000)
        throw std::runtime_error("random_orderings: cannot draw distinct permutations");
    }
  }
  return s;
}

MixturePriors draw_initial_priors(std::size_t T, std::size_t N, double alpha, Rng& rng) {
  MixturePriors priors;
  const std::vector<double> a_subtype(T, alpha);
  priors.subtype = sample_dirichlet(a_subtype, rng);
  priors.stage = Matrix(T, N);
  const std::vector<double> a_stage(N, alpha);
  for (std::size_t t = 0; t < T; ++t) {
    const std::vector<double> row = sample_dirichlet(a_stage, rng);
    std::copy(row.begin(), row.end(), priors.stage.row(t).begin());
  }
  return priors;
}

}  // namespace

FitResult run_chain(const Dataset& data, const ChainConfig& config) {
  config.validate();
  data.validate();
  const std::size_t T = static_cast<std::size_t>(config.n_subtypes);
  const std::size_t N = data.n_biomarkers();

  Rng rng(config.seed);
  const InitResult init = initialize_params(data, config.blind);

  // The blind protocol uses the labels above and nowhere else: the chain
  // itself sees every participant as progressing.
  Dataset working = data;
  if (config.blind) std::fill(working.labels.begin(), working.labels.end(), 1);

  ChainState state;
  state.orderings = random_orderings(T, N, rng);
  state.params = init.params;
  state.priors = draw_initial_priors(T, N, config.dirichlet_alpha, rng);
  state.table = make_density_table(working, state.params);
  state.post = compute_posteriors(working, state.orderings, state.priors, state.table);
  state.loglik = state.post.total_loglik;

  FitResult result;
  result.trace.reserve(config.iterations);
  result.rank_frequency.assign(T, Matrix(N, N, 0.0));
  result.best_sample.loglik = kNegInf;

  int post_burn_in = 0;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    const StepOutcome outcome = mh_step(state, working, init, config, rng);
    const bool accepted = outcome == StepOutcome::accepted;
    result.accepted += accepted ? 1 : 0;
    result.non_finite_rejections += outcome == StepOutcome::rejected_non_finite ? 1 : 0;
    result.trace.push_back(state.loglik);
    if (iter <= config.burn_in) continue;
    ++post_burn_in;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t n = 0; n < N; ++n)
        result.rank_frequency[t](n, state.orderings.ranks[t][n]) += 1.0;
    if (state.loglik > result.best_sample.loglik) {
      result.best_sample = {state.orderings, state.params, state.priors,
                            state.loglik, accepted, iter};
    }
  }
  for (auto& freq : result.rank_frequency)
    for (double& v : freq.data) v /= static_cast<double>(post_burn_in);

  const BlindAssignment assignment =
      blind_assign(data, result.best_sample.orderings, result.best_sample.params);
  result.ml_subtype = assignment.ml_subtype;
  result.ml_stage = assignment.ml_stage;
  return result;
}

BlindAssignment blind_assign(const Dataset& data, const SubtypeOrderings& orderings,
                             const EmissionParams& params) {
  const std::size_t J = data.n_participants(), N = data.n_biomarkers();
  const std::size_t T = orderings.n_subtypes();
  BlindAssignment out;
  out.ml_subtype.resize(J);
  out.ml_stage.resize(J);

  const DensityTable table = make_density_table(data, params);
  std::vector<std::vector<int>> by_position(T);
  for (std::size_t t = 0; t < T; ++t)
    by_position[t] = inverse_permutation(orderings.ranks[t]);

  Matrix cell(T, N);  // log-likelihood of each (t, k >= 0) grid cell
  std::vector<double> stage_marginal(N), subtype_marginal(T);
  for (std::size_t j = 0; j < J; ++j) {
    double healthy = 0.0;
    for (std::size_t n = 0; n < N; ++n) healthy += table.log_phi(j, n);
    for (std::size_t t = 0; t < T; ++t) {
      double acc = healthy;
      for (std::size_t i = 0; i < N; ++i) {
        const int n = by_position[t][i];
        acc += table.log_theta(j, n) - table.log_phi(j, n);
        cell(t, i) = acc;
      }
    }
    // The healthy state appears once per subtype, so its class carries T
    // cells of mass against each single (t, k) cell.
    const double healthy_class = healthy + std::log(static_cast<double>(T));
    for (std::size_t k = 0; k < N; ++k) {
      for (std::size_t t = 0; t < T; ++t) subtype_marginal[t] = cell(t, k);
      stage_marginal[k] = logsumexp(subtype_marginal);
    }
    double best = healthy_class;
    DiseaseStage stage;
    for (std::size_t k = 0; k < N; ++k)
      if (stage_marginal[k] > best) {
        best = stage_marginal[k];
        stage.value = static_cast<int>(k);
      }
    out.ml_stage[j] = stage.count();
    if (stage.value < 0) {
      out.ml_subtype[j] = -1;
    } else {
      int best_t = 0;
      for (std::size_t t = 0; t < T; ++t) {
        subtype_marginal[t] = logsumexp(cell.row(t));
        if (subtype_marginal[t] > subtype_marginal[best_t]) best_t = static_cast<int>(t);
      }
      out.ml_subtype[j] = best_t;
    }
  }

  double total = 0.0;
  std::size_t controls = 0;
  for (std::size_t j = 0; j < J; ++j)
    if (data.labels[j] == 0) {
      total += out.ml_stage[j];
      ++controls;
    }
  out.control_mean_stage =
      controls > 0 ? total / static_cast<double>(controls)
                   : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<std::pair<SubtypeOrderings, std::int64_t>> run_frozen_chain(
    const Dataset& data, const SubtypeOrderings& start,
    const EmissionParams& params, const MixturePriors& priors, int iterations,
    std::uint64_t seed) {
  start.validate();
  params.validate();
  Rng rng(seed);
  const DensityTable table = make_density_table(data, params);

  auto loglik_of = [&](const SubtypeOrderings& s) {
    return compute_posteriors(data, s, priors, table).total_loglik;
  };

  SubtypeOrderings current = start;
  double loglik = loglik_of(current);
  std::map<std::vector<std::vector<int>>, std::int64_t> counts;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < iterations; ++i) {
    const SubtypeOrderings proposal = propose(current, rng);
    const double proposed = loglik_of(proposal);
    const double u = unif(rng);
    if (std::isfinite(proposed) && mh_accept(proposed - loglik, u)) {
      current = proposal;
      loglik = proposed;
    }
    ++counts[current.ranks];
  }

  std::vector<std::pair<SubtypeOrderings, std::int64_t>> out;
  out.reserve(counts.size());
  for (auto& [ranks, count] : counts) out.push_back({SubtypeOrderings{ranks}, count});
  return out;
}

}  // namespace sebm::mcmc
