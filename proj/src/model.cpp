#include "sebm/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sebm {

double log_density_gaussian(double x, double mean, double std) {
  if (!std::isfinite(x) || !std::isfinite(mean))
    throw std::domain_error("log_density_gaussian: non-finite argument");
  if (!(std > 0.0) || !std::isfinite(std))
    throw std::domain_error("log_density_gaussian: std must be positive");
  const double z = (x - mean) / std;
  return -kHalfLog2Pi - std::log(std) - 0.5 * z * z;
}

double loglik_healthy(std::span<const double> values,
                      std::span<const std::uint8_t> missing,
                      const EmissionParams& params, bool* all_missing) {
  if (values.size() != params.n_biomarkers() || missing.size() != values.size())
    throw std::invalid_argument("loglik_healthy: row length mismatch");
  double ll = 0.0;
  bool seen = false;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (missing[n]) continue;
    seen = true;
    ll += log_density_gaussian(values[n], params.phi_mean[n], params.phi_std[n]);
  }
  if (all_missing) *all_missing = !seen;
  return ll;
}

double loglik_stage(std::span<const double> values,
                    std::span<const std::uint8_t> missing,
                    std::span<const int> ranks, int k,
                    const EmissionParams& params) {
  const std::size_t N = values.size();
  if (ranks.size() != N || missing.size() != N || N != params.n_biomarkers())
    throw std::invalid_argument("loglik_stage: row length mismatch");
  if (k < 0 || static_cast<std::size_t>(k) >= N)
    throw std::domain_error("loglik_stage: stage out of range");
  double ll = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    if (missing[n]) continue;
    ll += ranks[n] <= k
              ? log_density_gaussian(values[n], params.theta_mean[n], params.theta_std[n])
              : log_density_gaussian(values[n], params.phi_mean[n], params.phi_std[n]);
  }
  return ll;
}

namespace {

void check_priors(const MixturePriors& priors, std::size_t T, std::size_t N) {
  if (priors.subtype.size() != T || priors.stage.rows != T || priors.stage.cols != N)
    throw std::invalid_argument("mixture priors shape mismatch");
  double s = 0.0;
  for (double v : priors.subtype) s += v;
  if (!(s > 0.0)) throw std::domain_error("degenerate subtype prior (all zero)");
  for (std::size_t t = 0; t < T; ++t) {
    double rs = 0.0;
    for (double v : priors.stage.row(t)) rs += v;
    if (!(rs > 0.0)) throw std::domain_error("degenerate stage prior row (all zero)");
  }
}

}  // namespace

double loglik_participant(std::span<const double> values,
                          std::span<const std::uint8_t> missing, int z,
                          const SubtypeOrderings& orderings,
                          const MixturePriors& priors,
                          const EmissionParams& params) {
  if (z == 0) return loglik_healthy(values, missing, params);
  const std::size_t T = orderings.n_subtypes(), N = values.size();
  check_priors(priors, T, N);
  std::vector<double> terms;
  terms.reserve(T * N);
  for (std::size_t t = 0; t < T; ++t) {
    const double log_pi_t =
        priors.subtype[t] > 0.0 ? std::log(priors.subtype[t]) : kNegInf;
    for (std::size_t k = 0; k < N; ++k) {
      const double pk = priors.stage(t, k);
      if (pk <= 0.0 || log_pi_t == kNegInf) {
        terms.push_back(kNegInf);
        continue;
      }
      terms.push_back(log_pi_t + std::log(pk) +
                      loglik_stage(values, missing, orderings.ranks[t],
                                   static_cast<int>(k), params));
    }
  }
  return logsumexp(terms);
}

double total_loglik(const Dataset& data, const SubtypeOrderings& orderings,
                    const MixturePriors& priors, const EmissionParams& params) {
  double total = 0.0;
  for (std::size_t j = 0; j < data.n_participants(); ++j) {
    try {
      total += loglik_participant(data.values.row(j), data.missing_row(j),
                                  data.labels[j], orderings, priors, params);
    } catch (const std::exception& e) {
      throw std::runtime_error("total_loglik: participant " + std::to_string(j) +
                               ": " + e.what());
    }
  }
  return total;
}

DensityTable make_density_table(const Dataset& data, const EmissionParams& params) {
  const std::size_t J = data.n_participants(), N = data.n_biomarkers();
  if (N != params.n_biomarkers())
    throw std::invalid_argument("make_density_table: biomarker count mismatch");
  DensityTable table{Matrix(J, N), Matrix(J, N)};
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t n = 0; n < N; ++n) {
      if (data.is_missing(j, n)) continue;  // both entries stay 0
      const double x = data.values(j, n);
      table.log_theta(j, n) =
          log_density_gaussian(x, params.theta_mean[n], params.theta_std[n]);
      table.log_phi(j, n) =
          log_density_gaussian(x, params.phi_mean[n], params.phi_std[n]);
    }
  return table;
}

PosteriorState compute_posteriors(const Dataset& data,
                                  const SubtypeOrderings& orderings,
                                  const MixturePriors& priors,
                                  const EmissionParams& params) {
  return compute_posteriors(data, orderings, priors, make_density_table(data, params));
}

PosteriorState compute_posteriors(const Dataset& data,
                                  const SubtypeOrderings& orderings,
                                  const MixturePriors& priors,
                                  const DensityTable& table) {
  const std::size_t J = data.n_participants(), N = data.n_biomarkers();
  const std::size_t T = orderings.n_subtypes();
  check_priors(priors, T, N);

  // Inverse views once per call: position i -> biomarker.
  std::vector<std::vector<int>> by_position(T);
  for (std::size_t t = 0; t < T; ++t)
    by_position[t] = inverse_permutation(orderings.ranks[t]);

  std::vector<double> log_pi_t(T), log_pi_stage(T * N);
  for (std::size_t t = 0; t < T; ++t) {
    log_pi_t[t] = priors.subtype[t] > 0.0 ? std::log(priors.subtype[t]) : kNegInf;
    for (std::size_t k = 0; k < N; ++k) {
      const double p = priors.stage(t, k);
      log_pi_stage[t * N + k] = p > 0.0 ? std::log(p) : kNegInf;
    }
  }

  PosteriorState post;
  post.stage_post = Tensor3(J, T, N);
  post.subtype_post = Matrix(J, T);
  post.total_loglik = 0.0;

  std::vector<double> joint(T * N);       // log pi_t + log pi_{k|t} + ll_stage
  std::vector<double> stage_ll(N);        // ll_stage along one ordering
  std::vector<double> subtype_lse(T);

  for (std::size_t j = 0; j < J; ++j) {
    if (data.labels[j] == 0) {
      double healthy = 0.0;
      for (std::size_t n = 0; n < N; ++n) healthy += table.log_phi(j, n);
      post.total_loglik += healthy;
      continue;  // posterior rows stay all-zero by convention
    }

    for (std::size_t t = 0; t < T; ++t) {
      // Prefix sums along the ordering: ll(k) = base + sum_{i<=k} delta(i)
      // where base scores everything pre-event.
      double base = 0.0;
      for (std::size_t i = 0; i < N; ++i) base += table.log_phi(j, by_position[t][i]);
      double acc = base;
      for (std::size_t i = 0; i < N; ++i) {
        const int n = by_position[t][i];
        acc += table.log_theta(j, n) - table.log_phi(j, n);
        stage_ll[i] = acc;
      }
      for (std::size_t k = 0; k < N; ++k) {
        const double lp = log_pi_stage[t * N + k];
        joint[t * N + k] =
            (lp == kNegInf || log_pi_t[t] == kNegInf) ? kNegInf
                                                      : log_pi_t[t] + lp + stage_ll[k];
      }
    }

    const double lse_all = logsumexp(joint);
    if (lse_all == kNegInf) {
      // Every hypothesis underflowed to -inf even after max-shift; fall back
      // to a uniform posterior and flag it.
      ++post.degenerate_rows;
      for (std::size_t t = 0; t < T; ++t) {
        post.subtype_post(j, t) = 1.0 / static_cast<double>(T);
        for (std::size_t k = 0; k < N; ++k)
          post.stage_post(j, t, k) = 1.0 / static_cast<double>(N);
      }
      continue;
    }
    post.total_loglik += lse_all;

    for (std::size_t t = 0; t < T; ++t)
      subtype_lse[t] = logsumexp({joint.data() + t * N, N});
    for (std::size_t t = 0; t < T; ++t) {
      post.subtype_post(j, t) =
          subtype_lse[t] == kNegInf ? 0.0 : std::exp(subtype_lse[t] - lse_all);
      if (subtype_lse[t] == kNegInf) {
        // Stage posterior is conditioned on t only; renormalize within the
        // subtype even when the subtype itself carries no mass.
        for (std::size_t k = 0; k < N; ++k)
          post.stage_post(j, t, k) = 1.0 / static_cast<double>(N);
        continue;
      }
      for (std::size_t k = 0; k < N; ++k) {
        const double v = joint[t * N + k];
        post.stage_post(j, t, k) = v == kNegInf ? 0.0 : std::exp(v - subtype_lse[t]);
      }
    }
  }
  return post;
}

EventWeights event_weights(const PosteriorState& post,
                           const SubtypeOrderings& orderings) {
  const std::size_t J = post.stage_post.d0, T = post.stage_post.d1,
                    N = post.stage_post.d2;
  if (orderings.n_subtypes() != T || orderings.n_biomarkers() != N ||
      post.subtype_post.rows != J || post.subtype_post.cols != T)
    throw std::invalid_argument("event_weights: shape mismatch");

  EventWeights w{Matrix(J, N), Matrix(J, N)};
  std::vector<double> suffix(N);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      const double pt = post.subtype_post(j, t);
      if (pt == 0.0) continue;
      // suffix[k] = P(stage >= k | j, t)
      double acc = 0.0;
      for (std::size_t k = N; k-- > 0;) {
        acc += post.stage_post(j, t, k);
        suffix[k] = acc;
      }
      for (std::size_t n = 0; n < N; ++n)
        w.theta(j, n) += pt * suffix[orderings.ranks[t][n]];
    }
    for (std::size_t n = 0; n < N; ++n) {
      if (w.theta(j, n) > 1.0) w.theta(j, n) = 1.0;  // guard fp drift
      w.phi(j, n) = 1.0 - w.theta(j, n);
    }
  }
  return w;
}

}  // namespace sebm
