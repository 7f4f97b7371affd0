#pragma once

// Shared builders and brute-force oracles for the test suites. Everything in
// here recomputes quantities by direct enumeration, independent of the
// library's optimized paths.

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sebm/types.hpp"

namespace testsup {

inline double oracle_log_gauss(long double x, long double mean, long double sd) {
  const long double z = (x - mean) / sd;
  return static_cast<double>(-0.5L * std::log(2.0L * 3.14159265358979323846264338328L) -
                             std::log(sd) - 0.5L * z * z);
}

// Stage log-likelihood by explicit partition of biomarkers into post/pre.
inline double oracle_loglik_stage(const std::vector<double>& values,
                                  const std::vector<std::uint8_t>& missing,
                                  const std::vector<int>& ranks, int k,
                                  const sebm::EmissionParams& p) {
  long double total = 0.0L;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (missing[n]) continue;
    if (ranks[n] <= k)
      total += oracle_log_gauss(values[n], p.theta_mean[n], p.theta_std[n]);
    else
      total += oracle_log_gauss(values[n], p.phi_mean[n], p.phi_std[n]);
  }
  return static_cast<double>(total);
}

// Mixture likelihood in extended precision, direct double sum.
inline double oracle_loglik_mixture(const std::vector<double>& values,
                                    const std::vector<std::uint8_t>& missing,
                                    const sebm::SubtypeOrderings& S,
                                    const sebm::MixturePriors& priors,
                                    const sebm::EmissionParams& p) {
  long double total = 0.0L;
  for (std::size_t t = 0; t < S.n_subtypes(); ++t)
    for (std::size_t k = 0; k < S.n_biomarkers(); ++k) {
      const double ll = oracle_loglik_stage(values, missing, S.ranks[t],
                                            static_cast<int>(k), p);
      total += static_cast<long double>(priors.subtype[t]) * priors.stage(t, k) *
               std::exp(static_cast<long double>(ll));
    }
  return static_cast<double>(std::log(total));
}

// Joint enumeration oracle for the posteriors of one progressing row.
struct EnumeratedPosterior {
  std::vector<std::vector<double>> stage;  // T x N
  std::vector<double> subtype;             // T
  double loglik = 0.0;
};

inline EnumeratedPosterior oracle_posterior(const std::vector<double>& values,
                                            const std::vector<std::uint8_t>& missing,
                                            const sebm::SubtypeOrderings& S,
                                            const sebm::MixturePriors& priors,
                                            const sebm::EmissionParams& p) {
  const std::size_t T = S.n_subtypes(), N = S.n_biomarkers();
  EnumeratedPosterior out;
  out.stage.assign(T, std::vector<double>(N, 0.0));
  out.subtype.assign(T, 0.0);
  std::vector<std::vector<long double>> joint(T, std::vector<long double>(N));
  long double total = 0.0L;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < N; ++k) {
      const double ll =
          oracle_loglik_stage(values, missing, S.ranks[t], static_cast<int>(k), p);
      joint[t][k] = static_cast<long double>(priors.subtype[t]) * priors.stage(t, k) *
                    std::exp(static_cast<long double>(ll));
      total += joint[t][k];
    }
  out.loglik = static_cast<double>(std::log(total));
  for (std::size_t t = 0; t < T; ++t) {
    long double row = 0.0L;
    for (std::size_t k = 0; k < N; ++k) row += joint[t][k];
    out.subtype[t] = static_cast<double>(row / total);
    for (std::size_t k = 0; k < N; ++k)
      out.stage[t][k] = row > 0.0L ? static_cast<double>(joint[t][k] / row) : 0.0;
  }
  return out;
}

// O(N^2) discordant-pair count.
inline double oracle_kendall_tau(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  std::size_t disc = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((a[i] - a[j]) * (b[i] - b[j]) < 0) ++disc;
  return static_cast<double>(disc) / (0.5 * static_cast<double>(n) * (n - 1));
}

inline std::vector<int> random_permutation(std::size_t n, sebm::Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

// Small dense dataset with optional missing cells, values from the rng.
inline sebm::Dataset random_dataset(std::size_t J, std::size_t N, double missing_rate,
                                    sebm::Rng& rng) {
  sebm::Dataset d;
  d.values = sebm::Matrix(J, N);
  d.missing.assign(J * N, 0);
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t j = 0; j < J; ++j) {
    d.labels.push_back(j % 4 == 0 ? 0 : 1);
    d.participant_ids.push_back("p" + std::to_string(j));
    for (std::size_t n = 0; n < N; ++n) {
      d.values(j, n) = gauss(rng);
      if (unif(rng) < missing_rate) d.missing[j * N + n] = 1;
    }
  }
  for (std::size_t n = 0; n < N; ++n) {
    d.biomarker_names.push_back("bm" + std::to_string(n));
    bool any = false;
    for (std::size_t j = 0; j < J; ++j) any = any || !d.missing[j * N + n];
    if (!any) d.missing[n] = 0;  // keep the column non-empty
  }
  d.validate();
  return d;
}

inline sebm::EmissionParams random_emission(std::size_t N, sebm::Rng& rng) {
  sebm::EmissionParams p;
  std::uniform_real_distribution<double> mean(-3.0, 3.0), sd(0.5, 2.5);
  for (std::size_t n = 0; n < N; ++n) {
    p.theta_mean.push_back(mean(rng));
    p.theta_std.push_back(sd(rng));
    p.phi_mean.push_back(mean(rng));
    p.phi_std.push_back(sd(rng));
  }
  p.validate();
  return p;
}

inline sebm::MixturePriors random_priors(std::size_t T, std::size_t N, sebm::Rng& rng) {
  sebm::MixturePriors priors;
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  priors.subtype.resize(T);
  double s = 0.0;
  for (auto& v : priors.subtype) s += (v = unif(rng));
  for (auto& v : priors.subtype) v /= s;
  priors.stage = sebm::Matrix(T, N);
  for (std::size_t t = 0; t < T; ++t) {
    double rs = 0.0;
    for (std::size_t k = 0; k < N; ++k) rs += (priors.stage(t, k) = unif(rng));
    for (std::size_t k = 0; k < N; ++k) priors.stage(t, k) /= rs;
  }
  priors.validate();
  return priors;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testsup
