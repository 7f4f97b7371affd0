#include "sebm/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sebm {

void NigPrior::validate() const {
  if (!(n0 > 0.0) || !(nu0 > 0.0) || !(s0_sq > 0.0))
    throw std::invalid_argument("NigPrior: n0, nu0 and s0_sq must be positive");
  if (!std::isfinite(m0) || !std::isfinite(n0) || !std::isfinite(s0_sq) || !std::isfinite(nu0))
    throw std::invalid_argument("NigPrior: non-finite entry");
}

NigPosterior nig_update(std::span<const double> values,
                        std::span<const double> weights, const NigPrior& prior) {
  prior.validate();
  if (values.size() != weights.size())
    throw std::invalid_argument("nig_update: values/weights length mismatch");

  double W = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double w = weights[j];
    if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("nig_update: bad weight");
    if (w > 0.0 && !std::isfinite(values[j]))
      throw std::invalid_argument("nig_update: non-finite value with positive weight");
    W += w;
  }
  if (W <= 0.0) return {prior.m0, std::sqrt(prior.s0_sq), true};

  double xbar = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j)
    if (weights[j] > 0.0) xbar += weights[j] * values[j];
  xbar /= W;

  double S = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j)
    if (weights[j] > 0.0) S += weights[j] * (values[j] - xbar) * (values[j] - xbar);

  const double n_post = prior.n0 + W;
  const double nu_post = prior.nu0 + W;
  const double m_post = (prior.n0 * prior.m0 + W * xbar) / n_post;
  const double s_sq_post =
      (S + prior.nu0 * prior.s0_sq + (prior.n0 * W / n_post) * (xbar - prior.m0) * (xbar - prior.m0)) /
      nu_post;
  return {m_post, std::sqrt(s_sq_post), false};
}

double std_floor(double column_range) {
  return 1e-6 * (column_range > 0.0 ? column_range : 1.0);
}

namespace {

struct ClusterStats {
  double mean = 0.0, var = 0.0;
  std::size_t count = 0;
};

ClusterStats stats_of(std::span<const double> xs, std::span<const int> assign,
                      int cluster) {
  ClusterStats s;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (assign[i] == cluster) {
      s.mean += xs[i];
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean /= static_cast<double>(s.count);
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (assign[i] == cluster) s.var += (xs[i] - s.mean) * (xs[i] - s.mean);
  s.var /= static_cast<double>(s.count);
  return s;
}

}  // namespace

TwoClusterResult kmeans_two_cluster(std::span<const double> column,
                                    std::span<const std::uint8_t> missing,
                                    std::span<const std::uint8_t> labels) {
  const std::size_t J = column.size();
  if (missing.size() != J || labels.size() != J)
    throw std::invalid_argument("kmeans_two_cluster: length mismatch");

  std::vector<double> xs;
  std::vector<std::size_t> idx;  // row of each non-missing value
  for (std::size_t j = 0; j < J; ++j)
    if (!missing[j]) {
      xs.push_back(column[j]);
      idx.push_back(j);
    }
  if (xs.size() < 2)
    throw std::invalid_argument("kmeans_two_cluster: need at least two non-missing values");

  bool any_control = false;
  for (std::size_t j = 0; j < J; ++j)
    if (!missing[j] && labels[j] == 0) any_control = true;
  if (!any_control)
    throw std::invalid_argument("kmeans_two_cluster: no control observation in column");

  TwoClusterResult result;
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<int> assign(xs.size(), 0);

  if (hi == lo) {
    // All values identical: any split is equivalent; alternate assignments
    // so both clusters are non-empty, flag the column as degenerate.
    result.degenerate = true;
    for (std::size_t i = 0; i < xs.size(); ++i) assign[i] = i % 2 == 0 ? 0 : 1;
  } else {
    // Centroids at the 10th/90th percentile values; plain Lloyd iterations.
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    double c0 = sorted[static_cast<std::size_t>(0.1 * (sorted.size() - 1))];
    double c1 = sorted[static_cast<std::size_t>(0.9 * (sorted.size() - 1))];
    if (c0 == c1) {
      c0 = lo;
      c1 = hi;
    }
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const int a = std::abs(xs[i] - c0) <= std::abs(xs[i] - c1) ? 0 : 1;
        if (a != assign[i]) {
          assign[i] = a;
          changed = true;
        }
      }
      double s0 = 0.0, s1 = 0.0;
      std::size_t k0 = 0, k1 = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (assign[i] == 0) {
          s0 += xs[i];
          ++k0;
        } else {
          s1 += xs[i];
          ++k1;
        }
      }
      if (k0 == 0 || k1 == 0) {
        // One cluster emptied; move its centroid onto the point farthest
        // from the surviving centroid and iterate again.
        std::size_t far = 0;
        const double c = k0 == 0 ? c1 : c0;
        for (std::size_t i = 1; i < xs.size(); ++i)
          if (std::abs(xs[i] - c) > std::abs(xs[far] - c)) far = i;
        (k0 == 0 ? c0 : c1) = xs[far];
        continue;
      }
      c0 = s0 / static_cast<double>(k0);
      c1 = s1 / static_cast<double>(k1);
      if (!changed) break;
    }
  }

  ClusterStats st0 = stats_of(xs, assign, 0);
  ClusterStats st1 = stats_of(xs, assign, 1);
  const double floor = std_floor(hi - lo);
  st0.var = std::max(st0.var, floor * floor);
  st1.var = std::max(st1.var, floor * floor);

  // Label pre-event by control majority; ties go to the cluster whose stats
  // give controls the smaller mean absolute z-score.
  std::size_t controls0 = 0, controls1 = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (labels[idx[i]] == 0) (assign[i] == 0 ? controls0 : controls1)++;
  int pre;
  if (controls0 != controls1) {
    pre = controls0 > controls1 ? 0 : 1;
  } else {
    double z0 = 0.0, z1 = 0.0;
    std::size_t nc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (labels[idx[i]] == 0) {
        z0 += std::abs(xs[i] - st0.mean) / std::sqrt(st0.var);
        z1 += std::abs(xs[i] - st1.mean) / std::sqrt(st1.var);
        ++nc;
      }
    pre = (nc == 0 || z0 <= z1) ? 0 : 1;
  }

  const ClusterStats& pre_st = pre == 0 ? st0 : st1;
  const ClusterStats& post_st = pre == 0 ? st1 : st0;
  result.pre_cluster = pre;
  result.pre_mean = pre_st.mean;
  result.pre_var = pre_st.var;
  result.post_mean = post_st.mean;
  result.post_var = post_st.var;
  result.assignment.assign(J, -1);
  for (std::size_t i = 0; i < xs.size(); ++i) result.assignment[idx[i]] = assign[i];
  return result;
}

InitResult initialize_params(const Dataset& data, bool blind) {
  (void)blind;  // labels are permitted at initialization in both protocols
  const std::size_t J = data.n_participants(), N = data.n_biomarkers();
  InitResult out;
  out.params.theta_mean.resize(N);
  out.params.theta_std.resize(N);
  out.params.phi_mean.resize(N);
  out.params.phi_std.resize(N);
  out.theta_prior.resize(N);
  out.phi_prior.resize(N);

  std::vector<double> column(J), w_pre(J), w_post(J);
  std::vector<std::uint8_t> col_missing(J);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < J; ++j) {
      column[j] = data.values(j, n);
      col_missing[j] = data.missing[j * N + n];
    }
    TwoClusterResult km;
    try {
      km = kmeans_two_cluster(column, col_missing, data.labels);
    } catch (const std::exception& e) {
      throw std::runtime_error("initialize_params: biomarker " +
                               data.biomarker_names[n] + ": " + e.what());
    }

    out.phi_prior[n] = {km.pre_mean, 1.0, km.pre_var, 1.0};
    out.theta_prior[n] = {km.post_mean, 1.0, km.post_var, 1.0};

    for (std::size_t j = 0; j < J; ++j) {
      const bool in_pre = km.assignment[j] == km.pre_cluster;
      w_pre[j] = (km.assignment[j] >= 0 && in_pre) ? 1.0 : 0.0;
      w_post[j] = (km.assignment[j] >= 0 && !in_pre) ? 1.0 : 0.0;
    }
    const NigPosterior phi = nig_update(column, w_pre, out.phi_prior[n]);
    const NigPosterior theta = nig_update(column, w_post, out.theta_prior[n]);
    out.params.phi_mean[n] = phi.mu_hat;
    out.params.phi_std[n] = phi.sigma_hat;
    out.params.theta_mean[n] = theta.mu_hat;
    out.params.theta_std[n] = theta.sigma_hat;
  }
  out.params.validate();
  return out;
}

}  // namespace sebm
