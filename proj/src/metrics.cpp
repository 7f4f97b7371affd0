#include "sebm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sebm/types.hpp"

namespace sebm::metrics {

namespace {

// Inversion count by merge sort.
std::size_t count_inversions(std::vector<int>& v, std::vector<int>& buf,
                             std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::size_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      buf[k++] = v[i++];
    } else {
      buf[k++] = v[j++];
      inv += mid - i;
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

double kendall_tau_normalized(std::span<const int> a, std::span<const int> b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("kendall_tau_normalized: length mismatch");
  if (n < 2) throw std::invalid_argument("kendall_tau_normalized: need at least 2 items");
  const std::vector<int> inv_a = inverse_permutation(a);
  (void)inverse_permutation(b);  // validates b
  // Walk items in a's rank order and count inversions of their b-ranks.
  std::vector<int> seq(n);
  for (std::size_t pos = 0; pos < n; ++pos) seq[pos] = b[inv_a[pos]];
  std::vector<int> buf(n);
  const std::size_t discordant = count_inversions(seq, buf, 0, n);
  return static_cast<double>(discordant) / (0.5 * static_cast<double>(n) * (n - 1));
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
  const std::size_t n_rows = cost.rows, n_cols = cost.cols;
  const std::size_t n = std::max(n_rows, n_cols);
  double pad = 0.0;
  for (double c : cost.data) pad = std::max(pad, std::abs(c));
  pad = 2.0 * pad + 1.0;  // dummy cells cost more than any real cell

  auto cell = [&](std::size_t r, std::size_t c) {
    return (r < n_rows && c < n_cols) ? cost(r, c) : pad;
  };

  // Assignment by shortest augmenting paths with potentials (O(n^3)).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // column -> row (1-based)
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t r = 1; r <= n; ++r) {
    match[0] = r;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n_rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = match[j];
    if (r >= 1 && r <= n_rows && j <= n_cols) assignment[r - 1] = static_cast<int>(j - 1);
  }
  return assignment;
}

MatchResult match_and_score_orderings(const std::vector<std::vector<int>>& estimated,
                                      const std::vector<std::vector<int>>& truth) {
  if (estimated.empty() || truth.empty())
    throw std::invalid_argument("match_and_score_orderings: empty input");
  Matrix cost(estimated.size(), truth.size());
  for (std::size_t i = 0; i < estimated.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j)
      cost(i, j) = kendall_tau_normalized(estimated[i], truth[j]);

  const std::vector<int> assignment = hungarian_assignment(cost);
  MatchResult result;
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] >= 0) {
      result.matching.emplace_back(static_cast<int>(i), assignment[i]);
      total += cost(i, assignment[i]);
    }
  if (result.matching.empty())
    throw std::logic_error("match_and_score_orderings: no real matches");
  result.mean_tau = total / static_cast<double>(result.matching.size());
  return result;
}

double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b) {
  const std::size_t n = labels_a.size();
  if (labels_b.size() != n) throw std::invalid_argument("adjusted_rand_index: length mismatch");
  if (n < 2) throw std::invalid_argument("adjusted_rand_index: undefined for a single item");

  auto compress = [](std::span<const int> labels) {
    std::vector<int> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), labels[i]) -
                                sorted.begin());
    return std::pair{out, sorted.size()};
  };
  const auto [a, ka] = compress(labels_a);
  const auto [b, kb] = compress(labels_b);

  Matrix table(ka, kb, 0.0);
  std::vector<double> row_sum(ka, 0.0), col_sum(kb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    table(a[i], b[i]) += 1.0;
    row_sum[a[i]] += 1.0;
    col_sum[b[i]] += 1.0;
  }
  auto choose2 = [](double m) { return 0.5 * m * (m - 1.0); };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (double c : table.data) sum_cells += choose2(c);
  for (double r : row_sum) sum_rows += choose2(r);
  for (double c : col_sum) sum_cols += choose2(c);
  const double total = choose2(static_cast<double>(n));
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both partitions trivial and equal
  return (sum_cells - expected) / (maximum - expected);
}

double control_mean_stage(std::span<const int> ml_stage_counts,
                          std::span<const std::uint8_t> labels) {
  if (ml_stage_counts.size() != labels.size())
    throw std::invalid_argument("control_mean_stage: length mismatch");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (labels[j] == 0) {
      total += ml_stage_counts[j];
      ++count;
    }
  if (count == 0) throw std::invalid_argument("control_mean_stage: no controls");
  return total / static_cast<double>(count);
}

double subtype_count_mae(std::span<const int> estimates, std::span<const int> truths) {
  if (estimates.size() != truths.size() || estimates.empty())
    throw std::invalid_argument("subtype_count_mae: bad lengths");
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    total += std::abs(estimates[i] - truths[i]);
  return total / static_cast<double>(estimates.size());
}

double kendalls_w(const std::vector<std::vector<int>>& sequences) {
  const std::size_t T = sequences.size();
  if (T < 2) throw std::invalid_argument("kendalls_w: need at least two sequences");
  const std::size_t N = sequences[0].size();
  std::vector<double> rank_sum(N, 0.0);
  for (const auto& seq : sequences) {
    (void)inverse_permutation(seq);  // validates
    if (seq.size() != N) throw std::invalid_argument("kendalls_w: ragged sequences");
    for (std::size_t n = 0; n < N; ++n) rank_sum[n] += seq[n];
  }
  const double mean = std::accumulate(rank_sum.begin(), rank_sum.end(), 0.0) /
                      static_cast<double>(N);
  double S = 0.0;
  for (double r : rank_sum) S += (r - mean) * (r - mean);
  const double nn = static_cast<double>(N);
  return 12.0 * S / (static_cast<double>(T) * T * (nn * nn * nn - nn));
}

double random_ordering_baseline(const std::vector<std::vector<int>>& truth,
                                int trials, Rng& rng) {
  if (truth.empty() || trials < 1)
    throw std::invalid_argument("random_ordering_baseline: bad input");
  const std::size_t N = truth[0].size();
  double total = 0.0;
  std::vector<std::vector<int>> guess(truth.size(), std::vector<int>(N));
  for (int trial = 0; trial < trials; ++trial) {
    for (auto& row : guess) {
      std::iota(row.begin(), row.end(), 0);
      std::shuffle(row.begin(), row.end(), rng);
    }
    total += match_and_score_orderings(guess, truth).mean_tau;
  }
  return total / trials;
}

double random_subtype_count_mae(int t_lo, int t_hi, int trials, Rng& rng) {
  if (t_lo > t_hi || trials < 1)
    throw std::invalid_argument("random_subtype_count_mae: bad input");
  std::uniform_int_distribution<int> pick(t_lo, t_hi);
  double total = 0.0;
  for (int i = 0; i < trials; ++i) total += std::abs(pick(rng) - pick(rng));
  return total / trials;
}

double random_staging_baseline(int max_stage, int trials, Rng& rng) {
  if (max_stage < 0 || trials < 1)
    throw std::invalid_argument("random_staging_baseline: bad input");
  std::uniform_int_distribution<int> pick(0, max_stage);
  double total = 0.0;
  for (int i = 0; i < trials; ++i) total += pick(rng);
  return total / trials;
}

double random_subtyping_baseline(std::span<const int> truth, int n_subtypes,
                                 int trials, Rng& rng) {
  if (truth.size() < 2 || n_subtypes < 1 || trials < 1)
    throw std::invalid_argument("random_subtyping_baseline: bad input");
  std::uniform_int_distribution<int> pick(0, n_subtypes - 1);
  std::vector<int> guess(truth.size());
  double total = 0.0;
  for (int i = 0; i < trials; ++i) {
    for (int& g : guess) g = pick(rng);
    total += adjusted_rand_index(guess, truth);
  }
  return total / trials;
}

}  // namespace sebm::metrics
