#include "sebm/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sebm {

void Dataset::validate() const {
  const std::size_t J = n_participants(), N = n_biomarkers();
  if (J < 1) throw std::invalid_argument("Dataset: need at least one participant");
  if (N < 2) throw std::invalid_argument("Dataset: need at least two biomarkers");
  if (labels.size() != J) throw std::invalid_argument("Dataset: labels length != J");
  if (missing.size() != J * N) throw std::invalid_argument("Dataset: missing mask shape");
  if (biomarker_names.size() != N)
    throw std::invalid_argument("Dataset: biomarker_names length != N");
  if (participant_ids.size() != J)
    throw std::invalid_argument("Dataset: participant_ids length != J");
  for (std::size_t j = 0; j < J; ++j) {
    if (labels[j] != 0 && labels[j] != 1)
      throw std::invalid_argument("Dataset: diagnosis labels must be 0 or 1");
    for (std::size_t n = 0; n < N; ++n)
      if (!is_missing(j, n) && !std::isfinite(values(j, n)))
        throw std::invalid_argument("Dataset: non-finite value at participant " +
                                    std::to_string(j) + ", biomarker " + std::to_string(n));
  }
  for (std::size_t n = 0; n < N; ++n) {
    bool any = false;
    for (std::size_t j = 0; j < J && !any; ++j) any = !is_missing(j, n);
    if (!any)
      throw std::invalid_argument("Dataset: biomarker column " + biomarker_names[n] +
                                  " is missing for every participant");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t N = n_biomarkers();
  Dataset out;
  out.values = Matrix(indices.size(), N);
  out.labels.reserve(indices.size());
  out.missing.resize(indices.size() * N);
  out.biomarker_names = biomarker_names;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t j = indices[r];
    if (j >= n_participants()) throw std::invalid_argument("Dataset::subset: index out of range");
    for (std::size_t n = 0; n < N; ++n) {
      out.values(r, n) = values(j, n);
      out.missing[r * N + n] = missing[j * N + n];
    }
    out.labels.push_back(labels[j]);
    out.participant_ids.push_back(participant_ids[j]);
  }
  return out;
}

void SubtypeOrderings::validate() const {
  if (ranks.empty()) throw std::invalid_argument("SubtypeOrderings: no subtypes");
  const std::size_t N = ranks[0].size();
  for (const auto& row : ranks) {
    if (row.size() != N) throw std::invalid_argument("SubtypeOrderings: ragged rank rows");
    std::vector<char> seen(N, 0);
    for (int r : row) {
      if (r < 0 || static_cast<std::size_t>(r) >= N || seen[r])
        throw std::invalid_argument("SubtypeOrderings: row is not a permutation");
      seen[r] = 1;
    }
  }
}

std::vector<int> inverse_permutation(std::span<const int> ranks) {
  std::vector<int> inv(ranks.size(), -1);
  for (std::size_t n = 0; n < ranks.size(); ++n) {
    const int r = ranks[n];
    if (r < 0 || static_cast<std::size_t>(r) >= ranks.size() || inv[r] != -1)
      throw std::invalid_argument("inverse_permutation: input is not a permutation");
    inv[r] = static_cast<int>(n);
  }
  return inv;
}

void EmissionParams::validate() const {
  const std::size_t N = theta_mean.size();
  if (theta_std.size() != N || phi_mean.size() != N || phi_std.size() != N)
    throw std::invalid_argument("EmissionParams: vector lengths disagree");
  for (std::size_t n = 0; n < N; ++n) {
    if (!std::isfinite(theta_mean[n]) || !std::isfinite(theta_std[n]) ||
        !std::isfinite(phi_mean[n]) || !std::isfinite(phi_std[n]))
      throw std::invalid_argument("EmissionParams: non-finite entry");
    if (theta_std[n] <= 0.0 || phi_std[n] <= 0.0)
      throw std::invalid_argument("EmissionParams: std must be strictly positive");
  }
}

void MixturePriors::validate() const {
  const std::size_t T = subtype.size();
  if (T == 0) throw std::invalid_argument("MixturePriors: empty subtype simplex");
  if (stage.rows != T) throw std::invalid_argument("MixturePriors: stage rows != T");
  double s = 0.0;
  for (double v : subtype) {
    if (v < 0.0) throw std::invalid_argument("MixturePriors: negative subtype weight");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw std::invalid_argument("MixturePriors: subtype simplex does not sum to 1");
  for (std::size_t t = 0; t < T; ++t) {
    double rs = 0.0;
    for (double v : stage.row(t)) {
      if (v < 0.0) throw std::invalid_argument("MixturePriors: negative stage weight");
      rs += v;
    }
    if (std::abs(rs - 1.0) > 1e-9)
      throw std::invalid_argument("MixturePriors: stage row " + std::to_string(t) +
                                  " does not sum to 1");
  }
}

}  // namespace sebm
