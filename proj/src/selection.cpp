#include "sebm/selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sebm/model.hpp"

namespace sebm::selection {

std::vector<std::vector<std::size_t>> stratified_kfold(
    std::span<const std::uint8_t> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: need K >= 2");
  std::vector<std::size_t> healthy, progressing;
  for (std::size_t j = 0; j < labels.size(); ++j)
    (labels[j] == 0 ? healthy : progressing).push_back(j);
  for (const auto* cls : {&healthy, &progressing})
    if (cls->size() < static_cast<std::size_t>(k))
      throw std::invalid_argument("stratified_kfold: a class has fewer members than K");

  Rng rng(derive_seed(seed, "kfold", 0));
  std::shuffle(healthy.begin(), healthy.end(), rng);
  std::shuffle(progressing.begin(), progressing.end(), rng);

  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < healthy.size(); ++i) folds[i % k].push_back(healthy[i]);
  for (std::size_t i = 0; i < progressing.size(); ++i)
    folds[i % k].push_back(progressing[i]);
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

CvicResult cvic_for_T(const Dataset& data, int n_subtypes, int k_folds,
                      const mcmc::ChainConfig& config) {
  if (n_subtypes < 1) throw std::invalid_argument("cvic_for_T: T must be >= 1");
  CvicResult result;

  mcmc::ChainConfig fold_config = config;
  fold_config.n_subtypes = n_subtypes;

  if (k_folds == 1) {
    // Degenerate mode for tests: in-sample log-likelihood only.
    fold_config.seed = derive_seed(config.seed, "fold", 0);
    const mcmc::FitResult fit = mcmc::run_chain(data, fold_config);
    result.fold_logliks.push_back(fit.best_sample.loglik);
    result.cvic = -2.0 * fit.best_sample.loglik;
    return result;
  }

  const auto folds = stratified_kfold(data.labels, k_folds, config.seed);
  for (int f = 0; f < k_folds; ++f) {
    std::vector<std::size_t> train_idx;
    for (int g = 0; g < k_folds; ++g)
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    std::sort(train_idx.begin(), train_idx.end());

    try {
      const Dataset train = data.subset(train_idx);
      Dataset held_out = data.subset(folds[f]);
      if (fold_config.blind)  // score held-out rows the way the model was fit
        std::fill(held_out.labels.begin(), held_out.labels.end(), 1);
      fold_config.seed = derive_seed(config.seed, "fold", static_cast<std::uint64_t>(f));
      const mcmc::FitResult fit = mcmc::run_chain(train, fold_config);
      // Out-of-sample likelihood under the train-fit state, untouched.
      const double held_out_loglik =
          total_loglik(held_out, fit.best_sample.orderings, fit.best_sample.priors,
                       fit.best_sample.params);
      result.fold_logliks.push_back(held_out_loglik);
    } catch (const std::exception& e) {
      throw std::runtime_error("cvic_for_T: fold " + std::to_string(f) + ": " + e.what());
    }
  }
  const double total =
      std::accumulate(result.fold_logliks.begin(), result.fold_logliks.end(), 0.0);
  result.cvic = -2.0 * total;
  return result;
}

int select_T(const std::map<int, double>& cvic_scores) {
  if (cvic_scores.empty()) throw std::invalid_argument("select_T: empty score map");
  double best = cvic_scores.begin()->second;
  for (const auto& [t, score] : cvic_scores) best = std::min(best, score);
  for (const auto& [t, score] : cvic_scores)  // map iterates in ascending T
    if (score - best < kCvicThreshold) return t;
  return cvic_scores.begin()->first;  // unreachable
}

}  // namespace sebm::selection
