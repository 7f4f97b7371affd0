// Command-line driver: synthetic cohort generation, model fitting, subtype
// count selection, evaluation, and report aggregation.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sebm/io.hpp"
#include "sebm/metrics.hpp"
#include "sebm/sampler.hpp"
#include "sebm/selection.hpp"
#include "sebm/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void run_parallel(std::size_t n_tasks, int jobs,
                  const std::function<void(std::size_t)>& task) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(jobs, 1), n_tasks == 0 ? 1 : n_tasks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

struct FitOptions {
  std::string data_path;
  int subtypes = 1;
  int iterations = 10000;
  int burn_in = 500;
  std::uint64_t seed = 0;
  bool blind = false;
  int replications = 1;
  double dirichlet_alpha = 1.0;
  int jobs = 1;
};

// Runs the requested replications with derived seeds and keeps the best.
sebm::io::FitDocument fit_dataset(const sebm::Dataset& data, const FitOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<sebm::mcmc::FitResult> fits(opt.replications);
  std::vector<sebm::mcmc::ChainConfig> configs(opt.replications);
  run_parallel(opt.replications, opt.jobs, [&](std::size_t rep) {
    sebm::mcmc::ChainConfig config;
    config.iterations = opt.iterations;
    config.burn_in = opt.burn_in;
    config.n_subtypes = opt.subtypes;
    config.blind = opt.blind;
    config.dirichlet_alpha = opt.dirichlet_alpha;
    config.seed = sebm::derive_seed(opt.seed, "fit", rep);
    configs[rep] = config;
    fits[rep] = sebm::mcmc::run_chain(data, config);
  });

  std::size_t best = 0;
  for (std::size_t rep = 1; rep < fits.size(); ++rep)
    if (fits[rep].best_sample.loglik > fits[best].best_sample.loglik) best = rep;

  sebm::io::FitDocument doc;
  doc.config = configs[best];
  doc.result = std::move(fits[best]);
  doc.biomarker_names = data.biomarker_names;
  doc.participant_ids = data.participant_ids;
  for (const auto& fit : fits)
    doc.replication_logliks.push_back(
        &fit == &fits[best] ? doc.result.best_sample.loglik : fit.best_sample.loglik);
  doc.selected_replication = static_cast<int>(best);
  doc.data_path = opt.data_path;
  doc.runtime_seconds = seconds_since(start);
  return doc;
}

int cmd_generate(int experiment, std::size_t participants, double healthy_ratio,
                 int replicates, std::uint64_t seed, const std::string& params_path,
                 const std::string& out_dir) {
  sebm::synth::BiomarkerTable table = params_path.empty()
                                          ? sebm::synth::default_biomarker_table()
                                          : sebm::io::read_biomarker_table(params_path);
  fs::create_directories(out_dir);
  int succeeded = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    sebm::synth::GenerationSpec spec;
    spec.experiment_id = experiment;
    spec.participants = participants;
    spec.healthy_ratio = healthy_ratio;
    spec.seed = sebm::derive_seed(seed, "generate", static_cast<std::uint64_t>(rep));
    spec.biomarkers = table;
    char stem[128];
    std::snprintf(stem, sizeof stem, "exp%d_J%zu_R%s_rep%d", experiment, participants,
                  format_ratio(healthy_ratio).c_str(), rep);
    try {
      const sebm::synth::SyntheticData sd = sebm::synth::generate_dataset(spec);
      const fs::path base = fs::path(out_dir) / stem;
      sebm::io::write_dataset_csv(base.string() + ".csv", sd.dataset);
      sebm::io::write_ground_truth(base.string() + ".truth.json", sd.truth,
                                   sd.dataset.biomarker_names, participants,
                                   healthy_ratio);
      ++succeeded;
    } catch (const std::exception& e) {
      std::cerr << "replicate " << rep << " (" << stem << ") failed: " << e.what()
                << "\n";
    }
  }
  std::cout << "wrote " << succeeded << "/" << replicates << " dataset pairs to "
            << out_dir << "\n";
  return succeeded > 0 ? 0 : 1;
}

int cmd_fit(const FitOptions& opt, const std::string& out_path) {
  const sebm::Dataset data = sebm::io::read_dataset_csv(opt.data_path);
  const sebm::io::FitDocument doc = fit_dataset(data, opt);
  if (doc.result.non_finite_rejections > 0)
    std::cerr << "warning: " << doc.result.non_finite_rejections
              << " proposals rejected on a non-finite log-likelihood\n";
  sebm::io::write_fit(out_path, doc);
  std::cout << "loglik " << doc.result.best_sample.loglik << " (replication "
            << doc.selected_replication << "), " << doc.runtime_seconds << " s -> "
            << out_path << "\n";
  return 0;
}

int cmd_select(const FitOptions& opt, int k_folds, int t_min, int t_max,
               const std::string& scores_path, const std::string& out_path,
               std::string csv_path) {
  const auto start = std::chrono::steady_clock::now();
  if (csv_path.empty()) csv_path = fs::path(out_path).replace_extension(".csv").string();

  std::map<int, double> scores;
  std::map<int, std::vector<double>> fold_logliks;
  if (!scores_path.empty()) {
    // Test hook: apply the selection rule to an injected score table.
    const json doc = json::parse(sebm::io::read_text(scores_path));
    for (const auto& [key, value] : doc.items())
      scores[std::stoi(key)] = value.get<double>();
  } else {
    const sebm::Dataset data = sebm::io::read_dataset_csv(opt.data_path);
    std::vector<int> candidates;
    for (int t = t_min; t <= t_max; ++t) candidates.push_back(t);
    std::vector<sebm::selection::CvicResult> results(candidates.size());
    run_parallel(candidates.size(), opt.jobs, [&](std::size_t i) {
      sebm::mcmc::ChainConfig config;
      config.iterations = opt.iterations;
      config.burn_in = opt.burn_in;
      config.blind = opt.blind;
      config.dirichlet_alpha = opt.dirichlet_alpha;
      config.seed = opt.seed;
      results[i] = sebm::selection::cvic_for_T(data, candidates[i], k_folds, config);
    });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      scores[candidates[i]] = results[i].cvic;
      fold_logliks[candidates[i]] = results[i].fold_logliks;
    }
  }
  const int selected = sebm::selection::select_T(scores);

  ordered_json out;
  out["spec_version"] = sebm::io::kSpecVersion;
  ordered_json config;
  config["data"] = opt.data_path;
  config["k_folds"] = k_folds;
  config["t_min"] = t_min;
  config["t_max"] = t_max;
  config["iterations"] = opt.iterations;
  config["burn_in"] = opt.burn_in;
  config["seed"] = opt.seed;
  config["blind"] = opt.blind;
  config["scores_injected"] = !scores_path.empty();
  out["config"] = std::move(config);
  out["table"] = ordered_json::array();
  std::string csv = "T";
  for (int f = 0; f < (scores_path.empty() ? k_folds : 0); ++f)
    csv += ",fold_" + std::to_string(f);
  csv += ",cvic,selected\n";
  for (const auto& [t, score] : scores) {
    ordered_json row;
    row["T"] = t;
    row["fold_logliks"] = fold_logliks.count(t) ? fold_logliks[t] : std::vector<double>{};
    row["cvic"] = score;
    row["selected"] = t == selected;
    out["table"].push_back(std::move(row));
    char buf[64];
    csv += std::to_string(t);
    for (const double ll : fold_logliks.count(t) ? fold_logliks[t] : std::vector<double>{}) {
      std::snprintf(buf, sizeof buf, ",%.17g", ll);
      csv += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%d\n", score, t == selected ? 1 : 0);
    csv += buf;
  }
  out["selected_T"] = selected;
  out["runtime_seconds"] = seconds_since(start);
  sebm::io::atomic_write_text(out_path, out.dump(2) + "\n");
  sebm::io::atomic_write_text(csv_path, csv);
  std::cout << "selected T = " << selected << " -> " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& fit_path,
                 const std::string& out_path) {
  const sebm::synth::GroundTruth truth = sebm::io::read_ground_truth(truth_path);
  const sebm::io::FitDocument fit = sebm::io::read_fit(fit_path);
  const std::size_t J = truth.subtype_of.size();
  if (fit.result.ml_subtype.size() != J)
    throw std::runtime_error("evaluate: truth and fit cover different participants");

  const auto match = sebm::metrics::match_and_score_orderings(
      fit.result.best_sample.orderings.ranks, truth.orderings.ranks);

  std::vector<std::uint8_t> labels(J);
  for (std::size_t j = 0; j < J; ++j) labels[j] = truth.subtype_of[j] >= 0 ? 1 : 0;
  const double mean_stage =
      sebm::metrics::control_mean_stage(fit.result.ml_stage, labels);

  ordered_json out;
  out["spec_version"] = sebm::io::kSpecVersion;
  ordered_json config;
  config["truth"] = truth_path;
  config["fit"] = fit_path;
  out["config"] = std::move(config);
  out["experiment_id"] = truth.experiment_id;
  out["participants"] = J;
  out["seed"] = truth.seed;
  out["T_true"] = truth.n_subtypes;
  out["T_est"] = fit.result.best_sample.orderings.ranks.size();
  out["tau_mean"] = match.mean_tau;
  if (truth.n_subtypes > 1) {
    std::vector<int> est, ref;
    for (std::size_t j = 0; j < J; ++j)
      if (truth.subtype_of[j] >= 0) {
        est.push_back(fit.result.ml_subtype[j]);
        ref.push_back(truth.subtype_of[j]);
      }
    out["ari"] = sebm::metrics::adjusted_rand_index(est, ref);
  } else {
    out["ari"] = nullptr;  // subtyping is undefined with a single subtype
  }
  out["control_mean_stage"] = mean_stage;
  out["runtime_seconds"] = fit.runtime_seconds;
  sebm::io::atomic_write_text(out_path, out.dump(2) + "\n");
  std::cout << "tau " << match.mean_tau << ", control mean stage " << mean_stage
            << " -> " << out_path << "\n";
  return 0;
}

int cmd_aggregate(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<std::string> files;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      for (const auto& entry : fs::directory_iterator(input))
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    } else {
      files.push_back(input);
    }
  }
  std::sort(files.begin(), files.end());
  std::string csv =
      "file,experiment_id,participants,seed,T_true,T_est,tau_mean,ari,"
      "control_mean_stage,runtime_seconds\n";
  int rows = 0;
  for (const auto& file : files) {
    const json doc = json::parse(sebm::io::read_text(file));
    if (!doc.contains("tau_mean")) continue;  // not an evaluation report
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%llu,%d,%d,%.17g,", file.c_str(),
                  doc.at("experiment_id").get<int>(),
                  doc.at("participants").get<std::size_t>(),
                  static_cast<unsigned long long>(doc.at("seed").get<std::uint64_t>()),
                  doc.at("T_true").get<int>(), doc.at("T_est").get<int>(),
                  doc.at("tau_mean").get<double>());
    csv += buf;
    if (doc.at("ari").is_null()) {
      csv += ",";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,", doc.at("ari").get<double>());
      csv += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n",
                  doc.at("control_mean_stage").get<double>(),
                  doc.at("runtime_seconds").get<double>());
    csv += buf;
    ++rows;
  }
  sebm::io::atomic_write_text(out_path, csv);
  std::cout << "aggregated " << rows << " reports -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subtype event-based model: generate, fit, select, evaluate"};
  app.require_subcommand(1);
  app.set_config("--config");

  int jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for replicate/fold fan-out")
      ->envname("SEBM_JOBS")
      ->check(CLI::PositiveNumber);

  // generate
  auto* generate = app.add_subcommand("generate", "Write synthetic dataset/truth pairs");
  int experiment = 1;
  std::size_t participants = 300;
  double healthy_ratio = 0.25;
  int replicates = 1;
  std::uint64_t seed = 0;
  std::string params_path, out_dir;
  generate->add_option("--experiment", experiment, "Experiment recipe (1-11)")
      ->required()
      ->check(CLI::Range(1, 11));
  generate->add_option("--participants", participants, "Total participants");
  generate->add_option("--healthy-ratio", healthy_ratio, "Fraction of controls")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--replicates", replicates, "Datasets to generate")
      ->check(CLI::PositiveNumber);
  generate->add_option("--seed", seed, "Root seed");
  generate->add_option("--params", params_path, "Biomarker parameter JSON")
      ->check(CLI::ExistingFile);
  generate->add_option("--out", out_dir, "Output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit orderings/params on a dataset CSV");
  FitOptions opt;
  std::string fit_out;
  fit->add_option("--data", opt.data_path, "Dataset CSV")->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--subtypes", opt.subtypes, "Number of subtypes T")
      ->required()
      ->check(CLI::PositiveNumber);
  fit->add_option("--iterations", opt.iterations, "MCMC iterations")
      ->check(CLI::PositiveNumber);
  fit->add_option("--burn-in", opt.burn_in, "Burn-in iterations");
  fit->add_option("--seed", opt.seed, "Root seed");
  fit->add_flag("--blind", opt.blind, "Use labels only at initialization");
  fit->add_option("--replications", opt.replications, "Independent chains; keep best")
      ->check(CLI::PositiveNumber);
  fit->add_option("--dirichlet-alpha", opt.dirichlet_alpha, "Symmetric prior weight");
  fit->add_option("--out", fit_out, "Output fit JSON")->required();

  // select
  auto* select = app.add_subcommand("select", "Choose T by cross-validated CVIC");
  FitOptions sopt;
  int k_folds = 5, t_min = 1, t_max = 5;
  std::string scores_path, select_out, select_csv;
  select->add_option("--data", sopt.data_path, "Dataset CSV")->check(CLI::ExistingFile);
  select->add_option("--k-folds", k_folds, "Stratified folds")->check(CLI::PositiveNumber);
  select->add_option("--t-min", t_min, "Smallest T candidate")->check(CLI::PositiveNumber);
  select->add_option("--t-max", t_max, "Largest T candidate")->check(CLI::PositiveNumber);
  select->add_option("--iterations", sopt.iterations, "MCMC iterations per fold fit");
  select->add_option("--burn-in", sopt.burn_in, "Burn-in iterations");
  select->add_option("--seed", sopt.seed, "Root seed");
  select->add_flag("--blind", sopt.blind, "Blind protocol for fold fits");
  select->add_option("--scores", scores_path,
                     "Skip fitting; apply the rule to a {T: score} JSON")
      ->check(CLI::ExistingFile);
  select->add_option("--out", select_out, "Output JSON")->required();
  select->add_option("--csv", select_csv, "Output CVIC table CSV");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a fit against ground truth");
  std::string truth_path, fit_path, eval_out;
  evaluate->add_option("--truth", truth_path, "Ground-truth JSON")->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--fit", fit_path, "Fit JSON")->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Output report JSON")->required();

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Roll reports into a CSV table");
  std::vector<std::string> report_inputs;
  std::string aggregate_out;
  aggregate->add_option("--reports", report_inputs, "Report files or directories")
      ->required();
  aggregate->add_option("--out", aggregate_out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate)
      return cmd_generate(experiment, participants, healthy_ratio, replicates, seed,
                          params_path, out_dir);
    if (*fit) {
      opt.jobs = jobs;
      return cmd_fit(opt, fit_out);
    }
    if (*select) {
      sopt.jobs = jobs;
      if (scores_path.empty() && sopt.data_path.empty())
        throw CLI::RequiredError("--data (or --scores)");
      if (t_min > t_max) throw CLI::ValidationError("--t-min must be <= --t-max");
      return cmd_select(sopt, k_folds, t_min, t_max, scores_path, select_out, select_csv);
    }
    if (*evaluate) return cmd_evaluate(truth_path, fit_path, eval_out);
    if (*aggregate) return cmd_aggregate(report_inputs, aggregate_out);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
