#include "sebm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sebm::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line_no,
                              const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) parse_error(path, 1, "empty file");
  ++line_no;
  const std::vector<std::string> header = split_line(line);
  if (header.size() < 4 || header[0] != "participant_id" || header[1] != "diagnosis")
    parse_error(path, line_no, "header must be participant_id,diagnosis,<biomarkers...>");

  Dataset data;
  data.biomarker_names.assign(header.begin() + 2, header.end());
  const std::size_t N = data.biomarker_names.size();

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != N + 2)
      parse_error(path, line_no,
                  "expected " + std::to_string(N + 2) + " fields, got " +
                      std::to_string(fields.size()));
    data.participant_ids.push_back(fields[0]);
    if (fields[1] != "0" && fields[1] != "1")
      parse_error(path, line_no, "diagnosis must be 0 or 1, got '" + fields[1] + "'");
    data.labels.push_back(fields[1] == "1" ? 1 : 0);
    for (std::size_t n = 0; n < N; ++n) {
      const std::string& cell = fields[n + 2];
      if (cell.empty()) {
        values.push_back(0.0);
        data.missing.push_back(1);
        continue;
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
        data.missing.push_back(0);
      } catch (const std::exception&) {
        parse_error(path, line_no, "bad numeric value '" + cell + "'");
      }
    }
  }
  const std::size_t J = data.participant_ids.size();
  data.values = Matrix(J, N);
  data.values.data = std::move(values);
  try {
    data.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  out << "participant_id,diagnosis";
  for (const auto& name : data.biomarker_names) out << ',' << name;
  out << '\n';
  const std::size_t N = data.n_biomarkers();
  for (std::size_t j = 0; j < data.n_participants(); ++j) {
    out << data.participant_ids[j] << ',' << static_cast<int>(data.labels[j]);
    for (std::size_t n = 0; n < N; ++n) {
      out << ',';
      if (!data.is_missing(j, n)) out << format_double(data.values(j, n));
    }
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

synth::BiomarkerTable read_biomarker_table(const std::string& path) {
  const json doc = json::parse(read_text(path));
  synth::BiomarkerTable table;
  for (const auto& row : doc.at("biomarkers")) {
    synth::BiomarkerDef def;
    def.name = row.at("name").get<std::string>();
    def.theta_mean = row.at("theta_mean").get<double>();
    def.theta_std = row.at("theta_std").get<double>();
    def.phi_mean = row.at("phi_mean").get<double>();
    def.phi_std = row.at("phi_std").get<double>();
    if (row.contains("irregular_family"))
      def.family = synth::family_from_name(row.at("irregular_family").get<std::string>());
    table.push_back(std::move(def));
  }
  if (table.size() < 2) throw std::runtime_error(path + ": need at least 2 biomarkers");
  return table;
}

void write_biomarker_table(const std::string& path, const synth::BiomarkerTable& table) {
  ordered_json doc;
  doc["spec_version"] = kSpecVersion;
  doc["biomarkers"] = ordered_json::array();
  for (const auto& def : table) {
    ordered_json row;
    row["name"] = def.name;
    row["theta_mean"] = def.theta_mean;
    row["theta_std"] = def.theta_std;
    row["phi_mean"] = def.phi_mean;
    row["phi_std"] = def.phi_std;
    row["irregular_family"] = synth::family_name(def.family);
    doc["biomarkers"].push_back(std::move(row));
  }
  atomic_write_text(path, doc.dump(2) + "\n");
}

void write_ground_truth(const std::string& path, const synth::GroundTruth& truth,
                        const std::vector<std::string>& biomarker_names,
                        std::size_t participants, double healthy_ratio) {
  ordered_json doc;
  doc["spec_version"] = kSpecVersion;
  doc["experiment_id"] = truth.experiment_id;
  doc["seed"] = truth.seed;
  doc["participants"] = participants;
  doc["healthy_ratio"] = healthy_ratio;
  doc["n_subtypes"] = truth.n_subtypes;
  doc["biomarkers"] = biomarker_names;
  doc["ranks"] = truth.orderings.ranks;
  if (truth.event_times.rows > 0) {
    ordered_json times = ordered_json::array();
    for (std::size_t t = 0; t < truth.event_times.rows; ++t) {
      const auto row = truth.event_times.row(t);
      times.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["event_times"] = std::move(times);
  } else {
    doc["event_times"] = nullptr;
  }
  doc["dispersion"] =
      truth.dispersion >= 0.0 ? ordered_json(truth.dispersion) : ordered_json(nullptr);
  doc["dm_prior"] = truth.dm_prior;
  doc["subtype_of"] = truth.subtype_of;
  doc["stage_of"] = truth.stage_of;
  atomic_write_text(path, doc.dump(2) + "\n");
}

synth::GroundTruth read_ground_truth(const std::string& path) {
  const json doc = json::parse(read_text(path));
  synth::GroundTruth truth;
  truth.experiment_id = doc.at("experiment_id").get<int>();
  truth.seed = doc.at("seed").get<std::uint64_t>();
  truth.n_subtypes = doc.at("n_subtypes").get<int>();
  truth.orderings.ranks = doc.at("ranks").get<std::vector<std::vector<int>>>();
  truth.orderings.validate();
  if (!doc.at("event_times").is_null()) {
    const auto times = doc.at("event_times").get<std::vector<std::vector<double>>>();
    truth.event_times = Matrix(times.size(), times.empty() ? 0 : times[0].size());
    for (std::size_t t = 0; t < times.size(); ++t)
      std::copy(times[t].begin(), times[t].end(), truth.event_times.row(t).begin());
  }
  truth.dispersion = doc.at("dispersion").is_null() ? -1.0 : doc.at("dispersion").get<double>();
  truth.dm_prior = doc.at("dm_prior").get<double>();
  truth.subtype_of = doc.at("subtype_of").get<std::vector<int>>();
  truth.stage_of = doc.at("stage_of").get<std::vector<double>>();
  return truth;
}

namespace {

ordered_json emission_json(const EmissionParams& params,
                           const std::vector<std::string>& names) {
  ordered_json rows = ordered_json::array();
  for (std::size_t n = 0; n < params.n_biomarkers(); ++n) {
    ordered_json row;
    row["name"] = n < names.size() ? names[n] : std::to_string(n);
    row["theta_mean"] = params.theta_mean[n];
    row["theta_std"] = params.theta_std[n];
    row["phi_mean"] = params.phi_mean[n];
    row["phi_std"] = params.phi_std[n];
    rows.push_back(std::move(row));
  }
  return rows;
}

EmissionParams emission_from_json(const json& rows) {
  EmissionParams params;
  for (const auto& row : rows) {
    params.theta_mean.push_back(row.at("theta_mean").get<double>());
    params.theta_std.push_back(row.at("theta_std").get<double>());
    params.phi_mean.push_back(row.at("phi_mean").get<double>());
    params.phi_std.push_back(row.at("phi_std").get<double>());
  }
  return params;
}

}  // namespace

void write_fit(const std::string& path, const FitDocument& doc) {
  const std::size_t T = doc.result.best_sample.orderings.n_subtypes();
  const std::size_t N = doc.result.best_sample.orderings.n_biomarkers();

  ordered_json out;
  out["spec_version"] = kSpecVersion;
  ordered_json config;
  config["data"] = doc.data_path;
  config["n_subtypes"] = doc.config.n_subtypes;
  config["iterations"] = doc.config.iterations;
  config["burn_in"] = doc.config.burn_in;
  config["seed"] = doc.config.seed;
  config["blind"] = doc.config.blind;
  config["dirichlet_alpha"] = doc.config.dirichlet_alpha;
  config["replications"] = doc.replication_logliks.size();
  out["config"] = std::move(config);

  out["loglik"] = doc.result.best_sample.loglik;
  out["accepted_iterations"] = doc.result.accepted;
  out["selected_replication"] = doc.selected_replication;
  out["replication_logliks"] = doc.replication_logliks;

  // Orderings both as rank rows and as biomarker names in rank order.
  out["ranks"] = doc.result.best_sample.orderings.ranks;
  ordered_json orderings = ordered_json::array();
  for (std::size_t t = 0; t < T; ++t) {
    const std::vector<int> by_pos =
        inverse_permutation(doc.result.best_sample.orderings.ranks[t]);
    ordered_json names = ordered_json::array();
    for (int n : by_pos) names.push_back(doc.biomarker_names[n]);
    orderings.push_back(std::move(names));
  }
  out["orderings"] = std::move(orderings);

  out["emission"] = emission_json(doc.result.best_sample.params, doc.biomarker_names);
  ordered_json priors;
  priors["subtype"] = doc.result.best_sample.priors.subtype;
  ordered_json stage_rows = ordered_json::array();
  for (std::size_t t = 0; t < doc.result.best_sample.priors.stage.rows; ++t) {
    const auto row = doc.result.best_sample.priors.stage.row(t);
    stage_rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  priors["stage"] = std::move(stage_rows);
  out["priors"] = std::move(priors);

  out["participant_ids"] = doc.participant_ids;
  out["ml_subtype"] = doc.result.ml_subtype;
  out["ml_stage"] = doc.result.ml_stage;
  out["trace"] = doc.result.trace;

  ordered_json freq = ordered_json::array();
  for (std::size_t t = 0; t < doc.result.rank_frequency.size(); ++t) {
    ordered_json rows = ordered_json::array();
    for (std::size_t n = 0; n < N; ++n) {
      const auto row = doc.result.rank_frequency[t].row(n);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    freq.push_back(std::move(rows));
  }
  out["posterior_rank_frequency"] = std::move(freq);
  out["runtime_seconds"] = doc.runtime_seconds;
  atomic_write_text(path, out.dump(2) + "\n");
}

FitDocument read_fit(const std::string& path) {
  const json doc = json::parse(read_text(path));
  FitDocument out;
  const json& config = doc.at("config");
  out.data_path = config.at("data").get<std::string>();
  out.config.n_subtypes = config.at("n_subtypes").get<int>();
  out.config.iterations = config.at("iterations").get<int>();
  out.config.burn_in = config.at("burn_in").get<int>();
  out.config.seed = config.at("seed").get<std::uint64_t>();
  out.config.blind = config.at("blind").get<bool>();
  out.config.dirichlet_alpha = config.at("dirichlet_alpha").get<double>();

  out.result.best_sample.orderings.ranks =
      doc.at("ranks").get<std::vector<std::vector<int>>>();
  out.result.best_sample.orderings.validate();
  out.result.best_sample.loglik = doc.at("loglik").get<double>();
  out.result.best_sample.params = emission_from_json(doc.at("emission"));
  for (const auto& row : doc.at("emission"))
    out.biomarker_names.push_back(row.at("name").get<std::string>());

  const json& priors = doc.at("priors");
  out.result.best_sample.priors.subtype = priors.at("subtype").get<std::vector<double>>();
  const auto stage = priors.at("stage").get<std::vector<std::vector<double>>>();
  out.result.best_sample.priors.stage =
      Matrix(stage.size(), stage.empty() ? 0 : stage[0].size());
  for (std::size_t t = 0; t < stage.size(); ++t)
    std::copy(stage[t].begin(), stage[t].end(),
              out.result.best_sample.priors.stage.row(t).begin());

  out.participant_ids = doc.at("participant_ids").get<std::vector<std::string>>();
  out.result.ml_subtype = doc.at("ml_subtype").get<std::vector<int>>();
  out.result.ml_stage = doc.at("ml_stage").get<std::vector<int>>();
  out.result.trace = doc.at("trace").get<std::vector<double>>();
  out.replication_logliks = doc.at("replication_logliks").get<std::vector<double>>();
  out.selected_replication = doc.at("selected_replication").get<int>();
  out.runtime_seconds = doc.at("runtime_seconds").get<double>();
  return out;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sebm::io
