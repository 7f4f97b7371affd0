#pragma once

#include <string>

#include "sebm/sampler.hpp"
#include "sebm/synthgen.hpp"
#include "sebm/types.hpp"

namespace sebm::io {

constexpr int kSpecVersion = 1;

// Dataset CSV: header `participant_id,diagnosis,<biomarker_1>,...`;
// diagnosis in {0,1}; an empty cell is a missing value. Strict parse,
// malformed rows report their line number.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

// Biomarker parameter table keyed by name, mirroring the
// (theta_mean, theta_std, phi_mean, phi_std) schema.
synth::BiomarkerTable read_biomarker_table(const std::string& path);
void write_biomarker_table(const std::string& path, const synth::BiomarkerTable& table);

void write_ground_truth(const std::string& path, const synth::GroundTruth& truth,
                        const std::vector<std::string>& biomarker_names,
                        std::size_t participants, double healthy_ratio);
synth::GroundTruth read_ground_truth(const std::string& path);

struct FitDocument {
  mcmc::ChainConfig config;
  mcmc::FitResult result;
  std::vector<std::string> biomarker_names;
  std::vector<std::string> participant_ids;
  std::vector<double> replication_logliks;
  int selected_replication = 0;
  double runtime_seconds = 0.0;
  std::string data_path;
};

void write_fit(const std::string& path, const FitDocument& doc);
FitDocument read_fit(const std::string& path);

// All file writes go through a temp file + rename.
void atomic_write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace sebm::io
