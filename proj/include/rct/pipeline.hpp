#pragma once

#include <string>
#include <vector>

#include "rct/config.hpp"

namespace rct {

// Reports are nlohmann JSON objects serialized with sorted keys, so equal
// inputs and seeds give byte-identical files.
std::string run_analysis_report(const AnalysisConfig& config, const TrialDataset& data);

std::string simulation_report_json(const SimulationConfig& config, const MonteCarloReport& report);

// Per-replicate estimates as CSV (one row per replicate per estimator).
std::string replicates_csv(const MonteCarloReport& report);

// Validation findings for `validate`: estimand legality, design rank
// checks, missingness rates. Never runs estimation.
std::vector<std::string> validation_findings(const AnalysisConfig& config,
                                             const TrialDataset& data);
std::string validation_report_json(const AnalysisConfig& config, const TrialDataset& data);

// Structured error payload for the CLI.
std::string error_report_json(const Error& error);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace rct
