#pragma once

#include <string>
#include <vector>

#include "rct/csv_io.hpp"
#include "rct/inference.hpp"
#include "rct/missing.hpp"
#include "rct/simulate.hpp"

namespace rct {

// One configured analysis: schema mapping, estimand(s), estimator list
// (at most one flagged primary), missing-data plan, and inference
// settings. All randomness derives from `seed`.
struct AnalysisConfig {
    CsvSchema schema;
    OutcomeKind outcome_kind = OutcomeKind::continuous;
    std::vector<Scale> scales = {Scale::difference};
    std::vector<EstimatorConfig> estimators;
    ImputationPlan plan;
    VarianceMethod variance_method = VarianceMethod::influence;
    int bootstrap_replicates = 1000;
    double ci_level = 0.95;
    uint64_t seed = 20240101;
    std::string report_path;

    void validate() const;
};

struct SimulationConfig {
    DGPSpec dgp;
    std::vector<EstimatorConfig> estimators;
    EstimandSpec estimand;
    MonteCarloOptions options;
    std::string report_path;
    std::string replicates_csv_path;

    void validate() const;
};

AnalysisConfig parse_analysis_config(const std::string& json_text);
AnalysisConfig load_analysis_config(const std::string& path);

SimulationConfig parse_simulation_config(const std::string& json_text);
SimulationConfig load_simulation_config(const std::string& path);

}  // namespace rct
