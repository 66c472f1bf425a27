#pragma once

#include <string>
#include <vector>

#include "rct/dataset.hpp"

namespace rct {

// Column mapping for a trial CSV export. Arm values must parse to 0/1
// unless explicit labels are mapped below.
struct CsvSchema {
    std::string outcome;
    std::string arm;
    std::vector<std::string> covariates;
    std::vector<std::string> na_sentinels = {"", "NA"};
    std::string arm_treated_label;  // optional: string mapped to 1
    std::string arm_control_label;  // optional: string mapped to 0
};

struct LoadDiagnostics {
    int n = 0;
    int n_treated = 0;
    int n_control = 0;
    int missing_outcomes = 0;
    int missing_covariate_cells = 0;
};

// Reads a UTF-8, header-row CSV and returns a validated dataset. Missing
// sentinels become mask entries. Throws Error on structural problems,
// naming the offending column/row.
TrialDataset load_dataset(const std::string& path, const CsvSchema& schema,
                          LoadDiagnostics* diagnostics = nullptr);

// Writes the dataset back out (missing entries as "NA"). Values are
// printed with round-trip precision so save/load is lossless.
void save_dataset(const TrialDataset& data, const std::string& path);

// Minimal CSV parsing (quoted fields, CRLF tolerated). Exposed for tests.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace rct
