#pragma once

#include <string>
#include <vector>

#include "rct/estimators.hpp"

namespace rct {

enum class CovariateStrategy { missing_indicator, mean_impute, indicator_plus_mean, exclude_column };
enum class OutcomeStrategy { complete_case_error, mar_standardization, dr_weighted };

const char* covariate_strategy_name(CovariateStrategy s);
CovariateStrategy covariate_strategy_from_name(const std::string& name);
const char* outcome_strategy_name(OutcomeStrategy s);
OutcomeStrategy outcome_strategy_from_name(const std::string& name);

struct ImputationPlan {
    CovariateStrategy covariate_strategy = CovariateStrategy::mean_impute;
    OutcomeStrategy outcome_strategy = OutcomeStrategy::complete_case_error;
    ModelFormula missingness_formula;              // for dr_weighted
    std::vector<std::string> exclude_columns;      // for exclude_column
};

struct ImputedDataset {
    TrialDataset data;
    std::vector<std::string> notes;  // provenance: which columns were transformed
};

// Covariate imputation. Uses only X (never Y or Z): pooled observed means,
// 0/1 indicator columns appended for columns with any missingness. Output
// covariate masks are cleared.
ImputedDataset impute_covariates(const TrialDataset& data, const ImputationPlan& plan);

// Missingness-rate findings; columns above 40% get an exclusion
// recommendation.
std::vector<std::string> missingness_findings(const TrialDataset& data);

// Standardization under missing-at-random outcomes: working models fit on
// per-arm complete cases, predictions averaged over all n patients.
ArmMeans mar_standardization(const TrialDataset& data, const ModelFormula& formula, Link link);

// Doubly robust variant: the per-arm outcome fit is weighted by the
// inverse fitted probability of being a complete case given covariates
// (logistic model per arm). Arms without missing outcomes short-circuit to
// unit weights.
ArmMeans dr_weighted_standardization(const TrialDataset& data, const ModelFormula& outcome_formula,
                                     Link link, const ModelFormula& missingness_formula);

}  // namespace rct
