#include "rct/missing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rct {

const char* covariate_strategy_name(CovariateStrategy s) {
    switch (s) {
        case CovariateStrategy::missing_indicator: return "missing_indicator";
        case CovariateStrategy::mean_impute: return "mean_impute";
        case CovariateStrategy::indicator_plus_mean: return "indicator_plus_mean";
        case CovariateStrategy::exclude_column: return "exclude_column";
    }
    return "?";
}

CovariateStrategy covariate_strategy_from_name(const std::string& name) {
    if (name == "missing_indicator") return CovariateStrategy::missing_indicator;
    if (name == "mean_impute") return CovariateStrategy::mean_impute;
    if (name == "indicator_plus_mean") return CovariateStrategy::indicator_plus_mean;
    if (name == "exclude_column") return CovariateStrategy::exclude_column;
    throw Error(ErrorKind::invalid_config, "unknown covariate strategy: " + name);
}

const char* outcome_strategy_name(OutcomeStrategy s) {
    switch (s) {
        case OutcomeStrategy::complete_case_error: return "complete_case_error";
        case OutcomeStrategy::mar_standardization: return "mar_standardization";
        case OutcomeStrategy::dr_weighted: return "dr_weighted";
    }
    return "?";
}

OutcomeStrategy outcome_strategy_from_name(const std::string& name) {
    if (name == "complete_case_error") return OutcomeStrategy::complete_case_error;
    if (name == "mar_standardization") return OutcomeStrategy::mar_standardization;
    if (name == "dr_weighted") return OutcomeStrategy::dr_weighted;
    throw Error(ErrorKind::invalid_config, "unknown outcome strategy: " + name);
}

namespace {

double observed_mean(const TrialDataset& data, int col) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < data.n(); ++i) {
        if (data.covariate_is_missing(i, col)) continue;
        sum += data.covariates(i, col);
        ++count;
    }
    if (count == 0)
        throw Error(ErrorKind::all_missing_column,
                    "covariate '" + data.covariate_names[col] + "' has no observed values");
    return sum / count;
}

}  // namespace

std::vector<std::string> missingness_findings(const TrialDataset& data) {
    std::vector<std::string> findings;
    const int n = data.n();
    for (int j = 0; j < data.n_covariates(); ++j) {
        int missing = 0;
        for (int i = 0; i < n; ++i) missing += data.covariate_is_missing(i, j);
        if (missing == 0) continue;
        const double rate = static_cast<double>(missing) / n;
        std::ostringstream os;
        os << "covariate '" << data.covariate_names[j] << "' has "
           << static_cast<int>(std::lround(rate * 100.0)) << "% missingness";
        if (rate > 0.40) os << "; recommend excluding it from the adjustment set";
        findings.push_back(os.str());
    }
    return findings;
}

ImputedDataset impute_covariates(const TrialDataset& data, const ImputationPlan& plan) {
    data.validate();
    ImputedDataset out;

    if (plan.covariate_strategy == CovariateStrategy::exclude_column) {
        if (plan.exclude_columns.empty())
            throw Error(ErrorKind::invalid_config,
                        "exclude_column strategy requires naming the columns to drop");
        std::vector<int> keep;
        for (int j = 0; j < data.n_covariates(); ++j) {
            const auto& name = data.covariate_names[j];
            if (std::find(plan.exclude_columns.begin(), plan.exclude_columns.end(), name) ==
                plan.exclude_columns.end())
                keep.push_back(j);
            else
                out.notes.push_back("excluded covariate '" + name + "'");
        }
        TrialDataset d;
        d.outcome = data.outcome;
        d.arm = data.arm;
        d.outcome_missing = data.outcome_missing;
        const int n = data.n();
        d.covariates.resize(n, static_cast<int>(keep.size()));
        d.covariate_missing.resize(static_cast<size_t>(n) * keep.size());
        for (size_t jj = 0; jj < keep.size(); ++jj) {
            d.covariate_names.push_back(data.covariate_names[keep[jj]]);
            for (int i = 0; i < n; ++i) {
                d.covariates(i, static_cast<int>(jj)) = data.covariates(i, keep[jj]);
                d.covariate_missing[static_cast<size_t>(i) * keep.size() + jj] =
                    data.covariate_missing[static_cast<size_t>(i) * data.n_covariates() +
                                           keep[jj]];
            }
        }
        out.data = std::move(d);
        return out;
    }

    const bool add_indicators = plan.covariate_strategy == CovariateStrategy::missing_indicator ||
                                plan.covariate_strategy == CovariateStrategy::indicator_plus_mean;
    const int n = data.n();
    const int p = data.n_covariates();

    std::vector<int> indicator_cols;
    for (int j = 0; j < p; ++j) {
        bool any = false;
        for (int i = 0; i < n && !any; ++i) any = data.covariate_is_missing(i, j);
        if (any && add_indicators) indicator_cols.push_back(j);
    }

    TrialDataset d;
    d.outcome = data.outcome;
    d.arm = data.arm;
    d.outcome_missing = data.outcome_missing;
    const int p_out = p + static_cast<int>(indicator_cols.size());
    d.covariates.resize(n, p_out);
    d.covariate_missing.assign(static_cast<size_t>(n) * p_out, 0);
    d.covariate_names = data.covariate_names;

    for (int j = 0; j < p; ++j) {
        bool any = false;
        for (int i = 0; i < n && !any; ++i) any = data.covariate_is_missing(i, j);
        if (!any) {
            d.covariates.col(j) = data.covariates.col(j);
            continue;
        }
        const double fill = observed_mean(data, j);
        for (int i = 0; i < n; ++i)
            d.covariates(i, j) =
                data.covariate_is_missing(i, j) ? fill : data.covariates(i, j);
        out.notes.push_back("covariate '" + data.covariate_names[j] +
                            "': missing entries set to the pooled observed mean");
    }

    for (size_t k = 0; k < indicator_cols.size(); ++k) {
        const int j = indicator_cols[k];
        const int col = p + static_cast<int>(k);
        d.covariate_names.push_back(data.covariate_names[j] + "_missing");
        for (int i = 0; i < n; ++i)
            d.covariates(i, col) = data.covariate_is_missing(i, j) ? 1.0 : 0.0;
        out.notes.push_back("added indicator column '" + d.covariate_names.back() + "'");
    }

    d.validate();
    out.data = std::move(d);
    return out;
}

namespace {

struct ArmFitData {
    std::vector<int> rows;           // all rows in the arm
    std::vector<int> complete_rows;  // rows with observed outcome
};

ArmFitData collect_arm(const TrialDataset& data, int z) {
    ArmFitData out;
    for (int i = 0; i < data.n(); ++i) {
        if (data.arm[i] != z) continue;
        out.rows.push_back(i);
        if (!data.outcome_missing[i]) out.complete_rows.push_back(i);
    }
    return out;
}

void require_covariates_complete(const TrialDataset& data) {
    if (data.has_missing_covariate())
        throw Error(ErrorKind::parse_failure,
                    "outcome missingness handling requires complete covariates; impute first");
}

Eigen::VectorXd outcomes_at(const TrialDataset& data, const std::vector<int>& rows) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = data.outcome[rows[i]];
    return y;
}

}  // namespace

ArmMeans mar_standardization(const TrialDataset& data, const ModelFormula& formula, Link link) {
    data.validate();
    require_covariates_complete(data);
    ModelFormula f = formula;
    f.include_intercept = true;
    const int n = data.n();
    const Eigen::MatrixXd full_design = build_design(data, f);

    ArmMeans result;
    result.n1 = data.n_treated();
    result.n0 = data.n_control();
    result.pi_hat = static_cast<double>(result.n1) / n;
    result.p1 = result.p0 = f.n_terms();

    for (int z : {1, 0}) {
        const ArmFitData arm = collect_arm(data, z);
        const int needed = f.n_terms() + 1;
        if (static_cast<int>(arm.complete_rows.size()) < needed + 1)
            throw Error(ErrorKind::insufficient_complete_cases,
                        std::string(z == 1 ? "treated" : "control") + " arm has only " +
                            std::to_string(arm.complete_rows.size()) +
                            " complete cases for a " + std::to_string(needed) +
                            "-parameter working model");
        const Eigen::MatrixXd design = build_design_rows(data, f, arm.complete_rows);
        const Eigen::VectorXd y = outcomes_at(data, arm.complete_rows);
        WorkingModelFit fit;
        try {
            fit = fit_glm(y, design, link);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(z == 1 ? "treated" : "control") +
                                      "-arm working model: " + e.what());
        }
        const Eigen::VectorXd predictions = predict_mean(fit, full_design);
        if (z == 1) {
            result.h1_predictions = predictions;
            result.mu1_hat = predictions.mean();
        } else {
            result.h0_predictions = predictions;
            result.mu0_hat = predictions.mean();
        }
    }
    return result;
}

ArmMeans dr_weighted_standardization(const TrialDataset& data, const ModelFormula& outcome_formula,
                                     Link link, const ModelFormula& missingness_formula) {
    data.validate();
    require_covariates_complete(data);
    ModelFormula f = outcome_formula;
    f.include_intercept = true;
    ModelFormula mf = missingness_formula;
    mf.include_intercept = true;
    const int n = data.n();
    const Eigen::MatrixXd full_design = build_design(data, f);

    ArmMeans result;
    result.n1 = data.n_treated();
    result.n0 = data.n_control();
    result.pi_hat = static_cast<double>(result.n1) / n;
    result.p1 = result.p0 = f.n_terms();

    for (int z : {1, 0}) {
        const ArmFitData arm = collect_arm(data, z);
        const int needed = f.n_terms() + 1;
        if (static_cast<int>(arm.complete_rows.size()) < needed + 1)
            throw Error(ErrorKind::insufficient_complete_cases,
                        std::string(z == 1 ? "treated" : "control") + " arm has only " +
                            std::to_string(arm.complete_rows.size()) + " complete cases");

        Eigen::VectorXd weights = Eigen::VectorXd::Ones(
            static_cast<Eigen::Index>(arm.complete_rows.size()));
        const bool arm_has_missing = arm.complete_rows.size() != arm.rows.size();
        if (arm_has_missing) {
            // Completeness model: logit of the complete-case indicator on
            // the covariates, within this arm.
            Eigen::VectorXd complete_indicator(static_cast<Eigen::Index>(arm.rows.size()));
            for (size_t i = 0; i < arm.rows.size(); ++i)
                complete_indicator[static_cast<Eigen::Index>(i)] =
                    data.outcome_missing[arm.rows[i]] ? 0.0 : 1.0;
            const Eigen::MatrixXd m_design = build_design_rows(data, mf, arm.rows);
            WorkingModelFit m_fit;
            try {
                m_fit = fit_glm(complete_indicator, m_design, Link::logit);
            } catch (const Error& e) {
                throw Error(e.kind(), std::string(z == 1 ? "treated" : "control") +
                                          "-arm missingness model: " + e.what());
            }
            const Eigen::MatrixXd mc_design = build_design_rows(data, mf, arm.complete_rows);
            const Eigen::VectorXd completeness = predict_mean(m_fit, mc_design);
            for (Eigen::Index i = 0; i < completeness.size(); ++i) {
                if (completeness[i] < 0.01)
                    throw Error(ErrorKind::positivity_violation,
                                "fitted completeness probability below 0.01 in the " +
                                    std::string(z == 1 ? "treated" : "control") + " arm");
                weights[i] = 1.0 / completeness[i];
            }
        }

        const Eigen::MatrixXd design = build_design_rows(data, f, arm.complete_rows);
        const Eigen::VectorXd y = outcomes_at(data, arm.complete_rows);
        WorkingModelFit fit;
        try {
            fit = fit_glm(y, design, link, weights);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(z == 1 ? "treated" : "control") +
                                      "-arm weighted working model: " + e.what());
        }
        const Eigen::VectorXd predictions = predict_mean(fit, full_design);
        if (z == 1) {
            result.h1_predictions = predictions;
            result.mu1_hat = predictions.mean();
        } else {
            result.h0_predictions = predictions;
            result.mu0_hat = predictions.mean();
        }
    }
    return result;
}

}  // namespace rct
