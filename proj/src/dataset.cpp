#include "rct/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace rct {

int TrialDataset::n_treated() const {
    int c = 0;
    for (int z : arm) c += (z == 1);
    return c;
}

int TrialDataset::n_control() const {
    int c = 0;
    for (int z : arm) c += (z == 0);
    return c;
}

bool TrialDataset::has_missing_outcome() const {
    return std::any_of(outcome_missing.begin(), outcome_missing.end(),
                       [](uint8_t m) { return m != 0; });
}

bool TrialDataset::has_missing_covariate() const {
    return std::any_of(covariate_missing.begin(), covariate_missing.end(),
                       [](uint8_t m) { return m != 0; });
}

bool TrialDataset::outcome_is_binary() const {
    for (int i = 0; i < n(); ++i) {
        if (outcome_missing[i]) continue;
        if (outcome[i] != 0.0 && outcome[i] != 1.0) return false;
    }
    return true;
}

bool TrialDataset::outcome_is_positive() const {
    for (int i = 0; i < n(); ++i) {
        if (outcome_missing[i]) continue;
        if (!(outcome[i] > 0.0)) return false;
    }
    return true;
}

int TrialDataset::covariate_index(const std::string& name) const {
    for (size_t j = 0; j < covariate_names.size(); ++j)
        if (covariate_names[j] == name) return static_cast<int>(j);
    return -1;
}

void TrialDataset::validate() const {
    const size_t nn = outcome.size();
    const size_t p = covariate_names.size();
    if (arm.size() != nn || outcome_missing.size() != nn)
        throw Error(ErrorKind::dimension_mismatch, "outcome, arm and masks must share length n");
    if (static_cast<size_t>(covariates.rows()) != nn ||
        static_cast<size_t>(covariates.cols()) != p)
        throw Error(ErrorKind::dimension_mismatch, "covariate matrix shape disagrees with names");
    if (covariate_missing.size() != nn * p)
        throw Error(ErrorKind::dimension_mismatch, "covariate mask shape disagrees with matrix");
    int n1 = 0, n0 = 0;
    for (size_t i = 0; i < nn; ++i) {
        if (arm[i] == 1)
            ++n1;
        else if (arm[i] == 0)
            ++n0;
        else {
            std::ostringstream os;
            os << "arm value " << arm[i] << " at row " << i << " (expected 0 or 1)";
            throw Error(ErrorKind::non_binary_arm, os.str());
        }
        if (!outcome_missing[i] && !std::isfinite(outcome[i])) {
            std::ostringstream os;
            os << "non-finite outcome at row " << i;
            throw Error(ErrorKind::parse_failure, os.str());
        }
    }
    if (n1 == 0) throw Error(ErrorKind::empty_arm, "no patients in the treatment arm");
    if (n0 == 0) throw Error(ErrorKind::empty_arm, "no patients in the control arm");
    std::set<std::string> seen;
    for (const auto& name : covariate_names)
        if (!seen.insert(name).second)
            throw Error(ErrorKind::parse_failure, "duplicate covariate column name: " + name);
}

const char* scale_name(Scale s) {
    switch (s) {
        case Scale::difference: return "difference";
        case Scale::ratio: return "ratio";
        case Scale::odds_ratio: return "odds_ratio";
    }
    return "?";
}

const char* outcome_kind_name(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::continuous: return "continuous";
        case OutcomeKind::binary: return "binary";
        case OutcomeKind::positive: return "positive";
    }
    return "?";
}

Scale scale_from_name(const std::string& name) {
    if (name == "difference") return Scale::difference;
    if (name == "ratio") return Scale::ratio;
    if (name == "odds_ratio") return Scale::odds_ratio;
    throw Error(ErrorKind::invalid_config, "unknown scale: " + name);
}

OutcomeKind outcome_kind_from_name(const std::string& name) {
    if (name == "continuous") return OutcomeKind::continuous;
    if (name == "binary") return OutcomeKind::binary;
    if (name == "positive") return OutcomeKind::positive;
    throw Error(ErrorKind::invalid_config, "unknown outcome kind: " + name);
}

EstimandSpec validate_estimand(const EstimandSpec& spec, const TrialDataset& data) {
    if (spec.scale == Scale::odds_ratio) {
        if (spec.outcome_kind != OutcomeKind::binary)
            throw Error(ErrorKind::scale_outcome_mismatch,
                        "odds ratio requires a binary outcome kind");
        if (!data.outcome_is_binary())
            throw Error(ErrorKind::scale_outcome_mismatch,
                        "odds ratio requested but outcome contains values outside {0,1}");
    }
    if (spec.scale == Scale::ratio) {
        if (spec.outcome_kind == OutcomeKind::continuous)
            throw Error(ErrorKind::scale_outcome_mismatch,
                        "ratio scale requires a positive or binary outcome kind");
        if (spec.outcome_kind == OutcomeKind::positive && !data.outcome_is_positive())
            throw Error(ErrorKind::scale_outcome_mismatch,
                        "ratio scale requested but outcome contains non-positive values");
        if (spec.outcome_kind == OutcomeKind::binary && !data.outcome_is_binary())
            throw Error(ErrorKind::scale_outcome_mismatch,
                        "binary outcome kind but outcome contains values outside {0,1}");
    }
    if (spec.outcome_kind == OutcomeKind::binary && !data.outcome_is_binary())
        throw Error(ErrorKind::scale_outcome_mismatch,
                    "binary outcome kind but outcome contains values outside {0,1}");
    return spec;
}

std::string FormulaTerm::label() const {
    if (is_product()) return column + "*" + interact_with;
    if (power == 1) return column;
    return column + "^" + std::to_string(power);
}

ModelFormula ModelFormula::intercept_only() { return ModelFormula{{}, true}; }

ModelFormula ModelFormula::main_effects(const std::vector<std::string>& columns) {
    ModelFormula f;
    for (const auto& c : columns) f.terms.push_back(FormulaTerm{c, 1, ""});
    return f;
}

void ModelFormula::validate(const TrialDataset& data) const {
    for (const auto& t : terms) {
        if (data.covariate_index(t.column) < 0)
            throw Error(ErrorKind::missing_column, "formula references unknown covariate: " + t.column);
        if (t.is_product()) {
            if (data.covariate_index(t.interact_with) < 0)
                throw Error(ErrorKind::missing_column,
                            "formula references unknown covariate: " + t.interact_with);
            if (t.power != 1)
                throw Error(ErrorKind::invalid_config,
                            "product terms cannot carry a power: " + t.label());
        } else if (t.power < 1 || t.power > 3) {
            throw Error(ErrorKind::invalid_config,
                        "polynomial degree must be 1..3: " + t.label());
        }
    }
}

FormulaTerm parse_formula_term(const std::string& text) {
    FormulaTerm term;
    const auto star = text.find('*');
    const auto caret = text.find('^');
    if (star != std::string::npos) {
        term.column = text.substr(0, star);
        term.interact_with = text.substr(star + 1);
        if (term.column.empty() || term.interact_with.empty())
            throw Error(ErrorKind::invalid_config, "malformed product term: " + text);
    } else if (caret != std::string::npos) {
        term.column = text.substr(0, caret);
        try {
            term.power = std::stoi(text.substr(caret + 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::invalid_config, "malformed power term: " + text);
        }
        if (term.column.empty())
            throw Error(ErrorKind::invalid_config, "malformed power term: " + text);
    } else {
        term.column = text;
    }
    if (term.column.empty())
        throw Error(ErrorKind::invalid_config, "empty formula term");
    return term;
}

namespace {

double term_value(const TrialDataset& data, const FormulaTerm& t, int row, int col,
                  int col2) {
    if (data.covariate_is_missing(row, col))
        throw Error(ErrorKind::parse_failure,
                    "design references missing covariate entry (row " + std::to_string(row) +
                        ", column " + t.column + "); impute or exclude first");
    const double x = data.covariates(row, col);
    if (t.is_product()) {
        if (data.covariate_is_missing(row, col2))
            throw Error(ErrorKind::parse_failure,
                        "design references missing covariate entry (row " + std::to_string(row) +
                            ", column " + t.interact_with + "); impute or exclude first");
        return x * data.covariates(row, col2);
    }
    double v = x;
    for (int k = 1; k < t.power; ++k) v *= x;
    return v;
}

}  // namespace

Eigen::MatrixXd build_design_rows(const TrialDataset& data, const ModelFormula& formula,
                                  const std::vector<int>& rows) {
    formula.validate(data);
    const int m = static_cast<int>(rows.size());
    const int p = (formula.include_intercept ? 1 : 0) + formula.n_terms();
    Eigen::MatrixXd design(m, p);
    int c = 0;
    if (formula.include_intercept) {
        design.col(0).setOnes();
        c = 1;
    }
    for (const auto& t : formula.terms) {
        const int col = data.covariate_index(t.column);
        const int col2 = t.is_product() ? data.covariate_index(t.interact_with) : -1;
        for (int i = 0; i < m; ++i) design(i, c) = term_value(data, t, rows[i], col, col2);
        ++c;
    }
    return design;
}

Eigen::MatrixXd build_design(const TrialDataset& data, const ModelFormula& formula) {
    std::vector<int> rows(data.n());
    for (int i = 0; i < data.n(); ++i) rows[i] = i;
    return build_design_rows(data, formula, rows);
}

}  // namespace rct
