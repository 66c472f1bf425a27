#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rct/error.hpp"

namespace rct {

// One two-arm trial: outcome Y, arm indicator Z (1 = treatment), and an
// n x p covariate matrix with per-entry missingness masks. Immutable after
// construction/validation; safe to share across threads.
struct TrialDataset {
    std::vector<double> outcome;             // Y, length n
    std::vector<int> arm;                    // Z in {0,1}, length n
    Eigen::MatrixXd covariates;              // X, n x p
    std::vector<std::string> covariate_names;
    std::vector<uint8_t> outcome_missing;    // length n
    std::vector<uint8_t> covariate_missing;  // n x p, row-major

    int n() const { return static_cast<int>(outcome.size()); }
    int n_covariates() const { return static_cast<int>(covariate_names.size()); }
    int n_treated() const;
    int n_control() const;

    bool covariate_is_missing(int row, int col) const {
        return covariate_missing[static_cast<size_t>(row) * covariate_names.size() + col] != 0;
    }
    bool has_missing_outcome() const;
    bool has_missing_covariate() const;

    // True when every non-missing outcome is 0 or 1.
    bool outcome_is_binary() const;
    // True when every non-missing outcome is > 0.
    bool outcome_is_positive() const;

    int covariate_index(const std::string& name) const;  // -1 if absent

    // Enforces the structural invariants (lengths agree, arm is 0/1 with
    // both arms non-empty, column names unique). Throws on violation.
    void validate() const;
};

enum class Scale { difference, ratio, odds_ratio };
enum class OutcomeKind { continuous, binary, positive };

const char* scale_name(Scale s);
const char* outcome_kind_name(OutcomeKind k);
Scale scale_from_name(const std::string& name);
OutcomeKind outcome_kind_from_name(const std::string& name);

struct EstimandSpec {
    Scale scale = Scale::difference;
    OutcomeKind outcome_kind = OutcomeKind::continuous;
};

// Checks that the scale/outcome-kind pairing is legal for the data actually
// observed (odds ratio needs a binary outcome, ratio a positive one).
// Returns the spec unchanged on success.
EstimandSpec validate_estimand(const EstimandSpec& spec, const TrialDataset& data);

// One design column: `column` raised to `power`, or the pairwise product
// column * interact_with when interact_with is non-empty.
struct FormulaTerm {
    std::string column;
    int power = 1;                // 1..3
    std::string interact_with;    // empty unless a pairwise product

    bool is_product() const { return !interact_with.empty(); }
    std::string label() const;
};

// Covariate part of a working model. The intercept is mandatory whenever
// the formula feeds a standardization estimator.
struct ModelFormula {
    std::vector<FormulaTerm> terms;
    bool include_intercept = true;

    static ModelFormula intercept_only();
    static ModelFormula main_effects(const std::vector<std::string>& columns);

    // Verifies every term references an existing covariate and powers are
    // within the supported range. Throws on violation.
    void validate(const TrialDataset& data) const;

    int n_terms() const { return static_cast<int>(terms.size()); }
};

// Parses "x", "x^2", "x*y" into a term.
FormulaTerm parse_formula_term(const std::string& text);

// Design matrix for `formula` over the dataset's covariates (column 0 is
// the intercept when included). Missing covariate entries must have been
// resolved beforehand; throws if any referenced entry is masked.
Eigen::MatrixXd build_design(const TrialDataset& data, const ModelFormula& formula);

// Same, restricted to the rows listed in `rows`.
Eigen::MatrixXd build_design_rows(const TrialDataset& data, const ModelFormula& formula,
                                  const std::vector<int>& rows);

}  // namespace rct
