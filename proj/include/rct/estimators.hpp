#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "rct/dataset.hpp"
#include "rct/glm.hpp"

namespace rct {

// Estimated arm means plus everything inference needs afterwards: the
// per-patient outcome-model predictions, the empirical randomization
// probability, and the per-arm fitted parameter counts (excluding
// intercepts) for the small-sample correction.
struct ArmMeans {
    double mu1_hat = 0.0;
    double mu0_hat = 0.0;
    double pi_hat = 0.0;                  // n1 / n, always empirical
    Eigen::VectorXd h1_predictions;       // length n
    Eigen::VectorXd h0_predictions;       // length n
    int n1 = 0;
    int n0 = 0;
    int p1 = 0;
    int p0 = 0;
    // Treatment coefficient of the pooled working model, with its
    // model-based standard error (set by pooled/ancova/anhecova paths).
    std::optional<double> pooled_beta1;
    std::optional<double> pooled_beta1_se;
};

enum class Method {
    unadjusted,
    standardization_separate,
    standardization_pooled,
    ancova,
    anhecova,
    ipw,
    aipw_general,
};

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct EstimatorConfig {
    Method method = Method::unadjusted;
    ModelFormula formula;   // covariate part; ignored by `unadjusted`
    Link link = Link::identity;
    std::string label;
    bool primary = false;

    // ANCOVA/ANHECOVA force the identity link; standardization forces an
    // intercept. Applies those constraints in place.
    void normalize();
};

ArmMeans estimate_unadjusted(const TrialDataset& data);

// Separate outcome working models per arm, predictions averaged over all
// n patients.
ArmMeans estimate_standardization_separate(const TrialDataset& data, const ModelFormula& formula,
                                            Link link);

// Single working model of Y on (1, Z, covariate terms), no interactions.
ArmMeans estimate_standardization_pooled(const TrialDataset& data, const ModelFormula& formula,
                                         Link link);

// The general augmented estimator evaluated at externally supplied
// prediction vectors.
ArmMeans estimate_general_form(const TrialDataset& data, const Eigen::VectorXd& h1,
                               const Eigen::VectorXd& h0);

// OLS of Y on (1, Z, covariate terms); contrast is the Z coefficient.
ArmMeans estimate_ancova(const TrialDataset& data, const ModelFormula& formula);

// OLS of Y on (1, Z, terms, Z*(terms - mean)); covariates centered at the
// full-sample mean so the Z coefficient is the marginal contrast.
ArmMeans estimate_anhecova(const TrialDataset& data, const ModelFormula& formula);

// Hajek-normalized inverse probability weighting with a logistic treatment
// model of Z on the formula terms.
ArmMeans estimate_ipw(const TrialDataset& data, const ModelFormula& formula);

// Dispatch on config.method. Requires complete data (no missing outcomes
// or covariates); missing-data wrappers live in missing.hpp.
ArmMeans estimate_with_config(const TrialDataset& data, const EstimatorConfig& config);

// The scalar contrast on the requested scale.
double contrast(const ArmMeans& arm_means, const EstimandSpec& spec);

}  // namespace rct
