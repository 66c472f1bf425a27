#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rct/estimators.hpp"
#include "rct/inference.hpp"
#include "rct/missing.hpp"
#include "rct/rng.hpp"

namespace rct {

struct CovariateLaw {
    enum class Kind { bernoulli, uniform, normal } kind = Kind::normal;
    // bernoulli: a = success probability; uniform: (a, b); normal: mean a, sd b.
    double a = 0.0;
    double b = 1.0;

    double mean_value() const;
    double second_moment() const;
};

struct OutcomeModelSpec {
    Link link = Link::identity;
    double intercept = 0.0;
    double treatment = 0.0;                     // coefficient on Z (link scale)
    std::vector<double> covariate_coefs;        // per column
    std::vector<double> covariate_sq_coefs;     // per column, squared terms
    std::vector<double> interaction_coefs;      // per column, Z * X_j
    double noise_sd = 1.0;                      // identity link only
};

struct MissingnessSpec {
    enum class Kind { none, mcar, mar } kind = Kind::none;
    double rate = 0.0;                 // mcar
    double intercept = 0.0;            // mar: logit P(missing | X, Z)
    std::vector<double> x_coefs;
    std::vector<double> x_sq_coefs;    // optional quadratic dependence
    double z_coef = 0.0;
};

// A data-generating process with known ground truth. Both potential
// outcomes are generated per patient and Y = Z*Y1 + (1-Z)*Y0 by
// construction.
struct DGPSpec {
    int n = 100;
    double pi = 0.5;
    std::vector<CovariateLaw> covariates;
    OutcomeModelSpec outcome;
    MissingnessSpec missingness;

    void validate() const;
};

enum class TruthMode { closed_form, enumeration, monte_carlo };

struct TrueEstimands {
    double mu1 = 0.0;
    double mu0 = 0.0;
    double difference = 0.0;
    std::optional<double> ratio;       // defined when mu0 > 0
    std::optional<double> odds_ratio;  // defined for binary-outcome DGPs
    double conditional_beta1 = 0.0;    // the DGP treatment coefficient on the link scale
    TruthMode mode = TruthMode::closed_form;
    double mc_error = 0.0;             // MC standard error of `difference` when mode == monte_carlo

    double on_scale(Scale scale) const;
};

// Exact truth by closed form (identity link) or enumeration (all-Bernoulli
// covariates); otherwise a Monte-Carlo evaluation with `mc_draws` draws
// and its error reported.
TrueEstimands true_estimands(const DGPSpec& spec, uint64_t seed = 20240901,
                             long long mc_draws = 10'000'000);

TrialDataset generate_trial(const DGPSpec& spec, Rng& rng);

// Per-replicate, per-estimator outcome of a Monte-Carlo run.
struct McReplicate {
    bool ok = false;
    double estimate_raw = 0.0;   // requested scale
    double estimate_inf = 0.0;   // inference scale
    // Influence-based intervals are undefined when the replicate carries
    // missing outcomes; such replicates keep the point estimate but no
    // interval.
    bool has_interval = false;
    double se_inf = 0.0;
    bool covered = false;
    bool rejected = false;
    bool has_beta1 = false;      // pooled working models only
    double beta1 = 0.0;
    double beta1_se = 0.0;
    bool beta1_rejected = false;
};

struct McEstimatorSummary {
    std::string label;
    Method method = Method::unadjusted;
    int replicates_used = 0;
    int failures = 0;
    double mean_estimate = 0.0;      // raw scale
    double sd_estimate = 0.0;
    double mean_se = 0.0;            // inference scale
    double sd_inference = 0.0;
    double coverage = 0.0;
    double rejection = 0.0;
    double relative_efficiency = 1.0;   // empirical variance ratio vs unadjusted, raw scale
    double implied_ssr = 0.0;           // 1 - relative efficiency
    double mc_se_mean = 0.0;
    double mc_se_coverage = 0.0;
    double mc_se_rejection = 0.0;
    double mc_se_releff = 0.0;
};

struct MonteCarloOptions {
    int replicates = 1000;
    uint64_t seed = 1;
    int jobs = 1;
    VarianceMethod variance_method = VarianceMethod::influence;
    int bootstrap_replicates = 1000;
    double ci_level = 0.95;
    ImputationPlan plan;  // applied when the DGP generates missingness
};

struct MonteCarloReport {
    int replicates = 0;
    uint64_t seed = 0;
    EstimandSpec estimand;
    TrueEstimands truth;
    std::vector<McEstimatorSummary> estimators;
    std::vector<std::vector<McReplicate>> records;  // [estimator][replicate]
};

// Runs R independent trials, applies every estimator configuration to
// each, and aggregates. Identical seeds give identical reports; the
// `jobs` level never changes the result. Throws ExcessiveFailures when
// any estimator fails on more than 2% of replicates.
MonteCarloReport run_monte_carlo(const DGPSpec& spec, const std::vector<EstimatorConfig>& configs,
                                 const EstimandSpec& estimand, const MonteCarloOptions& options);

}  // namespace rct
