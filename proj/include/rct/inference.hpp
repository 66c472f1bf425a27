#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rct/estimators.hpp"
#include "rct/rng.hpp"

namespace rct {

// Per-patient influence contributions, centered so the sample mean is ~0
// when the working models are canonical-link MLE fits with intercepts.
struct InfluenceVector {
    std::vector<double> values;
};

enum class VarianceMethod { influence, influence_corrected, bootstrap, bca };

const char* variance_method_name(VarianceMethod m);
VarianceMethod variance_method_from_name(const std::string& name);

// Inference happens on the scale where the normal approximation is used:
// identity for the difference, log for the ratio, log-odds for the odds
// ratio. CI endpoints are back-transformed for reporting.
double inference_transform(Scale scale, double contrast_value);
double inference_back_transform(Scale scale, double value);
double null_value_for(Scale scale);

struct EstimateResult {
    double point = 0.0;  // on the requested scale
    EstimandSpec scale;
    double se = 0.0;     // on the inference scale
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ci_level = 0.95;
    double test_statistic = 0.0;
    double p_value = 1.0;
    VarianceMethod variance_method = VarianceMethod::influence;
    std::map<std::string, std::string> diagnostics;
};

struct CorrectionInputs {
    int n1 = 0;
    int n0 = 0;
    int p1 = 0;
    int p0 = 0;
};

// se on the inference scale plus the influence contributions behind it.
struct InfluenceVarianceResult {
    double se = 0.0;
    InfluenceVector influence;
};

InfluenceVarianceResult influence_variance(const TrialDataset& data, const ArmMeans& arm_means,
                                           const EstimandSpec& spec);

// [(n0-p0-1)^-1 + (n1-p1-1)^-1] / [(n0-1)^-1 + (n1-1)^-1]; always >= 1,
// equal to 1 iff p1 = p0 = 0. Multiplies the influence variance.
double small_sample_correction(const CorrectionInputs& inputs);

using EstimateFn = std::function<double(const TrialDataset&)>;  // returns the raw-scale contrast

struct BootstrapResult {
    double se = 0.0;          // inference scale
    double ci_low = 0.0;      // raw scale, percentile
    double ci_high = 0.0;
    int replicates_requested = 0;
    int replicates_used = 0;
    int failures = 0;
    std::vector<double> replicate_contrasts;  // raw scale, used replicates only
};

// Nonparametric bootstrap over whole patient rows. Failed replicates are
// skipped and counted; more than 5% failing throws ExcessiveFailures.
// Equal seeds give identical output.
BootstrapResult bootstrap_variance(const TrialDataset& data, const EstimateFn& estimate,
                                   const EstimandSpec& spec, int B, uint64_t seed);
BootstrapResult bootstrap_variance(const TrialDataset& data, const EstimatorConfig& config,
                                   const EstimandSpec& spec, int B, uint64_t seed);

struct BcaInterval {
    double ci_low = 0.0;   // raw scale
    double ci_high = 0.0;
    double bias_correction_z0 = 0.0;
    double acceleration = 0.0;
    double bootstrap_se = 0.0;  // inference-scale sd of the replicates
};

BcaInterval bca_interval(const TrialDataset& data, const EstimateFn& estimate,
                         const EstimandSpec& spec, int B, uint64_t seed, double level);
BcaInterval bca_interval(const TrialDataset& data, const EstimatorConfig& config,
                         const EstimandSpec& spec, int B, uint64_t seed, double level);

// Core BCa construction from precomputed replicate and jackknife
// estimates (all on the raw scale). Exposed so tests can inject synthetic
// replicate sets.
BcaInterval bca_from_replicates(const std::vector<double>& replicates,
                                const std::vector<double>& jackknife, double point,
                                const EstimandSpec& spec, double level);

struct WaldTest {
    double statistic = 0.0;
    double p_value = 1.0;
};

// (point - null) / se on the inference scale, two-sided normal p-value.
WaldTest wald_test(const EstimateResult& result, double null_value);
WaldTest wald_statistic(Scale scale, double point_raw, double se_inference, double null_raw);

// Resample n rows with replacement (paired (Y, Z, X) rows).
TrialDataset resample_rows(const TrialDataset& data, Rng& rng);
TrialDataset drop_row(const TrialDataset& data, int row);

}  // namespace rct
