#include "rct/inference.hpp"

#include <algorithm>
#include <cmath>

#include "rct/stats.hpp"

namespace rct {

const char* variance_method_name(VarianceMethod m) {
    switch (m) {
        case VarianceMethod::influence: return "influence";
        case VarianceMethod::influence_corrected: return "influence_corrected";
        case VarianceMethod::bootstrap: return "bootstrap";
        case VarianceMethod::bca: return "bca";
    }
    return "?";
}

VarianceMethod variance_method_from_name(const std::string& name) {
    if (name == "influence") return VarianceMethod::influence;
    if (name == "influence_corrected") return VarianceMethod::influence_corrected;
    if (name == "bootstrap") return VarianceMethod::bootstrap;
    if (name == "bca") return VarianceMethod::bca;
    throw Error(ErrorKind::invalid_config, "unknown variance method: " + name);
}

double inference_transform(Scale scale, double contrast_value) {
    if (scale == Scale::difference) return contrast_value;
    if (contrast_value <= 0.0)
        throw Error(ErrorKind::boundary_estimate, "log transform of a non-positive contrast");
    return std::log(contrast_value);
}

double inference_back_transform(Scale scale, double value) {
    return scale == Scale::difference ? value : std::exp(value);
}

double null_value_for(Scale scale) { return scale == Scale::difference ? 0.0 : 1.0; }

InfluenceVarianceResult influence_variance(const TrialDataset& data, const ArmMeans& arm_means,
                                           const EstimandSpec& spec) {
    const int n = data.n();
    if (arm_means.h1_predictions.size() != n || arm_means.h0_predictions.size() != n)
        throw Error(ErrorKind::dimension_mismatch, "arm means carry no per-patient predictions");
    const double pi = arm_means.pi_hat;
    const double mu1 = arm_means.mu1_hat;
    const double mu0 = arm_means.mu0_hat;

    double scale1 = 1.0, scale0 = 1.0;
    switch (spec.scale) {
        case Scale::difference:
            break;
        case Scale::ratio:
            if (mu1 <= 0.0 || mu0 <= 0.0)
                throw Error(ErrorKind::boundary_estimate,
                            "ratio-scale variance undefined at a non-positive arm mean");
            scale1 = 1.0 / mu1;
            scale0 = 1.0 / mu0;
            break;
        case Scale::odds_ratio:
            if (mu1 <= 0.0 || mu1 >= 1.0 || mu0 <= 0.0 || mu0 >= 1.0)
                throw Error(ErrorKind::boundary_estimate,
                            "odds-ratio-scale variance undefined at a boundary arm mean");
            scale1 = 1.0 / (mu1 * (1.0 - mu1));
            scale0 = 1.0 / (mu0 * (1.0 - mu0));
            break;
    }

    InfluenceVarianceResult out;
    out.influence.values.resize(n);
    for (int i = 0; i < n; ++i) {
        const double z = data.arm[i];
        const double y = data.outcome[i];
        const double h1 = arm_means.h1_predictions[i];
        const double h0 = arm_means.h0_predictions[i];
        const double if1 = z / pi * (y - h1) + h1 - mu1;
        const double if0 = (1.0 - z) / (1.0 - pi) * (y - h0) + h0 - mu0;
        out.influence.values[i] = scale1 * if1 - scale0 * if0;
    }
    out.se = std::sqrt(sample_variance(out.influence.values) / n);
    return out;
}

double small_sample_correction(const CorrectionInputs& inputs) {
    if (inputs.n1 <= inputs.p1 + 1 || inputs.n0 <= inputs.p0 + 1)
        throw Error(ErrorKind::too_few_patients,
                    "correction factor requires n_j > p_j + 1 in both arms");
    if (inputs.n1 < 2 || inputs.n0 < 2)
        throw Error(ErrorKind::too_few_patients, "correction factor requires n_j >= 2");
    const double num = 1.0 / (inputs.n0 - inputs.p0 - 1) + 1.0 / (inputs.n1 - inputs.p1 - 1);
    const double den = 1.0 / (inputs.n0 - 1) + 1.0 / (inputs.n1 - 1);
    return num / den;
}

TrialDataset resample_rows(const TrialDataset& data, Rng& rng) {
    const int n = data.n();
    const int p = data.n_covariates();
    TrialDataset out;
    out.covariate_names = data.covariate_names;
    out.outcome.resize(n);
    out.arm.resize(n);
    out.outcome_missing.resize(n);
    out.covariates.resize(n, p);
    out.covariate_missing.resize(static_cast<size_t>(n) * p);
    for (int i = 0; i < n; ++i) {
        const int k = static_cast<int>(rng.index(static_cast<size_t>(n)));
        out.outcome[i] = data.outcome[k];
        out.arm[i] = data.arm[k];
        out.outcome_missing[i] = data.outcome_missing[k];
        out.covariates.row(i) = data.covariates.row(k);
        for (int j = 0; j < p; ++j)
            out.covariate_missing[static_cast<size_t>(i) * p + j] =
                data.covariate_missing[static_cast<size_t>(k) * p + j];
    }
    return out;
}

TrialDataset drop_row(const TrialDataset& data, int row) {
    const int n = data.n();
    const int p = data.n_covariates();
    TrialDataset out;
    out.covariate_names = data.covariate_names;
    out.outcome.reserve(n - 1);
    out.arm.reserve(n - 1);
    out.outcome_missing.reserve(n - 1);
    out.covariates.resize(n - 1, p);
    out.covariate_missing.reserve(static_cast<size_t>(n - 1) * p);
    int r = 0;
    for (int i = 0; i < n; ++i) {
        if (i == row) continue;
        out.outcome.push_back(data.outcome[i]);
        out.arm.push_back(data.arm[i]);
        out.outcome_missing.push_back(data.outcome_missing[i]);
        out.covariates.row(r) = data.covariates.row(i);
        for (int j = 0; j < p; ++j)
            out.covariate_missing.push_back(
                data.covariate_missing[static_cast<size_t>(i) * p + j]);
        ++r;
    }
    return out;
}

namespace {

struct ReplicateSet {
    std::vector<double> contrasts;
    int failures = 0;
};

ReplicateSet run_bootstrap_replicates(const TrialDataset& data, const EstimateFn& estimate,
                                      int B, uint64_t seed) {
    if (B < 200)
        throw Error(ErrorKind::invalid_config, "bootstrap needs at least 200 replicates");
    ReplicateSet set;
    set.contrasts.reserve(B);
    for (int b = 0; b < B; ++b) {
        Rng rng = Rng::substream(seed, static_cast<uint64_t>(b));
        try {
            const TrialDataset resampled = resample_rows(data, rng);
            set.contrasts.push_back(estimate(resampled));
        } catch (const Error&) {
            ++set.failures;
        }
    }
    if (set.failures > 0 && set.failures * 20 > B)
        throw Error(ErrorKind::excessive_failures,
                    std::to_string(set.failures) + " of " + std::to_string(B) +
                        " bootstrap replicates failed to fit (> 5%)");
    return set;
}

}  // namespace

BootstrapResult bootstrap_variance(const TrialDataset& data, const EstimateFn& estimate,
                                   const EstimandSpec& spec, int B, uint64_t seed) {
    const ReplicateSet set = run_bootstrap_replicates(data, estimate, B, seed);
    BootstrapResult out;
    out.replicates_requested = B;
    out.failures = set.failures;
    out.replicates_used = static_cast<int>(set.contrasts.size());
    out.replicate_contrasts = set.contrasts;

    std::vector<double> on_inference_scale;
    on_inference_scale.reserve(set.contrasts.size());
    for (double c : set.contrasts)
        on_inference_scale.push_back(inference_transform(spec.scale, c));
    out.se = sample_sd(on_inference_scale);
    out.ci_low = quantile(set.contrasts, 0.025);
    out.ci_high = quantile(set.contrasts, 0.975);
    return out;
}

BootstrapResult bootstrap_variance(const TrialDataset& data, const EstimatorConfig& config,
                                   const EstimandSpec& spec, int B, uint64_t seed) {
    EstimateFn fn = [&config, &spec](const TrialDataset& d) {
        return contrast(estimate_with_config(d, config), spec);
    };
    return bootstrap_variance(data, fn, spec, B, seed);
}

BcaInterval bca_from_replicates(const std::vector<double>& replicates,
                                const std::vector<double>& jackknife, double point,
                                const EstimandSpec& spec, double level) {
    if (replicates.size() < 2)
        throw Error(ErrorKind::excessive_failures, "too few bootstrap replicates for BCa");
    const double B = static_cast<double>(replicates.size());
    int below = 0;
    for (double r : replicates) below += (r < point);
    double frac = below / B;
    // Guard the probit at 0/1 (all replicates on one side of the point).
    frac = std::min(std::max(frac, 0.5 / B), 1.0 - 0.5 / B);
    const double z0 = normal_quantile(frac);

    // Acceleration from the jackknife skewness, on the inference scale.
    double a = 0.0;
    if (jackknife.size() >= 3) {
        std::vector<double> jk;
        jk.reserve(jackknife.size());
        for (double v : jackknife) jk.push_back(inference_transform(spec.scale, v));
        const double m = mean(jk);
        double s2 = 0.0, s3 = 0.0;
        for (double v : jk) {
            const double d = m - v;
            s2 += d * d;
            s3 += d * d * d;
        }
        if (s2 > 0.0) a = s3 / (6.0 * std::pow(s2, 1.5));
    }

    const double alpha = 1.0 - level;
    auto adjusted = [&](double q) {
        const double zq = normal_quantile(q);
        const double denom = 1.0 - a * (z0 + zq);
        return normal_cdf(z0 + (z0 + zq) / denom);
    };

    BcaInterval out;
    out.bias_correction_z0 = z0;
    out.acceleration = a;
    out.ci_low = quantile(replicates, adjusted(alpha / 2.0));
    out.ci_high = quantile(replicates, adjusted(1.0 - alpha / 2.0));
    std::vector<double> on_inference_scale;
    on_inference_scale.reserve(replicates.size());
    for (double r : replicates)
        on_inference_scale.push_back(inference_transform(spec.scale, r));
    out.bootstrap_se = sample_sd(on_inference_scale);
    return out;
}

BcaInterval bca_interval(const TrialDataset& data, const EstimateFn& estimate,
                         const EstimandSpec& spec, int B, uint64_t seed, double level) {
    const ReplicateSet set = run_bootstrap_replicates(data, estimate, B, seed);
    const double point = estimate(data);

    std::vector<double> jackknife;
    jackknife.reserve(data.n());
    int jk_failures = 0;
    for (int i = 0; i < data.n(); ++i) {
        try {
            jackknife.push_back(estimate(drop_row(data, i)));
        } catch (const Error&) {
            ++jk_failures;
        }
    }
    if (jk_failures > 0 && jk_failures * 20 > data.n())
        throw Error(ErrorKind::excessive_failures,
                    std::to_string(jk_failures) + " of " + std::to_string(data.n()) +
                        " jackknife fits failed (> 5%)");

    return bca_from_replicates(set.contrasts, jackknife, point, spec, level);
}

BcaInterval bca_interval(const TrialDataset& data, const EstimatorConfig& config,
                         const EstimandSpec& spec, int B, uint64_t seed, double level) {
    EstimateFn fn = [&config, &spec](const TrialDataset& d) {
        return contrast(estimate_with_config(d, config), spec);
    };
    return bca_interval(data, fn, spec, B, seed, level);
}

WaldTest wald_statistic(Scale scale, double point_raw, double se_inference, double null_raw) {
    if (!(se_inference > 0.0))
        throw Error(ErrorKind::zero_standard_error, "Wald test requires a positive standard error");
    const double point = inference_transform(scale, point_raw);
    const double null_value = inference_transform(scale, null_raw);
    WaldTest out;
    out.statistic = (point - null_value) / se_inference;
    out.p_value = two_sided_p(out.statistic);
    return out;
}

WaldTest wald_test(const EstimateResult& result, double null_value) {
    return wald_statistic(result.scale.scale, result.point, result.se, null_value);
}

}  // namespace rct
