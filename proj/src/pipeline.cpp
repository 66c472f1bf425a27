#include "rct/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rct/stats.hpp"

namespace rct {

using nlohmann::json;

namespace {

constexpr const char* kSchemaVersion = "1";

json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

const char* remedy_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::separation:
            return "fall back to the unadjusted estimator or reduce the covariate set";
        case ErrorKind::rank_deficient_design:
            return "remove collinear or constant covariates from the formula";
        case ErrorKind::non_convergence:
            return "simplify the working model or fall back to the unadjusted estimator";
        case ErrorKind::scale_outcome_mismatch:
            return "pick a scale compatible with the outcome kind";
        case ErrorKind::missing_column:
            return "check the schema column mapping against the CSV header";
        case ErrorKind::non_binary_arm:
            return "map labeled arms via arm_treated_label / arm_control_label";
        case ErrorKind::boundary_estimate:
            return "the requested scale is undefined at a boundary arm mean; use the difference scale";
        case ErrorKind::excessive_failures:
            return "use a simpler working model or more data";
        case ErrorKind::positivity_violation:
            return "the completeness model predicts near-certain missingness for some patients; simplify it";
        case ErrorKind::insufficient_complete_cases:
            return "too few observed outcomes to fit the working model; reduce the formula";
        default:
            return "";
    }
}

struct ScaleResult {
    Scale scale;
    EstimateResult estimate;
    double correction_factor = std::numeric_limits<double>::quiet_NaN();
};

struct EstimatorOutput {
    EstimatorConfig config;
    double mu1_hat = 0.0;
    double mu0_hat = 0.0;
    std::vector<ScaleResult> results;
    std::map<std::string, std::string> diagnostics;
};

ArmMeans estimate_stage(const TrialDataset& data, const EstimatorConfig& config,
                        const ImputationPlan& plan) {
    if (!data.has_missing_outcome()) return estimate_with_config(data, config);
    switch (plan.outcome_strategy) {
        case OutcomeStrategy::complete_case_error:
            throw Error(ErrorKind::parse_failure,
                        "dataset has missing outcomes; configure outcome_strategy "
                        "mar_standardization or dr_weighted");
        case OutcomeStrategy::mar_standardization:
            if (config.method != Method::standardization_separate)
                throw Error(ErrorKind::invalid_config,
                            "mar_standardization applies to the standardization_separate method");
            return mar_standardization(data, config.formula, config.link);
        case OutcomeStrategy::dr_weighted:
            if (config.method != Method::standardization_separate)
                throw Error(ErrorKind::invalid_config,
                            "dr_weighted applies to the standardization_separate method");
            return dr_weighted_standardization(data, config.formula, config.link,
                                               plan.missingness_formula);
    }
    throw Error(ErrorKind::invalid_config, "unhandled outcome strategy");
}

// Full per-dataset pipeline used by the bootstrap: covariate imputation,
// estimation, contrast.
EstimateFn pipeline_fn(const AnalysisConfig& config, const EstimatorConfig& estimator,
                       const EstimandSpec& spec) {
    return [&config, &estimator, spec](const TrialDataset& raw) {
        const TrialDataset* working = &raw;
        ImputedDataset imputed;
        if (raw.has_missing_covariate() ||
            config.plan.covariate_strategy == CovariateStrategy::exclude_column) {
            imputed = impute_covariates(raw, config.plan);
            working = &imputed.data;
        }
        return contrast(estimate_stage(*working, estimator, config.plan), spec);
    };
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io_error, "cannot write " + path);
    out << content;
}

std::string error_report_json(const Error& error) {
    json j;
    j["error"]["kind"] = error_kind_name(error.kind());
    j["error"]["category"] = static_cast<int>(error.category());
    j["error"]["message"] = error.what();
    const std::string remedy = remedy_for(error.kind());
    if (!remedy.empty()) j["error"]["remedy"] = remedy;
    return j.dump(2) + "\n";
}

std::string run_analysis_report(const AnalysisConfig& config, const TrialDataset& data) {
    config.validate();
    data.validate();

    // Stage 1: covariate imputation.
    const TrialDataset* working = &data;
    ImputedDataset imputed;
    std::vector<std::string> imputation_notes;
    if (data.has_missing_covariate() ||
        config.plan.covariate_strategy == CovariateStrategy::exclude_column) {
        imputed = impute_covariates(data, config.plan);
        working = &imputed.data;
        imputation_notes = imputed.notes;
    }
    const TrialDataset& d = *working;

    // Stage 2: estimand legality on the observed outcomes.
    std::vector<EstimandSpec> specs;
    for (Scale scale : config.scales)
        specs.push_back(validate_estimand(EstimandSpec{scale, config.outcome_kind}, d));

    const auto high_missingness = missingness_findings(data);

    // Stage 3+4: estimate and infer, per estimator and scale.
    std::vector<EstimatorOutput> outputs;
    int estimator_index = 0;
    for (const auto& estimator : config.estimators) {
        EstimatorOutput out;
        out.config = estimator;
        const ArmMeans arm_means = estimate_stage(d, estimator, config.plan);
        out.mu1_hat = arm_means.mu1_hat;
        out.mu0_hat = arm_means.mu0_hat;

        out.diagnostics["pi_hat"] = std::to_string(arm_means.pi_hat);
        out.diagnostics["n_treated"] = std::to_string(arm_means.n1);
        out.diagnostics["n_control"] = std::to_string(arm_means.n0);
        out.diagnostics["converged"] = "true";
        if (estimator.method == Method::ipw &&
            (config.variance_method == VarianceMethod::influence ||
             config.variance_method == VarianceMethod::influence_corrected))
            out.diagnostics["variance_note"] =
                "influence variance for ipw ignores the treatment model and is conservative; "
                "bootstrap is recommended";
        const int total_params = arm_means.p1 + arm_means.p0;
        if (total_params * 20 > d.n())
            out.diagnostics["covariate_count_warning"] =
                "more than n/20 fitted covariate parameters; asymptotic variance approximations "
                "may be unreliable (heuristic threshold)";
        if (estimator.method == Method::standardization_pooled)
            out.diagnostics["correction_params_note"] =
                "pooled model: p1 = p0 = total non-intercept parameters";
        if (d.has_missing_outcome())
            out.diagnostics["outcome_strategy"] = outcome_strategy_name(config.plan.outcome_strategy);

        const uint64_t estimator_seed =
            splitmix64(splitmix64(config.seed) ^ static_cast<uint64_t>(estimator_index + 1));

        for (const auto& spec : specs) {
            ScaleResult sr;
            sr.scale = spec.scale;
            EstimateResult& res = sr.estimate;
            res.scale = spec;
            res.ci_level = config.ci_level;
            res.variance_method = config.variance_method;
            res.point = contrast(arm_means, spec);

            const double zq = normal_quantile(0.5 + config.ci_level / 2.0);
            switch (config.variance_method) {
                case VarianceMethod::influence:
                case VarianceMethod::influence_corrected: {
                    if (d.has_missing_outcome())
                        throw Error(ErrorKind::invalid_config,
                                    "influence variance is not defined for missing-outcome "
                                    "pipelines; use bootstrap or bca");
                    const auto iv = influence_variance(d, arm_means, spec);
                    double se = iv.se;
                    if (config.variance_method == VarianceMethod::influence_corrected) {
                        sr.correction_factor = small_sample_correction(CorrectionInputs{
                            arm_means.n1, arm_means.n0, arm_means.p1, arm_means.p0});
                        se *= std::sqrt(sr.correction_factor);
                    }
                    res.se = se;
                    const double point_inf = inference_transform(spec.scale, res.point);
                    res.ci_low = inference_back_transform(spec.scale, point_inf - zq * se);
                    res.ci_high = inference_back_transform(spec.scale, point_inf + zq * se);
                    break;
                }
                case VarianceMethod::bootstrap: {
                    const auto boot =
                        bootstrap_variance(d, pipeline_fn(config, estimator, spec), spec,
                                           config.bootstrap_replicates, estimator_seed);
                    res.se = boot.se;
                    res.ci_low = boot.ci_low;
                    res.ci_high = boot.ci_high;
                    res.diagnostics["bootstrap_failures"] = std::to_string(boot.failures);
                    res.diagnostics["bootstrap_replicates_used"] =
                        std::to_string(boot.replicates_used);
                    break;
                }
                case VarianceMethod::bca: {
                    const auto interval =
                        bca_interval(d, pipeline_fn(config, estimator, spec), spec,
                                     config.bootstrap_replicates, estimator_seed, config.ci_level);
                    res.se = interval.bootstrap_se;
                    res.ci_low = interval.ci_low;
                    res.ci_high = interval.ci_high;
                    res.diagnostics["bca_z0"] = std::to_string(interval.bias_correction_z0);
                    res.diagnostics["bca_acceleration"] = std::to_string(interval.acceleration);
                    break;
                }
            }

            const auto test = wald_statistic(spec.scale, res.point, res.se,
                                             null_value_for(spec.scale));
            res.test_statistic = test.statistic;
            res.p_value = test.p_value;
            out.results.push_back(std::move(sr));
        }
        outputs.push_back(std::move(out));
        ++estimator_index;
    }

    // Assemble the report.
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "analysis";
    j["seed"] = config.seed;
    j["dataset"]["n"] = d.n();
    j["dataset"]["n_treated"] = d.n_treated();
    j["dataset"]["n_control"] = d.n_control();
    j["dataset"]["pi_hat"] = static_cast<double>(d.n_treated()) / d.n();
    int missing_outcomes = 0;
    for (auto m : data.outcome_missing) missing_outcomes += m;
    int missing_cells = 0;
    for (auto m : data.covariate_missing) missing_cells += m;
    j["dataset"]["missing_outcomes"] = missing_outcomes;
    j["dataset"]["missing_covariate_cells"] = missing_cells;

    j["estimand"]["outcome_kind"] = outcome_kind_name(config.outcome_kind);
    j["estimand"]["scales"] = json::array();
    for (Scale s : config.scales) j["estimand"]["scales"].push_back(scale_name(s));

    j["imputation"]["covariate_strategy"] = covariate_strategy_name(config.plan.covariate_strategy);
    j["imputation"]["outcome_strategy"] = outcome_strategy_name(config.plan.outcome_strategy);
    j["imputation"]["notes"] = imputation_notes;
    j["imputation"]["missingness_findings"] = high_missingness;

    j["estimators"] = json::array();
    for (const auto& out : outputs) {
        json ej;
        ej["label"] = out.config.label;
        ej["method"] = method_name(out.config.method);
        ej["link"] = link_name(out.config.link);
        ej["primary"] = out.config.primary;
        ej["mu1_hat"] = out.mu1_hat;
        ej["mu0_hat"] = out.mu0_hat;
        ej["diagnostics"] = out.diagnostics;
        ej["results"] = json::array();
        for (const auto& sr : out.results) {
            json rj;
            rj["scale"] = scale_name(sr.scale);
            rj["point"] = sr.estimate.point;
            rj["se"] = sr.estimate.se;
            rj["se_scale"] = sr.scale == Scale::difference ? "identity"
                             : sr.scale == Scale::ratio   ? "log"
                                                          : "log_odds";
            rj["ci_low"] = sr.estimate.ci_low;
            rj["ci_high"] = sr.estimate.ci_high;
            rj["ci_level"] = sr.estimate.ci_level;
            rj["test_statistic"] = sr.estimate.test_statistic;
            rj["p_value"] = sr.estimate.p_value;
            rj["variance_method"] = variance_method_name(sr.estimate.variance_method);
            rj["correction_factor"] = number_or_null(sr.correction_factor);
            rj["diagnostics"] = sr.estimate.diagnostics;
            ej["results"].push_back(std::move(rj));
        }
        j["estimators"].push_back(std::move(ej));
    }
    return j.dump(2) + "\n";
}

std::string simulation_report_json(const SimulationConfig& config,
                                   const MonteCarloReport& report) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "simulation";
    j["seed"] = report.seed;
    j["replicates"] = report.replicates;
    j["estimand"]["scale"] = scale_name(report.estimand.scale);
    j["estimand"]["outcome_kind"] = outcome_kind_name(report.estimand.outcome_kind);
    j["variance_method"] = variance_method_name(config.options.variance_method);

    j["truth"]["mu1"] = report.truth.mu1;
    j["truth"]["mu0"] = report.truth.mu0;
    j["truth"]["difference"] = report.truth.difference;
    j["truth"]["ratio"] = report.truth.ratio ? json(*report.truth.ratio) : json(nullptr);
    j["truth"]["odds_ratio"] =
        report.truth.odds_ratio ? json(*report.truth.odds_ratio) : json(nullptr);
    j["truth"]["conditional_beta1"] = report.truth.conditional_beta1;
    j["truth"]["mode"] = report.truth.mode == TruthMode::closed_form    ? "closed_form"
                         : report.truth.mode == TruthMode::enumeration ? "enumeration"
                                                                       : "monte_carlo";
    j["truth"]["mc_error"] = report.truth.mc_error;

    bool has_unadjusted = false;
    for (const auto& s : report.estimators)
        if (s.method == Method::unadjusted) has_unadjusted = true;

    j["estimators"] = json::array();
    for (const auto& s : report.estimators) {
        json ej;
        ej["label"] = s.label;
        ej["method"] = method_name(s.method);
        ej["replicates_used"] = s.replicates_used;
        ej["failures"] = s.failures;
        ej["mean_estimate"] = s.mean_estimate;
        ej["sd_estimate"] = s.sd_estimate;
        ej["mean_se"] = s.mean_se;
        ej["sd_inference_scale"] = s.sd_inference;
        ej["coverage"] = s.coverage;
        ej["rejection"] = s.rejection;
        if (has_unadjusted) {
            ej["relative_efficiency"] = s.relative_efficiency;
            ej["implied_sample_size_reduction"] = s.implied_ssr;
        } else {
            ej["relative_efficiency"] = nullptr;
            ej["implied_sample_size_reduction"] = nullptr;
        }
        ej["mc_se"]["mean"] = s.mc_se_mean;
        ej["mc_se"]["coverage"] = s.mc_se_coverage;
        ej["mc_se"]["rejection"] = s.mc_se_rejection;
        ej["mc_se"]["relative_efficiency"] = s.mc_se_releff;
        j["estimators"].push_back(std::move(ej));
    }
    return j.dump(2) + "\n";
}

std::string replicates_csv(const MonteCarloReport& report) {
    std::ostringstream os;
    os << "estimator,replicate,ok,estimate,se,covered,rejected,beta1,beta1_se\n";
    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (size_t e = 0; e < report.records.size(); ++e) {
        const std::string& label = report.estimators[e].label;
        for (size_t r = 0; r < report.records[e].size(); ++r) {
            const auto& rec = report.records[e][r];
            os << label << ',' << r << ',' << (rec.ok ? 1 : 0) << ',';
            if (rec.ok) {
                os << fmt(rec.estimate_raw) << ',' << fmt(rec.se_inf) << ','
                   << (rec.covered ? 1 : 0) << ',' << (rec.rejected ? 1 : 0) << ',';
                if (rec.has_beta1)
                    os << fmt(rec.beta1) << ',' << fmt(rec.beta1_se);
                else
                    os << ',';
            } else {
                os << ",,,,,";
            }
            os << '\n';
        }
    }
    return os.str();
}

std::vector<std::string> validation_findings(const AnalysisConfig& config,
                                             const TrialDataset& data) {
    std::vector<std::string> findings;
    data.validate();

    // Estimand legality.
    for (Scale scale : config.scales) {
        try {
            validate_estimand(EstimandSpec{scale, config.outcome_kind}, data);
        } catch (const Error& e) {
            findings.push_back(e.what());
        }
    }

    // Missingness rates (with the exclusion recommendation above 40%).
    for (const auto& f : missingness_findings(data)) findings.push_back(f);

    // Rank checks on the post-imputation design matrices.
    const TrialDataset* working = &data;
    ImputedDataset imputed;
    if (data.has_missing_covariate() ||
        config.plan.covariate_strategy == CovariateStrategy::exclude_column) {
        try {
            imputed = impute_covariates(data, config.plan);
            working = &imputed.data;
        } catch (const Error& e) {
            findings.push_back(e.what());
            return findings;
        }
    }
    auto rank_check = [&findings](const Eigen::MatrixXd& m, const std::string& what) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
        qr.setThreshold(1e-10);
        if (qr.rank() < m.cols()) {
            std::ostringstream os;
            os << "RankDeficientDesign: " << what << " has rank " << qr.rank() << " < "
               << m.cols() << " columns";
            findings.push_back(os.str());
        }
    };
    for (const auto& estimator : config.estimators) {
        if (estimator.method == Method::unadjusted) continue;
        ModelFormula f = estimator.formula;
        f.include_intercept = true;
        try {
            f.validate(*working);
            const Eigen::MatrixXd design = build_design(*working, f);
            rank_check(design, "covariate design for '" + estimator.label + "'");
            if (estimator.method == Method::standardization_separate ||
                estimator.method == Method::aipw_general) {
                for (int z : {1, 0}) {
                    std::vector<int> rows;
                    for (int i = 0; i < working->n(); ++i)
                        if (working->arm[i] == z) rows.push_back(i);
                    rank_check(build_design_rows(*working, f, rows),
                               std::string(z ? "treated" : "control") + "-arm design for '" +
                                   estimator.label + "'");
                }
            } else if (estimator.method != Method::ipw) {
                Eigen::MatrixXd with_z(design.rows(), design.cols() + 1);
                with_z.col(0) = design.col(0);
                for (int i = 0; i < working->n(); ++i) with_z(i, 1) = working->arm[i];
                with_z.rightCols(design.cols() - 1) = design.rightCols(design.cols() - 1);
                rank_check(with_z, "pooled design for '" + estimator.label + "'");
            }
        } catch (const Error& e) {
            findings.push_back(e.what());
        }
    }
    return findings;
}

std::string validation_report_json(const AnalysisConfig& config, const TrialDataset& data) {
    const auto findings = validation_findings(config, data);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "validation";
    j["findings"] = findings;
    j["clean"] = findings.empty();
    return j.dump(2) + "\n";
}

}  // namespace rct
