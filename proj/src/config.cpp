#include "rct/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace rct {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_config, what + ": " + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

template <typename T>
T field_or(const json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_config, "field '" + key + "': " + e.what());
    }
}

template <typename T>
T required_field(const json& j, const std::string& key) {
    if (!j.contains(key))
        throw Error(ErrorKind::invalid_config, "missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_config, "field '" + key + "': " + e.what());
    }
}

ModelFormula parse_formula(const json& j) {
    ModelFormula f;
    if (j.is_null()) return f;
    for (const auto& t : field_or<std::vector<std::string>>(j, "terms", {}))
        f.terms.push_back(parse_formula_term(t));
    f.include_intercept = field_or<bool>(j, "intercept", true);
    return f;
}

EstimatorConfig parse_estimator(const json& j) {
    EstimatorConfig c;
    c.method = method_from_name(required_field<std::string>(j, "method"));
    c.label = field_or<std::string>(j, "label", method_name(c.method));
    c.link = link_from_name(field_or<std::string>(j, "link", "identity"));
    if (j.contains("formula")) c.formula = parse_formula(j.at("formula"));
    c.primary = field_or<bool>(j, "primary", false);
    c.normalize();
    return c;
}

ImputationPlan parse_plan(const json& j) {
    ImputationPlan plan;
    if (j.is_null()) return plan;
    plan.covariate_strategy =
        covariate_strategy_from_name(field_or<std::string>(j, "covariate_strategy", "mean_impute"));
    plan.outcome_strategy = outcome_strategy_from_name(
        field_or<std::string>(j, "outcome_strategy", "complete_case_error"));
    if (j.contains("missingness_formula"))
        plan.missingness_formula = parse_formula(j.at("missingness_formula"));
    plan.exclude_columns = field_or<std::vector<std::string>>(j, "exclude_columns", {});
    return plan;
}

CovariateLaw parse_law(const json& j) {
    CovariateLaw law;
    const std::string kind = required_field<std::string>(j, "law");
    if (kind == "bernoulli") {
        law.kind = CovariateLaw::Kind::bernoulli;
        law.a = required_field<double>(j, "p");
    } else if (kind == "uniform") {
        law.kind = CovariateLaw::Kind::uniform;
        law.a = required_field<double>(j, "a");
        law.b = required_field<double>(j, "b");
    } else if (kind == "normal") {
        law.kind = CovariateLaw::Kind::normal;
        law.a = field_or<double>(j, "mean", 0.0);
        law.b = field_or<double>(j, "sd", 1.0);
    } else {
        throw Error(ErrorKind::invalid_config, "unknown covariate law: " + kind);
    }
    return law;
}

DGPSpec parse_dgp(const json& j) {
    DGPSpec spec;
    spec.n = required_field<int>(j, "n");
    spec.pi = required_field<double>(j, "pi");
    if (j.contains("covariates"))
        for (const auto& law : j.at("covariates")) spec.covariates.push_back(parse_law(law));
    const json& o = j.at("outcome");
    spec.outcome.link = link_from_name(field_or<std::string>(o, "link", "identity"));
    spec.outcome.intercept = field_or<double>(o, "intercept", 0.0);
    spec.outcome.treatment = field_or<double>(o, "treatment", 0.0);
    spec.outcome.covariate_coefs = field_or<std::vector<double>>(o, "covariate_coefs", {});
    spec.outcome.covariate_sq_coefs = field_or<std::vector<double>>(o, "covariate_sq_coefs", {});
    spec.outcome.interaction_coefs = field_or<std::vector<double>>(o, "interaction_coefs", {});
    spec.outcome.noise_sd = field_or<double>(o, "noise_sd", 1.0);
    if (j.contains("missingness")) {
        const json& m = j.at("missingness");
        const std::string kind = field_or<std::string>(m, "kind", "none");
        if (kind == "none") {
            spec.missingness.kind = MissingnessSpec::Kind::none;
        } else if (kind == "mcar") {
            spec.missingness.kind = MissingnessSpec::Kind::mcar;
            spec.missingness.rate = required_field<double>(m, "rate");
        } else if (kind == "mar") {
            spec.missingness.kind = MissingnessSpec::Kind::mar;
            spec.missingness.intercept = field_or<double>(m, "intercept", 0.0);
            spec.missingness.x_coefs = field_or<std::vector<double>>(m, "x_coefs", {});
            spec.missingness.x_sq_coefs = field_or<std::vector<double>>(m, "x_sq_coefs", {});
            spec.missingness.z_coef = field_or<double>(m, "z_coef", 0.0);
        } else {
            throw Error(ErrorKind::invalid_config, "unknown missingness kind: " + kind);
        }
    }
    spec.validate();
    return spec;
}

}  // namespace

void AnalysisConfig::validate() const {
    if (schema.outcome.empty() || schema.arm.empty())
        throw Error(ErrorKind::invalid_config, "schema must name the outcome and arm columns");
    if (estimators.empty())
        throw Error(ErrorKind::invalid_config, "at least one estimator is required");
    int primaries = 0;
    for (const auto& e : estimators) primaries += e.primary;
    if (primaries > 1)
        throw Error(ErrorKind::invalid_config,
                    "at most one estimator may be flagged primary (pre-specification)");
    if (scales.empty())
        throw Error(ErrorKind::invalid_config, "at least one scale is required");
    if (!(ci_level > 0.0 && ci_level < 1.0))
        throw Error(ErrorKind::invalid_config, "ci_level must lie in (0,1)");
    if (bootstrap_replicates < 200)
        throw Error(ErrorKind::invalid_config, "bootstrap_replicates must be at least 200");
}

void SimulationConfig::validate() const {
    dgp.validate();
    if (estimators.empty())
        throw Error(ErrorKind::invalid_config, "at least one estimator is required");
    if (options.replicates < 100)
        throw Error(ErrorKind::invalid_config, "replicates must be at least 100");
}

AnalysisConfig parse_analysis_config(const std::string& json_text) {
    const json j = parse_json(json_text, "analysis config");
    AnalysisConfig config;
    const json& s = j.at("schema");
    config.schema.outcome = required_field<std::string>(s, "outcome");
    config.schema.arm = required_field<std::string>(s, "arm");
    config.schema.covariates = field_or<std::vector<std::string>>(s, "covariates", {});
    if (s.contains("na_sentinels"))
        config.schema.na_sentinels = s.at("na_sentinels").get<std::vector<std::string>>();
    config.schema.arm_treated_label = field_or<std::string>(s, "arm_treated_label", "");
    config.schema.arm_control_label = field_or<std::string>(s, "arm_control_label", "");

    if (j.contains("estimand")) {
        const json& e = j.at("estimand");
        config.outcome_kind =
            outcome_kind_from_name(field_or<std::string>(e, "outcome_kind", "continuous"));
        config.scales.clear();
        for (const auto& sc : field_or<std::vector<std::string>>(e, "scales", {"difference"}))
            config.scales.push_back(scale_from_name(sc));
    }

    for (const auto& est : j.at("estimators")) config.estimators.push_back(parse_estimator(est));
    if (j.contains("missing_data")) config.plan = parse_plan(j.at("missing_data"));
    if (j.contains("inference")) {
        const json& inf = j.at("inference");
        config.variance_method = variance_method_from_name(
            field_or<std::string>(inf, "variance_method", "influence"));
        config.bootstrap_replicates = field_or<int>(inf, "bootstrap_replicates", 1000);
        config.ci_level = field_or<double>(inf, "ci_level", 0.95);
        config.seed = field_or<uint64_t>(inf, "seed", 20240101ULL);
    }
    if (j.contains("output"))
        config.report_path = field_or<std::string>(j.at("output"), "report_path", "");
    config.validate();
    return config;
}

AnalysisConfig load_analysis_config(const std::string& path) {
    return parse_analysis_config(read_file(path));
}

SimulationConfig parse_simulation_config(const std::string& json_text) {
    const json j = parse_json(json_text, "simulation config");
    SimulationConfig config;
    config.dgp = parse_dgp(j.at("dgp"));
    for (const auto& est : j.at("estimators")) config.estimators.push_back(parse_estimator(est));
    if (j.contains("estimand")) {
        const json& e = j.at("estimand");
        config.estimand.scale = scale_from_name(field_or<std::string>(e, "scale", "difference"));
        config.estimand.outcome_kind =
            outcome_kind_from_name(field_or<std::string>(e, "outcome_kind", "continuous"));
    }
    config.options.replicates = field_or<int>(j, "replicates", 1000);
    config.options.seed = field_or<uint64_t>(j, "seed", 1ULL);
    config.options.jobs = field_or<int>(j, "jobs", 1);
    if (j.contains("inference")) {
        const json& inf = j.at("inference");
        config.options.variance_method = variance_method_from_name(
            field_or<std::string>(inf, "variance_method", "influence"));
        config.options.bootstrap_replicates = field_or<int>(inf, "bootstrap_replicates", 1000);
        config.options.ci_level = field_or<double>(inf, "ci_level", 0.95);
    }
    if (j.contains("missing_data")) config.options.plan = parse_plan(j.at("missing_data"));
    if (j.contains("output")) {
        config.report_path = field_or<std::string>(j.at("output"), "report_path", "");
        config.replicates_csv_path =
            field_or<std::string>(j.at("output"), "replicates_csv_path", "");
    }
    config.validate();
    return config;
}

SimulationConfig load_simulation_config(const std::string& path) {
    return parse_simulation_config(read_file(path));
}

}  // namespace rct
