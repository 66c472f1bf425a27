#include <doctest.h>

#include <cmath>

#include "rct/pipeline.hpp"
#include "rct/simulate.hpp"
#include "rct/stats.hpp"
#include "test_helpers.hpp"

using namespace rct;

namespace {

DGPSpec gaussian_dgp(int n) {
    DGPSpec dgp;
    dgp.n = n;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::normal, 0.0, 1.0}};
    dgp.outcome.intercept = 1.0;
    dgp.outcome.treatment = 0.5;
    dgp.outcome.covariate_coefs = {1.0};
    dgp.outcome.noise_sd = 1.0;
    return dgp;
}

DGPSpec noncollapsible_logit(int n) {
    DGPSpec dgp;
    dgp.n = n;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::bernoulli, 0.5, 0.0}};
    dgp.outcome.link = Link::logit;
    dgp.outcome.intercept = -1.0;
    dgp.outcome.treatment = std::log(2.0);
    dgp.outcome.covariate_coefs = {2.0};
    return dgp;
}

}  // namespace

TEST_CASE("identity-link truth is the treatment coefficient") {
    const auto truth = true_estimands(gaussian_dgp(100));
    CHECK(truth.difference == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(truth.mode == TruthMode::closed_form);
}

TEST_CASE("enumerated logit truth shows noncollapsibility") {
    const auto truth = true_estimands(noncollapsible_logit(100));
    CHECK(truth.mode == TruthMode::enumeration);
    CHECK(truth.mu1 == doctest::Approx(0.6342603558686036).epsilon(1e-12));
    CHECK(truth.mu0 == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(truth.odds_ratio.has_value());
    CHECK(*truth.odds_ratio == doctest::Approx(1.7341854131643928).epsilon(1e-12));
    // conditional OR is 2; the marginal OR sits strictly inside (1, 2)
    CHECK(*truth.odds_ratio > 1.0);
    CHECK(*truth.odds_ratio < 2.0);
    CHECK(truth.difference == doctest::Approx(0.13426035586860363).epsilon(1e-12));
}

TEST_CASE("a null treatment coefficient gives null contrasts") {
    auto dgp = noncollapsible_logit(100);
    dgp.outcome.treatment = 0.0;
    const auto truth = true_estimands(dgp);
    CHECK(truth.difference == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(*truth.ratio == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*truth.odds_ratio == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("continuous-covariate logit truth falls back to Monte Carlo") {
    DGPSpec dgp;
    dgp.n = 100;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::normal, 0.0, 1.0}};
    dgp.outcome.link = Link::logit;
    dgp.outcome.intercept = -0.4;
    dgp.outcome.treatment = 0.7;
    dgp.outcome.covariate_coefs = {0.0};  // known answer despite the MC route
    const auto truth = true_estimands(dgp, 5, 300000);
    CHECK(truth.mode == TruthMode::monte_carlo);
    CHECK(truth.mc_error > 0.0);
    const double exact =
        link_inverse(Link::logit, 0.3) - link_inverse(Link::logit, -0.4);
    CHECK(std::fabs(truth.difference - exact) < 5.0 * std::max(truth.mc_error, 1e-9) + 1e-12);
}

TEST_CASE("generated trials match the DGP contract") {
    DGPSpec dgp = noncollapsible_logit(4000);
    dgp.missingness.kind = MissingnessSpec::Kind::mcar;
    dgp.missingness.rate = 0.25;
    Rng rng(41);
    const TrialDataset data = generate_trial(dgp, rng);
    CHECK(data.n() == 4000);
    CHECK(data.outcome_is_binary());
    const double pi_hat = static_cast<double>(data.n_treated()) / data.n();
    CHECK(pi_hat == doctest::Approx(0.5).epsilon(0.05));
    int missing = 0;
    for (auto m : data.outcome_missing) missing += m;
    CHECK(static_cast<double>(missing) / data.n() == doctest::Approx(0.25).epsilon(0.12));
    double xbar = data.covariates.col(0).mean();
    CHECK(xbar == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("invalid DGP fields are rejected with messages") {
    DGPSpec dgp = gaussian_dgp(100);
    dgp.pi = 1.2;
    try {
        dgp.validate();
        FAIL("expected InvalidConfig");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("pi") != std::string::npos);
    }
    dgp = gaussian_dgp(100);
    dgp.outcome.covariate_coefs = {1.0, 2.0};  // two coefs, one covariate
    CHECK_THROWS_AS(dgp.validate(), Error);
}

TEST_CASE("monte carlo reports are seed-reproducible and parallel-invariant") {
    const DGPSpec dgp = gaussian_dgp(120);
    std::vector<EstimatorConfig> configs(2);
    configs[0].method = Method::unadjusted;
    configs[1].method = Method::ancova;
    configs[1].formula = ModelFormula::main_effects({"x1"});
    const EstimandSpec spec{Scale::difference, OutcomeKind::continuous};

    MonteCarloOptions options;
    options.replicates = 200;
    options.seed = 777;
    options.jobs = 1;
    const auto serial = run_monte_carlo(dgp, configs, spec, options);
    options.jobs = 3;
    const auto parallel = run_monte_carlo(dgp, configs, spec, options);

    SimulationConfig shell;
    shell.dgp = dgp;
    shell.estimators = configs;
    shell.estimand = spec;
    shell.options = options;
    CHECK(simulation_report_json(shell, serial) == simulation_report_json(shell, parallel));
    CHECK(replicates_csv(serial) == replicates_csv(parallel));

    options.jobs = 1;
    const auto again = run_monte_carlo(dgp, configs, spec, options);
    CHECK(simulation_report_json(shell, serial) == simulation_report_json(shell, again));

    options.seed = 778;
    const auto different = run_monte_carlo(dgp, configs, spec, options);
    CHECK(simulation_report_json(shell, serial) != simulation_report_json(shell, different));
}

TEST_CASE("doubling n roughly halves the empirical variance") {
    std::vector<EstimatorConfig> configs(1);
    configs[0].method = Method::ancova;
    configs[0].formula = ModelFormula::main_effects({"x1"});
    const EstimandSpec spec{Scale::difference, OutcomeKind::continuous};
    MonteCarloOptions options;
    options.replicates = 800;
    options.seed = 2718;

    std::vector<double> variances;
    for (int n : {250, 500, 1000}) {
        const auto report = run_monte_carlo(gaussian_dgp(n), configs, spec, options);
        variances.push_back(report.estimators[0].sd_estimate *
                            report.estimators[0].sd_estimate);
    }
    CHECK(variances[0] / variances[1] == doctest::Approx(2.0).epsilon(0.3));
    CHECK(variances[1] / variances[2] == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("mean estimated se tracks the empirical sd at n = 500") {
    // the unadjusted analysis in its canonical-GLM form (intercept-only
    // standardization) plus a covariate-adjusted standardization; both
    // carry fitted working models, so the sandwich se is calibrated
    std::vector<EstimatorConfig> configs(2);
    configs[0].method = Method::standardization_separate;
    configs[0].formula = ModelFormula::intercept_only();
    configs[0].link = Link::identity;
    configs[0].label = "unadjusted_glm";
    configs[1].method = Method::standardization_separate;
    configs[1].formula = ModelFormula::main_effects({"x1"});
    configs[1].link = Link::identity;
    const EstimandSpec spec{Scale::difference, OutcomeKind::continuous};
    MonteCarloOptions options;
    options.replicates = 1000;
    options.seed = 314;
    const auto report = run_monte_carlo(gaussian_dgp(500), configs, spec, options);
    for (const auto& s : report.estimators)
        CHECK(s.mean_se / s.sd_inference == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("estimator failures above two percent abort the run") {
    // tiny trials with a strong binary separator make the per-arm logit
    // fit separate frequently
    DGPSpec dgp;
    dgp.n = 12;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::bernoulli, 0.5, 0.0}};
    dgp.outcome.link = Link::logit;
    dgp.outcome.intercept = -3.0;
    dgp.outcome.treatment = 1.0;
    dgp.outcome.covariate_coefs = {6.0};
    std::vector<EstimatorConfig> configs(1);
    configs[0].method = Method::standardization_separate;
    configs[0].formula = ModelFormula::main_effects({"x1"});
    configs[0].link = Link::logit;
    MonteCarloOptions options;
    options.replicates = 150;
    options.seed = 99;
    CHECK_THROWS_AS(
        run_monte_carlo(dgp, configs, {Scale::difference, OutcomeKind::binary}, options), Error);
}
