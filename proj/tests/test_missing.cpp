#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rct/missing.hpp"
#include "rct/simulate.hpp"
#include "rct/stats.hpp"
#include "test_helpers.hpp"

using namespace rct;

namespace {

TrialDataset four_with_gap() {
    auto data = test::make_dataset({1, 0, 1, 0}, {1, 1, 0, 0}, {{1, 2, 0, 3}}, {"x"});
    data.covariate_missing[2] = 1;  // row 2, column 0
    data.covariates(2, 0) = 0.0;
    return data;
}

}  // namespace

TEST_CASE("mean imputation fills with the pooled observed mean") {
    const auto data = four_with_gap();
    ImputationPlan plan;
    plan.covariate_strategy = CovariateStrategy::mean_impute;
    const auto imputed = impute_covariates(data, plan);
    CHECK(imputed.data.covariates(0, 0) == doctest::Approx(1.0));
    CHECK(imputed.data.covariates(2, 0) == doctest::Approx(2.0));  // mean of 1,2,3
    CHECK_FALSE(imputed.data.has_missing_covariate());
    CHECK(imputed.notes.size() == 1);
}

TEST_CASE("indicator strategy appends a 0/1 column and fills the original") {
    const auto data = four_with_gap();
    ImputationPlan plan;
    plan.covariate_strategy = CovariateStrategy::indicator_plus_mean;
    const auto imputed = impute_covariates(data, plan);
    REQUIRE(imputed.data.n_covariates() == 2);
    CHECK(imputed.data.covariate_names[1] == "x_missing");
    CHECK(imputed.data.covariates(0, 1) == 0.0);
    CHECK(imputed.data.covariates(1, 1) == 0.0);
    CHECK(imputed.data.covariates(2, 1) == 1.0);
    CHECK(imputed.data.covariates(3, 1) == 0.0);
    CHECK(imputed.data.covariates(2, 0) == doctest::Approx(2.0));
}

TEST_CASE("imputation ignores outcome and arm entirely") {
    auto data = four_with_gap();
    ImputationPlan plan;
    plan.covariate_strategy = CovariateStrategy::indicator_plus_mean;
    const auto base = impute_covariates(data, plan);

    // permute (Y, Z) jointly, holding X fixed
    std::swap(data.outcome[0], data.outcome[3]);
    std::swap(data.arm[0], data.arm[3]);
    const auto permuted = impute_covariates(data, plan);
    CHECK(base.data.covariates == permuted.data.covariates);
}

TEST_CASE("a column with no observed values errors") {
    auto data = test::make_dataset({1, 0}, {1, 0}, {{0, 0}}, {"x"});
    data.covariate_missing[0] = 1;
    data.covariate_missing[1] = 1;
    ImputationPlan plan;
    plan.covariate_strategy = CovariateStrategy::mean_impute;
    try {
        impute_covariates(data, plan);
        FAIL("expected AllMissingColumn");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::all_missing_column);
    }
}

TEST_CASE("exclude_column drops the named covariates") {
    const auto data = test::make_dataset({1, 0, 1, 0}, {1, 1, 0, 0},
                                         {{1, 2, 3, 4}, {5, 6, 7, 8}}, {"a", "b"});
    ImputationPlan plan;
    plan.covariate_strategy = CovariateStrategy::exclude_column;
    plan.exclude_columns = {"a"};
    const auto imputed = impute_covariates(data, plan);
    REQUIRE(imputed.data.n_covariates() == 1);
    CHECK(imputed.data.covariate_names[0] == "b");
}

TEST_CASE("high-missingness columns trigger the exclusion recommendation") {
    auto data = test::make_dataset({1, 0, 1, 0}, {1, 1, 0, 0}, {{1, 2, 3, 4}}, {"x"});
    data.covariate_missing[0] = 1;
    data.covariate_missing[2] = 1;  // 50% missing
    const auto findings = missingness_findings(data);
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].find("recommend excluding") != std::string::npos);
}

TEST_CASE("mar_standardization without missingness equals plain standardization") {
    Rng rng(31);
    const auto data = test::random_dataset(rng, 50, 2);
    const auto formula = ModelFormula::main_effects({"x1", "x2"});
    const auto plain = estimate_standardization_separate(data, formula, Link::identity);
    const auto mar = mar_standardization(data, formula, Link::identity);
    CHECK(mar.mu1_hat == plain.mu1_hat);
    CHECK(mar.mu0_hat == plain.mu0_hat);
}

TEST_CASE("dr_weighted without missingness equals plain standardization") {
    Rng rng(32);
    const auto data = test::random_dataset(rng, 50, 1);
    const auto formula = ModelFormula::main_effects({"x1"});
    const auto plain = estimate_standardization_separate(data, formula, Link::identity);
    const auto dr = dr_weighted_standardization(data, formula, Link::identity, formula);
    CHECK(dr.mu1_hat == doctest::Approx(plain.mu1_hat).epsilon(1e-8));
    CHECK(dr.mu0_hat == doctest::Approx(plain.mu0_hat).epsilon(1e-8));
}

TEST_CASE("dr with a constant completeness model matches mar_standardization") {
    DGPSpec dgp;
    dgp.n = 400;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::normal, 0.0, 1.0}};
    dgp.outcome.intercept = 1.0;
    dgp.outcome.treatment = 0.5;
    dgp.outcome.covariate_coefs = {1.0};
    dgp.outcome.noise_sd = 0.5;
    dgp.missingness.kind = MissingnessSpec::Kind::mcar;
    dgp.missingness.rate = 0.2;
    Rng rng(33);
    const TrialDataset data = generate_trial(dgp, rng);
    REQUIRE(data.has_missing_outcome());
    const auto formula = ModelFormula::main_effects({"x1"});
    const auto mar = mar_standardization(data, formula, Link::identity);
    const auto dr =
        dr_weighted_standardization(data, formula, Link::identity, ModelFormula::intercept_only());
    CHECK(dr.mu1_hat == doctest::Approx(mar.mu1_hat).epsilon(1e-8));
    CHECK(dr.mu0_hat == doctest::Approx(mar.mu0_hat).epsilon(1e-8));
}

TEST_CASE("insufficient complete cases are reported") {
    auto data = test::make_dataset({1, 0, 1, 0, 1, 0}, {1, 1, 1, 0, 0, 0}, {{1, 2, 3, 4, 5, 6}},
                                   {"x"});
    data.outcome_missing[0] = 1;
    data.outcome_missing[1] = 1;
    data.outcome_missing[2] = 1;  // treated arm fully missing
    try {
        mar_standardization(data, ModelFormula::main_effects({"x"}), Link::identity);
        FAIL("expected InsufficientCompleteCases");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::insufficient_complete_cases);
    }
}

TEST_CASE("MCAR with a correct working model is unbiased") {
    DGPSpec dgp;
    dgp.n = 500;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::normal, 0.0, 1.0}};
    dgp.outcome.intercept = 1.0;
    dgp.outcome.treatment = 0.5;
    dgp.outcome.covariate_coefs = {1.0};
    dgp.outcome.noise_sd = 0.5;
    dgp.missingness.kind = MissingnessSpec::Kind::mcar;
    dgp.missingness.rate = 0.2;
    const double truth = true_estimands(dgp).difference;
    REQUIRE(truth == doctest::Approx(0.5));

    const int R = 400;
    std::vector<double> estimates;
    for (int r = 0; r < R; ++r) {
        Rng rng = Rng::substream(606, static_cast<uint64_t>(r));
        const TrialDataset data = generate_trial(dgp, rng);
        const auto fit = mar_standardization(data, ModelFormula::main_effects({"x1"}),
                                             Link::identity);
        estimates.push_back(fit.mu1_hat - fit.mu0_hat);
    }
    const double bias = mean(estimates) - truth;
    const double mc_sigma = sample_sd(estimates) / std::sqrt(static_cast<double>(R));
    CHECK(std::fabs(bias) < 3.0 * mc_sigma);
}

TEST_CASE("MAR with a misspecified working model is detectably biased") {
    // quadratic truth, linear working model, missingness tilted by X
    DGPSpec dgp;
    dgp.n = 1000;
    dgp.pi = 0.5;
    dgp.covariates = {{CovariateLaw::Kind::normal, 0.0, 1.0}};
    dgp.outcome.intercept = 1.0;
    dgp.outcome.treatment = 0.5;
    dgp.outcome.covariate_coefs = {1.0};
    dgp.outcome.covariate_sq_coefs = {0.8};
    dgp.outcome.noise_sd = 0.5;
    dgp.missingness.kind = MissingnessSpec::Kind::mar;
    dgp.missingness.intercept = -1.2;
    dgp.missingness.x_coefs = {0.7};
    dgp.missingness.z_coef = 0.3;
    const double truth = true_estimands(dgp).difference;
    REQUIRE(truth == doctest::Approx(0.5));

    const int R = 300;
    std::vector<double> estimates;
    for (int r = 0; r < R; ++r) {
        Rng rng = Rng::substream(607, static_cast<uint64_t>(r));
        const TrialDataset data = generate_trial(dgp, rng);
        const auto fit = mar_standardization(data, ModelFormula::main_effects({"x1"}),
                                             Link::identity);
        estimates.push_back(fit.mu1_hat - fit.mu0_hat);
    }
    const double bias = mean(estimates) - truth;
    const double mc_sigma = sample_sd(estimates) / std::sqrt(static_cast<double>(R));
    CHECK(std::fabs(bias) > 3.0 * mc_sigma);  // the bias is real and visible
}
