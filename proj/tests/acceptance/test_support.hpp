#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rct/estimators.hpp"
#include "rct/rng.hpp"

namespace accept {

using rct::Link;
using rct::ModelFormula;
using rct::Rng;
using rct::TrialDataset;

// Normal-equations OLS; the oracle route, independent of the library fit.
inline Eigen::VectorXd ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    return (design.transpose() * design).ldlt().solve(design.transpose() * y);
}

inline ModelFormula main_effects(int p) {
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    return ModelFormula::main_effects(names);
}

inline TrialDataset random_dataset(Rng& rng, int n, int p) {
    TrialDataset d;
    d.outcome.resize(n);
    d.arm.resize(n);
    d.outcome_missing.assign(n, 0);
    d.covariates.resize(n, p);
    d.covariate_missing.assign(static_cast<size_t>(n) * p, 0);
    for (int j = 0; j < p; ++j) d.covariate_names.push_back("x" + std::to_string(j + 1));
    const double pi = rng.uniform(0.3, 0.7);
    std::vector<double> beta(p);
    for (int j = 0; j < p; ++j) beta[j] = rng.normal();
    const double effect = rng.normal();
    for (int i = 0; i < n; ++i) {
        d.arm[i] = rng.bernoulli(pi) ? 1 : 0;
        double lp = 0.3 + effect * d.arm[i];
        for (int j = 0; j < p; ++j) {
            d.covariates(i, j) = rng.normal();
            lp += beta[j] * d.covariates(i, j);
        }
        d.outcome[i] = lp + rng.normal();
    }
    d.arm[0] = 1;
    d.arm[1] = 0;
    return d;
}

// One Gaussian/Bernoulli/Poisson outcome per link, moderate effects.
inline TrialDataset random_glm_dataset(Rng& rng, int n, Link link) {
    TrialDataset d;
    d.outcome.resize(n);
    d.arm.resize(n);
    d.outcome_missing.assign(n, 0);
    d.covariates.resize(n, 1);
    d.covariate_missing.assign(n, 0);
    d.covariate_names = {"x1"};
    for (int i = 0; i < n; ++i) {
        d.arm[i] = rng.bernoulli(0.5) ? 1 : 0;
        d.covariates(i, 0) = rng.normal();
        const double lp = 0.2 + 0.4 * d.arm[i] + 0.6 * d.covariates(i, 0);
        switch (link) {
            case Link::identity: d.outcome[i] = lp + rng.normal(); break;
            case Link::logit:
                d.outcome[i] = rng.bernoulli(rct::link_inverse(link, lp)) ? 1.0 : 0.0;
                break;
            case Link::log: d.outcome[i] = rng.poisson(std::exp(0.3 * lp)); break;
        }
    }
    d.arm[0] = 1;
    d.arm[1] = 0;
    return d;
}

}  // namespace accept
