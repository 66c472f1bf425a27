#pragma once

#include <Eigen/Dense>
#include <optional>

#include "rct/error.hpp"

namespace rct {

// Canonical links only: identity/Gaussian, logit/Bernoulli, log/Poisson.
enum class Link { identity, logit, log };

const char* link_name(Link link);
Link link_from_name(const std::string& name);

double link_forward(Link link, double mu);
double link_inverse(Link link, double eta);

struct FitOptions {
    int max_iterations = 100;
    double deviance_tol_abs = 1e-10;
    double deviance_tol_rel = 1e-12;
    int max_step_halvings = 20;
    // Fitted-probability threshold for the separation check.
    double boundary_tol = 1e-10;
    bool check_separation = true;
    // When false, an exhausted iteration budget returns converged=false
    // instead of throwing (useful for probing fit trajectories).
    bool error_on_nonconvergence = true;
};

// A fitted working model. Immutable and shareable once returned.
struct WorkingModelFit {
    Link link = Link::identity;
    Eigen::VectorXd coefficients;
    bool has_intercept = true;            // true when design column 0 is constant one
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    int n_params_excluding_intercept = 0;
    // Inverse of the (weighted) Fisher information at the optimum, scaled
    // by the dispersion estimate for the Gaussian family. Used for the
    // model-based Wald test of a single coefficient.
    Eigen::MatrixXd coef_covariance;
};

// Weighted maximum-likelihood fit by iteratively reweighted least squares
// with step-halving on deviance increase. Throws RankDeficientDesign,
// Separation or NonConvergence.
WorkingModelFit fit_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, Link link,
                        const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                        const FitOptions& options = FitOptions{});

// g^{-1}(design_rows * coefficients), elementwise.
Eigen::VectorXd predict_mean(const WorkingModelFit& fit, const Eigen::MatrixXd& design_rows);

// Family deviance at given means (used by tests and by the IRLS loop).
double glm_deviance(Link link, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                    const Eigen::VectorXd& w);

}  // namespace rct
