#include "rct/glm.hpp"

#include <cmath>
#include <sstream>

namespace rct {

const char* link_name(Link link) {
    switch (link) {
        case Link::identity: return "identity";
        case Link::logit: return "logit";
        case Link::log: return "log";
    }
    return "?";
}

Link link_from_name(const std::string& name) {
    if (name == "identity") return Link::identity;
    if (name == "logit") return Link::logit;
    if (name == "log") return Link::log;
    throw Error(ErrorKind::invalid_config, "unknown link: " + name);
}

double link_forward(Link link, double mu) {
    switch (link) {
        case Link::identity: return mu;
        case Link::logit: return std::log(mu / (1.0 - mu));
        case Link::log: return std::log(mu);
    }
    return 0.0;
}

double link_inverse(Link link, double eta) {
    switch (link) {
        case Link::identity: return eta;
        case Link::logit: return 1.0 / (1.0 + std::exp(-eta));
        case Link::log: return std::exp(eta);
    }
    return 0.0;
}

namespace {

constexpr double kVarianceFloor = 1e-12;

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

void check_response(Link link, const Eigen::VectorXd& y) {
    if (link == Link::logit) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] != 0.0 && y[i] != 1.0)
                throw Error(ErrorKind::parse_failure,
                            "logit link requires a 0/1 response (row " + std::to_string(i) + ")");
    }
    if (link == Link::log) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] < 0.0)
                throw Error(ErrorKind::parse_failure,
                            "log link requires a nonnegative response (row " + std::to_string(i) + ")");
    }
}

Eigen::VectorXd initial_eta(Link link, const Eigen::VectorXd& y) {
    Eigen::VectorXd eta(y.size());
    switch (link) {
        case Link::identity:
            eta = y;
            break;
        case Link::logit:
            for (Eigen::Index i = 0; i < y.size(); ++i)
                eta[i] = std::log((y[i] + 0.5) / (1.5 - y[i]));
            break;
        case Link::log:
            for (Eigen::Index i = 0; i < y.size(); ++i) eta[i] = std::log(y[i] + 0.1);
            break;
    }
    return eta;
}

double variance_function(Link link, double mu) {
    switch (link) {
        case Link::identity: return 1.0;
        case Link::logit: return mu * (1.0 - mu);
        case Link::log: return mu;
    }
    return 1.0;
}

}  // namespace

double glm_deviance(Link link, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                    const Eigen::VectorXd& w) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        switch (link) {
            case Link::identity: {
                const double r = y[i] - mu[i];
                dev += w[i] * r * r;
                break;
            }
            case Link::logit:
                dev += 2.0 * w[i] *
                       (xlogy(y[i], y[i] / mu[i]) + xlogy(1.0 - y[i], (1.0 - y[i]) / (1.0 - mu[i])));
                break;
            case Link::log:
                dev += 2.0 * w[i] * (xlogy(y[i], y[i] / mu[i]) - (y[i] - mu[i]));
                break;
        }
    }
    return dev;
}

WorkingModelFit fit_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, Link link,
                        const std::optional<Eigen::VectorXd>& weights, const FitOptions& options) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (y.size() != n)
        throw Error(ErrorKind::dimension_mismatch, "response length disagrees with design rows");
    if (p == 0) throw Error(ErrorKind::rank_deficient_design, "design has no columns");
    if (n < p)
        throw Error(ErrorKind::rank_deficient_design,
                    "fewer observations than parameters (" + std::to_string(n) + " < " +
                        std::to_string(p) + ")");

    Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
    if (w.size() != n)
        throw Error(ErrorKind::dimension_mismatch, "weight length disagrees with design rows");
    double wsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w[i] < 0.0)
            throw Error(ErrorKind::parse_failure, "negative weight at row " + std::to_string(i));
        wsum += w[i];
    }
    if (wsum <= 0.0) throw Error(ErrorKind::parse_failure, "weights sum to zero");
    check_response(link, y);

    // Rank check up front; erroring beats silently dropping columns.
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < p) {
            std::ostringstream os;
            os << "design rank " << qr.rank() << " < " << p << " columns";
            throw Error(ErrorKind::rank_deficient_design, os.str());
        }
    }

    WorkingModelFit fit;
    fit.link = link;
    fit.has_intercept = (design.col(0).array() == 1.0).all();
    fit.n_params_excluding_intercept = static_cast<int>(p) - (fit.has_intercept ? 1 : 0);

    // Identity link: plain weighted least squares, one shot.
    if (link == Link::identity) {
        Eigen::MatrixXd xtx = design.transpose() * w.asDiagonal() * design;
        Eigen::VectorXd xty = design.transpose() * (w.array() * y.array()).matrix();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
        fit.coefficients = ldlt.solve(xty);
        Eigen::VectorXd mu = design * fit.coefficients;
        fit.deviance = glm_deviance(link, y, mu, w);
        fit.converged = true;
        fit.iterations = 1;
        const double dof = wsum - static_cast<double>(p);
        const double dispersion = dof > 0.0 ? fit.deviance / dof : 0.0;
        fit.coef_covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p)) * dispersion;
        return fit;
    }

    Eigen::VectorXd eta = initial_eta(link, y);
    Eigen::VectorXd mu(n), beta = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = link_inverse(link, eta[i]);
    double deviance = glm_deviance(link, y, mu, w);
    bool converged = false;
    int iter = 0;
    Eigen::MatrixXd xtwx;

    while (iter < options.max_iterations) {
        ++iter;
        Eigen::VectorXd irls_w(n), working(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = std::max(variance_function(link, mu[i]), kVarianceFloor);
            irls_w[i] = w[i] * v;
            working[i] = eta[i] + (y[i] - mu[i]) / v;
        }
        xtwx = design.transpose() * irls_w.asDiagonal() * design;
        Eigen::VectorXd xtwz = design.transpose() * (irls_w.array() * working.array()).matrix();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
        Eigen::VectorXd proposal = ldlt.solve(xtwz);

        // Step-halving keeps the deviance non-increasing.
        Eigen::VectorXd candidate = proposal;
        double new_dev = 0.0;
        int halvings = 0;
        while (true) {
            eta = design * candidate;
            for (Eigen::Index i = 0; i < n; ++i) mu[i] = link_inverse(link, eta[i]);
            new_dev = glm_deviance(link, y, mu, w);
            if (new_dev <= deviance + 1e-14 || halvings >= options.max_step_halvings) break;
            ++halvings;
            candidate = 0.5 * (candidate + beta);
        }
        beta = candidate;

        const double change = std::fabs(deviance - new_dev);
        deviance = new_dev;
        if (change < options.deviance_tol_abs ||
            change < options.deviance_tol_rel * (std::fabs(deviance) + 1e-30)) {
            converged = true;
            break;
        }
    }

    fit.coefficients = beta;
    fit.iterations = iter;
    fit.deviance = deviance;
    fit.converged = converged;

    if (link == Link::logit && options.check_separation) {
        // Complete separation: every observation classified perfectly, so
        // the likelihood is monotone and the MLE sits at infinity. Mixed
        // boundary strata in saturated fits do not trip this.
        bool all_at_own_boundary = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (w[i] == 0.0) continue;
            const double gap = y[i] >= 0.5 ? 1.0 - mu[i] : mu[i];
            if (gap > options.boundary_tol) {
                all_at_own_boundary = false;
                break;
            }
        }
        const double max_coef = beta.cwiseAbs().maxCoeff();
        bool boundary_with_huge_coef = false;
        if (max_coef > 1e6) {
            for (Eigen::Index i = 0; i < n; ++i)
                if (mu[i] < options.boundary_tol || mu[i] > 1.0 - options.boundary_tol) {
                    boundary_with_huge_coef = true;
                    break;
                }
        }
        if (all_at_own_boundary || boundary_with_huge_coef)
            throw Error(ErrorKind::separation,
                        "separated logit fit (maximum likelihood at infinity); consider the "
                        "unadjusted estimator or a smaller covariate set");
    }

    if (!converged && options.error_on_nonconvergence)
        throw Error(ErrorKind::non_convergence,
                    "IRLS did not converge in " + std::to_string(options.max_iterations) +
                        " iterations; consider the unadjusted estimator");

    fit.coef_covariance = xtwx.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    return fit;
}

Eigen::VectorXd predict_mean(const WorkingModelFit& fit, const Eigen::MatrixXd& design_rows) {
    if (design_rows.cols() != fit.coefficients.size())
        throw Error(ErrorKind::dimension_mismatch,
                    "prediction design has " + std::to_string(design_rows.cols()) +
                        " columns, fit has " + std::to_string(fit.coefficients.size()));
    Eigen::VectorXd eta = design_rows * fit.coefficients;
    Eigen::VectorXd out(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) out[i] = link_inverse(fit.link, eta[i]);
    return out;
}

}  // namespace rct
