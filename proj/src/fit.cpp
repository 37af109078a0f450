#include "fungible/fit.hpp"

#include <cmath>
#include <limits>

#include "fungible/discrepancy.hpp"
#include "fungible/errors.hpp"

namespace fungible {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr int kPolishSteps = 5;

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool has_negative_variance(const ModelSpec& model, const ParamVector& theta) {
    for (const auto& e : model.symmetric())
        if (e.is_free() && e.row == e.col && theta[e.param] < 0.0) return true;
    return false;
}

}  // namespace

FitResult fit_ml(const ModelSpec& model, const Matrix& s, long n, const FitOptions& opts) {
    const Discrepancy disc(model, s);
    const int q = model.n_params();

    ParamVector theta = opts.start ? *opts.start : model.start_for(s);
    model.check_theta(theta);
    auto start = disc.try_value_and_gradient(theta);
    if (!start)
        throw NotPositiveDefinite(NotPositiveDefinite::Which::Implied,
                                  "model-implied covariance is not positive definite at the start vector");
    double f = start->first;
    Vector g = std::move(start->second);

    FitResult out{model, {}, 0.0, 0.0, {}, 0, false, false, n, s, {f}};

    Matrix h_inv = Matrix::Identity(q, q);
    bool scaled = false;
    int iter = 0;
    while (iter < opts.max_iter && max_abs(g) >= opts.grad_tol) {
        Vector dir = -h_inv * g;
        if (g.dot(dir) >= 0.0) {
            h_inv.setIdentity();
            scaled = false;
            dir = -g;
        }
        // Keep trial points within a unit box of the current iterate.
        const double longest = max_abs(dir);
        if (longest > 1.0) dir /= longest;
        const double slope = g.dot(dir);

        double alpha = 1.0;
        std::optional<std::pair<double, Vector>> trial;
        ParamVector next;
        for (int k = 0; k < kMaxHalvings; ++k, alpha *= 0.5) {
            next = theta + alpha * dir;
            trial = disc.try_value_and_gradient(next);
            if (trial && trial->first <= f + kArmijo * alpha * slope) break;
            trial.reset();
        }
        if (!trial) break;

        const Vector step = next - theta;
        const Vector dg = trial->second - g;
        const double sy = step.dot(dg);
        if (sy > 1e-12 * step.norm() * dg.norm()) {
            if (!scaled) {
                h_inv = Matrix::Identity(q, q) * (sy / dg.squaredNorm());
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Matrix left = Matrix::Identity(q, q) - rho * step * dg.transpose();
            h_inv = left * h_inv * left.transpose() + rho * step * step.transpose();
        }

        const double f_old = f;
        theta = next;
        f = trial->first;
        g = std::move(trial->second);
        out.f_trace.push_back(f);
        ++iter;
        if (f_old - f <= opts.rel_f_tol * std::abs(f_old)) break;
    }

    // Newton polish on the finite-difference Hessian; accepted only while it
    // shrinks the gradient without raising the objective beyond rounding.
    for (int k = 0; k < kPolishSteps && iter < opts.max_iter && max_abs(g) > 1e-3 * opts.grad_tol; ++k) {
        Eigen::LDLT<Matrix> ldlt;
        try {
            ldlt.compute(disc.hessian(theta));
        } catch (const DomainError&) {
            break;
        }
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        const Vector newton = -ldlt.solve(g);
        if (!newton.allFinite()) break;
        bool accepted = false;
        double alpha = 1.0;
        for (int h = 0; h < 20 && !accepted; ++h, alpha *= 0.5) {
            const ParamVector next = theta + alpha * newton;
            auto trial = disc.try_value_and_gradient(next);
            const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
            if (trial && max_abs(trial->second) < max_abs(g) && trial->first <= f + slack) {
                theta = next;
                f = trial->first;
                g = std::move(trial->second);
                out.f_trace.push_back(f);
                ++iter;
                accepted = true;
            }
        }
        if (!accepted) break;
    }

    out.grad_norm = max_abs(g);
    out.iterations = iter;
    if (!(out.grad_norm < opts.grad_tol)) throw NoConvergence(iter, out.grad_norm);

    out.theta_hat = theta;
    out.f_hat = f;
    out.converged = true;
    out.improper = has_negative_variance(model, theta);
    out.hessian_at_opt = disc.hessian(theta);
    return out;
}

double population_rmsea(const ModelSpec& model, const Matrix& sigma_pop, int df,
                        const FitOptions& opts) {
    const FitResult r = fit_ml(model, sigma_pop, 0, opts);
    return rmsea_from_f(r.f_hat, df, 0, true);
}

}  // namespace fungible
