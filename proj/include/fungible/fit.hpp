#pragma once

#include <optional>
#include <vector>

#include "fungible/model.hpp"

namespace fungible {

struct FitOptions {
    int max_iter = 500;
    double grad_tol = 1e-6;
    double rel_f_tol = 1e-12;
    std::optional<ParamVector> start;
};

struct FitResult {
    ModelSpec model;
    ParamVector theta_hat;
    double f_hat = 0.0;
    /// Max-norm of the gradient at theta_hat.
    double grad_norm = 0.0;
    Matrix hessian_at_opt;
    int iterations = 0;
    bool converged = false;
    /// A free variance ended up negative. Reported, never clamped.
    bool improper = false;
    /// Sample size used for inference; 0 for a population analysis.
    long n = 0;
    Matrix s;
    /// Objective at the start vector followed by the accepted iterates.
    std::vector<double> f_trace;

    int df() const noexcept { return model.df(); }
};

/// Quasi-Newton (BFGS) minimization of the ML discrepancy with a backtracking line
/// search that rejects steps leaving the positive definite cone, followed by a
/// Newton polish on the finite-difference Hessian.
///
/// Throws NotPositiveDefinite for an invalid `s` or start vector and NoConvergence
/// when the gradient max-norm stays above opts.grad_tol.
FitResult fit_ml(const ModelSpec& model, const Matrix& s, long n, const FitOptions& opts = {});

/// sqrt(F0 / df) for the ML fit of the model to a population covariance.
double population_rmsea(const ModelSpec& model, const Matrix& sigma_pop, int df,
                        const FitOptions& opts = {});

}  // namespace fungible
