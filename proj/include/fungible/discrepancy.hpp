#pragma once

#include <optional>

#include "fungible/model.hpp"

namespace fungible {

/// ML discrepancy F = ln|Sigma(theta)| - ln|S| + tr(S Sigma(theta)^-1) - p for one
/// analyzed covariance. Caches the factorization of S so repeated evaluations
/// along an optimizer or contour path only factor Sigma(theta).
class Discrepancy {
public:
    /// Throws NotPositiveDefinite(Sample) when s fails the Cholesky test.
    Discrepancy(ModelSpec model, Matrix s);

    const ModelSpec& model() const noexcept { return model_; }
    const Matrix& s() const noexcept { return s_; }

    /// Throws NotPositiveDefinite(Implied) or SingularStructure.
    double value(const ParamVector& theta) const;
    /// +infinity outside the admissible region instead of throwing.
    double value_or_inf(const ParamVector& theta) const;

    /// Analytic gradient via the RAM derivative identity.
    Vector gradient(const ParamVector& theta) const;
    /// Value and gradient together; nullopt outside the admissible region.
    std::optional<std::pair<double, Vector>> try_value_and_gradient(const ParamVector& theta) const;

    /// Central differences of the analytic gradient, h = max(1e-5, 1e-5 |theta_i|),
    /// symmetrized.
    Matrix hessian(const ParamVector& theta) const;

private:
    struct Implied;
    std::optional<Implied> implied(const ParamVector& theta, bool throw_on_failure) const;
    double f_of(const Implied& imp) const;

    ModelSpec model_;
    Matrix s_;
    Matrix s_factor_;  // lower Cholesky factor of s_
    double log_det_s_ = 0.0;
};

double f_ml(const ModelSpec& model, const ParamVector& theta, const Matrix& s);
Vector gradient(const ModelSpec& model, const ParamVector& theta, const Matrix& s);
Matrix hessian(const ModelSpec& model, const ParamVector& theta, const Matrix& s);

/// Population mode: sqrt(f / df). Sample mode: sqrt(max(f / df - 1 / (n - 1), 0)).
double rmsea_from_f(double f, int df, long n, bool population);
/// Inverse of rmsea_from_f on its non-truncated branch.
double f_from_rmsea(double epsilon, int df, long n, bool population);

struct FitIndices {
    double f_value = 0.0;
    int df = 0;
    long n = 0;
    double rmsea_sample = 0.0;
    std::optional<double> rmsea_population;
};

FitIndices fit_indices(double f_value, int df, long n);

/// Regularized lower incomplete gamma P(a, x) by series (x < a + 1) or Lentz
/// continued fraction.
double regularized_gamma_p(double a, double x);

/// Quantile of the chi-square distribution: Wilson-Hilferty start refined by
/// bracketed Newton on P(df/2, x/2).
double chisq_quantile(int df, double prob);

}  // namespace fungible
