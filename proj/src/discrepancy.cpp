#include "fungible/discrepancy.hpp"

#include <cmath>
#include <limits>

#include "fungible/errors.hpp"

namespace fungible {

struct Discrepancy::Implied {
    Matrix b;      // (I - A)^-1
    Matrix sym;    // S(theta), RAM symmetric matrix
    Matrix sigma;  // observed block
    Eigen::LLT<Matrix> llt;
};

namespace {

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Discrepancy::Discrepancy(ModelSpec model, Matrix s) : model_(std::move(model)), s_(std::move(s)) {
    const int p = model_.n_observed();
    if (s_.rows() != p || s_.cols() != p)
        throw InvalidInput("covariance is " + std::to_string(s_.rows()) + "x" +
                           std::to_string(s_.cols()) + ", model has " + std::to_string(p) +
                           " observed variables");
    Eigen::LLT<Matrix> llt(s_);
    if (!s_.allFinite() || llt.info() != Eigen::Success)
        throw NotPositiveDefinite(NotPositiveDefinite::Which::Sample,
                                  "analyzed covariance is not positive definite");
    log_det_s_ = log_det(llt);
    s_factor_ = llt.matrixL();
}

// tr(Sigma^-1 S) = ||L^-1 L_S||_F^2 with Sigma = L L' and S = L_S L_S'.
double Discrepancy::f_of(const Implied& imp) const {
    const Matrix half = imp.llt.matrixL().solve(s_factor_);
    return log_det(imp.llt) - log_det_s_ + half.squaredNorm() - model_.n_observed();
}

std::optional<Discrepancy::Implied> Discrepancy::implied(const ParamVector& theta,
                                                         bool throw_on_failure) const {
    const ModelSpec& model = model_;
    model.check_theta(theta);
    Implied out;
    try {
        out.b = model.structure_inverse(theta);
    } catch (const SingularStructure&) {
        if (throw_on_failure) throw;
        return std::nullopt;
    }
    out.sym = model.symmetric_matrix(theta);
    const auto fb = out.b.topRows(model.n_observed());
    out.sigma = fb.lazyProduct(out.sym).lazyProduct(fb.transpose());
    out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
    out.llt.compute(out.sigma);
    if (!out.sigma.allFinite() || out.llt.info() != Eigen::Success) {
        if (throw_on_failure)
            throw NotPositiveDefinite(NotPositiveDefinite::Which::Implied,
                                      "model-implied covariance is not positive definite");
        return std::nullopt;
    }
    return out;
}

double Discrepancy::value(const ParamVector& theta) const {
    return std::max(f_of(*implied(theta, true)), 0.0);
}

double Discrepancy::value_or_inf(const ParamVector& theta) const {
    const auto imp = implied(theta, false);
    if (!imp) return std::numeric_limits<double>::infinity();
    const double f = f_of(*imp);
    return std::isfinite(f) ? std::max(f, 0.0) : std::numeric_limits<double>::infinity();
}

std::optional<std::pair<double, Vector>> Discrepancy::try_value_and_gradient(
    const ParamVector& theta) const {
    const auto imp = implied(theta, false);
    if (!imp) return std::nullopt;
    const ModelSpec& model = model_;
    const int p = model.n_observed();
    const int m = model.n_variables();

    const Matrix sigma_inv = imp->llt.solve(Matrix::Identity(p, p));
    const Matrix sinv_s = sigma_inv.lazyProduct(s_);
    const double f = std::max(f_of(*imp), 0.0);

    // dF = tr(W dSigma), W = Sigma^-1 (Sigma - S) Sigma^-1.
    Matrix g_full = Matrix::Zero(m, m);
    g_full.topLeftCorner(p, p) = sigma_inv - sinv_s.lazyProduct(sigma_inv);
    const Matrix gm = imp->b.transpose().lazyProduct(g_full).lazyProduct(imp->b);
    const Matrix ga = 2.0 * gm.lazyProduct(imp->sym).lazyProduct(imp->b.transpose());

    Vector grad = Vector::Zero(model.n_params());
    for (const auto& e : model.directed())
        if (e.is_free()) grad[e.param] += ga(e.row, e.col);
    for (const auto& e : model.symmetric())
        if (e.is_free()) grad[e.param] += gm(e.row, e.col);
    if (!std::isfinite(f) || !grad.allFinite()) return std::nullopt;
    return std::make_pair(f, std::move(grad));
}

Vector Discrepancy::gradient(const ParamVector& theta) const {
    implied(theta, true);  // raises the precise error when outside the domain
    auto vg = try_value_and_gradient(theta);
    if (!vg)
        throw NotPositiveDefinite(NotPositiveDefinite::Which::Implied,
                                  "model-implied covariance is not positive definite");
    return std::move(vg->second);
}

Matrix Discrepancy::hessian(const ParamVector& theta) const {
    const int q = model_.n_params();
    Matrix h(q, q);
    for (int i = 0; i < q; ++i) {
        const double step = std::max(1e-5, 1e-5 * std::abs(theta[i]));
        ParamVector up = theta;
        ParamVector down = theta;
        up[i] += step;
        down[i] -= step;
        h.col(i) = (gradient(up) - gradient(down)) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

double f_ml(const ModelSpec& model, const ParamVector& theta, const Matrix& s) {
    return Discrepancy(model, s).value(theta);
}

Vector gradient(const ModelSpec& model, const ParamVector& theta, const Matrix& s) {
    return Discrepancy(model, s).gradient(theta);
}

Matrix hessian(const ModelSpec& model, const ParamVector& theta, const Matrix& s) {
    return Discrepancy(model, s).hessian(theta);
}

double rmsea_from_f(double f, int df, long n, bool population) {
    if (df < 1) throw InvalidInput("RMSEA needs df >= 1");
    if (population) return std::sqrt(std::max(f, 0.0) / df);
    if (n < 2) throw InvalidInput("sample RMSEA needs n >= 2");
    return std::sqrt(std::max(f / df - 1.0 / static_cast<double>(n - 1), 0.0));
}

double f_from_rmsea(double epsilon, int df, long n, bool population) {
    if (df < 1) throw InvalidInput("RMSEA needs df >= 1");
    if (population) return df * epsilon * epsilon;
    if (n < 2) throw InvalidInput("sample RMSEA needs n >= 2");
    return df * (epsilon * epsilon + 1.0 / static_cast<double>(n - 1));
}

FitIndices fit_indices(double f_value, int df, long n) {
    FitIndices out;
    out.f_value = f_value;
    out.df = df;
    out.n = n;
    if (df >= 1) {
        if (n >= 2) out.rmsea_sample = rmsea_from_f(f_value, df, n, false);
        out.rmsea_population = rmsea_from_f(f_value, df, n, true);
    }
    return out;
}

}  // namespace fungible
