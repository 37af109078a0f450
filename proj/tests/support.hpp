#pragma once

// Shared fixtures for the test binaries: a random RAM model generator and
// finite-difference oracles that only ever call the objective value.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fungible/discrepancy.hpp"
#include "fungible/model.hpp"

namespace testing {

using fungible::Matrix;
using fungible::ModelSpec;
using fungible::ParamVector;
using fungible::PatternEntry;
using fungible::Vector;

struct RandomCase {
    ModelSpec model;
    ParamVector theta_true;
    ParamVector theta;
    Matrix s;
};

// Congeneric factor model with 1 or 2 latent variables (marker loadings fixed at
// 1), an optional F1 -> F2 path and an optional residual covariance.
inline ModelSpec random_model(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick_k(1, 2);
    const int k = pick_k(rng);
    std::uniform_int_distribution<int> pick_p(k == 1 ? 3 : 4, 6);
    const int p = pick_p(rng);

    std::vector<std::string> names;
    for (int i = 0; i < p; ++i) names.push_back("v" + std::to_string(i));
    for (int j = 0; j < k; ++j) names.push_back("F" + std::to_string(j));

    std::vector<PatternEntry> directed;
    std::vector<PatternEntry> symmetric;
    std::vector<std::string> params;
    auto free_param = [&](std::string name) {
        params.push_back(std::move(name));
        return static_cast<int>(params.size() - 1);
    };
    const int split = k == 1 ? p : p / 2;
    for (int i = 0; i < p; ++i) {
        const int f = i < split ? 0 : 1;
        const bool marker = (i == 0) || (i == split);
        if (marker)
            directed.push_back({i, p + f, -1, 1.0});
        else
            directed.push_back({i, p + f, free_param("l" + std::to_string(i)), 0.0});
        symmetric.push_back({i, i, free_param("u" + std::to_string(i)), 0.0});
    }
    for (int j = 0; j < k; ++j) symmetric.push_back({p + j, p + j, free_param("d" + std::to_string(j)), 0.0});
    if (k == 2) directed.push_back({p + 1, p, free_param("b"), 0.0});
    const int moments = p * (p + 1) / 2;
    if (p >= 5 && static_cast<int>(params.size()) < moments && std::bernoulli_distribution(0.5)(rng))
        symmetric.push_back({p - 1, 0, free_param("c"), 0.0});
    return ModelSpec(names, p, directed, symmetric, params);
}

inline ParamVector random_theta(const ModelSpec& model, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> loading(0.5, 1.2);
    std::uniform_real_distribution<double> variance(0.3, 1.2);
    std::uniform_real_distribution<double> effect(-0.5, 0.5);
    std::uniform_real_distribution<double> cov(-0.1, 0.1);
    ParamVector theta(model.n_params());
    for (int k = 0; k < model.n_params(); ++k) {
        const char c = model.theta_names()[k][0];
        theta[k] = c == 'l' ? loading(rng) : c == 'b' ? effect(rng) : c == 'c' ? cov(rng) : variance(rng);
    }
    return theta;
}

// Sample covariance of n draws from N(0, sigma).
inline Matrix sample_covariance(const Matrix& sigma, int n, std::mt19937_64& rng) {
    const Eigen::Index p = sigma.rows();
    const Matrix l = Eigen::LLT<Matrix>(sigma).matrixL();
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix x(n, p);
    for (int r = 0; r < n; ++r) {
        Vector e(p);
        for (Eigen::Index j = 0; j < p; ++j) e[j] = z(rng);
        x.row(r) = (l * e).transpose();
    }
    const Matrix centered = x.rowwise() - x.colwise().mean();
    Matrix s = centered.transpose() * centered / static_cast<double>(n - 1);
    return 0.5 * (s + s.transpose());
}

inline RandomCase random_case(std::mt19937_64& rng) {
    for (;;) {
        ModelSpec model = random_model(rng);
        const ParamVector truth = random_theta(model, rng);
        const Matrix sigma = fungible::sigma_of_theta(model, truth);
        if (Eigen::LLT<Matrix>(sigma).info() != Eigen::Success) continue;
        std::uniform_int_distribution<int> pick_n(60, 400);
        const Matrix s = sample_covariance(sigma, pick_n(rng), rng);
        std::uniform_real_distribution<double> jitter(0.85, 1.15);
        ParamVector theta = truth;
        for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] *= jitter(rng);
        const Matrix implied = fungible::sigma_of_theta(model, theta);
        if (Eigen::LLT<Matrix>(implied).info() != Eigen::Success) continue;
        return {std::move(model), truth, theta, s};
    }
}

// Richardson-extrapolated central differences of a scalar function.
inline Vector fd_gradient(const std::function<double(const ParamVector&)>& f, const ParamVector& x) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-3 * std::max(1.0, std::abs(x[i]));
        auto central = [&](double step) {
            ParamVector xp = x;
            ParamVector xm = x;
            xp[i] += step;
            xm[i] -= step;
            return (f(xp) - f(xm)) / (2.0 * step);
        };
        const double d1 = central(h);
        const double d2 = central(h / 2.0);
        g[i] = (4.0 * d2 - d1) / 3.0;
    }
    return g;
}

// Plain-Eigen evaluation of the ML discrepancy, independent of the library's
// cached factorizations.
inline double f_ml_direct(const Matrix& sigma, const Matrix& s) {
    const double p = static_cast<double>(s.rows());
    return std::log(sigma.determinant()) - std::log(s.determinant()) + (s * sigma.inverse()).trace() - p;
}

}  // namespace testing
