#include <catch_amalgamated.hpp>

#include <random>

#include "fungible/discrepancy.hpp"
#include "fungible/errors.hpp"
#include "fungible/fit.hpp"
#include "support.hpp"

using namespace fungible;
using Catch::Matchers::WithinAbs;

TEST_CASE("fitting an exact population recovers its parameters") {
    for (const auto& label : builtin_labels()) {
        const PopulationCondition c = builtin_condition(label);
        const FitResult r = fit_ml(c.model, c.sigma_pop, 0);
        INFO(label);
        CHECK(r.converged);
        CHECK(r.f_hat < 1e-12);
        CHECK((r.theta_hat - c.theta_star).cwiseAbs().maxCoeff() < 1e-6);
        CHECK_FALSE(r.improper);
        CHECK(r.df() == 8);
    }
}

TEST_CASE("random models: the fit is a stationary point with a monotone trace") {
    std::mt19937_64 rng(21);
    int fitted = 0;
    for (int rep = 0; rep < 25; ++rep) {
        const auto c = testing::random_case(rng);
        FitResult r = [&] {
            try {
                return fit_ml(c.model, c.s, 100);
            } catch (const NoConvergence&) {
                return FitResult{c.model, {}, 0, 0, {}, 0, false, false, 0, {}, {}};
            }
        }();
        if (!r.converged) continue;
        ++fitted;
        CHECK(r.grad_norm < 1e-6);
        CHECK(gradient(c.model, r.theta_hat, c.s).cwiseAbs().maxCoeff() < 1e-6);
        for (std::size_t k = 1; k < r.f_trace.size(); ++k)
            CHECK(r.f_trace[k] <= r.f_trace[k - 1] + 1e-14 * (1.0 + r.f_trace[k - 1]));
        CHECK(r.f_hat <= f_ml(c.model, c.theta, c.s));
        CHECK(r.f_hat == r.f_trace.back());
        // A local minimum: the Hessian is positive semidefinite.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(r.hessian_at_opt);
        CHECK(eig.eigenvalues().minCoeff() > -1e-6);
    }
    CHECK(fitted >= 20);
}

TEST_CASE("fit is deterministic and honours explicit starts") {
    const PopulationCondition c = builtin_condition("Sigma2");
    Matrix s = c.sigma_pop;
    s(0, 5) += 0.05;
    s(5, 0) += 0.05;
    const FitResult a = fit_ml(c.model, s, 200);
    const FitResult b = fit_ml(c.model, s, 200);
    CHECK((a.theta_hat - b.theta_hat).norm() == 0.0);
    CHECK(a.f_hat == b.f_hat);

    FitOptions opts;
    opts.start = c.theta_star;
    const FitResult w = fit_ml(c.model, s, 200, opts);
    CHECK_THAT(w.f_hat, WithinAbs(a.f_hat, 1e-12));
    CHECK(w.iterations <= a.iterations);
    CHECK(w.n == 200);
}

TEST_CASE("fit failures") {
    const PopulationCondition c = builtin_condition("Sigma1");
    SECTION("indefinite sample covariance") {
        Matrix s = c.sigma_pop;
        s(1, 1) = -0.5;
        CHECK_THROWS_AS(fit_ml(c.model, s, 200), NotPositiveDefinite);
    }
    SECTION("iteration budget") {
        Matrix s = c.sigma_pop * 1.7;
        FitOptions opts;
        opts.max_iter = 1;
        CHECK_THROWS_AS(fit_ml(c.model, s, 200, opts), NoConvergence);
    }
    SECTION("inadmissible start") {
        FitOptions opts;
        opts.start = c.theta_star;
        (*opts.start)[c.model.param_index("u_x2")] = -3.0;
        CHECK_THROWS_AS(fit_ml(c.model, c.sigma_pop, 200, opts), NotPositiveDefinite);
    }
}

TEST_CASE("negative variance estimates are flagged, not clamped") {
    // Three indicators whose sample correlations force a Heywood case.
    std::vector<std::string> names{"a", "b", "c", "F"};
    std::vector<PatternEntry> dir{{0, 3, 0}, {1, 3, 1}, {2, 3, 2}};
    std::vector<PatternEntry> sym{{0, 0, 3}, {1, 1, 4}, {2, 2, 5}, {3, 3, -1, 1.0}};
    const ModelSpec m(names, 3, dir, sym, {"la", "lb", "lc", "ua", "ub", "uc"});
    Matrix s(3, 3);
    s << 1.0, 0.8, 0.6, 0.8, 1.0, 0.3, 0.6, 0.3, 1.0;
    // Just identified: lambda_a^2 = r_ab r_ac / r_bc = 1.6 > 1.
    const FitResult r = fit_ml(m, s, 300);
    CHECK(r.improper);
    CHECK(r.theta_hat[3] < 0.0);
    CHECK_THAT(r.theta_hat[3], WithinAbs(1.0 - 1.6, 1e-6));
    CHECK(r.f_hat < 1e-10);
}

TEST_CASE("population RMSEA of a correct model is zero") {
    const PopulationCondition c = builtin_condition("Sigma4");
    CHECK(population_rmsea(c.model, c.sigma_pop, c.model.df()) < 1e-6);
}
