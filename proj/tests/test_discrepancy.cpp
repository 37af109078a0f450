#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fungible/discrepancy.hpp"
#include "fungible/errors.hpp"
#include "support.hpp"

using namespace fungible;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("scalar discrepancy has its closed form") {
    std::vector<std::string> names{"x"};
    const ModelSpec m(names, 1, {}, {{0, 0, 0}}, {"v"});
    ParamVector theta(1);
    theta << 2.0;
    Matrix s(1, 1);
    s << 1.5;
    const double expected = std::log(2.0) - std::log(1.5) + 1.5 / 2.0 - 1.0;
    CHECK_THAT(f_ml(m, theta, s), WithinAbs(expected, 1e-15));
    // dF/dv = 1/v - s/v^2
    CHECK_THAT(gradient(m, theta, s)[0], WithinAbs(1.0 / 2.0 - 1.5 / 4.0, 1e-15));
    // d2F/dv2 = -1/v^2 + 2s/v^3
    CHECK_THAT(hessian(m, theta, s)(0, 0), WithinAbs(-0.25 + 3.0 / 8.0, 1e-8));
}

TEST_CASE("discrepancy agrees with a direct determinant evaluation") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 40; ++rep) {
        const auto c = testing::random_case(rng);
        const double direct = testing::f_ml_direct(sigma_of_theta(c.model, c.theta), c.s);
        CHECK_THAT(f_ml(c.model, c.theta, c.s), WithinAbs(direct, 1e-10 * std::max(1.0, direct)));
    }
}

TEST_CASE("discrepancy vanishes at the implied covariance and is positive elsewhere") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const auto c = testing::random_case(rng);
        const Matrix sigma = sigma_of_theta(c.model, c.theta);
        CHECK(f_ml(c.model, c.theta, sigma) < 1e-12);
        CHECK(f_ml(c.model, c.theta, c.s) > 0.0);
    }
}

TEST_CASE("analytic gradient matches finite differences of the value") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 60; ++rep) {
        const auto c = testing::random_case(rng);
        const Discrepancy d(c.model, c.s);
        const Vector g = d.gradient(c.theta);
        const Vector fd = testing::fd_gradient([&](const ParamVector& t) { return d.value(t); }, c.theta);
        INFO("case " << rep << " with " << c.model.n_params() << " parameters");
        CHECK((g - fd).norm() <= 1e-7 * std::max(fd.norm(), 1e-3));
    }
}

TEST_CASE("value and gradient come back together") {
    std::mt19937_64 rng(9);
    const auto c = testing::random_case(rng);
    const Discrepancy d(c.model, c.s);
    const auto vg = d.try_value_and_gradient(c.theta);
    REQUIRE(vg);
    CHECK(vg->first == d.value(c.theta));
    CHECK((vg->second - d.gradient(c.theta)).norm() == 0.0);
}

TEST_CASE("hessian is symmetric and matches differences of the gradient") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        const auto c = testing::random_case(rng);
        const Discrepancy d(c.model, c.s);
        const Matrix h = d.hessian(c.theta);
        CHECK((h - h.transpose()).norm() == 0.0);
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            const Vector col = testing::fd_gradient(
                [&](const ParamVector& t) { return d.gradient(t)[j]; }, c.theta);
            CHECK((h.col(j) - col).norm() <= 1e-5 * std::max(1.0, col.norm()));
        }
    }
}

TEST_CASE("inadmissible points") {
    const ModelSpec m = canonical_model(0.6);
    const Matrix s = builtin_condition("Sigma1").sigma_pop;
    ParamVector theta = builtin_condition("Sigma1").theta_star;
    theta[m.param_index("u_x1")] = -5.0;
    const Discrepancy d(m, s);
    CHECK_THROWS_AS(d.value(theta), NotPositiveDefinite);
    CHECK(std::isinf(d.value_or_inf(theta)));
    CHECK_FALSE(d.try_value_and_gradient(theta).has_value());

    Matrix bad = s;
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(Discrepancy(m, bad), NotPositiveDefinite);
    CHECK_THROWS_AS(Discrepancy(m, Matrix::Identity(3, 3)), InvalidInput);
}

TEST_CASE("RMSEA conversions") {
    CHECK_THAT(rmsea_from_f(0.08, 8, 0, true), WithinRel(0.1, 1e-14));
    CHECK_THAT(rmsea_from_f(8.0 * (0.0025 + 1.0 / 199.0), 8, 200, false), WithinRel(0.05, 1e-12));
    CHECK(rmsea_from_f(0.01, 8, 200, false) == 0.0);
    for (double eps : {0.0, 0.01, 0.05, 0.2}) {
        CHECK_THAT(rmsea_from_f(f_from_rmsea(eps, 8, 200, false), 8, 200, false), WithinAbs(eps, 1e-12));
        CHECK_THAT(rmsea_from_f(f_from_rmsea(eps, 8, 0, true), 8, 0, true), WithinAbs(eps, 1e-12));
    }
    CHECK_THROWS_AS(rmsea_from_f(0.1, 0, 200, false), InvalidInput);
    CHECK_THROWS_AS(rmsea_from_f(0.1, 8, 1, false), InvalidInput);

    const FitIndices ix = fit_indices(0.08, 8, 0);
    REQUIRE(ix.rmsea_population);
    CHECK_THAT(*ix.rmsea_population, WithinRel(0.1, 1e-14));
}
