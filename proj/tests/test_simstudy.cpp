#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "fungible/errors.hpp"
#include "fungible/rng.hpp"
#include "fungible/simstudy.hpp"

using namespace fungible;
using Catch::Matchers::WithinAbs;

namespace {

StudyDesign small_design() {
    StudyDesign d;
    d.conditions = {"Sigma3"};
    d.sample_sizes = {300};
    d.epsilons = {0.0, 0.05};
    d.replications = 6;
    d.n_directions = 36;
    d.seed = 17;
    d.threads = 1;
    return d;
}

}  // namespace

TEST_CASE("counter generator is addressable and key-sensitive") {
    CounterRng a(42);
    CounterRng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    CHECK(a.counter() == 100);
    CounterRng c(43);
    CounterRng d(42);
    CHECK(c() != d());

    std::set<std::uint64_t> keys;
    for (long r = 0; r < 200; ++r) keys.insert(replication_key(1, "Sigma1", 200, 0.03, r));
    keys.insert(replication_key(1, "Sigma2", 200, 0.03, 0));
    keys.insert(replication_key(1, "Sigma1", 1000, 0.03, 0));
    keys.insert(replication_key(1, "Sigma1", 200, 0.09, 0));
    keys.insert(replication_key(2, "Sigma1", 200, 0.03, 0));
    CHECK(keys.size() == 204);
    CHECK(hash_double(0.0) == hash_double(-0.0));
    CHECK(hash_string("") == 0xcbf29ce484222325ULL);
    CHECK(hash_string("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("counter generator output is roughly uniform") {
    CounterRng g(7);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(g() >> 11) * 0x1.0p-53;
    // Mean of U(0,1) within 4 standard errors.
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("scalar Wishart draws have the chi-square mean and variance") {
    Matrix one = Matrix::Ones(1, 1);
    const long n = 30;
    const int draws = 10000;
    CounterRng g(99);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double x = (n - 1) * wishart_sample(one, n, g)(0, 0);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    const double se = std::sqrt(2.0 * (n - 1) / draws);
    CHECK(std::abs(mean - (n - 1)) < 3.0 * se);
    CHECK(std::abs(var - 2.0 * (n - 1)) < 0.1 * 2.0 * (n - 1));
}

TEST_CASE("Wishart mean converges to the scale matrix") {
    Matrix sigma(2, 2);
    sigma << 2.0, 0.6, 0.6, 1.0;
    CounterRng g(5);
    Matrix acc = Matrix::Zero(2, 2);
    const int draws = 4000;
    for (int i = 0; i < draws; ++i) {
        const Matrix s = wishart_sample(sigma, 50, g);
        CHECK((s - s.transpose()).norm() == 0.0);
        acc += s;
    }
    acc /= draws;
    // Var(s_ij) = (sigma_ij^2 + sigma_ii sigma_jj) / (n - 1).
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double se = std::sqrt((sigma(i, j) * sigma(i, j) + sigma(i, i) * sigma(j, j)) / 49.0 / draws);
            CHECK(std::abs(acc(i, j) - sigma(i, j)) < 4.0 * se);
        }
    CHECK_THROWS_AS(wishart_sample(sigma, 2, g), InvalidInput);
}

TEST_CASE("design validation") {
    StudyDesign d;
    CHECK_NOTHROW(d.validate());
    d.epsilons = {0.03, 0.0};
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    d = StudyDesign{};
    d.replications = 0;
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    d = StudyDesign{};
    d.sample_sizes = {1};
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    d = StudyDesign{};
    d.delta_f = ContourTarget::confidence_set(0.9);
    CHECK_THROWS_AS(d.validate(), InvalidInput);
}

TEST_CASE("population confidence sets have zero spread") {
    StudyDesign d = small_design();
    const StudyCell cell = run_cell(d, "Sigma3", 300, 0.0, ContourMode::ConfidenceSet);
    CHECK(cell.replications == 1);
    CHECK(cell.n_converged == 1);
    CHECK(cell.major_sd == 0.0);
    CHECK(cell.minor_sd == 0.0);
    CHECK(cell.major_mean >= cell.minor_mean);
}

TEST_CASE("a single replication has zero spread") {
    StudyDesign d = small_design();
    d.replications = 1;
    const StudyCell cell = run_cell(d, "Sigma3", 300, 0.0, ContourMode::DeltaF);
    CHECK(cell.replications == 1);
    if (cell.n_converged == 1) CHECK(cell.major_sd == 0.0);
}

TEST_CASE("cells are deterministic and independent of thread count") {
    StudyDesign d = small_design();
    const StudyCell a = run_cell(d, "Sigma3", 300, 0.05, ContourMode::EpsilonTilde);
    d.threads = 3;
    const StudyCell b = run_cell(d, "Sigma3", 300, 0.05, ContourMode::EpsilonTilde);
    CHECK(a.major_mean == b.major_mean);
    CHECK(a.major_sd == b.major_sd);
    CHECK(a.minor_mean == b.minor_mean);
    CHECK(a.n_converged == b.n_converged);
    CHECK(a.n_converged + a.n_excluded == a.replications);
    CHECK(a.replications == 6);
    d.seed = 18;
    const StudyCell c = run_cell(d, "Sigma3", 300, 0.05, ContourMode::EpsilonTilde);
    CHECK(c.major_mean != a.major_mean);
}

TEST_CASE("design layout") {
    StudyDesign d = small_design();
    d.replications = 2;
    d.width_method = WidthMethod::Quadratic;
    const StudyTable t = run_design(d);
    // Per condition and N: one confidence-set cell plus two FPE modes per misfit level.
    REQUIRE(t.cells.size() == 1 + 2 * 2);
    CHECK(t.cells[0].mode == ContourMode::ConfidenceSet);
    CHECK(t.cells[0].epsilon == 0.0);
    REQUIRE(t.find("Sigma3", 300, 0.05, ContourMode::DeltaF) != nullptr);
    CHECK(t.find("Sigma3", 300, 0.05, ContourMode::ConfidenceSet) == nullptr);
    for (const auto& cell : t.cells)
        if (cell.n_converged > 0) CHECK(cell.major_mean >= cell.minor_mean);

    d.conditions.clear();
    CHECK(run_design(d).cells.empty());
}

TEST_CASE("width method names") {
    CHECK(parse_width_method("exact") == WidthMethod::Exact);
    CHECK(std::string(width_method_name(WidthMethod::Quadratic)) == "quadratic");
    CHECK_THROWS_AS(parse_width_method("grid"), InvalidInput);
}
