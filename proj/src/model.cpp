#include "fungible/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/math/tools/toms748_solve.hpp>

#include "fungible/errors.hpp"
#include "fungible/fit.hpp"

namespace fungible {

namespace {

void check_entries(const std::vector<PatternEntry>& entries, int m, int q, const char* which) {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : entries) {
        if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= m)
            throw InvalidInput(std::string(which) + " entry out of range");
        if (e.param >= q)
            throw InvalidInput(std::string(which) + " entry refers to unknown parameter");
        if (!e.is_free() && !std::isfinite(e.value))
            throw InvalidInput(std::string(which) + " entry has a non-finite fixed value");
        if (!seen.insert({e.row, e.col}).second)
            throw InvalidInput(std::string(which) + " cell (" + std::to_string(e.row) + "," +
                               std::to_string(e.col) + ") listed twice");
    }
}

std::vector<PatternEntry> mirror_symmetric(const std::vector<PatternEntry>& given) {
    std::map<std::pair<int, int>, PatternEntry> cells;
    for (const auto& e : given) cells[{e.row, e.col}] = e;
    std::vector<PatternEntry> full = given;
    for (const auto& e : given) {
        if (e.row == e.col) continue;
        auto it = cells.find({e.col, e.row});
        if (it == cells.end()) {
            PatternEntry t = e;
            std::swap(t.row, t.col);
            full.push_back(t);
            cells[{t.row, t.col}] = t;
        } else if (it->second.param != e.param ||
                   (!e.is_free() && it->second.value != e.value)) {
            throw InvalidInput("symmetric pattern is not symmetric at (" + std::to_string(e.row) +
                               "," + std::to_string(e.col) + ")");
        }
    }
    std::sort(full.begin(), full.end(), [](const PatternEntry& a, const PatternEntry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    return full;
}

// Longest directed path (in edges) over the nonzero cells of A, or -1 when the
// graph has a cycle.
int longest_path(const std::vector<PatternEntry>& directed, int m) {
    std::vector<std::vector<int>> children(m);
    std::vector<int> indegree(m, 0);
    for (const auto& e : directed) {
        if (!e.is_free() && e.value == 0.0) continue;
        if (e.row == e.col) return -1;
        children[e.col].push_back(e.row);
        ++indegree[e.row];
    }
    std::vector<int> depth(m, 0);
    std::vector<int> ready;
    for (int v = 0; v < m; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    int visited = 0;
    int longest = 0;
    while (!ready.empty()) {
        const int v = ready.back();
        ready.pop_back();
        ++visited;
        longest = std::max(longest, depth[v]);
        for (int c : children[v]) {
            depth[c] = std::max(depth[c], depth[v] + 1);
            if (--indegree[c] == 0) ready.push_back(c);
        }
    }
    return visited == m ? longest : -1;
}

}  // namespace

ModelSpec::ModelSpec(std::vector<std::string> variable_names, int n_observed,
                     std::vector<PatternEntry> directed, std::vector<PatternEntry> symmetric,
                     std::vector<std::string> theta_names, std::optional<ParamVector> start_values)
    : variable_names_(std::move(variable_names)),
      n_observed_(n_observed),
      directed_(std::move(directed)),
      theta_names_(std::move(theta_names)),
      start_values_(std::move(start_values)) {
    const int m = n_variables();
    const int q = n_params();
    if (n_observed_ < 1 || n_observed_ > m)
        throw InvalidInput("number of observed variables must be in 1..m");
    if (std::set<std::string>(variable_names_.begin(), variable_names_.end()).size() !=
        variable_names_.size())
        throw InvalidInput("variable names must be unique");
    if (std::set<std::string>(theta_names_.begin(), theta_names_.end()).size() !=
        theta_names_.size())
        throw InvalidInput("parameter names must be unique");

    check_entries(directed_, m, q, "directed");
    check_entries(symmetric, m, q, "symmetric");
    symmetric_ = mirror_symmetric(symmetric);

    std::vector<bool> used(q, false);
    for (const auto& e : directed_)
        if (e.is_free()) used[e.param] = true;
    for (const auto& e : symmetric_)
        if (e.is_free()) used[e.param] = true;
    for (int k = 0; k < q; ++k)
        if (!used[k]) throw InvalidInput("parameter '" + theta_names_[k] + "' is never used");

    if (df() < 0)
        throw InvalidInput("model has more free parameters (" + std::to_string(q) +
                           ") than moments (" + std::to_string(n_moments()) + ")");
    if (start_values_) {
        if (start_values_->size() != q) throw InvalidInput("start vector has the wrong length");
        if (!start_values_->allFinite()) throw InvalidInput("start vector is not finite");
    }
    path_depth_ = longest_path(directed_, m);
    // Throws SingularStructure for an improper structure at the start vector.
    if (!recursive()) ram_inverse(directed_matrix(default_start()));
}

int ModelSpec::param_index(std::string_view name) const {
    auto it = std::find(theta_names_.begin(), theta_names_.end(), name);
    if (it == theta_names_.end()) throw InvalidInput("unknown parameter '" + std::string(name) + "'");
    return static_cast<int>(it - theta_names_.begin());
}

int ModelSpec::variable_index(std::string_view name) const {
    auto it = std::find(variable_names_.begin(), variable_names_.end(), name);
    if (it == variable_names_.end()) throw InvalidInput("unknown variable '" + std::string(name) + "'");
    return static_cast<int>(it - variable_names_.begin());
}

bool ModelSpec::is_variance_param(int k) const {
    return std::any_of(symmetric_.begin(), symmetric_.end(), [k](const PatternEntry& e) {
        return e.param == k && e.row == e.col;
    });
}

Matrix ModelSpec::filter() const {
    Matrix f = Matrix::Zero(n_observed_, n_variables());
    f.leftCols(n_observed_).setIdentity();
    return f;
}

void ModelSpec::check_theta(const ParamVector& theta) const {
    if (theta.size() != n_params())
        throw InvalidInput("parameter vector has length " + std::to_string(theta.size()) +
                           ", model expects " + std::to_string(n_params()));
    if (!theta.allFinite()) throw InvalidInput("parameter vector is not finite");
}

Matrix ModelSpec::directed_matrix(const ParamVector& theta) const {
    const int m = n_variables();
    Matrix a = Matrix::Zero(m, m);
    for (const auto& e : directed_) a(e.row, e.col) = e.is_free() ? theta[e.param] : e.value;
    return a;
}

Matrix ModelSpec::symmetric_matrix(const ParamVector& theta) const {
    const int m = n_variables();
    Matrix s = Matrix::Zero(m, m);
    for (const auto& e : symmetric_) s(e.row, e.col) = e.is_free() ? theta[e.param] : e.value;
    return s;
}

ParamVector ModelSpec::default_start() const {
    if (start_values_) return *start_values_;
    return start_for(Matrix::Identity(n_observed_, n_observed_));
}

ParamVector ModelSpec::start_for(const Matrix& s) const {
    if (start_values_) return *start_values_;
    ParamVector start = ParamVector::Constant(n_params(), 0.1);
    for (const auto& e : symmetric_) {
        if (!e.is_free()) continue;
        if (e.row == e.col)
            start[e.param] = e.row < n_observed_ ? 0.5 * s(e.row, e.row) : 0.5;
        else if (!is_variance_param(e.param))
            start[e.param] = 0.0;
    }
    return start;
}

Matrix ram_inverse(const Matrix& a) {
    const Matrix i_minus_a = Matrix::Identity(a.rows(), a.cols()) - a;
    Eigen::PartialPivLU<Matrix> lu(i_minus_a);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12))
        throw SingularStructure("(I - A) is numerically singular (rcond " + std::to_string(rcond) + ")");
    return lu.inverse();
}

Matrix ModelSpec::structure_inverse(const ParamVector& theta) const {
    const Matrix a = directed_matrix(theta);
    if (!recursive()) return ram_inverse(a);
    const int m = n_variables();
    Matrix b = Matrix::Identity(m, m);
    for (int k = 0; k < path_depth_; ++k) {
        b = a.lazyProduct(b);
        b.diagonal().array() += 1.0;
    }
    return b;
}

Matrix sigma_of_theta(const ModelSpec& model, const ParamVector& theta) {
    model.check_theta(theta);
    const Matrix b = model.structure_inverse(theta);
    const int p = model.n_observed();
    const Matrix fb = b.topRows(p);
    const Matrix sigma = fb * model.symmetric_matrix(theta) * fb.transpose();
    return 0.5 * (sigma + sigma.transpose());
}

// Variables: x1 x2 x3 y1 y2 z | F1 F2.
ModelSpec canonical_model(double marker_loading) {
    enum { x1, x2, x3, y1, y2, z, f1, f2 };
    std::vector<std::string> names{"x1", "x2", "x3", "y1", "y2", "z", "F1", "F2"};
    std::vector<std::string> params{"l_x1", "l_x2", "l_x3", "l_y2",  "b_f2_f1", "b_z_f2", "u_x1",
                                    "u_x2", "u_x3", "u_y1", "u_y2", "d_f2",    "d_z"};
    std::vector<PatternEntry> directed{
        {x1, f1, 0}, {x2, f1, 1}, {x3, f1, 2}, {y1, f2, -1, marker_loading},
        {y2, f2, 3}, {f2, f1, 4}, {z, f2, 5},
    };
    std::vector<PatternEntry> symmetric{
        {x1, x1, 6},  {x2, x2, 7},  {x3, x3, 8},       {y1, y1, 9},
        {y2, y2, 10}, {f2, f2, 11}, {z, z, 12},        {f1, f1, -1, 1.0},
    };
    return ModelSpec(std::move(names), 6, std::move(directed), std::move(symmetric),
                     std::move(params));
}

std::vector<std::string> canonical_focal_names() { return {"b_f2_f1", "b_z_f2"}; }

std::vector<std::string> builtin_labels() { return {"Sigma1", "Sigma2", "Sigma3", "Sigma4"}; }

PopulationCondition builtin_condition(UniqueVariance uv, StructuralEffect se) {
    const double unique = uv == UniqueVariance::Large ? kLargeUniqueVariance : kSmallUniqueVariance;
    const double effect = se == StructuralEffect::Large ? kLargeStructuralEffect : kSmallStructuralEffect;
    const double loading = std::sqrt(1.0 - unique);
    const double disturbance = 1.0 - effect * effect;

    std::string label;
    if (uv == UniqueVariance::Large && se == StructuralEffect::Small) label = "Sigma1";
    if (uv == UniqueVariance::Small && se == StructuralEffect::Small) label = "Sigma2";
    if (uv == UniqueVariance::Large && se == StructuralEffect::Large) label = "Sigma3";
    if (uv == UniqueVariance::Small && se == StructuralEffect::Large) label = "Sigma4";

    ModelSpec model = canonical_model(loading);
    ParamVector theta(model.n_params());
    theta << loading, loading, loading, loading, effect, effect, unique, unique, unique, unique,
        unique, disturbance, disturbance;
    Matrix sigma = sigma_of_theta(model, theta);
    // Residual covariance between x1 and z; not part of the analysis model.
    return PopulationCondition{std::move(label), std::move(model), std::move(theta),
                               std::move(sigma), 0.0, {0, 5}, 0.0};
}

PopulationCondition builtin_condition(std::string_view label) {
    if (label == "Sigma1") return builtin_condition(UniqueVariance::Large, StructuralEffect::Small);
    if (label == "Sigma2") return builtin_condition(UniqueVariance::Small, StructuralEffect::Small);
    if (label == "Sigma3") return builtin_condition(UniqueVariance::Large, StructuralEffect::Large);
    if (label == "Sigma4") return builtin_condition(UniqueVariance::Small, StructuralEffect::Large);
    throw InvalidInput("unknown population condition '" + std::string(label) + "'");
}

namespace {

bool is_positive_definite(const Matrix& m) {
    return Eigen::LLT<Matrix>(m).info() == Eigen::Success;
}

Matrix perturbed(const Matrix& base, std::pair<int, int> ij, double t) {
    Matrix out = base;
    out(ij.first, ij.second) += t;
    out(ij.second, ij.first) += t;
    return out;
}

}  // namespace

PopulationCondition misspecify_to_epsilon(const PopulationCondition& cond, double epsilon_target,
                                          int df) {
    if (!(epsilon_target >= 0.0) || !std::isfinite(epsilon_target))
        throw InvalidInput("epsilon target must be finite and non-negative");
    if (df < 1) throw InvalidInput("misfit injection needs df >= 1");
    const auto [pi, pj] = cond.perturbation;
    const int p = static_cast<int>(cond.sigma_pop.rows());
    if (pi < 0 || pj < 0 || pi >= p || pj >= p || pi == pj)
        throw InvalidInput("condition has no perturbation direction");
    if (epsilon_target == 0.0) return cond;

    const Matrix& base = cond.sigma_pop;
    const double f_goal = df * epsilon_target * epsilon_target;

    // Largest admissible t: Sigma + t E stays positive definite on [0, t_max).
    double t_lo = 0.0;
    double t_hi = std::sqrt(base(pi, pi) * base(pj, pj)) + std::abs(base(pi, pj));
    for (int it = 0; it < 200 && t_hi - t_lo > 1e-14 * t_hi; ++it) {
        const double mid = 0.5 * (t_lo + t_hi);
        (is_positive_definite(perturbed(base, {pi, pj}, mid)) ? t_lo : t_hi) = mid;
    }
    const double t_max = t_lo * (1.0 - 1e-9);

    ParamVector warm = cond.theta_star;
    auto excess = [&](double t) {
        FitOptions opts;
        opts.start = warm;
        const FitResult r = fit_ml(cond.model, perturbed(base, {pi, pj}, t), 0, opts);
        warm = r.theta_hat;
        return r.f_hat - f_goal;
    };

    // Expand geometrically from a small magnitude so each fit warm-starts nearby.
    double lo = 0.0;
    double f_lo = -f_goal;
    double hi = std::min(1e-2, 0.5 * t_max);
    double f_hi = 0.0;
    for (;;) {
        try {
            f_hi = excess(hi);
        } catch (const DomainError& e) {
            throw TargetUnreachable(std::string("misfit injection failed: ") + e.what());
        }
        if (f_hi >= 0.0) break;
        lo = hi;
        f_lo = f_hi;
        if (hi >= t_max)
            throw TargetUnreachable("RMSEA " + std::to_string(epsilon_target) +
                                    " is not reachable before the population covariance loses "
                                    "positive definiteness");
        hi = std::min(2.0 * hi, t_max);
    }

    boost::uintmax_t max_iter = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(b)); };
    std::pair<double, double> bracket;
    try {
        bracket = boost::math::tools::toms748_solve(excess, lo, hi, f_lo, f_hi, tol, max_iter);
    } catch (const DomainError& e) {
        throw TargetUnreachable(std::string("misfit injection failed: ") + e.what());
    }
    const double t = 0.5 * (bracket.first + bracket.second);

    PopulationCondition out = cond;
    out.sigma_pop = perturbed(base, {pi, pj}, t);
    out.perturbation_t = cond.perturbation_t + t;
    out.epsilon_pop = epsilon_target;
    return out;
}

}  // namespace fungible
