#include "fungible/contour.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/toms748_solve.hpp>

#include "fungible/discrepancy.hpp"
#include "fungible/errors.hpp"

namespace fungible {

ContourTarget ContourTarget::delta(double value, DeltaScaling scaling) {
    ContourTarget t;
    t.mode = ContourMode::DeltaF;
    t.delta_f = value;
    t.scaling = scaling;
    return t;
}

ContourTarget ContourTarget::epsilon(double value) {
    ContourTarget t;
    t.mode = ContourMode::EpsilonTilde;
    t.epsilon_tilde = value;
    return t;
}

ContourTarget ContourTarget::confidence_set(double level) {
    ContourTarget t;
    t.mode = ContourMode::ConfidenceSet;
    t.confidence = level;
    return t;
}

const char* mode_name(ContourMode mode) {
    switch (mode) {
        case ContourMode::DeltaF: return "delta-f";
        case ContourMode::EpsilonTilde: return "eps-tilde";
        case ContourMode::ConfidenceSet: return "confset";
    }
    return "?";
}

ContourMode parse_mode(std::string_view name) {
    if (name == "delta-f") return ContourMode::DeltaF;
    if (name == "eps-tilde") return ContourMode::EpsilonTilde;
    if (name == "confset") return ContourMode::ConfidenceSet;
    throw InvalidInput("unknown contour mode '" + std::string(name) + "'");
}

const char* scaling_name(DeltaScaling scaling) {
    switch (scaling) {
        case DeltaScaling::Relative: return "relative";
        case DeltaScaling::Likelihood: return "likelihood";
        case DeltaScaling::Raw: return "raw";
    }
    return "?";
}

DeltaScaling parse_scaling(std::string_view name) {
    if (name == "relative") return DeltaScaling::Relative;
    if (name == "likelihood") return DeltaScaling::Likelihood;
    if (name == "raw") return DeltaScaling::Raw;
    throw InvalidInput("unknown delta-f scaling '" + std::string(name) + "'");
}

ContourProblem ContourProblem::from_fit(const FitResult& fit) {
    auto disc = std::make_shared<const Discrepancy>(fit.model, fit.s);
    return ContourProblem{[disc](const ParamVector& theta) { return disc->value_or_inf(theta); },
                          fit.theta_hat, fit.f_hat, fit.hessian_at_opt};
}

double f_target(const ContourTarget& target, const FitResult& fit, int df, int q_focal) {
    const long n = fit.n;
    auto need_n = [n] {
        if (n < 2) throw InvalidInput("this contour target needs a sample size N >= 2");
    };
    switch (target.mode) {
        case ContourMode::DeltaF:
            if (!(target.delta_f >= 0.0)) throw InvalidInput("delta_f must be non-negative");
            if (target.scaling == DeltaScaling::Raw) return fit.f_hat + target.delta_f;
            if (target.scaling == DeltaScaling::Relative) return fit.f_hat * (1.0 + target.delta_f);
            need_n();
            return fit.f_hat + 2.0 * target.delta_f / static_cast<double>(n - 1);
        case ContourMode::EpsilonTilde: {
            if (!(target.epsilon_tilde >= 0.0)) throw InvalidInput("epsilon_tilde must be non-negative");
            need_n();
            const double eps_hat = rmsea_from_f(fit.f_hat, df, n, false);
            return f_from_rmsea(eps_hat + target.epsilon_tilde, df, n, false);
        }
        case ContourMode::ConfidenceSet:
            need_n();
            if (q_focal < 1) throw InvalidInput("confidence set needs at least one focal parameter");
            return fit.f_hat +
                   chisq_quantile(q_focal, target.confidence) / static_cast<double>(n - 1);
    }
    throw InvalidInput("unknown contour mode");
}

std::vector<int> focal_indices(const ModelSpec& model, const std::vector<std::string>& names) {
    std::vector<int> out;
    out.reserve(names.size());
    for (const auto& name : names) out.push_back(model.param_index(name));
    return out;
}

namespace {

void check_focal(const std::vector<int>& focal, Eigen::Index q) {
    if (focal.empty()) throw InvalidInput("at least one focal parameter is required");
    for (std::size_t i = 0; i < focal.size(); ++i) {
        if (focal[i] < 0 || focal[i] >= q) throw InvalidInput("focal index out of range");
        for (std::size_t j = 0; j < i; ++j)
            if (focal[i] == focal[j]) throw InvalidInput("focal indices must be distinct");
    }
}

Matrix focal_block(const Matrix& h, const std::vector<int>& focal) {
    const int k = static_cast<int>(focal.size());
    Matrix out(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) out(i, j) = h(focal[i], focal[j]);
    return out;
}

Vector unit(double angle) {
    Vector u(2);
    u << std::cos(angle), std::sin(angle);
    return u;
}

// Solver for one contour level along rays from the center.
class RaySolver {
public:
    RaySolver(const ContourProblem& problem, double t_target, const std::vector<int>& focal)
        : problem_(problem), target_(t_target), focal_(focal) {
        check_focal(focal_, problem_.center.size());
        if (problem_.hessian.rows() == problem_.center.size())
            h_focal_ = focal_block(problem_.hessian, focal_);
    }

    double level_gap() const { return target_ - problem_.f_center; }

    ParamVector point(const Vector& u, double r) const {
        ParamVector theta = problem_.center;
        for (std::size_t i = 0; i < focal_.size(); ++i) theta[focal_[i]] += r * u[i];
        return theta;
    }

    ContourPoint solve(const Vector& u) const {
        const double c = level_gap();
        if (c < 0.0) throw InvalidInput("contour level lies below the minimum");
        ContourPoint out;
        if (c == 0.0) {
            out.theta = problem_.center;
            out.f_value = problem_.f_center;
            return out;
        }
        auto gap = [&](double r) { return problem_.objective(point(u, r)) - target_; };

        double r = initial_radius(u, c);
        double lo = 0.0;
        double g_lo = -c;
        double infeasible = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        double g_hi = 0.0;
        bool bracketed = false;
        for (int it = 0; it < 400; ++it) {
            const double g = gap(r);
            if (!std::isfinite(g)) {
                infeasible = r;
            } else if (g >= 0.0) {
                hi = r;
                g_hi = g;
                bracketed = true;
                break;
            } else {
                lo = r;
                g_lo = g;
            }
            if (std::isfinite(infeasible)) {
                if (infeasible - lo <= 1e-13 * infeasible) break;
                r = 0.5 * (lo + infeasible);
            } else {
                r *= 2.0;
                if (r > 1e8) break;
            }
        }
        if (!bracketed)
            throw ContourEscapesDomain("contour level not reached before the admissible region ends");

        boost::uintmax_t max_iter = 200;
        auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::abs(b); };
        const auto [a, b] = boost::math::tools::toms748_solve(gap, lo, hi, g_lo, g_hi, tol, max_iter);
        const double ga = gap(a);
        const double gb = gap(b);
        out.r = std::abs(ga) <= std::abs(gb) ? a : b;
        out.theta = point(u, out.r);
        out.f_value = problem_.objective(out.theta);
        return out;
    }

    // Length of the chord through the center at angle phi (two-parameter plane).
    double chord(double phi) const {
        return solve(unit(phi)).r + solve(unit(phi + std::numbers::pi)).r;
    }

private:
    double initial_radius(const Vector& u, double c) const {
        if (h_focal_.size() > 0) {
            const double curvature = u.dot(h_focal_ * u);
            if (curvature > 0.0 && std::isfinite(curvature)) return std::sqrt(2.0 * c / curvature);
        }
        return 1e-3;
    }

    const ContourProblem& problem_;
    double target_;
    std::vector<int> focal_;
    Matrix h_focal_;
};

template <class F>
double golden_section(F f, double a, double b, double tol, bool maximize) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto score = [&](double x) { return maximize ? -f(x) : f(x); };
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = score(c);
    double fd = score(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = score(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

ContourPoint radial_contour_point(const ContourProblem& problem, const Vector& direction,
                                  double t_target, const std::vector<int>& focal) {
    if (direction.size() != static_cast<Eigen::Index>(focal.size()))
        throw InvalidInput("direction must have one entry per focal parameter");
    const double norm = direction.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidInput("direction must be non-zero");
    const RaySolver solver(problem, t_target, focal);
    ContourPoint out = solver.solve(direction / norm);
    if (direction.size() == 2) out.angle = std::atan2(direction[1], direction[0]);
    return out;
}

ContourPoint radial_contour_point(const FitResult& fit, const Vector& direction, double t_target,
                                  const std::vector<int>& focal) {
    return radial_contour_point(ContourProblem::from_fit(fit), direction, t_target, focal);
}

AxisWidths axis_widths_quadratic(const ContourProblem& problem, double t_target,
                                 const std::vector<int>& focal) {
    check_focal(focal, problem.center.size());
    if (problem.hessian.rows() != problem.center.size())
        throw InvalidInput("quadratic widths need the Hessian at the minimum");
    const double c = t_target - problem.f_center;
    if (c < 0.0) throw InvalidInput("contour level lies below the minimum");

    Eigen::SelfAdjointEigenSolver<Matrix> eig(focal_block(problem.hessian, focal));
    const Vector& lambda = eig.eigenvalues();  // ascending
    if (!(lambda[0] > 0.0))
        throw NotPositiveDefinite(NotPositiveDefinite::Which::Hessian,
                                  "focal Hessian block is not positive definite");
    const Eigen::Index last = lambda.size() - 1;
    AxisWidths out;
    out.focal = focal;
    out.major = 2.0 * std::sqrt(2.0 * c / lambda[0]);
    out.minor = 2.0 * std::sqrt(2.0 * c / lambda[last]);
    out.major_direction = eig.eigenvectors().col(0);
    out.minor_direction = eig.eigenvectors().col(last);
    return out;
}

AxisWidths axis_widths_quadratic(const FitResult& fit, double t_target,
                                 const std::vector<int>& focal) {
    return axis_widths_quadratic(ContourProblem::from_fit(fit), t_target, focal);
}

AxisWidths axis_widths_exact(const ContourProblem& problem, double t_target,
                             const std::vector<int>& focal, int n_directions) {
    if (focal.size() != 2) throw InvalidInput("the radial sweep needs exactly two focal parameters");
    if (n_directions < 4) throw InvalidInput("the radial sweep needs at least 4 directions");
    const RaySolver solver(problem, t_target, focal);
    const double step = 2.0 * std::numbers::pi / n_directions;

    std::vector<double> radius(n_directions, std::numeric_limits<double>::quiet_NaN());
    int skipped = 0;
    for (int k = 0; k < n_directions; ++k) {
        try {
            radius[k] = solver.solve(unit(k * step)).r;
        } catch (const ContourEscapesDomain&) {
            ++skipped;
        }
    }
    auto opposite = [&](int k) {
        if (n_directions % 2 == 0) return radius[(k + n_directions / 2) % n_directions];
        try {
            return solver.solve(unit(k * step + std::numbers::pi)).r;
        } catch (const ContourEscapesDomain&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    const int n_chords = n_directions % 2 == 0 ? n_directions / 2 : n_directions;
    int best_max = -1;
    int best_min = -1;
    std::vector<double> chords(n_chords);
    for (int k = 0; k < n_chords; ++k) {
        chords[k] = radius[k] + opposite(k);
        if (std::isnan(chords[k])) continue;
        if (best_max < 0 || chords[k] > chords[best_max]) best_max = k;
        if (best_min < 0 || chords[k] < chords[best_min]) best_min = k;
    }
    if (best_max < 0) throw ContourEscapesDomain("every sweep direction escaped the admissible region");

    auto refine = [&](int k, bool maximize) {
        double phi = k * step;
        double width = chords[k];
        try {
            const double refined = golden_section([&](double a) { return solver.chord(a); },
                                                  phi - step, phi + step, 1e-6, maximize);
            const double w = solver.chord(refined);
            if (maximize ? w > width : w < width) {
                phi = refined;
                width = w;
            }
        } catch (const ContourEscapesDomain&) {
        }
        return std::make_pair(phi, width);
    };

    const auto [phi_major, major] = refine(best_max, true);
    const auto [phi_minor, minor] = refine(best_min, false);

    AxisWidths out;
    out.focal = focal;
    out.major = major;
    out.minor = minor;
    out.major_direction = unit(phi_major);
    out.minor_direction = unit(phi_minor);
    out.n_directions = n_directions;
    out.skipped = skipped;
    out.partial = skipped > 0.05 * n_directions;
    return out;
}

AxisWidths axis_widths_exact(const FitResult& fit, double t_target, const std::vector<int>& focal,
                             int n_directions) {
    return axis_widths_exact(ContourProblem::from_fit(fit), t_target, focal, n_directions);
}

FpeSample fpe_sample(const ContourProblem& problem, double t_target, const std::vector<int>& focal,
                     int n_directions) {
    if (focal.size() != 2) throw InvalidInput("the radial sweep needs exactly two focal parameters");
    if (n_directions < 1) throw InvalidInput("at least one direction is required");
    const RaySolver solver(problem, t_target, focal);
    FpeSample out;
    out.t_target = t_target;
    out.points.reserve(n_directions);
    for (int k = 0; k < n_directions; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / n_directions;
        try {
            ContourPoint pt = solver.solve(unit(angle));
            pt.angle = angle;
            out.points.push_back(std::move(pt));
        } catch (const ContourEscapesDomain&) {
            ++out.skipped;
        }
    }
    return out;
}

FpeSample fpe_sample(const FitResult& fit, const ContourTarget& target,
                     const std::vector<int>& focal, int n_directions) {
    const double t = f_target(target, fit, fit.df(), static_cast<int>(focal.size()));
    return fpe_sample(ContourProblem::from_fit(fit), t, focal, n_directions);
}

}  // namespace fungible
