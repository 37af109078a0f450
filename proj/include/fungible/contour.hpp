#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "fungible/fit.hpp"

namespace fungible {

enum class ContourMode { DeltaF, EpsilonTilde, ConfidenceSet };

/// How a DeltaF offset maps onto the discrepancy scale.
enum class DeltaScaling {
    Relative,    ///< T = F (1 + delta): proportional loss of fit (also of the chi-square)
    Likelihood,  ///< T = F + 2 delta / (N - 1): offset on the log-likelihood scale
    Raw,         ///< T = F + delta
};

const char* scaling_name(DeltaScaling scaling);
DeltaScaling parse_scaling(std::string_view name);

/// Level that defines a contour {theta : F(theta) = T}. Only the fields of the
/// active mode are read.
struct ContourTarget {
    ContourMode mode = ContourMode::DeltaF;
    double delta_f = 0.05;
    double epsilon_tilde = 0.005;
    double confidence = 0.95;
    DeltaScaling scaling = DeltaScaling::Relative;

    static ContourTarget delta(double value, DeltaScaling scaling = DeltaScaling::Relative);
    static ContourTarget epsilon(double value);
    static ContourTarget confidence_set(double level);
};

const char* mode_name(ContourMode mode);
ContourMode parse_mode(std::string_view name);

/// Full widths of the principal axes of a contour in the focal plane.
struct AxisWidths {
    double major = 0.0;
    double minor = 0.0;
    Vector major_direction;
    Vector minor_direction;
    std::vector<int> focal;
    /// Sweep bookkeeping (exact method only).
    int n_directions = 0;
    int skipped = 0;
    /// More than 5% of the sweep directions escaped the admissible region.
    bool partial = false;
};

/// The objective seen by contour tracing: the discrepancy of a fitted model, or
/// any other function with a known minimizer and curvature.
struct ContourProblem {
    /// F(theta); +infinity outside the admissible region.
    std::function<double(const ParamVector&)> objective;
    ParamVector center;
    double f_center = 0.0;
    Matrix hessian;

    static ContourProblem from_fit(const FitResult& fit);
};

struct ContourPoint {
    double angle = 0.0;
    double r = 0.0;
    ParamVector theta;
    double f_value = 0.0;
};

/// Discrepancy level T for the requested target. `q_focal` is the dimension of
/// the joint confidence set.
double f_target(const ContourTarget& target, const FitResult& fit, int df, int q_focal = 2);

/// theta = center + r u with F(theta) = t_target, non-focal parameters fixed.
/// `direction` lives in the focal subspace (length focal.size()).
/// Throws ContourEscapesDomain when the ray leaves the admissible region first.
ContourPoint radial_contour_point(const ContourProblem& problem, const Vector& direction,
                                  double t_target, const std::vector<int>& focal);
ContourPoint radial_contour_point(const FitResult& fit, const Vector& direction,
                                  double t_target, const std::vector<int>& focal);

/// Widths 2 sqrt(2c / lambda) from the focal Hessian block, c = t_target - F.
AxisWidths axis_widths_quadratic(const ContourProblem& problem, double t_target,
                                 const std::vector<int>& focal);
AxisWidths axis_widths_quadratic(const FitResult& fit, double t_target,
                                 const std::vector<int>& focal);

/// Radial sweep over `n_directions` angles in a two-parameter focal plane; the
/// extreme chords r(phi) + r(phi + pi) are refined by golden-section search.
AxisWidths axis_widths_exact(const ContourProblem& problem, double t_target,
                             const std::vector<int>& focal, int n_directions = 360);
AxisWidths axis_widths_exact(const FitResult& fit, double t_target,
                             const std::vector<int>& focal, int n_directions = 360);

struct FpeSample {
    double t_target = 0.0;
    std::vector<ContourPoint> points;
    int skipped = 0;
};

/// The fungible parameter estimates themselves: one contour point per sweep
/// direction that stays inside the admissible region.
FpeSample fpe_sample(const FitResult& fit, const ContourTarget& target,
                     const std::vector<int>& focal, int n_directions = 360);
FpeSample fpe_sample(const ContourProblem& problem, double t_target,
                     const std::vector<int>& focal, int n_directions = 360);

/// Indices of the named parameters; throws InvalidInput for unknown names.
std::vector<int> focal_indices(const ModelSpec& model, const std::vector<std::string>& names);

}  // namespace fungible
