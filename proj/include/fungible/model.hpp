#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fungible {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Free parameters in ModelSpec::theta_names() order.
using ParamVector = Eigen::VectorXd;

/// One cell of a RAM pattern matrix. `param < 0` means the cell is fixed at `value`.
struct PatternEntry {
    int row = 0;
    int col = 0;
    int param = -1;
    double value = 0.0;

    bool is_free() const noexcept { return param >= 0; }
};

/// RAM covariance-structure model, Sigma = F (I-A)^-1 S (I-A)^-T F^T.
///
/// Variables are ordered observed first, then latent, so the filter F is
/// [I_p 0]. Directed entries follow the RAM convention: A(row, col) is the
/// effect of variable `col` on variable `row`. Symmetric entries may be given
/// for one triangle only; the mirror is added on construction.
class ModelSpec {
public:
    ModelSpec(std::vector<std::string> variable_names, int n_observed,
              std::vector<PatternEntry> directed, std::vector<PatternEntry> symmetric,
              std::vector<std::string> theta_names,
              std::optional<ParamVector> start_values = std::nullopt);

    int n_observed() const noexcept { return n_observed_; }
    int n_latent() const noexcept { return n_variables() - n_observed_; }
    int n_variables() const noexcept { return static_cast<int>(variable_names_.size()); }
    int n_params() const noexcept { return static_cast<int>(theta_names_.size()); }
    int n_moments() const noexcept { return n_observed_ * (n_observed_ + 1) / 2; }
    int df() const noexcept { return n_moments() - n_params(); }

    const std::vector<std::string>& variable_names() const noexcept { return variable_names_; }
    const std::vector<std::string>& theta_names() const noexcept { return theta_names_; }
    const std::vector<PatternEntry>& directed() const noexcept { return directed_; }
    /// Full (mirrored) symmetric pattern.
    const std::vector<PatternEntry>& symmetric() const noexcept { return symmetric_; }
    const std::optional<ParamVector>& start_values() const noexcept { return start_values_; }

    int param_index(std::string_view name) const;
    int variable_index(std::string_view name) const;

    /// True when parameter k sits on the diagonal of S.
    bool is_variance_param(int k) const;

    Matrix filter() const;
    Matrix directed_matrix(const ParamVector& theta) const;
    /// (I - A(theta))^-1. Recursive structures use the finite series
    /// I + A + ... + A^d, d the longest directed path; otherwise LU.
    Matrix structure_inverse(const ParamVector& theta) const;
    /// No directed cycles, so A is nilpotent and I - A is never singular.
    bool recursive() const noexcept { return path_depth_ >= 0; }
    Matrix symmetric_matrix(const ParamVector& theta) const;

    /// Explicit start values when present, otherwise variances 0.5 and effects 0.1.
    ParamVector default_start() const;
    /// Explicit start values when present, otherwise variances at half the observed
    /// diagonal of `s` (0.5 for latent variables), effects 0.1, covariances 0.
    ParamVector start_for(const Matrix& s) const;

    void check_theta(const ParamVector& theta) const;

private:
    std::vector<std::string> variable_names_;
    int n_observed_ = 0;
    std::vector<PatternEntry> directed_;
    std::vector<PatternEntry> symmetric_;
    std::vector<std::string> theta_names_;
    std::optional<ParamVector> start_values_;
    int path_depth_ = -1;
};

/// Model-implied covariance of the observed variables. Exactly symmetric.
/// Throws SingularStructure when (I - A(theta)) is numerically singular.
Matrix sigma_of_theta(const ModelSpec& model, const ParamVector& theta);

/// (I - A)^-1, throwing SingularStructure on a singular structure.
Matrix ram_inverse(const Matrix& a);

enum class UniqueVariance { Large, Small };
enum class StructuralEffect { Small, Large };

struct PopulationCondition {
    std::string label;
    ModelSpec model;
    ParamVector theta_star;
    Matrix sigma_pop;
    double epsilon_pop = 0.0;
    /// Observed-variable pair whose residual covariance is omitted from the
    /// analysis model; misfit is injected along this direction.
    std::pair<int, int> perturbation{-1, -1};
    /// Signed magnitude added to sigma_pop(i, j) = sigma_pop(j, i).
    double perturbation_t = 0.0;
};

inline constexpr double kLargeUniqueVariance = 0.64;
inline constexpr double kSmallUniqueVariance = 0.36;
inline constexpr double kSmallStructuralEffect = 0.2;
inline constexpr double kLargeStructuralEffect = 0.5;

/// Canonical two-factor path model: F1 -> F2 -> z with F1 measured by x1..x3 and
/// F2 by y1, y2 (y1 is the marker, its loading fixed at `marker_loading`).
ModelSpec canonical_model(double marker_loading);

/// Sigma1 = (large, small), Sigma2 = (small, small), Sigma3 = (large, large),
/// Sigma4 = (small, large).
PopulationCondition builtin_condition(UniqueVariance uv, StructuralEffect se);
PopulationCondition builtin_condition(std::string_view label);
std::vector<std::string> builtin_labels();

/// Names of the two structural effects used as default focal parameters.
std::vector<std::string> canonical_focal_names();

/// Perturbs cond.sigma_pop along its omitted residual covariance until the ML fit
/// of the analysis model has population RMSEA epsilon_target.
PopulationCondition misspecify_to_epsilon(const PopulationCondition& cond,
                                          double epsilon_target, int df);

}  // namespace fungible
