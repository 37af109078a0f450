#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fungible/contour.hpp"
#include "fungible/model.hpp"
#include "fungible/rng.hpp"

namespace fungible {

enum class WidthMethod { Exact, Quadratic };

const char* width_method_name(WidthMethod method);
WidthMethod parse_width_method(std::string_view name);

/// Factorial Monte Carlo design: conditions x sample sizes x misfit levels x
/// contour targets.
struct StudyDesign {
    std::vector<std::string> conditions = builtin_labels();
    std::vector<long> sample_sizes{1000, 200};
    std::vector<double> epsilons{0.0, 0.03, 0.09};
    long replications = 500;
    std::uint64_t seed = 1;

    ContourTarget confidence = ContourTarget::confidence_set(0.95);
    ContourTarget epsilon_tilde = ContourTarget::epsilon(0.005);
    ContourTarget delta_f = ContourTarget::delta(0.05);

    /// Confidence sets analyze sigma_pop directly (one replication, SD = 0).
    bool population_confset = true;
    int n_directions = 360;
    WidthMethod width_method = WidthMethod::Exact;
    /// Worker threads; 0 reads FC_THREADS, falling back to the processor count.
    int threads = 0;

    /// Throws InvalidInput when an invariant is violated.
    void validate() const;
};

struct StudyCell {
    std::string condition;
    long n = 0;
    double epsilon = 0.0;
    ContourMode mode = ContourMode::DeltaF;
    double major_mean = 0.0;
    double major_sd = 0.0;
    double minor_mean = 0.0;
    double minor_sd = 0.0;
    /// Replications attempted; 1 for a population analysis.
    long replications = 0;
    long n_converged = 0;
    long n_excluded = 0;
};

struct StudyTable {
    std::vector<double> epsilons;
    std::vector<StudyCell> cells;

    const StudyCell* find(std::string_view condition, long n, double epsilon, ContourMode mode) const;
};

/// S = L A A^T L^T / (n - 1) by the Bartlett decomposition, L = chol(sigma).
/// A failed Cholesky of S is resampled once, then DegenerateSample is thrown.
Matrix wishart_sample(const Matrix& sigma, long n, CounterRng& rng);

/// One table cell for a condition that has already been misspecified.
StudyCell run_cell(const StudyDesign& design, const PopulationCondition& condition, long n,
                   ContourMode mode);
/// Builds the builtin condition, injects misfit `epsilon` and runs the cell.
StudyCell run_cell(const StudyDesign& design, std::string_view condition, long n, double epsilon,
                   ContourMode mode);

/// Every cell of the design. Confidence-set cells use the first (smallest)
/// misfit level; FPE cells are produced for every level.
StudyTable run_design(const StudyDesign& design);

/// Thread count from FC_THREADS, or the processor count when unset.
int default_thread_count();

}  // namespace fungible
