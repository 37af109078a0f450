#include "fungible/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <random>
#include <thread>

#include "fungible/errors.hpp"
#include "fungible/fit.hpp"

namespace fungible {

const char* width_method_name(WidthMethod method) {
    return method == WidthMethod::Exact ? "exact" : "quadratic";
}

WidthMethod parse_width_method(std::string_view name) {
    if (name == "exact") return WidthMethod::Exact;
    if (name == "quadratic") return WidthMethod::Quadratic;
    throw InvalidInput("unknown width method '" + std::string(name) + "'");
}

void StudyDesign::validate() const {
    if (replications < 1) throw InvalidInput("replications must be >= 1");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] >= 0.0)) throw InvalidInput("misfit levels must be non-negative");
        if (i > 0 && !(epsilons[i] > epsilons[i - 1]))
            throw InvalidInput("misfit levels must be strictly ascending");
    }
    for (long n : sample_sizes)
        if (n < 2) throw InvalidInput("sample sizes must be >= 2");
    if (n_directions < 4) throw InvalidInput("at least 4 sweep directions are required");
    if (confidence.mode != ContourMode::ConfidenceSet || epsilon_tilde.mode != ContourMode::EpsilonTilde ||
        delta_f.mode != ContourMode::DeltaF)
        throw InvalidInput("study targets must be one confidence set, one eps-tilde and one delta-f target");
    if (!(confidence.confidence > 0.0 && confidence.confidence < 1.0))
        throw InvalidInput("confidence level must be in (0, 1)");
}

const StudyCell* StudyTable::find(std::string_view condition, long n, double epsilon,
                                  ContourMode mode) const {
    for (const auto& c : cells)
        if (c.condition == condition && c.n == n && c.epsilon == epsilon && c.mode == mode) return &c;
    return nullptr;
}

int default_thread_count() {
    if (const char* env = std::getenv("FC_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Matrix wishart_sample(const Matrix& sigma, long n, CounterRng& rng) {
    const Eigen::Index p = sigma.rows();
    if (sigma.cols() != p) throw InvalidInput("Wishart scale matrix must be square");
    if (n <= p) throw InvalidInput("Wishart sampling needs n > p");
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite(NotPositiveDefinite::Which::Population,
                                  "Wishart scale matrix is not positive definite");
    const Matrix l = llt.matrixL();

    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0; attempt < 2; ++attempt) {
        Matrix a = Matrix::Zero(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            std::chi_squared_distribution<double> chi2(static_cast<double>(n - 1 - i));
            a(i, i) = std::sqrt(chi2(rng));
            for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
        }
        const Matrix la = l * a;
        Matrix s = la * la.transpose() / static_cast<double>(n - 1);
        s = 0.5 * (s + s.transpose()).eval();
        if (s.allFinite() && Eigen::LLT<Matrix>(s).info() == Eigen::Success) return s;
    }
    throw DegenerateSample("sampled covariance failed the Cholesky test twice");
}

namespace {

const ContourTarget& target_for(const StudyDesign& design, ContourMode mode) {
    switch (mode) {
        case ContourMode::ConfidenceSet: return design.confidence;
        case ContourMode::EpsilonTilde: return design.epsilon_tilde;
        case ContourMode::DeltaF: return design.delta_f;
    }
    throw InvalidInput("unknown contour mode");
}

struct Replicate {
    double major = 0.0;
    double minor = 0.0;
};

// Widths for one analyzed covariance; nullopt marks an excluded replication.
std::optional<Replicate> analyze(const StudyDesign& design, const PopulationCondition& cond,
                                 const std::vector<int>& focal, const Matrix& s, long n,
                                 ContourMode mode) {
    try {
        const FitResult fit = fit_ml(cond.model, s, n);
        if (fit.improper) return std::nullopt;
        const double t = f_target(target_for(design, mode), fit, fit.df(), static_cast<int>(focal.size()));
        const AxisWidths w = design.width_method == WidthMethod::Exact
                                 ? axis_widths_exact(fit, t, focal, design.n_directions)
                                 : axis_widths_quadratic(fit, t, focal);
        if (w.partial || !std::isfinite(w.major) || !std::isfinite(w.minor)) return std::nullopt;
        return Replicate{w.major, w.minor};
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

void summarize(const std::vector<std::optional<Replicate>>& reps, StudyCell& cell) {
    std::vector<double> major;
    std::vector<double> minor;
    for (const auto& r : reps) {
        if (!r) continue;
        major.push_back(r->major);
        minor.push_back(r->minor);
    }
    cell.replications = static_cast<long>(reps.size());
    cell.n_converged = static_cast<long>(major.size());
    cell.n_excluded = cell.replications - cell.n_converged;
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
        if (v.empty()) {
            mean = sd = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        double sum = 0.0;
        for (double x : v) sum += x;
        mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    mean_sd(major, cell.major_mean, cell.major_sd);
    mean_sd(minor, cell.minor_mean, cell.minor_sd);
}

// Runs work(i) for i in [0, count) on a small pool; each index writes its own slot.
template <class Work>
void parallel_for(long count, int threads, Work work) {
    const int n_workers = static_cast<int>(std::min<long>(std::max(threads, 1), count));
    if (n_workers <= 1) {
        for (long i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w)
        pool.emplace_back([&] {
            for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
        });
}

}  // namespace

StudyCell run_cell(const StudyDesign& design, const PopulationCondition& condition, long n,
                   ContourMode mode) {
    design.validate();
    const std::vector<int> focal = focal_indices(condition.model, canonical_focal_names());
    StudyCell cell;
    cell.condition = condition.label;
    cell.n = n;
    cell.epsilon = condition.epsilon_pop;
    cell.mode = mode;

    if (mode == ContourMode::ConfidenceSet && design.population_confset) {
        summarize({analyze(design, condition, focal, condition.sigma_pop, n, mode)}, cell);
        return cell;
    }

    std::vector<std::optional<Replicate>> reps(design.replications);
    const int threads = design.threads > 0 ? design.threads : default_thread_count();
    parallel_for(design.replications, threads, [&](long r) {
        CounterRng rng(replication_key(design.seed, condition.label, n, condition.epsilon_pop, r));
        try {
            const Matrix s = wishart_sample(condition.sigma_pop, n, rng);
            reps[r] = analyze(design, condition, focal, s, n, mode);
        } catch (const DomainError&) {
            reps[r] = std::nullopt;
        }
    });
    summarize(reps, cell);
    return cell;
}

StudyCell run_cell(const StudyDesign& design, std::string_view condition, long n, double epsilon,
                   ContourMode mode) {
    PopulationCondition base = builtin_condition(condition);
    const int df = base.model.df();
    return run_cell(design, misspecify_to_epsilon(base, epsilon, df), n, mode);
}

StudyTable run_design(const StudyDesign& design) {
    design.validate();
    StudyTable table;
    table.epsilons = design.epsilons;
    for (const auto& label : design.conditions) {
        const PopulationCondition base = builtin_condition(label);
        std::vector<PopulationCondition> misfit;
        for (double eps : design.epsilons)
            misfit.push_back(misspecify_to_epsilon(base, eps, base.model.df()));
        for (long n : design.sample_sizes) {
            if (!misfit.empty())
                table.cells.push_back(run_cell(design, misfit.front(), n, ContourMode::ConfidenceSet));
            for (ContourMode mode : {ContourMode::EpsilonTilde, ContourMode::DeltaF})
                for (const auto& cond : misfit) table.cells.push_back(run_cell(design, cond, n, mode));
        }
    }
    return table;
}

}  // namespace fungible
