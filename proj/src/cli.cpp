#include "fungible/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "fungible/contour.hpp"
#include "fungible/discrepancy.hpp"
#include "fungible/errors.hpp"
#include "fungible/fit.hpp"
#include "fungible/io.hpp"
#include "fungible/simstudy.hpp"
#include "fungible/table.hpp"

namespace fungible::cli {

namespace {

std::string num(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// Where the analyzed covariance comes from: files, or a builtin population.
struct InputOptions {
    std::string model_path;
    std::string cov_path;
    std::string builtin;
    double epsilon = 0.0;
    long n = 0;
    std::string start_path;
    int max_iter = 500;
    double grad_tol = 1e-6;

    void attach(CLI::App& cmd) {
        cmd.add_option("--model", model_path, "Model configuration (JSON)")->check(CLI::ExistingFile);
        cmd.add_option("--cov", cov_path, "Covariance matrix (CSV, no header)")->check(CLI::ExistingFile);
        cmd.add_option("--builtin", builtin, "Use a builtin population condition (Sigma1..Sigma4)");
        cmd.add_option("--epsilon", epsilon, "Population misfit injected into --builtin")
            ->check(CLI::NonNegativeNumber);
        cmd.add_option("--n", n, "Sample size (omit for a population analysis of --builtin)")
            ->check(CLI::Range(2L, std::numeric_limits<long>::max()));
        cmd.add_option("--start", start_path, "Start values (JSON array or object)")->check(CLI::ExistingFile);
        cmd.add_option("--max-iter", max_iter, "Optimizer iteration cap")->check(CLI::PositiveNumber);
        cmd.add_option("--grad-tol", grad_tol, "Gradient max-norm tolerance")->check(CLI::PositiveNumber);
    }

    FitResult fit() const {
        std::optional<ModelSpec> model;
        Matrix s;
        if (!builtin.empty()) {
            if (!model_path.empty() || !cov_path.empty())
                throw InvalidInput("--builtin cannot be combined with --model/--cov");
            PopulationCondition cond = builtin_condition(builtin);
            if (epsilon > 0.0) cond = misspecify_to_epsilon(cond, epsilon, cond.model.df());
            model = cond.model;
            s = cond.sigma_pop;
        } else {
            if (model_path.empty() || cov_path.empty())
                throw InvalidInput("either --builtin or both --model and --cov are required");
            if (epsilon != 0.0) throw InvalidInput("--epsilon only applies to --builtin");
            if (n == 0) throw InvalidInput("--n is required with --cov");
            model = load_model(model_path);
            s = load_covariance(cov_path);
        }
        FitOptions opts;
        opts.max_iter = max_iter;
        opts.grad_tol = grad_tol;
        if (!start_path.empty()) opts.start = parse_start_json(read_file(start_path), *model);
        return fit_ml(*model, s, n, opts);
    }
};

struct TargetOptions {
    std::string mode = "confset";
    double delta_f = 0.05;
    double eps_tilde = 0.005;
    double level = 0.95;
    std::string scaling = "relative";
    std::vector<std::string> focal;
    int directions = 360;

    void attach(CLI::App& cmd) {
        cmd.add_option("--mode", mode, "Contour target: delta-f, eps-tilde or confset")
            ->check(CLI::IsMember({"delta-f", "eps-tilde", "confset"}))
            ->capture_default_str();
        cmd.add_option("--delta-f", delta_f, "Discrepancy offset for delta-f")->capture_default_str();
        cmd.add_option("--eps-tilde", eps_tilde, "RMSEA offset for eps-tilde")->capture_default_str();
        cmd.add_option("--level", level, "Confidence level for confset")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd.add_option("--scaling", scaling, "delta-f scaling: relative, likelihood or raw")
            ->check(CLI::IsMember({"relative", "likelihood", "raw"}))
            ->capture_default_str();
        cmd.add_option("--focal", focal, "Two focal parameter names, comma separated")->delimiter(',');
        cmd.add_option("--directions", directions, "Sweep directions")
            ->check(CLI::Range(4, 1000000))
            ->capture_default_str();
    }

    ContourTarget target() const {
        switch (parse_mode(mode)) {
            case ContourMode::DeltaF: return ContourTarget::delta(delta_f, parse_scaling(scaling));
            case ContourMode::EpsilonTilde: return ContourTarget::epsilon(eps_tilde);
            case ContourMode::ConfidenceSet: return ContourTarget::confidence_set(level);
        }
        throw InvalidInput("unknown contour mode");
    }

    std::vector<int> focal_for(const ModelSpec& model) const {
        const std::vector<std::string> names = focal.empty() ? canonical_focal_names() : focal;
        if (names.size() != 2) throw InvalidInput("--focal needs exactly two parameter names");
        return focal_indices(model, names);
    }
};

// Results are buffered and written only once the command has succeeded.
void deliver(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw InvalidInput("cannot write '" + path + "'");
    file << text;
    if (!file) throw InvalidInput("write to '" + path + "' failed");
}

std::string fit_report(const FitResult& fit) {
    std::ostringstream o;
    o << "quantity,value\n";
    for (int k = 0; k < fit.model.n_params(); ++k)
        o << fit.model.theta_names()[k] << ',' << num(fit.theta_hat[k]) << '\n';
    const FitIndices ix = fit_indices(fit.f_hat, fit.df(), fit.n);
    o << "f_hat," << num(fit.f_hat) << '\n';
    o << "df," << fit.df() << '\n';
    if (fit.n >= 2) {
        o << "n," << fit.n << '\n';
        o << "chisq," << num(static_cast<double>(fit.n - 1) * fit.f_hat) << '\n';
        o << "rmsea," << num(ix.rmsea_sample) << '\n';
    } else if (ix.rmsea_population) {
        o << "rmsea," << num(*ix.rmsea_population) << '\n';
    }
    o << "iterations," << fit.iterations << '\n';
    o << "grad_norm," << num(fit.grad_norm) << '\n';
    o << "improper," << (fit.improper ? 1 : 0) << '\n';
    return o.str();
}

std::string points_csv(const FpeSample& sample, const std::vector<int>& focal) {
    std::ostringstream o;
    o << "angle,r,theta_1,theta_2,f_value\n";
    for (const auto& p : sample.points)
        o << num(p.angle) << ',' << num(p.r) << ',' << num(p.theta[focal[0]]) << ',' << num(p.theta[focal[1]]) << ','
          << num(p.f_value) << '\n';
    return o.str();
}

std::string widths_csv(const ModelSpec& model, const ContourTarget& target, double t, const FitResult& fit,
                       const AxisWidths& w, const char* method) {
    std::ostringstream o;
    o << "mode,method,focal_1,focal_2,f_hat,t_target,major,minor,major_dir_1,major_dir_2,"
         "minor_dir_1,minor_dir_2,directions,skipped\n";
    o << mode_name(target.mode) << ',' << method << ',' << model.theta_names()[w.focal[0]] << ','
      << model.theta_names()[w.focal[1]] << ',' << num(fit.f_hat) << ',' << num(t) << ',' << num(w.major)
      << ',' << num(w.minor) << ',' << num(w.major_direction[0]) << ',' << num(w.major_direction[1]) << ','
      << num(w.minor_direction[0]) << ',' << num(w.minor_direction[1]) << ',' << w.n_directions << ','
      << w.skipped << '\n';
    return o.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fungible parameter estimates for covariance structure models", "fungible"};
    app.require_subcommand(1);
    std::string out_path;

    auto* fit_cmd = app.add_subcommand("fit", "Maximum likelihood fit; prints estimates, F and RMSEA");
    InputOptions fit_in;
    fit_in.attach(*fit_cmd);
    fit_cmd->add_option("--out", out_path, "Output file (default: stdout)");

    auto* fpe_cmd = app.add_subcommand("fpe", "Trace the contour F(theta) = T in a focal plane");
    InputOptions fpe_in;
    TargetOptions fpe_target;
    fpe_in.attach(*fpe_cmd);
    fpe_target.attach(*fpe_cmd);
    fpe_cmd->add_option("--out", out_path, "Points CSV (default: stdout)");

    auto* cs_cmd = app.add_subcommand("confset", "Principal axis widths of a contour");
    InputOptions cs_in;
    TargetOptions cs_target;
    std::string cs_method = "exact";
    cs_in.attach(*cs_cmd);
    cs_target.attach(*cs_cmd);
    cs_cmd->add_option("--method", cs_method, "exact or quadratic")
        ->check(CLI::IsMember({"exact", "quadratic"}))
        ->capture_default_str();
    cs_cmd->add_option("--out", out_path, "Output file (default: stdout)");

    auto* study_cmd = app.add_subcommand("study", "Run the Monte Carlo width study");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<long> replications;
    std::optional<int> threads;
    std::string format = "csv";
    std::string cells_out;
    study_cmd->add_option("--config", config_path, "Study design (JSON)")->check(CLI::ExistingFile);
    study_cmd->add_option("--seed", seed, "Overrides the design seed");
    study_cmd->add_option("--replications", replications, "Overrides the replication count")
        ->check(CLI::PositiveNumber);
    study_cmd->add_option("--threads", threads, "Worker threads (default: FC_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    study_cmd->add_option("--format", format, "csv or markdown")
        ->check(CLI::IsMember({"csv", "markdown"}))
        ->capture_default_str();
    study_cmd->add_option("--cells-out", cells_out, "Also write per-cell counts (long CSV)");
    study_cmd->add_option("--out", out_path, "Table file (default: stdout)");

    auto* check_cmd = app.add_subcommand("table-check", "sqrt-N consistency of confidence-set widths");
    std::string fixture;
    std::string input_path;
    std::string input_format = "csv";
    double tolerance = 0.015;
    auto* fixture_opt = check_cmd->add_option("--fixture", fixture, "Embedded reference table")
                            ->check(CLI::IsMember({"paper"}));
    check_cmd->add_option("--input", input_path, "Table produced by `study`")
        ->check(CLI::ExistingFile)
        ->excludes(fixture_opt);
    check_cmd->add_option("--format", input_format, "Format of --input: csv or markdown")
        ->check(CLI::IsMember({"csv", "markdown"}));
    check_cmd->add_option("--tolerance", tolerance, "Absolute tolerance")->capture_default_str();
    check_cmd->add_option("--out", out_path, "Report file (default: stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << "run with --help for usage\n";
        return 2;
    }

    try {
        if (fit_cmd->parsed()) {
            deliver(fit_report(fit_in.fit()), out_path, out);
        } else if (fpe_cmd->parsed()) {
            const FitResult fit = fpe_in.fit();
            const std::vector<int> focal = fpe_target.focal_for(fit.model);
            const FpeSample sample = fpe_sample(fit, fpe_target.target(), focal, fpe_target.directions);
            if (sample.skipped > 0)
                err << "note: " << sample.skipped << " of " << fpe_target.directions
                    << " directions left the admissible region\n";
            deliver(points_csv(sample, focal), out_path, out);
        } else if (cs_cmd->parsed()) {
            const FitResult fit = cs_in.fit();
            const ContourTarget target = cs_target.target();
            const std::vector<int> focal = cs_target.focal_for(fit.model);
            const double t = f_target(target, fit, fit.df(), static_cast<int>(focal.size()));
            const bool exact = cs_method == "exact";
            const AxisWidths w = exact ? axis_widths_exact(fit, t, focal, cs_target.directions)
                                       : axis_widths_quadratic(fit, t, focal);
            if (w.partial)
                err << "note: " << w.skipped << " of " << w.n_directions
                    << " directions left the admissible region; widths are partial\n";
            deliver(widths_csv(fit.model, target, t, fit, w, cs_method.c_str()), out_path, out);
        } else if (study_cmd->parsed()) {
            StudyDesign design = config_path.empty() ? StudyDesign{} : load_design(config_path);
            if (seed) design.seed = *seed;
            if (replications) design.replications = *replications;
            if (threads) design.threads = *threads;
            design.validate();
            const StudyTable table = run_design(design);
            if (!cells_out.empty()) deliver(emit_cells_csv(table), cells_out, out);
            deliver(emit_table(table, parse_table_format(format)), out_path, out);
        } else if (check_cmd->parsed()) {
            WidthTable table;
            if (!input_path.empty())
                table = parse_table(read_file(input_path), parse_table_format(input_format));
            else if (fixture == "paper")
                table = paper_fixture();
            else
                throw InvalidInput("table-check needs --fixture paper or --input <file>");
            const ScalingReport report = check_confset_scaling(table, 1000, 200, tolerance);
            deliver(report.format(), out_path, out);
            if (!report.passed()) {
                err << "error: confidence-set widths violate the sqrt-N scaling\n";
                return 1;
            }
        }
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace fungible::cli
