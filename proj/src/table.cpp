#include "fungible/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fungible/errors.hpp"

namespace fungible {

namespace {

std::string shortest(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed2(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

double parse_number(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw InvalidInput("not a number: '" + std::string(text) + "'");
    return v;
}

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);)
        if (!trim(line).empty()) lines.push_back(line);
    return lines;
}

std::vector<std::string> header(const std::vector<double>& epsilons, TableFormat format) {
    const bool csv = format == TableFormat::Csv;
    std::vector<std::string> cols;
    if (csv)
        cols = {"condition", "n", "cs_major_mean", "cs_major_sd", "cs_minor_mean", "cs_minor_sd"};
    else
        cols = {"Condition", "N", "CS Major Mean", "CS Major SD", "CS Minor Mean", "CS Minor SD"};
    for (const char* block : {"epstilde", "deltaf"}) {
        for (double eps : epsilons) {
            for (const char* axis : {"major", "minor"}) {
                if (csv) {
                    cols.push_back(std::string(block) + "_" + axis + "_e" + shortest(eps));
                } else {
                    const std::string name = std::string(block) == "epstilde" ? "EpsTilde" : "DeltaF";
                    cols.push_back(name + " e=" + shortest(eps) + " " +
                                   (std::string(axis) == "major" ? "Major" : "Minor"));
                }
            }
        }
    }
    return cols;
}

std::vector<double> epsilons_from_header(const std::vector<std::string>& cols, TableFormat format) {
    std::vector<double> eps;
    const std::string prefix = format == TableFormat::Csv ? "epstilde_major_e" : "EpsTilde e=";
    const std::string suffix = format == TableFormat::Csv ? "" : " Major";
    for (const auto& c : cols) {
        if (c.rfind(prefix, 0) != 0) continue;
        if (c.size() < prefix.size() + suffix.size() ||
            c.compare(c.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        eps.push_back(parse_number(std::string_view(c).substr(
            prefix.size(), c.size() - prefix.size() - suffix.size())));
    }
    return eps;
}

std::vector<std::string> markdown_cells(const std::string& line) {
    std::string_view v = line;
    std::string t = trim(v);
    v = t;
    if (!v.empty() && v.front() == '|') v.remove_prefix(1);
    if (!v.empty() && v.back() == '|') v.remove_suffix(1);
    return split(v, '|');
}

}  // namespace

std::vector<double> TableRow::widths() const {
    std::vector<double> out{cs_major_mean, cs_major_sd, cs_minor_mean, cs_minor_sd};
    out.insert(out.end(), eps_tilde.begin(), eps_tilde.end());
    out.insert(out.end(), delta_f.begin(), delta_f.end());
    return out;
}

const TableRow* WidthTable::find(std::string_view condition, long n) const {
    for (const auto& r : rows)
        if (r.condition == condition && r.n == n) return &r;
    return nullptr;
}

TableFormat parse_table_format(std::string_view name) {
    if (name == "csv") return TableFormat::Csv;
    if (name == "markdown" || name == "md") return TableFormat::Markdown;
    throw InvalidInput("unknown table format '" + std::string(name) + "'");
}

WidthTable to_width_table(const StudyTable& table) {
    WidthTable out;
    out.epsilons = table.epsilons;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& cell : table.cells) {
        if (out.find(cell.condition, cell.n)) continue;
        TableRow row;
        row.condition = cell.condition;
        row.n = cell.n;
        row.cs_major_mean = row.cs_major_sd = row.cs_minor_mean = row.cs_minor_sd = nan;
        if (!table.epsilons.empty()) {
            if (const StudyCell* cs = table.find(cell.condition, cell.n, table.epsilons.front(),
                                                 ContourMode::ConfidenceSet)) {
                row.cs_major_mean = cs->major_mean;
                row.cs_major_sd = cs->major_sd;
                row.cs_minor_mean = cs->minor_mean;
                row.cs_minor_sd = cs->minor_sd;
            }
        }
        for (auto [mode, block] : {std::pair{ContourMode::EpsilonTilde, &row.eps_tilde},
                                   std::pair{ContourMode::DeltaF, &row.delta_f}}) {
            for (double eps : table.epsilons) {
                const StudyCell* c = table.find(cell.condition, cell.n, eps, mode);
                block->push_back(c ? c->major_mean : nan);
                block->push_back(c ? c->minor_mean : nan);
            }
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string emit_table(const WidthTable& table, TableFormat format) {
    const auto cols = header(table.epsilons, format);
    std::ostringstream out;
    if (format == TableFormat::Csv) {
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << '\n';
        for (const auto& row : table.rows) {
            out << row.condition << ',' << row.n;
            for (double v : row.widths()) out << ',' << shortest(v);
            out << '\n';
        }
        return out.str();
    }
    out << '|';
    for (const auto& c : cols) out << ' ' << c << " |";
    out << "\n|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i < 2 ? "---|" : "---:|");
    out << '\n';
    for (const auto& row : table.rows) {
        out << "| " << row.condition << " | " << row.n << " |";
        for (double v : row.widths()) out << ' ' << fixed2(v) << " |";
        out << '\n';
    }
    return out.str();
}

std::string emit_table(const StudyTable& table, TableFormat format) {
    return emit_table(to_width_table(table), format);
}

WidthTable parse_table(std::string_view text, TableFormat format) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw InvalidInput("table is empty");
    const bool csv = format == TableFormat::Csv;
    const auto cols = csv ? split(lines[0], ',') : markdown_cells(lines[0]);

    WidthTable table;
    table.epsilons = epsilons_from_header(cols, format);
    if (header(table.epsilons, format) != cols) throw InvalidInput("unrecognized table header");

    const std::size_t k = table.epsilons.size();
    std::size_t first = 1;
    if (!csv) {
        if (lines.size() < 2 || lines[1].find("---") == std::string::npos)
            throw InvalidInput("markdown table lacks its separator line");
        first = 2;
    }
    for (std::size_t li = first; li < lines.size(); ++li) {
        const auto cells = csv ? split(lines[li], ',') : markdown_cells(lines[li]);
        if (cells.size() != cols.size())
            throw InvalidInput("table row " + std::to_string(li) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(cols.size()));
        TableRow row;
        row.condition = cells[0];
        row.n = static_cast<long>(parse_number(cells[1]));
        row.cs_major_mean = parse_number(cells[2]);
        row.cs_major_sd = parse_number(cells[3]);
        row.cs_minor_mean = parse_number(cells[4]);
        row.cs_minor_sd = parse_number(cells[5]);
        for (std::size_t i = 0; i < 2 * k; ++i) row.eps_tilde.push_back(parse_number(cells[6 + i]));
        for (std::size_t i = 0; i < 2 * k; ++i)
            row.delta_f.push_back(parse_number(cells[6 + 2 * k + i]));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string emit_cells_csv(const StudyTable& table) {
    std::ostringstream out;
    out << "condition,n,epsilon,mode,major_mean,major_sd,minor_mean,minor_sd,replications,"
           "n_converged,n_excluded\n";
    for (const auto& c : table.cells) {
        out << c.condition << ',' << c.n << ',' << shortest(c.epsilon) << ',' << mode_name(c.mode)
            << ',' << shortest(c.major_mean) << ',' << shortest(c.major_sd) << ','
            << shortest(c.minor_mean) << ',' << shortest(c.minor_sd) << ',' << c.replications << ','
            << c.n_converged << ',' << c.n_excluded << '\n';
    }
    return out.str();
}

std::string_view paper_fixture_csv() {
    return "condition,n,cs_major_mean,cs_major_sd,cs_minor_mean,cs_minor_sd,"
           "epstilde_major_e0,epstilde_minor_e0,epstilde_major_e0.03,epstilde_minor_e0.03,"
           "epstilde_major_e0.09,epstilde_minor_e0.09,"
           "deltaf_major_e0,deltaf_minor_e0,deltaf_major_e0.03,deltaf_minor_e0.03,"
           "deltaf_major_e0.09,deltaf_minor_e0.09\n"
           "Sigma1,1000,0.19,0,0.18,0,0.16,0.15,0.33,0.32,0.59,0.56,0.13,0.13,0.18,0.17,0.40,0.38\n"
           "Sigma1,200,0.43,0,0.40,0,0.48,0.44,0.30,0.28,0.60,0.55,0.29,0.27,0.32,0.30,0.50,0.46\n"
           "Sigma2,1000,0.17,0,0.16,0,0.18,0.18,0.29,0.29,0.51,0.50,0.11,0.11,0.16,0.15,0.36,0.35\n"
           "Sigma2,200,0.38,0,0.36,0,0.39,0.38,0.26,0.25,0.52,0.50,0.26,0.25,0.28,0.27,0.43,0.42\n"
           "Sigma3,1000,0.25,0,0.20,0,0.27,0.22,0.42,0.34,0.75,0.61,0.17,0.14,0.23,0.18,0.52,0.42\n"
           "Sigma3,200,0.56,0,0.44,0,0.50,0.39,0.40,0.31,0.76,0.59,0.38,0.30,0.42,0.33,0.63,0.50\n"
           "Sigma4,1000,0.20,0,0.17,0,0.25,0.22,0.35,0.30,0.62,0.53,0.14,0.12,0.19,0.16,0.43,0.37\n"
           "Sigma4,200,0.46,0,0.39,0,0.46,0.39,0.32,0.27,0.63,0.53,0.32,0.27,0.35,0.29,0.53,0.45\n";
}

WidthTable paper_fixture() { return parse_table(paper_fixture_csv(), TableFormat::Csv); }

bool ScalingReport::passed() const {
    if (lines.empty()) return false;
    for (const auto& l : lines)
        if (!l.pass) return false;
    return true;
}

std::string ScalingReport::format() const {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "confidence-set N-scaling: width(N=%ld) = width(N=%ld) * sqrt(%ld/%ld) = x%.4f, "
                  "tolerance %.3f\n",
                  n_small, n_large, n_large - 1, n_small - 1, ratio, tolerance);
    out << buf;
    out << "condition,axis,width_n" << n_large << ",width_n" << n_small
        << ",predicted,deviation,result\n";
    for (const auto& l : lines) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f,%+.4f,%s\n", l.condition.c_str(),
                      l.axis.c_str(), l.large_n_width, l.small_n_width, l.predicted, l.deviation,
                      l.pass ? "PASS" : "FAIL");
        out << buf;
    }
    int n_pass = 0;
    for (const auto& l : lines) n_pass += l.pass ? 1 : 0;
    out << n_pass << "/" << lines.size() << " widths consistent\n";
    return out.str();
}

ScalingReport check_confset_scaling(const WidthTable& table, long n_large, long n_small,
                                    double tolerance) {
    if (n_large < 2 || n_small < 2) throw InvalidInput("sample sizes must be >= 2");
    ScalingReport report;
    report.n_large = n_large;
    report.n_small = n_small;
    report.tolerance = tolerance;
    report.ratio = std::sqrt(static_cast<double>(n_large - 1) / static_cast<double>(n_small - 1));
    for (const auto& row : table.rows) {
        if (row.n != n_large) continue;
        const TableRow* small = table.find(row.condition, n_small);
        if (!small) continue;
        for (auto [axis, large_w, small_w] :
             {std::tuple{"major", row.cs_major_mean, small->cs_major_mean},
              std::tuple{"minor", row.cs_minor_mean, small->cs_minor_mean}}) {
            ScalingLine line;
            line.condition = row.condition;
            line.axis = axis;
            line.large_n_width = large_w;
            line.small_n_width = small_w;
            line.predicted = large_w * report.ratio;
            line.deviation = small_w - line.predicted;
            line.pass = std::abs(line.deviation) <= tolerance;
            report.lines.push_back(std::move(line));
        }
    }
    return report;
}

}  // namespace fungible
