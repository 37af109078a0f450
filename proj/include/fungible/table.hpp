#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fungible/simstudy.hpp"

namespace fungible {

/// One row (condition x N) of the width table. FPE blocks hold (major, minor)
/// pairs in misfit-level order.
struct TableRow {
    std::string condition;
    long n = 0;
    double cs_major_mean = 0.0;
    double cs_major_sd = 0.0;
    double cs_minor_mean = 0.0;
    double cs_minor_sd = 0.0;
    std::vector<double> eps_tilde;
    std::vector<double> delta_f;

    /// The 4 + 4k numeric width columns in table order.
    std::vector<double> widths() const;
};

/// Table-shaped view: with three misfit levels this is the 18-column layout
/// (condition, N, confidence-set mean/SD for both axes, then major/minor per
/// misfit level for the eps-tilde and delta-f FPE blocks).
struct WidthTable {
    std::vector<double> epsilons;
    std::vector<TableRow> rows;

    const TableRow* find(std::string_view condition, long n) const;
};

enum class TableFormat { Csv, Markdown };

TableFormat parse_table_format(std::string_view name);

WidthTable to_width_table(const StudyTable& table);

/// CSV keeps full precision; markdown rounds to two decimals.
std::string emit_table(const WidthTable& table, TableFormat format);
std::string emit_table(const StudyTable& table, TableFormat format);

/// Inverse of emit_table for either format. Throws InvalidInput on malformed text.
WidthTable parse_table(std::string_view text, TableFormat format);

/// Long format, one line per cell including convergence counts.
std::string emit_cells_csv(const StudyTable& table);

/// Published reference values (four conditions x N in {1000, 200}).
WidthTable paper_fixture();
std::string_view paper_fixture_csv();

struct ScalingLine {
    std::string condition;
    std::string axis;
    double large_n_width = 0.0;
    double small_n_width = 0.0;
    double predicted = 0.0;
    double deviation = 0.0;
    bool pass = false;
};

struct ScalingReport {
    long n_large = 0;
    long n_small = 0;
    double ratio = 0.0;
    double tolerance = 0.0;
    std::vector<ScalingLine> lines;

    bool passed() const;
    std::string format() const;
};

/// Confidence-set widths at n_small should equal the n_large widths times
/// sqrt((n_large - 1) / (n_small - 1)).
ScalingReport check_confset_scaling(const WidthTable& table, long n_large = 1000,
                                    long n_small = 200, double tolerance = 0.015);

}  // namespace fungible
