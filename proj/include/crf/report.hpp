#pragma once

// Tabular reports (CSV / JSON) and static SVG plot documents.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace crf::report {

/// String-valued table; numeric cells are pre-formatted by the producer.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    friend bool operator==(const Table&, const Table&) = default;
};

/// Shortest-round-trip-safe formatting (%.17g) used for every reported number.
std::string number(double v);
std::string number(std::size_t v);

std::string to_csv(const Table& table);
Table parse_csv(std::string_view text);
/// Array of objects; cells that parse as numbers are emitted as JSON numbers.
std::string to_json(const Table& table);

enum class Format { csv, json };
void emit_report(const Table& table, Format format, const std::string& path);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color;
    bool points = false;  // scatter markers instead of a polyline path
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    int width = 480;
    int height = 400;
};

/// SVG 1.1 line plot: one <path> element per non-scatter series.
std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series);

/// SVG bar chart of histogram counts between lo and hi.
std::string svg_histogram(const std::string& title, const std::vector<std::size_t>& counts, double lo,
                          double hi);

void write_text(const std::string& path, std::string_view text);

}  // namespace crf::report
