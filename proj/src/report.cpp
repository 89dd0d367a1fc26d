#include "crf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>

#include "crf/error.hpp"
#include "json.hpp"

namespace crf::report {

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw DomainError("report row width does not match the header");
    rows.push_back(std::move(row));
}

std::string number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string number(std::size_t v) { return std::to_string(v); }

namespace {

std::string csv_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

bool json_number(const std::string& cell) {
    static const std::regex re(R"(-?(0|[1-9][0-9]*)(\.[0-9]+)?([eE][+-]?[0-9]+)?)");
    return std::regex_match(cell, re);
}

}  // namespace

std::string to_csv(const Table& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_cell(cells[i]);
        }
        out += '\n';
    };
    line(table.columns);
    for (const auto& row : table.rows) line(row);
    return out;
}

Table parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            record.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\n') {
            record.push_back(std::move(cell));
            cell.clear();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
            any = true;
        }
    }
    if (quoted) throw FormatError("CSV: unterminated quoted cell");
    if (any) {
        record.push_back(std::move(cell));
        records.push_back(std::move(record));
    }
    Table t;
    if (records.empty()) return t;
    t.columns = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.columns.size()) {
            throw FormatError("CSV line " + std::to_string(r + 1) + ": expected " +
                              std::to_string(t.columns.size()) + " cells");
        }
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

std::string to_json(const Table& table) {
    std::string out = "[";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out += r ? ",\n  {" : "\n  {";
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out += ", ";
            out += nlohmann::json(table.columns[c]).dump() + ": ";
            const std::string& cell = table.rows[r][c];
            out += json_number(cell) ? cell : nlohmann::json(cell).dump();
        }
        out += '}';
    }
    out += table.rows.empty() ? "]\n" : "\n]\n";
    return out;
}

void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed: " + path);
}

void emit_report(const Table& table, Format format, const std::string& path) {
    write_text(path, format == Format::csv ? to_csv(table) : to_json(table));
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kMargin = 48;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_header(int width, int height) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n" +
           "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" fill=\"white\"/>\n";
}

}  // namespace

std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
    const double pw = spec.width - 2 * kMargin;
    const double ph = spec.height - 2 * kMargin;
    auto px = [&](double x) { return kMargin + (x - spec.x_min) / (spec.x_max - spec.x_min) * pw; };
    auto py = [&](double y) { return spec.height - kMargin - (y - spec.y_min) / (spec.y_max - spec.y_min) * ph; };

    std::string out = svg_header(spec.width, spec.height);
    out += "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n";
    out += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" + fmt(pw) + "\" height=\"" +
           fmt(ph) + "\"/>\n</g>\n";
    out += "<text x=\"" + fmt(spec.width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape_xml(spec.title) + "</text>\n";
    out += "<text x=\"" + fmt(spec.width / 2.0) + "\" y=\"" + fmt(spec.height - 12.0) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + escape_xml(spec.x_label) + "</text>\n";
    out += "<text x=\"14\" y=\"" + fmt(spec.height / 2.0) + "\" font-size=\"12\" transform=\"rotate(-90 14 " +
           fmt(spec.height / 2.0) + ")\" text-anchor=\"middle\">" + escape_xml(spec.y_label) + "</text>\n";

    for (const Series& s : series) {
        const std::string color = s.color.empty() ? "black" : s.color;
        if (s.points) {
            out += "<g class=\"points\" fill=\"" + color + "\"><title>" + escape_xml(s.label) + "</title>\n";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"2\"/>\n";
            }
            out += "</g>\n";
            continue;
        }
        out += "<path fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" d=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out += (i ? " L" : "M") + fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
        }
        out += "\"><title>" + escape_xml(s.label) + "</title></path>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string svg_histogram(const std::string& title, const std::vector<std::size_t>& counts, double lo,
                          double hi) {
    const int width = 480, height = 320;
    const double pw = width - 2 * kMargin;
    const double ph = height - 2 * kMargin;
    const std::size_t peak = counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end()));
    std::string out = svg_header(width, height);
    out += "<text x=\"" + fmt(width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape_xml(title) + "</text>\n";
    const double bw = counts.empty() ? 0.0 : pw / static_cast<double>(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double h = ph * static_cast<double>(counts[i]) / static_cast<double>(peak);
        out += "<rect x=\"" + fmt(kMargin + bw * static_cast<double>(i)) + "\" y=\"" + fmt(height - kMargin - h) +
               "\" width=\"" + fmt(bw) + "\" height=\"" + fmt(h) + "\" fill=\"steelblue\"/>\n";
    }
    out += "<text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(height - 28.0) + "\" font-size=\"11\">" + fmt(lo) +
           "</text>\n<text x=\"" + fmt(width - kMargin) + "\" y=\"" + fmt(height - 28.0) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt(hi) + "</text>\n</svg>\n";
    return out;
}

}  // namespace crf::report
