#include "crf/curves.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crf/error.hpp"

namespace crf {

namespace {

constexpr double kEndpointTolerance = 1e-9;
constexpr double kTieBreak = 1e-9;

bool parse_double(std::string_view token, double& out) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    const char* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct Line {
    std::string_view text;
    long number;
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> lines;
    long number = 1;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back({line, number++});
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

bool is_numeric_line(std::string_view line) {
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) return false;
    double v = 0.0;
    return std::all_of(tokens.begin(), tokens.end(),
                       [&](std::string_view t) { return parse_double(t, v); });
}

}  // namespace

SampleGrid::SampleGrid(std::size_t n) : n_(n) {
    if (n < 2) throw DomainError("sample grid needs at least 2 points");
}

std::vector<double> SampleGrid::positions() const {
    std::vector<double> u(n_);
    for (std::size_t i = 0; i < n_; ++i) u[i] = position(i);
    return u;
}

ResponseCurve::ResponseCurve(std::string id, std::vector<double> samples)
    : id_(std::move(id)), samples_(std::move(samples)) {
    if (samples_.size() < 2) throw DomainError("response curve needs at least 2 samples");
    for (double v : samples_) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("response curve sample outside [0,1]");
    }
    if (std::abs(samples_.front()) > kEndpointTolerance ||
        std::abs(samples_.back() - 1.0) > kEndpointTolerance) {
        throw DomainError("response curve endpoints must be 0 and 1");
    }
}

ResponseCurve ResponseCurve::identity(std::size_t n) {
    return ResponseCurve("identity", SampleGrid(n).positions());
}

ResponseCurve normalize(std::span<const double> raw, std::string id) {
    if (raw.size() < 2) throw DomainError("normalize needs at least 2 samples");
    const double first = raw.front();
    const double last = raw.back();
    const double range = last - first;
    if (!(std::abs(range) > 0.0) || !std::isfinite(range)) {
        throw DegenerateCurveError("degenerate curve: first and last samples coincide");
    }
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = std::clamp((raw[i] - first) / range, 0.0, 1.0);
    }
    out.front() = 0.0;
    out.back() = 1.0;
    return ResponseCurve(std::move(id), std::move(out));
}

ResponseCurve sample_function(const std::function<double(double)>& f, std::size_t n,
                              std::string id) {
    const SampleGrid grid(n);
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = f(grid.position(i));
    return normalize(raw, std::move(id));
}

double evaluate(const ResponseCurve& curve, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("evaluate: x outside [0,1]");
    const std::size_t n = curve.size();
    const double scaled = x * static_cast<double>(n - 1);
    const double nearest = std::nearbyint(scaled);
    const auto k = static_cast<std::size_t>(nearest);
    if (curve.grid().position(k) == x) return curve[k];
    const auto i = std::min(static_cast<std::size_t>(scaled), n - 2);
    const double t = scaled - static_cast<double>(i);
    return curve[i] + t * (curve[i + 1] - curve[i]);
}

ResponseCurve resample(const ResponseCurve& curve, std::size_t n) {
    const SampleGrid grid(n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = evaluate(curve, grid.position(i));
    return ResponseCurve(curve.id(), std::move(out));
}

std::vector<double> isotonic_fit(std::span<const double> values) {
    // Blocks hold (sum, count); merge while the previous mean exceeds the last.
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    sums.reserve(values.size());
    counts.reserve(values.size());
    for (double v : values) {
        sums.push_back(v);
        counts.push_back(1);
        while (sums.size() > 1) {
            const std::size_t b = sums.size() - 1;
            if (sums[b - 1] * static_cast<double>(counts[b]) <=
                sums[b] * static_cast<double>(counts[b - 1])) {
                break;
            }
            sums[b - 1] += sums[b];
            counts[b - 1] += counts[b];
            sums.pop_back();
            counts.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t b = 0; b < sums.size(); ++b) {
        const double mean = sums[b] / static_cast<double>(counts[b]);
        out.insert(out.end(), counts[b], mean);
    }
    return out;
}

ResponseCurve invert(const ResponseCurve& curve) {
    const std::size_t n = curve.size();
    std::vector<double> y = isotonic_fit(curve.samples());
    for (std::size_t i = 0; i < n; ++i) y[i] += static_cast<double>(i) * kTieBreak;

    const SampleGrid grid(n);
    std::vector<double> inverse(n);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = grid.position(k);
        if (v <= y.front()) {
            inverse[k] = 0.0;
            continue;
        }
        if (v >= y.back()) {
            inverse[k] = 1.0;
            continue;
        }
        while (seg + 1 < n && y[seg + 1] < v) ++seg;
        const double t = (v - y[seg]) / (y[seg + 1] - y[seg]);
        inverse[k] = grid.position(seg) + t * (grid.position(seg + 1) - grid.position(seg));
    }
    return normalize(inverse, curve.id().empty() ? std::string{} : curve.id() + ".inverse");
}

std::vector<double> discrete_derivative(const ResponseCurve& curve) {
    std::vector<double> d(curve.size() - 1);
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) d[i] = curve[i + 1] - curve[i];
    return d;
}

double smoothness(std::span<const double> samples) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double d = samples[i + 1] - samples[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double smoothness(const ResponseCurve& curve) { return smoothness(curve.samples()); }

double auc_label(std::span<const double> samples) {
    const SampleGrid grid(samples.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) acc += samples[i] - grid.position(i);
    return acc;
}

double auc_label(const ResponseCurve& curve) { return auc_label(curve.samples()); }

// ---------------------------------------------------------------------------

std::vector<ResponseCurve> parse_dorf(std::string_view text, const DorfOptions& options,
                                      std::vector<std::string>* warnings) {
    const std::vector<Line> lines = split_lines(text);
    std::vector<ResponseCurve> curves;
    std::size_t pos = 0;
    long record = 0;

    auto skip_blank = [&] {
        while (pos < lines.size() && trim(lines[pos].text).empty()) ++pos;
    };
    auto fail = [&](const std::string& msg, long line) -> ParseError {
        std::ostringstream os;
        os << "DoRF record " << record << " (line " << line << "): " << msg;
        return ParseError(os.str(), record, line);
    };
    auto read_block = [&](long header_line) {
        std::vector<double> values;
        if (pos >= lines.size() || !is_numeric_line(lines[pos].text)) {
            throw fail("expected numeric samples after header", header_line + 1);
        }
        const long first_line = lines[pos].number;
        while (pos < lines.size() && is_numeric_line(lines[pos].text)) {
            for (std::string_view tok : split_whitespace(lines[pos].text)) {
                double v = 0.0;
                parse_double(tok, v);
                values.push_back(v);
            }
            ++pos;
        }
        if (options.expected_samples != 0 && values.size() != options.expected_samples) {
            std::ostringstream os;
            os << "expected " << options.expected_samples << " samples, found " << values.size();
            throw fail(os.str(), first_line);
        }
        return values;
    };
    auto expect_header = [&](std::string_view header) {
        if (pos >= lines.size()) throw fail("unexpected end of document", lines.back().number);
        const std::string_view t = trim(lines[pos].text);
        std::string compact;
        for (char c : t) {
            if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
        }
        if (compact != header) {
            // A malformed sample line (non-numeric token) lands here too.
            throw fail("expected '" + std::string(header) + "' header, found '" + std::string(t) + "'",
                       lines[pos].number);
        }
        return lines[pos++].number;
    };

    skip_blank();
    while (pos < lines.size()) {
        const Line name_line = lines[pos++];
        const std::string name(trim(name_line.text));
        if (pos >= lines.size()) throw fail("truncated record", name_line.number);
        ++pos;  // info line
        const long i_line = expect_header("I=");
        const std::vector<double> irradiance = read_block(i_line);
        const long b_line = expect_header("B=");
        const std::vector<double> brightness = read_block(b_line);
        if (irradiance.size() != brightness.size()) {
            throw fail("I and B rows differ in length", b_line);
        }
        if (warnings != nullptr && irradiance.size() >= 2) {
            const SampleGrid grid(irradiance.size());
            double worst = 0.0;
            for (std::size_t i = 0; i < irradiance.size(); ++i) {
                worst = std::max(worst, std::abs(irradiance[i] - grid.position(i)));
            }
            if (worst > options.grid_tolerance) {
                std::ostringstream os;
                os << "record " << record << " (" << name << "): irradiance row deviates from the "
                   << "uniform grid by " << worst;
                warnings->push_back(os.str());
            }
        }
        try {
            curves.push_back(normalize(brightness, name));
        } catch (const Error& e) {
            throw fail(e.what(), b_line);
        }
        ++record;
        skip_blank();
    }
    return curves;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<ResponseCurve> load_dorf(const std::string& path, const DorfOptions& options,
                                     std::vector<std::string>* warnings) {
    return parse_dorf(read_text_file(path), options, warnings);
}

void write_dorf(std::ostream& out, std::span<const ResponseCurve> curves, std::string_view info) {
    char buf[32];
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const ResponseCurve& curve = curves[c];
        if (c > 0) out << '\n';
        out << curve.id() << '\n' << info << '\n' << "I =\n";
        const SampleGrid grid(curve.size());
        for (std::size_t i = 0; i < curve.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.6e", grid.position(i));
            out << (i ? "   " : "") << buf;
        }
        out << "\nB =\n";
        for (std::size_t i = 0; i < curve.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.6e", curve[i]);
            out << (i ? "   " : "") << buf;
        }
        out << '\n';
    }
}

std::vector<ResponseCurve> parse_curves_csv(std::string_view text) {
    std::vector<ResponseCurve> curves;
    long row = 0;
    for (const Line& line : split_lines(text)) {
        const std::string_view t = trim(line.text);
        if (t.empty()) continue;
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = t.find(',', start);
            cells.push_back(trim(t.substr(start, comma == std::string_view::npos ? t.npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        std::vector<double> values;
        std::size_t parsed = 0;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            double v = 0.0;
            if (parse_double(cells[i], v)) ++parsed;
            values.push_back(v);
        }
        const bool numeric = cells.size() > 1 && parsed + 1 == cells.size();
        if (!numeric) {
            // a header has no numeric cells at all
            if (row == 0 && curves.empty() && parsed == 0) {
                ++row;
                continue;  // header
            }
            throw ParseError("curve CSV line " + std::to_string(line.number) + ": non-numeric cell",
                             row, line.number);
        }
        if (!curves.empty() && values.size() != curves.front().size()) {
            throw ParseError("curve CSV line " + std::to_string(line.number) + ": column count differs",
                             row, line.number);
        }
        curves.push_back(normalize(values, std::string(cells[0])));
        ++row;
    }
    return curves;
}

std::vector<ResponseCurve> load_curves(const std::string& path, std::vector<std::string>* warnings) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        return parse_curves_csv(read_text_file(path));
    }
    return load_dorf(path, {}, warnings);
}

}  // namespace crf
