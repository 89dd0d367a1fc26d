#pragma once

// Response curves: N samples of a monotone map [0,1] -> [0,1] on the grid
// u_i = i / (N - 1), i = 0..N-1, pinned to (0,0) and (1,1).

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crf {

inline constexpr std::size_t kDefaultSamples = 1024;

class SampleGrid {
public:
    explicit SampleGrid(std::size_t n);
    std::size_t size() const noexcept { return n_; }
    double position(std::size_t i) const noexcept {
        return static_cast<double>(i) / static_cast<double>(n_ - 1);
    }
    std::vector<double> positions() const;

private:
    std::size_t n_;
};

class ResponseCurve {
public:
    /// Validates the curve invariants: N >= 2, samples in [0,1], endpoints 0 and 1.
    ResponseCurve(std::string id, std::vector<double> samples);

    const std::string& id() const noexcept { return id_; }
    std::span<const double> samples() const noexcept { return samples_; }
    const std::vector<double>& values() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }
    SampleGrid grid() const { return SampleGrid(samples_.size()); }

    static ResponseCurve identity(std::size_t n = kDefaultSamples);

private:
    std::string id_;
    std::vector<double> samples_;
};

/// Affine map onto [0,1] by the first and last sample, then clamp.
ResponseCurve normalize(std::span<const double> raw, std::string id = {});

/// Samples `f` on the grid of `n` points and normalizes.
ResponseCurve sample_function(const std::function<double(double)>& f, std::size_t n,
                              std::string id = {});

/// Piecewise-linear interpolation; exact on grid positions.
double evaluate(const ResponseCurve& curve, double x);

/// Resamples onto an `n`-point grid by linear interpolation.
ResponseCurve resample(const ResponseCurve& curve, std::size_t n);

/// Isotonic projection (pool adjacent violators, unit weights).
std::vector<double> isotonic_fit(std::span<const double> values);

/// Inverse response: isotonic projection, tie breaking, axis swap, resampling.
ResponseCurve invert(const ResponseCurve& curve);

std::vector<double> discrete_derivative(const ResponseCurve& curve);
double smoothness(const ResponseCurve& curve);
double smoothness(std::span<const double> samples);
double auc_label(const ResponseCurve& curve);
double auc_label(std::span<const double> samples);

// DoRF text format --------------------------------------------------------

struct DorfOptions {
    std::size_t expected_samples = kDefaultSamples;  // 0 accepts any count
    double grid_tolerance = 1e-3;
};

/// Parses concatenated DoRF records. Irradiance rows deviating from the
/// uniform grid by more than `grid_tolerance` add a message to `warnings`.
std::vector<ResponseCurve> parse_dorf(std::string_view text, const DorfOptions& options = {},
                                      std::vector<std::string>* warnings = nullptr);

std::vector<ResponseCurve> load_dorf(const std::string& path, const DorfOptions& options = {},
                                     std::vector<std::string>* warnings = nullptr);

void write_dorf(std::ostream& out, std::span<const ResponseCurve> curves,
                std::string_view info = "synthetic");

/// One curve per row: id followed by N sample columns. Rows are normalized.
std::vector<ResponseCurve> parse_curves_csv(std::string_view text);

/// Loads a DoRF document or, for *.csv paths, the CSV row format.
std::vector<ResponseCurve> load_curves(const std::string& path,
                                       std::vector<std::string>* warnings = nullptr);

std::string read_text_file(const std::string& path);

}  // namespace crf
