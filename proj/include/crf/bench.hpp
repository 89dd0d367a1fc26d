#pragma once

// Metrics, summary statistics and the two benchmark drivers.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crf/autoencoder.hpp"
#include "crf/calibration.hpp"
#include "crf/curves.hpp"
#include "crf/models.hpp"
#include "crf/report.hpp"

namespace crf::bench {

using Millis = std::chrono::duration<double, std::milli>;

double rmse(std::span<const double> u, std::span<const double> v);

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    double max = 0.0;
    double p95 = 0.0;
    Millis time{0};
};

/// Sample SD (1/(C-1)); percentiles interpolate between order statistics at
/// rank p*(C-1).
SummaryStats summarize(std::span<const double> h, Millis elapsed = Millis{0});
double percentile(std::span<const double> h, double p);

// Curve fitting ---------------------------------------------------------------

struct FitCellSpec {
    bool slr = false;
    Family family = Family::gamma;  // ignored for SLR cells
    std::size_t params = 1;
    std::string label() const;
};

/// Tags: gamma, poly:K, ggcm:K, emor:K, slr, where K is a count or a range
/// "a..b". Throws DomainError on an unknown tag.
std::vector<FitCellSpec> parse_fit_tags(std::string_view list);

struct FitCellResult {
    FitCellSpec spec;
    std::vector<double> rmse;  // one per fitted curve
    std::vector<std::string> excluded;
    std::size_t evaluations = 0;
    Millis time{0};
};

struct FittingBenchResult {
    std::vector<FitCellResult> cells;
    report::Table table(bool include_time) const;
};

struct FittingBenchOptions {
    double slr_refine_halfwidth = 0.25;
    double slr_refine_tolerance = 1e-7;
    std::size_t workers = 1;
};

/// EMoR cells fit against `basis`; when null a basis is built from `curves`.
FittingBenchResult run_fitting_bench(std::span<const ResponseCurve> curves, std::span<const FitCellSpec> cells,
                                     std::shared_ptr<const EmorBasis> basis, const ae::Autoencoder* slr,
                                     const FittingBenchOptions& options = {});

/// Encoder initialization then a 1-D golden refinement of z around it.
struct SlrFit {
    std::vector<double> z;
    double rmse = 0.0;
    std::size_t evaluations = 0;
};
SlrFit fit_slr(const ae::Autoencoder& model, const ResponseCurve& curve, double halfwidth = 0.25,
               double tolerance = 1e-7);

// Calibration -------------------------------------------------------------------

/// Seeded split of `count` indices into training and held-out parts, each
/// returned in ascending order.
struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> held;
};
HoldoutSplit split_holdout(std::size_t count, std::size_t holdout, std::uint64_t seed);

struct Camera {
    std::string id;
    ResponseCurve forward;
    ResponseCurve inverse;
};
std::vector<Camera> make_cameras(std::span<const ResponseCurve> curves, std::span<const std::size_t> indices);

struct CalibMethod {
    std::string name;
    calib::CalibFamily family = calib::CalibFamily::gamma;
    calib::ModelContext context;
};

struct CalibBenchConfig {
    std::vector<std::size_t> noccp{3, 6, 12, 24};
    std::vector<double> exposures{0.25, 0.5, 1.0, 2.0};
    double noise = 0.01;
    std::size_t seeds = 20;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    calib::SolverConfig solver;
};

struct MethodOutcome {
    std::string name;
    // [camera][noccp] mean over seeds of inverse RMSE
    std::vector<std::vector<double>> rmse;
    std::vector<double> camera_stability;  // mean over seeds
    std::vector<std::size_t> evaluations;  // every calibration, in job order
    std::vector<std::string> failures;
    Millis time{0};

    double mean_rmse() const;
    double mean_stability() const;
    std::size_t max_evaluations() const;
};

struct CalibBenchResult {
    std::vector<std::string> camera_ids;
    std::vector<std::size_t> noccp;
    std::vector<MethodOutcome> methods;

    const MethodOutcome& method(std::string_view name) const;
    report::Table summary(bool include_time) const;
    report::Table per_camera() const;
};

/// Observation seed shared by every method for one (camera, NoCCP, repeat).
std::uint64_t observation_seed(std::uint64_t base, std::size_t camera, std::size_t noccp, std::size_t repeat);

CalibBenchResult run_calibration_bench(std::span<const Camera> cameras, std::span<const CalibMethod> methods,
                                       const CalibBenchConfig& config);

// Plot data ---------------------------------------------------------------------

/// Calibrated inverse curves against the truth for one camera.
std::string inverse_curves_svg(const std::string& title, const ResponseCurve& truth,
                               std::span<const calib::CalibrationResult> results,
                               std::span<const std::string> labels);
std::string latent_histogram_svg(const ae::LatentHistogram& h, const std::string& title);

}  // namespace crf::bench
