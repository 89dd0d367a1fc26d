#pragma once

// Derivative-free minimizers shared by model fitting and calibration.

#include <cstddef>
#include <functional>
#include <vector>

namespace crf::opt {

using Objective1d = std::function<double(double)>;
using ObjectiveNd = std::function<double(const std::vector<double>&)>;

struct Result1d {
    double x = 0.0;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Golden-section search on [lo, hi] until the bracket is narrower than `tolerance`.
/// Returns the best point evaluated.
Result1d golden_section(const Objective1d& f, double lo, double hi, double tolerance,
                        std::size_t max_evaluations = 200);

struct GridGoldenOptions {
    std::size_t grid_points = 64;
    double tolerance = 1e-6;
    std::size_t golden_budget = 100;
};

struct GridGoldenResult {
    Result1d best;
    std::vector<double> probes;
    std::vector<double> probe_values;
};

/// Uniform coarse grid over [lo, hi], then golden section between the
/// neighbours of the best probe. The returned value never exceeds any probe.
GridGoldenResult grid_then_golden(const Objective1d& f, double lo, double hi,
                                  const GridGoldenOptions& options = {});

struct NelderMeadOptions {
    std::size_t max_iterations = 2000;
    std::size_t max_evaluations = 0;  // 0: unlimited
    double tolerance = 1e-10;
    double initial_step = 0.1;
};

struct ResultNd {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead simplex with standard coefficients (1, 2, 0.5, 0.5).
/// Converged when both the simplex diameter and the spread of values are
/// within `tolerance`. Non-finite objective values are treated as +inf.
ResultNd nelder_mead(const ObjectiveNd& f, std::vector<double> x0, const NelderMeadOptions& options = {});

}  // namespace crf::opt
