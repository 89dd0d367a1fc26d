#include "crf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crf/error.hpp"

namespace crf::opt {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2

double sanitize(double v) {
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Result1d golden_section(const Objective1d& f, double lo, double hi, double tolerance,
                        std::size_t max_evaluations) {
    if (!(hi > lo)) throw DomainError("golden_section: empty bracket");
    Result1d best;
    best.value = std::numeric_limits<double>::infinity();
    auto eval = [&](double x) {
        const double v = sanitize(f(x));
        ++best.evaluations;
        if (v < best.value || best.evaluations == 1) {
            best.x = x;
            best.value = v;
        }
        return v;
    };

    double a = lo;
    double b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a >= tolerance) {
        if (best.evaluations >= max_evaluations) return best;
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = eval(d);
        }
    }
    best.converged = true;
    return best;
}

GridGoldenResult grid_then_golden(const Objective1d& f, double lo, double hi,
                                  const GridGoldenOptions& options) {
    if (options.grid_points < 2) throw DomainError("grid_then_golden: need at least 2 grid points");
    GridGoldenResult out;
    const std::size_t n = options.grid_points;
    out.probes.resize(n);
    out.probe_values.resize(n);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        out.probes[i] = x;
        out.probe_values[i] = sanitize(f(x));
        if (out.probe_values[i] < out.probe_values[arg]) arg = i;
    }
    out.best.x = out.probes[arg];
    out.best.value = out.probe_values[arg];
    out.best.evaluations = n;

    const double a = out.probes[arg == 0 ? 0 : arg - 1];
    const double b = out.probes[std::min(arg + 1, n - 1)];
    const Result1d refined = golden_section(f, a, b, options.tolerance, options.golden_budget);
    out.best.evaluations += refined.evaluations;
    out.best.converged = refined.converged;
    if (refined.value < out.best.value) {
        out.best.x = refined.x;
        out.best.value = refined.value;
    }
    return out;
}

ResultNd nelder_mead(const ObjectiveNd& f, std::vector<double> x0, const NelderMeadOptions& options) {
    const std::size_t dim = x0.size();
    if (dim == 0) throw DomainError("nelder_mead: empty parameter vector");

    ResultNd result;
    auto budget_left = [&] {
        return options.max_evaluations == 0 || result.evaluations < options.max_evaluations;
    };
    // past the budget a probe is simply rejected
    auto eval = [&](const std::vector<double>& x) {
        if (!budget_left()) return std::numeric_limits<double>::infinity();
        ++result.evaluations;
        return sanitize(f(x));
    };

    std::vector<std::vector<double>> simplex(dim + 1, x0);
    std::vector<double> values(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) {
        const double step = x0[i] != 0.0 ? options.initial_step * std::abs(x0[i]) : options.initial_step;
        simplex[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s(dim + 1);
        std::vector<double> v(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) {
            s[i] = std::move(simplex[order[i]]);
            v[i] = values[order[i]];
        }
        simplex = std::move(s);
        values = std::move(v);
    };
    auto converged = [&] {
        double spread = 0.0;
        double diameter = 0.0;
        for (std::size_t i = 1; i <= dim; ++i) {
            spread = std::max(spread, std::abs(values[i] - values[0]));
            for (std::size_t j = 0; j < dim; ++j) {
                diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[0][j]));
            }
        }
        return std::isfinite(values[0]) && spread <= options.tolerance &&
               diameter <= options.tolerance;
    };

    sort_simplex();
    while (result.iterations < options.max_iterations && budget_left()) {
        if (converged()) {
            result.converged = true;
            break;
        }
        ++result.iterations;
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        const std::vector<double>& worst = simplex[dim];
        for (std::size_t j = 0; j < dim; ++j) xr[j] = centroid[j] + (centroid[j] - worst[j]);
        const double fr = eval(xr);

        if (fr < values[0]) {
            for (std::size_t j = 0; j < dim; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - worst[j]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
        } else if (fr < values[dim - 1]) {
            simplex[dim] = xr;
            values[dim] = fr;
        } else {
            const bool outside = fr < values[dim];
            for (std::size_t j = 0; j < dim; ++j) {
                xc[j] = outside ? centroid[j] + 0.5 * (xr[j] - centroid[j])
                                : centroid[j] + 0.5 * (worst[j] - centroid[j]);
            }
            const double fc = eval(xc);
            if (fc < (outside ? fr : values[dim])) {
                simplex[dim] = xc;
                values[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t j = 0; j < dim; ++j) {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = eval(simplex[i]);
                }
            }
        }
        sort_simplex();
    }
    if (!result.converged) result.converged = converged();
    result.x = simplex[0];
    result.value = values[0];
    return result;
}

}  // namespace crf::opt
