#include "crf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "crf/optimize.hpp"
#include "crf/simd/kernels.hpp"

namespace crf::bench {

namespace {

using Clock = std::chrono::steady_clock;

// Runs job(i) for i in [0, count) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t count, std::size_t workers, Job&& job) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
    }
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::size_t parse_count(std::string_view s, std::string_view tag) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
        throw DomainError("unknown model tag '" + std::string(tag) + "'");
    }
    return v;
}

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rmse(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size() || u.empty()) throw DomainError("rmse: length mismatch");
    return std::sqrt(simd::sum_sq_diff(u, v) / static_cast<double>(u.size()));
}

double percentile(std::span<const double> h, double p) {
    if (h.empty()) throw DomainError("percentile: empty input");
    std::vector<double> s(h.begin(), h.end());
    std::sort(s.begin(), s.end());
    const double rank = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (rank - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

SummaryStats summarize(std::span<const double> h, Millis elapsed) {
    if (h.empty()) throw DomainError("summarize: empty result vector");
    SummaryStats s;
    s.time = elapsed;
    std::vector<double> sorted(h.begin(), h.end());
    std::sort(sorted.begin(), sorted.end());
    s.mean = mean_of(sorted);
    s.median = percentile(sorted, 0.5);
    s.p95 = percentile(sorted, 0.95);
    s.max = sorted.back();
    if (sorted.size() > 1) {
        double acc = 0.0;
        for (double v : sorted) acc += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(acc / static_cast<double>(sorted.size() - 1));
    }
    return s;
}

// ---------------------------------------------------------------------------

std::string FitCellSpec::label() const {
    if (slr) return "slr";
    return std::string(family_name(family)) + ":" + std::to_string(params);
}

std::vector<FitCellSpec> parse_fit_tags(std::string_view list) {
    std::vector<FitCellSpec> cells;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = std::min(list.find(',', pos), list.size());
        const std::string_view tag = list.substr(pos, comma - pos);
        pos = comma + 1;
        if (tag.empty()) continue;
        if (tag == "slr") {
            cells.push_back({true, Family::gamma, 1});
            continue;
        }
        const std::size_t colon = tag.find(':');
        const auto family = parse_family(tag.substr(0, colon));
        if (!family) throw DomainError("unknown model tag '" + std::string(tag) + "'");
        std::size_t first = 1;
        std::size_t last = 1;
        if (colon != std::string_view::npos) {
            const std::string_view range = tag.substr(colon + 1);
            const std::size_t dots = range.find("..");
            if (dots == std::string_view::npos) {
                first = last = parse_count(range, tag);
            } else {
                first = parse_count(range.substr(0, dots), tag);
                last = parse_count(range.substr(dots + 2), tag);
            }
        }
        if (*family == Family::gamma && (first != 1 || last != 1)) {
            throw DomainError("gamma takes exactly one parameter");
        }
        if (last < first) throw DomainError("empty range in model tag '" + std::string(tag) + "'");
        for (std::size_t k = first; k <= last; ++k) cells.push_back({false, *family, k});
    }
    if (cells.empty()) throw DomainError("no model tags given");
    return cells;
}

SlrFit fit_slr(const ae::Autoencoder& model, const ResponseCurve& curve, double halfwidth, double tolerance) {
    SlrFit fit;
    fit.z = model.encode(curve);
    auto error_at = [&](std::span<const double> z) {
        ++fit.evaluations;
        try {
            const ResponseCurve r = model.decode(z);
            return rmse(r.samples(), curve.samples());
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    fit.rmse = error_at(fit.z);
    if (fit.z.size() != 1 || halfwidth <= 0.0) return fit;
    const double z0 = fit.z[0];
    const opt::Result1d r = opt::golden_section(
        [&](double z) { return error_at(std::span<const double>(&z, 1)); }, z0 - halfwidth, z0 + halfwidth,
        tolerance);
    if (r.value < fit.rmse) {
        fit.z[0] = r.x;
        fit.rmse = r.value;
    }
    return fit;
}

FittingBenchResult run_fitting_bench(std::span<const ResponseCurve> curves, std::span<const FitCellSpec> cells,
                                     std::shared_ptr<const EmorBasis> basis, const ae::Autoencoder* slr,
                                     const FittingBenchOptions& options) {
    if (curves.empty()) throw DomainError("fitting bench: no curves");
    std::size_t max_emor = 0;
    for (const FitCellSpec& c : cells) {
        if (c.slr && slr == nullptr) throw DomainError("fitting bench: SLR cell needs a model file");
        if (!c.slr && c.family == Family::emor) max_emor = std::max(max_emor, c.params);
    }
    if (max_emor > 0 && !basis) {
        basis = std::make_shared<const EmorBasis>(
            build_emor_basis(std::vector<ResponseCurve>(curves.begin(), curves.end()), max_emor));
    }

    FittingBenchResult result;
    for (const FitCellSpec& spec : cells) {
        FitCellResult cell;
        cell.spec = spec;
        const auto start = Clock::now();
        std::vector<double> values(curves.size(), -1.0);
        std::vector<std::size_t> evals(curves.size(), 0);
        parallel_for(curves.size(), options.workers, [&](std::size_t i) {
            try {
                if (spec.slr) {
                    const SlrFit f = fit_slr(*slr, curves[i], options.slr_refine_halfwidth,
                                             options.slr_refine_tolerance);
                    values[i] = f.rmse;
                    evals[i] = f.evaluations;
                } else {
                    const FitResult f = fit_model(spec.family, curves[i], spec.params, basis.get());
                    values[i] = f.rmse;
                    evals[i] = f.evaluations;
                }
                if (!std::isfinite(values[i])) values[i] = -1.0;
            } catch (const Error&) {
                values[i] = -1.0;
            }
        });
        for (std::size_t i = 0; i < curves.size(); ++i) {
            if (values[i] < 0.0) {
                cell.excluded.push_back(curves[i].id());
            } else {
                cell.rmse.push_back(values[i]);
                cell.evaluations += evals[i];
            }
        }
        cell.time = Clock::now() - start;
        result.cells.push_back(std::move(cell));
    }
    return result;
}

report::Table FittingBenchResult::table(bool include_time) const {
    report::Table t;
    t.columns = {"model", "params", "mean_rmse", "median_rmse", "sd_rmse", "max_rmse", "p95_rmse",
                 "curves", "excluded", "evaluations"};
    if (include_time) t.columns.push_back("time_ms");
    for (const FitCellResult& c : cells) {
        std::vector<std::string> row{c.spec.slr ? "slr" : std::string(family_name(c.spec.family)),
                                     report::number(c.spec.params)};
        if (c.rmse.empty()) {
            for (int k = 0; k < 5; ++k) row.push_back("nan");
        } else {
            const SummaryStats s = summarize(c.rmse);
            for (double v : {s.mean, s.median, s.sd, s.max, s.p95}) row.push_back(report::number(v));
        }
        std::string excluded;
        for (const std::string& id : c.excluded) excluded += (excluded.empty() ? "" : ";") + id;
        row.push_back(report::number(c.rmse.size()));
        row.push_back(excluded);
        row.push_back(report::number(c.evaluations));
        if (include_time) row.push_back(report::number(c.time.count()));
        t.add_row(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------

HoldoutSplit split_holdout(std::size_t count, std::size_t holdout, std::uint64_t seed) {
    if (holdout >= count) throw DomainError("split_holdout: holdout must leave training curves");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    HoldoutSplit split;
    split.held.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(holdout), order.end());
    std::sort(split.held.begin(), split.held.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

std::vector<Camera> make_cameras(std::span<const ResponseCurve> curves, std::span<const std::size_t> indices) {
    std::vector<Camera> cameras;
    for (std::size_t i : indices) {
        if (i >= curves.size()) throw DomainError("make_cameras: index out of range");
        cameras.push_back({curves[i].id(), curves[i], invert(curves[i])});
    }
    return cameras;
}

std::uint64_t observation_seed(std::uint64_t base, std::size_t camera, std::size_t noccp, std::size_t repeat) {
    return mix(mix(mix(base) ^ camera) ^ (noccp << 20) ^ repeat);
}

double MethodOutcome::mean_rmse() const {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& cam : rmse) {
        for (double v : cam) {
            acc += v;
            ++n;
        }
    }
    return n ? acc / static_cast<double>(n) : std::nan("");
}

double MethodOutcome::mean_stability() const { return mean_of(camera_stability); }

std::size_t MethodOutcome::max_evaluations() const {
    return evaluations.empty() ? 0 : *std::max_element(evaluations.begin(), evaluations.end());
}

const MethodOutcome& CalibBenchResult::method(std::string_view name) const {
    for (const MethodOutcome& m : methods) {
        if (m.name == name) return m;
    }
    throw DomainError("calibration bench: no method '" + std::string(name) + "'");
}

CalibBenchResult run_calibration_bench(std::span<const Camera> cameras, std::span<const CalibMethod> methods,
                                       const CalibBenchConfig& config) {
    if (cameras.empty()) throw DomainError("calibration bench: no cameras");
    if (config.noccp.empty() || config.seeds == 0) throw DomainError("calibration bench: empty NoCCP list or seeds");
    const std::size_t C = cameras.size();
    const std::size_t L = config.noccp.size();
    const std::size_t S = config.seeds;

    CalibBenchResult result;
    result.noccp = config.noccp;
    for (const Camera& c : cameras) result.camera_ids.push_back(c.id);

    for (const CalibMethod& method : methods) {
        MethodOutcome out;
        out.name = method.name;
        const auto start = Clock::now();
        // job = (camera, repeat); each job covers every NoCCP level
        std::vector<double> err(C * S * L, 0.0);
        std::vector<double> stab(C * S, 0.0);
        std::vector<std::size_t> evals(C * S * L, 0);
        std::vector<std::string> fail(C * S);
        parallel_for(C * S, config.workers, [&](std::size_t job) {
            const std::size_t c = job / S;
            const std::size_t s = job % S;
            std::vector<ResponseCurve> inverses;
            try {
                for (std::size_t l = 0; l < L; ++l) {
                    const calib::ObservationSet obs = calib::synth_observations(
                        cameras[c].forward, config.noccp[l], config.noise, config.exposures,
                        observation_seed(config.seed, c, config.noccp[l], s), cameras[c].id);
                    calib::ModelContext ctx = method.context;
                    ctx.samples = cameras[c].inverse.size();
                    const calib::CalibrationResult r = calib::calibrate(obs, method.family, ctx, config.solver);
                    err[job * L + l] = calib::rmse_vs_truth(r, cameras[c].inverse);
                    evals[job * L + l] = r.evaluations;
                    inverses.push_back(r.inverse_curve);
                }
                stab[job] = L > 1 ? calib::stability(inverses) : 0.0;
            } catch (const Error& e) {
                fail[job] = cameras[c].id + " repeat " + std::to_string(s) + ": " + e.what();
            }
        });
        out.rmse.assign(C, std::vector<double>(L, 0.0));
        out.camera_stability.assign(C, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
            std::size_t good = 0;
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t job = c * S + s;
                if (!fail[job].empty()) {
                    out.failures.push_back(fail[job]);
                    continue;
                }
                ++good;
                for (std::size_t l = 0; l < L; ++l) {
                    out.rmse[c][l] += err[job * L + l];
                    out.evaluations.push_back(evals[job * L + l]);
                }
                out.camera_stability[c] += stab[job];
            }
            const double g = good ? static_cast<double>(good) : std::nan("");
            for (double& v : out.rmse[c]) v /= g;
            out.camera_stability[c] /= g;
        }
        out.time = Clock::now() - start;
        result.methods.push_back(std::move(out));
    }
    return result;
}

report::Table CalibBenchResult::summary(bool include_time) const {
    report::Table t;
    t.columns = {"method",    "noccp",      "mean",      "median",           "sd",
                 "max",       "p95",        "stability", "mean_evaluations", "max_evaluations",
                 "failures"};
    if (include_time) t.columns.push_back("time_ms");
    for (const MethodOutcome& m : methods) {
        const double mean_evals =
            m.evaluations.empty() ? 0.0
                                  : static_cast<double>(std::accumulate(m.evaluations.begin(), m.evaluations.end(),
                                                                        std::size_t{0})) /
                                        static_cast<double>(m.evaluations.size());
        auto emit = [&](const std::string& level, const std::vector<double>& h) {
            std::vector<std::string> row{m.name, level};
            const SummaryStats s = summarize(h, m.time);
            for (double v : {s.mean, s.median, s.sd, s.max, s.p95, m.mean_stability(), mean_evals}) {
                row.push_back(report::number(v));
            }
            row.push_back(report::number(m.max_evaluations()));
            row.push_back(report::number(m.failures.size()));
            if (include_time) row.push_back(report::number(m.time.count()));
            t.add_row(std::move(row));
        };
        for (std::size_t l = 0; l < noccp.size(); ++l) {
            std::vector<double> h;
            for (const auto& cam : m.rmse) h.push_back(cam[l]);
            emit(std::to_string(noccp[l]), h);
        }
        std::vector<double> h;
        for (const auto& cam : m.rmse) h.push_back(mean_of(cam));
        emit("all", h);
    }
    return t;
}

report::Table CalibBenchResult::per_camera() const {
    report::Table t;
    t.columns = {"method", "camera_id", "noccp", "mean_rmse", "stability"};
    for (const MethodOutcome& m : methods) {
        for (std::size_t c = 0; c < camera_ids.size(); ++c) {
            for (std::size_t l = 0; l < noccp.size(); ++l) {
                t.add_row({m.name, camera_ids[c], report::number(noccp[l]), report::number(m.rmse[c][l]),
                           report::number(m.camera_stability[c])});
            }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------

std::string inverse_curves_svg(const std::string& title, const ResponseCurve& truth,
                               std::span<const calib::CalibrationResult> results,
                               std::span<const std::string> labels) {
    static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    auto series_of = [](const ResponseCurve& c, std::string label, std::string color) {
        report::Series s{std::move(label), {}, {}, std::move(color), false};
        const SampleGrid grid(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            s.x.push_back(grid.position(i));
            s.y.push_back(c[i]);
        }
        return s;
    };
    std::vector<report::Series> series{series_of(truth, "truth", "#000000")};
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::string label = i < labels.size() ? labels[i] : std::string(calib::calib_family_name(results[i].family));
        series.push_back(series_of(results[i].inverse_curve, label, palette[i % 6]));
    }
    report::PlotSpec spec;
    spec.title = title;
    spec.x_label = "intensity";
    spec.y_label = "irradiance";
    return report::svg_line_plot(spec, series);
}

std::string latent_histogram_svg(const ae::LatentHistogram& h, const std::string& title) {
    return report::svg_histogram(title, h.counts, h.lo, h.hi);
}

}  // namespace crf::bench
