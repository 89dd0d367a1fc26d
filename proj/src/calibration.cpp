#include "crf/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "crf/report.hpp"
#include "crf/simd/kernels.hpp"
#include "json.hpp"

namespace crf::calib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double horner(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

class Objective {
public:
    explicit Objective(const ObservationSet& obs) {
        for (const Observation& o : obs.observations) {
            x_.push_back(o.intensity);
            target_.push_back(o.irradiance);
        }
        values_.resize(x_.size());
    }

    template <typename G>
    double operator()(G&& g) {
        for (std::size_t j = 0; j < x_.size(); ++j) {
            values_[j] = g(x_[j]);
            if (!std::isfinite(values_[j])) return kInf;
        }
        return simd::sum_sq_diff(values_, target_) / static_cast<double>(x_.size());
    }

    double curve(const ResponseCurve& inverse) {
        return (*this)([&](double y) { return evaluate(inverse, y); });
    }

private:
    std::vector<double> x_;
    std::vector<double> target_;
    std::vector<double> values_;
};

std::vector<double> sample_on_grid(std::size_t n, const auto& g) {
    const SampleGrid grid(n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = g(grid.position(i));
    return out;
}

double ggcm_inverse(std::span<const double> w, double y) {
    const double e = horner(w, y);
    if (y == 0.0) return e > 0.0 ? 0.0 : kInf;
    return std::pow(y, e);
}

}  // namespace

std::string_view channel_name(Channel c) noexcept {
    switch (c) {
        case Channel::r: return "R";
        case Channel::g: return "G";
        case Channel::b: return "B";
        case Channel::mono: return "mono";
    }
    return "mono";
}

std::optional<Channel> parse_channel(std::string_view name) noexcept {
    if (name == "R" || name == "r") return Channel::r;
    if (name == "G" || name == "g") return Channel::g;
    if (name == "B" || name == "b") return Channel::b;
    if (name == "mono") return Channel::mono;
    return std::nullopt;
}

std::string_view calib_family_name(CalibFamily f) noexcept {
    switch (f) {
        case CalibFamily::slr: return "slr";
        case CalibFamily::gamma: return "gamma";
        case CalibFamily::polynomial: return "polynomial";
        case CalibFamily::ggcm: return "ggcm";
        case CalibFamily::emor: return "emor";
    }
    return "unknown";
}

std::optional<CalibFamily> parse_calib_family(std::string_view name) noexcept {
    if (name == "slr") return CalibFamily::slr;
    if (name == "gamma") return CalibFamily::gamma;
    if (name == "polynomial" || name == "poly") return CalibFamily::polynomial;
    if (name == "ggcm") return CalibFamily::ggcm;
    if (name == "emor") return CalibFamily::emor;
    return std::nullopt;
}

ResponseCurve pin_curve(std::vector<double> raw, std::string id) {
    for (double& v : raw) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    raw.front() = 0.0;
    raw.back() = 1.0;
    return ResponseCurve(std::move(id), std::move(raw));
}

CalibrationResult calibrate(const ObservationSet& obs, CalibFamily family, const ModelContext& context,
                            const SolverConfig& solver) {
    if (obs.observations.empty()) throw DomainError("calibrate: no observations");
    const auto start = std::chrono::steady_clock::now();
    Objective objective(obs);
    CalibrationResult result;
    result.family = family;
    const double first = obs.observations.front().intensity;
    result.ill_posed = std::all_of(obs.observations.begin(), obs.observations.end(),
                                   [&](const Observation& o) { return o.intensity == first; });
    const std::size_t n = context.samples;

    switch (family) {
        case CalibFamily::slr: {
            if (context.slr == nullptr) throw DomainError("calibrate: SLR family needs trained weights");
            const ae::Autoencoder& model = *context.slr;
            if (model.arch().latent_dim != 1) throw DomainError("calibrate: SLR search needs a 1-D latent");
            const bool forward_model = !model.metadata().train_on_inverse;
            auto inverse_of = [&](double z) {
                const ResponseCurve decoded = model.decode(std::span<const double>(&z, 1));
                return forward_model ? invert(decoded) : decoded;
            };
            auto f = [&](double z) {
                try {
                    return objective.curve(inverse_of(z));
                } catch (const Error&) {
                    return kInf;
                }
            };
            const opt::GridGoldenResult r = opt::grid_then_golden(f, solver.z_lo, solver.z_hi, solver.line);
            result.parameters = {r.best.x};
            result.objective = r.best.value;
            result.evaluations = r.best.evaluations;
            result.converged = r.best.converged;
            result.probe_values = r.probe_values;
            result.inverse_curve = resample(inverse_of(r.best.x), n);
            break;
        }
        case CalibFamily::gamma: {
            auto f = [&](double log_gamma) {
                const double inv = 1.0 / std::exp(log_gamma);
                return objective([&](double y) { return std::pow(y, inv); });
            };
            const opt::GridGoldenResult r =
                opt::grid_then_golden(f, std::log(solver.gamma_lo), std::log(solver.gamma_hi), solver.line);
            const double gamma = std::exp(r.best.x);
            result.parameters = {gamma};
            result.objective = r.best.value;
            result.evaluations = r.best.evaluations;
            result.converged = r.best.converged;
            result.probe_values = r.probe_values;
            result.inverse_curve = pin_curve(sample_on_grid(n, [&](double y) { return std::pow(y, 1.0 / gamma); }), "gamma");
            break;
        }
        case CalibFamily::polynomial:
        case CalibFamily::ggcm:
        case CalibFamily::emor: {
            if (context.n_params < 1) throw DomainError("calibrate: need at least one parameter");
            opt::NelderMeadOptions nm;
            nm.max_iterations = std::numeric_limits<std::size_t>::max();
            nm.max_evaluations = solver.max_evaluations;
            nm.tolerance = solver.tolerance;
            nm.initial_step = solver.initial_step;

            std::vector<double> x0(context.n_params, 0.0);
            opt::ObjectiveNd f;
            std::shared_ptr<const EmorBasis> basis = context.emor;
            if (family == CalibFamily::polynomial) {
                x0[0] = 1.0;
                f = [&](const std::vector<double>& w) { return objective([&](double y) { return y * horner(w, y); }); };
            } else if (family == CalibFamily::ggcm) {
                x0[0] = 1.0;
                f = [&](const std::vector<double>& w) { return objective([&](double y) { return ggcm_inverse(w, y); }); };
            } else {
                if (!basis) throw DomainError("calibrate: EMoR family needs a basis");
                if (context.n_params > basis->size()) throw DomainError("calibrate: basis has too few components");
                x0 = emor_project(ResponseCurve::identity(basis->samples()), basis, context.n_params).coefficients;
                f = [&](const std::vector<double>& c) {
                    try {
                        return objective.curve(invert(emor_reconstruct(EmorModel{basis, c})));
                    } catch (const Error&) {
                        return kInf;
                    }
                };
            }
            const opt::ResultNd r = opt::nelder_mead(f, x0, nm);
            result.parameters = r.x;
            result.objective = r.value;
            result.evaluations = r.evaluations;
            result.converged = r.converged;
            if (family == CalibFamily::polynomial) {
                result.inverse_curve = pin_curve(sample_on_grid(n, [&](double y) { return y * horner(r.x, y); }), "polynomial");
            } else if (family == CalibFamily::ggcm) {
                result.inverse_curve = pin_curve(sample_on_grid(n, [&](double y) { return ggcm_inverse(r.x, y); }), "ggcm");
            } else {
                ResponseCurve inv = invert(emor_reconstruct(EmorModel{basis, r.x}));
                result.inverse_curve = inv.size() == n ? std::move(inv) : resample(inv, n);
            }
            break;
        }
    }
    result.wall_time = std::chrono::steady_clock::now() - start;
    return result;
}

ObservationSet synth_observations(const ResponseCurve& true_curve, std::size_t n_patches, double noise_sigma,
                                  std::span<const double> exposures, std::uint64_t seed, std::string camera_id) {
    if (n_patches < 1) throw DomainError("synth_observations: need at least one patch");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    ObservationSet set{std::move(camera_id), Channel::mono, {}};
    for (double e : exposures) {
        if (!(e > 0.0)) throw DomainError("synth_observations: exposures must be positive");
        for (std::size_t j = 0; j < n_patches; ++j) {
            const double u = (static_cast<double>(j) + jitter(rng)) / static_cast<double>(n_patches);
            const double irradiance = std::clamp(e * u, 0.0, 1.0);
            double intensity = evaluate(true_curve, irradiance);
            if (noise_sigma > 0.0) intensity += noise_sigma * noise(rng);
            set.observations.push_back({irradiance, std::clamp(intensity, 0.0, 1.0), e});
        }
    }
    return set;
}

double stability(std::span<const ResponseCurve> curves) {
    if (curves.size() < 2) throw DomainError("stability: need at least 2 curves");
    const std::size_t n = curves.front().size();
    for (const ResponseCurve& c : curves) {
        if (c.size() != n) throw DomainError("stability: curves differ in length");
    }
    const double m = static_cast<double>(curves.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // shifted by the first curve, so identical curves give exactly 0
        const double ref = curves.front()[i];
        double s = 0.0, s2 = 0.0;
        for (const ResponseCurve& c : curves) {
            const double d = c[i] - ref;
            s += d;
            s2 += d * d;
        }
        total += std::max(0.0, s2 / m - (s / m) * (s / m));
    }
    return total;
}

double rmse_vs_truth(const CalibrationResult& result, const ResponseCurve& truth) {
    if (result.inverse_curve.size() != truth.size()) throw DomainError("rmse_vs_truth: length mismatch");
    return std::sqrt(simd::sum_sq_diff(result.inverse_curve.samples(), truth.samples()) /
                     static_cast<double>(truth.size()));
}

// ---------------------------------------------------------------------------

std::vector<ObservationSet> parse_observations_csv(std::string_view text) {
    report::Table table;
    try {
        table = report::parse_csv(text);
    } catch (const FormatError& e) {
        throw ParseError(std::string("observation CSV: ") + e.what(), 0, 0);
    }
    const std::vector<std::string> expected{"camera_id", "channel", "exposure", "irradiance", "intensity"};
    if (table.columns != expected) {
        throw ParseError("observation CSV line 1: expected header camera_id,channel,exposure,irradiance,intensity",
                         0, 1);
    }
    std::vector<ObservationSet> sets;
    std::map<std::pair<std::string, Channel>, std::size_t> index;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const long line = static_cast<long>(r) + 2;
        auto fail = [&](const std::string& msg) {
            return ParseError("observation CSV line " + std::to_string(line) + ": " + msg, static_cast<long>(r), line);
        };
        const auto channel = parse_channel(row[1]);
        if (!channel) throw fail("unknown channel '" + row[1] + "'");
        double v[3];
        for (int k = 0; k < 3; ++k) {
            const std::string& cell = row[2 + k];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v[k]);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v[k])) {
                throw fail("non-numeric value '" + cell + "'");
            }
        }
        if (v[1] < 0.0 || v[1] > 1.0 || v[2] < 0.0 || v[2] > 1.0) throw fail("irradiance and intensity must lie in [0,1]");
        const auto key = std::make_pair(row[0], *channel);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, sets.size()).first;
            sets.push_back({row[0], *channel, {}});
        }
        sets[it->second].observations.push_back({v[1], v[2], v[0]});
    }
    return sets;
}

std::string observations_csv(std::span<const ObservationSet> sets) {
    report::Table t;
    t.columns = {"camera_id", "channel", "exposure", "irradiance", "intensity"};
    for (const ObservationSet& s : sets) {
        for (const Observation& o : s.observations) {
            t.add_row({s.camera_id, std::string(channel_name(s.channel)), report::number(o.exposure),
                       report::number(o.irradiance), report::number(o.intensity)});
        }
    }
    return report::to_csv(t);
}

std::string calibration_result_json(const CalibrationResult& result, const std::string& camera_id,
                                    bool include_time) {
    std::string out = "{\n";
    out += "  \"camera_id\": " + nlohmann::json(camera_id).dump() + ",\n";
    out += "  \"family\": \"" + std::string(calib_family_name(result.family)) + "\",\n";
    out += "  \"parameters\": [";
    for (std::size_t i = 0; i < result.parameters.size(); ++i) {
        out += (i ? ", " : "") + report::number(result.parameters[i]);
    }
    out += "],\n  \"objective\": " + report::number(result.objective) + ",\n";
    out += "  \"evaluations\": " + std::to_string(result.evaluations) + ",\n";
    if (include_time) out += "  \"wall_time_ms\": " + report::number(result.wall_time.count()) + ",\n";
    out += std::string("  \"ill_posed\": ") + (result.ill_posed ? "true" : "false") + ",\n";
    out += std::string("  \"converged\": ") + (result.converged ? "true" : "false") + ",\n";
    out += "  \"inverse_curve\": [";
    for (std::size_t i = 0; i < result.inverse_curve.size(); ++i) {
        out += (i ? "," : "") + report::number(result.inverse_curve[i]);
    }
    out += "]\n}\n";
    return out;
}

}  // namespace crf::calib
