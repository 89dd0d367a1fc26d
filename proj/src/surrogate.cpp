#include "crf/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>

namespace crf {

namespace {

double knee(double p, double shoulder) { return p * (1.0 + shoulder) / (p + shoulder); }

// Log-exposure S bend applied on top of the base response.
double film(double p, double amount) { return p + amount * std::sin(2.0 * std::numbers::pi * p) / (2.0 * std::numbers::pi); }

// Keeps 7 significant digits so a written and re-parsed database is bit-identical.
double quantize(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return std::strtod(buf, nullptr);
}

}  // namespace

std::vector<ResponseCurve> generate_surrogate_database(const SurrogateOptions& options) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    const SampleGrid grid(options.samples);
    std::vector<ResponseCurve> curves;
    curves.reserve(options.count);
    std::normal_distribution<double> log_gamma(-0.5, 0.95);
    static constexpr const char* kFamilies[] = {"knee", "toe", "film", "ggcm"};

    for (std::size_t c = 0; c < options.count; ++c) {
        const std::size_t family = c % 4;
        const double g = std::exp(log_gamma(rng));
        std::vector<double> raw(options.samples);
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = std::pow(grid.position(i), g);
        switch (family) {
            case 0: {
                const double s = range(0.5, 4.0);
                for (double& v : raw) v = knee(v, s);
                break;
            }
            case 1: {
                // linear toe below t
                const double t = range(0.005, 0.05);
                const double at_toe = std::pow(t, g);
                for (std::size_t i = 0; i < raw.size(); ++i) {
                    const double x = grid.position(i);
                    if (x < t) raw[i] = x * at_toe / t;
                }
                break;
            }
            case 2: {
                const double a = range(0.0, 0.1);
                for (double& v : raw) v = film(v, a);
                break;
            }
            default: {
                const double q = range(-0.1, 0.1);
                for (std::size_t i = 1; i < raw.size(); ++i) {
                    const double x = grid.position(i);
                    raw[i] = std::pow(x, std::max(g + q * (x - 0.5), 0.05));
                }
                break;
            }
        }
        // Low-frequency wobble, zero at both ends.
        const double a1 = range(-0.004, 0.004), a2 = range(-0.003, 0.003), a3 = range(-0.003, 0.003);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const double x = grid.position(i);
            raw[i] += a1 * std::sin(std::numbers::pi * x) + a2 * std::sin(2.0 * std::numbers::pi * x) +
                      a3 * std::sin(3.0 * std::numbers::pi * x);
        }
        const ResponseCurve shaped = normalize(isotonic_fit(raw));
        std::vector<double> mono(shaped.values());
        for (double& v : mono) v = quantize(v);
        curves.emplace_back(std::string("surrogate-") + kFamilies[family] + "-" + std::to_string(c),
                            std::move(mono));
    }
    return curves;
}

std::uint64_t dataset_fingerprint(const std::vector<ResponseCurve>& curves) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const ResponseCurve& c : curves) {
        const std::uint64_t n = c.size();
        mix(&n, sizeof n);
        mix(c.samples().data(), c.size() * sizeof(double));
    }
    return h;
}

}  // namespace crf
