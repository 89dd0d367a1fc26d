#pragma once

// Inverse-response calibration from irradiance/intensity correspondences.
//
// Every family minimizes J = mean_j (g(intensity_j) - irradiance_j)^2 over
// its parameters, where g is the inverse response the parameters induce.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crf/autoencoder.hpp"
#include "crf/curves.hpp"
#include "crf/models.hpp"
#include "crf/optimize.hpp"

namespace crf::calib {

enum class Channel { r, g, b, mono };

std::string_view channel_name(Channel c) noexcept;
std::optional<Channel> parse_channel(std::string_view name) noexcept;

struct Observation {
    double irradiance = 0.0;
    double intensity = 0.0;
    double exposure = 1.0;
};

struct ObservationSet {
    std::string camera_id;
    Channel channel = Channel::mono;
    std::vector<Observation> observations;
};

enum class CalibFamily { slr, gamma, polynomial, ggcm, emor };

std::string_view calib_family_name(CalibFamily f) noexcept;
std::optional<CalibFamily> parse_calib_family(std::string_view name) noexcept;

struct ModelContext {
    const ae::Autoencoder* slr = nullptr;
    std::shared_ptr<const EmorBasis> emor;
    std::size_t n_params = 3;  // polynomial, GGCM and EMoR
    std::size_t samples = kDefaultSamples;
};

struct SolverConfig {
    double z_lo = -4.0;
    double z_hi = 4.0;
    double gamma_lo = 0.05;
    double gamma_hi = 20.0;
    opt::GridGoldenOptions line{64, 1e-6, 100};
    std::size_t max_evaluations = 5000;
    double tolerance = 1e-10;
    double initial_step = 0.1;
};

struct CalibrationResult {
    CalibFamily family = CalibFamily::gamma;
    std::vector<double> parameters;
    ResponseCurve inverse_curve = ResponseCurve::identity(2);
    double objective = 0.0;
    std::size_t evaluations = 0;
    std::chrono::duration<double, std::milli> wall_time{0};
    bool ill_posed = false;
    bool converged = true;
    std::vector<double> probe_values;  // coarse-grid objective values (1-D families)
};

CalibrationResult calibrate(const ObservationSet& obs, CalibFamily family, const ModelContext& context,
                            const SolverConfig& solver = {});

/// Stratified draws per exposure; intensities from the true curve plus
/// Gaussian noise, both clamped to [0,1]. Deterministic per seed.
ObservationSet synth_observations(const ResponseCurve& true_curve, std::size_t n_patches, double noise_sigma,
                                  std::span<const double> exposures, std::uint64_t seed,
                                  std::string camera_id = "synthetic");

/// Sum over sample positions of the population variance across curves.
double stability(std::span<const ResponseCurve> curves);

double rmse_vs_truth(const CalibrationResult& result, const ResponseCurve& truth);

/// Clamps to [0,1] and pins the endpoints to 0 and 1.
ResponseCurve pin_curve(std::vector<double> raw, std::string id = {});

// File formats -------------------------------------------------------------------

/// Header camera_id,channel,exposure,irradiance,intensity. Rows are grouped
/// by (camera_id, channel) in order of first appearance.
std::vector<ObservationSet> parse_observations_csv(std::string_view text);
std::string observations_csv(std::span<const ObservationSet> sets);

std::string calibration_result_json(const CalibrationResult& result, const std::string& camera_id,
                                    bool include_time);

}  // namespace crf::calib
