#pragma once

// Deterministic stand-in for the measured response database.
//
// Each curve is a power law x^g with log g drawn from a normal distribution,
// bent by one of four deformations (highlight knee, linear toe, film-like S
// bend, exponent tilt) plus a small smooth wobble, then made monotone and
// normalized. The spreads are set so gamma and PCA fit errors land near the
// levels reported for the measured database.
// It exists so the full pipeline runs when the measured file is absent; it
// is not a substitute for benchmark numbers quoted against the real data.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crf/curves.hpp"

namespace crf {

struct SurrogateOptions {
    std::size_t count = 201;
    std::size_t samples = kDefaultSamples;
    std::uint64_t seed = 20040601;
};

std::vector<ResponseCurve> generate_surrogate_database(const SurrogateOptions& options = {});

/// 64-bit FNV-1a over the curve samples; identifies the training set in model files.
std::uint64_t dataset_fingerprint(const std::vector<ResponseCurve>& curves);

}  // namespace crf
