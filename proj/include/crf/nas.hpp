#pragma once

// Naive architecture search: grid-evaluate every candidate by k-fold
// cross-validated reconstruction MSE, keep the M most accurate, return the
// least complex of those.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crf/autoencoder.hpp"
#include "crf/report.hpp"

namespace crf::nas {

struct SearchSpace {
    std::vector<std::size_t> h1{10, 20, 50, 100, 200, 500};
    std::vector<std::size_t> h2{0, 10, 20, 50, 100, 200};
    std::vector<std::size_t> h3{0, 10, 20, 50, 100};
};

/// Candidates in h1-major order; h2 = 0 forces h3 = 0. `base` supplies the
/// input size, latent size and dropout keep probability.
std::vector<ae::ArchSpec> enumerate_space(const SearchSpace& space, const ae::ArchSpec& base = {});

/// Weights and biases on one side of the autoencoder, latent layer included.
std::size_t complexity(const ae::ArchSpec& arch);

/// Returns a reconstruction function trained on the given curves.
using Reconstructor = std::function<std::vector<double>(const ResponseCurve&)>;
using Trainer = std::function<Reconstructor(std::span<const ResponseCurve>)>;

/// Fold assignment: seeded shuffle, then position mod folds.
std::vector<std::size_t> assign_folds(std::size_t count, std::size_t folds, std::uint64_t seed);

/// Mean held-out reconstruction MSE over the folds.
double cv_accuracy(std::span<const ResponseCurve> curves, const Trainer& trainer, std::size_t folds,
                   std::uint64_t fold_seed);
double cv_accuracy(const ae::ArchSpec& arch, std::span<const ResponseCurve> curves,
                   const ae::TrainConfig& config, std::size_t folds, std::uint64_t fold_seed);

struct CandidateResult {
    ae::ArchSpec arch;
    double accuracy = 0.0;  // cross-validated MSE, lower is better
    std::size_t complexity = 0;
    bool diverged = false;
    std::string error;
};

/// Top-M filter then minimum complexity; ties by accuracy, then (h1, h2, h3).
/// Diverged candidates never qualify. Returns the index into `table`.
std::size_t select_architecture(std::span<const CandidateResult> table, std::size_t top_m);

/// 1-based accuracy rank per row; 0 for diverged rows.
std::vector<std::size_t> accuracy_ranks(std::span<const CandidateResult> table);

struct NasConfig {
    std::size_t top_m = 10;
    std::size_t folds = 3;
    std::size_t workers = 1;
    std::uint64_t seed = 1;
    ae::TrainConfig train;
};

struct NasResult {
    std::vector<CandidateResult> table;
    std::size_t selected = 0;
    const ae::ArchSpec& arch() const { return table[selected].arch; }
};

/// Per-candidate training seed is config.seed + candidate index.
NasResult naive_nas(const SearchSpace& space, std::span<const ResponseCurve> curves, const NasConfig& config,
                    const ae::ArchSpec& base = {});

report::Table nas_report(const NasResult& result);
std::string nas_summary_json(const NasResult& result, const NasConfig& config);

}  // namespace crf::nas
