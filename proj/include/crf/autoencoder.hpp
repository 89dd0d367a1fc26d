#pragma once

// Single-latent response autoencoder.
//
// Topology: input -> encoder hidden layers (tanh) -> linear latent ->
// mirrored decoder hidden layers (tanh) -> linear output. Dropout with keep
// probability p masks every hidden-layer output during training; at
// inference the weights that consume hidden outputs are scaled by p.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crf/curves.hpp"
#include "crf/error.hpp"

namespace crf::ae {

enum class Constraint { none, ldl, auc };

std::string_view constraint_name(Constraint c) noexcept;
std::optional<Constraint> parse_constraint(std::string_view name) noexcept;

struct ArchSpec {
    std::size_t input_size = kDefaultSamples;
    std::vector<std::size_t> encoder_hidden{100};
    std::size_t latent_dim = 1;
    double dropout_keep = 0.9;

    std::vector<std::size_t> decoder_hidden() const;
    /// Sizes of every activation vector from input to output.
    std::vector<std::size_t> layer_sizes() const;
    /// Throws DomainError when the invariants do not hold.
    void validate() const;
    std::string label() const;  // e.g. "100-20-0"

    friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out
    bool activated = false;       // tanh after the affine map
    bool dropout_input = false;   // input is a hidden-layer output

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MLPWeights {
    std::vector<DenseLayer> layers;
    std::size_t latent_layer = 0;  // index of the layer producing z

    std::size_t parameter_count() const;
    friend bool operator==(const MLPWeights&, const MLPWeights&) = default;
};

/// Zero-filled weights with the layer shapes induced by `arch`.
MLPWeights make_weights(const ArchSpec& arch);

/// Glorot-uniform weights, zero biases.
MLPWeights init_weights(const ArchSpec& arch, std::uint64_t seed);

/// Row-major batch of equal-length vectors.
struct Batch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Batch() = default;
    Batch(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

Batch make_batch(std::span<const ResponseCurve> curves);

enum class Mode { train, eval };

struct ForwardPass {
    // Per layer: masked input, pre-activation, output, and the mask applied
    // to the input (empty when the layer input is not dropped out).
    std::vector<Batch> inputs;
    std::vector<Batch> pre;
    std::vector<Batch> outputs;
    std::vector<Batch> masks;

    const Batch& reconstruction() const { return outputs.back(); }
};

/// `rng` is required in train mode and drives the dropout masks.
ForwardPass forward(const MLPWeights& weights, const Batch& input, Mode mode,
                    std::mt19937_64* rng = nullptr, double dropout_keep = 1.0);

// Losses ----------------------------------------------------------------------

double loss_recon(std::span<const double> x, std::span<const double> reconstructed);

/// KL(N(mu, sigma) || N(0, 1)) for the normal fitted to `z`. With
/// `normalized_variance` the variance is the batch mean of squared
/// deviations; otherwise it is their plain sum. sigma is floored at 1e-6.
double loss_kl_ldl(std::span<const double> z, bool normalized_variance = true);

double loss_auc(std::span<const double> z, std::span<const double> labels);

struct TrainConfig {
    std::size_t epochs = 4000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    double lambda_smooth = 1e-3;
    double lambda_latent = 1e-2;
    Constraint constraint = Constraint::ldl;
    double auc_scale = 0.0;  // 0: 1 / input_size
    bool ldl_normalized_variance = true;
    bool train_on_inverse = false;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;

    double effective_auc_scale(std::size_t n) const {
        return auc_scale > 0.0 ? auc_scale : 1.0 / static_cast<double>(n);
    }
};

struct LossBreakdown {
    double recon = 0.0;
    double smooth = 0.0;  // mean smoothness of the reconstructions
    double latent = 0.0;  // constraint term before weighting
    double total = 0.0;
};

/// AUC targets for a batch: auc_label(curve) * scale.
std::vector<double> auc_targets(const Batch& input, double scale);

LossBreakdown total_loss(const ForwardPass& pass, const Batch& input, std::span<const double> labels,
                         const TrainConfig& config);

struct Gradients {
    MLPWeights grad;  // same shapes as the weights
    LossBreakdown loss;
};

/// Exact reverse-mode gradient of total_loss. In train mode the masks are
/// drawn from `rng` and shared by the forward and backward sweep.
Gradients gradients(const MLPWeights& weights, const ArchSpec& arch, const Batch& input,
                    std::span<const double> labels, const TrainConfig& config, std::mt19937_64* rng,
                    Mode mode = Mode::train);

class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(const std::string& what, std::size_t epoch) : NumericError(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

struct TrainReport {
    std::vector<LossBreakdown> history;  // one entry per epoch
    std::vector<double> per_curve_rmse;  // eval-mode reconstruction, normalized
    double mean_rmse = 0.0;
};

struct TrainingMetadata {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    Constraint constraint = Constraint::none;
    double learning_rate = 0.0;
    double lambda_smooth = 0.0;
    double lambda_latent = 0.0;
    bool ldl_normalized_variance = true;
    bool train_on_inverse = false;
    std::uint64_t dataset_fingerprint = 0;
    std::size_t dataset_size = 0;
    std::size_t holdout = 0;
    std::uint64_t holdout_seed = 0;

    friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// Trained model: architecture, weights, training metadata.
class Autoencoder {
public:
    Autoencoder(ArchSpec arch, MLPWeights weights, TrainingMetadata meta = {});

    const ArchSpec& arch() const noexcept { return arch_; }
    const MLPWeights& weights() const noexcept { return weights_; }
    const TrainingMetadata& metadata() const noexcept { return meta_; }

    std::vector<double> encode(std::span<const double> curve) const;
    std::vector<double> encode(const ResponseCurve& curve) const { return encode(curve.samples()); }
    /// Decoder output before normalization.
    std::vector<double> decode_raw(std::span<const double> z) const;
    /// Endpoint-normalized decoder output.
    ResponseCurve decode(std::span<const double> z) const;
    ResponseCurve reconstruct(const ResponseCurve& curve) const { return decode(encode(curve)); }

private:
    std::vector<double> run(std::span<const double> x, std::size_t first, std::size_t last) const;

    ArchSpec arch_;
    MLPWeights weights_;
    TrainingMetadata meta_;
    std::vector<std::vector<double>> transposed_;  // in x out copies for wide layers
};

struct TrainResult {
    MLPWeights weights;
    TrainReport report;
};

/// Full-batch Adam training. Deterministic for a given seed.
TrainResult train(std::span<const ResponseCurve> curves, const ArchSpec& arch, const TrainConfig& config);

Autoencoder train_autoencoder(std::span<const ResponseCurve> curves, const ArchSpec& arch,
                              const TrainConfig& config, TrainReport* report = nullptr);

double mean_reconstruction_rmse(const Autoencoder& model, std::span<const ResponseCurve> curves);

struct LatentHistogram {
    double lo = -4.0;
    double hi = 4.0;
    std::vector<std::size_t> counts;
    std::size_t underflow = 0;
    std::size_t overflow = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample SD (1 / (n - 1)); 0 for one value
    std::vector<double> values;
};

/// Histogram of the first latent coordinate over [lo, hi].
LatentHistogram latent_histogram(const Autoencoder& model, std::span<const ResponseCurve> curves,
                                 std::size_t bins, double lo = -4.0, double hi = 4.0);

// Model files -------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

void save_model(const Autoencoder& model, std::ostream& out);
void save_model(const Autoencoder& model, const std::string& path);
std::string serialize_model(const Autoencoder& model);
Autoencoder parse_model(std::string_view text);
Autoencoder load_model(const std::string& path);

}  // namespace crf::ae
