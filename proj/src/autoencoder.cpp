#include "crf/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "crf/simd/kernels.hpp"

namespace crf::ae {

namespace {

constexpr double kSigmaFloor = 1e-6;

std::vector<double> transpose(const DenseLayer& layer) {
    std::vector<double> t(layer.in * layer.out);
    for (std::size_t j = 0; j < layer.out; ++j) {
        for (std::size_t k = 0; k < layer.in; ++k) t[k * layer.out + j] = layer.weights[j * layer.in + k];
    }
    return t;
}

bool wide(const DenseLayer& layer) { return layer.in < layer.out; }

// out = scale * W x + b. Wide layers go through the transposed copy so the
// inner loop runs over the longer dimension.
void affine_row(const DenseLayer& layer, const std::vector<double>& wt, std::span<const double> x,
                double scale, std::span<double> out) {
    if (wide(layer)) {
        std::copy(layer.bias.begin(), layer.bias.end(), out.begin());
        for (std::size_t k = 0; k < layer.in; ++k) {
            const double a = x[k] * scale;
            if (a != 0.0) simd::axpy(a, {wt.data() + k * layer.out, layer.out}, out);
        }
    } else {
        for (std::size_t j = 0; j < layer.out; ++j) {
            out[j] = simd::dot({layer.weights.data() + j * layer.in, layer.in}, x) * scale + layer.bias[j];
        }
    }
}

void activate(std::span<double> v) {
    for (double& x : v) x = std::tanh(x);
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct LdlParts {
    double mu;
    double var;
    double sigma;
    bool floored;
};

LdlParts ldl_parts(std::span<const double> z, bool normalized) {
    const double n = static_cast<double>(z.size());
    double mu = 0.0;
    for (double v : z) mu += v;
    mu /= n;
    double ss = 0.0;
    for (double v : z) ss += (v - mu) * (v - mu);
    const double var = normalized ? ss / n : ss;
    double sigma = std::sqrt(var);
    const bool floored = sigma < kSigmaFloor;
    if (floored) sigma = kSigmaFloor;
    return {mu, floored ? sigma * sigma : var, sigma, floored};
}

}  // namespace

std::string_view constraint_name(Constraint c) noexcept {
    switch (c) {
        case Constraint::none: return "none";
        case Constraint::ldl: return "ldl";
        case Constraint::auc: return "auc";
    }
    return "none";
}

std::optional<Constraint> parse_constraint(std::string_view name) noexcept {
    if (name == "none") return Constraint::none;
    if (name == "ldl") return Constraint::ldl;
    if (name == "auc") return Constraint::auc;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> ArchSpec::decoder_hidden() const {
    return {encoder_hidden.rbegin(), encoder_hidden.rend()};
}

std::vector<std::size_t> ArchSpec::layer_sizes() const {
    std::vector<std::size_t> sizes{input_size};
    sizes.insert(sizes.end(), encoder_hidden.begin(), encoder_hidden.end());
    sizes.push_back(latent_dim);
    const auto dec = decoder_hidden();
    sizes.insert(sizes.end(), dec.begin(), dec.end());
    sizes.push_back(input_size);
    return sizes;
}

void ArchSpec::validate() const {
    if (encoder_hidden.empty() || encoder_hidden.size() > 3) {
        throw DomainError("architecture needs 1 to 3 hidden layers");
    }
    if (input_size < 2 || latent_dim == 0) throw DomainError("architecture sizes must be positive");
    for (std::size_t h : encoder_hidden) {
        if (h == 0) throw DomainError("hidden layer width must be positive");
    }
    if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) throw DomainError("dropout keep must be in (0,1]");
}

std::string ArchSpec::label() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < 3; ++i) {
        if (i) os << '-';
        os << (i < encoder_hidden.size() ? encoder_hidden[i] : 0);
    }
    return os.str();
}

std::size_t MLPWeights::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

MLPWeights make_weights(const ArchSpec& arch) {
    arch.validate();
    const auto sizes = arch.layer_sizes();
    const std::size_t hidden = arch.encoder_hidden.size();
    MLPWeights w;
    w.latent_layer = hidden;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        DenseLayer layer;
        layer.in = sizes[k];
        layer.out = sizes[k + 1];
        layer.weights.assign(layer.in * layer.out, 0.0);
        layer.bias.assign(layer.out, 0.0);
        const bool is_latent = k == hidden;
        const bool is_output = k + 2 == sizes.size();
        layer.activated = !is_latent && !is_output;
        // Inputs that are hidden-layer outputs: everything except the curve and z.
        layer.dropout_input = k != 0 && k != hidden + 1;
        w.layers.push_back(std::move(layer));
    }
    return w;
}

MLPWeights init_weights(const ArchSpec& arch, std::uint64_t seed) {
    MLPWeights w = make_weights(arch);
    std::mt19937_64 rng(seed);
    for (DenseLayer& layer : w.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& x : layer.weights) x = dist(rng);
    }
    return w;
}

Batch make_batch(std::span<const ResponseCurve> curves) {
    if (curves.empty()) return {};
    Batch b(curves.size(), curves.front().size());
    for (std::size_t r = 0; r < curves.size(); ++r) {
        if (curves[r].size() != b.cols) throw DomainError("make_batch: curves differ in length");
        std::copy(curves[r].samples().begin(), curves[r].samples().end(), b.row(r).begin());
    }
    return b;
}

ForwardPass forward(const MLPWeights& weights, const Batch& input, Mode mode, std::mt19937_64* rng,
                    double dropout_keep) {
    if (weights.layers.empty() || input.cols != weights.layers.front().in) {
        throw DomainError("forward: input length does not match the architecture");
    }
    if (mode == Mode::train && dropout_keep < 1.0 && rng == nullptr) {
        throw DomainError("forward: train mode needs a random generator");
    }
    const std::size_t count = weights.layers.size();
    ForwardPass pass;
    pass.inputs.resize(count);
    pass.pre.resize(count);
    pass.outputs.resize(count);
    pass.masks.resize(count);
    std::bernoulli_distribution keep(dropout_keep);

    for (std::size_t k = 0; k < count; ++k) {
        const DenseLayer& layer = weights.layers[k];
        const Batch& source = k == 0 ? input : pass.outputs[k - 1];
        Batch& in = pass.inputs[k];
        in = source;
        double scale = 1.0;
        if (layer.dropout_input) {
            if (mode == Mode::train && dropout_keep < 1.0) {
                Batch mask(in.rows, in.cols);
                for (double& m : mask.data) m = keep(*rng) ? 1.0 : 0.0;
                simd::mul(in.data, mask.data, in.data);
                pass.masks[k] = std::move(mask);
            } else if (mode == Mode::eval) {
                scale = dropout_keep;
            }
        }
        const std::vector<double> wt = wide(layer) ? transpose(layer) : std::vector<double>{};
        Batch& pre = pass.pre[k];
        pre = Batch(in.rows, layer.out);
        for (std::size_t r = 0; r < in.rows; ++r) affine_row(layer, wt, in.row(r), scale, pre.row(r));
        Batch& out = pass.outputs[k];
        out = pre;
        if (layer.activated) activate(out.data);
        if (!all_finite(out.data)) {
            throw NumericError("forward: non-finite activation in layer " + std::to_string(k));
        }
    }
    return pass;
}

// ---------------------------------------------------------------------------

double loss_recon(std::span<const double> x, std::span<const double> reconstructed) {
    if (x.size() != reconstructed.size() || x.empty()) throw DomainError("loss_recon: length mismatch");
    return simd::sum_sq_diff(x, reconstructed) / static_cast<double>(x.size());
}

double loss_kl_ldl(std::span<const double> z, bool normalized_variance) {
    if (z.size() < 2) throw DomainError("loss_kl_ldl: batch needs at least 2 latents");
    const LdlParts p = ldl_parts(z, normalized_variance);
    return 0.5 * (p.mu * p.mu + p.var - 2.0 * std::log(p.sigma) - 1.0);
}

double loss_auc(std::span<const double> z, std::span<const double> labels) {
    if (z.size() != labels.size() || z.empty()) throw DomainError("loss_auc: length mismatch");
    return simd::sum_sq_diff(z, labels) / static_cast<double>(z.size());
}

std::vector<double> auc_targets(const Batch& input, double scale) {
    std::vector<double> labels(input.rows);
    for (std::size_t r = 0; r < input.rows; ++r) labels[r] = auc_label(input.row(r)) * scale;
    return labels;
}

namespace {

std::vector<double> latent_column(const Batch& z, std::size_t j) {
    std::vector<double> col(z.rows);
    for (std::size_t r = 0; r < z.rows; ++r) col[r] = z.at(r, j);
    return col;
}

double latent_term(const Batch& z, std::span<const double> labels, const TrainConfig& config) {
    switch (config.constraint) {
        case Constraint::none: return 0.0;
        case Constraint::ldl: {
            double acc = 0.0;
            for (std::size_t j = 0; j < z.cols; ++j) {
                acc += loss_kl_ldl(latent_column(z, j), config.ldl_normalized_variance);
            }
            return acc / static_cast<double>(z.cols);
        }
        case Constraint::auc: return loss_auc(latent_column(z, 0), labels);
    }
    return 0.0;
}

}  // namespace

LossBreakdown total_loss(const ForwardPass& pass, const Batch& input, std::span<const double> labels,
                         const TrainConfig& config) {
    const Batch& rec = pass.reconstruction();
    LossBreakdown l;
    for (std::size_t r = 0; r < input.rows; ++r) {
        l.recon += loss_recon(input.row(r), rec.row(r));
        l.smooth += smoothness(rec.row(r));
    }
    l.recon /= static_cast<double>(input.rows);
    l.smooth /= static_cast<double>(input.rows);
    const std::size_t latent_layer = pass.outputs.size() / 2 - 1;
    l.latent = latent_term(pass.outputs[latent_layer], labels, config);
    l.total = l.recon + config.lambda_smooth * l.smooth +
              (config.constraint == Constraint::none ? 0.0 : config.lambda_latent * l.latent);
    return l;
}

Gradients gradients(const MLPWeights& weights, const ArchSpec& arch, const Batch& input,
                    std::span<const double> labels, const TrainConfig& config, std::mt19937_64* rng,
                    Mode mode) {
    const ForwardPass pass = forward(weights, input, mode, rng, arch.dropout_keep);
    Gradients g{make_weights(arch), total_loss(pass, input, labels, config)};

    const std::size_t rows = input.rows;
    const std::size_t n = input.cols;
    const double inv_rows = 1.0 / static_cast<double>(rows);

    // Output gradient: reconstruction MSE plus the smoothness norm.
    const Batch& rec = pass.reconstruction();
    Batch grad(rows, n);
    std::vector<double> diff(n - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        auto x = input.row(r);
        auto y = rec.row(r);
        auto gr = grad.row(r);
        const double c = 2.0 * inv_rows / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) gr[i] = c * (y[i] - x[i]);
        if (config.lambda_smooth != 0.0) {
            double norm2 = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                diff[i] = y[i + 1] - y[i];
                norm2 += diff[i] * diff[i];
            }
            const double norm = std::sqrt(norm2);
            if (norm > 0.0) {
                const double s = config.lambda_smooth * inv_rows / norm;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    gr[i] -= s * diff[i];
                    gr[i + 1] += s * diff[i];
                }
            }
        }
    }

    const std::size_t latent = weights.latent_layer;
    for (std::size_t k = weights.layers.size(); k-- > 0;) {
        const DenseLayer& layer = weights.layers[k];
        DenseLayer& gl = g.grad.layers[k];

        if (k == latent && config.constraint != Constraint::none && config.lambda_latent != 0.0) {
            const Batch& z = pass.outputs[k];
            if (config.constraint == Constraint::ldl) {
                const double w = config.lambda_latent / static_cast<double>(z.cols);
                for (std::size_t j = 0; j < z.cols; ++j) {
                    const LdlParts p = ldl_parts(latent_column(z, j), config.ldl_normalized_variance);
                    const double dvar = p.floored ? 0.0 : 0.5 * (1.0 - 1.0 / p.var);
                    const double var_scale = config.ldl_normalized_variance ? 2.0 * inv_rows : 2.0;
                    for (std::size_t r = 0; r < rows; ++r) {
                        grad.at(r, j) += w * (p.mu * inv_rows + dvar * var_scale * (z.at(r, j) - p.mu));
                    }
                }
            } else {
                for (std::size_t r = 0; r < rows; ++r) {
                    grad.at(r, 0) += config.lambda_latent * 2.0 * inv_rows * (z.at(r, 0) - labels[r]);
                }
            }
        }

        // grad now holds dL/d(output of layer k).
        if (layer.activated) {
            const Batch& u = pass.outputs[k];
            for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= 1.0 - u.data[i] * u.data[i];
        }
        const double scale = (mode == Mode::eval && layer.dropout_input) ? arch.dropout_keep : 1.0;
        const Batch& in = pass.inputs[k];

        for (std::size_t r = 0; r < rows; ++r) {
            auto dv = grad.row(r);
            simd::axpy(1.0, dv, gl.bias);
        }
        if (wide(layer)) {
            std::vector<double> dwt(layer.in * layer.out, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                auto dv = grad.row(r);
                auto x = in.row(r);
                for (std::size_t c = 0; c < layer.in; ++c) {
                    if (x[c] != 0.0) simd::axpy(x[c] * scale, dv, {dwt.data() + c * layer.out, layer.out});
                }
            }
            for (std::size_t j = 0; j < layer.out; ++j) {
                for (std::size_t c = 0; c < layer.in; ++c) gl.weights[j * layer.in + c] = dwt[c * layer.out + j];
            }
        } else {
            for (std::size_t r = 0; r < rows; ++r) {
                auto dv = grad.row(r);
                auto x = in.row(r);
                for (std::size_t j = 0; j < layer.out; ++j) {
                    if (dv[j] != 0.0) simd::axpy(dv[j] * scale, x, {gl.weights.data() + j * layer.in, layer.in});
                }
            }
        }
        if (k == 0) break;

        Batch below(rows, layer.in);
        const std::vector<double> wt = wide(layer) ? transpose(layer) : std::vector<double>{};
        for (std::size_t r = 0; r < rows; ++r) {
            auto dv = grad.row(r);
            auto out = below.row(r);
            if (wide(layer)) {
                for (std::size_t c = 0; c < layer.in; ++c) out[c] = scale * simd::dot({wt.data() + c * layer.out, layer.out}, dv);
            } else {
                for (std::size_t j = 0; j < layer.out; ++j) {
                    if (dv[j] != 0.0) simd::axpy(dv[j] * scale, {layer.weights.data() + j * layer.in, layer.in}, out);
                }
            }
        }
        if (!pass.masks[k].data.empty()) simd::mul(below.data, pass.masks[k].data, below.data);
        grad = std::move(below);
    }

    for (const DenseLayer& l : g.grad.layers) {
        if (!all_finite(l.weights) || !all_finite(l.bias)) throw NumericError("gradients: non-finite gradient");
    }
    return g;
}

// ---------------------------------------------------------------------------

Autoencoder::Autoencoder(ArchSpec arch, MLPWeights weights, TrainingMetadata meta)
    : arch_(std::move(arch)), weights_(std::move(weights)), meta_(meta) {
    arch_.validate();
    const MLPWeights shape = make_weights(arch_);
    if (shape.layers.size() != weights_.layers.size()) throw FormatError("weights do not match architecture");
    for (std::size_t k = 0; k < shape.layers.size(); ++k) {
        const DenseLayer& a = shape.layers[k];
        DenseLayer& b = weights_.layers[k];
        if (a.in != b.in || a.out != b.out || b.weights.size() != a.weights.size() || b.bias.size() != a.bias.size()) {
            throw FormatError("layer " + std::to_string(k) + " shape does not match architecture");
        }
        if (!all_finite(b.weights) || !all_finite(b.bias)) throw FormatError("non-finite weights");
        b.activated = a.activated;
        b.dropout_input = a.dropout_input;
    }
    weights_.latent_layer = shape.latent_layer;
    transposed_.resize(weights_.layers.size());
    for (std::size_t k = 0; k < weights_.layers.size(); ++k) {
        if (wide(weights_.layers[k])) transposed_[k] = transpose(weights_.layers[k]);
    }
}

std::vector<double> Autoencoder::run(std::span<const double> x, std::size_t first, std::size_t last) const {
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t k = first; k < last; ++k) {
        const DenseLayer& layer = weights_.layers[k];
        next.assign(layer.out, 0.0);
        affine_row(layer, transposed_[k], cur, layer.dropout_input ? arch_.dropout_keep : 1.0, next);
        if (layer.activated) activate(next);
        if (!all_finite(next)) throw NumericError("non-finite activation in layer " + std::to_string(k));
        cur.swap(next);
    }
    return cur;
}

std::vector<double> Autoencoder::encode(std::span<const double> curve) const {
    if (curve.size() != arch_.input_size) throw DomainError("encode: curve length does not match the model");
    return run(curve, 0, weights_.latent_layer + 1);
}

std::vector<double> Autoencoder::decode_raw(std::span<const double> z) const {
    if (z.size() != arch_.latent_dim) throw DomainError("decode: latent size does not match the model");
    return run(z, weights_.latent_layer + 1, weights_.layers.size());
}

ResponseCurve Autoencoder::decode(std::span<const double> z) const { return normalize(decode_raw(z), "slr"); }

// ---------------------------------------------------------------------------

TrainResult train(std::span<const ResponseCurve> curves, const ArchSpec& arch, const TrainConfig& config) {
    if (curves.size() < 2) throw DomainError("train: need at least 2 curves");
    arch.validate();
    std::vector<ResponseCurve> inverted;
    if (config.train_on_inverse) {
        for (const ResponseCurve& c : curves) inverted.push_back(invert(c));
        curves = inverted;
    }
    const Batch data = make_batch(curves);
    if (data.cols != arch.input_size) throw DomainError("train: curve length does not match input size");
    const std::vector<double> labels =
        config.constraint == Constraint::auc ? auc_targets(data, config.effective_auc_scale(data.cols))
                                             : std::vector<double>{};

    TrainResult result{init_weights(arch, config.seed), {}};
    MLPWeights m = make_weights(arch);
    MLPWeights v = make_weights(arch);
    std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

    result.report.history.reserve(config.epochs);
    double b1t = 1.0;
    double b2t = 1.0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        Gradients g;
        try {
            g = gradients(result.weights, arch, data, labels, config, &rng);
        } catch (const NumericError& e) {
            throw TrainingDiverged(std::string("training diverged at epoch ") + std::to_string(epoch) + ": " +
                                       e.what(), epoch);
        }
        if (!std::isfinite(g.loss.total)) {
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch), epoch);
        }
        result.report.history.push_back(g.loss);

        b1t *= config.beta1;
        b2t *= config.beta2;
        const double step = config.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
        auto update = [&](std::vector<double>& p, const std::vector<double>& gr, std::vector<double>& mm,
                          std::vector<double>& vv) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                mm[i] = config.beta1 * mm[i] + (1.0 - config.beta1) * gr[i];
                vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * gr[i] * gr[i];
                p[i] -= step * mm[i] / (std::sqrt(vv[i]) + config.adam_epsilon);
            }
        };
        for (std::size_t k = 0; k < result.weights.layers.size(); ++k) {
            update(result.weights.layers[k].weights, g.grad.layers[k].weights, m.layers[k].weights, v.layers[k].weights);
            update(result.weights.layers[k].bias, g.grad.layers[k].bias, m.layers[k].bias, v.layers[k].bias);
        }
    }

    const Autoencoder model(arch, result.weights);
    result.report.per_curve_rmse.reserve(curves.size());
    for (const ResponseCurve& c : curves) {
        std::vector<double> rec;
        try {
            rec = model.reconstruct(c).values();
        } catch (const DegenerateCurveError&) {
            rec = model.decode_raw(model.encode(c));
        }
        result.report.per_curve_rmse.push_back(std::sqrt(loss_recon(c.samples(), rec)));
    }
    result.report.mean_rmse =
        std::accumulate(result.report.per_curve_rmse.begin(), result.report.per_curve_rmse.end(), 0.0) /
        static_cast<double>(curves.size());
    return result;
}

Autoencoder train_autoencoder(std::span<const ResponseCurve> curves, const ArchSpec& arch,
                              const TrainConfig& config, TrainReport* report) {
    TrainResult r = train(curves, arch, config);
    if (report != nullptr) *report = std::move(r.report);
    TrainingMetadata meta;
    meta.seed = config.seed;
    meta.epochs = config.epochs;
    meta.constraint = config.constraint;
    meta.learning_rate = config.learning_rate;
    meta.lambda_smooth = config.lambda_smooth;
    meta.lambda_latent = config.lambda_latent;
    meta.ldl_normalized_variance = config.ldl_normalized_variance;
    meta.train_on_inverse = config.train_on_inverse;
    meta.dataset_size = curves.size();
    return Autoencoder(arch, std::move(r.weights), meta);
}

double mean_reconstruction_rmse(const Autoencoder& model, std::span<const ResponseCurve> curves) {
    if (curves.empty()) throw DomainError("mean_reconstruction_rmse: no curves");
    double acc = 0.0;
    for (const ResponseCurve& c : curves) acc += std::sqrt(loss_recon(c.samples(), model.reconstruct(c).samples()));
    return acc / static_cast<double>(curves.size());
}

LatentHistogram latent_histogram(const Autoencoder& model, std::span<const ResponseCurve> curves,
                                 std::size_t bins, double lo, double hi) {
    if (curves.empty()) throw DomainError("latent_histogram: no curves");
    if (bins == 0 || !(hi > lo)) throw DomainError("latent_histogram: bad binning");
    LatentHistogram h;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    for (const ResponseCurve& c : curves) {
        const double z = model.encode(c).front();
        h.values.push_back(z);
        if (z < lo) {
            ++h.underflow;
        } else if (z > hi) {
            ++h.overflow;
        } else {
            auto b = static_cast<std::size_t>((z - lo) / (hi - lo) * static_cast<double>(bins));
            ++h.counts[std::min(b, bins - 1)];
        }
    }
    const double n = static_cast<double>(h.values.size());
    h.mean = std::accumulate(h.values.begin(), h.values.end(), 0.0) / n;
    double ss = 0.0;
    for (double z : h.values) ss += (z - h.mean) * (z - h.mean);
    h.sd = h.values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return h;
}

}  // namespace crf::ae
