#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "crf/autoencoder.hpp"

namespace crf::ae {

namespace {

void put_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void put_array(std::string& out, const std::vector<double>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        put_number(out, values[i]);
    }
    out += ']';
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

}  // namespace

std::string serialize_model(const Autoencoder& model) {
    const ArchSpec& arch = model.arch();
    const TrainingMetadata& meta = model.metadata();
    std::string out;
    out += "{\n  \"format_version\": " + std::to_string(kModelFormatVersion) + ",\n";
    out += "  \"arch\": {\"input_size\": " + std::to_string(arch.input_size) + ", \"encoder_hidden\": [";
    for (std::size_t i = 0; i < arch.encoder_hidden.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(arch.encoder_hidden[i]);
    }
    out += "], \"latent_dim\": " + std::to_string(arch.latent_dim) + ", \"activation\": \"tanh\", \"dropout_keep\": ";
    put_number(out, arch.dropout_keep);
    out += "},\n  \"training\": {\"seed\": " + std::to_string(meta.seed) +
           ", \"epochs\": " + std::to_string(meta.epochs) + ", \"constraint\": \"" +
           std::string(constraint_name(meta.constraint)) + "\", \"learning_rate\": ";
    put_number(out, meta.learning_rate);
    out += ", \"lambda_smooth\": ";
    put_number(out, meta.lambda_smooth);
    out += ", \"lambda_latent\": ";
    put_number(out, meta.lambda_latent);
    out += std::string(", \"ldl_normalized_variance\": ") + (meta.ldl_normalized_variance ? "true" : "false");
    out += std::string(", \"train_on_inverse\": ") + (meta.train_on_inverse ? "true" : "false");
    out += ", \"dataset_fingerprint\": \"" + hex64(meta.dataset_fingerprint) + "\"";
    out += ", \"dataset_size\": " + std::to_string(meta.dataset_size);
    out += ", \"holdout\": " + std::to_string(meta.holdout);
    out += ", \"holdout_seed\": " + std::to_string(meta.holdout_seed) + "},\n";
    const auto& layers = model.weights().layers;
    out += "  \"weights\": [\n";
    for (std::size_t k = 0; k < layers.size(); ++k) {
        out += "    ";
        put_array(out, layers[k].weights);
        out += k + 1 < layers.size() ? ",\n" : "\n";
    }
    out += "  ],\n  \"biases\": [\n";
    for (std::size_t k = 0; k < layers.size(); ++k) {
        out += "    ";
        put_array(out, layers[k].bias);
        out += k + 1 < layers.size() ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

void save_model(const Autoencoder& model, std::ostream& out) { out << serialize_model(model); }

void save_model(const Autoencoder& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    save_model(model, out);
    if (!out) throw Error("write failed: " + path);
}

Autoencoder parse_model(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("unsupported model format_version " + std::to_string(version));
        }
        const auto& a = doc.at("arch");
        if (a.at("activation").get<std::string>() != "tanh") throw FormatError("unsupported activation");
        ArchSpec arch;
        arch.input_size = a.at("input_size").get<std::size_t>();
        arch.encoder_hidden = a.at("encoder_hidden").get<std::vector<std::size_t>>();
        arch.latent_dim = a.at("latent_dim").get<std::size_t>();
        arch.dropout_keep = a.at("dropout_keep").get<double>();
        arch.validate();

        MLPWeights w = make_weights(arch);
        const auto& ws = doc.at("weights");
        const auto& bs = doc.at("biases");
        if (ws.size() != w.layers.size() || bs.size() != w.layers.size()) {
            throw FormatError("model file layer count does not match architecture");
        }
        for (std::size_t k = 0; k < w.layers.size(); ++k) {
            auto weights = ws[k].get<std::vector<double>>();
            auto bias = bs[k].get<std::vector<double>>();
            if (weights.size() != w.layers[k].weights.size() || bias.size() != w.layers[k].bias.size()) {
                throw FormatError("layer " + std::to_string(k) + " shape does not match architecture");
            }
            w.layers[k].weights = std::move(weights);
            w.layers[k].bias = std::move(bias);
        }

        TrainingMetadata meta;
        if (doc.contains("training")) {
            const auto& t = doc.at("training");
            meta.seed = t.value("seed", std::uint64_t{0});
            meta.epochs = t.value("epochs", std::size_t{0});
            meta.constraint = parse_constraint(t.value("constraint", std::string("none"))).value_or(Constraint::none);
            meta.learning_rate = t.value("learning_rate", 0.0);
            meta.lambda_smooth = t.value("lambda_smooth", 0.0);
            meta.lambda_latent = t.value("lambda_latent", 0.0);
            meta.ldl_normalized_variance = t.value("ldl_normalized_variance", true);
            meta.train_on_inverse = t.value("train_on_inverse", false);
            meta.dataset_fingerprint = std::stoull(t.value("dataset_fingerprint", std::string("0")), nullptr, 16);
            meta.dataset_size = t.value("dataset_size", std::size_t{0});
            meta.holdout = t.value("holdout", std::size_t{0});
            meta.holdout_seed = t.value("holdout_seed", std::uint64_t{0});
        }
        return Autoencoder(std::move(arch), std::move(w), meta);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    } catch (const DomainError& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    }
}

Autoencoder load_model(const std::string& path) { return parse_model(read_text_file(path)); }

}  // namespace crf::ae
