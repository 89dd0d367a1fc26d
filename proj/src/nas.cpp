#include "crf/nas.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace crf::nas {

namespace {

std::tuple<std::size_t, std::size_t, std::size_t> arch_key(const ae::ArchSpec& a) {
    const auto& h = a.encoder_hidden;
    return {h.size() > 0 ? h[0] : 0, h.size() > 1 ? h[1] : 0, h.size() > 2 ? h[2] : 0};
}

void require_options(const std::vector<std::size_t>& options, const char* name) {
    if (options.empty()) throw DomainError(std::string("search space: empty option list ") + name);
}

}  // namespace

std::vector<ae::ArchSpec> enumerate_space(const SearchSpace& space, const ae::ArchSpec& base) {
    require_options(space.h1, "h1");
    require_options(space.h2, "h2");
    require_options(space.h3, "h3");
    std::vector<ae::ArchSpec> out;
    for (std::size_t a : space.h1) {
        if (a == 0) throw DomainError("search space: h1 options must be positive");
        for (std::size_t b : space.h2) {
            for (std::size_t c : space.h3) {
                if (b == 0 && c != 0) continue;
                ae::ArchSpec arch = base;
                arch.encoder_hidden = {a};
                if (b != 0) arch.encoder_hidden.push_back(b);
                if (c != 0) arch.encoder_hidden.push_back(c);
                out.push_back(std::move(arch));
            }
        }
    }
    return out;
}

std::size_t complexity(const ae::ArchSpec& arch) {
    std::size_t total = 0;
    std::size_t prev = arch.input_size;
    for (std::size_t width : arch.encoder_hidden) {
        total += prev * width + width;
        prev = width;
    }
    return total + prev * arch.latent_dim + arch.latent_dim;
}

std::vector<std::size_t> assign_folds(std::size_t count, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
    if (count < folds) throw DomainError("cross-validation: fewer curves than folds");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold(count);
    for (std::size_t pos = 0; pos < count; ++pos) fold[order[pos]] = pos % folds;
    return fold;
}

double cv_accuracy(std::span<const ResponseCurve> curves, const Trainer& trainer, std::size_t folds,
                   std::uint64_t fold_seed) {
    const std::vector<std::size_t> fold = assign_folds(curves.size(), folds, fold_seed);
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<ResponseCurve> train_set;
        std::vector<const ResponseCurve*> held_out;
        for (std::size_t i = 0; i < curves.size(); ++i) {
            if (fold[i] == f) held_out.push_back(&curves[i]);
            else train_set.push_back(curves[i]);
        }
        const Reconstructor reconstruct = trainer(train_set);
        double mse = 0.0;
        for (const ResponseCurve* c : held_out) mse += ae::loss_recon(c->samples(), reconstruct(*c));
        total += mse / static_cast<double>(held_out.size());
    }
    return total / static_cast<double>(folds);
}

double cv_accuracy(const ae::ArchSpec& arch, std::span<const ResponseCurve> curves,
                   const ae::TrainConfig& config, std::size_t folds, std::uint64_t fold_seed) {
    const Trainer trainer = [&](std::span<const ResponseCurve> train_set) -> Reconstructor {
        auto model = std::make_shared<ae::Autoencoder>(ae::train_autoencoder(train_set, arch, config));
        return [model](const ResponseCurve& c) {
            const std::vector<double> z = model->encode(c);
            try {
                return model->decode(z).values();
            } catch (const DegenerateCurveError&) {
                return model->decode_raw(z);
            }
        };
    };
    return cv_accuracy(curves, trainer, folds, fold_seed);
}

namespace {

// Accuracy order: lower MSE first, then (h1, h2, h3).
std::vector<std::size_t> accuracy_order(std::span<const CandidateResult> table) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!table[i].diverged && std::isfinite(table[i].accuracy)) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table[a].accuracy != table[b].accuracy) return table[a].accuracy < table[b].accuracy;
        return arch_key(table[a].arch) < arch_key(table[b].arch);
    });
    return order;
}

}  // namespace

std::size_t select_architecture(std::span<const CandidateResult> table, std::size_t top_m) {
    if (top_m < 1) throw DomainError("naive NAS: M must be at least 1");
    std::vector<std::size_t> order = accuracy_order(table);
    if (order.empty()) throw NumericError("naive NAS: every candidate diverged");
    order.resize(std::min(top_m, order.size()));
    return *std::min_element(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table[a].complexity != table[b].complexity) return table[a].complexity < table[b].complexity;
        if (table[a].accuracy != table[b].accuracy) return table[a].accuracy < table[b].accuracy;
        return arch_key(table[a].arch) < arch_key(table[b].arch);
    });
}

std::vector<std::size_t> accuracy_ranks(std::span<const CandidateResult> table) {
    std::vector<std::size_t> ranks(table.size(), 0);
    const std::vector<std::size_t> order = accuracy_order(table);
    for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = r + 1;
    return ranks;
}

NasResult naive_nas(const SearchSpace& space, std::span<const ResponseCurve> curves, const NasConfig& config,
                    const ae::ArchSpec& base) {
    const std::vector<ae::ArchSpec> candidates = enumerate_space(space, base);
    if (config.top_m < 1 || config.top_m > candidates.size()) {
        throw DomainError("naive NAS: M must be between 1 and the number of candidates");
    }
    NasResult result;
    result.table.resize(candidates.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
            CandidateResult& row = result.table[i];
            row.arch = candidates[i];
            row.complexity = complexity(candidates[i]);
            ae::TrainConfig tc = config.train;
            tc.seed = config.seed + i;
            try {
                row.accuracy = cv_accuracy(candidates[i], curves, tc, config.folds, config.seed);
                if (!std::isfinite(row.accuracy)) throw NumericError("non-finite accuracy");
            } catch (const Error& e) {
                row.diverged = true;
                row.accuracy = std::numeric_limits<double>::infinity();
                row.error = "arch " + row.arch.label() + ": " + e.what();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(config.workers, candidates.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    result.selected = select_architecture(result.table, config.top_m);
    return result;
}

report::Table nas_report(const NasResult& result) {
    report::Table t;
    t.columns = {"arch_h1", "arch_h2", "arch_h3", "latent_dim", "accuracy_mse", "complexity", "rank"};
    const std::vector<std::size_t> ranks = accuracy_ranks(result.table);
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const CandidateResult& c = result.table[i];
        const auto [a, b, h] = arch_key(c.arch);
        t.add_row({report::number(a), report::number(b), report::number(h), report::number(c.arch.latent_dim),
                   report::number(c.accuracy), report::number(c.complexity), report::number(ranks[i])});
    }
    return t;
}

std::string nas_summary_json(const NasResult& result, const NasConfig& config) {
    const CandidateResult& s = result.table[result.selected];
    nlohmann::ordered_json j;
    j["selected"] = {{"encoder_hidden", s.arch.encoder_hidden},
                     {"latent_dim", s.arch.latent_dim},
                     {"dropout_keep", s.arch.dropout_keep},
                     {"accuracy_mse", s.accuracy},
                     {"complexity", s.complexity}};
    j["candidates"] = result.table.size();
    j["top_m"] = config.top_m;
    j["folds"] = config.folds;
    j["epochs"] = config.train.epochs;
    j["seed"] = config.seed;
    j["constraint"] = std::string(ae::constraint_name(config.train.constraint));
    std::size_t diverged = 0;
    for (const auto& c : result.table) diverged += c.diverged ? 1 : 0;
    j["diverged"] = diverged;
    return j.dump(2) + "\n";
}

}  // namespace crf::nas
