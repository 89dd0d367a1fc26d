#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "crf/nas.hpp"
#include "crf/surrogate.hpp"
#include "oracles.hpp"

using namespace crf;
using namespace crf::nas;

namespace {

std::vector<ResponseCurve> curves64(std::size_t count) {
    SurrogateOptions o;
    o.count = count;
    o.samples = 64;
    o.seed = 3;
    return generate_surrogate_database(o);
}

}  // namespace

TEST_CASE("search space") {
    const auto all = enumerate_space(SearchSpace{});
    CHECK(all.size() == 156);
    std::set<std::vector<std::size_t>> seen;
    for (const auto& a : all) {
        CHECK(seen.insert(a.encoder_hidden).second);
        CHECK(a.encoder_hidden.size() >= 1);
        CHECK(a.input_size == 1024);
    }
    CHECK(all.front().encoder_hidden == std::vector<std::size_t>{10});
    CHECK(all[1].encoder_hidden == std::vector<std::size_t>{10, 10});
    CHECK(all.back().encoder_hidden == std::vector<std::size_t>{500, 200, 100});

    SearchSpace small;
    small.h1 = {10, 20};
    small.h2 = {0};
    small.h3 = {0};
    CHECK(enumerate_space(small).size() == 2);
    small.h2 = {0, 5};
    small.h3 = {0, 7};
    // (10), (10,5), (10,5,7), and the same for 20
    CHECK(enumerate_space(small).size() == 6);
}

TEST_CASE("complexity") {
    ae::ArchSpec a;
    CHECK(complexity(a) == 102601);
    a.input_size = 1;
    a.encoder_hidden = {1};
    CHECK(complexity(a) == 4);
    a = ae::ArchSpec{};
    const std::size_t base = complexity(a);
    a.encoder_hidden = {101};
    CHECK(complexity(a) > base);
    a.encoder_hidden = {100, 1};
    CHECK(complexity(a) > base);
}

TEST_CASE("selection") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const auto table = oracle::random_score_table(rng);
        for (std::size_t m : {std::size_t{1}, std::size_t{3}, std::size_t{10}, std::size_t{40}, table.size()}) {
            const std::size_t got = select_architecture(table, m);
            CHECK(got == oracle::brute_force_selection(table, m));
            // property: inside the top M, nothing there is cheaper
            const auto ranks = accuracy_ranks(table);
            CHECK(ranks[got] >= 1);
            CHECK(ranks[got] <= m);
            for (std::size_t i = 0; i < table.size(); ++i) {
                if (ranks[i] >= 1 && ranks[i] <= m) CHECK(table[i].complexity >= table[got].complexity);
            }
        }
    }

    auto table = oracle::random_score_table(rng);
    for (auto& r : table) r.diverged = false;
    const std::size_t all = select_architecture(table, table.size());
    for (const auto& r : table) CHECK(r.complexity >= table[all].complexity);
    const std::size_t one = select_architecture(table, 1);
    for (const auto& r : table) CHECK(r.accuracy >= table[one].accuracy);

    CHECK_THROWS_AS(select_architecture(table, 0), DomainError);
    for (auto& r : table) r.diverged = true;
    CHECK_THROWS_AS(select_architecture(table, 5), NumericError);
}

TEST_CASE("folds") {
    const auto f = assign_folds(201, 3, 1);
    std::vector<std::size_t> sizes(3, 0);
    for (std::size_t k : f) sizes.at(k)++;
    CHECK(sizes == std::vector<std::size_t>{67, 67, 67});
    CHECK(assign_folds(201, 3, 1) == f);
    CHECK(assign_folds(201, 3, 2) != f);
    const auto g = assign_folds(10, 3, 4);
    std::vector<std::size_t> s2(3, 0);
    for (std::size_t k : g) s2[k]++;
    CHECK(*std::max_element(s2.begin(), s2.end()) - *std::min_element(s2.begin(), s2.end()) <= 1);
    CHECK_THROWS(assign_folds(2, 3, 1));
}

TEST_CASE("cross-validated accuracy") {
    const auto curves = curves64(9);
    const Trainer copy = [](std::span<const ResponseCurve>) {
        return Reconstructor([](const ResponseCurve& c) { return c.values(); });
    };
    CHECK(cv_accuracy(curves, copy, 3, 1) == 0.0);
    const Trainer zero = [](std::span<const ResponseCurve>) {
        return Reconstructor([](const ResponseCurve& c) { return std::vector<double>(c.size(), 0.0); });
    };
    double oracle = 0.0;
    for (const auto& c : curves) {
        double s = 0.0;
        for (double v : c.values()) s += v * v;
        oracle += s / c.size();
    }
    // equal folds, so the mean of fold means is the plain mean
    CHECK(cv_accuracy(curves, zero, 3, 1) == doctest::Approx(oracle / curves.size()).epsilon(1e-12));

    ae::ArchSpec arch;
    arch.input_size = 64;
    arch.encoder_hidden = {8};
    ae::TrainConfig cfg;
    cfg.epochs = 100;
    const double a = cv_accuracy(arch, curves, cfg, 3, 5);
    CHECK(std::isfinite(a));
    CHECK(a == cv_accuracy(arch, curves, cfg, 3, 5));
}

TEST_CASE("smoke search") {
    const auto curves = curves64(12);
    SearchSpace space;
    space.h1 = {10, 20};
    space.h2 = {0, 10};
    space.h3 = {0};
    ae::ArchSpec base;
    base.input_size = 64;
    NasConfig cfg;
    cfg.top_m = 2;
    cfg.train.epochs = 100;
    cfg.workers = 1;
    const NasResult serial = naive_nas(space, curves, cfg, base);
    cfg.workers = 3;
    const NasResult parallel = naive_nas(space, curves, cfg, base);
    REQUIRE(serial.table.size() == 4);
    CHECK(serial.selected == parallel.selected);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(serial.table[i].accuracy == parallel.table[i].accuracy);
        CHECK(std::isfinite(serial.table[i].accuracy));
        CHECK(serial.table[i].complexity == complexity(serial.table[i].arch));
    }
    const report::Table t = nas_report(serial);
    CHECK(t.rows.size() == 4);
    CHECK(nas_summary_json(serial, cfg).find("\"selected\"") != std::string::npos);

    cfg.top_m = 5;
    CHECK_THROWS_AS(naive_nas(space, curves, cfg, base), DomainError);
}
