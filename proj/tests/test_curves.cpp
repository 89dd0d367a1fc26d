#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "crf/curves.hpp"
#include "crf/error.hpp"
#include "crf/surrogate.hpp"

using namespace crf;

namespace {

std::string ramp_line(std::size_t n, double scale) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < n; ++i) os << (i ? " " : "") << scale * static_cast<double>(i) / (n - 1);
    return os.str();
}

ResponseCurve power_curve(double g, std::size_t n = 1024) {
    return sample_function([g](double x) { return std::pow(x, g); }, n, "power");
}

double rmse(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

// Random monotone curve: sorted uniforms with pinned ends.
ResponseCurve random_curve(std::mt19937_64& rng, std::size_t n = 1024) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    std::sort(v.begin(), v.end());
    v.front() = 0.0;
    v.back() = 1.0;
    return ResponseCurve("random", v);
}

}  // namespace

TEST_CASE("sample grid") {
    const SampleGrid g(1024);
    CHECK(g.position(0) == 0.0);
    CHECK(g.position(1023) == 1.0);
    const auto p = g.positions();
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] > p[i - 1]);
    CHECK_THROWS_AS(SampleGrid(1), DomainError);
}

TEST_CASE("response curve invariants") {
    CHECK_THROWS_AS(ResponseCurve("x", {0.0}), DomainError);
    CHECK_THROWS_AS(ResponseCurve("x", {0.0, 1.2, 1.0}), DomainError);
    CHECK_THROWS_AS(ResponseCurve("x", {0.1, 0.5, 1.0}), DomainError);
    CHECK_NOTHROW(ResponseCurve("x", {0.0, 0.3, 1.0}));
    const ResponseCurve id = ResponseCurve::identity(5);
    CHECK(id[2] == 0.5);
}

TEST_CASE("normalize") {
    const ResponseCurve c = normalize(std::vector<double>{0.1, 0.5, 0.9});
    CHECK(c[0] == 0.0);
    CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c[2] == 1.0);
    const ResponseCurve id = ResponseCurve::identity(1024);
    CHECK(normalize(id.samples()).values() == id.values());
    CHECK_THROWS_AS(normalize(std::vector<double>{2.0, 2.0, 2.0}), DegenerateCurveError);

    SUBCASE("idempotent on random inputs") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> d(0.0, 1.0);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> raw(50);
            for (double& x : raw) x = d(rng);
            raw.back() = raw.front() + 3.0;
            const ResponseCurve once = normalize(raw);
            const ResponseCurve twice = normalize(once.samples());
            CHECK(once.values() == twice.values());
        }
    }
}

TEST_CASE("evaluate") {
    const ResponseCurve id = ResponseCurve::identity();
    CHECK(evaluate(id, 0.25) == doctest::Approx(0.25).epsilon(1e-15));
    const ResponseCurve sq = power_curve(2.0);
    CHECK(evaluate(sq, 0.0) == 0.0);
    CHECK(evaluate(sq, 1.0) == 1.0);
    // interpolation error of x^2 is at most h^2/4
    CHECK(std::abs(evaluate(sq, 0.5) - 0.25) <= 1e-6);
    for (std::size_t i = 0; i < sq.size(); i += 97) CHECK(evaluate(sq, sq.grid().position(i)) == sq[i]);
    CHECK_THROWS_AS(evaluate(sq, -0.01), DomainError);
    CHECK_THROWS_AS(evaluate(sq, 1.01), DomainError);

    SUBCASE("monotone in x for monotone samples") {
        std::mt19937_64 rng(8);
        const ResponseCurve c = random_curve(rng, 64);
        double prev = -1.0;
        for (int k = 0; k <= 5000; ++k) {
            const double v = evaluate(c, k / 5000.0);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("isotonic projection") {
    const auto fit = isotonic_fit(std::vector<double>{1.0, 3.0, 2.0, 4.0});
    CHECK(fit == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    const auto flat = isotonic_fit(std::vector<double>{3.0, 2.0, 1.0});
    CHECK(flat == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("invert") {
    const ResponseCurve id = ResponseCurve::identity();
    const ResponseCurve inv_id = invert(id);
    CHECK(rmse(inv_id.samples(), id.samples()) <= 1e-12);

    const ResponseCurve sq = power_curve(2.0);
    const ResponseCurve root = power_curve(0.5);
    CHECK(rmse(invert(sq).samples(), root.samples()) <= 1e-3);

    std::vector<double> dip(1024);
    const SampleGrid g(1024);
    for (std::size_t i = 0; i < dip.size(); ++i) dip[i] = g.position(i);
    for (std::size_t i = 400; i < 450; ++i) dip[i] -= 0.05;
    const ResponseCurve inv = invert(ResponseCurve("dip", dip));
    for (std::size_t i = 1; i < inv.size(); ++i) CHECK(inv[i] >= inv[i - 1]);

    SUBCASE("double inversion on database curves") {
        const auto db = generate_surrogate_database();
        for (std::size_t c = 0; c < db.size(); c += 10) {
            CAPTURE(db[c].id());
            CHECK(rmse(invert(invert(db[c])).samples(), db[c].samples()) <= 2e-3);
        }
    }
}

TEST_CASE("discrete derivative and smoothness") {
    const ResponseCurve id = ResponseCurve::identity();
    for (double d : discrete_derivative(id)) CHECK(d == doctest::Approx(1.0 / 1023).epsilon(1e-12));
    CHECK(smoothness(id) == doctest::Approx(1.0 / std::sqrt(1023.0)).epsilon(1e-12));
    CHECK(smoothness(id) == doctest::Approx(0.031265).epsilon(1e-4));

    std::vector<double> step(1024, 0.0);
    for (std::size_t i = 512; i < 1024; ++i) step[i] = 1.0;
    const ResponseCurve st("step", step);
    const auto d = discrete_derivative(st);
    CHECK(std::count_if(d.begin(), d.end(), [](double v) { return v != 0.0; }) == 1);
    CHECK(smoothness(st) == 1.0);

    std::mt19937_64 rng(21);
    for (int t = 0; t < 10; ++t) {
        const ResponseCurve c = random_curve(rng);
        const auto dd = discrete_derivative(c);
        double total = 0.0, sq = 0.0;
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            sq += (c[i + 1] - c[i]) * (c[i + 1] - c[i]);
        }
        for (double v : dd) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(smoothness(c) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
        // Cauchy-Schwarz lower bound
        CHECK(smoothness(c) >= 1.0 / std::sqrt(1023.0) - 1e-15);
    }
}

TEST_CASE("auc label") {
    CHECK(std::abs(auc_label(ResponseCurve::identity())) <= 1e-10);
    std::vector<double> half(1024, 0.5);
    half.front() = 0.0;
    half.back() = 1.0;
    const SampleGrid g(1024);
    double oracle = 0.0;
    for (std::size_t i = 0; i < 1024; ++i) oracle += half[i] - g.position(i);
    CHECK(auc_label(ResponseCurve("half", half)) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(auc_label(power_curve(0.5)) > 0.0);

    SUBCASE("linear under blends") {
        std::mt19937_64 rng(4);
        for (int t = 0; t < 10; ++t) {
            const ResponseCurve a = random_curve(rng), b = random_curve(rng);
            const double alpha = 0.1 * t;
            std::vector<double> blend(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) blend[i] = alpha * a[i] + (1 - alpha) * b[i];
            CHECK(auc_label(blend) ==
                  doctest::Approx(alpha * auc_label(a) + (1 - alpha) * auc_label(b)).epsilon(1e-10));
        }
    }
}

TEST_CASE("DoRF parsing") {
    const std::string zeros = [] {
        std::string s;
        for (int i = 0; i < 1024; ++i) s += i ? " 0" : "0";
        return s;
    }();
    SUBCASE("minimal record") {
        const std::string doc = "curve-a\ninfo\nI =\n" + ramp_line(1024, 1.0) + "\nB =\n" + ramp_line(1024, 2.0) + "\n";
        const auto curves = parse_dorf(doc);
        REQUIRE(curves.size() == 1);
        CHECK(curves[0].id() == "curve-a");
        CHECK(curves[0][0] == 0.0);
        CHECK(curves[0][1023] == 1.0);
    }
    SUBCASE("blank lines between records and sample rows split across lines") {
        std::string b1 = ramp_line(1024, 1.0);
        b1[b1.find(' ', b1.size() / 2)] = '\n';
        const std::string rec = "x\ninfo\nI =\n" + ramp_line(1024, 1.0) + "\nB =\n" + b1 + "\n";
        const auto curves = parse_dorf(rec + "\n\n" + rec);
        CHECK(curves.size() == 2);
    }
    SUBCASE("short sample row names the record") {
        const std::string good = "a\ninfo\nI =\n" + ramp_line(1024, 1.0) + "\nB =\n" + ramp_line(1024, 1.0) + "\n";
        const std::string bad = "b\ninfo\nI =\n" + ramp_line(1024, 1.0) + "\nB =\n" + ramp_line(1023, 1.0) + "\n";
        try {
            parse_dorf(good + bad);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.record() == 1);
            CHECK(std::string(e.what()).find("record 1") != std::string::npos);
            CHECK(e.line() == 12);
        }
    }
    SUBCASE("non-numeric token") {
        std::string b = ramp_line(1024, 1.0);
        b.replace(0, 1, "x");
        CHECK_THROWS_AS(parse_dorf("a\ninfo\nI =\n" + ramp_line(1024, 1.0) + "\nB =\n" + b + "\n"), ParseError);
    }
    SUBCASE("constant brightness row") {
        CHECK_THROWS_AS(parse_dorf("a\ninfo\nI =\n" + ramp_line(1024, 1.0) + "\nB =\n" + zeros + "\n"), ParseError);
    }
    SUBCASE("irradiance row off the grid warns") {
        std::vector<std::string> warnings;
        const std::string doc = "a\ninfo\nI =\n" + ramp_line(1024, 0.9) + "\nB =\n" + ramp_line(1024, 1.0) + "\n";
        parse_dorf(doc, {}, &warnings);
        CHECK(warnings.size() == 1);
    }
    SUBCASE("write then parse is exact") {
        const auto db = generate_surrogate_database();
        std::ostringstream os;
        write_dorf(os, db);
        const auto back = parse_dorf(os.str());
        REQUIRE(back.size() == db.size());
        for (std::size_t i = 0; i < db.size(); ++i) {
            CHECK(back[i].id() == db[i].id());
            CHECK(back[i].values() == db[i].values());
        }
    }
}

TEST_CASE("curve CSV") {
    const auto curves = parse_curves_csv("a,0,0.5,1\nb,0,0.2,2\n");
    REQUIRE(curves.size() == 2);
    CHECK(curves[1][1] == doctest::Approx(0.1));
    CHECK_THROWS_AS(parse_curves_csv("a,0,x,1\n"), ParseError);
    CHECK_THROWS_AS(parse_curves_csv("a,0,0.5,1\nb,0,1\n"), ParseError);
}
