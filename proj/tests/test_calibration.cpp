#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "crf/calibration.hpp"
#include "crf/error.hpp"
#include "crf/surrogate.hpp"

using namespace crf;
using namespace crf::calib;

namespace {

ResponseCurve power_curve(double g, std::size_t n = kDefaultSamples) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::pow(static_cast<double>(i) / (n - 1), g);
    return ResponseCurve("gamma", std::move(v));
}

const std::vector<double> kOne{1.0};
const std::vector<double> kFour{0.25, 0.5, 1.0, 2.0};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Small model trained on a one-parameter power family.
const ae::Autoencoder& power_model() {
    static const ae::Autoencoder model = [] {
        std::vector<ResponseCurve> curves;
        for (int k = 0; k < 16; ++k) curves.push_back(power_curve(std::exp(-1.2 + k * 0.16), 64));
        ae::ArchSpec arch;
        arch.input_size = 64;
        arch.encoder_hidden = {32};
        arch.dropout_keep = 1.0;
        ae::TrainConfig cfg;
        cfg.epochs = 6000;
        cfg.learning_rate = 5e-3;
        return ae::train_autoencoder(curves, arch, cfg);
    }();
    return model;
}

}  // namespace

TEST_CASE("names") {
    CHECK(parse_channel("R") == Channel::r);
    CHECK(parse_channel("mono") == Channel::mono);
    CHECK(!parse_channel("X"));
    for (CalibFamily f : {CalibFamily::slr, CalibFamily::gamma, CalibFamily::polynomial, CalibFamily::ggcm, CalibFamily::emor}) {
        CHECK(parse_calib_family(calib_family_name(f)) == f);
    }
}

TEST_CASE("synthetic observations") {
    const ResponseCurve truth = power_curve(2.2);
    const ObservationSet three = synth_observations(truth, 3, 0.0, kOne, 5);
    REQUIRE(three.observations.size() == 3);
    for (const Observation& o : three.observations) {
        CHECK(o.intensity == evaluate(truth, o.irradiance));
        CHECK(o.exposure == 1.0);
    }
    const ObservationSet a = synth_observations(truth, 24, 0.01, kFour, 9);
    const ObservationSet b = synth_observations(truth, 24, 0.01, kFour, 9);
    REQUIRE(a.observations.size() == 96);
    for (std::size_t i = 0; i < 96; ++i) {
        CHECK(a.observations[i].irradiance == b.observations[i].irradiance);
        CHECK(a.observations[i].intensity == b.observations[i].intensity);
        CHECK(a.observations[i].intensity >= 0.0);
        CHECK(a.observations[i].intensity <= 1.0);
    }
    std::vector<bool> decile(10, false);
    for (const Observation& o : a.observations) decile[std::min(9, static_cast<int>(o.irradiance * 10))] = true;
    CHECK(std::count(decile.begin(), decile.end(), true) >= 9);
    CHECK_THROWS_AS(synth_observations(truth, 0, 0.0, kOne, 1), DomainError);
}

TEST_CASE("gamma calibration") {
    const ObservationSet obs = synth_observations(power_curve(2.0), 24, 0.0, kOne, 3);
    const CalibrationResult r = calibrate(obs, CalibFamily::gamma, {});
    CHECK(r.parameters.at(0) == doctest::Approx(2.0).epsilon(1e-4));
    std::vector<double> root(kDefaultSamples);
    for (std::size_t i = 0; i < root.size(); ++i) root[i] = std::sqrt(static_cast<double>(i) / (root.size() - 1));
    CHECK(rmse_vs_truth(r, ResponseCurve("sqrt", root)) <= 1e-3);
    CHECK(r.evaluations > 0);
    CHECK(r.evaluations <= 164);
    for (double p : r.probe_values) CHECK(r.objective <= p);
    CHECK(!r.ill_posed);
}

TEST_CASE("degenerate input") {
    ObservationSet one{"c", Channel::mono, {{0.0, 0.0, 1.0}}};
    const CalibrationResult r = calibrate(one, CalibFamily::gamma, {});
    CHECK(r.objective == 0.0);
    CHECK(r.ill_posed);
    CHECK(r.evaluations > 0);
    CHECK_THROWS_AS(calibrate(ObservationSet{"c", Channel::mono, {}}, CalibFamily::gamma, {}), DomainError);
    CHECK_THROWS_AS(calibrate(one, CalibFamily::slr, {}), DomainError);
    CHECK_THROWS_AS(calibrate(one, CalibFamily::emor, {}), DomainError);
}

TEST_CASE("SLR calibration") {
    const ae::Autoencoder& model = power_model();
    ModelContext ctx;
    ctx.slr = &model;
    ctx.samples = 64;
    const ResponseCurve truth = power_curve(1.7, 64);
    const ObservationSet obs = synth_observations(truth, 24, 0.0, kFour, 4);
    const CalibrationResult r = calibrate(obs, CalibFamily::slr, ctx);
    CHECK(r.evaluations <= 64 + 100);
    REQUIRE(r.probe_values.size() == 64);
    for (double p : r.probe_values) CHECK(r.objective <= p);
    CHECK(r.inverse_curve.size() == 64);
    CHECK(rmse_vs_truth(r, invert(truth)) <= 1e-2);
    CHECK(r.parameters.size() == 1);
    CHECK(r.parameters[0] >= -4.0);
    CHECK(r.parameters[0] <= 4.0);
}

TEST_CASE("Nelder-Mead families recover in-family data") {
    SUBCASE("polynomial") {
        // inverse g(y) = y (0.4 + 0.6 y)
        std::vector<double> fwd(kDefaultSamples);
        for (std::size_t i = 0; i < fwd.size(); ++i) {
            const double x = static_cast<double>(i) / (fwd.size() - 1);
            fwd[i] = std::min(1.0, (-0.4 + std::sqrt(0.16 + 2.4 * x)) / 1.2);
        }
        const ResponseCurve truth("poly", fwd);
        ModelContext ctx;
        ctx.n_params = 2;
        const CalibrationResult r = calibrate(synth_observations(truth, 24, 0.0, kFour, 2), CalibFamily::polynomial, ctx);
        CHECK(rmse_vs_truth(r, invert(truth)) <= 1e-2);
        CHECK(r.parameters.at(0) == doctest::Approx(0.4).epsilon(1e-2));
    }
    SUBCASE("ggcm") {
        ModelContext ctx;
        ctx.n_params = 2;
        const ResponseCurve truth = power_curve(2.5);
        const CalibrationResult r = calibrate(synth_observations(truth, 24, 0.0, kFour, 2), CalibFamily::ggcm, ctx);
        CHECK(rmse_vs_truth(r, invert(truth)) <= 1e-2);
        CHECK(r.evaluations <= 5000);
    }
    SUBCASE("emor") {
        const auto db = generate_surrogate_database({});
        ModelContext ctx;
        ctx.emor = std::make_shared<const EmorBasis>(build_emor_basis(db, 4));
        ctx.n_params = 3;
        const ResponseCurve truth = emor_reconstruct(EmorModel{ctx.emor, {0.8, -0.3, 0.1}});
        const CalibrationResult r = calibrate(synth_observations(truth, 24, 0.0, kFour, 2), CalibFamily::emor, ctx);
        CHECK(rmse_vs_truth(r, invert(truth)) <= 1e-2);
    }
}

TEST_CASE("more patches help") {
    const auto db = generate_surrogate_database({});
    for (CalibFamily family : {CalibFamily::gamma, CalibFamily::polynomial}) {
        CAPTURE(calib_family_name(family));
        const ResponseCurve& truth = db[37];
        const ResponseCurve inv = invert(truth);
        std::vector<double> medians;
        for (std::size_t n : {3, 6, 12, 24}) {
            std::vector<double> errs;
            for (std::uint64_t s = 0; s < 20; ++s) {
                const ObservationSet obs = synth_observations(truth, n, 0.01, kFour, 100 + s);
                errs.push_back(rmse_vs_truth(calibrate(obs, family, {}), inv));
            }
            medians.push_back(median(errs));
        }
        CHECK(medians[3] <= medians[0]);
        for (std::size_t k = 1; k < medians.size(); ++k) CHECK(medians[k] <= medians[k - 1] * 1.05);
    }
}

TEST_CASE("stability") {
    const ResponseCurve a = power_curve(2.0, 16);
    const std::vector<ResponseCurve> same{a, a, a};
    CHECK(stability(same) == 0.0);

    std::vector<double> shifted = a.values();
    for (std::size_t i = 1; i + 1 < shifted.size(); ++i) shifted[i] += 0.1;
    const ResponseCurve b("b", shifted);
    const std::vector<ResponseCurve> pair{a, b};
    CHECK(stability(pair) == doctest::Approx(14 * 0.0025).epsilon(1e-12));

    const ResponseCurve c = power_curve(0.7, 16), d = power_curve(1.4, 16);
    const std::vector<ResponseCurve> abc{a, c, d}, cda{c, d, a};
    CHECK(stability(abc) == doctest::Approx(stability(cda)).epsilon(1e-14));

    // halving every deviation from the mean quarters the variance
    std::vector<ResponseCurve> wide;
    for (const ResponseCurve& k : abc) {
        std::vector<double> v(16);
        for (std::size_t i = 0; i < 16; ++i) {
            const double m = (a[i] + c[i] + d[i]) / 3.0;
            v[i] = m + 0.5 * (k[i] - m);
        }
        wide.emplace_back("w", std::move(v));
    }
    CHECK(stability(wide) == doctest::Approx(0.25 * stability(abc)).epsilon(1e-10));

    CHECK_THROWS_AS(stability(std::vector<ResponseCurve>{a}), DomainError);
    CHECK_THROWS_AS(stability(std::vector<ResponseCurve>{a, power_curve(2.0, 8)}), DomainError);
}

TEST_CASE("rmse against truth") {
    CalibrationResult r;
    r.inverse_curve = power_curve(0.5, 32);
    CHECK(rmse_vs_truth(r, power_curve(0.5, 32)) == 0.0);
    std::vector<double> v = r.inverse_curve.values();
    for (std::size_t i = 1; i + 1 < v.size(); ++i) v[i] = std::min(1.0, v[i] + 0.1);
    const double e = rmse_vs_truth(r, ResponseCurve("o", v));
    CHECK(e > 0.08);
    CHECK(e <= 0.1);
    CHECK_THROWS_AS(rmse_vs_truth(r, power_curve(0.5, 16)), DomainError);
}

TEST_CASE("pinned curves") {
    const ResponseCurve p = pin_curve({0.2, 0.5, std::nan(""), 1.3, 0.9});
    CHECK(p.values() == std::vector<double>{0.0, 0.5, 0.0, 1.0, 1.0});
}

TEST_CASE("observation CSV") {
    const ResponseCurve truth = power_curve(2.0);
    std::vector<ObservationSet> sets{synth_observations(truth, 4, 0.01, kFour, 1, "cam-a"),
                                     synth_observations(truth, 3, 0.0, kOne, 2, "cam-b")};
    sets[1].channel = Channel::g;
    const std::string text = observations_csv(sets);
    const auto back = parse_observations_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[1].channel == Channel::g);
    CHECK(back[0].camera_id == "cam-a");
    for (std::size_t s = 0; s < 2; ++s) {
        REQUIRE(back[s].observations.size() == sets[s].observations.size());
        for (std::size_t i = 0; i < sets[s].observations.size(); ++i) {
            CHECK(back[s].observations[i].irradiance == sets[s].observations[i].irradiance);
            CHECK(back[s].observations[i].intensity == sets[s].observations[i].intensity);
            CHECK(back[s].observations[i].exposure == sets[s].observations[i].exposure);
        }
    }
    CHECK(observations_csv(back) == text);

    const std::string header = "camera_id,channel,exposure,irradiance,intensity\n";
    CHECK(parse_observations_csv(header).empty());
    try {
        parse_observations_csv(header + "c,mono,1,0.5,0.4\nc,mono,1,abc,0.4\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_observations_csv(header + "c,purple,1,0.5,0.4\n"), ParseError);
    CHECK_THROWS_AS(parse_observations_csv(header + "c,mono,1,1.5,0.4\n"), ParseError);
    CHECK_THROWS_AS(parse_observations_csv("camera,channel\nc,mono\n"), ParseError);
}

TEST_CASE("result JSON") {
    const CalibrationResult r = calibrate(synth_observations(power_curve(2.0), 6, 0.0, kOne, 1), CalibFamily::gamma, {});
    const std::string with = calibration_result_json(r, "cam", true);
    const std::string without = calibration_result_json(r, "cam", false);
    CHECK(with.find("\"wall_time_ms\"") != std::string::npos);
    CHECK(without.find("wall_time_ms") == std::string::npos);
    CHECK(without.find("\"inverse_curve\"") != std::string::npos);
    CHECK(without.find("\"evaluations\"") != std::string::npos);
}
