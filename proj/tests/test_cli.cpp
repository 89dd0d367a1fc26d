#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "crf/autoencoder.hpp"
#include "crf/report.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "crf_atlas_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

struct Run {
    int code = -1;
    std::string err;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string err = path("stderr.txt");
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" CRF_ATLAS_BIN "\" " + args + " > " +
                            path("stdout.txt") + " 2> " + err;
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

std::size_t lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("exit codes") {
    CHECK(run("--help").code == 0);
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("fit --models spline:3").code == 2);
    CHECK(run("train --constraint sideways --epochs 1").code == 2);
    CHECK(run("train --lr -1 --epochs 1").code == 2);
    CHECK(run("calibrate --family gamma").code == 2);
    CHECK(run("fit --models gamma --dorf " + path("missing.dorf")).code == 2);
    spit(path("garbage.dorf"), "not a database\n");
    CHECK(run("fit --models gamma --dorf " + path("garbage.dorf")).code == 3);
}

TEST_CASE("train") {
    const Run r = run("train --epochs 1 --arch 8 --no-timestamp --out " + path("m1.json") + " --report " +
                      path("r1.csv") + " --histogram " + path("h1.svg"));
    REQUIRE(r.code == 0);
    const auto report = crf::report::parse_csv(slurp(path("r1.csv")));
    CHECK(report.rows.size() == 1);
    CHECK(report.columns.back() == "kl_loss");
    const crf::ae::Autoencoder m = crf::ae::load_model(path("m1.json"));
    CHECK(crf::ae::serialize_model(m) == slurp(path("m1.json")));
    CHECK(m.arch().encoder_hidden == std::vector<std::size_t>{8});
    CHECK(slurp(path("h1.svg")).find("<svg") != std::string::npos);

    REQUIRE(run("train --epochs 2 --arch 8 --constraint auc --out " + path("m2.json") + " --report " + path("r2.csv")).code == 0);
    const auto auc = crf::report::parse_csv(slurp(path("r2.csv")));
    CHECK(auc.columns.back() == "label_loss");
    CHECK(auc.rows.size() == 2);

    // same flags, same bytes
    REQUIRE(run("train --epochs 3 --arch 6 --seed 4 --out " + path("d1.json")).code == 0);
    REQUIRE(run("train --epochs 3 --arch 6 --seed 4 --out " + path("d2.json")).code == 0);
    REQUIRE(run("train --epochs 3 --arch 6 --seed 5 --out " + path("d3.json")).code == 0);
    CHECK(slurp(path("d1.json")) == slurp(path("d2.json")));
    CHECK(slurp(path("d1.json")) != slurp(path("d3.json")));
}

TEST_CASE("nas") {
    REQUIRE(run("nas --space h1=10,20 h2=0 h3=0 --epochs 5 --samples 32 --out-dir " + path("nas")).code == 0);
    const auto t = crf::report::parse_csv(slurp(path("nas/nas_report.csv")));
    CHECK(t.rows.size() == 2);
    CHECK(t.columns ==
          std::vector<std::string>{"arch_h1", "arch_h2", "arch_h3", "latent_dim", "accuracy_mse", "complexity", "rank"});
    const auto j = nlohmann::json::parse(slurp(path("nas/nas_summary.json")));
    CHECK(j["candidates"] == 2);
    CHECK(run("nas --space h4=10 --epochs 5 --out-dir " + path("nas")).code == 2);
}

TEST_CASE("fit") {
    REQUIRE(run("fit --models gamma --no-timestamp --out " + path("fit.csv")).code == 0);
    const auto t = crf::report::parse_csv(slurp(path("fit.csv")));
    CHECK(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "gamma");
    REQUIRE(run("fit --models gamma --format json --no-timestamp --out " + path("fit.json")).code == 0);
    CHECK(nlohmann::json::parse(slurp(path("fit.json"))).size() == 1);
    CHECK(run("fit --models slr --model " + path("nope.json")).code == 2);
}

TEST_CASE("synth and calibrate") {
    REQUIRE(run("synth --gamma 2 --noccp 24 --noise 0 --camera-id cam --out " + path("obs.csv") + " --truth-out " +
                path("truth.dorf"))
                .code == 0);
    CHECK(lines(slurp(path("obs.csv"))) == 25);
    REQUIRE(run("calibrate --family gamma --observations " + path("obs.csv") + " --no-timestamp --out " +
                path("res.json") + " --plot " + path("plot.svg") + " --truth " + path("truth.dorf"))
                .code == 0);
    const auto j = nlohmann::json::parse(slurp(path("res.json")));
    CHECK(j["parameters"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(j["family"] == "gamma");
    CHECK(!j.contains("wall_time_ms"));
    const std::string svg = slurp(path("plot.svg"));
    std::size_t paths = 0;
    for (std::size_t p = svg.find("<path"); p != std::string::npos; p = svg.find("<path", p + 1)) ++paths;
    CHECK(paths == 2);

    spit(path("empty.csv"), "");
    const Run empty = run("calibrate --family gamma --observations " + path("empty.csv"));
    CHECK(empty.code == 3);
    CHECK(!empty.err.empty());
    spit(path("header.csv"), "camera_id,channel,exposure,irradiance,intensity\n");
    CHECK(run("calibrate --family gamma --observations " + path("header.csv")).code == 3);
    spit(path("bad.csv"), "camera_id,channel,exposure,irradiance,intensity\nc,mono,1,0.5,0.3\nc,mono,1,0.6,oops\n");
    const Run bad = run("calibrate --family gamma --observations " + path("bad.csv"));
    CHECK(bad.code == 3);
    CHECK(bad.err.find("line 3") != std::string::npos);
}

TEST_CASE("configuration precedence") {
    spit(path("cfg.json"), R"({"seed": 11, "synth": {"noise": 0.02, "noccp": 5}})");
    const std::string base = "synth --gamma 2.2 --out ";
    REQUIRE(run(base + path("s_cfg.csv") + " --config " + path("cfg.json")).code == 0);
    REQUIRE(run(base + path("s_flags.csv") + " --seed 11 --noise 0.02 --noccp 5").code == 0);
    CHECK(slurp(path("s_cfg.csv")) == slurp(path("s_flags.csv")));
    CHECK(lines(slurp(path("s_cfg.csv"))) == 6);

    // flags beat the file
    REQUIRE(run(base + path("s_over.csv") + " --config " + path("cfg.json") + " --seed 12").code == 0);
    REQUIRE(run(base + path("s_12.csv") + " --seed 12 --noise 0.02 --noccp 5").code == 0);
    CHECK(slurp(path("s_over.csv")) == slurp(path("s_12.csv")));

    // the environment seed sits below the file
    REQUIRE(run(base + path("s_env.csv") + " --config " + path("cfg.json"), "CRF_ATLAS_SEED=12").code == 0);
    CHECK(slurp(path("s_env.csv")) == slurp(path("s_cfg.csv")));
    REQUIRE(run(base + path("s_env2.csv") + " --noise 0.02 --noccp 5", "CRF_ATLAS_SEED=12").code == 0);
    CHECK(slurp(path("s_env2.csv")) == slurp(path("s_12.csv")));

    spit(path("broken.json"), "{not json");
    CHECK(run(base + path("x.csv") + " --config " + path("broken.json")).code == 2);
}

TEST_CASE("bench") {
    const std::string args = "bench --cameras 2 --seeds 2 --noccp 3,6 --methods gamma,polynomial --no-timestamp --out-dir ";
    REQUIRE(run(args + path("b1")).code == 0);
    REQUIRE(run(args + path("b2") + " --workers 2").code == 0);
    const std::string summary = slurp(path("b1/calib_summary.csv"));
    CHECK(summary == slurp(path("b2/calib_summary.csv")));
    CHECK(slurp(path("b1/calib_per_camera.csv")) == slurp(path("b2/calib_per_camera.csv")));
    const auto t = crf::report::parse_csv(summary);
    CHECK(std::find(t.columns.begin(), t.columns.end(), "stability") != t.columns.end());
    CHECK(t.rows.size() == 2 * 3);
    CHECK(slurp(path("b1/calib_curves.svg")).find("<svg") != std::string::npos);
    CHECK(run("bench --cameras 2 --methods spline").code == 2);
}
