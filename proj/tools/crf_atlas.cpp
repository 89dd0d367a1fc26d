// crf_atlas: command-line front end for the response-curve toolkit.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crf/autoencoder.hpp"
#include "crf/bench.hpp"
#include "crf/calibration.hpp"
#include "crf/curves.hpp"
#include "crf/error.hpp"
#include "crf/models.hpp"
#include "crf/nas.hpp"
#include "crf/report.hpp"
#include "crf/simd/kernels.hpp"
#include "crf/surrogate.hpp"

namespace fs = std::filesystem;
using namespace crf;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON --config support. Top-level scalars apply to the active subcommand;
// objects named after a subcommand apply only when that subcommand runs.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(std::string active) : active_(std::move(active)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                if (key != active_) continue;
                for (const auto& [k2, v2] : value.items()) items.push_back(item(k2, v2));
            } else {
                items.push_back(item(key, value));
            }
        }
        return items;
    }

private:
    CLI::ConfigItem item(const std::string& name, const nlohmann::json& v) const {
        CLI::ConfigItem it;
        if (!active_.empty()) it.parents = {active_};
        it.name = name;
        auto text = [](const nlohmann::json& e) { return e.is_string() ? e.get<std::string>() : e.dump(); };
        if (v.is_array()) {
            std::string joined;
            for (const auto& e : v) joined += (joined.empty() ? "" : ",") + text(e);
            it.inputs = {joined};
        } else {
            it.inputs = {text(v)};
        }
        return it;
    }

    std::string active_;
};

// Helpers -------------------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& what) {
    std::vector<std::size_t> out;
    for (const std::string& p : split(s, ',')) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(p, &used);
            if (used != p.size()) throw std::invalid_argument(p);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw UsageError(what + ": expected comma-separated integers, got '" + s + "'");
        }
    }
    return out;
}

std::vector<double> parse_reals(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const std::string& p : split(s, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(p, &used));
            if (used != p.size()) throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw UsageError(what + ": expected comma-separated numbers, got '" + s + "'");
        }
    }
    return out;
}

fs::path executable_dir() {
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::current_path() : exe.parent_path();
}

fs::path model_dir() {
    if (const char* env = std::getenv("CRF_ATLAS_MODEL_DIR"); env && *env) return env;
    return executable_dir();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
    } else {
        report::write_text(path, text);
    }
}

std::string render(const report::Table& t, const std::string& format) {
    return format == "json" ? report::to_json(t) : report::to_csv(t);
}

struct Common {
    std::string dorf;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool no_timestamp = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--dorf", c.dorf, "Response database (DoRF text or curve CSV); defaults to $CRF_DORF_PATH, "
                                      "then the built-in surrogate");
    cmd->add_option("--seed", c.seed, "Random seed")->envname("CRF_ATLAS_SEED");
    cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-timestamp", c.no_timestamp, "Omit wall-clock times from reports");
}

std::vector<ResponseCurve> load_dataset(const Common& c) {
    std::string path = c.dorf;
    if (path.empty()) {
        if (const char* env = std::getenv("CRF_DORF_PATH"); env && *env) path = env;
    }
    if (path.empty()) {
        std::cerr << "note: no response database given; using the built-in surrogate\n";
        return generate_surrogate_database();
    }
    if (!fs::exists(path)) throw UsageError("database file not found: " + path);
    std::vector<std::string> warnings;
    auto curves = load_curves(path, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    return curves;
}

ae::Autoencoder load_model_file(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("model file not found: " + path);
    return ae::load_model(path);
}

std::string default_model_path(const std::string& name) { return (model_dir() / name).string(); }

std::vector<ResponseCurve> subset(const std::vector<ResponseCurve>& curves, const std::vector<std::size_t>& idx) {
    std::vector<ResponseCurve> out;
    for (std::size_t i : idx) out.push_back(curves[i]);
    return out;
}

ae::ArchSpec parse_arch(const std::string& text, std::size_t latent_dim, double keep, std::size_t input) {
    ae::ArchSpec arch;
    arch.input_size = input;
    arch.latent_dim = latent_dim;
    arch.dropout_keep = keep;
    arch.encoder_hidden.clear();
    for (std::size_t h : parse_sizes(text, "--arch")) {
        if (h > 0) arch.encoder_hidden.push_back(h);
    }
    try {
        arch.validate();
    } catch (const DomainError& e) {
        throw UsageError(std::string("--arch: ") + e.what());
    }
    return arch;
}

// train -----------------------------------------------------------------------

struct TrainArgs {
    Common common;
    std::string arch = "50,100";  // selected by the committed search in data/nas
    std::size_t latent_dim = 1;
    double keep = 0.9;
    std::string constraint = "ldl";
    std::size_t epochs = 4000;
    double lr = 1e-3;
    double lambda_smooth = 1e-3;
    double lambda_latent = 1e-2;
    bool raw_variance = false;
    bool on_inverse = false;
    std::size_t holdout = 0;
    std::uint64_t holdout_seed = 7;
    std::string out = "model.json";
    std::string report;
    std::string histogram;
};

ae::TrainConfig train_config(const TrainArgs& a) {
    ae::TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.seed = a.common.seed;
    cfg.lambda_smooth = a.lambda_smooth;
    cfg.lambda_latent = a.lambda_latent;
    const auto c = ae::parse_constraint(a.constraint);
    if (!c) throw UsageError("--constraint must be ldl, auc or none");
    cfg.constraint = *c;
    cfg.ldl_normalized_variance = !a.raw_variance;
    cfg.train_on_inverse = a.on_inverse;
    return cfg;
}

int cmd_train(const TrainArgs& a) {
    const ae::TrainConfig cfg = train_config(a);
    if (a.epochs == 0) throw UsageError("--epochs must be positive");
    const auto all = load_dataset(a.common);
    std::vector<ResponseCurve> curves = all;
    if (a.holdout > 0) curves = subset(all, bench::split_holdout(all.size(), a.holdout, a.holdout_seed).train);
    const ae::ArchSpec arch = parse_arch(a.arch, a.latent_dim, a.keep, curves.front().size());

    ae::TrainResult r = ae::train(curves, arch, cfg);
    ae::TrainingMetadata meta;
    meta.seed = cfg.seed;
    meta.epochs = cfg.epochs;
    meta.constraint = cfg.constraint;
    meta.learning_rate = cfg.learning_rate;
    meta.lambda_smooth = cfg.lambda_smooth;
    meta.lambda_latent = cfg.lambda_latent;
    meta.ldl_normalized_variance = cfg.ldl_normalized_variance;
    meta.train_on_inverse = cfg.train_on_inverse;
    meta.dataset_fingerprint = dataset_fingerprint(all);
    meta.dataset_size = all.size();
    meta.holdout = a.holdout;
    meta.holdout_seed = a.holdout > 0 ? a.holdout_seed : 0;
    const ae::Autoencoder model(arch, std::move(r.weights), meta);
    ae::save_model(model, a.out);

    if (!a.report.empty()) {
        report::Table t;
        t.columns = {"epoch", "total", "recon", "smooth"};
        if (cfg.constraint == ae::Constraint::ldl) t.columns.push_back("kl_loss");
        if (cfg.constraint == ae::Constraint::auc) t.columns.push_back("label_loss");
        for (std::size_t e = 0; e < r.report.history.size(); ++e) {
            const ae::LossBreakdown& l = r.report.history[e];
            std::vector<std::string> row{report::number(e), report::number(l.total), report::number(l.recon),
                                         report::number(l.smooth)};
            if (cfg.constraint != ae::Constraint::none) row.push_back(report::number(l.latent));
            t.add_row(std::move(row));
        }
        report::write_text(a.report, report::to_csv(t));
    }
    const ae::LatentHistogram h = ae::latent_histogram(model, curves, 16);
    if (!a.histogram.empty()) {
        report::write_text(a.histogram, bench::latent_histogram_svg(h, "latent distribution " + arch.label()));
    }
    std::fprintf(stderr, "trained %s on %zu curves: mean rmse %.6e, latent mean %.4f sd %.4f\n",
                 arch.label().c_str(), curves.size(), r.report.mean_rmse, h.mean, h.sd);
    return 0;
}

// nas -------------------------------------------------------------------------

struct NasArgs {
    Common common;
    std::size_t top_m = 10;
    std::size_t folds = 3;
    std::vector<std::string> space;
    std::size_t epochs = 4000;
    double keep = 0.9;
    std::string constraint = "ldl";
    double lr = 1e-3;
    std::size_t samples = 0;  // 0 keeps the native grid
    bool smoke = false;
    std::string out_dir = ".";
};

int cmd_nas(NasArgs a, bool epochs_given, bool top_m_given) {
    nas::SearchSpace space;
    if (a.smoke) {
        space.h1 = {10, 20};
        space.h2 = {0, 10};
        space.h3 = {0};
        if (!epochs_given) a.epochs = 100;
    }
    for (const std::string& s : a.space) {
        for (const std::string& part : split(s, ' ')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw UsageError("--space expects h1=..,h2=..,h3=.. entries");
            const std::string key = part.substr(0, eq);
            const auto values = parse_sizes(part.substr(eq + 1), "--space " + key);
            if (key == "h1") space.h1 = values;
            else if (key == "h2") space.h2 = values;
            else if (key == "h3") space.h3 = values;
            else throw UsageError("--space: unknown key '" + key + "'");
        }
    }
    const std::size_t candidates = nas::enumerate_space(space).size();
    if (!top_m_given) a.top_m = std::min(a.top_m, candidates);
    if (a.top_m == 0 || a.folds < 2) throw UsageError("--top-m must be positive and --folds at least 2");
    auto curves = load_dataset(a.common);
    if (a.samples != 0) {
        if (a.samples < 2) throw UsageError("--samples must be at least 2");
        for (ResponseCurve& c : curves) c = resample(c, a.samples);
    }
    nas::NasConfig cfg;
    cfg.top_m = a.top_m;
    cfg.folds = a.folds;
    cfg.workers = a.common.workers;
    cfg.seed = a.common.seed;
    cfg.train.epochs = a.epochs;
    cfg.train.learning_rate = a.lr;
    cfg.train.seed = a.common.seed;
    const auto c = ae::parse_constraint(a.constraint);
    if (!c) throw UsageError("--constraint must be ldl, auc or none");
    cfg.train.constraint = *c;
    ae::ArchSpec base;
    base.input_size = curves.front().size();
    base.dropout_keep = a.keep;

    const nas::NasResult r = nas::naive_nas(space, curves, cfg, base);
    fs::create_directories(a.out_dir);
    report::write_text((fs::path(a.out_dir) / "nas_report.csv").string(), report::to_csv(nas::nas_report(r)));
    report::write_text((fs::path(a.out_dir) / "nas_summary.json").string(), nas::nas_summary_json(r, cfg));
    std::fprintf(stderr, "evaluated %zu candidates; selected %s\n", r.table.size(), r.arch().label().c_str());
    return 0;
}

// fit -------------------------------------------------------------------------

struct FitArgs {
    Common common;
    std::string models = "gamma,poly:1..4,ggcm:1..4,emor:1..4,slr";
    std::string model;
    std::string format = "csv";
    std::string out;
};

int cmd_fit(const FitArgs& a) {
    std::vector<bench::FitCellSpec> cells;
    try {
        cells = bench::parse_fit_tags(a.models);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    std::optional<ae::Autoencoder> slr;
    if (std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.slr; })) {
        const std::string path = a.model.empty() ? default_model_path("slr_default.json") : a.model;
        if (!fs::exists(path)) throw UsageError("slr cell needs a model file (--model); none at " + path);
        slr.emplace(ae::load_model(path));
    }
    const auto curves = load_dataset(a.common);
    bench::FittingBenchOptions opt;
    opt.workers = a.common.workers;
    const bench::FittingBenchResult r =
        bench::run_fitting_bench(curves, cells, nullptr, slr ? &*slr : nullptr, opt);
    write_output(a.out, render(r.table(!a.common.no_timestamp), a.format));
    return 0;
}

// calibrate -------------------------------------------------------------------

struct CalibArgs {
    Common common;
    std::string observations;
    std::string family = "slr";
    std::string model;
    std::size_t params = 3;
    std::string camera;
    std::string out;
    std::string plot;
    std::string truth;
};

int cmd_calibrate(const CalibArgs& a) {
    const auto family = calib::parse_calib_family(a.family);
    if (!family) throw UsageError("--family must be slr, gamma, polynomial, ggcm or emor");
    if (a.observations.empty()) throw UsageError("--observations is required");
    if (!fs::exists(a.observations)) throw UsageError("observation file not found: " + a.observations);
    const auto sets = calib::parse_observations_csv(read_text_file(a.observations));
    if (sets.empty()) throw Error("observation file " + a.observations + " holds no observations");
    const calib::ObservationSet* obs = &sets.front();
    if (!a.camera.empty()) {
        obs = nullptr;
        for (const auto& s : sets) {
            if (s.camera_id == a.camera) {
                obs = &s;
                break;
            }
        }
        if (obs == nullptr) throw UsageError("camera '" + a.camera + "' not in " + a.observations);
    }

    calib::ModelContext ctx;
    ctx.n_params = a.params;
    std::optional<ae::Autoencoder> slr;
    if (*family == calib::CalibFamily::slr) {
        slr.emplace(load_model_file(a.model.empty() ? default_model_path("slr_default.json") : a.model));
        ctx.slr = &*slr;
    }
    if (*family == calib::CalibFamily::emor) {
        ctx.emor = std::make_shared<const EmorBasis>(build_emor_basis(load_dataset(a.common), a.params));
    }
    const calib::CalibrationResult r = calib::calibrate(*obs, *family, ctx);
    if (r.ill_posed) std::cerr << "warning: all observed intensities are equal; the fit is ill-posed\n";
    write_output(a.out, calib::calibration_result_json(r, obs->camera_id, !a.common.no_timestamp));

    if (!a.plot.empty()) {
        std::optional<ResponseCurve> truth;
        if (!a.truth.empty()) {
            const auto curves = load_curves(a.truth);
            truth = curves.front();
            for (const auto& c : curves) {
                if (c.id() == obs->camera_id) truth = c;
            }
            truth = invert(*truth);
        }
        const std::vector<calib::CalibrationResult> results{r};
        const std::vector<std::string> labels{std::string(calib::calib_family_name(r.family))};
        const ResponseCurve reference = truth ? *truth : ResponseCurve::identity(r.inverse_curve.size());
        std::string svg = bench::inverse_curves_svg("inverse response " + obs->camera_id, reference, results, labels);
        if (!truth) {
            // no truth given: plot the calibrated curve alone
            std::vector<report::Series> series;
            report::Series s{labels[0], {}, {}, "#d62728", false};
            const SampleGrid grid(r.inverse_curve.size());
            for (std::size_t i = 0; i < r.inverse_curve.size(); ++i) {
                s.x.push_back(grid.position(i));
                s.y.push_back(r.inverse_curve[i]);
            }
            series.push_back(std::move(s));
            report::Series pts{"observations", {}, {}, "#000000", true};
            for (const auto& o : obs->observations) {
                pts.x.push_back(o.intensity);
                pts.y.push_back(o.irradiance);
            }
            series.push_back(std::move(pts));
            report::PlotSpec spec;
            spec.title = "inverse response " + obs->camera_id;
            spec.x_label = "intensity";
            spec.y_label = "irradiance";
            svg = report::svg_line_plot(spec, series);
        }
        report::write_text(a.plot, svg);
    }
    return 0;
}

// bench -----------------------------------------------------------------------

struct BenchArgs {
    Common common;
    std::size_t cameras = 14;
    std::size_t holdout = 14;
    std::uint64_t holdout_seed = 7;
    std::string noccp = "3,6,12,24";
    std::string exposures = "0.25,0.5,1,2";
    double noise = 0.01;
    std::size_t seeds = 20;
    std::string methods = "slr-ldl,slr-none,gamma,polynomial,ggcm,emor";
    std::size_t params = 3;
    std::string model_ldl, model_none, model_auc;
    std::size_t train_epochs = 0;
    std::string arch = "50,100";  // selected by the committed search in data/nas
    std::string out_dir;
    std::string format = "csv";
};

int cmd_bench(const BenchArgs& a) {
    if (a.cameras == 0 || a.cameras > a.holdout) throw UsageError("--cameras must lie in [1, --holdout]");
    if (a.seeds == 0) throw UsageError("--seeds must be positive");
    const auto method_names = split(a.methods, ',');
    if (method_names.empty()) throw UsageError("--methods is empty");
    for (const std::string& m : method_names) {
        const bool slr = m == "slr-ldl" || m == "slr-none" || m == "slr-auc";
        if (!slr && !calib::parse_calib_family(m)) throw UsageError("unknown method '" + m + "'");
        if (m == "slr") throw UsageError("use slr-ldl, slr-auc or slr-none");
    }
    bench::CalibBenchConfig cfg;
    cfg.noccp = parse_sizes(a.noccp, "--noccp");
    cfg.exposures = parse_reals(a.exposures, "--exposures");
    cfg.noise = a.noise;
    cfg.seeds = a.seeds;
    cfg.seed = a.common.seed;
    cfg.workers = a.common.workers;
    if (cfg.noccp.empty() || cfg.exposures.empty()) throw UsageError("--noccp and --exposures need values");

    const auto all = load_dataset(a.common);
    const bench::HoldoutSplit split = bench::split_holdout(all.size(), a.holdout, a.holdout_seed);
    const auto training = subset(all, split.train);
    std::vector<std::size_t> held(split.held.begin(), split.held.begin() + static_cast<std::ptrdiff_t>(a.cameras));
    const auto cameras = bench::make_cameras(all, held);
    const std::uint64_t fingerprint = dataset_fingerprint(all);

    std::vector<std::unique_ptr<ae::Autoencoder>> models;
    auto slr_model = [&](const std::string& constraint, const std::string& explicit_path) -> const ae::Autoencoder* {
        if (a.train_epochs > 0) {
            ae::TrainConfig tc;
            tc.epochs = a.train_epochs;
            tc.seed = a.common.seed;
            tc.constraint = *ae::parse_constraint(constraint);
            const ae::ArchSpec arch = parse_arch(a.arch, 1, 0.9, all.front().size());
            models.push_back(std::make_unique<ae::Autoencoder>(ae::train_autoencoder(training, arch, tc)));
            return models.back().get();
        }
        const std::string path =
            explicit_path.empty() ? default_model_path("slr_holdout_" + constraint + ".json") : explicit_path;
        if (!fs::exists(path)) {
            throw UsageError("no model for slr-" + constraint + " at " + path +
                             "; pass --model-" + constraint + " or --train-epochs");
        }
        auto m = std::make_unique<ae::Autoencoder>(ae::load_model(path));
        const ae::TrainingMetadata& meta = m->metadata();
        if (meta.dataset_fingerprint != fingerprint || meta.holdout != a.holdout ||
            meta.holdout_seed != a.holdout_seed) {
            throw UsageError(path + " was not trained on this database with --holdout " +
                             std::to_string(a.holdout) + " --holdout-seed " + std::to_string(a.holdout_seed) +
                             "; retrain it or pass --train-epochs");
        }
        models.push_back(std::move(m));
        return models.back().get();
    };

    std::shared_ptr<const EmorBasis> basis;
    std::vector<bench::CalibMethod> methods;
    for (const std::string& name : method_names) {
        bench::CalibMethod m;
        m.name = name;
        m.context.n_params = a.params;
        if (name.rfind("slr-", 0) == 0) {
            const std::string constraint = name.substr(4);
            m.family = calib::CalibFamily::slr;
            m.context.slr = slr_model(constraint, constraint == "ldl"    ? a.model_ldl
                                                  : constraint == "none" ? a.model_none
                                                                         : a.model_auc);
        } else {
            m.family = *calib::parse_calib_family(name);
            if (m.family == calib::CalibFamily::emor) {
                if (!basis) basis = std::make_shared<const EmorBasis>(build_emor_basis(training, a.params));
                m.context.emor = basis;
            }
        }
        methods.push_back(std::move(m));
    }

    const bench::CalibBenchResult r = bench::run_calibration_bench(cameras, methods, cfg);
    const bool times = !a.common.no_timestamp;
    if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
    write_output(a.out_dir.empty() ? "" : (fs::path(a.out_dir) / ("calib_summary." + a.format)).string(),
                 render(r.summary(times), a.format));
    if (!a.out_dir.empty()) {
        report::write_text((fs::path(a.out_dir) / "calib_per_camera.csv").string(), report::to_csv(r.per_camera()));
        // plot data: first camera, largest NoCCP, first repeat
        const std::size_t n = cfg.noccp.back();
        const calib::ObservationSet obs =
            calib::synth_observations(cameras[0].forward, n, cfg.noise, cfg.exposures,
                                      bench::observation_seed(cfg.seed, 0, n, 0), cameras[0].id);
        std::vector<calib::CalibrationResult> results;
        std::vector<std::string> labels;
        for (const bench::CalibMethod& m : methods) {
            calib::ModelContext ctx = m.context;
            ctx.samples = cameras[0].inverse.size();
            results.push_back(calib::calibrate(obs, m.family, ctx, cfg.solver));
            labels.push_back(m.name);
        }
        report::write_text((fs::path(a.out_dir) / "calib_curves.svg").string(),
                           bench::inverse_curves_svg(cameras[0].id + ", NoCCP " + std::to_string(n),
                                                     cameras[0].inverse, results, labels));
    }
    for (const auto& m : r.methods) {
        for (const std::string& f : m.failures) std::cerr << "failure: " << m.name << " " << f << "\n";
    }
    return 0;
}

// synth / surrogate -----------------------------------------------------------

struct SynthArgs {
    Common common;
    double gamma = 0.0;
    std::string curve;
    std::size_t noccp = 24;
    std::string exposures = "1";
    double noise = 0.0;
    std::string camera_id;
    std::string out;
    std::string truth_out;
};

int cmd_synth(const SynthArgs& a) {
    if ((a.gamma > 0.0) == !a.curve.empty()) throw UsageError("give exactly one of --gamma or --curve");
    std::optional<ResponseCurve> truth;
    if (a.gamma > 0.0) {
        const double g = a.gamma;
        truth = sample_function([g](double x) { return std::pow(x, g); }, kDefaultSamples, "gamma");
    } else {
        for (const auto& c : load_dataset(a.common)) {
            if (c.id() == a.curve) truth = c;
        }
        if (!truth) throw UsageError("no curve with id '" + a.curve + "'");
    }
    const auto exposures = parse_reals(a.exposures, "--exposures");
    const std::string id = a.camera_id.empty() ? truth->id() : a.camera_id;
    const calib::ObservationSet set =
        calib::synth_observations(*truth, a.noccp, a.noise, exposures, a.common.seed, id);
    write_output(a.out, calib::observations_csv(std::span<const calib::ObservationSet>(&set, 1)));
    if (!a.truth_out.empty()) {
        std::ostringstream os;
        const ResponseCurve named(id, truth->values());
        write_dorf(os, std::span<const ResponseCurve>(&named, 1), "synthetic camera");
        report::write_text(a.truth_out, os.str());
    }
    return 0;
}

struct SurrogateArgs {
    std::uint64_t seed = SurrogateOptions{}.seed;
    std::size_t count = 201;
    std::string out;
};

int cmd_surrogate(const SurrogateArgs& a) {
    SurrogateOptions opt;
    opt.seed = a.seed;
    opt.count = a.count;
    std::ostringstream os;
    write_dorf(os, generate_surrogate_database(opt), "surrogate response database");
    write_output(a.out, os.str());
    return 0;
}

std::string active_subcommand(int argc, char** argv, const std::vector<std::string>& names) {
    for (int i = 1; i < argc; ++i) {
        for (const std::string& n : names) {
            if (n == argv[i]) return n;
        }
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Camera response curve toolkit: models, training, architecture search, calibration, benchmarks"};
    app.require_subcommand(1);
    const std::vector<std::string> names{"train", "nas", "fit", "calibrate", "bench", "synth", "surrogate"};
    app.config_formatter(std::make_shared<JsonConfig>(active_subcommand(argc, argv, names)));
    app.fallthrough();
    app.set_config("--config", "", "JSON file of option defaults; command-line flags take precedence");
    app.add_flag_callback("--version", [] {
        std::cout << "crf_atlas 1.0 (kernels: " << simd::active().name << ")\n";
        throw CLI::Success();
    });

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train the single-latent autoencoder");
    add_common(c_train, train.common);
    c_train->add_option("--arch", train.arch, "Encoder hidden sizes h1[,h2[,h3]]");
    c_train->add_option("--latent-dim", train.latent_dim)->check(CLI::PositiveNumber);
    c_train->add_option("--keep", train.keep, "Dropout keep probability")->check(CLI::Range(0.0, 1.0));
    c_train->add_option("--constraint", train.constraint, "ldl, auc or none");
    c_train->add_option("--epochs", train.epochs);
    c_train->add_option("--lr", train.lr)->check(CLI::PositiveNumber);
    c_train->add_option("--lambda-smooth", train.lambda_smooth)->check(CLI::NonNegativeNumber);
    c_train->add_option("--lambda-latent", train.lambda_latent)->check(CLI::NonNegativeNumber);
    c_train->add_flag("--raw-variance", train.raw_variance, "Unnormalized batch variance in the KL term");
    c_train->add_flag("--train-on-inverse", train.on_inverse, "Train on inverted curves");
    c_train->add_option("--holdout", train.holdout, "Curves withheld for the calibration bench");
    c_train->add_option("--holdout-seed", train.holdout_seed);
    c_train->add_option("--out", train.out, "Model file");
    c_train->add_option("--report", train.report, "Per-epoch loss CSV");
    c_train->add_option("--histogram", train.histogram, "Latent histogram SVG");

    NasArgs nas;
    auto* c_nas = app.add_subcommand("nas", "Grid architecture search");
    add_common(c_nas, nas.common);
    auto* nas_top_m = c_nas->add_option("--top-m", nas.top_m, "Default 10, capped at the space size");
    c_nas->add_option("--folds", nas.folds);
    c_nas->add_option("--space", nas.space, "Overrides such as h1=10,20 h2=0 h3=0")->expected(1, 3);
    auto* nas_epochs = c_nas->add_option("--epochs", nas.epochs);
    c_nas->add_option("--keep", nas.keep);
    c_nas->add_option("--lr", nas.lr)->check(CLI::PositiveNumber);
    c_nas->add_option("--samples", nas.samples, "Resample curves to this many points before searching");
    c_nas->add_option("--constraint", nas.constraint);
    c_nas->add_flag("--smoke", nas.smoke, "Reduced space and epochs");
    c_nas->add_option("--out-dir", nas.out_dir);

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Curve-fitting benchmark over the database");
    add_common(c_fit, fit.common);
    c_fit->add_option("--models", fit.models, "Tags: gamma, poly:1..4, ggcm:K, emor:K, slr");
    c_fit->add_option("--model", fit.model, "SLR model file");
    c_fit->add_option("--format", fit.format)->check(CLI::IsMember({"csv", "json"}));
    c_fit->add_option("--out", fit.out);

    CalibArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "Estimate an inverse response from observations");
    add_common(c_cal, cal.common);
    c_cal->add_option("--observations", cal.observations, "CSV: camera_id,channel,exposure,irradiance,intensity");
    c_cal->add_option("--family", cal.family, "slr, gamma, polynomial, ggcm or emor");
    c_cal->add_option("--model", cal.model, "SLR model file");
    c_cal->add_option("--params", cal.params)->check(CLI::PositiveNumber);
    c_cal->add_option("--camera", cal.camera);
    c_cal->add_option("--out", cal.out);
    c_cal->add_option("--plot", cal.plot, "SVG of the calibrated inverse curve");
    c_cal->add_option("--truth", cal.truth, "Forward truth curve file for the plot");

    BenchArgs bn;
    auto* c_bench = app.add_subcommand("bench", "Synthetic calibration benchmark");
    add_common(c_bench, bn.common);
    c_bench->add_option("--cameras", bn.cameras);
    c_bench->add_option("--holdout", bn.holdout);
    c_bench->add_option("--holdout-seed", bn.holdout_seed);
    c_bench->add_option("--noccp", bn.noccp);
    c_bench->add_option("--exposures", bn.exposures);
    c_bench->add_option("--noise", bn.noise)->check(CLI::NonNegativeNumber);
    c_bench->add_option("--seeds", bn.seeds);
    c_bench->add_option("--methods", bn.methods);
    c_bench->add_option("--params", bn.params)->check(CLI::PositiveNumber);
    c_bench->add_option("--model-ldl", bn.model_ldl);
    c_bench->add_option("--model-none", bn.model_none);
    c_bench->add_option("--model-auc", bn.model_auc);
    c_bench->add_option("--train-epochs", bn.train_epochs, "Train SLR models in process instead of loading");
    c_bench->add_option("--arch", bn.arch, "Architecture for --train-epochs");
    c_bench->add_option("--out-dir", bn.out_dir);
    c_bench->add_option("--format", bn.format)->check(CLI::IsMember({"csv", "json"}));

    SynthArgs syn;
    auto* c_syn = app.add_subcommand("synth", "Write synthetic observations");
    add_common(c_syn, syn.common);
    c_syn->add_option("--gamma", syn.gamma, "Forward response x^gamma");
    c_syn->add_option("--curve", syn.curve, "Database curve id");
    c_syn->add_option("--noccp", syn.noccp)->check(CLI::PositiveNumber);
    c_syn->add_option("--exposures", syn.exposures);
    c_syn->add_option("--noise", syn.noise)->check(CLI::NonNegativeNumber);
    c_syn->add_option("--camera-id", syn.camera_id);
    c_syn->add_option("--out", syn.out);
    c_syn->add_option("--truth-out", syn.truth_out, "Write the forward truth curve (DoRF format)");

    SurrogateArgs sur;
    auto* c_sur = app.add_subcommand("surrogate", "Write the surrogate database in DoRF format");
    c_sur->add_option("--seed", sur.seed);
    c_sur->add_option("--count", sur.count)->check(CLI::PositiveNumber);
    c_sur->add_option("--out", sur.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (c_train->parsed()) return cmd_train(train);
        if (c_nas->parsed()) return cmd_nas(nas, nas_epochs->count() > 0, nas_top_m->count() > 0);
        if (c_fit->parsed()) return cmd_fit(fit);
        if (c_cal->parsed()) return cmd_calibrate(cal);
        if (c_bench->parsed()) return cmd_bench(bn);
        if (c_syn->parsed()) return cmd_synth(syn);
        if (c_sur->parsed()) return cmd_surrogate(sur);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ae::TrainingDiverged& e) {
        std::cerr << "error: training diverged at epoch " << e.epoch() << ": " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
