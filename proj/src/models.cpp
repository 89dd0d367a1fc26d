#include "crf/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "crf/error.hpp"
#include "crf/optimize.hpp"
#include "crf/simd/kernels.hpp"

namespace crf {

namespace {

double horner(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double rmse_of(std::span<const double> model, std::span<const double> target) {
    return std::sqrt(simd::sum_sq_diff(model, target) / static_cast<double>(target.size()));
}

}  // namespace

double eval_gamma(const GammaModel& model, double x) { return std::pow(x, model.gamma); }

double eval_polynomial(const PolynomialModel& model, double x) {
    return x * horner(model.coefficients, x);
}

double eval_ggcm(const GgcmModel& model, double x) {
    const double exponent = horner(model.coefficients, x);
    if (x == 0.0) {
        if (exponent > 0.0) return 0.0;
        throw DomainError("eval_ggcm: non-positive exponent at x = 0");
    }
    return std::pow(x, exponent);
}

// ---------------------------------------------------------------------------

double EmorBasis::energy_fraction(std::size_t k) const {
    double total = 0.0;
    for (double e : spectrum) total += e;
    if (total <= 0.0) return 1.0;
    double head = 0.0;
    for (std::size_t i = 0; i < std::min(k, spectrum.size()); ++i) head += spectrum[i];
    return head / total;
}

EmorBasis build_emor_basis(std::span<const ResponseCurve> curves, std::size_t k) {
    if (curves.size() < 2) throw DomainError("build_emor_basis: need at least 2 curves");
    const std::size_t n = curves.front().size();
    for (const ResponseCurve& c : curves) {
        if (c.size() != n) throw DomainError("build_emor_basis: curves differ in length");
    }
    const std::size_t count = curves.size();
    if (k > std::min(n, count)) {
        throw DomainError("build_emor_basis: K exceeds min(samples, curves)");
    }

    EmorBasis basis;
    basis.mean.assign(n, 0.0);
    for (const ResponseCurve& c : curves) {
        for (std::size_t i = 0; i < n; ++i) basis.mean[i] += c[i];
    }
    for (double& m : basis.mean) m /= static_cast<double>(count);

    Eigen::MatrixXd centered(count, n);
    for (std::size_t r = 0; r < count; ++r) {
        for (std::size_t i = 0; i < n; ++i) centered(r, i) = curves[r][i] - basis.mean[i];
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const Eigen::MatrixXd& v = svd.matrixV();

    const double denom = static_cast<double>(count - 1);
    basis.spectrum.resize(static_cast<std::size_t>(sv.size()));
    for (Eigen::Index i = 0; i < sv.size(); ++i) basis.spectrum[i] = sv(i) * sv(i) / denom;

    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> h(n);
        Eigen::Index arg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            if (std::abs(h[i]) > std::abs(h[arg])) arg = static_cast<Eigen::Index>(i);
        }
        if (h[arg] < 0.0) {
            for (double& x : h) x = -x;
        }
        basis.components.push_back(std::move(h));
        basis.eigenvalues.push_back(basis.spectrum[c]);
    }
    return basis;
}

EmorModel emor_project(std::span<const double> samples, std::shared_ptr<const EmorBasis> basis,
                       std::size_t k) {
    if (!basis) throw DomainError("emor_project: missing basis");
    if (k > basis->size()) throw DomainError("emor_project: k exceeds basis size");
    if (samples.size() != basis->samples()) throw DomainError("emor_project: length mismatch");
    std::vector<double> centered(samples.begin(), samples.end());
    for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= basis->mean[i];
    EmorModel model{basis, std::vector<double>(k)};
    for (std::size_t c = 0; c < k; ++c) model.coefficients[c] = simd::dot(basis->components[c], centered);
    return model;
}

EmorModel emor_project(const ResponseCurve& curve, std::shared_ptr<const EmorBasis> basis,
                       std::size_t k) {
    return emor_project(curve.samples(), std::move(basis), k);
}

std::vector<double> emor_combine(const EmorModel& model) {
    if (!model.basis) throw DomainError("emor model without basis");
    if (model.coefficients.size() > model.basis->size()) {
        throw DomainError("emor model has more coefficients than basis components");
    }
    std::vector<double> out = model.basis->mean;
    for (std::size_t c = 0; c < model.coefficients.size(); ++c) {
        simd::axpy(model.coefficients[c], model.basis->components[c], out);
    }
    return out;
}

ResponseCurve emor_reconstruct(const EmorModel& model) { return normalize(emor_combine(model), "emor"); }

void write_emor_basis_csv(std::ostream& out, const EmorBasis& basis) {
    out << "f0";
    for (std::size_t c = 0; c < basis.size(); ++c) out << ",h" << (c + 1);
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < basis.samples(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", basis.mean[i]);
        out << buf;
        for (const auto& h : basis.components) {
            std::snprintf(buf, sizeof buf, "%.17g", h[i]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_emor_eigenvalues_csv(std::ostream& out, const EmorBasis& basis) {
    out << "index,eigenvalue,cumulative_energy\n";
    char buf[80];
    for (std::size_t i = 0; i < basis.spectrum.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i + 1, basis.spectrum[i],
                      basis.energy_fraction(i + 1));
        out << buf;
    }
}

// ---------------------------------------------------------------------------

std::string_view family_name(Family family) noexcept {
    switch (family) {
        case Family::gamma: return "gamma";
        case Family::polynomial: return "polynomial";
        case Family::ggcm: return "ggcm";
        case Family::emor: return "emor";
    }
    return "unknown";
}

std::optional<Family> parse_family(std::string_view name) noexcept {
    if (name == "gamma") return Family::gamma;
    if (name == "polynomial" || name == "poly") return Family::polynomial;
    if (name == "ggcm") return Family::ggcm;
    if (name == "emor") return Family::emor;
    return std::nullopt;
}

namespace {

FitResult fit_gamma(const ResponseCurve& curve, const FitOptions& options) {
    const std::size_t n = curve.size();
    const SampleGrid grid(n);
    std::vector<double> log_u(n);
    for (std::size_t i = 1; i < n; ++i) log_u[i] = std::log(grid.position(i));
    std::vector<double> model(n, 0.0);
    auto objective = [&](double log_gamma) {
        const double g = std::exp(log_gamma);
        for (std::size_t i = 1; i < n; ++i) model[i] = std::exp(g * log_u[i]);
        return rmse_of(model, curve.samples());
    };
    const opt::Result1d r = opt::golden_section(objective, std::log(options.gamma_lo),
                                                std::log(options.gamma_hi), options.gamma_tolerance);
    FitResult fit{Family::gamma, {std::exp(r.x)}, r.value, r.evaluations, r.converged};
    return fit;
}

FitResult fit_polynomial(const ResponseCurve& curve, std::size_t m) {
    const std::size_t n = curve.size();
    const SampleGrid grid(n);
    Eigen::MatrixXd design(n, m);
    Eigen::VectorXd target(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = grid.position(i);
        for (std::size_t j = 0; j < m; ++j) {
            design(i, j) = p;
            p *= grid.position(i);
        }
        target(i) = curve[i];
    }
    const Eigen::VectorXd w = design.colPivHouseholderQr().solve(target);
    FitResult fit{Family::polynomial, std::vector<double>(w.data(), w.data() + m), 0.0, 1, true};
    const PolynomialModel model{fit.parameters};
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = eval_polynomial(model, grid.position(i));
    fit.rmse = rmse_of(values, curve.samples());
    return fit;
}

FitResult fit_ggcm(const ResponseCurve& curve, std::size_t n_params, const FitOptions& options) {
    const std::size_t n = curve.size();
    const SampleGrid grid(n);
    std::vector<double> log_u(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = grid.position(i);
        log_u[i] = i == 0 ? 0.0 : std::log(u[i]);
    }
    std::vector<double> model(n, 0.0);
    auto fill = [&](const std::vector<double>& w) {
        for (std::size_t i = 1; i < n; ++i) model[i] = std::exp(horner(w, u[i]) * log_u[i]);
    };
    // x = 0 is excluded: its residual is identically zero whenever P(0) > 0.
    auto objective = [&](const std::vector<double>& w) {
        fill(w);
        return std::sqrt(simd::sum_sq_diff(std::span(model).subspan(1), curve.samples().subspan(1)) /
                         static_cast<double>(n));
    };
    std::vector<double> x0(n_params, 0.0);
    x0[0] = 1.0;
    opt::NelderMeadOptions nm;
    nm.max_iterations = options.ggcm_max_iterations;
    nm.tolerance = options.ggcm_tolerance;
    opt::ResultNd r = opt::nelder_mead(objective, x0, nm);
    if (!r.converged) {
        // One restart from the best vertex with a fresh simplex.
        opt::ResultNd again = opt::nelder_mead(objective, r.x, nm);
        again.evaluations += r.evaluations;
        if (again.value <= r.value) r = std::move(again);
        else r.evaluations = again.evaluations;
    }
    FitResult fit{Family::ggcm, r.x, 0.0, r.evaluations, r.converged};
    const bool origin_ok = horner(r.x, 0.0) > 0.0;
    fill(r.x);
    model[0] = origin_ok ? 0.0 : 1.0;
    fit.rmse = rmse_of(model, curve.samples());
    if (!origin_ok) fit.converged = false;
    return fit;
}

FitResult fit_emor(const ResponseCurve& curve, std::size_t k, const EmorBasis& basis) {
    auto shared = std::shared_ptr<const EmorBasis>(&basis, [](const EmorBasis*) {});
    const EmorModel model = emor_project(curve, shared, k);
    // error of the projection itself; the clamp in emor_reconstruct would break nesting in k
    const std::vector<double> rec = emor_combine(model);
    return FitResult{Family::emor, model.coefficients, rmse_of(rec, curve.samples()), 1, true};
}

}  // namespace

FitResult fit_model(Family family, const ResponseCurve& curve, std::size_t n_params,
                    const EmorBasis* basis, const FitOptions& options) {
    if (n_params < 1) throw DomainError("fit_model: n_params must be >= 1");
    FitResult fit;
    switch (family) {
        case Family::gamma:
            if (n_params != 1) throw DomainError("fit_model: gamma has exactly one parameter");
            fit = fit_gamma(curve, options);
            break;
        case Family::polynomial: fit = fit_polynomial(curve, n_params); break;
        case Family::ggcm: fit = fit_ggcm(curve, n_params, options); break;
        case Family::emor:
            if (basis == nullptr) throw DomainError("fit_model: emor needs a basis");
            fit = fit_emor(curve, n_params, *basis);
            break;
    }
    for (double p : fit.parameters) {
        if (!std::isfinite(p)) fit.converged = false;
    }
    if (!fit.converged && options.strict) {
        throw ConvergenceError("fit_model: " + std::string(family_name(family)) + " fit did not converge",
                               fit.parameters);
    }
    return fit;
}

std::vector<double> sample_fit(const FitResult& fit, std::size_t n, const EmorBasis* basis) {
    const SampleGrid grid(n);
    std::vector<double> out(n);
    switch (fit.family) {
        case Family::gamma:
            for (std::size_t i = 0; i < n; ++i) out[i] = eval_gamma({fit.parameters[0]}, grid.position(i));
            break;
        case Family::polynomial:
            for (std::size_t i = 0; i < n; ++i) out[i] = eval_polynomial({fit.parameters}, grid.position(i));
            break;
        case Family::ggcm: {
            const GgcmModel m{fit.parameters};
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = i == 0 && horner(m.coefficients, 0.0) <= 0.0 ? 1.0 : eval_ggcm(m, grid.position(i));
            }
            break;
        }
        case Family::emor: {
            if (basis == nullptr) throw DomainError("sample_fit: emor needs a basis");
            auto shared = std::shared_ptr<const EmorBasis>(basis, [](const EmorBasis*) {});
            out = emor_reconstruct(EmorModel{shared, fit.parameters}).values();
            break;
        }
    }
    return out;
}

}  // namespace crf
