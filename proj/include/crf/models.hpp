#pragma once

// Classical parametric response models: gamma, polynomial, generalized
// gamma (GGCM) and the PCA-based empirical model (EMoR).

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crf/curves.hpp"

namespace crf {

struct GammaModel {
    double gamma = 1.0;
};

/// f(x) = sum_{i=1..M} w_i x^i. No constant term, so f(0) = 0.
struct PolynomialModel {
    std::vector<double> coefficients;
};

/// f(x) = x^{P(x)}, P(x) = sum_{i=0..N} w_i x^i.
struct GgcmModel {
    std::vector<double> coefficients;
};

struct EmorBasis {
    std::vector<double> mean;                   // f0, length N
    std::vector<std::vector<double>> components;  // K orthonormal rows of length N
    std::vector<double> eigenvalues;            // K leading eigenvalues, descending
    std::vector<double> spectrum;               // every eigenvalue of the centred data

    std::size_t size() const noexcept { return components.size(); }
    std::size_t samples() const noexcept { return mean.size(); }
    /// Share of total energy held by the first `k` eigenvalues.
    double energy_fraction(std::size_t k) const;
};

struct EmorModel {
    std::shared_ptr<const EmorBasis> basis;
    std::vector<double> coefficients;
};

double eval_gamma(const GammaModel& model, double x);
double eval_polynomial(const PolynomialModel& model, double x);
/// x = 0 evaluates to the limit 0 when P(0) > 0 and throws DomainError otherwise.
double eval_ggcm(const GgcmModel& model, double x);

EmorBasis build_emor_basis(std::span<const ResponseCurve> curves, std::size_t k);

EmorModel emor_project(const ResponseCurve& curve, std::shared_ptr<const EmorBasis> basis,
                       std::size_t k);
EmorModel emor_project(std::span<const double> samples, std::shared_ptr<const EmorBasis> basis,
                       std::size_t k);
/// f0 + sum c_i h_i before normalization.
std::vector<double> emor_combine(const EmorModel& model);
ResponseCurve emor_reconstruct(const EmorModel& model);

void write_emor_basis_csv(std::ostream& out, const EmorBasis& basis);
void write_emor_eigenvalues_csv(std::ostream& out, const EmorBasis& basis);

// Fitting -------------------------------------------------------------------

enum class Family { gamma, polynomial, ggcm, emor };

std::string_view family_name(Family family) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;

struct FitResult {
    Family family = Family::gamma;
    std::vector<double> parameters;
    double rmse = 0.0;
    std::size_t evaluations = 0;
    bool converged = true;
};

struct FitOptions {
    double gamma_lo = 0.05;
    double gamma_hi = 20.0;
    double gamma_tolerance = 1e-10;  // on log(gamma)
    std::size_t ggcm_max_iterations = 2000;
    double ggcm_tolerance = 1e-10;
    /// Throw ConvergenceError (carrying the best parameters) instead of
    /// returning a result with converged == false.
    bool strict = false;
};

/// Fits `family` with `n_params` parameters to the curve. EMoR needs a basis.
FitResult fit_model(Family family, const ResponseCurve& curve, std::size_t n_params,
                    const EmorBasis* basis = nullptr, const FitOptions& options = {});

/// Curve of a fitted model sampled on an N-point grid (no normalization).
std::vector<double> sample_fit(const FitResult& fit, std::size_t n, const EmorBasis* basis = nullptr);

}  // namespace crf
