#ifndef GEMSIM_ANALYSIS_HPP
#define GEMSIM_ANALYSIS_HPP

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace gemsim {

// eta(t) = eta0 * exp(-(t/tau_d)^2) * exp(-t/tau0)
struct DecayModel {
    double eta0 = 1.0;  // peak efficiency, (0, 1]
    double tau_d = 1.0; // diffusion time, us
    double tau0 = 1.0;  // ground-state decoherence time, us
};

double decay_efficiency(const DecayModel& model, double t);

struct FitDiagnostics {
    double residual_norm = 0.0;
    // 1-sigma estimates for (eta0, tau_d, tau0) from the residual curvature;
    // zero for clamped parameters.
    std::array<double, 3> confidence{};
    int iterations = 0;
    bool converged = false;
};

struct FitResult {
    DecayModel model;
    FitDiagnostics diagnostics;
};

// Least-squares fit of DecayModel to (t, eta) samples by damped Gauss-Newton,
// seeded from a quadratic regression in log space. Throws std::invalid_argument
// on degenerate data and std::runtime_error (with the best iterate in the
// message) on non-convergence.
FitResult fit_decay(const std::vector<std::pair<double, double>>& points,
                    std::optional<double> fixed_tau_d = std::nullopt);

struct FidelityPoint {
    double nbar = 0.0;  // mean photon number, >= 0
    double eta_m = 0.0; // memory efficiency, [0, 1]
};

// 1 / (1 + nbar (1 - sqrt(eta_m)))
double fidelity_bound(const FidelityPoint& point);

// Coherent-state measure-and-prepare benchmark (nbar + 1) / (2 nbar + 1).
double classical_benchmark(double nbar);

// Largest nbar for which the memory beats the benchmark, by bisection to
// 1e-6 relative precision. Returns +infinity ("unbounded") when eta_m = 1.
double quantum_capacity(const DecayModel& model, double t,
                        const std::function<double(double)>& benchmark = classical_benchmark);

// Closed form (1 - x)/x with x = 1 - sqrt(eta_m), for the default benchmark.
double quantum_capacity_closed_form(double eta_m);

} // namespace gemsim

#endif
