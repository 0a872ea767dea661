#include "gemsim/solver.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gemsim {

namespace {

using cplx = std::complex<double>;

double trapezoid_power(const std::vector<double>& t,
                       const std::vector<cplx>& field,
                       double t0, double t1)
{
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (t[k] < t0 || t[k + 1] > t1) {
            continue;
        }
        double p0 = std::norm(field[k]);
        double p1 = std::norm(field[k + 1]);
        sum += 0.5 * (p0 + p1) * (t[k + 1] - t[k]);
    }
    return sum;
}

struct StepWorkspace {
    std::vector<cplx> field;
    std::vector<cplx> k1, k2, k3, k4, stage;
};

// Field slaved to the coherence: march E(z) from the boundary by
// trapezoidal integration of dE/dz = -i D sigma.
void slave_field(const std::vector<cplx>& sigma, double dz, double coupling_d,
                 cplx boundary, std::vector<cplx>& field)
{
    const std::size_t nz = sigma.size();
    field[0] = boundary;
    const cplx factor(0.0, -0.5 * coupling_d * dz);
    for (std::size_t j = 0; j + 1 < nz; ++j) {
        field[j + 1] = field[j] + factor * (sigma[j] + sigma[j + 1]);
    }
}

} // namespace

SimulationResult integrate(const ExperimentConfig& config, const SolverOptions& options)
{
    std::vector<Violation> violations = validate(config);
    if (!violations.empty()) {
        std::string what = "invalid config:";
        for (const Violation& v : violations) {
            what += " [" + v.code + "] " + v.message + ";";
        }
        throw std::invalid_argument(what);
    }

    const int nz = config.nz;
    const double dz = 1.0 / (nz - 1);
    const double dt = config.dt;
    const int nt = static_cast<int>(std::llround(config.t_end / dt)) + 1;

    SimulationResult result;
    result.time_grid.resize(nt);
    result.z_grid.resize(nz);
    for (int j = 0; j < nz; ++j) {
        result.z_grid[j] = j * dz;
    }
    result.output_field.resize(nt);
    result.input_field.resize(nt);
    if (options.store_full_field) {
        result.full_field.assign(nt, std::vector<cplx>(nz));
    }

    std::vector<cplx> sigma(nz, cplx(0.0, 0.0));
    if (!options.initial_coherence.empty()) {
        if (static_cast<int>(options.initial_coherence.size()) != nz) {
            throw std::invalid_argument("initial coherence size does not match nz");
        }
        sigma = options.initial_coherence;
    }

    // Snapshot bookkeeping: map requested times to nearest step indices.
    std::vector<std::pair<int, double>> snapshot_steps;
    for (double ts : config.snapshot_times) {
        int k = static_cast<int>(std::llround(ts / dt));
        snapshot_steps.emplace_back(std::clamp(k, 0, nt - 1), ts);
    }

    StepWorkspace ws;
    ws.field.resize(nz);
    ws.k1.resize(nz);
    ws.k2.resize(nz);
    ws.k3.resize(nz);
    ws.k4.resize(nz);
    ws.stage.resize(nz);

    const PhysicsParams& ph = config.physics;

    auto rhs = [&](double t, const std::vector<cplx>& sig, std::vector<cplx>& dsig) {
        double rabi = config.control.rabi_at(t);
        double c = ph.raman_c(rabi);
        double d = ph.raman_d(rabi);
        double gamma = ph.decoherence_rate(rabi);
        double slope, offset;
        config.gradient.slope_offset_at(t, slope, offset);
        slave_field(sig, dz, d, config.input.field_at(t), ws.field);
        for (int j = 0; j < nz; ++j) {
            double delta = slope * (j * dz - 0.5) + offset;
            dsig[j] = -cplx(gamma, delta) * sig[j] - cplx(0.0, c) * ws.field[j];
        }
    };

    for (int k = 0; k < nt; ++k) {
        double t = k * dt;
        result.time_grid[k] = t;

        // Record the slaved field at the current step.
        {
            double rabi = config.control.rabi_at(t);
            slave_field(sigma, dz, ph.raman_d(rabi), config.input.field_at(t), ws.field);
            result.input_field[k] = ws.field[0];
            result.output_field[k] = ws.field[nz - 1];
            if (options.store_full_field) {
                result.full_field[k] = ws.field;
            }
        }

        for (const auto& [step, ts] : snapshot_steps) {
            if (step == k) {
                result.coherence_snapshots.push_back({ts, sigma});
            }
        }

        if (k == nt - 1) {
            break;
        }

        rhs(t, sigma, ws.k1);
        for (int j = 0; j < nz; ++j) ws.stage[j] = sigma[j] + 0.5 * dt * ws.k1[j];
        rhs(t + 0.5 * dt, ws.stage, ws.k2);
        for (int j = 0; j < nz; ++j) ws.stage[j] = sigma[j] + 0.5 * dt * ws.k2[j];
        rhs(t + 0.5 * dt, ws.stage, ws.k3);
        for (int j = 0; j < nz; ++j) ws.stage[j] = sigma[j] + dt * ws.k3[j];
        rhs(t + dt, ws.stage, ws.k4);
        for (int j = 0; j < nz; ++j) {
            sigma[j] += (dt / 6.0) *
                        (ws.k1[j] + 2.0 * ws.k2[j] + 2.0 * ws.k3[j] + ws.k4[j]);
            if (!std::isfinite(sigma[j].real()) || !std::isfinite(sigma[j].imag())) {
                throw SolverAbort(j, k + 1,
                                  "non-finite coherence at z index " + std::to_string(j) +
                                      ", t index " + std::to_string(k + 1));
            }
        }
    }

    // Energy ledger. The echo window opens once the flip ramp completes.
    double echo_start = config.flip_time;
    for (const GradientSegment& s : config.gradient.segments) {
        if (std::abs(s.start - config.flip_time) <= 1e-9) {
            echo_start = s.start + s.ramp_duration;
            break;
        }
    }
    result.energy_ledger.input_energy =
        trapezoid_power(result.time_grid, result.input_field, 0.0, config.t_end);
    result.energy_ledger.transmitted_energy_before_flip =
        trapezoid_power(result.time_grid, result.output_field, 0.0, config.flip_time);
    result.energy_ledger.echo_energy_after_flip =
        trapezoid_power(result.time_grid, result.output_field, echo_start, config.t_end);

    double sigma_norm = 0.0;
    for (int j = 0; j + 1 < nz; ++j) {
        sigma_norm += 0.5 * (std::norm(sigma[j]) + std::norm(sigma[j + 1])) * dz;
    }
    double ratio_dc = ph.coupling_g > 0.0 ? ph.linear_density / ph.coupling_g : 0.0;
    result.energy_ledger.stored_weighted_norm = ratio_dc * sigma_norm;

    return result;
}

double steady_state_transmission(const PhysicsParams& physics, double rabi,
                                 double slope, double two_photon_detuning)
{
    double c = physics.raman_c(rabi);
    double d = physics.raman_d(rabi);
    double cd = c * d;
    double gamma = physics.gamma_12;

    if (cd == 0.0) {
        return 1.0;
    }
    if (gamma <= 0.0) {
        if (slope == 0.0) {
            if (two_photon_detuning == 0.0) {
                throw std::domain_error("undamped resonance");
            }
            return 1.0;
        }
        // gamma -> 0 limit: the Lorentzian collapses to a delta function.
        if (std::abs(two_photon_detuning) < 0.5 * std::abs(slope)) {
            return std::exp(-two_pi * cd / std::abs(slope));
        }
        return 1.0;
    }

    auto integrand = [&](double z) {
        double delta = slope * (z - 0.5);
        double mismatch = two_photon_detuning - delta;
        return gamma / (gamma * gamma + mismatch * mismatch);
    };
    double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, 1.0, 15, 1e-12);
    return std::exp(-2.0 * cd * integral);
}

double absorbed_fraction(const PhysicsParams& physics, double rabi, double slope)
{
    return 1.0 - steady_state_transmission(physics, rabi, slope, 0.0);
}

} // namespace gemsim
