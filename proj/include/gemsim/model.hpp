#ifndef GEMSIM_MODEL_HPP
#define GEMSIM_MODEL_HPP

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace gemsim {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// All angular frequencies are rad/us, all times us.
inline double rad_per_us_from_khz(double f_khz) { return two_pi * f_khz * 1e-3; }
inline double rad_per_us_from_mhz(double f_mhz) { return two_pi * f_mhz; }

struct PhysicsParams {
    double coupling_g = 0.0;     // atom-light coupling g, rad/us
    double linear_density = 0.0; // N*L folded into one number, rad/us
    double detuning_delta = 0.0; // one-photon detuning, rad/us
    double gamma_12 = 0.0;       // intrinsic ground-state decoherence, rad/us
    double kappa_sc = 0.0;       // control-scattering coefficient, gamma += kappa_sc*rabi^2

    // Raman couplings C = g*Omega_c/Delta and D = NL*Omega_c/Delta.
    double raman_c(double rabi) const { return coupling_g * rabi / detuning_delta; }
    double raman_d(double rabi) const { return linear_density * rabi / detuning_delta; }
    double decoherence_rate(double rabi) const { return gamma_12 + kappa_sc * rabi * rabi; }
};

double effective_coupling(const PhysicsParams& physics, double rabi);

struct GradientSegment {
    double start = 0.0;         // us
    double end = 0.0;           // us
    double slope = 0.0;         // rad/us per unit z
    double offset = 0.0;        // rad/us
    double ramp_duration = 0.0; // linear transition into this segment, us
};

// delta(z,t) = slope(t)*(z - 1/2) + offset(t), z in [0,1].
struct GradientSchedule {
    std::vector<GradientSegment> segments;

    void slope_offset_at(double t, double& slope, double& offset) const;
    double detuning(double z, double t) const {
        double s, o;
        slope_offset_at(t, s, o);
        return s * (z - 0.5) + o;
    }
    // Index of the first segment whose slope sign differs from its
    // predecessor's, or -1 when the gradient is never flipped.
    int flip_segment_index() const;
};

struct ControlSegment {
    double start = 0.0;
    double end = 0.0;
    double rabi = 0.0; // Omega_c, rad/us
    double ramp_duration = 0.0;
};

struct ControlSchedule {
    std::vector<ControlSegment> segments;
    double rabi_at(double t) const;
};

struct Pulse {
    double center = 0.0;         // us
    double e2_width = 0.0;       // full width of |E|^2 between 1/e^2 points, us
    double peak_amplitude = 1.0; // arbitrary field units
    double carrier_offset = 0.0; // rad/us relative to two-photon resonance
};

struct PulseTrain {
    std::vector<Pulse> pulses;

    std::complex<double> field_at(double t) const;
    double total_energy() const; // analytic, sum of per-pulse energies (incoherent)
};

struct ExperimentConfig {
    PhysicsParams physics;
    GradientSchedule gradient;
    ControlSchedule control;
    PulseTrain input;
    int nz = 256;
    double dt = 0.01;     // us
    double t_end = 0.0;   // us
    double flip_time = 0.0; // the instant the analysis treats as T, us
    std::vector<double> snapshot_times;
};

struct EnergyLedger {
    double input_energy = 0.0;
    double transmitted_energy_before_flip = 0.0;
    double echo_energy_after_flip = 0.0;
    double stored_weighted_norm = 0.0; // (D/C) * int |sigma(z,t_end)|^2 dz
};

struct CoherenceSnapshot {
    double time = 0.0;
    std::vector<std::complex<double>> sigma;
};

struct SimulationResult {
    std::vector<double> time_grid;
    std::vector<double> z_grid;
    std::vector<std::complex<double>> output_field; // E(z=1, t)
    std::vector<std::complex<double>> input_field;  // E(z=0, t)
    std::vector<CoherenceSnapshot> coherence_snapshots;
    EnergyLedger energy_ledger;
    // row k = E(z, t_k); filled only when requested
    std::vector<std::vector<std::complex<double>>> full_field;
};

struct Violation {
    std::string code;
    std::string message;
};

// Total: reports every violated invariant, never throws on finite input.
std::vector<Violation> validate(const ExperimentConfig& config);

// Fraction of a Gaussian pulse's energy lying within [t0, t1].
double pulse_energy_fraction(const Pulse& p, double t0, double t1);

} // namespace gemsim

#endif
