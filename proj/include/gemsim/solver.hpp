#ifndef GEMSIM_SOLVER_HPP
#define GEMSIM_SOLVER_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gemsim/model.hpp"

namespace gemsim {

struct SolverOptions {
    enum class ZIntegration { trapezoid };
    enum class TimeStepper { rk4 };

    ZIntegration z_integration = ZIntegration::trapezoid;
    TimeStepper time_stepper = TimeStepper::rk4;
    bool store_full_field = false;
    // Optional preloaded coherence sigma(z, t=0); empty means zeros.
    std::vector<std::complex<double>> initial_coherence;
};

// Thrown when a non-finite value appears during time stepping.
class SolverAbort : public std::runtime_error {
public:
    SolverAbort(int z_index, int t_index, const std::string& what)
        : std::runtime_error(what), z_index(z_index), t_index(t_index) {}
    int z_index;
    int t_index;
};

// Integrates the coherence/field system
//   d sigma/dt = -(gamma + i delta(z,t)) sigma - i C(t) E
//   dE/dz      = -i D(t) sigma,  E(0,t) = E_in(t)
// with the field slaved to the coherence (no dE/dt term).
// Throws std::invalid_argument when validate(config) is non-empty.
SimulationResult integrate(const ExperimentConfig& config,
                           const SolverOptions& options = {});

// Intensity transmission |E(1)/E(0)|^2 of a cw input at detuning delta_bar
// through the gradient-broadened Raman line, from the sigma-dot = 0 steady
// state of the propagation equations.
double steady_state_transmission(const PhysicsParams& physics, double rabi,
                                 double slope, double two_photon_detuning);

// A = 1 - T at line center; A^2 bounds the recall efficiency.
double absorbed_fraction(const PhysicsParams& physics, double rabi, double slope);

} // namespace gemsim

#endif
