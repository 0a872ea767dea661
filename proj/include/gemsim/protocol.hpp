#ifndef GEMSIM_PROTOCOL_HPP
#define GEMSIM_PROTOCOL_HPP

#include <complex>
#include <utility>
#include <vector>

#include "gemsim/model.hpp"
#include "gemsim/solver.hpp"

namespace gemsim {

struct EchoReport {
    double efficiency = 0.0;            // echo energy / input energy
    double echo_center = 0.0;           // us
    double echo_e2_width = 0.0;         // us
    double storage_time_peak_to_peak = 0.0; // input peak to echo peak, us
    double spectral_centroid = 0.0;     // of the echo, rad/us
    double input_spectral_centroid = 0.0;
    double dbp = 0.0;                   // delay-bandwidth product
    std::vector<double> echo_order;     // detected echo centers, ascending in time
    bool echo_found = false;            // peak above 1e-6 of input peak power
    bool all_echoes_found = true;       // multi-pulse runs only
    int expected_pulses = 1;
    double input_center = 0.0;          // us, first pulse center
    double input_e2_width = 0.0;        // us
    double echo_window_start = 0.0;     // us
};

// Echo-window energy over total input energy, trapezoid rule.
// Throws std::domain_error on zero input energy.
double recall_efficiency(const std::vector<double>& time_grid,
                         const std::vector<std::complex<double>>& input,
                         const std::vector<std::complex<double>>& output,
                         double window_start, double window_end);

// Power-weighted mean frequency of the DFT of the windowed field, rad/us.
double spectral_centroid(const std::vector<double>& time_grid,
                         const std::vector<std::complex<double>>& field,
                         double window_start, double window_end);

// (frequency rad/us, spectral power) pairs of the windowed field.
std::vector<std::pair<double, double>>
power_spectrum(const std::vector<double>& time_grid,
               const std::vector<std::complex<double>>& field,
               double window_start, double window_end);

// Observable extraction shared by all scenario runners.
EchoReport analyze_run(const ExperimentConfig& config, const SimulationResult& result,
                       int expected_pulses = 0);

EchoReport run_storage_recall(const ExperimentConfig& config,
                              bool control_off_during_storage = false,
                              double control_reenable_time = -1.0);

// Recall segment slope scaled to -r times the storage slope.
EchoReport run_bandwidth_scaled_recall(const ExperimentConfig& config, double ratio);

// Offset applied to the recall gradient segment only.
EchoReport run_frequency_shift(const ExperimentConfig& config, double offset);

EchoReport run_multi_pulse(const ExperimentConfig& config, int pulse_count);

// Throws std::domain_error when the report carries no echo.
double delay_bandwidth_product(const EchoReport& report);

// |E(t) + A_LO exp(i lo_offset t)|^2 with A_LO = max |E|.
// Throws std::domain_error when lo_offset is unresolvable on the grid.
std::vector<double> heterodyne_beat(const std::vector<double>& time_grid,
                                    const std::vector<std::complex<double>>& echo,
                                    double lo_offset);

std::vector<std::pair<double, double>>
control_power_sweep(const ExperimentConfig& config, const std::vector<double>& rabi_values);

// Schedule editing helpers used by the runners and the CLI.
ExperimentConfig with_recall_slope_ratio(const ExperimentConfig& config, double ratio);
ExperimentConfig with_recall_offset(const ExperimentConfig& config, double offset);
ExperimentConfig with_control_rabi(const ExperimentConfig& config, double rabi);
ExperimentConfig with_control_off_window(const ExperimentConfig& config,
                                         double off_from, double off_until);

} // namespace gemsim

#endif
