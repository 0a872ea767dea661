#ifndef GEMSIM_SCENARIO_HPP
#define GEMSIM_SCENARIO_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "gemsim/model.hpp"

namespace gemsim {

struct ScenarioError {
    int line = 0; // 0 when the error is not tied to a line
    std::string message;
};

class ScenarioParseError : public std::runtime_error {
public:
    explicit ScenarioParseError(std::vector<ScenarioError> errors);
    std::vector<ScenarioError> errors;
};

// Declarative description of one run, as read from a scenario file.
// All frequencies rad/us, all times us.
struct ScenarioSpec {
    // [grid]
    int nz = 256;
    double dt = 0.0;
    double t_end = 0.0;
    std::vector<double> snapshot_times;
    // [physics]
    double coupling_g = 0.0;
    double density_nl = 0.0;
    double detuning = 0.0;
    double gamma_12 = 0.0;
    double kappa_sc = 0.0;
    // [gradient]
    double slope = 0.0;
    double offset = 0.0;
    double flip_time = 0.0;
    double ramp = 0.0;
    // [control]
    double rabi = 0.0;
    bool off_during_storage = false;
    double reenable_time = -1.0;
    // [pulses]
    int pulse_count = 1;
    double center = 0.0;
    double width = 0.0;
    double amplitude = 1.0;
    double spacing = 0.0;
    double carrier_offset = 0.0;
    // [recall]
    double recall_slope_ratio = 1.0;
    double recall_offset = 0.0;
    // [analysis]
    std::string kind = "auto"; // storage_recall, multi_pulse, frequency_shift, bandwidth_scaled
    double scan_min = 0.0;
    double scan_max = 0.0;
    int scan_points = 0;
    double lo_offset = 0.0;
    // [output]
    bool emit_spectrum = false;
    bool emit_snapshots = false;

    bool operator==(const ScenarioSpec&) const = default;

    ExperimentConfig build_config() const;
    // "auto" resolved from the fields: pulse train, recall offset, slope ratio.
    std::string resolved_kind() const;
};

// Parses the scenario grammar ([section] headers, key = value lines,
// '#' comments, kHz/MHz/us suffixes, 2pi* prefix). Throws
// ScenarioParseError carrying every detected problem.
ScenarioSpec parse_scenario(const std::string& text);

// Canonical text form; parse_scenario(render_scenario(s)) == s.
std::string render_scenario(const ScenarioSpec& spec);

} // namespace gemsim

#endif
