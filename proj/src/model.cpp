#include "gemsim/model.hpp"

#include <algorithm>
#include <cmath>

namespace gemsim {

double effective_coupling(const PhysicsParams& physics, double rabi)
{
    return physics.coupling_g * rabi / physics.detuning_delta;
}

namespace {

// Locate the segment containing t; t outside the covered window clamps
// to the first/last segment.
template <class Segment>
std::size_t segment_index(const std::vector<Segment>& segments, double t)
{
    if (segments.empty()) {
        return 0;
    }
    std::size_t lo = 0, hi = segments.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (t >= segments[mid].start) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

// Linear ramp factor in [0,1] for the transition into segment i.
template <class Segment>
double ramp_fraction(const std::vector<Segment>& segments, std::size_t i, double t)
{
    if (i == 0 || segments[i].ramp_duration <= 0.0) {
        return 1.0;
    }
    double x = (t - segments[i].start) / segments[i].ramp_duration;
    return std::clamp(x, 0.0, 1.0);
}

} // namespace

void GradientSchedule::slope_offset_at(double t, double& slope, double& offset) const
{
    if (segments.empty()) {
        slope = 0.0;
        offset = 0.0;
        return;
    }
    std::size_t i = segment_index(segments, t);
    double f = ramp_fraction(segments, i, t);
    slope = segments[i].slope;
    offset = segments[i].offset;
    if (f < 1.0) {
        const GradientSegment& prev = segments[i - 1];
        slope = prev.slope + f * (slope - prev.slope);
        offset = prev.offset + f * (offset - prev.offset);
    }
}

int GradientSchedule::flip_segment_index() const
{
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (segments[i].slope * segments[i - 1].slope < 0.0) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

double ControlSchedule::rabi_at(double t) const
{
    if (segments.empty()) {
        return 0.0;
    }
    std::size_t i = segment_index(segments, t);
    double f = ramp_fraction(segments, i, t);
    double rabi = segments[i].rabi;
    if (f < 1.0) {
        rabi = segments[i - 1].rabi + f * (rabi - segments[i - 1].rabi);
    }
    return rabi;
}

std::complex<double> PulseTrain::field_at(double t) const
{
    std::complex<double> field(0.0, 0.0);
    for (const Pulse& p : pulses) {
        double tau = 0.5 * p.e2_width; // amplitude 1/e half-width
        double u = (t - p.center) / tau;
        double envelope = p.peak_amplitude * std::exp(-u * u);
        field += envelope * std::polar(1.0, p.carrier_offset * t);
    }
    return field;
}

double PulseTrain::total_energy() const
{
    double e = 0.0;
    for (const Pulse& p : pulses) {
        double tau = 0.5 * p.e2_width;
        e += p.peak_amplitude * p.peak_amplitude * tau * std::sqrt(two_pi / 4.0);
    }
    return e;
}

double pulse_energy_fraction(const Pulse& p, double t0, double t1)
{
    double tau = 0.5 * p.e2_width;
    double a = std::sqrt(2.0) * (t0 - p.center) / tau;
    double b = std::sqrt(2.0) * (t1 - p.center) / tau;
    return 0.5 * (std::erf(b) - std::erf(a));
}

namespace {

constexpr double kJoinTol = 1e-9;

template <class Segment>
void check_coverage(const std::vector<Segment>& segments, double t_end,
                    const char* name, std::vector<Violation>& out)
{
    if (segments.empty()) {
        out.push_back({std::string(name) + ".empty",
                       std::string(name) + " schedule has no segments"});
        return;
    }
    if (std::abs(segments.front().start) > kJoinTol) {
        out.push_back({std::string(name) + ".start",
                       std::string(name) + " schedule does not start at t = 0"});
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment& s = segments[i];
        if (!(s.end > s.start)) {
            out.push_back({std::string(name) + ".segment_order",
                           std::string(name) + " segment with end <= start"});
        }
        if (!(s.ramp_duration >= 0.0) || s.ramp_duration > (s.end - s.start) + kJoinTol) {
            out.push_back({std::string(name) + ".ramp",
                           std::string(name) + " ramp duration outside [0, segment length]"});
        }
        if (i > 0 && std::abs(s.start - segments[i - 1].end) > kJoinTol) {
            out.push_back({std::string(name) + ".gap", "schedule gap"});
        }
    }
    if (segments.back().end < t_end - kJoinTol) {
        out.push_back({std::string(name) + ".coverage",
                       std::string(name) + " schedule ends before t_end"});
    }
}

} // namespace

std::vector<Violation> validate(const ExperimentConfig& config)
{
    std::vector<Violation> v;
    const PhysicsParams& ph = config.physics;

    if (!(config.nz >= 2)) {
        v.push_back({"grid.nz", "nz must be at least 2"});
    }
    if (!(config.dt > 0.0) || !std::isfinite(config.dt)) {
        v.push_back({"grid.dt", "nonpositive time step"});
    }
    if (!(config.t_end > 0.0) || !std::isfinite(config.t_end)) {
        v.push_back({"grid.t_end", "nonpositive simulation window"});
    }

    if (!(std::isfinite(ph.coupling_g) && ph.coupling_g >= 0.0)) {
        v.push_back({"physics.coupling_g", "coupling g must be finite and >= 0"});
    }
    if (!(std::isfinite(ph.linear_density) && ph.linear_density >= 0.0)) {
        v.push_back({"physics.linear_density", "linear density must be finite and >= 0"});
    }
    if (!(std::isfinite(ph.detuning_delta) && ph.detuning_delta > 0.0)) {
        v.push_back({"physics.detuning_delta", "one-photon detuning must be finite and > 0"});
    }
    if (!(std::isfinite(ph.gamma_12) && ph.gamma_12 >= 0.0)) {
        v.push_back({"physics.gamma_12", "gamma_12 must be finite and >= 0"});
    }
    if (!(std::isfinite(ph.kappa_sc) && ph.kappa_sc >= 0.0)) {
        v.push_back({"physics.kappa_sc", "kappa_sc must be finite and >= 0"});
    }

    check_coverage(config.gradient.segments, config.t_end, "gradient", v);
    check_coverage(config.control.segments, config.t_end, "control", v);

    for (const Pulse& p : config.input.pulses) {
        if (!(p.e2_width > 0.0) || !std::isfinite(p.e2_width)) {
            v.push_back({"pulse.width", "pulse 1/e^2 width must be positive"});
            continue;
        }
        if (!std::isfinite(p.peak_amplitude) || !std::isfinite(p.center) ||
            !std::isfinite(p.carrier_offset)) {
            v.push_back({"pulse.finite", "pulse parameters must be finite"});
            continue;
        }
        if (config.t_end > 0.0 &&
            pulse_energy_fraction(p, 0.0, config.t_end) < 0.9999) {
            v.push_back({"pulse.containment",
                         "pulse energy not contained in the simulation window"});
        }
    }

    // Explicit-scheme stability guard: dt * max |gamma + i delta| <= 0.5.
    if (config.dt > 0.0 && !config.gradient.segments.empty()) {
        double delta_max = 0.0;
        for (const GradientSegment& s : config.gradient.segments) {
            delta_max = std::max(delta_max, 0.5 * std::abs(s.slope) + std::abs(s.offset));
        }
        double gamma_max = 0.0;
        for (const ControlSegment& s : config.control.segments) {
            gamma_max = std::max(gamma_max, ph.decoherence_rate(s.rabi));
        }
        double rate = std::hypot(gamma_max, delta_max);
        if (std::isfinite(rate) && config.dt * rate > 0.5) {
            v.push_back({"grid.stability",
                         "time step violates stability guard dt*|gamma + i delta| <= 0.5"});
        }
    }

    // flip_time must sit on a gradient segment boundary
    if (!config.gradient.segments.empty()) {
        bool on_boundary = false;
        for (const GradientSegment& s : config.gradient.segments) {
            if (std::abs(config.flip_time - s.start) <= kJoinTol ||
                std::abs(config.flip_time - s.end) <= kJoinTol) {
                on_boundary = true;
                break;
            }
        }
        if (!on_boundary) {
            v.push_back({"grid.flip_time",
                         "flip_time does not coincide with a gradient segment boundary"});
        }
    }

    for (double ts : config.snapshot_times) {
        if (!(ts >= 0.0 && ts <= config.t_end)) {
            v.push_back({"grid.snapshot", "snapshot time outside the simulation window"});
        }
    }

    return v;
}

} // namespace gemsim
