#include "gemsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gemsim {

namespace {

using cplx = std::complex<double>;

constexpr double kDetectionThreshold = 1e-4; // of input peak power
constexpr double kNoEchoThreshold = 1e-6;
constexpr double kBoundaryTol = 1e-9;

double window_energy(const std::vector<double>& t, const std::vector<cplx>& field,
                     double t0, double t1)
{
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (t[k] < t0 || t[k + 1] > t1) {
            continue;
        }
        sum += 0.5 * (std::norm(field[k]) + std::norm(field[k + 1])) * (t[k + 1] - t[k]);
    }
    return sum;
}

void window_indices(const std::vector<double>& t, double t0, double t1,
                    std::size_t& k0, std::size_t& k1)
{
    k0 = 0;
    while (k0 < t.size() && t[k0] < t0) ++k0;
    k1 = t.size();
    while (k1 > 0 && t[k1 - 1] > t1) --k1;
    if (k0 >= k1) {
        throw std::domain_error("empty analysis window");
    }
    --k1;
}

// Parabolic refinement of a grid maximum.
double refine_peak(const std::vector<double>& t, const std::vector<double>& p,
                   std::size_t k)
{
    if (k == 0 || k + 1 >= p.size()) {
        return t[k];
    }
    double denom = p[k - 1] - 2.0 * p[k] + p[k + 1];
    if (denom >= 0.0) {
        return t[k];
    }
    double shift = 0.5 * (p[k - 1] - p[k + 1]) / denom;
    return t[k] + std::clamp(shift, -0.5, 0.5) * (t[1] - t[0]);
}

struct Peak {
    std::size_t index;
    double time;
    double power;
};

std::vector<Peak> detect_peaks(const std::vector<double>& t, const std::vector<double>& p,
                               std::size_t k0, std::size_t k1, double threshold,
                               double min_separation)
{
    std::vector<Peak> candidates;
    for (std::size_t k = std::max<std::size_t>(k0, 1); k <= k1 && k + 1 < p.size(); ++k) {
        if (p[k] >= threshold && p[k] >= p[k - 1] && p[k] > p[k + 1]) {
            candidates.push_back({k, refine_peak(t, p, k), p[k]});
        }
    }
    // Strongest first; earliest wins a tie. Accepted peaks suppress
    // weaker neighbours closer than min_separation.
    std::stable_sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
        if (a.power != b.power) return a.power > b.power;
        return a.time < b.time;
    });
    std::vector<Peak> accepted;
    for (const Peak& c : candidates) {
        bool clear = true;
        for (const Peak& a : accepted) {
            if (std::abs(a.time - c.time) < min_separation) {
                clear = false;
                break;
            }
        }
        if (clear) {
            accepted.push_back(c);
        }
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const Peak& a, const Peak& b) { return a.time < b.time; });
    return accepted;
}

// Full width between the 1/e^2 crossings around a power peak.
double e2_width_around(const std::vector<double>& t, const std::vector<double>& p,
                       std::size_t k)
{
    double level = p[k] * std::exp(-2.0);
    double left = t.front();
    for (std::size_t j = k; j > 0; --j) {
        if (p[j - 1] <= level) {
            double f = (p[j] - level) / (p[j] - p[j - 1]);
            left = t[j] - f * (t[j] - t[j - 1]);
            break;
        }
    }
    double right = t.back();
    for (std::size_t j = k; j + 1 < p.size(); ++j) {
        if (p[j + 1] <= level) {
            double f = (p[j] - level) / (p[j] - p[j + 1]);
            right = t[j] + f * (t[j + 1] - t[j]);
            break;
        }
    }
    return right - left;
}

double echo_window_start_of(const ExperimentConfig& config)
{
    for (const GradientSegment& s : config.gradient.segments) {
        if (std::abs(s.start - config.flip_time) <= kBoundaryTol) {
            return s.start + s.ramp_duration;
        }
    }
    return config.flip_time;
}

void require_single_flip(const ExperimentConfig& config)
{
    int flips = 0;
    const auto& segs = config.gradient.segments;
    for (std::size_t i = 1; i < segs.size(); ++i) {
        if (segs[i].slope * segs[i - 1].slope < 0.0) {
            ++flips;
        }
    }
    if (flips != 1) {
        throw std::invalid_argument("scenario requires exactly one gradient flip");
    }
}

} // namespace

double recall_efficiency(const std::vector<double>& time_grid,
                         const std::vector<cplx>& input,
                         const std::vector<cplx>& output,
                         double window_start, double window_end)
{
    double input_energy = window_energy(time_grid, input, time_grid.front(), time_grid.back());
    if (input_energy <= 0.0) {
        throw std::domain_error("zero input energy");
    }
    return window_energy(time_grid, output, window_start, window_end) / input_energy;
}

namespace {

void windowed_dft(const std::vector<double>& time_grid, const std::vector<cplx>& field,
                  double window_start, double window_end,
                  std::vector<std::pair<double, double>>& out)
{
    std::size_t k0, k1;
    window_indices(time_grid, window_start, window_end, k0, k1);
    std::size_t n = k1 - k0 + 1;
    double dt = time_grid[1] - time_grid[0];
    out.clear();
    out.reserve(n);
    for (std::size_t m = 0; m < n; ++m) {
        long half = static_cast<long>(m) <= static_cast<long>(n) / 2
                        ? static_cast<long>(m)
                        : static_cast<long>(m) - static_cast<long>(n);
        double omega = two_pi * static_cast<double>(half) / (static_cast<double>(n) * dt);
        cplx sum(0.0, 0.0);
        for (std::size_t k = k0; k <= k1; ++k) {
            sum += field[k] * std::polar(1.0, -omega * (time_grid[k] - time_grid[k0]));
        }
        out.emplace_back(omega, std::norm(sum));
    }
    std::sort(out.begin(), out.end());
}

} // namespace

double spectral_centroid(const std::vector<double>& time_grid,
                         const std::vector<cplx>& field,
                         double window_start, double window_end)
{
    std::vector<std::pair<double, double>> spec;
    windowed_dft(time_grid, field, window_start, window_end, spec);
    double weight = 0.0, moment = 0.0;
    for (const auto& [omega, power] : spec) {
        weight += power;
        moment += omega * power;
    }
    if (weight <= 0.0) {
        throw std::domain_error("empty spectrum");
    }
    return moment / weight;
}

std::vector<std::pair<double, double>>
power_spectrum(const std::vector<double>& time_grid, const std::vector<cplx>& field,
               double window_start, double window_end)
{
    std::vector<std::pair<double, double>> spec;
    windowed_dft(time_grid, field, window_start, window_end, spec);
    return spec;
}

EchoReport analyze_run(const ExperimentConfig& config, const SimulationResult& result,
                       int expected_pulses)
{
    const std::vector<double>& t = result.time_grid;
    const int n_pulses = static_cast<int>(config.input.pulses.size());
    if (expected_pulses <= 0) {
        expected_pulses = n_pulses;
    }

    EchoReport report;
    report.expected_pulses = expected_pulses;
    report.input_center = config.input.pulses.front().center;
    report.input_e2_width = config.input.pulses.front().e2_width;
    report.echo_window_start = echo_window_start_of(config);

    std::vector<double> p_in(t.size()), p_out(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        p_in[k] = std::norm(result.input_field[k]);
        p_out[k] = std::norm(result.output_field[k]);
    }
    double input_peak = *std::max_element(p_in.begin(), p_in.end());
    if (input_peak <= 0.0) {
        throw std::domain_error("zero input energy");
    }

    report.efficiency = recall_efficiency(t, result.input_field, result.output_field,
                                          report.echo_window_start, config.t_end);

    std::size_t k0, k1;
    window_indices(t, report.echo_window_start, config.t_end, k0, k1);
    double window_max = 0.0;
    std::size_t window_argmax = k0;
    for (std::size_t k = k0; k <= k1; ++k) {
        if (p_out[k] > window_max) {
            window_max = p_out[k];
            window_argmax = k;
        }
    }
    report.echo_found = window_max >= kNoEchoThreshold * input_peak;

    std::vector<Peak> peaks =
        detect_peaks(t, p_out, k0, k1, kDetectionThreshold * input_peak,
                     0.5 * report.input_e2_width);
    for (const Peak& pk : peaks) {
        report.echo_order.push_back(pk.time);
    }
    report.all_echoes_found =
        static_cast<int>(peaks.size()) >= expected_pulses;

    if (report.echo_found) {
        report.echo_center = refine_peak(t, p_out, window_argmax);
        report.echo_e2_width = e2_width_around(t, p_out, window_argmax);
        report.storage_time_peak_to_peak = report.echo_center - report.input_center;

        double half_span = 3.0 * report.echo_e2_width;
        double spec_lo = std::max(report.echo_window_start, report.echo_center - half_span);
        double spec_hi = std::min(config.t_end, report.echo_center + half_span);
        report.spectral_centroid =
            spectral_centroid(t, result.output_field, spec_lo, spec_hi);

        double in_lo = std::max(0.0, report.input_center - 3.0 * report.input_e2_width);
        double in_hi = std::min(config.flip_time,
                                report.input_center + 3.0 * report.input_e2_width);
        report.input_spectral_centroid =
            spectral_centroid(t, result.input_field, in_lo, in_hi);

        report.dbp = delay_bandwidth_product(report);
    }
    return report;
}

ExperimentConfig with_recall_slope_ratio(const ExperimentConfig& config, double ratio)
{
    if (!(ratio > 0.0)) {
        throw std::invalid_argument("recall slope ratio must be positive");
    }
    ExperimentConfig out = config;
    double storage_slope = 0.0;
    for (GradientSegment& s : out.gradient.segments) {
        if (s.start < config.flip_time - kBoundaryTol) {
            storage_slope = s.slope;
        } else {
            s.slope = -ratio * storage_slope;
        }
    }
    return out;
}

ExperimentConfig with_recall_offset(const ExperimentConfig& config, double offset)
{
    ExperimentConfig out = config;
    for (GradientSegment& s : out.gradient.segments) {
        if (s.start >= config.flip_time - kBoundaryTol) {
            s.offset += offset;
        }
    }
    return out;
}

ExperimentConfig with_control_rabi(const ExperimentConfig& config, double rabi)
{
    ExperimentConfig out = config;
    for (ControlSegment& s : out.control.segments) {
        if (s.rabi != 0.0) {
            s.rabi = rabi;
        }
    }
    return out;
}

ExperimentConfig with_control_off_window(const ExperimentConfig& config,
                                         double off_from, double off_until)
{
    if (!(off_until > off_from)) {
        throw std::invalid_argument("control-off window must have positive length");
    }
    ExperimentConfig out = config;
    std::vector<ControlSegment> rebuilt;
    for (const ControlSegment& s : out.control.segments) {
        double lo = std::max(s.start, off_from);
        double hi = std::min(s.end, off_until);
        if (hi <= lo + kBoundaryTol) {
            rebuilt.push_back(s);
            continue;
        }
        if (lo > s.start + kBoundaryTol) {
            rebuilt.push_back({s.start, lo, s.rabi, s.ramp_duration});
        }
        rebuilt.push_back({lo, hi, 0.0, 0.0});
        if (s.end > hi + kBoundaryTol) {
            rebuilt.push_back({hi, s.end, s.rabi, 0.0});
        }
    }
    out.control.segments = std::move(rebuilt);
    return out;
}

EchoReport run_storage_recall(const ExperimentConfig& config,
                              bool control_off_during_storage,
                              double control_reenable_time)
{
    require_single_flip(config);
    if (config.input.pulses.size() != 1) {
        throw std::invalid_argument("storage/recall scenario requires a single input pulse");
    }
    ExperimentConfig cfg = config;
    if (control_off_during_storage) {
        const Pulse& p = config.input.pulses.front();
        double off_from = p.center + p.e2_width;
        double off_until =
            control_reenable_time >= 0.0 ? control_reenable_time : config.flip_time;
        cfg = with_control_off_window(cfg, off_from, off_until);
    }
    SimulationResult result = integrate(cfg);
    return analyze_run(cfg, result, 1);
}

EchoReport run_bandwidth_scaled_recall(const ExperimentConfig& config, double ratio)
{
    ExperimentConfig cfg = with_recall_slope_ratio(config, ratio);
    require_single_flip(cfg);
    SimulationResult result = integrate(cfg);
    return analyze_run(cfg, result, 1);
}

EchoReport run_frequency_shift(const ExperimentConfig& config, double offset)
{
    ExperimentConfig cfg = with_recall_offset(config, offset);
    require_single_flip(cfg);
    SimulationResult result = integrate(cfg);
    return analyze_run(cfg, result, 1);
}

EchoReport run_multi_pulse(const ExperimentConfig& config, int pulse_count)
{
    if (pulse_count < 1) {
        throw std::invalid_argument("pulse count must be at least 1");
    }
    if (static_cast<int>(config.input.pulses.size()) != pulse_count) {
        throw std::invalid_argument("config pulse train does not match requested count");
    }
    require_single_flip(config);
    SimulationResult result = integrate(config);
    return analyze_run(config, result, pulse_count);
}

double delay_bandwidth_product(const EchoReport& report)
{
    if (!report.echo_found || report.input_e2_width <= 0.0) {
        throw std::domain_error("no echo to compute a delay-bandwidth product from");
    }
    if (report.expected_pulses > 1 && !report.echo_order.empty()) {
        return (report.echo_order.back() - report.input_center) / report.input_e2_width;
    }
    return report.storage_time_peak_to_peak / report.input_e2_width;
}

std::vector<double> heterodyne_beat(const std::vector<double>& time_grid,
                                    const std::vector<cplx>& echo,
                                    double lo_offset)
{
    if (time_grid.size() < 2) {
        throw std::domain_error("time grid too short");
    }
    double dt = time_grid[1] - time_grid[0];
    if (std::abs(lo_offset) * dt > two_pi / 2.0) {
        throw std::domain_error("local oscillator offset undersampled on the time grid");
    }
    double a_lo = 0.0;
    for (const cplx& e : echo) {
        a_lo = std::max(a_lo, std::abs(e));
    }
    std::vector<double> trace(time_grid.size());
    for (std::size_t k = 0; k < time_grid.size(); ++k) {
        trace[k] = std::norm(echo[k] + a_lo * std::polar(1.0, lo_offset * time_grid[k]));
    }
    return trace;
}

std::vector<std::pair<double, double>>
control_power_sweep(const ExperimentConfig& config, const std::vector<double>& rabi_values)
{
    std::vector<std::pair<double, double>> out;
    out.reserve(rabi_values.size());
    for (double rabi : rabi_values) {
        EchoReport report = run_storage_recall(with_control_rabi(config, rabi));
        out.emplace_back(rabi, report.efficiency);
    }
    return out;
}

} // namespace gemsim
