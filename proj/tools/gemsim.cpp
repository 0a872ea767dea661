#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gemsim/analysis.hpp"
#include "gemsim/csv.hpp"
#include "gemsim/model.hpp"
#include "gemsim/protocol.hpp"
#include "gemsim/scenario.hpp"
#include "gemsim/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

gemsim::ScenarioSpec load_scenario(const std::string& path)
{
    return gemsim::parse_scenario(slurp(path));
}

gemsim::ExperimentConfig prepared_config(const gemsim::ScenarioSpec& spec)
{
    gemsim::ExperimentConfig config = spec.build_config();
    if (spec.off_during_storage) {
        const gemsim::Pulse& last = config.input.pulses.back();
        double off_from = last.center + last.e2_width;
        double off_until =
            spec.reenable_time >= 0.0 ? spec.reenable_time : config.flip_time;
        config = gemsim::with_control_off_window(config, off_from, off_until);
    }
    return config;
}

int check_config(const gemsim::ExperimentConfig& config)
{
    std::vector<gemsim::Violation> violations = gemsim::validate(config);
    if (violations.empty()) {
        return kExitOk;
    }
    for (const gemsim::Violation& v : violations) {
        std::cerr << "validation [" << v.code << "]: " << v.message << "\n";
    }
    return kExitValidation;
}

void write_report_csv(const std::string& path, const gemsim::EchoReport& report)
{
    gemsim::CsvWriter csv({"efficiency", "echo_center_us", "echo_width_us", "storage_us",
                           "centroid_rad_per_us", "dbp"});
    csv.add_row({gemsim::CsvWriter::cell(report.efficiency),
                 gemsim::CsvWriter::cell(report.echo_center),
                 gemsim::CsvWriter::cell(report.echo_e2_width),
                 gemsim::CsvWriter::cell(report.storage_time_peak_to_peak),
                 gemsim::CsvWriter::cell(report.spectral_centroid),
                 gemsim::CsvWriter::cell(report.dbp)});
    gemsim::atomic_write(path, csv.text());
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir)
{
    gemsim::ScenarioSpec spec = load_scenario(scenario_path);
    gemsim::ExperimentConfig config = prepared_config(spec);
    if (int rc = check_config(config); rc != kExitOk) {
        return rc;
    }

    gemsim::SimulationResult result = gemsim::integrate(config);
    gemsim::EchoReport report = gemsim::analyze_run(config, result, spec.pulse_count);

    std::filesystem::create_directories(out_dir);

    gemsim::CsvWriter ts({"t_us", "re_in", "im_in", "re_out", "im_out", "power_in",
                          "power_out"});
    for (std::size_t k = 0; k < result.time_grid.size(); ++k) {
        const auto& ein = result.input_field[k];
        const auto& eout = result.output_field[k];
        ts.add_row({gemsim::CsvWriter::cell(result.time_grid[k]),
                    gemsim::CsvWriter::cell(ein.real()), gemsim::CsvWriter::cell(ein.imag()),
                    gemsim::CsvWriter::cell(eout.real()), gemsim::CsvWriter::cell(eout.imag()),
                    gemsim::CsvWriter::cell(std::norm(ein)),
                    gemsim::CsvWriter::cell(std::norm(eout))});
    }
    gemsim::atomic_write(out_dir + "/timeseries.csv", ts.text());

    write_report_csv(out_dir + "/report.csv", report);

    if (spec.emit_spectrum && report.echo_found) {
        double lo = std::max(report.echo_window_start,
                             report.echo_center - 3.0 * report.echo_e2_width);
        double hi = std::min(config.t_end, report.echo_center + 3.0 * report.echo_e2_width);
        gemsim::CsvWriter sp({"freq_rad_per_us", "power"});
        for (const auto& [freq, power] :
             gemsim::power_spectrum(result.time_grid, result.output_field, lo, hi)) {
            sp.add_row({gemsim::CsvWriter::cell(freq), gemsim::CsvWriter::cell(power)});
        }
        gemsim::atomic_write(out_dir + "/spectrum.csv", sp.text());
    }

    if (spec.emit_snapshots && !result.coherence_snapshots.empty()) {
        gemsim::CsvWriter sn({"z", "re_sigma", "im_sigma", "t_us"});
        for (const gemsim::CoherenceSnapshot& snap : result.coherence_snapshots) {
            for (std::size_t j = 0; j < snap.sigma.size(); ++j) {
                sn.add_row({gemsim::CsvWriter::cell(result.z_grid[j]),
                            gemsim::CsvWriter::cell(snap.sigma[j].real()),
                            gemsim::CsvWriter::cell(snap.sigma[j].imag()),
                            gemsim::CsvWriter::cell(snap.time)});
            }
        }
        gemsim::atomic_write(out_dir + "/snapshots.csv", sn.text());
    }

    if (!report.echo_found) {
        std::cerr << "warning: no echo above threshold in the recall window\n";
    }
    return kExitOk;
}

gemsim::ScenarioSpec apply_sweep_value(const gemsim::ScenarioSpec& base,
                                       const std::string& parameter, double value)
{
    gemsim::ScenarioSpec spec = base;
    if (parameter == "storage_time") {
        spec.flip_time = spec.center + 0.5 * value;
        spec.t_end = spec.center + value + 3.5 * spec.width;
    } else if (parameter == "control_rabi") {
        spec.rabi = value;
    } else if (parameter == "recall_slope_ratio") {
        spec.recall_slope_ratio = value;
    } else if (parameter == "offset") {
        spec.recall_offset = value;
    } else {
        throw std::invalid_argument("unknown sweep parameter '" + parameter + "'");
    }
    return spec;
}

int default_jobs()
{
    if (const char* env = std::getenv("GEMSIM_JOBS")) {
        int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    return 1;
}

int cmd_sweep(const std::string& scenario_path, const std::string& parameter,
              const std::vector<double>& values, const std::string& out_dir, int jobs)
{
    static const char* kParameters[] = {"storage_time", "control_rabi",
                                        "recall_slope_ratio", "offset"};
    if (std::none_of(std::begin(kParameters), std::end(kParameters),
                     [&](const char* p) { return parameter == p; })) {
        std::cerr << "unknown sweep parameter '" << parameter
                  << "' (expected storage_time, control_rabi, "
                     "recall_slope_ratio or offset)\n";
        return kExitUsage;
    }

    gemsim::ScenarioSpec base = load_scenario(scenario_path);

    struct Row {
        bool ok = false;
        std::string error;
        gemsim::EchoReport report;
    };
    std::vector<Row> rows(values.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= values.size()) {
                return;
            }
            try {
                gemsim::ScenarioSpec spec = apply_sweep_value(base, parameter, values[i]);
                gemsim::ExperimentConfig config = prepared_config(spec);
                std::vector<gemsim::Violation> violations = gemsim::validate(config);
                if (!violations.empty()) {
                    rows[i].error = "validation: " + violations.front().message;
                    continue;
                }
                gemsim::SimulationResult result = gemsim::integrate(config);
                rows[i].report = gemsim::analyze_run(config, result, spec.pulse_count);
                rows[i].ok = true;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };

    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(values.size()) + 1));
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    for (std::thread& th : pool) {
        th.join();
    }

    gemsim::CsvWriter csv({"value", "efficiency", "echo_center_us", "echo_width_us"});
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!rows[i].ok) {
            std::cerr << "sweep value " << values[i] << " failed: " << rows[i].error << "\n";
            return kExitNumerical;
        }
        csv.add_row({gemsim::CsvWriter::cell(values[i]),
                     gemsim::CsvWriter::cell(rows[i].report.efficiency),
                     gemsim::CsvWriter::cell(rows[i].report.echo_center),
                     gemsim::CsvWriter::cell(rows[i].report.echo_e2_width)});
    }
    std::filesystem::create_directories(out_dir);
    gemsim::atomic_write(out_dir + "/sweep.csv", csv.text());
    return kExitOk;
}

int cmd_spectrum(const std::string& scenario_path, const std::string& out_dir)
{
    gemsim::ScenarioSpec spec = load_scenario(scenario_path);
    gemsim::ExperimentConfig config = spec.build_config();
    if (int rc = check_config(config); rc != kExitOk) {
        return rc;
    }

    double lo = spec.scan_min, hi = spec.scan_max;
    int points = spec.scan_points;
    if (points <= 0 || !(hi > lo)) {
        double span = 0.75 * std::abs(spec.slope) + 20.0 * spec.gamma_12;
        lo = -span;
        hi = span;
        points = 201;
    }

    gemsim::CsvWriter csv({"freq_rad_per_us", "power"});
    for (int i = 0; i < points; ++i) {
        double delta = lo + (hi - lo) * i / (points - 1);
        double t = gemsim::steady_state_transmission(config.physics, spec.rabi,
                                                     spec.slope, delta);
        csv.add_row({gemsim::CsvWriter::cell(delta), gemsim::CsvWriter::cell(t)});
    }
    std::filesystem::create_directories(out_dir);
    gemsim::atomic_write(out_dir + "/spectrum.csv", csv.text());
    return kExitOk;
}

int cmd_fit(const std::string& csv_path, std::optional<double> fixed_tau_d,
            const std::string& out_dir)
{
    std::ifstream in(csv_path);
    if (!in) {
        std::cerr << "cannot read " << csv_path << "\n";
        return kExitValidation;
    }
    std::string line;
    int line_no = 0;
    std::vector<std::pair<double, double>> points;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "t_us,eta" && line != "t_us,eta\r") {
                std::cerr << "line 1: expected header 't_us,eta'\n";
                return kExitValidation;
            }
            continue;
        }
        if (line.empty() || line == "\r") {
            continue;
        }
        double t, eta;
        char trailing;
        int got = std::sscanf(line.c_str(), "%lf,%lf %c", &t, &eta, &trailing);
        if (got != 2) {
            std::cerr << "line " << line_no << ": malformed CSV row '" << line << "'\n";
            return kExitValidation;
        }
        points.emplace_back(t, eta);
    }

    try {
        gemsim::FitResult fit = gemsim::fit_decay(points, fixed_tau_d);
        gemsim::CsvWriter csv({"eta0", "tau_d_us", "tau0_us", "residual", "rate_khz"});
        double rate_khz = 1000.0 / (gemsim::two_pi * fit.model.tau0);
        csv.add_row({gemsim::CsvWriter::cell(fit.model.eta0),
                     gemsim::CsvWriter::cell(fit.model.tau_d),
                     gemsim::CsvWriter::cell(fit.model.tau0),
                     gemsim::CsvWriter::cell(fit.diagnostics.residual_norm),
                     gemsim::CsvWriter::cell(rate_khz)});
        std::filesystem::create_directories(out_dir);
        gemsim::atomic_write(out_dir + "/fit.csv", csv.text());
    } catch (const std::invalid_argument& e) {
        std::cerr << "fit: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::runtime_error& e) {
        std::cerr << "fit: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_capacity(double eta0, double tau_d, double tau0, double t_max, int points,
                 const std::string& out_dir)
{
    if (!(eta0 > 0.0 && eta0 <= 1.0) || !(tau_d > 0.0) || !(tau0 > 0.0) ||
        !(t_max > 0.0) || points < 2) {
        std::cerr << "capacity: invalid decay model or grid\n";
        return kExitValidation;
    }
    gemsim::DecayModel model{eta0, tau_d, tau0};
    gemsim::CsvWriter csv({"t_us", "eta_m", "nbar_max"});
    for (int i = 0; i < points; ++i) {
        double t = t_max * i / (points - 1);
        double eta = gemsim::decay_efficiency(model, t);
        double nbar = gemsim::quantum_capacity(model, t);
        csv.add_row({gemsim::CsvWriter::cell(t), gemsim::CsvWriter::cell(eta),
                     std::isinf(nbar) ? std::string("unbounded")
                                      : gemsim::CsvWriter::cell(nbar)});
    }
    std::filesystem::create_directories(out_dir);
    gemsim::atomic_write(out_dir + "/capacity.csv", csv.text());
    return kExitOk;
}

int cmd_validate(const std::string& scenario_path)
{
    gemsim::ScenarioSpec spec = load_scenario(scenario_path);
    int rc = check_config(prepared_config(spec));
    if (rc == kExitOk) {
        std::cout << "OK\n";
    }
    return rc;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Lambda-GEM storage/recall simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = ".", parameter, csv_path;
    std::vector<double> values;
    int jobs = default_jobs();
    double eta0 = 0.98, tau_d = 22.0, tau0 = 60.0, t_max = 30.0;
    int points = 61;
    std::optional<double> fixed_tau_d;
    double fix_tau_d_value = 0.0;

    CLI::App* run = app.add_subcommand("run", "integrate one scenario and emit CSVs");
    run->add_option("scenario", scenario_path)->required();
    run->add_option("--out", out_dir)->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run a scenario over a parameter list");
    sweep->add_option("scenario", scenario_path)->required();
    sweep->add_option("--param", parameter)->required();
    sweep->add_option("--values", values)->required()->delimiter(',');
    sweep->add_option("--out", out_dir)->required();
    sweep->add_option("--jobs", jobs);

    CLI::App* spectrum = app.add_subcommand("spectrum", "steady-state Raman line scan");
    spectrum->add_option("scenario", scenario_path)->required();
    spectrum->add_option("--out", out_dir)->required();

    CLI::App* fit = app.add_subcommand("fit", "fit the decay model to t_us,eta data");
    fit->add_option("csv", csv_path)->required();
    CLI::Option* fix_opt = fit->add_option("--fix-tau-d", fix_tau_d_value);
    fit->add_option("--out", out_dir)->required();

    CLI::App* capacity = app.add_subcommand("capacity", "quantum capacity vs storage time");
    capacity->add_option("--eta0", eta0);
    capacity->add_option("--tau-d", tau_d);
    capacity->add_option("--tau0", tau0);
    capacity->add_option("--t-max", t_max);
    capacity->add_option("--points", points);
    capacity->add_option("--out", out_dir)->required();

    CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(scenario_path, out_dir);
        }
        if (sweep->parsed()) {
            return cmd_sweep(scenario_path, parameter, values, out_dir, jobs);
        }
        if (spectrum->parsed()) {
            return cmd_spectrum(scenario_path, out_dir);
        }
        if (fit->parsed()) {
            if (fix_opt->count() > 0) {
                fixed_tau_d = fix_tau_d_value;
            }
            return cmd_fit(csv_path, fixed_tau_d, out_dir);
        }
        if (capacity->parsed()) {
            return cmd_capacity(eta0, tau_d, tau0, t_max, points, out_dir);
        }
        if (validate->parsed()) {
            return cmd_validate(scenario_path);
        }
    } catch (const gemsim::ScenarioParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const gemsim::SolverAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
