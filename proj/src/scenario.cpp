#include "gemsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace gemsim {

namespace {

std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return "";
    }
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string join_errors(const std::vector<ScenarioError>& errors)
{
    std::ostringstream oss;
    oss << "scenario parse failed:";
    for (const ScenarioError& e : errors) {
        oss << "\n";
        if (e.line > 0) {
            oss << "  line " << e.line << ": ";
        } else {
            oss << "  ";
        }
        oss << e.message;
    }
    return oss.str();
}

enum class ValueType { Time, Frequency, Number, Count, Bool, TimeList, Kind };

struct ParsedValue {
    double number = 0.0;
    bool boolean = false;
    std::vector<double> list;
    std::string ident;
};

// Numbers carry an optional 2pi* prefix (angular frequency) or a kHz/MHz/us
// suffix. Bare kHz/MHz are ordinary frequencies, converted by 2pi.
bool parse_number(const std::string& token, ValueType type, double& out,
                  std::string& error)
{
    std::string s = trim(token);
    double sign = 1.0;
    if (!s.empty() && s[0] == '-') {
        sign = -1.0;
        s = s.substr(1);
    }
    bool angular = false;
    if (s.rfind("2pi*", 0) == 0) {
        angular = true;
        s = s.substr(4);
    }
    char* end = nullptr;
    double value = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) {
        error = "expected a number, got '" + token + "'";
        return false;
    }
    std::string suffix = trim(std::string(end));

    if (angular && !suffix.empty()) {
        error = "2pi* prefix cannot be combined with a unit suffix";
        return false;
    }
    if (angular && type != ValueType::Frequency) {
        error = "2pi* prefix is only valid for frequency values";
        return false;
    }

    if (suffix.empty()) {
        out = sign * (angular ? two_pi * value : value);
        return true;
    }
    if (suffix == "us") {
        if (type != ValueType::Time && type != ValueType::TimeList) {
            error = "'us' suffix on a non-time value";
            return false;
        }
        out = sign * value;
        return true;
    }
    if (suffix == "kHz" || suffix == "MHz") {
        if (type != ValueType::Frequency) {
            error = "'" + suffix + "' suffix on a non-frequency value";
            return false;
        }
        out = sign * (suffix == "kHz" ? rad_per_us_from_khz(value)
                                      : rad_per_us_from_mhz(value));
        return true;
    }
    error = "unknown unit suffix '" + suffix + "'";
    return false;
}

const std::set<std::string> kKinds = {"auto", "storage_recall", "multi_pulse",
                                      "frequency_shift", "bandwidth_scaled"};

struct KeyDesc {
    ValueType type;
    bool required = false;
    std::function<void(ScenarioSpec&, const ParsedValue&)> apply;
};

const std::map<std::string, KeyDesc>& key_table()
{
    auto num = [](double ScenarioSpec::* member) {
        return [member](ScenarioSpec& s, const ParsedValue& v) { s.*member = v.number; };
    };
    auto cnt = [](int ScenarioSpec::* member) {
        return [member](ScenarioSpec& s, const ParsedValue& v) {
            s.*member = static_cast<int>(std::llround(v.number));
        };
    };
    static const std::map<std::string, KeyDesc> table = {
        {"grid.nz", {ValueType::Count, false, cnt(&ScenarioSpec::nz)}},
        {"grid.dt", {ValueType::Time, true, num(&ScenarioSpec::dt)}},
        {"grid.t_end", {ValueType::Time, true, num(&ScenarioSpec::t_end)}},
        {"grid.snapshot_times",
         {ValueType::TimeList, false,
          [](ScenarioSpec& s, const ParsedValue& v) { s.snapshot_times = v.list; }}},
        {"physics.coupling_g", {ValueType::Frequency, true, num(&ScenarioSpec::coupling_g)}},
        {"physics.density_nl", {ValueType::Frequency, true, num(&ScenarioSpec::density_nl)}},
        {"physics.detuning", {ValueType::Frequency, true, num(&ScenarioSpec::detuning)}},
        {"physics.gamma_12", {ValueType::Frequency, true, num(&ScenarioSpec::gamma_12)}},
        {"physics.kappa_sc", {ValueType::Number, false, num(&ScenarioSpec::kappa_sc)}},
        {"gradient.slope", {ValueType::Frequency, true, num(&ScenarioSpec::slope)}},
        {"gradient.offset", {ValueType::Frequency, false, num(&ScenarioSpec::offset)}},
        {"gradient.flip_time", {ValueType::Time, true, num(&ScenarioSpec::flip_time)}},
        {"gradient.ramp", {ValueType::Time, false, num(&ScenarioSpec::ramp)}},
        {"control.rabi", {ValueType::Frequency, true, num(&ScenarioSpec::rabi)}},
        {"control.off_during_storage",
         {ValueType::Bool, false,
          [](ScenarioSpec& s, const ParsedValue& v) { s.off_during_storage = v.boolean; }}},
        {"control.reenable_time", {ValueType::Time, false, num(&ScenarioSpec::reenable_time)}},
        {"pulses.count", {ValueType::Count, false, cnt(&ScenarioSpec::pulse_count)}},
        {"pulses.center", {ValueType::Time, true, num(&ScenarioSpec::center)}},
        {"pulses.width", {ValueType::Time, true, num(&ScenarioSpec::width)}},
        {"pulses.amplitude", {ValueType::Number, false, num(&ScenarioSpec::amplitude)}},
        {"pulses.spacing", {ValueType::Time, false, num(&ScenarioSpec::spacing)}},
        {"pulses.carrier_offset",
         {ValueType::Frequency, false, num(&ScenarioSpec::carrier_offset)}},
        {"recall.slope_ratio", {ValueType::Number, false, num(&ScenarioSpec::recall_slope_ratio)}},
        {"recall.offset", {ValueType::Frequency, false, num(&ScenarioSpec::recall_offset)}},
        {"analysis.kind",
         {ValueType::Kind, false,
          [](ScenarioSpec& s, const ParsedValue& v) { s.kind = v.ident; }}},
        {"analysis.scan_min", {ValueType::Frequency, false, num(&ScenarioSpec::scan_min)}},
        {"analysis.scan_max", {ValueType::Frequency, false, num(&ScenarioSpec::scan_max)}},
        {"analysis.scan_points", {ValueType::Count, false, cnt(&ScenarioSpec::scan_points)}},
        {"analysis.lo_offset", {ValueType::Frequency, false, num(&ScenarioSpec::lo_offset)}},
        {"output.spectrum",
         {ValueType::Bool, false,
          [](ScenarioSpec& s, const ParsedValue& v) { s.emit_spectrum = v.boolean; }}},
        {"output.snapshots",
         {ValueType::Bool, false,
          [](ScenarioSpec& s, const ParsedValue& v) { s.emit_snapshots = v.boolean; }}},
    };
    return table;
}

const std::set<std::string> kSections = {"grid",   "physics", "gradient", "control",
                                         "pulses", "recall",  "analysis", "output"};
const char* kRequiredSections[] = {"grid", "physics", "gradient", "control", "pulses"};

} // namespace

ScenarioParseError::ScenarioParseError(std::vector<ScenarioError> errs)
    : std::runtime_error(join_errors(errs)), errors(std::move(errs))
{
}

ScenarioSpec parse_scenario(const std::string& text)
{
    std::vector<ScenarioError> errors;
    ScenarioSpec spec;
    std::set<std::string> seen_sections;
    std::set<std::string> seen_keys;

    std::istringstream stream(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back({line_no, "malformed section header '" + line + "'"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!kSections.count(section)) {
                errors.push_back({line_no, "unknown section [" + section + "]"});
                section.clear();
                continue;
            }
            seen_sections.insert(section);
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back({line_no, "expected 'key = value', got '" + line + "'"});
            continue;
        }
        if (section.empty()) {
            errors.push_back({line_no, "key outside any section"});
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::string full = section + "." + key;
        auto it = key_table().find(full);
        if (it == key_table().end()) {
            errors.push_back({line_no, "unknown key '" + key + "' in section [" + section + "]"});
            continue;
        }
        if (!seen_keys.insert(full).second) {
            errors.push_back({line_no, "duplicate key '" + key + "' in section [" + section + "]"});
            continue;
        }

        ParsedValue parsed;
        std::string err;
        bool ok = true;
        switch (it->second.type) {
        case ValueType::Bool:
            if (value == "true") {
                parsed.boolean = true;
            } else if (value == "false") {
                parsed.boolean = false;
            } else {
                err = "expected true or false, got '" + value + "'";
                ok = false;
            }
            break;
        case ValueType::Kind:
            if (kKinds.count(value)) {
                parsed.ident = value;
            } else {
                err = "unknown scenario kind '" + value + "'";
                ok = false;
            }
            break;
        case ValueType::TimeList: {
            std::stringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) {
                double x;
                if (!parse_number(item, ValueType::TimeList, x, err)) {
                    ok = false;
                    break;
                }
                parsed.list.push_back(x);
            }
            break;
        }
        default:
            ok = parse_number(value, it->second.type, parsed.number, err);
            break;
        }
        if (!ok) {
            errors.push_back({line_no, err});
            continue;
        }
        it->second.apply(spec, parsed);
    }

    for (const char* required : kRequiredSections) {
        if (!seen_sections.count(required)) {
            errors.push_back({0, std::string("missing required section [") + required + "]"});
        }
    }
    if (errors.empty()) {
        for (const auto& [full, desc] : key_table()) {
            if (desc.required && !seen_keys.count(full)) {
                errors.push_back({0, "missing required key '" + full + "'"});
            }
        }
        if (spec.pulse_count > 1 && !(spec.spacing > 0.0)) {
            errors.push_back({0, "pulses.spacing is required when count > 1"});
        }
    }

    if (!errors.empty()) {
        throw ScenarioParseError(std::move(errors));
    }
    return spec;
}

ExperimentConfig ScenarioSpec::build_config() const
{
    ExperimentConfig config;
    config.physics = {coupling_g, density_nl, detuning, gamma_12, kappa_sc};
    config.nz = nz;
    config.dt = dt;
    config.t_end = t_end;
    config.flip_time = flip_time;
    config.snapshot_times = snapshot_times;

    config.gradient.segments = {
        {0.0, flip_time, slope, offset, 0.0},
        {flip_time, t_end, -recall_slope_ratio * slope, offset + recall_offset, ramp},
    };
    config.control.segments = {{0.0, t_end, rabi, 0.0}};

    for (int k = 0; k < pulse_count; ++k) {
        config.input.pulses.push_back(
            {center + k * spacing, width, amplitude, carrier_offset});
    }
    return config;
}

std::string ScenarioSpec::resolved_kind() const
{
    if (kind != "auto") {
        return kind;
    }
    if (pulse_count > 1) {
        return "multi_pulse";
    }
    if (recall_offset != 0.0) {
        return "frequency_shift";
    }
    if (recall_slope_ratio != 1.0) {
        return "bandwidth_scaled";
    }
    return "storage_recall";
}

namespace {

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace

std::string render_scenario(const ScenarioSpec& s)
{
    std::ostringstream o;
    o << "[grid]\n";
    o << "nz = " << s.nz << "\n";
    o << "dt = " << fmt(s.dt) << "\n";
    o << "t_end = " << fmt(s.t_end) << "\n";
    if (!s.snapshot_times.empty()) {
        o << "snapshot_times = ";
        for (std::size_t i = 0; i < s.snapshot_times.size(); ++i) {
            o << (i ? ", " : "") << fmt(s.snapshot_times[i]);
        }
        o << "\n";
    }
    o << "\n[physics]\n";
    o << "coupling_g = " << fmt(s.coupling_g) << "\n";
    o << "density_nl = " << fmt(s.density_nl) << "\n";
    o << "detuning = " << fmt(s.detuning) << "\n";
    o << "gamma_12 = " << fmt(s.gamma_12) << "\n";
    o << "kappa_sc = " << fmt(s.kappa_sc) << "\n";
    o << "\n[gradient]\n";
    o << "slope = " << fmt(s.slope) << "\n";
    o << "offset = " << fmt(s.offset) << "\n";
    o << "flip_time = " << fmt(s.flip_time) << "\n";
    o << "ramp = " << fmt(s.ramp) << "\n";
    o << "\n[control]\n";
    o << "rabi = " << fmt(s.rabi) << "\n";
    o << "off_during_storage = " << (s.off_during_storage ? "true" : "false") << "\n";
    o << "reenable_time = " << fmt(s.reenable_time) << "\n";
    o << "\n[pulses]\n";
    o << "count = " << s.pulse_count << "\n";
    o << "center = " << fmt(s.center) << "\n";
    o << "width = " << fmt(s.width) << "\n";
    o << "amplitude = " << fmt(s.amplitude) << "\n";
    o << "spacing = " << fmt(s.spacing) << "\n";
    o << "carrier_offset = " << fmt(s.carrier_offset) << "\n";
    o << "\n[recall]\n";
    o << "slope_ratio = " << fmt(s.recall_slope_ratio) << "\n";
    o << "offset = " << fmt(s.recall_offset) << "\n";
    o << "\n[analysis]\n";
    o << "kind = " << s.kind << "\n";
    o << "scan_min = " << fmt(s.scan_min) << "\n";
    o << "scan_max = " << fmt(s.scan_max) << "\n";
    o << "scan_points = " << s.scan_points << "\n";
    o << "lo_offset = " << fmt(s.lo_offset) << "\n";
    o << "\n[output]\n";
    o << "spectrum = " << (s.emit_spectrum ? "true" : "false") << "\n";
    o << "snapshots = " << (s.emit_snapshots ? "true" : "false") << "\n";
    return o.str();
}

} // namespace gemsim
