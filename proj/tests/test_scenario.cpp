#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "gemsim/csv.hpp"
#include "gemsim/model.hpp"
#include "gemsim/scenario.hpp"

using namespace gemsim;

namespace {

const char* kMinimalScenario = R"(
[grid]
dt = 0.01 us
t_end = 16 us

[physics]
coupling_g = 1.0
density_nl = 3000
detuning = 3000 MHz
gamma_12 = 0

[gradient]
slope = 32
flip_time = 8 us

[control]
rabi = 2pi*50

[pulses]
center = 4 us
width = 2 us
)";

bool mentions(const ScenarioParseError& e, const std::string& needle)
{
    return std::any_of(e.errors.begin(), e.errors.end(), [&](const ScenarioError& x) {
        return x.message.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("an empty file is missing its required sections")
{
    try {
        parse_scenario("");
        FAIL("expected a parse error");
    } catch (const ScenarioParseError& e) {
        CHECK(mentions(e, "missing required section [physics]"));
        CHECK(mentions(e, "missing required section [grid]"));
    }
}

TEST_CASE("a minimal scenario parses with the documented unit conversions")
{
    ScenarioSpec spec = parse_scenario(kMinimalScenario);
    CHECK(spec.dt == doctest::Approx(0.01));
    CHECK(spec.t_end == doctest::Approx(16.0));
    CHECK(spec.slope == doctest::Approx(32.0));            // bare value is rad/us
    CHECK(spec.detuning == doctest::Approx(two_pi * 3000.0)); // MHz -> 2 pi MHz
    CHECK(spec.rabi == doctest::Approx(two_pi * 50.0));    // 2pi* marks angular
    CHECK(spec.center == doctest::Approx(4.0));
    CHECK(spec.resolved_kind() == "storage_recall");
}

TEST_CASE("kilohertz values convert to angular rad/us")
{
    std::string text = kMinimalScenario;
    text.replace(text.find("slope = 32"), 10, "slope = 300 kHz");
    ScenarioSpec spec = parse_scenario(text);
    CHECK(spec.slope == doctest::Approx(two_pi * 0.3).epsilon(1e-12));
}

TEST_CASE("the angular prefix refuses to combine with a unit suffix")
{
    std::string text = kMinimalScenario;
    text.replace(text.find("slope = 32"), 10, "slope = 2pi*300 kHz");
    try {
        parse_scenario(text);
        FAIL("expected a parse error");
    } catch (const ScenarioParseError& e) {
        CHECK(mentions(e, "2pi* prefix cannot be combined"));
    }
}

TEST_CASE("misspelled and duplicate keys are reported with line numbers")
{
    std::string text = kMinimalScenario;
    text += "slop = 12\nwidth = 2 us\n"; // typo, then a duplicate in [pulses]
    try {
        parse_scenario(text);
        FAIL("expected a parse error");
    } catch (const ScenarioParseError& e) {
        CHECK(mentions(e, "unknown key 'slop'"));
        CHECK(mentions(e, "duplicate key 'width'"));
        for (const auto& err : e.errors) CHECK(err.line > 0);
        CHECK(e.errors.size() == 2); // all problems reported at once
    }
}

TEST_CASE("booleans and comments parse in the output section")
{
    std::string text = kMinimalScenario;
    text += "\n[output]\nspectrum = true  # emit the transmission scan\n";
    ScenarioSpec spec = parse_scenario(text);
    CHECK(spec.emit_spectrum);
    CHECK_FALSE(spec.emit_snapshots);

    text += "snapshots = maybe\n";
    try {
        parse_scenario(text);
        FAIL("expected a parse error");
    } catch (const ScenarioParseError& e) {
        CHECK(mentions(e, "expected true or false"));
    }
}

TEST_CASE("multi-pulse scenarios need a spacing")
{
    std::string text = kMinimalScenario;
    text += "count = 5\n"; // appended into [pulses]
    try {
        parse_scenario(text);
        FAIL("expected a parse error");
    } catch (const ScenarioParseError& e) {
        CHECK(mentions(e, "pulses.spacing is required"));
    }
    text += "spacing = 2 us\n";
    ScenarioSpec spec = parse_scenario(text);
    CHECK(spec.pulse_count == 5);
    CHECK(spec.resolved_kind() == "multi_pulse");
}

TEST_CASE("rendering and reparsing is the identity")
{
    ScenarioSpec spec = parse_scenario(kMinimalScenario);
    spec.kappa_sc = 2.32366e-6;
    spec.recall_slope_ratio = 1.3;
    spec.recall_offset = two_pi * 0.6;
    spec.snapshot_times = {4.0, 8.0, 12.0};
    spec.pulse_count = 3;
    spec.spacing = 2.0;
    spec.off_during_storage = true;
    spec.amplitude = 0.731;
    spec.carrier_offset = -1.0 / 3.0;
    ScenarioSpec back = parse_scenario(render_scenario(spec));
    CHECK(back == spec);
}

TEST_CASE("a parsed scenario builds a config that validates")
{
    ScenarioSpec spec = parse_scenario(kMinimalScenario);
    ExperimentConfig cfg = spec.build_config();
    CHECK(validate(cfg).empty());
    CHECK(cfg.flip_time == doctest::Approx(8.0));
    REQUIRE(cfg.gradient.segments.size() == 2);
    CHECK(cfg.gradient.segments[1].slope == doctest::Approx(-32.0));
}

TEST_CASE("recall settings fold into the post-flip gradient segment")
{
    std::string ratio_only = kMinimalScenario;
    ratio_only += "\n[recall]\nslope_ratio = 2\n";
    CHECK(parse_scenario(ratio_only).resolved_kind() == "bandwidth_scaled");

    std::string text = kMinimalScenario;
    text += "\n[recall]\nslope_ratio = 2\noffset = 600 kHz\n";
    ScenarioSpec spec = parse_scenario(text);
    CHECK(spec.resolved_kind() == "frequency_shift");
    ExperimentConfig cfg = spec.build_config();
    REQUIRE(cfg.gradient.segments.size() == 2);
    CHECK(cfg.gradient.segments[0].slope == doctest::Approx(32.0));
    CHECK(cfg.gradient.segments[0].offset == doctest::Approx(0.0));
    CHECK(cfg.gradient.segments[1].slope == doctest::Approx(-64.0));
    CHECK(cfg.gradient.segments[1].offset == doctest::Approx(two_pi * 0.6));
}

TEST_CASE("csv cells are locale-independent and rows are newline separated")
{
    CsvWriter w({"a", "b"});
    w.add_row({CsvWriter::cell(1.5), CsvWriter::cell(static_cast<long long>(7))});
    w.add_row({CsvWriter::cell(0.25), CsvWriter::cell(-3.0)});
    CHECK(w.text() == "a,b\n1.5,7\n0.25,-3\n");
    CHECK_THROWS_AS(w.add_row({"only-one"}), std::logic_error);
}

TEST_CASE("atomic writes leave a complete file and no temporaries")
{
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gemsim_csv_test";
    fs::create_directories(dir);
    fs::path target = dir / "out.csv";

    atomic_write(target.string(), "x,y\n1,2\n");
    std::ifstream in(target);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "x,y\n1,2\n");

    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(dir)) { (void)e; ++entries; }
    CHECK(entries == 1); // the temporary was renamed away
    fs::remove_all(dir);
}
