#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gemsim/model.hpp"
#include "test_config.hpp"

using namespace gemsim;
using gemsim::testing::BasicScenario;
using gemsim::testing::make_config;

namespace {

bool has_code(const std::vector<Violation>& v, const std::string& code)
{
    return std::any_of(v.begin(), v.end(),
                       [&](const Violation& x) { return x.code == code; });
}

} // namespace

TEST_CASE("validate flags a nonpositive time step")
{
    ExperimentConfig cfg = make_config(BasicScenario{});
    cfg.dt = 0.0;
    auto v = validate(cfg);
    REQUIRE(has_code(v, "grid.dt"));
    bool message_found = false;
    for (const auto& x : v) {
        if (x.code == "grid.dt") message_found = x.message == "nonpositive time step";
    }
    CHECK(message_found);
}

TEST_CASE("validate flags a gap between gradient segments")
{
    ExperimentConfig cfg = make_config(BasicScenario{});
    cfg.gradient.segments[1].start += 0.5; // open a hole after the flip
    auto v = validate(cfg);
    CHECK(has_code(v, "gradient.gap"));
}

TEST_CASE("a well-formed single-flip config validates cleanly")
{
    ExperimentConfig cfg = make_config(BasicScenario{});
    CHECK(validate(cfg).empty());
}

TEST_CASE("validate is total and accumulates violations")
{
    ExperimentConfig cfg;
    cfg.nz = 1;
    cfg.dt = -1.0;
    cfg.t_end = 0.0;
    cfg.physics.coupling_g = -2.0;
    cfg.physics.linear_density = std::numeric_limits<double>::quiet_NaN();
    cfg.physics.detuning_delta = 0.0;
    cfg.physics.gamma_12 = -0.1;
    cfg.input.pulses = {{4.0, -1.0, 1.0, 0.0}};

    std::vector<Violation> v;
    CHECK_NOTHROW(v = validate(cfg));
    CHECK(has_code(v, "grid.nz"));
    CHECK(has_code(v, "grid.dt"));
    CHECK(has_code(v, "grid.t_end"));
    CHECK(has_code(v, "physics.coupling_g"));
    CHECK(has_code(v, "physics.linear_density"));
    CHECK(has_code(v, "physics.detuning_delta"));
    CHECK(has_code(v, "physics.gamma_12"));
    CHECK(has_code(v, "pulse.width"));
    CHECK(v.size() >= 8);
}

TEST_CASE("validate enforces the explicit-scheme stability guard")
{
    ExperimentConfig cfg = make_config(BasicScenario{});
    cfg.dt = 1.0; // dt * |i delta|max = 16 >> 0.5
    auto v = validate(cfg);
    CHECK(has_code(v, "grid.stability"));
}

TEST_CASE("validate requires the pulse energy inside the window")
{
    BasicScenario s;
    s.pulse_center = 0.3; // leading tail spills past t = 0
    ExperimentConfig cfg = make_config(s);
    auto v = validate(cfg);
    CHECK(has_code(v, "pulse.containment"));
}

TEST_CASE("validate requires the flip on a gradient segment boundary")
{
    ExperimentConfig cfg = make_config(BasicScenario{});
    cfg.flip_time += 0.37;
    auto v = validate(cfg);
    CHECK(has_code(v, "grid.flip_time"));
}

TEST_CASE("effective coupling g' = g rabi / delta")
{
    PhysicsParams ph;
    ph.coupling_g = two_pi * 10.0;
    ph.detuning_delta = two_pi * 3000.0;
    CHECK(effective_coupling(ph, 0.0) == 0.0);
    CHECK(effective_coupling(ph, two_pi * 100.0)
          == doctest::Approx(two_pi * 10.0 * 100.0 / 3000.0).epsilon(1e-12));

    ph.coupling_g = ph.detuning_delta; // ratio one
    CHECK(effective_coupling(ph, 7.25) == doctest::Approx(7.25).epsilon(1e-14));
}

TEST_CASE("raman coupling ratio C/D is independent of the control field")
{
    PhysicsParams ph;
    ph.coupling_g = 1.7;
    ph.linear_density = 425.0;
    ph.detuning_delta = two_pi * 3000.0;
    for (double rabi : {1.0, 17.0, 314.159, 1234.5}) {
        CHECK(ph.raman_c(rabi) / ph.raman_d(rabi)
              == doctest::Approx(ph.coupling_g / ph.linear_density).epsilon(1e-14));
    }
}

TEST_CASE("gradient evaluation is continuous across ramped boundaries")
{
    GradientSchedule g;
    g.segments = {
        {0.0, 8.0, 32.0, 0.0, 0.0},
        {8.0, 16.0, -32.0, 3.0, 2.0},
    };
    double s0, o0, s1, o1;
    g.slope_offset_at(8.0, s0, o0);
    CHECK(s0 == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(o0 == doctest::Approx(0.0).epsilon(1e-12));
    // midway through the 2 us ramp both quantities sit halfway
    g.slope_offset_at(9.0, s1, o1);
    CHECK(s1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(o1 == doctest::Approx(1.5).epsilon(1e-12));
    // ramp completion lands exactly on the new segment values
    g.slope_offset_at(10.0, s1, o1);
    CHECK(s1 == doctest::Approx(-32.0).epsilon(1e-12));
    CHECK(o1 == doctest::Approx(3.0).epsilon(1e-12));
    // detuning follows slope*(z - 1/2) + offset
    CHECK(g.detuning(0.5, 4.0) == doctest::Approx(0.0));
    CHECK(g.detuning(1.0, 4.0) == doctest::Approx(16.0));
    CHECK(g.detuning(0.0, 4.0) == doctest::Approx(-16.0));
}

TEST_CASE("flip segment index finds the sign reversal")
{
    GradientSchedule g;
    g.segments = {{0.0, 8.0, 32.0, 0.0, 0.0}, {8.0, 16.0, -32.0, 0.0, 0.0}};
    CHECK(g.flip_segment_index() == 1);
    g.segments[1].slope = 16.0; // same sign: no flip
    CHECK(g.flip_segment_index() == -1);
}

TEST_CASE("control schedule evaluates piecewise with linear ramps")
{
    ControlSchedule c;
    c.segments = {{0.0, 5.0, 300.0, 0.0}, {5.0, 7.0, 0.0, 1.0}, {7.0, 12.0, 300.0, 0.5}};
    CHECK(c.rabi_at(2.0) == doctest::Approx(300.0));
    CHECK(c.rabi_at(5.5) == doctest::Approx(150.0)); // halfway down the ramp
    CHECK(c.rabi_at(6.5) == doctest::Approx(0.0));
    CHECK(c.rabi_at(7.25) == doctest::Approx(150.0)); // halfway back up
    CHECK(c.rabi_at(10.0) == doctest::Approx(300.0));
}

TEST_CASE("pulse field peaks at the center and falls to 1/e at the e2 half-width")
{
    PulseTrain train;
    train.pulses = {{4.0, 2.0, 0.75, 0.0}};
    CHECK(std::abs(train.field_at(4.0)) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(std::abs(train.field_at(5.0)) == doctest::Approx(0.75 / std::exp(1.0)).epsilon(1e-12));
    // carrier offset advances the phase linearly
    train.pulses[0].carrier_offset = two_pi * 0.5;
    std::complex<double> f = train.field_at(4.0);
    CHECK(std::arg(f) == doctest::Approx(std::remainder(two_pi * 0.5 * 4.0, two_pi)).epsilon(1e-12));
}

TEST_CASE("pulse energy fraction covers the whole line and splits at the center")
{
    Pulse p{4.0, 2.0, 1.0, 0.0};
    CHECK(pulse_energy_fraction(p, -100.0, 100.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pulse_energy_fraction(p, -100.0, 4.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pulse_energy_fraction(p, 4.0, 100.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("decoherence hook adds a rabi-squared scattering term")
{
    PhysicsParams ph;
    ph.gamma_12 = 0.02;
    ph.kappa_sc = 1e-6;
    CHECK(ph.decoherence_rate(0.0) == doctest::Approx(0.02));
    CHECK(ph.decoherence_rate(100.0) == doctest::Approx(0.02 + 1e-2).epsilon(1e-12));
}
