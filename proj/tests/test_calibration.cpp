#include <doctest.h>

#include <cmath>
#include <vector>

#include "dyncomp/calibration.hpp"
#include "dyncomp/errors.hpp"

using namespace dyncomp;

namespace {

MismatchSample single(const char* name, double dvth) {
    MismatchSample s;
    s.set(name, {dvth, 0.0});
    return s;
}

const Comparator& engine() {
    static const Comparator e{ComparatorConfig{}};
    return e;
}

// Zero-bias body-effect slope of the default PMOS: gamma / (2 sqrt(phi2f)).
double pmos_slope() { return 0.4 / (2.0 * std::sqrt(0.7)); }

}  // namespace

TEST_CASE("dac output") {
    CalibrationConfig cal;
    cal.c0 = 100e-15;
    cal.dac_caps = {100e-15, 50e-15};
    CHECK(dac_output_for_code(0, cal, 1.8) == 1.8);
    CHECK(dac_output_for_code(1, cal, 1.8) == doctest::Approx(0.9).epsilon(1e-15));

    const auto ladder = binary_weighted_ladder();
    const double expect[] = {0.8, 2.0 / 3.0, 0.5, 1.0 / 3.0, 0.2, 1.0 / 9.0};
    for (int k = 1; k <= 6; ++k) {
        CHECK(dac_output(k, ladder, 1.0) == doctest::Approx(expect[k - 1]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dac_output(0, ladder, 1.8), RangeError);
    CHECK_THROWS_AS(dac_output(7, ladder, 1.8), RangeError);
}

TEST_CASE("dac sequence falls and steps shrink") {
    for (const auto& cal : {CalibrationConfig{}, binary_weighted_ladder()}) {
        double prev_d = 2.0, prev_s = 1.0;
        for (int k = 1; k <= cal.n_cycles; ++k) {
            const double d = dac_output(k, cal, 1.8);
            const double s = cp_step(d, cal, cal.t_period);
            CHECK(d < prev_d);
            CHECK(d <= 1.8);
            CHECK(s <= prev_s);
            CHECK(s >= 0.0);
            prev_d = d;
            prev_s = s;
        }
    }
}

TEST_CASE("charge pump step") {
    CalibrationConfig cal;
    cal.cp_beta = 50e-6;
    cal.cp_vthn = 0.45;
    cal.cb = 1e-12;
    CHECK(cp_step(0.3, cal, 3e-9) == 0.0);
    CHECK(cp_step(0.45, cal, 3e-9) == 0.0);
    const double i = 0.5 * 50e-6 * 0.99 * 0.99;
    CHECK(i == doctest::Approx(24.5e-6).epsilon(1e-3));
    CHECK(cp_step(1.44, cal, 3e-9) == doctest::Approx(i * 3e-9 / 1e-12).epsilon(1e-12));
    CHECK(cp_step(1.44, cal, 3e-9) == doctest::Approx(73.5e-3).epsilon(1e-3));
    double prev = 0.0;
    for (double d = 0.0; d <= 1.8; d += 0.05) {
        CHECK(cp_step(d, cal, 3e-9) >= prev);
        prev = cp_step(d, cal, 3e-9);
    }
    CHECK_THROWS_AS(cp_step(-0.1, cal, 3e-9), RangeError);
}

TEST_CASE("offset of a matched comparator") {
    const OperatingPoint op;
    const auto m = locate_offset(engine(), op, {}, {1.8, 1.8});
    CHECK(std::abs(m.offset) <= 20e-6);
    CHECK(m.iterations <= 15);
}

TEST_CASE("a 10 mV input-device shift shows up as about 10 mV of offset") {
    const OperatingPoint op;
    const auto mm = single("Mp4", 10e-3);
    const double off = measure_offset(engine(), op, mm, {1.8, 1.8});
    CHECK(off >= 8e-3);
    CHECK(off <= 12e-3);

    // Brute-force scan at 0.1 mV for the first +1 decision.
    double flip = NAN;
    for (int k = -1000; k <= 1000; ++k) {
        OperatingPoint at = op;
        at.vid = k * 1e-4;
        if (engine().simulate(at, mm).decision > 0) {
            flip = at.vid;
            break;
        }
    }
    REQUIRE(std::isfinite(flip));
    CHECK(off <= flip + 1e-5);
    CHECK(off >= flip - 1e-4 - 1e-5);

    CHECK(measure_offset(engine(), op, single("Mp4", -10e-3), {1.8, 1.8}) ==
          doctest::Approx(-off).epsilon(1e-2));
}

TEST_CASE("offset beyond the search span") {
    OffsetSearch s;
    s.span = 5e-3;
    CHECK_THROWS_AS(measure_offset(engine(), OperatingPoint{}, single("Mp4", 10e-3), {1.8, 1.8}, s),
                    SpanError);
}

TEST_CASE("residual bound") {
    CHECK(residual_bound(5e-3, 0.15) == doctest::Approx(0.75e-3).epsilon(1e-12));
    const CalibrationConfig cal;
    const OperatingPoint op;
    const double step6 = cp_step(dac_output(6, cal, 1.8), cal, cal.t_period);
    CHECK(residual_bound(cal, engine(), op) == doctest::Approx(step6 * pmos_slope()).epsilon(1e-12));

    CalibrationConfig big = cal;
    big.cb *= 2;
    CHECK(residual_bound(big, engine(), op) ==
          doctest::Approx(residual_bound(cal, engine(), op) / 2).epsilon(1e-12));

    DeviceSet flat;
    flat.pmos.gamma = 0.0;
    const Comparator no_body(ComparatorConfig{}, flat);
    CHECK(residual_bound(cal, no_body, op) == 0.0);
}

TEST_CASE("calibration of a matched comparator stays within one step") {
    const auto r = run_calibration(engine(), OperatingPoint{}, {}, CalibrationConfig{});
    CHECK(std::abs(r.offset_after) <= std::abs(r.offset_before) + r.bound);
    CHECK(r.state.history.size() == 6);
}

TEST_CASE("positive offset discharges vb_plus first, then alternates") {
    // Mp5 slow: Vo+ high at zero input.
    const auto mm = single("Mp5", 10e-3);
    OperatingPoint zero;
    zero.vid = 0.0;
    REQUIRE(engine().simulate(zero, mm).decision == +1);

    const auto r = run_calibration(engine(), OperatingPoint{}, mm, CalibrationConfig{});
    const auto& h = r.state.history;
    REQUIRE(h.size() == 6);
    CHECK(h[0].s == +1);
    CHECK(h[0].vb_plus < 1.8);
    CHECK(h[0].vb_minus == 1.8);

    // The first step overshoots, so the next correction comes from the other side.
    bool switched = false;
    for (std::size_t i = 1; i < h.size(); ++i) switched |= h[i].s != h[0].s;
    CHECK(switched);
    CHECK(std::abs(r.offset_after) < std::abs(r.offset_before));
    CHECK(r.converged);
}

TEST_CASE("each cycle lowers exactly one body voltage") {
    for (double d : {-30e-3, -7e-3, 3e-3, 22e-3}) {
        const auto r = run_calibration(engine(), OperatingPoint{}, single("Mp4", d), CalibrationConfig{});
        double vp = 1.8, vm = 1.8;
        for (const auto& h : r.state.history) {
            CHECK(h.vb_plus <= vp);
            CHECK(h.vb_minus <= vm);
            CHECK(((h.vb_plus < vp) != (h.vb_minus < vm)));
            CHECK(((h.s > 0) == (h.vb_plus < vp)));
            vp = h.vb_plus;
            vm = h.vb_minus;
        }
    }
}

TEST_CASE("loop history matches a straight-line recurrence") {
    const CalibrationConfig cal;
    for (double d : {-40e-3, -12e-3, 0.5e-3, 9e-3, 35e-3}) {
        const auto mm = single("Mp4", d);
        const auto r = run_calibration(engine(), OperatingPoint{}, mm, cal);

        OperatingPoint zero;
        zero.vid = 0.0;
        zero.vcm = 0.9;
        double vp = 1.8, vm = 1.8;
        REQUIRE(r.state.history.size() == 6);
        for (int k = 1; k <= 6; ++k) {
            const int s = engine().simulate(zero, mm, BodyBias{vp, vm}).decision;
            const double daco = 1.8 * 100e-15 / (100e-15 + k * 26e-15);
            const double ov = std::max(0.0, daco - 0.45);
            const double step = 0.5 * 90e-6 * ov * ov * (1.0 / 333e6) / 1e-12;
            (s > 0 ? vp : vm) -= step;
            const auto& h = r.state.history[static_cast<std::size_t>(k - 1)];
            CHECK(h.cycle == k);
            CHECK(h.tn == k);
            CHECK(h.s == s);
            CHECK(h.daco == doctest::Approx(daco).epsilon(1e-14));
            CHECK(h.step == doctest::Approx(step).epsilon(1e-13));
            CHECK(h.vb_plus == doctest::Approx(vp).epsilon(1e-14));
            CHECK(h.vb_minus == doctest::Approx(vm).epsilon(1e-14));
        }
    }
}

TEST_CASE("offset beyond the step budget is reduced but not cancelled") {
    const auto r = run_calibration(engine(), OperatingPoint{}, single("Mp4", 95e-3), CalibrationConfig{});
    CHECK_FALSE(r.converged);
    CHECK(std::abs(r.offset_after) < std::abs(r.offset_before));
    CHECK(std::abs(r.offset_after) > r.bound);
}

TEST_CASE("body voltages clamp at ground") {
    CalibrationConfig cal;
    cal.cb = 20e-15;
    // Default body model is invalid that far into forward bias; the engine error propagates.
    CHECK_THROWS_AS(run_calibration(engine(), OperatingPoint{}, single("Mp4", 5e-3), cal), DomainError);

    DeviceSet deep;
    deep.pmos.phi2f = 2.0;
    const Comparator e(ComparatorConfig{}, deep);
    const auto r = run_calibration(e, OperatingPoint{}, single("Mp4", 5e-3), cal, OffsetSearch{10e-6, 0.5});
    CHECK(r.state.saturated);
    CHECK(r.state.vb_plus >= 0.0);
    CHECK(r.state.vb_minus >= 0.0);
    CHECK(((r.state.vb_plus == 0.0) || (r.state.vb_minus == 0.0)));
}

TEST_CASE("calibration config validation") {
    CalibrationConfig cal;
    cal.n_cycles = 8;
    CHECK_THROWS_AS(cal.validate(), RangeError);
    cal = {};
    cal.cb = 0;
    CHECK_THROWS_AS(cal.validate(), RangeError);
    cal = {};
    cal.dac_caps = {26e-15};
    CHECK_THROWS_AS(cal.validate(), RangeError);
}

TEST_CASE("histogram") {
    const auto h = make_histogram({0.0, 1.0, 2.0, 3.0, 4.0}, 4);
    CHECK(h.lo == 0.0);
    CHECK(h.hi == 4.0);
    CHECK(h.counts == std::vector<std::size_t>{1, 1, 1, 2});
    const auto one = make_histogram({0.5}, 10);
    CHECK(one.counts == std::vector<std::size_t>{1});
    CHECK(one.bin_width() == 0.0);
}

TEST_CASE("single trial without mismatch") {
    MonteCarloOptions o;
    o.trials = 1;
    o.mismatch = {0.0, 0.0};
    const auto s = monte_carlo(engine(), OperatingPoint{}, CalibrationConfig{}, o);
    CHECK(s.n == 1);
    CHECK(std::abs(s.mean) <= 20e-6);
    CHECK(s.sigma == 0.0);
}

TEST_CASE("monte carlo is reproducible and thread independent") {
    MonteCarloOptions o;
    o.trials = 60;
    o.calibrate = true;
    o.seed = 17;
    const auto a = monte_carlo(engine(), OperatingPoint{}, CalibrationConfig{}, o);
    const auto b = monte_carlo(engine(), OperatingPoint{}, CalibrationConfig{}, o);
    o.threads = 6;
    const auto c = monte_carlo(engine(), OperatingPoint{}, CalibrationConfig{}, o);
    CHECK(a.offsets == b.offsets);
    CHECK(a.offsets == c.offsets);
    CHECK(a.mean == c.mean);
    CHECK(a.sigma == c.sigma);
    CHECK(a.histogram.counts == c.histogram.counts);
    CHECK(a.sigma >= 0.0);
}

TEST_CASE("span failures are counted, not thrown") {
    MonteCarloOptions o;
    o.trials = 40;
    o.search.span = 2e-3;
    const auto s = monte_carlo(engine(), OperatingPoint{}, CalibrationConfig{}, o);
    CHECK(s.failed > 0);
    CHECK(s.failed + s.offsets.size() == 40);
    CHECK(s.failed_trials.size() == s.failed);
}

TEST_CASE("converged calibrated trials respect the bound") {
    MonteCarloOptions o;
    o.trials = 100;
    o.calibrate = true;
    const OperatingPoint op;
    const CalibrationConfig cal;
    const double bound = residual_bound(cal, engine(), op);
    const auto& geoms = engine().config().geoms.devices();
    std::size_t converged = 0;
    for (std::size_t t = 0; t < o.trials; ++t) {
        const auto mm = sample_mismatch(o.seed, t, geoms, 5e-9, 1e-8);
        const auto r = run_calibration(engine(), op, mm, cal);
        if (r.converged) {
            ++converged;
            CHECK(std::abs(r.offset_after) <= bound);
            CHECK(std::abs(r.offset_after) <= std::abs(r.offset_before) + bound);
        }
    }
    CHECK(converged > 0);
}

TEST_CASE("pelgrom prediction for the input pair") {
    const double p = pelgrom_pair_sigma(default_geometry(), MismatchModel{});
    CHECK(p == doctest::Approx(std::sqrt(2.0) * 5e-9 / std::sqrt(1.2e-6 * 0.18e-6)).epsilon(1e-12));
}
