#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ecgode/edm.hpp"

using namespace ecgode;

namespace {
constexpr double kPi = std::numbers::pi;

EdmParams silent() {
    EdmParams eta = EdmParams::defaults();
    for (auto& e : eta.waves) e.a = 0.0;
    return eta;
}
}  // namespace

TEST_CASE("wrap_angle examples") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2).epsilon(1e-15));
    CHECK(wrap_angle(-kPi) == -kPi);
    CHECK(wrap_angle(kPi) == -kPi);
    CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
    CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST_CASE("wrap_angle lands in range, preserves the angle mod 2pi and is idempotent") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 10000; ++i) {
        const double phi = u(rng);
        const double w = wrap_angle(phi);
        REQUIRE(w >= -kPi);
        REQUIRE(w < kPi);
        const double turns = (phi - w) / (2 * kPi);
        CHECK(std::abs(turns - std::round(turns)) < 1e-12);
        CHECK(wrap_angle(w) == w);
    }
}

TEST_CASE("eval_rhs on the unit circle with silent waves") {
    const RhythmParams rhythm{1.0, 0.0, 0.25};
    const auto r = eval_rhs(State{1.0, 0.0, 0.0, 0.0}, silent(), rhythm);
    CHECK(r.fx == 0.0);
    CHECK(r.fy == doctest::Approx(rhythm.omega()));
    CHECK(r.fz == 0.0);
}

TEST_CASE("origin is a fixed point of the (x, y) subsystem") {
    const auto r = eval_rhs(State{0.0, 0.0, 0.0, 0.0}, EdmParams::defaults(), RhythmParams{});
    CHECK(r.fx == 0.0);
    CHECK(r.fy == 0.0);
}

TEST_CASE("R term vanishes at the R centre") {
    const EdmParams eta = EdmParams::defaults();
    const RhythmParams rhythm{1.0, 0.0, 0.25};
    const double theta_r = eta[Wave::R].theta;
    const auto r = eval_rhs(State{std::cos(theta_r), std::sin(theta_r), 0.0, 0.0}, eta, rhythm);

    EdmParams without_r = eta;
    without_r[Wave::R].a = 0.0;
    const auto expected = eval_rhs(State{std::cos(theta_r), std::sin(theta_r), 0.0, 0.0}, without_r, rhythm);
    CHECK(r.fz == doctest::Approx(expected.fz).epsilon(1e-14));
}

TEST_CASE("tangency and rotation rate on the limit cycle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> rate(0.5, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double phi = angle(rng);
        const RhythmParams rhythm{rate(rng), 0.1, 0.25};
        const State s{std::cos(phi), std::sin(phi), 0.3, 1.7};
        const auto r = eval_rhs(s, EdmParams::defaults(), rhythm);
        CHECK(std::abs(s.x * r.fx + s.y * r.fy) < 1e-12);
        CHECK(s.x * r.fy - s.y * r.fx == doctest::Approx(rhythm.omega()).epsilon(1e-12));
    }
}

TEST_CASE("a single wave's forcing is odd about its centre") {
    EdmParams only_r = silent();
    only_r[Wave::R].a = 30.0;
    for (double d : {0.01, 0.05, 0.1, 0.3}) {
        CHECK(wave_forcing(d, only_r) == doctest::Approx(-wave_forcing(-d, only_r)).epsilon(1e-14));
    }
}

TEST_CASE("baseline wander") {
    CHECK(baseline(0.0, RhythmParams{1.0, 0.4, 0.3}) == 0.0);
    CHECK(baseline(12.3, RhythmParams{1.0, 0.0, 0.3}) == 0.0);
    CHECK(baseline(1.0, RhythmParams{1.0, 0.15, 0.25}) == doctest::Approx(0.15).epsilon(1e-15));
}

TEST_CASE("eval_rhs is deterministic") {
    const State s{0.3, -0.8, 0.02, 0.4};
    const auto a = eval_rhs(s, EdmParams::defaults(), RhythmParams{});
    const auto b = eval_rhs(s, EdmParams::defaults(), RhythmParams{});
    CHECK(a.fx == b.fx);
    CHECK(a.fy == b.fy);
    CHECK(a.fz == b.fz);
}

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(EdmParams::defaults().validate());
    EdmParams bad = EdmParams::defaults();
    bad[Wave::R].b = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = EdmParams::defaults();
    bad[Wave::Q].theta = 0.5;  // after R
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = EdmParams::defaults();
    bad[Wave::T].theta = kPi;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);

    CHECK_THROWS_AS((RhythmParams{0.0, 0.0, 0.0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((RhythmParams{1.0, -0.1, 0.0}.validate()), InvalidArgument);
}

TEST_CASE("parameter vector layout round-trips") {
    const EdmParams eta = EdmParams::defaults();
    const EtaVector v = eta.to_vector();
    CHECK(v(amplitude_index(Wave::R)) == 30.0);
    CHECK(v(width_index(Wave::T)) == 0.4);
    CHECK(v(theta_index(Wave::P)) == -kPi / 3);
    CHECK(EdmParams::from_vector(v) == eta);
}

TEST_CASE("single-precision instantiation agrees with double") {
    const auto rf = eval_rhs(BasicState<float>{0.6f, 0.7f, 0.01f, 0.2f},
                             BasicEdmParams<float>::defaults(), BasicRhythmParams<float>{});
    const auto rd = eval_rhs(State{0.6, 0.7, 0.01, 0.2}, EdmParams::defaults(), RhythmParams{});
    CHECK(rf.fx == doctest::Approx(rd.fx).epsilon(1e-5));
    CHECK(rf.fy == doctest::Approx(rd.fy).epsilon(1e-5));
    CHECK(rf.fz == doctest::Approx(rd.fz).epsilon(1e-4));
}
