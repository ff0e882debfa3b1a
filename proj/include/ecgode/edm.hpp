#pragma once

// ECG dynamical model: three coupled ODEs whose (x, y) part is attracted to
// the unit circle and whose z part is pushed by five Gaussian events
// (P, Q, R, S, T) placed at fixed angles on that circle.
//
//   dx/dt = alpha x - omega y
//   dy/dt = alpha y + omega x
//   dz/dt = -sum_i a_i dtheta_i exp(-dtheta_i^2 / (2 b_i^2)) - (z - z0(t))
//
// with alpha = 1 - sqrt(x^2 + y^2), omega = 2 pi f, z0(t) = A sin(2 pi f2 t)
// and dtheta_i = atan2(y, x) - theta_i wrapped into [-pi, pi).
//
// Everything here is header-only and templated on the scalar type.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "ecgode/error.hpp"

namespace ecgode {

enum class Wave : std::size_t { P = 0, Q, R, S, T };

inline constexpr std::size_t kWaveCount = 5;
inline constexpr std::array<Wave, kWaveCount> kWaves{Wave::P, Wave::Q, Wave::R, Wave::S, Wave::T};

// Parameter vectors are laid out as [theta_P..theta_T, a_P..a_T, b_P..b_T].
inline constexpr std::size_t kEtaSize = 3 * kWaveCount;

constexpr std::size_t theta_index(Wave w) { return static_cast<std::size_t>(w); }
constexpr std::size_t amplitude_index(Wave w) { return kWaveCount + static_cast<std::size_t>(w); }
constexpr std::size_t width_index(Wave w) { return 2 * kWaveCount + static_cast<std::size_t>(w); }

constexpr std::string_view wave_name(Wave w) {
    constexpr std::array<std::string_view, kWaveCount> names{"P", "Q", "R", "S", "T"};
    return names[static_cast<std::size_t>(w)];
}

// Smallest admissible Gaussian width; the forcing term is singular at b = 0.
inline constexpr double kMinWidth = 1e-3;

/// Wraps an angle into [-pi, pi). Angles already in range are returned
/// untouched, which makes the function exactly idempotent.
template <typename Scalar>
Scalar wrap_angle(Scalar phi) {
    if (!std::isfinite(phi)) {
        throw InvalidArgument("wrap_angle: non-finite angle");
    }
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    if (phi >= -pi && phi < pi) {
        return phi;
    }
    constexpr Scalar two_pi = 2 * pi;
    Scalar r = std::fmod(phi + pi, two_pi);
    if (r < 0) {
        r += two_pi;
    }
    if (r >= two_pi) {
        r = 0;
    }
    return r - pi;
}

template <typename Scalar>
struct BasicWaveParams {
    Scalar theta{};  // event centre on the limit cycle, rad
    Scalar a{};      // amplitude, model units
    Scalar b{};      // angular width, rad
};

template <typename Scalar>
struct BasicEdmParams {
    using Vector = Eigen::Matrix<Scalar, static_cast<int>(kEtaSize), 1>;

    std::array<BasicWaveParams<Scalar>, kWaveCount> waves{};

    BasicWaveParams<Scalar>& operator[](Wave w) { return waves[static_cast<std::size_t>(w)]; }
    const BasicWaveParams<Scalar>& operator[](Wave w) const {
        return waves[static_cast<std::size_t>(w)];
    }

    // Reference morphology of the dynamical model (normal sinus beat).
    static BasicEdmParams defaults() {
        constexpr Scalar pi = std::numbers::pi_v<Scalar>;
        BasicEdmParams p;
        p[Wave::P] = {-pi / 3, Scalar(1.2), Scalar(0.25)};
        p[Wave::Q] = {-pi / 12, Scalar(-5.0), Scalar(0.1)};
        p[Wave::R] = {Scalar(0), Scalar(30.0), Scalar(0.1)};
        p[Wave::S] = {pi / 12, Scalar(-7.5), Scalar(0.1)};
        p[Wave::T] = {pi / 2, Scalar(0.75), Scalar(0.4)};
        return p;
    }

    Vector to_vector() const {
        Vector v;
        for (Wave w : kWaves) {
            v(theta_index(w)) = (*this)[w].theta;
            v(amplitude_index(w)) = (*this)[w].a;
            v(width_index(w)) = (*this)[w].b;
        }
        return v;
    }

    static BasicEdmParams from_vector(const Vector& v) {
        BasicEdmParams p;
        for (Wave w : kWaves) {
            p[w] = {v(theta_index(w)), v(amplitude_index(w)), v(width_index(w))};
        }
        return p;
    }

    // Checks finite values, b > 0, theta in [-pi, pi) and the P<Q<R<S<T order.
    void validate() const {
        constexpr Scalar pi = std::numbers::pi_v<Scalar>;
        for (Wave w : kWaves) {
            const auto& e = (*this)[w];
            const std::string name(wave_name(w));
            if (!std::isfinite(e.theta) || !std::isfinite(e.a) || !std::isfinite(e.b)) {
                throw InvalidArgument("wave " + name + ": non-finite parameter");
            }
            if (!(e.b > 0)) {
                throw InvalidArgument("wave " + name + ": width b must be positive");
            }
            if (e.theta < -pi || e.theta >= pi) {
                throw InvalidArgument("wave " + name + ": theta outside [-pi, pi)");
            }
        }
        for (std::size_t i = 1; i < kWaveCount; ++i) {
            if (!(waves[i - 1].theta < waves[i].theta)) {
                throw InvalidArgument("wave centres must satisfy theta_P < theta_Q < theta_R < "
                                      "theta_S < theta_T");
            }
        }
    }

    bool operator==(const BasicEdmParams& o) const {
        for (std::size_t i = 0; i < kWaveCount; ++i) {
            if (waves[i].theta != o.waves[i].theta || waves[i].a != o.waves[i].a ||
                waves[i].b != o.waves[i].b) {
                return false;
            }
        }
        return true;
    }
};

template <typename Scalar>
struct BasicRhythmParams {
    Scalar f = Scalar(1.0);     // heart rate, Hz
    Scalar A = Scalar(0.005);   // baseline wander amplitude, model units
    Scalar f2 = Scalar(0.25);   // respiratory frequency, Hz

    Scalar omega() const { return 2 * std::numbers::pi_v<Scalar> * f; }

    void validate() const {
        if (!(std::isfinite(f) && f > 0)) throw InvalidArgument("rhythm: f must be positive");
        if (!(std::isfinite(A) && A >= 0)) throw InvalidArgument("rhythm: A must be >= 0");
        if (!(std::isfinite(f2) && f2 >= 0)) throw InvalidArgument("rhythm: f2 must be >= 0");
    }

    bool operator==(const BasicRhythmParams&) const = default;
};

template <typename Scalar>
struct BasicState {
    Scalar x{};
    Scalar y{};
    Scalar z{};
    Scalar t{};  // seconds
};

template <typename Scalar>
struct Rates {
    Scalar fx{};
    Scalar fy{};
    Scalar fz{};
};

template <typename Scalar>
Scalar baseline(Scalar t, const BasicRhythmParams<Scalar>& rhythm) {
    return rhythm.A * std::sin(2 * std::numbers::pi_v<Scalar> * rhythm.f2 * t);
}

/// Gaussian-event part of dz/dt at limit-cycle angle `phase`:
/// -sum_i a_i dtheta_i exp(-dtheta_i^2 / (2 b_i^2)).
template <typename Scalar>
Scalar wave_forcing(Scalar phase, const BasicEdmParams<Scalar>& eta) {
    Scalar acc = 0;
    for (const auto& e : eta.waves) {
        const Scalar d = wrap_angle(phase - e.theta);
        acc -= e.a * d * std::exp(-d * d / (2 * e.b * e.b));
    }
    return acc;
}

template <typename Scalar>
Scalar eval_fz(Scalar x, Scalar y, Scalar z, Scalar t, const BasicEdmParams<Scalar>& eta,
               const BasicRhythmParams<Scalar>& rhythm) {
    return wave_forcing(std::atan2(y, x), eta) - (z - baseline(t, rhythm));
}

template <typename Scalar>
Rates<Scalar> eval_rhs(const BasicState<Scalar>& s, const BasicEdmParams<Scalar>& eta,
                       const BasicRhythmParams<Scalar>& rhythm) {
    const Scalar alpha = 1 - std::sqrt(s.x * s.x + s.y * s.y);
    const Scalar omega = rhythm.omega();
    return {alpha * s.x - omega * s.y, alpha * s.y + omega * s.x,
            eval_fz(s.x, s.y, s.z, s.t, eta, rhythm)};
}

using WaveParams = BasicWaveParams<double>;
using EdmParams = BasicEdmParams<double>;
using RhythmParams = BasicRhythmParams<double>;
using State = BasicState<double>;
using EtaVector = EdmParams::Vector;

// Start of a beat: on the limit cycle at angle -pi, so one revolution sweeps
// P through T in order.
template <typename Scalar = double>
constexpr BasicState<Scalar> beat_start_state() {
    return {Scalar(-1), Scalar(0), Scalar(0), Scalar(0)};
}

}  // namespace ecgode
