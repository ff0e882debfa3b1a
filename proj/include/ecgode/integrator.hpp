#pragma once

// Fixed-step integration of the dynamical model on a uniform sampling grid.

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "ecgode/edm.hpp"
#include "ecgode/error.hpp"

namespace ecgode {

// Any coordinate whose magnitude exceeds this aborts the integration.
inline constexpr double kDivergenceBound = 1e6;

template <typename Scalar>
class BasicSamplingGrid {
public:
    BasicSamplingGrid(Scalar fs, std::size_t length) : fs_(fs), length_(length), dt_(1 / fs) {
        if (!(std::isfinite(fs) && fs > 0)) {
            throw InvalidArgument("sampling grid: fs must be positive");
        }
        if (length < 2) {
            throw InvalidArgument("sampling grid: need at least 2 samples");
        }
    }

    /// One beat at the rhythm's rate spans round(fs / f) samples.
    static BasicSamplingGrid for_beat(Scalar fs, const BasicRhythmParams<Scalar>& rhythm) {
        rhythm.validate();
        return BasicSamplingGrid(fs, static_cast<std::size_t>(std::llround(fs / rhythm.f)));
    }

    Scalar fs() const { return fs_; }
    std::size_t size() const { return length_; }
    Scalar dt() const { return dt_; }
    Scalar time(std::size_t l, Scalar t0 = 0) const { return t0 + static_cast<Scalar>(l) * dt_; }

    bool operator==(const BasicSamplingGrid&) const = default;

private:
    Scalar fs_;
    std::size_t length_;
    Scalar dt_;
};

template <typename Scalar>
struct BasicTrajectory {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicSamplingGrid<Scalar> grid;
    Scalar t0{};  // time of sample 0
    Vector x;
    Vector y;
    Vector z;

    explicit BasicTrajectory(const BasicSamplingGrid<Scalar>& g, Scalar start_time = 0)
        : grid(g), t0(start_time), x(g.size()), y(g.size()), z(g.size()) {}

    std::size_t size() const { return grid.size(); }
    Scalar time(std::size_t l) const { return grid.time(l, t0); }
    BasicState<Scalar> state(std::size_t l) const {
        const auto i = static_cast<Eigen::Index>(l);
        return {x(i), y(i), z(i), time(l)};
    }

    /// Limit-cycle angle atan2(y, x) at every sample.
    Vector phase() const {
        return y.binaryExpr(x, [](Scalar yy, Scalar xx) { return std::atan2(yy, xx); });
    }
};

namespace detail {

template <typename Scalar>
void check_finite_state(const BasicState<Scalar>& s) {
    if (!(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z) && std::isfinite(s.t))) {
        throw InvalidArgument("initial state must be finite");
    }
}

template <typename Scalar>
void store(BasicTrajectory<Scalar>& out, std::size_t l, const BasicState<Scalar>& s) {
    const auto bound = static_cast<Scalar>(kDivergenceBound);
    for (Scalar v : {s.x, s.y, s.z}) {
        if (!std::isfinite(v) || std::abs(v) > bound) {
            throw DivergedError(l, "state magnitude exceeded " + std::to_string(kDivergenceBound));
        }
    }
    const auto i = static_cast<Eigen::Index>(l);
    out.x(i) = s.x;
    out.y(i) = s.y;
    out.z(i) = s.z;
}

template <typename Scalar, typename Step>
BasicTrajectory<Scalar> march(const BasicSamplingGrid<Scalar>& grid, const BasicState<Scalar>& init,
                              Step&& step) {
    check_finite_state(init);
    BasicTrajectory<Scalar> out(grid, init.t);
    BasicState<Scalar> s = init;
    store(out, 0, s);
    for (std::size_t l = 0; l + 1 < grid.size(); ++l) {
        s.t = out.time(l);
        s = step(s);
        s.t = out.time(l + 1);
        store(out, l + 1, s);
    }
    return out;
}

}  // namespace detail

/// Forward Euler: u_{l+1} = u_l + f(u_l, t_l) dt with t_l = init.t + l dt.
template <typename Scalar>
BasicTrajectory<Scalar> integrate_euler(const BasicEdmParams<Scalar>& eta,
                                        const BasicRhythmParams<Scalar>& rhythm,
                                        const BasicSamplingGrid<Scalar>& grid,
                                        const BasicState<Scalar>& init = beat_start_state<Scalar>()) {
    const Scalar dt = grid.dt();
    return detail::march(grid, init, [&](const BasicState<Scalar>& s) {
        const auto r = eval_rhs(s, eta, rhythm);
        return BasicState<Scalar>{s.x + r.fx * dt, s.y + r.fy * dt, s.z + r.fz * dt, s.t};
    });
}

/// Classical four-stage Runge-Kutta on the same grid.
template <typename Scalar>
BasicTrajectory<Scalar> integrate_rk4(const BasicEdmParams<Scalar>& eta,
                                      const BasicRhythmParams<Scalar>& rhythm,
                                      const BasicSamplingGrid<Scalar>& grid,
                                      const BasicState<Scalar>& init = beat_start_state<Scalar>()) {
    const Scalar dt = grid.dt();
    const Scalar half = dt / 2;
    return detail::march(grid, init, [&](const BasicState<Scalar>& s) {
        auto shifted = [&](const Rates<Scalar>& k, Scalar h) {
            return BasicState<Scalar>{s.x + k.fx * h, s.y + k.fy * h, s.z + k.fz * h, s.t + h};
        };
        const auto k1 = eval_rhs(s, eta, rhythm);
        const auto k2 = eval_rhs(shifted(k1, half), eta, rhythm);
        const auto k3 = eval_rhs(shifted(k2, half), eta, rhythm);
        const auto k4 = eval_rhs(shifted(k3, dt), eta, rhythm);
        const Scalar w = dt / 6;
        return BasicState<Scalar>{s.x + w * (k1.fx + 2 * k2.fx + 2 * k3.fx + k4.fx),
                                  s.y + w * (k1.fy + 2 * k2.fy + 2 * k3.fy + k4.fy),
                                  s.z + w * (k1.fz + 2 * k2.fz + 2 * k3.fz + k4.fz), s.t};
    });
}

using SamplingGrid = BasicSamplingGrid<double>;
using Trajectory = BasicTrajectory<double>;

}  // namespace ecgode
