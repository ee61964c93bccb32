#include "gfs/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "gfs/errors.hpp"

namespace gfs {

SystemState rk4_step(const HybridDerived& hd, const GlobalConstants& g, SystemState s,
                     double dt) {
    const StateDerivative k1 = hybrid_rhs(s, hd, g);
    const StateDerivative k2 =
        hybrid_rhs({s.delta + 0.5 * dt * k1.ddelta, s.omega_e + 0.5 * dt * k1.domega_e}, hd, g);
    const StateDerivative k3 =
        hybrid_rhs({s.delta + 0.5 * dt * k2.ddelta, s.omega_e + 0.5 * dt * k2.domega_e}, hd, g);
    const StateDerivative k4 =
        hybrid_rhs({s.delta + dt * k3.ddelta, s.omega_e + dt * k3.domega_e}, hd, g);
    s.delta += dt / 6.0 * (k1.ddelta + 2.0 * k2.ddelta + 2.0 * k3.ddelta + k4.ddelta);
    s.omega_e += dt / 6.0 * (k1.domega_e + 2.0 * k2.domega_e + 2.0 * k3.domega_e + k4.domega_e);
    return s;
}

double rk4_step(const TwoInverterCoefficients& tc, double delta, double dt) {
    const double k1 = two_inverter_rhs(delta, tc);
    const double k2 = two_inverter_rhs(delta + 0.5 * dt * k1, tc);
    const double k3 = two_inverter_rhs(delta + 0.5 * dt * k2, tc);
    const double k4 = two_inverter_rhs(delta + dt * k3, tc);
    return delta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TrajectorySample make_sample(const ReducedSystem& sys, TopologyMode mode, double t,
                             const SystemState& s, int flag) {
    const auto& hd = sys.derived(mode);
    TrajectorySample smp;
    smp.t = t;
    smp.delta = s.delta;
    smp.omega_e = s.omega_e;
    smp.omega2 = sys.omega2(mode, s.delta);
    smp.omega1 = s.omega_e + smp.omega2;
    smp.p1 = hd.powers.p1(s.delta);
    smp.p2 = hd.powers.p2(s.delta);
    smp.d_eq = hd.d_eq(s.delta);
    smp.event_flag = flag;
    return smp;
}

TrajectorySample make_sample(const FirstOrderSystem& sys, TopologyMode mode, double t,
                             double delta, int flag) {
    const auto& tc = sys.coeffs(mode);
    TrajectorySample smp;
    smp.t = t;
    smp.delta = delta;
    smp.omega1 = sys.omega1(mode, delta);
    smp.omega2 = sys.omega2(mode, delta);
    smp.omega_e = smp.omega1 - smp.omega2;
    smp.p1 = tc.powers.p1(delta);
    smp.p2 = tc.powers.p2(delta);
    smp.d_eq = 0.0;
    smp.event_flag = flag;
    return smp;
}

void check_finite(double t, double delta) {
    if (!std::isfinite(delta)) {
        throw NumericError("state became non-finite at t = " + std::to_string(t) +
                           " s; reduce the step size");
    }
}

/// Generic segmented fault-study driver shared by both model orders.
/// `StepFn(mode, t, dt)` advances the state; `SampleFn(mode, t, flag)`
/// records; `JumpFn(from, to, t)` applies the event re-initialization.
template <typename StepFn, typename SampleFn, typename JumpFn>
void run_fault_study(const IntegratorConfig& cfg, const EventSchedule& ev, StepFn&& step,
                     SampleFn&& sample, JumpFn&& jump) {
    if (cfg.dt <= 0.0 || cfg.t_end < 0.0 || cfg.record_stride < 1) {
        throw ConfigError("integrator needs dt > 0, t_end >= 0, record_stride >= 1");
    }
    if (!(0.0 <= ev.apply && ev.apply <= ev.clear && ev.clear <= cfg.t_end)) {
        throw ConfigError("event schedule must satisfy 0 <= apply <= clear <= t_end");
    }

    sample(TopologyMode::PreFault, 0.0, 0);
    long step_count = 0;

    const auto run_segment = [&](TopologyMode mode, double t0, double t1) {
        const double span = t1 - t0;
        if (span <= 0.0) {
            return;
        }
        const auto n_full = static_cast<long>(std::floor(span / cfg.dt + 1e-9));
        double t = t0;
        for (long i = 1; i <= n_full; ++i) {
            step(mode, t, cfg.dt);
            t = t0 + static_cast<double>(i) * cfg.dt;
            if (++step_count % cfg.record_stride == 0) {
                sample(mode, t, 0);
            }
        }
        if (t1 - t > 1e-12) {
            step(mode, t, t1 - t);
            ++step_count;
            sample(mode, t1, 0);
        }
    };

    run_segment(TopologyMode::PreFault, 0.0, ev.apply);
    jump(TopologyMode::PreFault, TopologyMode::Fault, ev.apply);
    run_segment(TopologyMode::Fault, ev.apply, ev.clear);
    jump(TopologyMode::Fault, TopologyMode::PostFault, ev.clear);
    run_segment(TopologyMode::PostFault, ev.clear, cfg.t_end);
    sample(TopologyMode::PostFault, cfg.t_end, -1); // -1: final marker, deduplicated below
}

/// Drops the duplicate final sample the driver emits when the last regular
/// sample already landed on t_end.
void dedup_tail(Trajectory& traj) {
    auto& v = traj.samples;
    if (v.size() >= 2 && v.back().event_flag == -1) {
        v.back().event_flag = 0;
        if (std::abs(v[v.size() - 2].t - v.back().t) < 1e-15) {
            v.pop_back();
        }
    }
}

} // namespace

Trajectory integrate(const ReducedSystem& sys, SystemState s0, const IntegratorConfig& cfg,
                     const EventSchedule& ev) {
    Trajectory traj;
    SystemState s = s0;

    run_fault_study(
        cfg, ev,
        [&](TopologyMode mode, double t, double dt) {
            s = rk4_step(sys.derived(mode), sys.g, s, dt);
            check_finite(t, s.delta);
        },
        [&](TopologyMode mode, double t, int flag) {
            traj.samples.push_back(make_sample(sys, mode, t, s, flag));
        },
        [&](TopologyMode from, TopologyMode to, double t) {
            EventRecord rec;
            rec.t = t;
            rec.from = from;
            rec.to = to;
            rec.before = s;
            rec.omega2_before = sys.omega2(from, s.delta);
            if (sys.jump_enabled) {
                s.omega_e = frequency_jump_relative(s.omega_e, s.delta, sys.derived(to).k2,
                                                    sys.derived(from).powers,
                                                    sys.derived(to).powers);
            }
            rec.after = s;
            rec.omega2_after = sys.omega2(to, s.delta);
            traj.events.push_back(rec);
            traj.samples.push_back(make_sample(sys, to, t, s, 1));
        });
    dedup_tail(traj);
    return traj;
}

Trajectory integrate_mode(const ReducedSystem& sys, TopologyMode mode, SystemState s0,
                          const IntegratorConfig& cfg) {
    if (cfg.dt <= 0.0 || cfg.record_stride < 1) {
        throw ConfigError("integrator needs dt > 0 and record_stride >= 1");
    }
    Trajectory traj;
    SystemState s = s0;
    traj.samples.push_back(make_sample(sys, mode, 0.0, s, 0));
    const auto n = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
    const auto& hd = sys.derived(mode);
    for (long i = 1; i <= n; ++i) {
        s = rk4_step(hd, sys.g, s, cfg.dt);
        const double t = static_cast<double>(i) * cfg.dt;
        check_finite(t, s.delta);
        if (i % cfg.record_stride == 0 || i == n) {
            traj.samples.push_back(make_sample(sys, mode, t, s, 0));
        }
    }
    return traj;
}

Trajectory integrate(const FirstOrderSystem& sys, double delta0, const IntegratorConfig& cfg,
                     const EventSchedule& ev) {
    Trajectory traj;
    double delta = delta0;

    run_fault_study(
        cfg, ev,
        [&](TopologyMode mode, double t, double dt) {
            delta = rk4_step(sys.coeffs(mode), delta, dt);
            check_finite(t, delta);
        },
        [&](TopologyMode mode, double t, int flag) {
            traj.samples.push_back(make_sample(sys, mode, t, delta, flag));
        },
        [&](TopologyMode from, TopologyMode to, double t) {
            // The only state, delta, is continuous; both droop frequencies
            // jump algebraically and appear in the samples on either side.
            EventRecord rec;
            rec.t = t;
            rec.from = from;
            rec.to = to;
            rec.before = {delta, sys.omega1(from, delta) - sys.omega2(from, delta)};
            rec.after = {delta, sys.omega1(to, delta) - sys.omega2(to, delta)};
            rec.omega2_before = sys.omega2(from, delta);
            rec.omega2_after = sys.omega2(to, delta);
            traj.events.push_back(rec);
            traj.samples.push_back(make_sample(sys, to, t, delta, 1));
        });
    dedup_tail(traj);
    return traj;
}

Trajectory integrate_mode(const FirstOrderSystem& sys, TopologyMode mode, double delta0,
                          const IntegratorConfig& cfg) {
    if (cfg.dt <= 0.0 || cfg.record_stride < 1) {
        throw ConfigError("integrator needs dt > 0 and record_stride >= 1");
    }
    Trajectory traj;
    double delta = delta0;
    traj.samples.push_back(make_sample(sys, mode, 0.0, delta, 0));
    const auto n = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
    const auto& tc = sys.coeffs(mode);
    for (long i = 1; i <= n; ++i) {
        delta = rk4_step(tc, delta, cfg.dt);
        const double t = static_cast<double>(i) * cfg.dt;
        check_finite(t, delta);
        if (i % cfg.record_stride == 0 || i == n) {
            traj.samples.push_back(make_sample(sys, mode, t, delta, 0));
        }
    }
    return traj;
}

// ----------------------------------------------------------------------------
// Classification
// ----------------------------------------------------------------------------

namespace {

/// Incremental settled/diverged detector fed one (t, delta, omega_e) triple
/// at a time.
class SettleTracker {
public:
    SettleTracker(double sep_delta, const ClassifyConfig& cc) : sep_(sep_delta), cc_(cc) {}

    /// Returns an Outcome once the verdict is known.
    std::optional<Outcome> feed(double t, double delta, double omega_e) {
        if (std::abs(delta - sep_) > kTwoPi * cc_.k_max) {
            return Outcome{OutcomeKind::Diverged, 0, -1.0};
        }
        const double k = std::round((delta - sep_) / kTwoPi);
        const double target = sep_ + k * kTwoPi;
        const bool ok =
            std::abs(delta - target) < cc_.tol_delta && std::abs(omega_e) < cc_.tol_omega;
        if (!ok || (holding_ && k != held_k_)) {
            holding_ = false;
        }
        if (ok && !holding_) {
            holding_ = true;
            held_k_ = k;
            hold_start_ = t;
        }
        if (holding_ && t - hold_start_ >= cc_.hold) {
            const int slips = static_cast<int>(held_k_);
            return Outcome{slips == 0 ? OutcomeKind::StableSamePeriod
                                      : OutcomeKind::StableAdjacentPeriod,
                           slips, hold_start_};
        }
        return std::nullopt;
    }

private:
    double sep_;
    ClassifyConfig cc_;
    bool holding_ = false;
    double held_k_ = 0.0;
    double hold_start_ = 0.0;
};

} // namespace

Outcome classify_outcome(const Trajectory& traj, double sep_delta, const ClassifyConfig& cc) {
    if (traj.samples.empty()) {
        throw ConfigError("cannot classify an empty trajectory");
    }
    SettleTracker tracker(sep_delta, cc);
    for (const auto& smp : traj.samples) {
        if (auto out = tracker.feed(smp.t, smp.delta, smp.omega_e)) {
            return *out;
        }
    }
    throw InconclusiveError("trajectory neither settled nor diverged within its horizon");
}

Outcome classify_from(const ReducedSystem& sys, SystemState s0, double sep_delta, double dt,
                      const ClassifyConfig& cc) {
    const auto& hd = sys.post;
    SettleTracker tracker(sep_delta, cc);
    SystemState s = s0;
    const auto n = static_cast<long>(std::llround(cc.horizon_ext / dt));
    const auto n_primary = static_cast<long>(std::llround(cc.horizon / dt));
    for (long i = 1; i <= n; ++i) {
        s = rk4_step(hd, sys.g, s, dt);
        const double t = static_cast<double>(i) * dt;
        if (auto out = tracker.feed(t, s.delta, s.omega_e)) {
            return *out;
        }
        if (i == n_primary) {
            check_finite(t, s.delta); // cheap sanity before committing to the extension
        }
    }
    throw InconclusiveError("post-fault trajectory neither settled nor diverged within " +
                            std::to_string(cc.horizon_ext) + " s");
}

Outcome classify_from(const FirstOrderSystem& sys, double delta0, double sep_delta, double dt,
                      const ClassifyConfig& cc) {
    const auto& tc = sys.post;
    SettleTracker tracker(sep_delta, cc);
    double delta = delta0;
    const auto n = static_cast<long>(std::llround(cc.horizon_ext / dt));
    for (long i = 1; i <= n; ++i) {
        delta = rk4_step(tc, delta, dt);
        const double t = static_cast<double>(i) * dt;
        const double omega_e = two_inverter_rhs(delta, tc) / sys.g.omega_n;
        if (auto out = tracker.feed(t, delta, omega_e)) {
            return *out;
        }
    }
    throw InconclusiveError("post-fault angle neither settled nor left the period band within " +
                            std::to_string(cc.horizon_ext) + " s");
}

bool stays_in_band(const HybridDerived& hd, const GlobalConstants& g, SystemState s0, double lo,
                   double hi, double horizon, double dt) {
    SystemState s = s0;
    if (s.delta <= lo || s.delta >= hi) {
        return false;
    }
    const auto n = static_cast<long>(std::llround(horizon / dt));
    for (long i = 1; i <= n; ++i) {
        s = rk4_step(hd, g, s, dt);
        if (s.delta <= lo || s.delta >= hi) {
            return false;
        }
    }
    return true;
}

} // namespace gfs
