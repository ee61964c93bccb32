#pragma once

#include <optional>
#include <vector>

#include "gfs/models.hpp"

namespace gfs {

// ============================================================================
// Scenario-resolved simulation systems
//
// A simulation owns one derived-coefficient set per topology mode, so a
// fault study is three snapshots of the same model plus the event times.
// Frequency re-initialization at the switches is applied whenever a droop
// device is present (k2 != 0) and jumps are not explicitly disabled for
// diagnostic runs.
// ============================================================================

/// Second-order reduced system (swing+droop, swing+bus, or two-machine).
struct ReducedSystem {
    HybridDerived pre{};
    HybridDerived fault{};
    HybridDerived post{};
    GlobalConstants g{};
    double p2_star = 0.0;     ///< droop set-point, for frequency reconstruction
    bool jump_enabled = true; ///< false only for the diagnostic comparison run

    [[nodiscard]] const HybridDerived& derived(TopologyMode m) const {
        switch (m) {
        case TopologyMode::PreFault: return pre;
        case TopologyMode::Fault: return fault;
        case TopologyMode::PostFault: return post;
        }
        return post;
    }
    /// Algebraic droop frequency; omega_0 when no droop device exists.
    [[nodiscard]] double omega2(TopologyMode m, double delta) const {
        const auto& hd = derived(m);
        return g.omega_0 + hd.k2 * (p2_star - hd.powers.p2(delta));
    }
};

/// First-order droop-droop system.
struct FirstOrderSystem {
    TwoInverterCoefficients pre{};
    TwoInverterCoefficients fault{};
    TwoInverterCoefficients post{};
    GlobalConstants g{};
    double p1_star = 0.0;
    double p2_star = 0.0;

    [[nodiscard]] const TwoInverterCoefficients& coeffs(TopologyMode m) const {
        switch (m) {
        case TopologyMode::PreFault: return pre;
        case TopologyMode::Fault: return fault;
        case TopologyMode::PostFault: return post;
        }
        return post;
    }
    [[nodiscard]] double omega1(TopologyMode m, double delta) const {
        const auto& tc = coeffs(m);
        return g.omega_0 + tc.k1 * (p1_star - tc.powers.p1(delta));
    }
    [[nodiscard]] double omega2(TopologyMode m, double delta) const {
        const auto& tc = coeffs(m);
        return g.omega_0 + tc.k2 * (p2_star - tc.powers.p2(delta));
    }
};

// ============================================================================
// Integration
//
// Classic fixed-step RK4, segmented so that steps land exactly on the fault
// application and clearing instants.  Results are bit-reproducible: times are
// computed as segment_start + i*dt, never accumulated.
// ============================================================================

struct IntegratorConfig {
    double dt = 1e-4;      ///< step size, s
    double t_end = 20.0;   ///< final time, s
    int record_stride = 1; ///< keep every n-th sample (events always kept)
};

/// One classical RK4 step of the reduced second-order model.
[[nodiscard]] SystemState rk4_step(const HybridDerived& hd, const GlobalConstants& g,
                                   SystemState s, double dt);

/// One classical RK4 step of the first-order angle flow.
[[nodiscard]] double rk4_step(const TwoInverterCoefficients& tc, double delta, double dt);

struct EventSchedule {
    double apply = 0.0; ///< fault application time, s
    double clear = 0.0; ///< fault clearing time, s
};

struct TrajectorySample {
    double t = 0.0;
    double delta = 0.0;
    double omega_e = 0.0; ///< per-unit frequency difference (0 for droop-droop reports w1-w2)
    double omega1 = 0.0;
    double omega2 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    double d_eq = 0.0; ///< 0 for the first-order model, which has no damping state
    int event_flag = 0;
};

struct EventRecord {
    double t = 0.0;
    TopologyMode from = TopologyMode::PreFault;
    TopologyMode to = TopologyMode::Fault;
    SystemState before{};
    SystemState after{};
    double omega2_before = 0.0;
    double omega2_after = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<EventRecord> events;
};

/// Fault study: PreFault until apply, Fault until clear, PostFault to t_end.
[[nodiscard]] Trajectory integrate(const ReducedSystem& sys, SystemState s0,
                                   const IntegratorConfig& cfg, const EventSchedule& events);

/// Single-topology run with no events.
[[nodiscard]] Trajectory integrate_mode(const ReducedSystem& sys, TopologyMode mode,
                                        SystemState s0, const IntegratorConfig& cfg);

[[nodiscard]] Trajectory integrate(const FirstOrderSystem& sys, double delta0,
                                   const IntegratorConfig& cfg, const EventSchedule& events);

[[nodiscard]] Trajectory integrate_mode(const FirstOrderSystem& sys, TopologyMode mode,
                                        double delta0, const IntegratorConfig& cfg);

// ============================================================================
// Outcome classification
//
// A run is stable when the angle settles onto a post-fault equilibrium -- the
// one it started near (same period) or a 2*pi translate (adjacent period,
// counted in pole slips).  It diverges once the angle leaves the +/- k_max
// period band.  Anything else is inconclusive, which callers surface as an
// error rather than guessing; the streaming classifier first retries on an
// extended horizon.
// ============================================================================

enum class OutcomeKind {
    StableSamePeriod,
    StableAdjacentPeriod,
    Diverged,
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::Diverged;
    int slips = 0;                ///< signed period offset k (0 for same period)
    double settling_time = -1.0;  ///< start of the hold window; -1 when diverged
};

struct ClassifyConfig {
    double tol_delta = 1e-3;  ///< angle tolerance, rad
    double tol_omega = 1e-5;  ///< frequency tolerance, pu
    double hold = 1.0;        ///< time the tolerances must hold, s
    int k_max = 4;            ///< divergence band, in periods
    double horizon = 20.0;    ///< primary classification horizon, s
    double horizon_ext = 60.0;///< automatic extension before giving up, s
};

/// Classifies a recorded trajectory against a post-fault Sep angle.
/// Throws InconclusiveError when neither settled nor diverged.
[[nodiscard]] Outcome classify_outcome(const Trajectory& traj, double sep_delta,
                                       const ClassifyConfig& cc = {});

/// Streaming classifier: integrates the post-fault topology from `s0` without
/// recording, extends the horizon once, then throws InconclusiveError.
[[nodiscard]] Outcome classify_from(const ReducedSystem& sys, SystemState s0, double sep_delta,
                                    double dt, const ClassifyConfig& cc = {});

/// Streaming classifier for the first-order model (angle criterion only).
[[nodiscard]] Outcome classify_from(const FirstOrderSystem& sys, double delta0,
                                    double sep_delta, double dt, const ClassifyConfig& cc = {});

/// Membership rule for undamped second-order systems, whose oscillations
/// never satisfy the settling tolerances: a state belongs to the present
/// period's stable region iff its forward orbit stays inside (lo, hi) --
/// normally (Uep - 2*pi, Uep) -- for the whole horizon.  Exact for the
/// conservative flow, where leaving the band is irreversible pole slipping.
[[nodiscard]] bool stays_in_band(const HybridDerived& hd, const GlobalConstants& g,
                                 SystemState s0, double lo, double hi, double horizon,
                                 double dt);

} // namespace gfs
