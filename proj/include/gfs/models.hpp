#pragma once

#include <cmath>
#include <numbers>

#include "gfs/network.hpp"

namespace gfs {

// ============================================================================
// Device parameter blocks
//
// Two grid-forming control families appear throughout: swing-equation devices
// (synchronous machines and virtual synchronous generators, which share the
// same second-order form) and inertialess P-f droop inverters whose frequency
// is an algebraic function of their power output.
// ============================================================================

/// Shared angular constants.  omega_n converts per-unit frequency deviation
/// to rad/s; omega_0 is the per-unit synchronous frequency (1.0).
struct GlobalConstants {
    double omega_n = 100.0 * std::numbers::pi;
    double omega_0 = 1.0;
};

/// Swing-equation device: T_J dw/dt = P* - P - D (w - w0), ddelta/dt = wN (w - w0).
struct SgParams {
    double tj = 0.0;     ///< inertia constant (2H), s
    double d = 0.0;      ///< damping coefficient, pu power per pu frequency
    double p_star = 0.0; ///< power set-point, pu
    double e = 1.0;      ///< internal EMF magnitude, pu
};

/// Droop device: w = w0 + k (P* - P), ddelta/dt = wN (w - w0).
struct DroopParams {
    double k = 0.0;      ///< droop gain, pu frequency per pu power
    double p_star = 0.0; ///< power set-point, pu
    double e = 1.0;      ///< internal EMF magnitude, pu
};

// ============================================================================
// Two-source power expressions
//
// With the common bus eliminated, the power leaving each source depends only
// on the angle difference delta = delta1 - delta2:
//
//   P1(delta) = E1^2 (G12 + G1g) - E1 E2 |Y12| cos(delta + gamma)
//   P2(delta) = E2^2 (G12 + G2g) - E1 E2 |Y12| cos(delta - gamma)
//
// These closed forms are certified against solve_network_powers() in the
// tests; everything downstream (equivalent mechanical power, electrical
// power, damping) is built from the same three coefficients.
// ============================================================================

struct TwoSourcePowers {
    double c1 = 0.0;    ///< E1^2 (G12 + G1g)
    double c2 = 0.0;    ///< E2^2 (G12 + G2g)
    double ey = 0.0;    ///< E1 E2 |Y12|
    double gamma = 0.0; ///< transfer-impedance angle arg(Z12)

    [[nodiscard]] double p1(double delta) const { return c1 - ey * std::cos(delta + gamma); }
    [[nodiscard]] double p2(double delta) const { return c2 - ey * std::cos(delta - gamma); }
};

[[nodiscard]] TwoSourcePowers two_source_powers(const ReducedAdmittances& red, double e1,
                                                double e2);

/// Both source powers at an angle difference, as a convenience pair.
[[nodiscard]] std::pair<double, double> power_outputs(const ReducedAdmittances& red, double e1,
                                                      double e2, double delta);

// ============================================================================
// Reduced second-order model
//
// For one swing device (source 1) against one droop device (source 2) the
// relative motion in delta = delta1 - delta2, omega_e = omega1 - omega2
// collapses exactly to a single swing equation
//
//   ddelta/dt   = wN * omega_e
//   T_J domega_e/dt = P_M - P_E(delta) - D_eq(delta) * omega_e
//
// with a state-dependent damping term D_eq(delta) = D1 + D_Delta(delta),
// D_Delta = k2 T_J wN E1 E2 |Y12| sin(gamma - delta).  The droop loop thus
// contributes positive synchronizing damping wherever delta < gamma.
//
// The same struct also hosts the classical uniform-damping two-machine
// reduction (k2 == 0, d_sin == 0), so every second-order scenario shares one
// integrator and one equilibrium finder.
// ============================================================================

struct SystemState {
    double delta = 0.0;   ///< angle difference, rad
    double omega_e = 0.0; ///< per-unit frequency difference
};

struct StateDerivative {
    double ddelta = 0.0;
    double domega_e = 0.0;
};

struct HybridDerived {
    double p_m = 0.0;          ///< equivalent mechanical power
    double t_jeq = 0.0;        ///< equivalent inertia
    double gamma = 0.0;        ///< transfer angle of the active topology
    double pe_cos_minus = 0.0; ///< coefficient of cos(delta - gamma) in P_E
    double pe_cos_plus = 0.0;  ///< coefficient of cos(delta + gamma) in P_E
    double d_const = 0.0;      ///< angle-independent damping
    double d_sin = 0.0;        ///< coefficient of sin(gamma - delta) in D_eq
    double k2 = 0.0;           ///< droop gain of source 2 (0 when none exists)
    TwoSourcePowers powers{};  ///< per-source power reconstruction

    [[nodiscard]] double p_e(double delta) const {
        return pe_cos_minus * std::cos(delta - gamma) + pe_cos_plus * std::cos(delta + gamma);
    }
    /// Acceleration-side residual P_M - P_E; zero at equilibria.
    [[nodiscard]] double p_acc(double delta) const { return p_m - p_e(delta); }
    [[nodiscard]] double d_delta(double delta) const { return d_sin * std::sin(gamma - delta); }
    [[nodiscard]] double d_eq(double delta) const { return d_const + d_delta(delta); }
    /// d P_E / d delta, the synchronizing-power slope.
    [[nodiscard]] double pe_slope(double delta) const {
        return -pe_cos_minus * std::sin(delta - gamma) - pe_cos_plus * std::sin(delta + gamma);
    }
};

/// Exact reduction of the swing + droop pair over a reduced network snapshot.
[[nodiscard]] HybridDerived hybrid_derived(const SgParams& sg, const DroopParams& inv,
                                           const ReducedAdmittances& red,
                                           const GlobalConstants& g);

/// Classical two-machine equivalent.  Requires uniform damping
/// D1/T_J1 == D2/T_J2 (relative tolerance 1e-9); otherwise the relative
/// motion does not reduce to a single swing equation and ConfigError is
/// thrown.
[[nodiscard]] HybridDerived two_generator_reduce(const SgParams& sg1, const SgParams& sg2,
                                                 const ReducedAdmittances& red,
                                                 const GlobalConstants& g);

/// Right-hand side of the reduced model.
[[nodiscard]] inline StateDerivative hybrid_rhs(const SystemState& s, const HybridDerived& hd,
                                                const GlobalConstants& g) {
    StateDerivative d;
    d.ddelta = g.omega_n * s.omega_e;
    d.domega_e = (hd.p_m - hd.p_e(s.delta) - hd.d_eq(s.delta) * s.omega_e) / hd.t_jeq;
    return d;
}

// ============================================================================
// Coupled (unreduced) swing + droop pair
//
// Three states: delta1, omega1 for the swing device and delta2 for the droop
// device, whose frequency omega2 = w0 + k2 (P2* - P2) is algebraic.  Used
// only to certify that the reduction above is exact, and to anchor the
// multi-machine right-hand side at m = n = 1.
// ============================================================================

struct CoupledState {
    double delta1 = 0.0;
    double omega1 = 0.0; ///< per-unit absolute frequency of the swing device
    double delta2 = 0.0;
};

struct CoupledDerivative {
    double ddelta1 = 0.0;
    double domega1 = 0.0;
    double ddelta2 = 0.0;
};

[[nodiscard]] CoupledDerivative coupled_rhs(const CoupledState& s, const SgParams& sg,
                                            const DroopParams& inv, const TwoSourcePowers& pw,
                                            const GlobalConstants& g);

/// Algebraic droop frequency omega2 for a coupled state.
[[nodiscard]] double coupled_omega2(const CoupledState& s, const DroopParams& inv,
                                    const TwoSourcePowers& pw, const GlobalConstants& g);

// ============================================================================
// Droop-droop pair (first-order)
//
// Two inertialess droop devices leave a single state delta with
//
//   ddelta/dt = A + B cos(delta) + C sin(delta)
//
// Equilibria exist iff A^2 <= B^2 + C^2; when the fault-on topology violates
// that condition the angle drifts monotonically, which is why these systems
// re-synchronize into an adjacent period instead of diverging.
// ============================================================================

struct TwoInverterCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    TwoSourcePowers powers{}; ///< per-source power reconstruction
    double k1 = 0.0;          ///< droop gains kept for frequency reporting
    double k2 = 0.0;
};

[[nodiscard]] TwoInverterCoefficients two_inverter_coefficients(const DroopParams& inv1,
                                                                const DroopParams& inv2,
                                                                const ReducedAdmittances& red,
                                                                const GlobalConstants& g);

[[nodiscard]] inline double two_inverter_rhs(double delta, const TwoInverterCoefficients& tc) {
    return tc.a + tc.b * std::cos(delta) + tc.c * std::sin(delta);
}

// ============================================================================
// Frequency re-initialization across topology events
//
// A droop device's frequency is algebraic in its power output, so a network
// switch makes omega2 jump while delta and the swing frequency omega1 stay
// continuous.  The relative state must therefore be re-initialized from the
// post-event power:
//
//   omega_e+ = omega1- + k2 * P2_new(delta) - omega0 - k2 * P2*
//            = omega_e- + k2 * (P2_new(delta) - P2_old(delta))
//
// Skipping this step (jump disabled) leaves a spurious frequency error that
// measurably shifts critical clearing times.
// ============================================================================

/// Post-event relative frequency from the (continuous) swing frequency.
[[nodiscard]] inline double frequency_jump(double omega1_pre, double delta_pre,
                                           const DroopParams& inv,
                                           const TwoSourcePowers& post_powers,
                                           const GlobalConstants& g) {
    return omega1_pre + inv.k * post_powers.p2(delta_pre) - g.omega_0 - inv.k * inv.p_star;
}

/// Equivalent increment form, phrased on the relative state directly.
[[nodiscard]] inline double frequency_jump_relative(double omega_e_before, double delta,
                                                    double k2, const TwoSourcePowers& before,
                                                    const TwoSourcePowers& after) {
    return omega_e_before + k2 * (after.p2(delta) - before.p2(delta));
}

} // namespace gfs
