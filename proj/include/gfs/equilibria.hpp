#pragma once

#include <complex>
#include <vector>

#include "gfs/models.hpp"

namespace gfs {

// ============================================================================
// Equilibrium search and classification
//
// Second-order reduced systems equilibrate where P_M = P_E(delta) (with
// omega_e = 0); droop-droop systems where A + B cos + C sin = 0.  Both
// residuals are single-harmonic-like in delta, so a period carries at most
// one stable/unstable pair.  Roots are located by a dense grid scan plus
// bisection (robust against the two-harmonic P_E) and classified through the
// local linearization.
// ============================================================================

enum class EquilibriumKind {
    Sep,        ///< no eigenvalue with positive real part
    Uep,        ///< at least one eigenvalue with positive real part
    Degenerate, ///< residual and its slope both vanish (tangency / fold)
};

struct EquilibriumPoint {
    double delta = 0.0;
    EquilibriumKind kind = EquilibriumKind::Sep;
    /// Linearization spectrum: two entries for second-order systems, one
    /// (real) entry for the first-order droop-droop flow.
    std::vector<std::complex<double>> eigenvalues;
    /// Which 2*pi period the angle falls in; 0 covers [-pi, pi).
    int period_index = 0;
};

/// All equilibria of the reduced second-order model with delta in [lo, hi),
/// window width at most 4*pi.  The grid scan uses 2000 points per 2*pi;
/// bisection refines each sign change to |residual| < 1e-12 (scaled).  An
/// undamped center (purely imaginary pair) is reported as Sep: it is
/// Lyapunov- but not asymptotically stable, the marginal case of the damped
/// classification.  An empty result is legal -- fault-on networks may have
/// P_M above the P_E crest.
[[nodiscard]] std::vector<EquilibriumPoint>
find_equilibria_second_order(const HybridDerived& hd, const GlobalConstants& g, double lo,
                             double hi);

/// All equilibria of the droop-droop model in [lo, hi), from the closed-form
/// roots delta = phi +/- arccos(-A/R), phi = atan2(C, B), R = hypot(B, C).
[[nodiscard]] std::vector<EquilibriumPoint>
find_equilibria_first_order(const TwoInverterCoefficients& tc, double lo, double hi);

/// Jacobian eigenvalues of the second-order model at an angle.
[[nodiscard]] std::pair<std::complex<double>, std::complex<double>>
jacobian_eigenvalues(const HybridDerived& hd, const GlobalConstants& g, double delta);

/// Existence test for droop-droop equilibria: they exist iff A^2 <= B^2 + C^2
/// (non-strict).  margin = A^2 - B^2 - C^2, so holds <=> margin <= 0.  A
/// strictly positive margin on the fault-on topology means the angle drifts
/// monotonically for the whole fault duration.
struct ExistenceCondition {
    bool holds = false;
    double margin = 0.0;
};

[[nodiscard]] ExistenceCondition existence_condition(const TwoInverterCoefficients& tc);

/// The Sep with the smallest |delta| ("principal" operating point).
/// Throws NumericError when the list contains none.
[[nodiscard]] const EquilibriumPoint& principal_sep(const std::vector<EquilibriumPoint>& eqs);

/// The first Uep strictly to the right of `delta`.  Throws NumericError when
/// there is none.
[[nodiscard]] const EquilibriumPoint& uep_right_of(const std::vector<EquilibriumPoint>& eqs,
                                                   double delta);

} // namespace gfs
