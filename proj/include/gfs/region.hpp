#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gfs/dynamics.hpp"
#include "gfs/equilibria.hpp"

namespace gfs {

// ============================================================================
// Stability-region geometry
//
// The region of attraction of a second-order Sep is bounded by the stable
// manifold of the neighboring saddle.  Tracing that manifold means seeding
// just off the Uep along its stable eigenvector and integrating backward in
// time; where damping is identically zero the same curve is the level set of
// the system energy through the Uep, which gives an independent geometric
// oracle.
// ============================================================================

/// Phase-plane rectangle (delta in rad, omega_e in p.u.).
struct Window {
    double delta_min = 0.0;
    double delta_max = 0.0;
    double omega_min = -0.1;
    double omega_max = 0.1;

    [[nodiscard]] bool contains(double delta, double omega) const {
        return delta >= delta_min && delta <= delta_max && omega >= omega_min &&
               omega <= omega_max;
    }
};

/// Default reference window around a Sep: one full period either side,
/// omega_e in [-0.1, 0.1] -- wide enough to bracket every swing of interest.
[[nodiscard]] Window reference_window(double sep_delta);

enum class BranchTermination {
    WindowExit,    ///< left the phase-plane window
    ArcLimit,      ///< exceeded the arc-length cap (spiraling inward)
    ReturnedToUep, ///< came back to the saddle: the branch closes a loop
};

enum class WindowEdge { None, Left, Right, Top, Bottom };

struct BoundaryBranch {
    std::vector<std::array<double, 2>> points; ///< (delta, omega_e), from the Uep outward
    BranchTermination termination = BranchTermination::WindowExit;
    WindowEdge exit_edge = WindowEdge::None; ///< set when termination is WindowExit
};

struct BoundaryPolyline {
    BoundaryBranch branch_plus;  ///< seeded at Uep + eps * v_stable
    BoundaryBranch branch_minus; ///< seeded at Uep - eps * v_stable
    EquilibriumPoint uep;
    Window window;
};

struct TraceConfig {
    double eps = 1e-4;       ///< seed offset along the stable eigenvector
    double dt = 1e-4;        ///< reverse-time RK4 step
    double arc_limit = 80.0; ///< cap on accumulated (scaled) arc length
};

/// Backward integration from the saddle along its stable eigenvector.
/// Throws ConfigError when `uep` is not a saddle of `hd`.
[[nodiscard]] BoundaryPolyline trace_stability_boundary(const HybridDerived& hd,
                                                        const EquilibriumPoint& uep,
                                                        const GlobalConstants& g,
                                                        const Window& window,
                                                        const TraceConfig& tc = {});

// ============================================================================
// Energy function
//
//   V(delta, omega_e) = 1/2 * T_Jeq * wN * omega_e^2 + U(delta) - U(sep)
//
// with U the closed-form antiderivative of P_E - P_M.  Along trajectories
// dV/dt = -wN * D_eq(delta) * omega_e^2, so V is conserved exactly when the
// model is undamped and non-increasing wherever D_eq >= 0.
// ============================================================================

class EnergyFunction {
public:
    EnergyFunction(const HybridDerived& hd, const GlobalConstants& g, double sep_delta);

    [[nodiscard]] double value(double delta, double omega_e) const {
        return 0.5 * t_jeq_ * omega_n_ * omega_e * omega_e + potential(delta);
    }
    /// U(delta) - U(sep): zero at the reference Sep by construction.
    [[nodiscard]] double potential(double delta) const;
    [[nodiscard]] double sep_delta() const { return sep_delta_; }

private:
    double t_jeq_;
    double omega_n_;
    double p_m_;
    double pe_cos_minus_;
    double pe_cos_plus_;
    double gamma_;
    double sep_delta_;
    double u_sep_;
};

/// Level set V = V(uep) extracted column-wise on an n_grid x n_grid mesh over
/// `window` (sign-change detection plus linear interpolation on the vertical
/// mesh edges), following the component attached to the Uep leftward.  Only
/// defined for undamped models (D_eq == 0 identically); damped input throws
/// ConfigError.  branch_plus carries the omega_e >= 0 half, branch_minus its
/// mirror, both ordered from the Uep outward.
[[nodiscard]] BoundaryPolyline energy_level_boundary(const HybridDerived& hd,
                                                     const GlobalConstants& g,
                                                     const EquilibriumPoint& uep,
                                                     double sep_delta, const Window& window,
                                                     int n_grid = 1000);

/// Forward-integrates from `state` on the given topology (no events) and
/// classifies against `sep_delta`.  InconclusiveError propagates.
[[nodiscard]] Outcome is_stable_point(const HybridDerived& hd, const GlobalConstants& g,
                                      SystemState state, double sep_delta, double dt = 1e-3,
                                      const ClassifyConfig& cc = {});

// ============================================================================
// Geometry helpers
// ============================================================================

/// Symmetric Hausdorff distance between two polylines, measured vertex to
/// segment both ways.  Inputs denser than ~20k vertices are decimated first.
[[nodiscard]] double hausdorff_distance(const std::vector<std::array<double, 2>>& a,
                                        const std::vector<std::array<double, 2>>& b);

/// All points of both branches concatenated (branch_minus reversed), handy
/// for distance computations against the whole boundary.
[[nodiscard]] std::vector<std::array<double, 2>> boundary_points(const BoundaryPolyline& b);

/// Openness of the two window corners the fault-on trajectory cares about.
/// The upper-left corner is open when the omega_e > 0 branch leaves through
/// the top edge left of the Uep or through the left edge; lower-right
/// mirrors it.  A branch that returns to the Uep closes its corner.
[[nodiscard]] bool upper_left_open(const BoundaryPolyline& b, double sep_delta);
[[nodiscard]] bool lower_right_open(const BoundaryPolyline& b, double sep_delta);

// ============================================================================
// Monte-Carlo membership
//
// Areas of the stable set are estimated by stratified sampling over the
// reference window.  Comparisons between systems reuse the identical unit
// samples ("matched" sampling) so the area difference is not swamped by
// sampling noise.  Damped systems use the forward-simulation classifier;
// undamped systems use the band-containment rule (see stays_in_band).
// ============================================================================

/// nx*ny jittered stratified samples on the unit square, one per cell.
[[nodiscard]] std::vector<std::array<double, 2>> stratified_unit_samples(int nx, int ny,
                                                                         std::uint64_t seed);

struct McConfig {
    double dt = 5e-4;         ///< membership integration step
    double horizon = 20.0;    ///< containment horizon for the undamped rule
    int threads = 0;          ///< 0: use hardware concurrency
};

struct McResult {
    int n_total = 0;
    int n_stable = 0;
    int n_inconclusive = 0; ///< counted as unstable, reported for transparency
    [[nodiscard]] double fraction() const {
        return n_total == 0 ? 0.0 : static_cast<double>(n_stable) / n_total;
    }
};

/// Stable-set fraction of `window` under the post-fault model `hd`.
[[nodiscard]] McResult mc_stable_fraction(const HybridDerived& hd, const GlobalConstants& g,
                                          double sep_delta, const Window& window,
                                          const std::vector<std::array<double, 2>>& unit_samples,
                                          const McConfig& mc = {});

/// Searches the matched sample set for points stable in exactly one of two
/// systems; returns (stable only in a, stable only in b) witnesses if found.
struct NonContainmentWitness {
    std::optional<std::array<double, 2>> only_in_a;
    std::optional<std::array<double, 2>> only_in_b;
};

[[nodiscard]] NonContainmentWitness
find_noncontainment_witness(const HybridDerived& a, double sep_a, const HybridDerived& b,
                            double sep_b, const GlobalConstants& g, const Window& window,
                            const std::vector<std::array<double, 2>>& unit_samples,
                            const McConfig& mc = {});

// ============================================================================
// Boundary validation
// ============================================================================

struct BoundaryValidation {
    int n_inside = 0;
    int n_inside_stable = 0;
    int n_outside = 0;
    int n_outside_unstable = 0;
    [[nodiscard]] double validity() const {
        const int n = n_inside + n_outside;
        return n == 0 ? 0.0 : static_cast<double>(n_inside_stable + n_outside_unstable) / n;
    }
};

/// Samples points `offset` state-units to both sides of the traced boundary
/// (normals from central differences) and checks that the inside points
/// classify StableSamePeriod and the outside ones do not.  Points whose
/// offset lands outside `window` are skipped.
[[nodiscard]] BoundaryValidation validate_boundary(const HybridDerived& hd,
                                                   const GlobalConstants& g,
                                                   const BoundaryPolyline& boundary,
                                                   double sep_delta, double offset = 0.02,
                                                   int stride = 500, double dt = 1e-3,
                                                   const ClassifyConfig& cc = {});

} // namespace gfs
