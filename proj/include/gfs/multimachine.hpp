#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfs/dynamics.hpp"
#include "gfs/models.hpp"
#include "gfs/network.hpp"

namespace gfs {

// ============================================================================
// m-generator / n-inverter system
//
// Sources sit behind their internal nodes of a reduced admittance matrix
// (loads folded, passive buses eliminated).  Generators keep second-order
// swing states; droop inverters contribute first-order angle states whose
// frequencies are algebraic outputs.  Index layout: generators first
// (0..m-1), inverters after (m..m+n-1).
// ============================================================================

struct MultiMachineSystem {
    std::vector<SgParams> generators;
    std::vector<DroopParams> inverters;
    AdmittanceMatrix y_internal; ///< (m+n) x (m+n) nodal matrix over internal nodes
    GlobalConstants g;

    [[nodiscard]] int m() const { return static_cast<int>(generators.size()); }
    [[nodiscard]] int n() const { return static_cast<int>(inverters.size()); }
    [[nodiscard]] int n_sources() const { return m() + n(); }
    /// EMF magnitude of source i in the global index layout.
    [[nodiscard]] double emf(int i) const {
        return i < m() ? generators[static_cast<std::size_t>(i)].e
                       : inverters[static_cast<std::size_t>(i - m())].e;
    }
    /// Checks dimensions and reciprocity (|Y - Y^T| < 1e-12); throws ConfigError.
    void validate() const;
};

struct MultiState {
    Eigen::VectorXd delta;     ///< m+n angles (rad)
    Eigen::VectorXd gen_omega; ///< m generator speeds (p.u., absolute)
};

struct MultiDerivative {
    Eigen::VectorXd ddelta;
    Eigen::VectorXd dgen_omega;
};

/// Injected real power of every source:
///   P_i = sum_l E_i E_l |Y_il| cos(delta_i - delta_l + gamma_il),
/// gamma_il = -arg(Y_il) on the nodal matrix (equivalently G cos + B sin).
[[nodiscard]] Eigen::VectorXd electrical_powers(const MultiMachineSystem& sys,
                                                const Eigen::VectorXd& delta);

/// Swing equations for the generators, droop law for the inverter angles.
/// Generator damping terms are optional (classical studies drop them).
[[nodiscard]] MultiDerivative mm_rhs(const MultiMachineSystem& sys, const MultiState& s,
                                     bool include_gen_damping = true);

/// Algebraic inverter frequencies omega_j = omega_0 + k_j (P_j* - P_j).
[[nodiscard]] Eigen::VectorXd inverter_omegas(const MultiMachineSystem& sys,
                                              const Eigen::VectorXd& delta);

// ============================================================================
// Center-of-angle aggregates
// ============================================================================

struct CoaSnapshot {
    double delta_coa1 = 0.0; ///< inertia-weighted generator angle
    double omega_coa1 = 0.0; ///< inertia-weighted generator speed (p.u.)
    double delta_coa2 = 0.0; ///< inverse-droop-weighted inverter angle
    double omega_coa2 = 0.0; ///< omega_0 + k_coa2 * sum(P_j* - P_j)
    double t_coa1 = 0.0;     ///< sum of T_Ji
    double k_coa2 = 0.0;     ///< 1 / sum(1/k_j)
    double omega_rel = 0.0;  ///< omega_coa1 - omega_coa2
};

/// Aggregate motion of the two device groups; requires m >= 1 and n >= 1.
[[nodiscard]] CoaSnapshot coa_snapshot(const MultiMachineSystem& sys, const MultiState& s);

/// Damping contribution of inverter j to generator i under the inductive-line
/// simplification (diagnostic only; simulation uses the full powers):
///   D_ji = T_COA1 k_COA2 E_j E_i |Y_ji| omega_N cos(delta_j - delta_i).
/// Entries may be negative beyond |delta_j - delta_i| > pi/2; not clamped.
[[nodiscard]] Eigen::MatrixXd coa_damping_matrix(const MultiMachineSystem& sys,
                                                 const Eigen::VectorXd& delta);

/// Angle of every source relative to the generator COA (used as the
/// classification reference).
[[nodiscard]] Eigen::VectorXd coa_relative_offsets(const MultiMachineSystem& sys,
                                                   const Eigen::VectorXd& delta);

// ============================================================================
// Simulation
// ============================================================================

/// n_steps fixed RK4 steps on one topology; returns the end state.
[[nodiscard]] MultiState advance_mm(const MultiMachineSystem& sys, MultiState s, double dt,
                                    long n_steps, bool include_gen_damping = true);

struct MmSample {
    double t = 0.0;
    Eigen::VectorXd delta;
    Eigen::VectorXd omega; ///< m+n: generator states then algebraic inverter values
    Eigen::VectorXd power;
    int event_flag = 0;
};

struct MmTrajectory {
    std::vector<MmSample> samples;
};

/// Fault simulation across pre/fault/post admittance matrices.  All angle and
/// generator-speed states are continuous across events; inverter frequencies
/// jump implicitly because they are algebraic in the switched topology.
[[nodiscard]] MmTrajectory integrate_mm(const MultiMachineSystem& sys,
                                        const AdmittanceMatrix& y_fault,
                                        const AdmittanceMatrix& y_post, const MultiState& s0,
                                        const IntegratorConfig& cfg, const EventSchedule& events,
                                        bool include_gen_damping = true);

struct MmClassifyConfig {
    double threshold = 3.141592653589793; ///< COA-relative deviation limit (rad)
    double horizon = 5.0;                 ///< observation window (s)
    double dt = 2e-4;
};

struct MmOutcome {
    bool stable = false;
    double max_deviation = 0.0; ///< largest COA-relative angle excursion seen
};

/// First-swing style screen: integrate the post-fault topology and flag
/// instability when any source's COA-relative angle leaves `ref_offsets`
/// by more than the threshold within the horizon.
[[nodiscard]] MmOutcome classify_mm(const MultiMachineSystem& sys, MultiState s,
                                    const Eigen::VectorXd& ref_offsets,
                                    const MmClassifyConfig& cc,
                                    bool include_gen_damping = true);

/// Copy of `sys` with selected generators (by generator index) turned into
/// droop inverters keeping their EMF and dispatch; the internal matrix is
/// permuted so inverters land after the remaining generators.
[[nodiscard]] MultiMachineSystem replace_with_droop(const MultiMachineSystem& sys,
                                                    const std::vector<std::pair<int, double>>&
                                                        replacements);

// ============================================================================
// Bus/branch ingestion and the classical reduction workflow
// ============================================================================

struct BranchData {
    int from = 0; ///< 0-based bus index
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0; ///< total line charging susceptance (b/2 per end)
};

struct MachineData {
    int bus = 0;
    double h = 0.0;        ///< inertia constant (s); T_J = 2H
    double xd_prime = 0.0; ///< transient reactance (p.u.)
};

struct BusBranchNetwork {
    int n_bus = 0;
    std::vector<BranchData> branches;
    std::vector<std::pair<int, Complex>> loads; ///< (bus, P+jQ)
    std::vector<MachineData> machines;
    int slack_bus = 0;
    double slack_v = 1.0;
    std::vector<std::tuple<int, double, double>> pv; ///< (bus, P, Vm)

    void validate() const; ///< throws ConfigError on out-of-range indices
};

/// Bus admittance matrix including line charging.
[[nodiscard]] AdmittanceMatrix assemble_ybus(const BusBranchNetwork& net);

struct PowerFlowResult {
    Eigen::VectorXcd v; ///< complex bus voltages
    int iterations = 0;
};

/// Newton-Raphson with a numeric Jacobian (robustness over speed on these
/// small systems).  Throws NumericError when it fails to converge.
[[nodiscard]] PowerFlowResult newton_power_flow(const BusBranchNetwork& net,
                                                const AdmittanceMatrix& y, double tol = 1e-10,
                                                int it_max = 40);

/// Loads folded at power-flow voltages, machine internal nodes appended
/// through 1/(j X'd), optional bolted-fault shunt, then Kron reduction down
/// to the machine internal nodes.
[[nodiscard]] AdmittanceMatrix classical_reduction(const BusBranchNetwork& net,
                                                   const AdmittanceMatrix& ybus,
                                                   const Eigen::VectorXcd& v,
                                                   std::optional<int> fault_bus,
                                                   double z_fault);

struct ClassicalCase {
    MultiMachineSystem sys;  ///< all-SG system on the pre-fault reduction
    MultiState initial;      ///< power-flow equilibrium (delta0, omega = omega_0)
    Eigen::VectorXcd emf;    ///< machine internal voltages
    PowerFlowResult pf;
};

/// Full workflow: power flow, EMFs behind X'd, mechanical powers balancing
/// the pre-fault electrical powers, undamped classical machines.
[[nodiscard]] ClassicalCase build_classical_case(const BusBranchNetwork& net,
                                                 const GlobalConstants& g);

} // namespace gfs
