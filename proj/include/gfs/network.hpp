#pragma once

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace gfs {

using Complex = std::complex<double>;

// ============================================================================
// Three-bus test network
//
// Two grid-forming sources behind series impedances Z1 and Z2 feed a common
// bus loaded by Z_L to ground.  A bolted (very low impedance) fault Z_f can be
// placed in parallel with the load, and each source may insert a virtual
// impedance in series with its own branch while the fault is on.  Eliminating
// the common bus leaves a two-port whose entries drive the reduced swing
// models everywhere else in this library.
// ============================================================================

/// Which network snapshot a computation refers to.
enum class TopologyMode {
    PreFault,  ///< Z3 = Z_L, branch impedances at their base values
    Fault,     ///< Z3 = Z_L || Z_f, virtual impedances inserted in series
    PostFault, ///< identical to PreFault (the fault is fully cleared)
};

/// Per-unit conversion bases.  Impedances given in ohms are divided by
/// voltage_kv^2 / power_mva before use.
struct ImpedanceBases {
    double voltage_kv = 110.0;
    double power_mva = 100.0;

    [[nodiscard]] double z_base_ohm() const { return voltage_kv * voltage_kv / power_mva; }
};

/// The physical star network.  All impedances are stored in per unit.
struct ThreeBusNetwork {
    Complex z1{0.0, 0.0};      ///< source-1 branch impedance
    Complex z2{0.0, 0.0};      ///< source-2 branch impedance
    Complex z_v1{0.0, 0.0};    ///< virtual impedance added to branch 1 during the fault
    Complex z_v2{0.0, 0.0};    ///< virtual impedance added to branch 2 during the fault
    Complex z_load{0.0, 0.0};  ///< shunt load at the common bus
    Complex z_fault{0.0, 0.0}; ///< fault impedance, in parallel with the load when on
    ImpedanceBases bases{};

    /// Throws ConfigError if any branch that must carry current is zero.
    void validate() const;
};

/// Two-port equivalent after eliminating the common bus.  gamma is the
/// transfer-impedance angle arg(Z12) = -arg(Y12); a lossless tie gives
/// gamma = pi/2, and resistance pulls it below that.
struct ReducedAdmittances {
    Complex y12{0.0, 0.0}; ///< transfer admittance 1/Z12
    Complex y1g{0.0, 0.0}; ///< source-1 shunt admittance to ground
    Complex y2g{0.0, 0.0}; ///< source-2 shunt admittance to ground
    double y12_mag = 0.0;  ///< |Y12|
    double gamma = 0.0;    ///< arg(Z12) = -arg(Y12)
    double g12 = 0.0;      ///< Re(y12)
    double g1g = 0.0;      ///< Re(y1g)
    double g2g = 0.0;      ///< Re(y2g)
};

/// Eliminates the common bus of the star network in the requested topology
/// mode.  Implemented with the series/parallel closed form
///   1/Z12 = 1/(Z1 + Z2 + Z1 Z2 / Z3)
/// and its cyclic rotations for the shunt legs; kron_reduce() reproduces the
/// same numbers from the assembled admittance matrix and serves as the
/// independent cross-check in the tests.
[[nodiscard]] ReducedAdmittances reduce_three_bus(const ThreeBusNetwork& net, TopologyMode mode);

// ============================================================================
// General admittance-matrix utilities
//
// The multi-machine module assembles full Y matrices from bus/branch data and
// reduces them onto the source-internal nodes.  Matrices are dense and
// complex; system sizes here are tiny, so no sparsity is needed.
// ============================================================================

using AdmittanceMatrix = Eigen::MatrixXcd;

/// Schur-complement elimination of every node not listed in `retained`,
/// preserving the retained nodes' order.  Throws NumericError if the
/// eliminated block is numerically singular.
[[nodiscard]] AdmittanceMatrix kron_reduce(const AdmittanceMatrix& y,
                                           const std::vector<int>& retained);

/// Adds each load as a constant shunt admittance conj(S)/|V|^2 on the bus
/// diagonal.  Keys are node indices into `y`; S in per unit, V the bus
/// voltage phasor the load was metered at.
[[nodiscard]] AdmittanceMatrix fold_constant_impedance_loads(
    AdmittanceMatrix y, const std::map<int, std::pair<Complex, Complex>>& loads_s_v);

// ============================================================================
// Phasor reference solution
//
// For two ideal EMF sources E1/_delta1, E2/_delta2 the star network is linear:
// the common-bus voltage follows from one nodal equation and the injected
// complex powers from the branch currents.  No trigonometric identities are
// involved, so this is the oracle the reduced power expressions are tested
// against.
// ============================================================================

/// Active powers (P1, P2) leaving the two sources, by direct phasor solution.
[[nodiscard]] std::pair<double, double> solve_network_powers(const ThreeBusNetwork& net,
                                                             TopologyMode mode, double e1,
                                                             double e2, double delta1,
                                                             double delta2);

} // namespace gfs
