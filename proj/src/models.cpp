#include "gfs/models.hpp"

#include <cmath>

#include "gfs/errors.hpp"

namespace gfs {

TwoSourcePowers two_source_powers(const ReducedAdmittances& red, double e1, double e2) {
    TwoSourcePowers pw;
    pw.c1 = e1 * e1 * (red.g12 + red.g1g);
    pw.c2 = e2 * e2 * (red.g12 + red.g2g);
    pw.ey = e1 * e2 * red.y12_mag;
    pw.gamma = red.gamma;
    return pw;
}

std::pair<double, double> power_outputs(const ReducedAdmittances& red, double e1, double e2,
                                        double delta) {
    const TwoSourcePowers pw = two_source_powers(red, e1, e2);
    return {pw.p1(delta), pw.p2(delta)};
}

HybridDerived hybrid_derived(const SgParams& sg, const DroopParams& inv,
                             const ReducedAdmittances& red, const GlobalConstants& g) {
    if (sg.tj <= 0.0) {
        throw ConfigError("swing device needs a positive inertia constant");
    }
    if (inv.k < 0.0) {
        throw ConfigError("droop gain must be non-negative");
    }

    HybridDerived hd;
    hd.powers = two_source_powers(red, sg.e, inv.e);
    hd.gamma = red.gamma;
    hd.t_jeq = sg.tj;
    hd.k2 = inv.k;

    // P_M lumps both set-points and the conductance losses: the droop device's
    // surplus power acts on the relative angle through its k2-scaled frequency.
    const double d1k2 = sg.d * inv.k;
    hd.p_m = (sg.p_star - hd.powers.c1) - d1k2 * (inv.p_star - hd.powers.c2);
    hd.pe_cos_minus = hd.powers.ey * d1k2;
    hd.pe_cos_plus = -hd.powers.ey;
    hd.d_const = sg.d;
    hd.d_sin = inv.k * sg.tj * g.omega_n * hd.powers.ey;
    return hd;
}

HybridDerived two_generator_reduce(const SgParams& sg1, const SgParams& sg2,
                                   const ReducedAdmittances& red, const GlobalConstants& g) {
    (void)g; // the two-machine equivalent has no frequency-scaled damping term
    if (sg1.tj <= 0.0 || sg2.tj <= 0.0) {
        throw ConfigError("both machines need positive inertia constants");
    }
    const double r1 = sg1.d / sg1.tj;
    const double r2 = sg2.d / sg2.tj;
    const double scale = std::max({std::abs(r1), std::abs(r2), 1e-300});
    if (std::abs(r1 - r2) > 1e-9 * scale) {
        throw ConfigError("two-machine reduction requires uniform damping "
                          "(D1/T_J1 == D2/T_J2); the relative motion is not a single "
                          "swing equation otherwise");
    }

    const double sum = sg1.tj + sg2.tj;
    const double a = sg1.tj / sum; // weight of machine 1 in the relative inertia
    const double b = sg2.tj / sum;

    HybridDerived hd;
    hd.powers = two_source_powers(red, sg1.e, sg2.e);
    hd.gamma = red.gamma;
    hd.t_jeq = sg1.tj * sg2.tj / sum;
    hd.k2 = 0.0; // no algebraic-frequency device: no event re-initialization
    hd.p_m = b * (sg1.p_star - hd.powers.c1) - a * (sg2.p_star - hd.powers.c2);
    hd.pe_cos_minus = hd.powers.ey * a;
    hd.pe_cos_plus = -hd.powers.ey * b;
    hd.d_const = sg1.d * sg2.tj / sum; // equals D2*TJ1/sum by uniformity
    hd.d_sin = 0.0;
    return hd;
}

double coupled_omega2(const CoupledState& s, const DroopParams& inv, const TwoSourcePowers& pw,
                      const GlobalConstants& g) {
    const double p2 = pw.p2(s.delta1 - s.delta2);
    return g.omega_0 + inv.k * (inv.p_star - p2);
}

CoupledDerivative coupled_rhs(const CoupledState& s, const SgParams& sg, const DroopParams& inv,
                              const TwoSourcePowers& pw, const GlobalConstants& g) {
    const double delta = s.delta1 - s.delta2;
    const double p1 = pw.p1(delta);
    const double omega2 = coupled_omega2(s, inv, pw, g);

    CoupledDerivative d;
    d.ddelta1 = g.omega_n * (s.omega1 - g.omega_0);
    d.domega1 = (sg.p_star - p1 - sg.d * (s.omega1 - g.omega_0)) / sg.tj;
    d.ddelta2 = g.omega_n * (omega2 - g.omega_0);
    return d;
}

TwoInverterCoefficients two_inverter_coefficients(const DroopParams& inv1,
                                                  const DroopParams& inv2,
                                                  const ReducedAdmittances& red,
                                                  const GlobalConstants& g) {
    if (inv1.k < 0.0 || inv2.k < 0.0) {
        throw ConfigError("droop gains must be non-negative");
    }

    TwoInverterCoefficients tc;
    tc.powers = two_source_powers(red, inv1.e, inv2.e);
    tc.k1 = inv1.k;
    tc.k2 = inv2.k;

    // ddelta/dt = wN k1 (P1* - P1) - wN k2 (P2* - P2), expanded over the
    // two-source power closed forms and collected on {1, cos, sin}.
    const double e1e2 = inv1.e * inv2.e;
    const double g12 = red.g12;
    const double b12 = red.y12.imag();
    tc.a = g.omega_n * (inv1.k * (inv1.p_star - tc.powers.c1) -
                        inv2.k * (inv2.p_star - tc.powers.c2));
    tc.b = g.omega_n * e1e2 * g12 * (inv1.k - inv2.k);
    tc.c = g.omega_n * e1e2 * b12 * (inv1.k + inv2.k);
    return tc;
}

} // namespace gfs
