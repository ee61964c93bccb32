#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gfs/equilibria.hpp"
#include "gfs/errors.hpp"
#include "gfs/models.hpp"
#include "gfs/network.hpp"

#include "test_support.hpp"

using namespace gfs;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;
const GlobalConstants kG{};

HybridDerived hybrid(TopologyMode mode) {
    return hybrid_derived(test::prototype_sg(), test::prototype_droop2(),
                          reduce_three_bus(test::prototype_network(), mode), kG);
}

HybridDerived smib(TopologyMode mode) {
    return hybrid_derived(test::prototype_sg(), test::stiff_bus(),
                          reduce_three_bus(test::prototype_network(), mode), kG);
}

} // namespace

TEST_CASE("post-fault equilibria of the hybrid pair match the fixtures") {
    const HybridDerived hd = hybrid(TopologyMode::PostFault);
    const auto eqs = find_equilibria_second_order(hd, kG, -2.0 * kPi, 2.0 * kPi);
    REQUIRE(eqs.size() == 4);

    const double roots[] = {-6.1376303259028635, -3.1241784346455299, 0.14555498127672328,
                            3.1590068725340563};
    const EquilibriumKind kinds[] = {EquilibriumKind::Sep, EquilibriumKind::Uep,
                                     EquilibriumKind::Sep, EquilibriumKind::Uep};
    const int periods[] = {-1, 0, 0, 1};
    for (int i = 0; i < 4; ++i) {
        CHECK(eqs[i].delta == Approx(roots[i]).epsilon(1e-10));
        CHECK(eqs[i].kind == kinds[i]);
        CHECK(eqs[i].period_index == periods[i]);
        CHECK(std::abs(hd.p_acc(eqs[i].delta)) < 1e-10);
        REQUIRE(eqs[i].eigenvalues.size() == 2);
    }
    CHECK(principal_sep(eqs).delta == Approx(0.14555498127672328).epsilon(1e-10));
    CHECK(uep_right_of(eqs, principal_sep(eqs).delta).delta ==
          Approx(3.1590068725340563).epsilon(1e-10));
}

TEST_CASE("linearization spectra at the operating point and the saddle") {
    const HybridDerived hd = hybrid(TopologyMode::PostFault);
    const auto [s1, s2] = jacobian_eigenvalues(hd, kG, 0.14555498127672328);
    CHECK(s1.real() == Approx(-8.7952724126357396).epsilon(1e-8));
    CHECK(std::abs(s1.imag()) == Approx(8.8038391407570344).epsilon(1e-8));
    CHECK(s2.real() == Approx(s1.real()).epsilon(1e-12));
    CHECK(s2.imag() == Approx(-s1.imag()).epsilon(1e-12));

    const auto [u1, u2] = jacobian_eigenvalues(hd, kG, 3.1590068725340563);
    CHECK(u1.imag() == 0.0);
    CHECK(u2.imag() == 0.0);
    const double hi = std::max(u1.real(), u2.real());
    const double lo = std::min(u1.real(), u2.real());
    CHECK(hi == Approx(23.553770863201073).epsilon(1e-8));
    CHECK(lo == Approx(-6.574930244852947).epsilon(1e-8));
}

TEST_CASE("jacobian invariants follow the reduced model") {
    const HybridDerived hd = hybrid(TopologyMode::PostFault);
    for (const double d : {-2.0, 0.1455, 1.0, 3.159}) {
        const auto [l1, l2] = jacobian_eigenvalues(hd, kG, d);
        const std::complex<double> tr = l1 + l2;
        const std::complex<double> det = l1 * l2;
        CHECK(tr.real() == Approx(-hd.d_eq(d) / hd.t_jeq).epsilon(1e-9));
        CHECK(std::abs(tr.imag()) < 1e-9);
        CHECK(det.real() == Approx(kG.omega_n * hd.pe_slope(d) / hd.t_jeq).epsilon(1e-9));
        CHECK(std::abs(det.imag()) < 1e-7);
    }
}

TEST_CASE("equilibria translate by whole periods") {
    const HybridDerived hd = hybrid(TopologyMode::PostFault);
    const auto base = find_equilibria_second_order(hd, kG, 0.0, 2.0 * kPi);
    const auto shifted = find_equilibria_second_order(hd, kG, -2.0 * kPi, 0.0);
    REQUIRE(base.size() == shifted.size());
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(shifted[i].delta + 2.0 * kPi == Approx(base[i].delta).epsilon(1e-9));
        CHECK(shifted[i].kind == base[i].kind);
        CHECK(shifted[i].period_index + 1 == base[i].period_index);
    }
}

TEST_CASE("the fault-on hybrid topology has no equilibrium") {
    const HybridDerived hd = hybrid(TopologyMode::Fault);
    CHECK(find_equilibria_second_order(hd, kG, -kPi, kPi).empty());
    // Residual stays strictly positive: the crest of P_E is far below P_M.
    double lowest = 1e300;
    for (int i = 0; i <= 4000; ++i) {
        const double d = -kPi + 2.0 * kPi * i / 4000.0;
        lowest = std::min(lowest, hd.p_acc(d));
    }
    CHECK(lowest > 0.179);
    CHECK(lowest < 0.180);
}

TEST_CASE("an undamped center is reported as stable") {
    HybridDerived hd = smib(TopologyMode::PostFault);
    hd.d_const = 0.0;
    const auto eqs = find_equilibria_second_order(hd, kG, -kPi, kPi);
    const auto& sep = principal_sep(eqs);
    CHECK(sep.kind == EquilibriumKind::Sep);
    for (const auto& ev : sep.eigenvalues) {
        CHECK(std::abs(ev.real()) < 1e-12);
        CHECK(std::abs(ev.imag()) > 1.0);
    }
}

TEST_CASE("machine-bus post-fault roots match the fixtures") {
    const auto eqs = find_equilibria_second_order(smib(TopologyMode::PostFault), kG, -2.0 * kPi,
                                                  2.0 * kPi);
    REQUIRE(eqs.size() == 4);
    const double roots[] = {-6.1376764588746546, -3.1034379335393796, 0.14550884830493171,
                            3.1797473736402067};
    for (int i = 0; i < 4; ++i) {
        CHECK(eqs[i].delta == Approx(roots[i]).epsilon(1e-10));
    }
}

TEST_CASE("two-machine and droop-droop equilibria coincide for matched ratios") {
    // Equal set-point/inertia vs. set-point/gain ratios put the equilibrium at
    // the same angle: both residuals are scalar multiples of P1*-c1 - ... .
    const auto red = reduce_three_bus(test::prototype_network(), TopologyMode::PostFault);
    const HybridDerived tg =
        two_generator_reduce(test::prototype_sg(), test::prototype_sg2(), red, kG);
    const TwoInverterCoefficients tc = two_inverter_coefficients(
        test::prototype_droop1(), test::prototype_droop2(), red, kG);

    const auto second = find_equilibria_second_order(tg, kG, -kPi, kPi);
    const auto first = find_equilibria_first_order(tc, -kPi, kPi);
    REQUIRE(first.size() == 2);
    CHECK(principal_sep(second).delta == Approx(0.14592124498728012).epsilon(1e-10));
    CHECK(principal_sep(first).delta == Approx(0.14592124498727976).epsilon(1e-10));
    CHECK(principal_sep(second).delta == Approx(principal_sep(first).delta).epsilon(1e-9));
}

TEST_CASE("droop-droop roots, slopes, and existence margins match the fixtures") {
    const TwoInverterCoefficients pre = two_inverter_coefficients(
        test::prototype_droop1(), test::prototype_droop2(),
        reduce_three_bus(test::prototype_network(), TopologyMode::PreFault), kG);
    const auto ex = existence_condition(pre);
    CHECK(ex.holds);
    CHECK(ex.margin == Approx(-1200.4130516062496).epsilon(1e-10));

    const auto eqs = find_equilibria_first_order(pre, -kPi, kPi);
    REQUIRE(eqs.size() == 2);
    CHECK(eqs[0].delta == Approx(0.14592124498727976).epsilon(1e-12));
    CHECK(eqs[0].kind == EquilibriumKind::Sep);
    CHECK(eqs[1].delta == Approx(2.9956714086025134).epsilon(1e-12));
    CHECK(eqs[1].kind == EquilibriumKind::Uep);
    for (const auto& e : eqs) {
        CHECK(std::abs(two_inverter_rhs(e.delta, pre)) <= 1e-9);
        REQUIRE(e.eigenvalues.size() == 1);
        CHECK(e.eigenvalues[0].imag() == 0.0);
    }
    CHECK(eqs[0].eigenvalues[0].real() == Approx(-34.646977524832522).epsilon(1e-10));
    CHECK(eqs[1].eigenvalues[0].real() == Approx(+34.646977524832522).epsilon(1e-10));

    ThreeBusNetwork both = test::prototype_network();
    both.z_v1 = {0.0, 0.75};
    const TwoInverterCoefficients fault = two_inverter_coefficients(
        test::prototype_droop1(), test::prototype_droop2(),
        reduce_three_bus(both, TopologyMode::Fault), kG);
    const auto fx = existence_condition(fault);
    CHECK_FALSE(fx.holds);
    CHECK(fx.margin == Approx(11.18463244351066).epsilon(1e-10));
    CHECK(find_equilibria_first_order(fault, -kPi, kPi).empty());
}

TEST_CASE("selection helpers reject impossible requests") {
    const auto eqs = find_equilibria_second_order(hybrid(TopologyMode::PostFault), kG, -2.0 * kPi,
                                                  2.0 * kPi);
    CHECK_THROWS_AS((void)uep_right_of(eqs, 4.0), NumericError);

    std::vector<EquilibriumPoint> no_sep;
    EquilibriumPoint u;
    u.kind = EquilibriumKind::Uep;
    no_sep.push_back(u);
    CHECK_THROWS_AS((void)principal_sep(no_sep), NumericError);
    CHECK_THROWS_AS((void)principal_sep({}), NumericError);
}

TEST_CASE("search windows are validated") {
    const HybridDerived hd = hybrid(TopologyMode::PostFault);
    CHECK_THROWS_AS((void)find_equilibria_second_order(hd, kG, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS((void)find_equilibria_second_order(hd, kG, 2.0, -2.0), ConfigError);
    CHECK_THROWS_AS((void)find_equilibria_second_order(hd, kG, 0.0, 4.0 * kPi + 0.1),
                    ConfigError);
}
