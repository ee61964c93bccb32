#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gfs/cct.hpp"
#include "gfs/dynamics.hpp"
#include "gfs/errors.hpp"
#include "gfs/scenario.hpp"

#include "test_support.hpp"

using namespace gfs;
using doctest::Approx;

namespace {

CctConfig prototype_cct() {
    CctConfig cfg;
    cfg.t_min = 0.0;
    cfg.t_max = 1.5;
    cfg.coarse = 0.01;
    cfg.refine_tol = 1e-3;
    return cfg;
}

void check_scan(const CctReport& rep, double grid) {
    REQUIRE(rep.scan.size() >= 2);
    // The coarse scan runs stable probes up to the first unstable one.
    for (size_t i = 0; i + 1 < rep.scan.size(); ++i) {
        CHECK(rep.scan[i].first < rep.scan[i + 1].first);
    }
    CHECK(rep.cct_refined == rep.last_stable);
    CHECK(rep.first_unstable > rep.last_stable);
    CHECK(rep.first_unstable - rep.last_stable <= 1e-3 + 1e-12);
    for (const double t : {rep.last_stable, rep.first_unstable}) {
        const double k = t / grid;
        CHECK(std::abs(k - std::round(k)) < 1e-6);
    }
}

} // namespace

TEST_CASE("instantaneous clearing is always stable") {
    for (const char* path : {test::kHybridScenario, test::kSmibScenario,
                             test::kTwoGenScenario}) {
        CAPTURE(path);
        const ReducedCctScenario scn(build_reduced(load_scenario(path)));
        CHECK(scn.clear_and_classify(0.0).kind == OutcomeKind::StableSamePeriod);
    }
    const FirstOrderCctScenario inv(build_first_order(load_scenario(test::kTwoInvScenario)));
    CHECK(inv.clear_and_classify(0.0).kind == OutcomeKind::StableSamePeriod);
}

TEST_CASE("critical clearing times match the frozen brackets, in the expected order") {
    const ReducedCctScenario hybrid(build_reduced(load_scenario(test::kHybridScenario)));
    const CctReport rh = hybrid.compute(prototype_cct());
    CHECK(rh.last_stable == Approx(0.6544).epsilon(1e-12));
    CHECK(rh.first_unstable == Approx(0.655).epsilon(1e-12));
    CHECK(rh.at_first_unstable.kind == OutcomeKind::StableAdjacentPeriod);
    check_scan(rh, 1e-4);

    const ReducedCctScenario smib(build_reduced(load_scenario(test::kSmibScenario)));
    const CctReport rs = smib.compute(prototype_cct());
    CHECK(rs.last_stable == Approx(0.4994).epsilon(1e-12));
    CHECK(rs.first_unstable == Approx(0.5).epsilon(1e-12));
    check_scan(rs, 1e-4);

    const ReducedCctScenario twogen(build_reduced(load_scenario(test::kTwoGenScenario)));
    const CctReport rg = twogen.compute(prototype_cct());
    CHECK(rg.last_stable == Approx(0.1713).epsilon(1e-12));
    CHECK(rg.first_unstable == Approx(0.1719).epsilon(1e-12));
    check_scan(rg, 1e-4);

    const FirstOrderCctScenario twoinv(build_first_order(load_scenario(test::kTwoInvScenario)));
    const CctReport ri = twoinv.compute(prototype_cct());
    CHECK(ri.last_stable == Approx(0.8519).epsilon(1e-12));
    CHECK(ri.first_unstable == Approx(0.8525).epsilon(1e-12));
    check_scan(ri, 1e-4);

    // Two inertial machines < machine-bus < swing+droop < droop-droop.
    CHECK(rg.last_stable < rs.last_stable);
    CHECK(rs.last_stable < rh.last_stable);
    CHECK(rh.last_stable < ri.last_stable);
}

TEST_CASE("skipping the frequency re-initialization shifts the hybrid verdict") {
    ReducedSystem sys = build_reduced(load_scenario(test::kHybridScenario));
    sys.jump_enabled = false;
    const ReducedCctScenario scn(sys);
    const CctReport rep = scn.compute(prototype_cct());
    CHECK(rep.last_stable == Approx(0.4663).epsilon(1e-12));
    CHECK(rep.first_unstable == Approx(0.4669).epsilon(1e-12));
    // Far from the 0.6544 obtained with the jump applied.
    CHECK(rep.last_stable < 0.5);
}

TEST_CASE("fault-on states are cached, repeatable, and consistent with the trajectory") {
    const ReducedSystem sys = build_reduced(load_scenario(test::kHybridScenario));
    const ReducedCctScenario scn(sys);

    const SystemState a = scn.fault_on_state(0.3);
    const SystemState b = scn.fault_on_state(0.3);
    CHECK(a.delta == b.delta);
    CHECK(a.omega_e == b.omega_e);

    const Trajectory traj = scn.fault_on_trajectory(0.3);
    CHECK(traj.samples.back().delta == a.delta);
    CHECK(traj.samples.back().omega_e == a.omega_e);

    // At t = 0 the state is the pre-fault equilibrium pushed through the
    // fault-application frequency jump.
    const SystemState s0 = scn.fault_on_state(0.0);
    CHECK(s0.delta == scn.pre_sep());
    CHECK(s0.omega_e == frequency_jump_relative(0.0, scn.pre_sep(), sys.fault.k2,
                                                sys.pre.powers, sys.fault.powers));
    CHECK(s0.omega_e != 0.0);

    CHECK_THROWS_AS((void)scn.fault_on_state(-0.1), ConfigError);
}

TEST_CASE("the search is bit-reproducible") {
    const ReducedCctScenario scn(build_reduced(load_scenario(test::kTwoGenScenario)));
    const CctConfig cfg = prototype_cct();
    const CctReport a = scn.compute(cfg);
    const CctReport b = scn.compute(cfg);
    CHECK(a.last_stable == b.last_stable);
    CHECK(a.first_unstable == b.first_unstable);
    REQUIRE(a.scan.size() == b.scan.size());
    for (size_t i = 0; i < a.scan.size(); ++i) {
        CHECK(a.scan[i].first == b.scan[i].first);
        CHECK(a.scan[i].second.kind == b.scan[i].second.kind);
    }
}

TEST_CASE("invalid brackets name the failing end") {
    const ReducedCctScenario scn(build_reduced(load_scenario(test::kHybridScenario)));

    CctConfig past = prototype_cct();
    past.t_min = 0.7; // beyond the critical time: the first probe is already gone
    CHECK_THROWS_WITH_AS((void)scn.compute(past), doctest::Contains("lower end"), ConfigError);

    CctConfig shy = prototype_cct();
    shy.t_max = 0.3; // the scan never reaches an unstable clearing
    CHECK_THROWS_WITH_AS((void)scn.compute(shy), doctest::Contains("upper end"), ConfigError);

    CctConfig bad = prototype_cct();
    bad.t_max = bad.t_min;
    CHECK_THROWS_AS((void)scn.compute(bad), ConfigError);
}

TEST_CASE("droop-droop faults drift monotonically and re-synchronize a period over") {
    const FirstOrderSystem sys = build_first_order(load_scenario(test::kTwoInvScenario));
    const FirstOrderCctScenario scn(sys);

    CHECK(scn.pre_sep() == Approx(0.14592124498727976).epsilon(1e-10));
    CHECK(scn.post_sep() == scn.pre_sep()); // identical topologies
    CHECK(scn.fault_on_delta(0.0) == scn.pre_sep()); // no state jump at application

    // With no fault-on equilibrium the angle rises strictly monotonically.
    CHECK_FALSE(existence_condition(sys.fault).holds);
    double prev = scn.fault_on_delta(0.0);
    for (int i = 1; i <= 20; ++i) {
        const double d = scn.fault_on_delta(0.05 * i);
        CHECK(d > prev);
        prev = d;
    }

    // Clearing beyond the critical time lands in the adjacent period...
    const Outcome late = scn.clear_and_classify(0.86);
    CHECK(late.kind == OutcomeKind::StableAdjacentPeriod);
    CHECK(late.slips == 1);

    // ...approached monotonically from below: a first-order flow cannot
    // overshoot its equilibrium.
    const double dc = scn.fault_on_delta(0.86);
    FirstOrderSystem post_only = sys;
    const Trajectory tail = integrate_mode(post_only, TopologyMode::PostFault, dc,
                                           {1e-4, 10.0, 10});
    const double target = scn.post_sep() + 2.0 * std::numbers::pi;
    for (size_t i = 1; i < tail.samples.size(); ++i) {
        CHECK(tail.samples[i].delta >= tail.samples[i - 1].delta);
        CHECK(tail.samples[i].delta <= target + 1e-9);
    }
    CHECK(tail.samples.back().delta == Approx(target).epsilon(1e-6));

    // Under the mathematical reading those re-synchronized runs count as
    // stable, so no unstable probe exists below t_max.
    CHECK_THROWS_WITH_AS((void)scn.compute(prototype_cct(), false),
                         doctest::Contains("upper end"), ConfigError);
}

TEST_CASE("losing the second inertia speeds up the fault-on separation") {
    const ReducedCctScenario twogen(build_reduced(load_scenario(test::kTwoGenScenario)));
    const ReducedCctScenario smib(build_reduced(load_scenario(test::kSmibScenario)));

    const double tg_expected[] = {0.018134, 0.035817, 0.053060};
    const double sm_expected[] = {0.003140, 0.006203, 0.009190};
    for (int i = 0; i < 3; ++i) {
        const double t = 0.05 * (i + 1);
        const double wg = twogen.fault_on_state(t).omega_e;
        const double ws = smib.fault_on_state(t).omega_e;
        CHECK(wg == Approx(tg_expected[i]).epsilon(1e-5));
        CHECK(ws == Approx(sm_expected[i]).epsilon(1e-5));
        CHECK(wg > 3.0 * ws); // the relative state accelerates much faster
    }
}

TEST_CASE("the nine-bus clearing-time bracket matches the frozen baseline") {
    const MmScenario ms = build_multimachine(load_scenario(test::kWsccOriginal));
    const MmCctScenario scn(ms.sys, ms.y_fault, ms.y_post, ms.initial, ms.classify,
                            ms.include_gen_damping);
    CctConfig cfg;
    cfg.t_min = 0.0;
    cfg.t_max = 0.6;
    cfg.coarse = 0.01;
    cfg.refine_tol = 1e-3;
    const CctReport rep = scn.compute(cfg);
    CHECK(rep.last_stable == Approx(0.2720).epsilon(1e-12));
    CHECK(rep.first_unstable == Approx(0.2726).epsilon(1e-12));
    check_scan(rep, 2e-4); // multi-machine probes snap to the classifier step
}

TEST_CASE("undamped scenarios make the probes inconclusive rather than wrong") {
    ReducedSystem sys = build_reduced(load_scenario(test::kSmibScenario));
    sys.pre.d_const = 0.0;
    sys.fault.d_const = 0.0;
    sys.post.d_const = 0.0;
    const ReducedCctScenario scn(sys);
    CHECK_THROWS_WITH_AS((void)scn.compute(prototype_cct()), doctest::Contains("CCT probe"),
                         InconclusiveError);
}
