// Acceptance harness: one behavioral criterion per line, PASS or FAIL, and a
// nonzero exit code when anything failed.  Each criterion is independent --
// a failure in one leaves the others running -- and every check works from
// the stock scenario files so the printed verdicts describe the shipped
// configuration, not a tuned test fixture.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gfs/equilibria.hpp"
#include "gfs/scenario.hpp"

#include "test_support.hpp"

using namespace gfs;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Tiny reporting harness
// ---------------------------------------------------------------------------

struct Fail {
    std::string msg;
};

void need(bool ok, const std::string& msg) {
    if (!ok) throw Fail{msg};
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

int g_failures = 0;

void criterion(int id, const char* title, const std::function<std::string()>& body) {
    try {
        const std::string detail = body();
        std::printf("PASS %2d %-38s %s\n", id, title, detail.c_str());
    } catch (const Fail& f) {
        std::printf("FAIL %2d %-38s %s\n", id, title, f.msg.c_str());
        ++g_failures;
    } catch (const std::exception& e) {
        std::printf("FAIL %2d %-38s unexpected error: %s\n", id, title, e.what());
        ++g_failures;
    }
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// Shared computations
// ---------------------------------------------------------------------------

struct CctRun {
    CctReport rep;
    double seconds = 0.0;
};

/// Runs the scenario's configured clearing-time search, timing the search.
CctRun reduced_cct_run(const char* path) {
    const ScenarioConfig cfg = load_scenario(path);
    const ReducedCctScenario scn(build_reduced(cfg), cfg.solver.dt, cfg.classify);
    const auto t0 = std::chrono::steady_clock::now();
    CctRun run{scn.compute(cfg.cct, cfg.cct_engineering), 0.0};
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

struct SepUep {
    double sep = 0.0;
    EquilibriumPoint uep;
};

SepUep principal_pair(const HybridDerived& hd, const GlobalConstants& g) {
    const auto eqs = find_equilibria_second_order(hd, g, -kPi, kPi + 2.0);
    const double sep = principal_sep(eqs).delta;
    return {sep, uep_right_of(eqs, sep)};
}

} // namespace

int main() {
    std::printf("acceptance: behavioral criteria for the stock scenarios\n");

    const std::string scenario_err = "scenario setup failed: ";

    // The four prototype clearing-time searches feed criteria 1-5 and 9.
    std::optional<CctRun> hybrid, smib, twogen, twoinv;
    std::string cct_err;
    try {
        hybrid = reduced_cct_run(test::kHybridScenario);
        smib = reduced_cct_run(test::kSmibScenario);
        twogen = reduced_cct_run(test::kTwoGenScenario);
        {
            const ScenarioConfig cfg = load_scenario(test::kTwoInvScenario);
            const FirstOrderCctScenario scn(build_first_order(cfg), cfg.solver.dt,
                                            cfg.classify);
            const auto t0 = std::chrono::steady_clock::now();
            CctRun run{scn.compute(cfg.cct, cfg.cct_engineering), 0.0};
            run.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            twoinv = run;
        }
    } catch (const std::exception& e) {
        cct_err = e.what();
    }
    const auto cct_of = [&](const std::optional<CctRun>& r) -> const CctRun& {
        need(r.has_value(), "clearing-time search failed: " + cct_err);
        return *r;
    };

    criterion(1, "hybrid clearing time", [&] {
        const CctRun& r = cct_of(hybrid);
        need(r.rep.cct_refined >= 0.60 && r.rep.cct_refined <= 0.70,
             fmt("refined CCT %.4f s outside [0.60, 0.70]", r.rep.cct_refined));
        need(r.seconds < 60.0, fmt("search took %.1f s (budget 60 s)", r.seconds));
        return fmt("CCT %.4f s in [0.60, 0.70], search %.1f s", r.rep.cct_refined, r.seconds);
    });

    criterion(2, "undamped-partner (smib) clearing time", [&] {
        const CctRun& r = cct_of(smib);
        need(r.rep.cct_refined >= 0.44 && r.rep.cct_refined <= 0.54,
             fmt("refined CCT %.4f s outside [0.44, 0.54]", r.rep.cct_refined));
        return fmt("CCT %.4f s in [0.44, 0.54]", r.rep.cct_refined);
    });

    criterion(3, "two-generator clearing time", [&] {
        const CctRun& r = cct_of(twogen);
        need(r.rep.cct_refined >= 0.12 && r.rep.cct_refined <= 0.20,
             fmt("refined CCT %.4f s outside [0.12, 0.20]", r.rep.cct_refined));
        need(r.rep.cct_refined < cct_of(smib).rep.cct_refined,
             fmt("expected two-generator CCT %.4f below smib CCT %.4f", r.rep.cct_refined,
                 cct_of(smib).rep.cct_refined));
        return fmt("CCT %.4f s in [0.12, 0.20], below smib %.4f s", r.rep.cct_refined,
                   cct_of(smib).rep.cct_refined);
    });

    criterion(4, "two-inverter first-order behavior", [&] {
        const ScenarioConfig cfg = load_scenario(test::kTwoInvScenario);
        const FirstOrderSystem sys = build_first_order(cfg);
        const FirstOrderCctScenario scn(sys, cfg.solver.dt, cfg.classify);
        const CctRun& r = cct_of(twoinv);

        need(!existence_condition(sys.fault).holds,
             "the faulted flow unexpectedly has an equilibrium");
        double prev = scn.fault_on_delta(0.0);
        for (int i = 1; i <= 20; ++i) {
            const double d = scn.fault_on_delta(0.05 * i);
            need(d > prev, fmt("fault-on angle not strictly increasing at t = %.2f", 0.05 * i));
            prev = d;
        }

        need(r.rep.at_first_unstable.kind == OutcomeKind::StableAdjacentPeriod &&
                 r.rep.at_first_unstable.slips == 1,
             "beyond-critical clearing did not land one period over");

        // First-order flows approach their equilibrium monotonically: check the
        // stable tail (back to the same period) and the slipped tail (up to the
        // next period) for overshoot.
        const IntegratorConfig tail_cfg{1e-4, 10.0, 10};
        {
            const double dc = scn.fault_on_delta(r.rep.last_stable);
            const Trajectory tail =
                integrate_mode(sys, TopologyMode::PostFault, dc, tail_cfg);
            for (size_t i = 1; i < tail.samples.size(); ++i) {
                need(tail.samples[i].delta <= tail.samples[i - 1].delta + 1e-12,
                     "stable tail overshoots while settling");
                need(tail.samples[i].delta >= scn.post_sep() - 1e-9,
                     "stable tail crosses below the equilibrium");
            }
        }
        {
            const double dc = scn.fault_on_delta(r.rep.first_unstable);
            const Trajectory tail =
                integrate_mode(sys, TopologyMode::PostFault, dc, tail_cfg);
            const double target = scn.post_sep() + kTwoPi;
            for (size_t i = 1; i < tail.samples.size(); ++i) {
                need(tail.samples[i].delta >= tail.samples[i - 1].delta - 1e-12,
                     "slipped tail overshoots while settling");
                need(tail.samples[i].delta <= target + 1e-9,
                     "slipped tail crosses above the adjacent equilibrium");
            }
        }

        need(r.rep.cct_refined >= 0.80 && r.rep.cct_refined <= 0.90,
             fmt("refined CCT %.4f s outside [0.80, 0.90]", r.rep.cct_refined));
        return fmt("CCT %.4f s; no fault-on equilibrium, monotone tails, slip-by-one beyond",
                   r.rep.cct_refined);
    });

    criterion(5, "clearing-time ordering", [&] {
        const double rg = cct_of(twogen).rep.cct_refined;
        const double rs = cct_of(smib).rep.cct_refined;
        const double rh = cct_of(hybrid).rep.cct_refined;
        const double ri = cct_of(twoinv).rep.cct_refined;
        need(rg < rs && rs < rh && rh < ri,
             fmt("ordering violated: %.4f, %.4f, %.4f, %.4f", rg, rs, rh, ri));
        return fmt("%.4f < %.4f < %.4f < %.4f", rg, rs, rh, ri);
    });

    criterion(6, "reduced model matches the coupled model", [&] {
        const ScenarioConfig cfg = load_scenario(test::kHybridScenario);
        const ReducedSystem sys = build_reduced(cfg);
        const double dt = 1e-4;
        double worst = 0.0;
        for (const auto mode :
             {TopologyMode::PreFault, TopologyMode::Fault, TopologyMode::PostFault}) {
            const HybridDerived& hd = sys.derived(mode);
            const TwoSourcePowers& pw = hd.powers;
            double delta0 = 0.5; // the faulted topology has no equilibrium
            if (mode != TopologyMode::Fault) {
                const auto eqs = find_equilibria_second_order(hd, sys.g, -kPi, kPi);
                delta0 = principal_sep(eqs).delta + 0.3;
            }
            SystemState sr{delta0, 0.0};
            CoupledState sc{delta0, 0.0, 0.0};
            // omega_e = omega1 - omega2(delta): the reduced state starting at
            // rest means the swing starts at the droop frequency.
            sc.omega1 = coupled_omega2(sc, cfg.droop2, pw, sys.g);
            const auto f = [&](const CoupledState& x) {
                return coupled_rhs(x, cfg.sg1, cfg.droop2, pw, sys.g);
            };
            const auto add = [](const CoupledState& x, const CoupledDerivative& d, double h) {
                return CoupledState{x.delta1 + h * d.ddelta1, x.omega1 + h * d.domega1,
                                    x.delta2 + h * d.ddelta2};
            };
            double mode_worst = 0.0;
            for (long i = 0; i < 100000; ++i) { // 10 s
                sr = rk4_step(hd, sys.g, sr, dt);
                const auto k1 = f(sc);
                const auto k2 = f(add(sc, k1, dt / 2));
                const auto k3 = f(add(sc, k2, dt / 2));
                const auto k4 = f(add(sc, k3, dt));
                sc = CoupledState{
                    sc.delta1 + dt / 6 *
                                    (k1.ddelta1 + 2 * k2.ddelta1 + 2 * k3.ddelta1 + k4.ddelta1),
                    sc.omega1 + dt / 6 *
                                    (k1.domega1 + 2 * k2.domega1 + 2 * k3.domega1 + k4.domega1),
                    sc.delta2 + dt / 6 *
                                    (k1.ddelta2 + 2 * k2.ddelta2 + 2 * k3.ddelta2 + k4.ddelta2)};
                mode_worst =
                    std::max(mode_worst, std::abs(sr.delta - (sc.delta1 - sc.delta2)));
            }
            need(mode_worst < 1e-8,
                 fmt("max angle mismatch %.3e rad in topology mode %d exceeds 1e-8",
                     mode_worst, static_cast<int>(mode)));
            worst = std::max(worst, mode_worst);
        }
        return fmt("max angle mismatch %.3e rad over 10 s, all topologies", worst);
    });

    criterion(7, "closed-form powers match the phasor solve", [&] {
        const ScenarioConfig cfg = load_scenario(test::kHybridScenario);
        const double e1 = cfg.sg1.e, e2 = cfg.droop2.e;
        const std::array<TwoSourcePowers, 3> pw{
            two_source_powers(reduce_three_bus(cfg.network, TopologyMode::PreFault), e1, e2),
            two_source_powers(reduce_three_bus(cfg.network, TopologyMode::Fault), e1, e2),
            two_source_powers(reduce_three_bus(cfg.network, TopologyMode::PostFault), e1, e2)};
        const std::array<TopologyMode, 3> modes{TopologyMode::PreFault, TopologyMode::Fault,
                                                TopologyMode::PostFault};
        std::mt19937_64 rng(0x5eedULL);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double delta = angle(rng);
            const int m = i % 3;
            const auto [p1, p2] = solve_network_powers(cfg.network, modes[m], e1, e2, delta,
                                                       0.0);
            worst = std::max(worst, test::rel_err(pw[m].p1(delta), p1));
            worst = std::max(worst, test::rel_err(pw[m].p2(delta), p2));
        }
        need(worst <= 1e-9, fmt("worst relative error %.3e exceeds 1e-9", worst));
        return fmt("1000 samples, worst relative error %.3e", worst);
    });

    criterion(8, "undamped oscillation conserves energy", [&] {
        const ScenarioConfig cfg = load_scenario(test::kSmibScenario);
        const ReducedSystem sys = build_reduced(cfg);
        HybridDerived und = sys.post;
        und.d_const = 0.0;
        need(und.d_sin == 0.0 && und.k2 == 0.0, "smib model retains droop terms");
        const auto eqs = find_equilibria_second_order(und, sys.g, -kPi, kPi);
        const double sep = principal_sep(eqs).delta;
        const EnergyFunction V(und, sys.g, sep);

        SystemState s{sep + 1.0, 0.0};
        const double v0 = V.value(s.delta, s.omega_e);
        double drift = 0.0;
        std::vector<double> amplitudes;
        double d_prev2 = s.delta, d_prev = s.delta;
        for (long i = 0; i < 100000; ++i) { // 10 s at dt = 1e-4
            s = rk4_step(und, sys.g, s, 1e-4);
            drift = std::max(drift, std::abs(V.value(s.delta, s.omega_e) - v0));
            if (i >= 2 && d_prev >= d_prev2 && d_prev >= s.delta && d_prev > sep + 0.5) {
                amplitudes.push_back(d_prev - sep);
            }
            d_prev2 = d_prev;
            d_prev = s.delta;
        }
        const double rel_drift = drift / std::max(1.0, std::abs(v0));
        need(rel_drift < 1e-6, fmt("relative energy drift %.3e exceeds 1e-6", rel_drift));
        need(amplitudes.size() >= 5,
             fmt("only %zu oscillation peaks detected", amplitudes.size()));
        const auto [lo, hi] = std::minmax_element(amplitudes.begin(), amplitudes.end());
        const double spread = (*hi - *lo) / *hi;
        need(spread < 1e-3, fmt("peak amplitude varies by %.4f%%", 100.0 * spread));
        return fmt("drift %.3e, %zu peaks within %.4f%%", rel_drift, amplitudes.size(),
                   100.0 * spread);
    });

    criterion(9, "frequency re-initialization at events", [&] {
        const ScenarioConfig cfg = load_scenario(test::kHybridScenario);
        const ReducedSystem sys = build_reduced(cfg);
        const auto eqs = find_equilibria_second_order(sys.pre, sys.g, -kPi, kPi);
        const Trajectory traj = integrate(sys, SystemState{principal_sep(eqs).delta, 0.0},
                                          cfg.solver, cfg.events);
        need(traj.events.size() == 2, fmt("expected 2 events, saw %zu", traj.events.size()));
        for (const EventRecord& e : traj.events) {
            need(e.before.delta == e.after.delta, "angle not continuous at an event");
            const double p2_before = sys.derived(e.from).powers.p2(e.before.delta);
            const double p2_after = sys.derived(e.to).powers.p2(e.after.delta);
            const double expected = sys.post.k2 * (p2_after - p2_before);
            const double jump = e.after.omega_e - e.before.omega_e;
            need(std::abs(jump - expected) < 1e-12,
                 fmt("frequency jump off by %.3e at t = %.2f", std::abs(jump - expected),
                     e.t));
            const double w1_change = (e.after.omega_e + e.omega2_after) -
                                     (e.before.omega_e + e.omega2_before);
            need(std::abs(w1_change) < 1e-12,
                 fmt("swing frequency discontinuous by %.3e at t = %.2f", w1_change, e.t));
        }

        ReducedSystem nojump = sys;
        nojump.jump_enabled = false;
        const ReducedCctScenario scn(nojump, cfg.solver.dt, cfg.classify);
        const CctReport rep = scn.compute(cfg.cct, cfg.cct_engineering);
        const double with_jump = cct_of(hybrid).rep.cct_refined;
        need(rep.cct_refined != with_jump,
             "disabling the re-initialization left the clearing time unchanged");
        return fmt("jump identity < 1e-12; CCT %.4f with vs %.4f without re-initialization",
                   with_jump, rep.cct_refined);
    });

    criterion(10, "stable-region areas and boundary shape", [&] {
        const ScenarioConfig cfg_h = load_scenario(test::kHybridScenario);
        const ScenarioConfig cfg_s = load_scenario(test::kSmibScenario);
        const ReducedSystem sys_h = build_reduced(cfg_h);
        const ReducedSystem sys_s = build_reduced(cfg_s);
        const GlobalConstants g = sys_h.g;

        const auto samples = stratified_unit_samples(100, 100, 20260816);
        McConfig mc;
        mc.dt = 1e-3;

        std::string counts;
        for (const double d1 : {0.0, 1.5, 10.0}) {
            HybridDerived hd_h = sys_h.post;
            hd_h.d_const = d1;
            HybridDerived hd_s = sys_s.post;
            hd_s.d_const = d1;
            const double sep_h = principal_pair(hd_h, g).sep;
            const double sep_s = principal_pair(hd_s, g).sep;
            const McResult rh =
                mc_stable_fraction(hd_h, g, sep_h, reference_window(sep_h), samples, mc);
            const McResult rs =
                mc_stable_fraction(hd_s, g, sep_s, reference_window(sep_s), samples, mc);
            need(rh.n_inconclusive == 0 && rs.n_inconclusive == 0,
                 fmt("inconclusive membership probes at D1 = %g", d1));
            need(rh.n_stable >= rs.n_stable,
                 fmt("hybrid area %d below smib area %d at D1 = %g", rh.n_stable,
                     rs.n_stable, d1));
            counts += fmt("%sD1=%g: %d>=%d", counts.empty() ? "" : ", ", d1, rh.n_stable,
                          rs.n_stable);

            // Droop damping opens the hybrid boundary: both branches leave
            // through the frequency edges, freeing the window corners.
            const SepUep pair_h = principal_pair(hd_h, g);
            const BoundaryPolyline tr =
                trace_stability_boundary(hd_h, pair_h.uep, g, reference_window(pair_h.sep));
            need(tr.branch_plus.termination == BranchTermination::WindowExit &&
                     tr.branch_plus.exit_edge == WindowEdge::Top,
                 fmt("upper hybrid branch did not exit through the top at D1 = %g", d1));
            need(tr.branch_minus.termination == BranchTermination::WindowExit &&
                     tr.branch_minus.exit_edge == WindowEdge::Bottom,
                 fmt("lower hybrid branch did not exit through the bottom at D1 = %g", d1));
            need(upper_left_open(tr, pair_h.sep) && lower_right_open(tr, pair_h.sep),
                 fmt("window corners not open at D1 = %g", d1));
        }

        // The undamped smib boundary closes through the saddle and coincides
        // with the energy level set.
        HybridDerived und = sys_s.post;
        und.d_const = 0.0;
        const SepUep pair_u = principal_pair(und, g);
        const Window w = reference_window(pair_u.sep);
        const BoundaryPolyline tr = trace_stability_boundary(und, pair_u.uep, g, w);
        need(tr.branch_plus.termination == BranchTermination::ReturnedToUep,
             "undamped boundary failed to close through the saddle");
        const BoundaryPolyline lv = energy_level_boundary(und, g, pair_u.uep, pair_u.sep, w);
        const double dist = hausdorff_distance(tr.branch_plus.points, boundary_points(lv));
        need(dist < 1e-2, fmt("traced loop is %.3e from the level set (limit 1e-2)", dist));

        return counts + fmt("; closed undamped loop within %.2e of the level set", dist);
    });

    criterion(11, "traced boundary classifies its sides", [&] {
        const ScenarioConfig cfg = load_scenario(test::kHybridScenario);
        const ReducedSystem sys = build_reduced(cfg);
        const SepUep pair = principal_pair(sys.post, sys.g);
        const BoundaryPolyline tr =
            trace_stability_boundary(sys.post, pair.uep, sys.g, reference_window(pair.sep));
        const BoundaryValidation val = validate_boundary(sys.post, sys.g, tr, pair.sep);
        need(val.n_inside > 10 && val.n_outside > 10, "too few side points sampled");
        need(val.validity() >= 0.95,
             fmt("validity %.3f below 0.95 (%d/%d inside, %d/%d outside)", val.validity(),
                 val.n_inside_stable, val.n_inside, val.n_outside_unstable, val.n_outside));
        return fmt("validity %.3f (%d inside, %d outside points, offset 0.02)",
                   val.validity(), val.n_inside, val.n_outside);
    });

    criterion(12, "first-order existence condition", [&] {
        std::mt19937_64 rng(20260816ULL);
        const auto uniform = [&rng](double lo, double hi) {
            return std::uniform_real_distribution<double>(lo, hi)(rng);
        };
        const GlobalConstants g{};
        int agreements = 0;
        constexpr int kDraws = 1000;
        constexpr int kGrid = 20001;
        for (int i = 0; i < kDraws; ++i) {
            DroopParams d1{uniform(0.01, 0.1), uniform(-0.5, 1.0), 1.1};
            DroopParams d2{uniform(0.01, 0.1), uniform(-0.5, 1.0), 1.1};
            ThreeBusNetwork net;
            net.z1 = {uniform(0.0, 0.3), uniform(0.1, 0.9)};
            net.z2 = {uniform(0.0, 0.3), uniform(0.1, 0.9)};
            net.z_load = std::polar(uniform(0.5, 1.5), uniform(0.0, 85.0 * kPi / 180.0));
            net.z_fault = {0.01, 0.0};
            const TwoInverterCoefficients tc = two_inverter_coefficients(
                d1, d2, reduce_three_bus(net, TopologyMode::PreFault), g);

            // Independent oracle: sign changes of the flow on a dense grid.
            bool grid_root = false;
            double prev = two_inverter_rhs(-kPi, tc);
            for (int k = 1; k < kGrid && !grid_root; ++k) {
                const double cur = two_inverter_rhs(-kPi + kTwoPi * k / (kGrid - 1), tc);
                grid_root = prev * cur <= 0.0;
                prev = cur;
            }
            if (existence_condition(tc).holds == grid_root) ++agreements;
        }
        need(agreements == kDraws,
             fmt("existence test agreed on %d of %d draws", agreements, kDraws));
        return fmt("%d/%d draws agree with the grid-scan oracle", agreements, kDraws);
    });

    criterion(13, "droop damping trends with the load", [&] {
        const ScenarioConfig cfg = load_scenario(test::kHybridScenario);
        const double zl_mag = std::abs(cfg.network.z_load);
        const auto d_delta_at_sep = [&cfg](std::complex<double> z_load) {
            ScenarioConfig local = cfg;
            local.network.z_load = z_load;
            const ReducedSystem sys = build_reduced(local);
            const auto eqs = find_equilibria_second_order(sys.pre, sys.g, -kPi, kPi);
            return sys.pre.d_delta(principal_sep(eqs).delta);
        };

        double prev = 0.0;
        bool first = true;
        for (const double theta : {15.0, 25.0, 35.0, 45.0, 55.0, 65.0}) {
            const double d = d_delta_at_sep(std::polar(zl_mag, theta * kPi / 180.0));
            need(first || d < prev,
                 fmt("damping not decreasing at load angle %.0f deg", theta));
            prev = d;
            first = false;
        }
        const double drop = prev;

        first = true;
        for (const double mag : {0.6, 0.8, 1.0, 1.2, 1.4}) {
            const double d = d_delta_at_sep(std::polar(mag, 80.0 * kPi / 180.0));
            need(first || d > prev,
                 fmt("damping not increasing at load magnitude %.1f", mag));
            prev = d;
            first = false;
        }
        return fmt("decreasing over the angle sweep (to %.1f), increasing over the "
                   "magnitude sweep (to %.1f)",
                   drop, prev);
    });

    criterion(14, "nine-bus clearing time and droop replacement", [&] {
        const ScenarioConfig cfg_o = load_scenario(test::kWsccOriginal);
        const MmScenario orig = build_multimachine(cfg_o);
        const MmCctScenario scn(orig.sys, orig.y_fault, orig.y_post, orig.initial,
                                orig.classify, orig.include_gen_damping);
        const CctReport rep = scn.compute(cfg_o.cct);
        need(rep.cct_refined >= 0.26 && rep.cct_refined <= 0.36,
             fmt("refined CCT %.4f s outside [0.26, 0.36]", rep.cct_refined));

        // Damping enhancement: run both systems through the same survivable
        // fault and compare how the generator oscillation energy about the
        // center of angle decays over the post-fault window.
        const ScenarioConfig cfg_h = load_scenario(test::kWsccHybrid);
        const MmScenario hyb = build_multimachine(cfg_h);
        const EventSchedule ev{0.1, 0.25};
        const IntegratorConfig ic{2e-4, 8.25, 10};
        const auto ke_ratio = [&ev](const MmScenario& sc, const MmTrajectory& traj) {
            double first = 0.0, second = 0.0;
            int n_first = 0, n_second = 0;
            const double mid = ev.clear + 4.0;
            for (const auto& s : traj.samples) {
                if (s.t < ev.clear) continue;
                double t_coa = 0.0, w_coa = 0.0;
                for (int i = 0; i < sc.sys.m(); ++i) {
                    t_coa += sc.sys.generators[i].tj;
                    w_coa += sc.sys.generators[i].tj * s.omega[i];
                }
                w_coa /= t_coa;
                double ke = 0.0;
                for (int i = 0; i < sc.sys.m(); ++i) {
                    const double w_rel = s.omega[i] - w_coa;
                    ke += sc.sys.generators[i].tj * w_rel * w_rel;
                }
                (s.t < mid ? first : second) += ke;
                (s.t < mid ? n_first : n_second) += 1;
            }
            return (second / n_second) / (first / n_first);
        };
        const MmTrajectory traj_o = integrate_mm(orig.sys, orig.y_fault, orig.y_post,
                                                 orig.initial, ic, ev,
                                                 orig.include_gen_damping);
        const MmTrajectory traj_h = integrate_mm(hyb.sys, hyb.y_fault, hyb.y_post,
                                                 hyb.initial, ic, ev,
                                                 hyb.include_gen_damping);
        const double ratio_o = ke_ratio(orig, traj_o);
        const double ratio_h = ke_ratio(hyb, traj_h);
        need(ratio_h < ratio_o - 0.05,
             fmt("no damping enhancement: energy ratio %.4f (replaced) vs %.4f (original)",
                 ratio_h, ratio_o));

        // The converted source's frequency is algebraic and must jump at the
        // clearing instant, while generator speeds stay continuous.
        double jump = 0.0;
        for (size_t i = 1; i < traj_h.samples.size(); ++i) {
            const auto& s = traj_h.samples[i];
            if (s.event_flag != 1 || std::abs(s.t - ev.clear) > 1e-9) continue;
            MultiMachineSystem faulted = hyb.sys;
            faulted.y_internal = hyb.y_fault;
            MultiMachineSystem cleared = hyb.sys;
            cleared.y_internal = hyb.y_post;
            jump = std::abs(inverter_omegas(cleared, s.delta)[0] -
                            inverter_omegas(faulted, s.delta)[0]);
        }
        need(jump > 0.01, fmt("inverter frequency jump %.4f below 0.01 at clearing", jump));
        double gen_step = 0.0;
        for (size_t i = 1; i < traj_o.samples.size(); ++i) {
            if (traj_o.samples[i].event_flag != 1) continue;
            for (int k = 0; k < orig.sys.m(); ++k) {
                gen_step = std::max(gen_step, std::abs(traj_o.samples[i].omega[k] -
                                                       traj_o.samples[i - 1].omega[k]));
            }
        }
        need(gen_step < 1e-3,
             fmt("generator speeds moved %.2e across an event sample", gen_step));

        return fmt("CCT %.4f s; energy ratio %.3f vs %.3f; frequency jump %.3f",
                   rep.cct_refined, ratio_h, ratio_o, jump);
    });

    if (g_failures == 0) {
        std::printf("acceptance: all 14 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d of 14 criteria FAILED\n", g_failures);
    return 1;
}
