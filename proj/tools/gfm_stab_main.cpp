// ============================================================================
// gfm-stab: command-line front end
//
//   gfm-stab <simulate|equilibria|boundary|cct|sweep|validate>
//            --config <scenario.json> [--out <dir>]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure,
// 4 inconclusive analysis.
// ============================================================================

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfs/cct.hpp"
#include "gfs/dynamics.hpp"
#include "gfs/equilibria.hpp"
#include "gfs/errors.hpp"
#include "gfs/multimachine.hpp"
#include "gfs/network.hpp"
#include "gfs/region.hpp"
#include "gfs/scenario.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;
using namespace gfs;

// ---------------------------------------------------------------------------
// Small formatting helpers
// ---------------------------------------------------------------------------

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string mode_name(TopologyMode m) {
    switch (m) {
    case TopologyMode::PreFault: return "pre_fault";
    case TopologyMode::Fault: return "fault";
    case TopologyMode::PostFault: return "post_fault";
    }
    return "unknown";
}

std::string outcome_name(OutcomeKind k) {
    switch (k) {
    case OutcomeKind::StableSamePeriod: return "stable_same_period";
    case OutcomeKind::StableAdjacentPeriod: return "stable_adjacent_period";
    case OutcomeKind::Diverged: return "diverged";
    }
    return "unknown";
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary); // binary: LF line endings everywhere
    if (!out) {
        throw ConfigError("cannot open output file '" + (dir / name).string() + "'");
    }
    return out;
}

json outcome_json(const Outcome& o) {
    return json{{"kind", outcome_name(o.kind)},
                {"slips", o.slips},
                {"settling_time", o.settling_time}};
}

json cct_report_json(const CctReport& r) {
    json scan = json::array();
    for (const auto& [t, o] : r.scan) {
        scan.push_back(json{{"t_clear", t}, {"outcome", outcome_json(o)}});
    }
    return json{{"last_stable", r.last_stable},
                {"first_unstable", r.first_unstable},
                {"cct_refined", r.cct_refined},
                {"coarse_step", r.coarse_step},
                {"at_last_stable", outcome_json(r.at_last_stable)},
                {"at_first_unstable", outcome_json(r.at_first_unstable)},
                {"scan", std::move(scan)},
                {"notes", r.notes}};
}

void write_json(const std::filesystem::path& dir, const std::string& name, const json& j) {
    auto out = open_out(dir, name);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Trajectory writers
// ---------------------------------------------------------------------------

void write_trajectory_csv(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                          const Trajectory& traj) {
    auto out = open_out(dir, "trajectory.csv");
    out << "# gfm-stab " << kVersion << " config_hash=" << hash_hex(cfg.config_hash) << "\n";
    out << "t,delta,omega_e,omega1,omega2,p1,p2,d_eq,event_flag\n";
    for (const auto& s : traj.samples) {
        out << num(s.t) << ',' << num(s.delta) << ',' << num(s.omega_e) << ',' << num(s.omega1)
            << ',' << num(s.omega2) << ',' << num(s.p1) << ',' << num(s.p2) << ',' << num(s.d_eq)
            << ',' << s.event_flag << "\n";
    }
}

void write_events_json(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                       const Trajectory& traj) {
    json events = json::array();
    for (const auto& e : traj.events) {
        events.push_back(json{{"t", e.t},
                              {"from", mode_name(e.from)},
                              {"to", mode_name(e.to)},
                              {"delta", e.before.delta},
                              {"omega_e_before", e.before.omega_e},
                              {"omega_e_after", e.after.omega_e},
                              {"omega2_before", e.omega2_before},
                              {"omega2_after", e.omega2_after}});
    }
    write_json(dir, "events.json",
               json{{"config_hash", hash_hex(cfg.config_hash)}, {"events", std::move(events)}});
}

void write_mm_trajectory_csv(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                             const MmTrajectory& traj, int n_sources) {
    auto out = open_out(dir, "trajectory.csv");
    out << "# gfm-stab " << kVersion << " config_hash=" << hash_hex(cfg.config_hash) << "\n";
    out << "t";
    for (int i = 1; i <= n_sources; ++i) out << ",delta_" << i;
    for (int i = 1; i <= n_sources; ++i) out << ",omega_" << i;
    for (int i = 1; i <= n_sources; ++i) out << ",p_" << i;
    out << ",event_flag\n";
    for (const auto& s : traj.samples) {
        out << num(s.t);
        for (int i = 0; i < n_sources; ++i) out << ',' << num(s.delta[i]);
        for (int i = 0; i < n_sources; ++i) out << ',' << num(s.omega[i]);
        for (int i = 0; i < n_sources; ++i) out << ',' << num(s.power[i]);
        out << ',' << s.event_flag << "\n";
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    json summary{{"command", "simulate"},
                 {"kind", to_string(cfg.kind)},
                 {"config_hash", hash_hex(cfg.config_hash)},
                 {"version", kVersion}};

    if (cfg.kind == SystemKind::MultiMachine) {
        const MmScenario sc = build_multimachine(cfg);
        const MmTrajectory traj = integrate_mm(sc.sys, sc.y_fault, sc.y_post, sc.initial,
                                               cfg.solver, cfg.events, sc.include_gen_damping);
        write_mm_trajectory_csv(out_dir, cfg, traj, sc.sys.n_sources());
        const auto& last = traj.samples.back();
        json final_state{{"t", last.t}};
        final_state["delta"] = std::vector<double>(last.delta.data(),
                                                   last.delta.data() + last.delta.size());
        final_state["omega"] = std::vector<double>(last.omega.data(),
                                                   last.omega.data() + last.omega.size());
        summary["rows"] = traj.samples.size();
        summary["final"] = std::move(final_state);
        write_json(out_dir, "summary.json", summary);
        std::cout << "simulate: " << traj.samples.size() << " samples written to "
                  << (out_dir / "trajectory.csv").string() << "\n";
        return 0;
    }

    Trajectory traj;
    if (cfg.kind == SystemKind::TwoInverter) {
        const FirstOrderSystem sys = build_first_order(cfg);
        const auto eqs = find_equilibria_first_order(sys.pre, -std::numbers::pi,
                                                     std::numbers::pi);
        traj = integrate(sys, principal_sep(eqs).delta, cfg.solver, cfg.events);
    } else {
        const ReducedSystem sys = build_reduced(cfg);
        const auto eqs = find_equilibria_second_order(sys.pre, sys.g, -std::numbers::pi,
                                                      std::numbers::pi);
        traj = integrate(sys, SystemState{principal_sep(eqs).delta, 0.0}, cfg.solver,
                         cfg.events);
    }
    write_trajectory_csv(out_dir, cfg, traj);
    write_events_json(out_dir, cfg, traj);
    const auto& last = traj.samples.back();
    summary["rows"] = traj.samples.size();
    summary["final"] = json{{"t", last.t},
                            {"delta", last.delta},
                            {"omega_e", last.omega_e},
                            {"omega1", last.omega1},
                            {"omega2", last.omega2}};
    write_json(out_dir, "summary.json", summary);
    std::cout << "simulate: " << traj.samples.size() << " samples written to "
              << (out_dir / "trajectory.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// equilibria
// ---------------------------------------------------------------------------

json equilibrium_json(const EquilibriumPoint& e) {
    json eig = json::array();
    for (const auto& l : e.eigenvalues) {
        eig.push_back(json{{"re", l.real()}, {"im", l.imag()}});
    }
    const char* kind = e.kind == EquilibriumKind::Sep
                           ? "sep"
                           : (e.kind == EquilibriumKind::Uep ? "uep" : "degenerate");
    return json{{"delta", e.delta},
                {"kind", kind},
                {"eigenvalues", std::move(eig)},
                {"period_index", e.period_index}};
}

int cmd_equilibria(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    json doc{{"command", "equilibria"},
             {"kind", to_string(cfg.kind)},
             {"config_hash", hash_hex(cfg.config_hash)},
             {"version", kVersion}};
    constexpr double kTwoPi = 2.0 * std::numbers::pi;

    if (cfg.kind == SystemKind::MultiMachine) {
        const MmScenario sc = build_multimachine(cfg);
        json deltas = json::array(), p_star = json::array(), emf = json::array();
        const Eigen::VectorXd p0 = electrical_powers(sc.sys, sc.initial.delta);
        for (int i = 0; i < sc.sys.n_sources(); ++i) {
            deltas.push_back(sc.initial.delta[i]);
            p_star.push_back(p0[i]);
            emf.push_back(sc.sys.emf(i));
        }
        doc["operating_point"] = json{{"delta", std::move(deltas)},
                                      {"power", std::move(p_star)},
                                      {"emf", std::move(emf)}};
        write_json(out_dir, "equilibria.json", doc);
        std::cout << "equilibria: operating point written\n";
        return 0;
    }

    json modes;
    if (cfg.kind == SystemKind::TwoInverter) {
        const FirstOrderSystem sys = build_first_order(cfg);
        for (const auto mode :
             {TopologyMode::PreFault, TopologyMode::Fault, TopologyMode::PostFault}) {
            const auto& tc = sys.coeffs(mode);
            const auto eqs = find_equilibria_first_order(tc, -kTwoPi, kTwoPi);
            const auto ex = existence_condition(tc);
            json list = json::array();
            for (const auto& e : eqs) list.push_back(equilibrium_json(e));
            modes[mode_name(mode)] =
                json{{"coefficients", json{{"a", tc.a}, {"b", tc.b}, {"c", tc.c}}},
                     {"existence", json{{"holds", ex.holds}, {"margin", ex.margin}}},
                     {"equilibria", std::move(list)}};
        }
    } else {
        const ReducedSystem sys = build_reduced(cfg);
        for (const auto mode :
             {TopologyMode::PreFault, TopologyMode::Fault, TopologyMode::PostFault}) {
            const auto& hd = sys.derived(mode);
            const auto eqs = find_equilibria_second_order(hd, sys.g, -kTwoPi, kTwoPi);
            json list = json::array();
            for (const auto& e : eqs) list.push_back(equilibrium_json(e));
            modes[mode_name(mode)] = json{{"derived",
                                           json{{"p_m", hd.p_m},
                                                {"t_jeq", hd.t_jeq},
                                                {"gamma", hd.gamma},
                                                {"pe_cos_minus", hd.pe_cos_minus},
                                                {"pe_cos_plus", hd.pe_cos_plus},
                                                {"d_const", hd.d_const},
                                                {"d_sin", hd.d_sin},
                                                {"k2", hd.k2}}},
                                          {"equilibria", std::move(list)}};
        }
    }
    doc["modes"] = std::move(modes);
    write_json(out_dir, "equilibria.json", doc);
    std::cout << "equilibria: report written to " << (out_dir / "equilibria.json").string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// boundary
// ---------------------------------------------------------------------------

const char* termination_name(BranchTermination t) {
    switch (t) {
    case BranchTermination::WindowExit: return "window_exit";
    case BranchTermination::ArcLimit: return "arc_limit";
    case BranchTermination::ReturnedToUep: return "returned_to_uep";
    }
    return "unknown";
}

const char* edge_name(WindowEdge e) {
    switch (e) {
    case WindowEdge::None: return "none";
    case WindowEdge::Left: return "left";
    case WindowEdge::Right: return "right";
    case WindowEdge::Top: return "top";
    case WindowEdge::Bottom: return "bottom";
    }
    return "unknown";
}

int cmd_boundary(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    if (cfg.kind == SystemKind::TwoInverter || cfg.kind == SystemKind::MultiMachine) {
        throw ConfigError("boundary analysis is defined for the second-order kinds "
                          "(hybrid, smib, two_generator)");
    }
    const ReducedSystem sys = build_reduced(cfg);
    const HybridDerived& hd = sys.post;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const auto eqs = find_equilibria_second_order(hd, sys.g, -kTwoPi, kTwoPi);
    const auto& sep = principal_sep(eqs);
    const auto& uep = uep_right_of(eqs, sep.delta);

    Window window = reference_window(sep.delta);
    window.omega_min = -cfg.boundary.omega_window;
    window.omega_max = cfg.boundary.omega_window;

    BoundaryPolyline boundary;
    if (cfg.boundary.method == "trace") {
        boundary = trace_stability_boundary(hd, uep, sys.g, window, cfg.boundary.trace);
    } else {
        boundary = energy_level_boundary(hd, sys.g, uep, sep.delta, window,
                                         cfg.boundary.level_grid);
    }

    {
        auto out = open_out(out_dir, "boundary.csv");
        out << "# gfm-stab " << kVersion << " config_hash=" << hash_hex(cfg.config_hash)
            << "\n";
        out << "branch,delta,omega_e\n";
        for (const auto& p : boundary.branch_plus.points) {
            out << "plus," << num(p[0]) << ',' << num(p[1]) << "\n";
        }
        for (const auto& p : boundary.branch_minus.points) {
            out << "minus," << num(p[0]) << ',' << num(p[1]) << "\n";
        }
    }

    json doc{{"command", "boundary"},
             {"kind", to_string(cfg.kind)},
             {"config_hash", hash_hex(cfg.config_hash)},
             {"version", kVersion},
             {"method", cfg.boundary.method},
             {"sep_delta", sep.delta},
             {"uep_delta", uep.delta},
             {"window", json{{"delta_min", window.delta_min},
                             {"delta_max", window.delta_max},
                             {"omega_min", window.omega_min},
                             {"omega_max", window.omega_max}}},
             {"branch_plus", json{{"points", boundary.branch_plus.points.size()},
                                  {"termination",
                                   termination_name(boundary.branch_plus.termination)},
                                  {"exit_edge", edge_name(boundary.branch_plus.exit_edge)}}},
             {"branch_minus", json{{"points", boundary.branch_minus.points.size()},
                                   {"termination",
                                    termination_name(boundary.branch_minus.termination)},
                                   {"exit_edge", edge_name(boundary.branch_minus.exit_edge)}}},
             {"upper_left_open", upper_left_open(boundary, sep.delta)},
             {"lower_right_open", lower_right_open(boundary, sep.delta)}};

    // Side-point validation is meaningful only when trajectories settle,
    // i.e. when the model carries damping.
    if (hd.d_const != 0.0 || hd.d_sin != 0.0) {
        const BoundaryValidation val = validate_boundary(hd, sys.g, boundary, sep.delta, 0.02,
                                                         500, 1e-3, cfg.classify);
        doc["validation"] = json{{"n_inside", val.n_inside},
                                 {"n_inside_stable", val.n_inside_stable},
                                 {"n_outside", val.n_outside},
                                 {"n_outside_unstable", val.n_outside_unstable},
                                 {"validity", val.validity()}};
    }
    write_json(out_dir, "boundary.json", doc);
    std::cout << "boundary: " << boundary.branch_plus.points.size() << "+"
              << boundary.branch_minus.points.size() << " points written to "
              << (out_dir / "boundary.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// cct
// ---------------------------------------------------------------------------

int cmd_cct(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    json doc{{"command", "cct"},
             {"kind", to_string(cfg.kind)},
             {"config_hash", hash_hex(cfg.config_hash)},
             {"version", kVersion},
             {"engineering", cfg.cct_engineering}};

    if (cfg.kind == SystemKind::MultiMachine) {
        const MmScenario sc = build_multimachine(cfg);
        const MmCctScenario scen(sc.sys, sc.y_fault, sc.y_post, sc.initial, sc.classify,
                                 sc.include_gen_damping);
        const CctReport report = scen.compute(cfg.cct);
        doc["report"] = cct_report_json(report);
        write_json(out_dir, "cct.json", doc);
        std::cout << "cct: refined CCT " << num(report.cct_refined) << " s (bracket "
                  << num(report.last_stable) << " / " << num(report.first_unstable) << ")\n";
        return 0;
    }

    if (cfg.kind == SystemKind::TwoInverter) {
        const FirstOrderCctScenario scen(build_first_order(cfg), cfg.solver.dt, cfg.classify);
        const CctReport report = scen.compute(cfg.cct, cfg.cct_engineering);
        doc["report"] = cct_report_json(report);
        doc["pre_sep"] = scen.pre_sep();
        doc["post_sep"] = scen.post_sep();
        if (cfg.cct_engineering) {
            // The angle criterion also admits adjacent-period convergence;
            // report that laxer reading alongside when the bracket allows it.
            try {
                doc["mathematical"] = cct_report_json(scen.compute(cfg.cct, false));
            } catch (const Error& e) {
                doc["mathematical_note"] = e.what();
            }
        }
        write_json(out_dir, "cct.json", doc);
        std::cout << "cct: refined CCT " << num(report.cct_refined) << " s (bracket "
                  << num(report.last_stable) << " / " << num(report.first_unstable) << ")\n";
        return 0;
    }

    const ReducedCctScenario scen(build_reduced(cfg), cfg.solver.dt, cfg.classify);
    const CctReport report = scen.compute(cfg.cct, cfg.cct_engineering);
    doc["report"] = cct_report_json(report);
    doc["pre_sep"] = scen.pre_sep();
    doc["post_sep"] = scen.post_sep();
    write_json(out_dir, "cct.json", doc);
    std::cout << "cct: refined CCT " << num(report.cct_refined) << " s (bracket "
              << num(report.last_stable) << " / " << num(report.first_unstable) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    if (!cfg.sweep) {
        throw ConfigError("missing required field 'sweep'");
    }
    if (cfg.kind != SystemKind::Hybrid && cfg.kind != SystemKind::Smib) {
        throw ConfigError("sweep analyses are defined for the hybrid and smib kinds");
    }
    const SweepOptions& sw = *cfg.sweep;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;

    auto out = open_out(out_dir, "sweep.csv");
    out << "# gfm-stab " << kVersion << " config_hash=" << hash_hex(cfg.config_hash) << "\n";
    out << "axis,value,metric,result\n";
    const auto row = [&out, &sw](double value, const char* metric, double result) {
        out << sw.axis << ',' << num(value) << ',' << metric << ',' << num(result) << "\n";
    };

    if (sw.axis == "theta_l_deg" || sw.axis == "zl_mag") {
        for (const double v : sw.values) {
            ScenarioConfig local = cfg;
            double mag, theta_rad;
            if (sw.axis == "theta_l_deg") {
                mag = sw.zl_mag > 0.0 ? sw.zl_mag : std::abs(cfg.network.z_load);
                theta_rad = v * std::numbers::pi / 180.0;
            } else {
                mag = v;
                theta_rad = sw.theta_l_deg * std::numbers::pi / 180.0;
            }
            local.network.z_load = std::polar(mag, theta_rad);
            local.network.validate();
            const ReducedSystem sys = build_reduced(local);
            const auto eqs =
                find_equilibria_second_order(sys.pre, sys.g, -kTwoPi, kTwoPi);
            const auto& sep = principal_sep(eqs);
            row(v, "sep_delta", sep.delta);
            row(v, "d_delta_sep", sys.pre.d_delta(sep.delta));
            row(v, "d_eq_sep", sys.pre.d_eq(sep.delta));
        }
        std::cout << "sweep: " << sw.values.size() << " points written to "
                  << (out_dir / "sweep.csv").string() << "\n";
        return 0;
    }

    // axis == "d1": matched-sample stable-area study over the reference window
    if (!sw.mc) {
        throw ConfigError("missing required field 'sweep.mc' (the d1 axis is an area study)");
    }
    const McOptions& mo = *sw.mc;
    const auto samples = stratified_unit_samples(mo.nx, mo.ny, mo.seed);
    for (const double v : sw.values) {
        ScenarioConfig local = cfg;
        local.sg1.d = v;
        const ReducedSystem sys = build_reduced(local);
        const auto eqs = find_equilibria_second_order(sys.post, sys.g, -kTwoPi, kTwoPi);
        const auto& sep = principal_sep(eqs);
        const McResult res = mc_stable_fraction(sys.post, sys.g, sep.delta,
                                                reference_window(sep.delta), samples, mo.mc);
        row(v, "mc_fraction", res.fraction());
        row(v, "n_stable", res.n_stable);
        row(v, "n_inconclusive", res.n_inconclusive);
    }
    std::cout << "sweep: " << sw.values.size() << " area points written to "
              << (out_dir / "sweep.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// validate
//
// Self-checks of the analytic layer against first-principles oracles: the
// reduced power expressions against a direct phasor solve, the reduced swing
// against the coupled model, and energy conservation of the undamped flow.
// A deliberately corrupted run (--corrupt-sign) must fail, which keeps the
// harness honest.
// ---------------------------------------------------------------------------

struct ValidationCheck {
    std::string name;
    double max_residual = 0.0;
    double threshold = 0.0;
    [[nodiscard]] bool pass() const { return max_residual <= threshold; }
};

int cmd_validate(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                 bool corrupt_sign) {
    std::vector<ValidationCheck> checks;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;

    if (cfg.kind == SystemKind::MultiMachine) {
        const MmScenario sc = build_multimachine(cfg);
        // Power balance at the operating point: dispatch equals injection.
        double res = 0.0;
        const Eigen::VectorXd p0 = electrical_powers(sc.sys, sc.initial.delta);
        for (int i = 0; i < sc.sys.m(); ++i) {
            res = std::max(res, std::abs(p0[i] - sc.sys.generators[i].p_star));
        }
        for (int j = 0; j < sc.sys.n(); ++j) {
            res = std::max(res, std::abs(p0[sc.sys.m() + j] - sc.sys.inverters[j].p_star));
        }
        checks.push_back({"dispatch_balance", res, 1e-10});
        // Reduction reciprocity.
        const auto recip = [](const AdmittanceMatrix& y) {
            return (y - y.transpose()).cwiseAbs().maxCoeff();
        };
        checks.push_back({"reduction_reciprocity",
                          std::max({recip(sc.sys.y_internal), recip(sc.y_fault),
                                    recip(sc.y_post)}),
                          1e-10});
        // The equilibrium is stationary under the RHS.
        const MultiDerivative d0 = mm_rhs(sc.sys, sc.initial, sc.include_gen_damping);
        double stat = d0.ddelta.cwiseAbs().maxCoeff();
        if (sc.sys.m() > 0) stat = std::max(stat, d0.dgen_omega.cwiseAbs().maxCoeff());
        checks.push_back({"stationary_operating_point", stat, 1e-9});
    } else {
        const bool first_order = cfg.kind == SystemKind::TwoInverter;
        // Reduced power expressions vs direct phasor solution, all topologies.
        std::mt19937_64 rng(0x5eedULL);
        const auto draw = [&rng] {
            return -std::numbers::pi +
                   kTwoPi * ((rng() >> 11) * 0x1.0p-53);
        };
        double e1, e2;
        if (first_order) {
            const FirstOrderSystem sys = build_first_order(cfg);
            e1 = cfg.droop1.e;
            e2 = cfg.droop2.e;
            (void)sys;
        } else {
            e1 = cfg.sg1.e;
            e2 = cfg.kind == SystemKind::TwoGenerator ? cfg.sg2.e : cfg.droop2.e;
        }
        double res = 0.0;
        for (const auto mode :
             {TopologyMode::PreFault, TopologyMode::Fault, TopologyMode::PostFault}) {
            const ReducedAdmittances red = reduce_three_bus(cfg.network, mode);
            TwoSourcePowers pw = two_source_powers(red, e1, e2);
            if (corrupt_sign) {
                pw.gamma = -pw.gamma; // seeded bug: flipped transfer angle
            }
            for (int k = 0; k < 300; ++k) {
                const double delta = draw();
                const auto [p1, p2] = solve_network_powers(cfg.network, mode, e1, e2, delta,
                                                           0.0);
                res = std::max(res, std::abs(pw.p1(delta) - p1));
                res = std::max(res, std::abs(pw.p2(delta) - p2));
            }
        }
        checks.push_back({"phasor_power_oracle", res, 1e-9});

        if (cfg.kind == SystemKind::Hybrid || cfg.kind == SystemKind::Smib) {
            // Reduced second-order model vs the coupled swing+droop model.
            const ReducedSystem sys = build_reduced(cfg);
            const auto eqs = find_equilibria_second_order(sys.post, sys.g, -kTwoPi, kTwoPi);
            const double sep = principal_sep(eqs).delta;
            const TwoSourcePowers pw =
                two_source_powers(reduce_three_bus(cfg.network, TopologyMode::PostFault), e1,
                                  e2);
            const double dt = 1e-4;
            SystemState sr{sep + 0.3, 0.0};
            CoupledState sc2{sr.delta, 0.0, 0.0};
            // omega_e = omega1 - omega2(delta), so starting the reduced model
            // at rest means starting the swing at the droop frequency.
            sc2.omega1 = coupled_omega2(sc2, cfg.droop2, pw, cfg.g);
            double dres = 0.0;
            const auto coupled_step = [&](CoupledState s) {
                const auto f = [&](const CoupledState& x) {
                    return coupled_rhs(x, cfg.sg1, cfg.droop2, pw, cfg.g);
                };
                const auto add = [](const CoupledState& x, const CoupledDerivative& d,
                                    double h) {
                    return CoupledState{x.delta1 + h * d.ddelta1, x.omega1 + h * d.domega1,
                                        x.delta2 + h * d.ddelta2};
                };
                const auto k1 = f(s);
                const auto k2 = f(add(s, k1, dt / 2));
                const auto k3 = f(add(s, k2, dt / 2));
                const auto k4 = f(add(s, k3, dt));
                return CoupledState{
                    s.delta1 + dt / 6 * (k1.ddelta1 + 2 * k2.ddelta1 + 2 * k3.ddelta1 +
                                         k4.ddelta1),
                    s.omega1 + dt / 6 * (k1.domega1 + 2 * k2.domega1 + 2 * k3.domega1 +
                                         k4.domega1),
                    s.delta2 + dt / 6 * (k1.ddelta2 + 2 * k2.ddelta2 + 2 * k3.ddelta2 +
                                         k4.ddelta2)};
            };
            for (long i = 0; i < 100000; ++i) { // 10 s
                sr = rk4_step(sys.post, sys.g, sr, dt);
                sc2 = coupled_step(sc2);
                dres = std::max(dres, std::abs(sr.delta - (sc2.delta1 - sc2.delta2)));
            }
            checks.push_back({"reduced_vs_coupled", dres, 1e-7});
        }

        if (!first_order) {
            // Energy conservation of the undamped flow.
            const ReducedSystem sys = build_reduced(cfg);
            HybridDerived und = sys.post;
            und.d_const = 0.0;
            und.d_sin = 0.0;
            const auto eqs = find_equilibria_second_order(und, sys.g, -kTwoPi, kTwoPi);
            const double sep = principal_sep(eqs).delta;
            const EnergyFunction V(und, sys.g, sep);
            SystemState s{sep + 0.5, 0.0};
            const double v0 = V.value(s.delta, s.omega_e);
            double drift = 0.0;
            for (long i = 0; i < 100000; ++i) { // 10 s at dt = 1e-4
                s = rk4_step(und, sys.g, s, 1e-4);
                drift = std::max(drift, std::abs(V.value(s.delta, s.omega_e) - v0));
            }
            checks.push_back({"energy_conservation", drift / std::max(1.0, std::abs(v0)),
                              1e-6});
        } else {
            // Closed-form equilibria against the flow: the RHS vanishes there.
            const FirstOrderSystem sys = build_first_order(cfg);
            double res2 = 0.0;
            for (const auto mode :
                 {TopologyMode::PreFault, TopologyMode::Fault, TopologyMode::PostFault}) {
                const auto& tc = sys.coeffs(mode);
                for (const auto& e : find_equilibria_first_order(tc, -kTwoPi, kTwoPi)) {
                    res2 = std::max(res2, std::abs(two_inverter_rhs(e.delta, tc)));
                }
            }
            checks.push_back({"first_order_roots", res2, 1e-9});
        }
    }

    json list = json::array();
    bool all_pass = true;
    std::string failed;
    for (const auto& c : checks) {
        list.push_back(json{{"check", c.name},
                            {"max_residual", c.max_residual},
                            {"threshold", c.threshold},
                            {"pass", c.pass()}});
        if (!c.pass()) {
            all_pass = false;
            failed = c.name;
        }
    }
    write_json(out_dir, "validate.json",
               json{{"command", "validate"},
                    {"kind", to_string(cfg.kind)},
                    {"config_hash", hash_hex(cfg.config_hash)},
                    {"version", kVersion},
                    {"checks", std::move(list)},
                    {"pass", all_pass}});
    for (const auto& c : checks) {
        std::cout << (c.pass() ? "PASS " : "FAIL ") << c.name
                  << " (max residual " << num(c.max_residual) << ", threshold "
                  << num(c.threshold) << ")\n";
    }
    if (!all_pass) {
        throw NumericError("validation failed: " + failed);
    }
    std::cout << "validate: all checks passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient stability toolkit for mixed grid-forming sources"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    bool corrupt_sign = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Scenario JSON file")->required();
        sub->add_option("--out", out_dir, "Output directory (default: current)");
        return sub;
    };
    add_common(app.add_subcommand("simulate", "Integrate the configured fault study"));
    add_common(app.add_subcommand("equilibria", "Report equilibria of every topology"));
    add_common(app.add_subcommand("boundary", "Trace or level-set the stability boundary"));
    add_common(app.add_subcommand("cct", "Search the critical clearing time"));
    add_common(app.add_subcommand("sweep", "Parameter sweep (damping term or area study)"));
    add_common(app.add_subcommand("validate", "Cross-check the model against oracles"))
        ->add_flag("--corrupt-sign", corrupt_sign,
                   "Deliberately flip the transfer-angle sign (harness self-test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const ScenarioConfig cfg = load_scenario(config_path);
        const std::filesystem::path out(out_dir);
        if (app.got_subcommand("simulate")) return cmd_simulate(cfg, out);
        if (app.got_subcommand("equilibria")) return cmd_equilibria(cfg, out);
        if (app.got_subcommand("boundary")) return cmd_boundary(cfg, out);
        if (app.got_subcommand("cct")) return cmd_cct(cfg, out);
        if (app.got_subcommand("sweep")) return cmd_sweep(cfg, out);
        if (app.got_subcommand("validate")) return cmd_validate(cfg, out, corrupt_sign);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InconclusiveError& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
}
