#include "gfs/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "gfs/errors.hpp"

namespace gfs {

using nlohmann::json;

namespace {

// ----------------------------------------------------------------------------
// Validating accessors: every failure names the full field path.
// ----------------------------------------------------------------------------

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) {
        throw ConfigError("expected an object at '" + path + "'");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError("missing required field '" + (path.empty() ? key : path + "." + key) +
                          "'");
    }
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw ConfigError("field '" + path + "' must be a number");
    }
    return j.get<double>();
}

double number_field(const json& j, const std::string& key, const std::string& path) {
    return as_number(require(j, key, path), path.empty() ? key : path + "." + key);
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        return fallback;
    }
    return as_number(j.at(key), path.empty() ? key : path + "." + key);
}

int int_field(const json& j, const std::string& key, const std::string& path) {
    const json& f = require(j, key, path);
    if (!f.is_number_integer()) {
        throw ConfigError("field '" + path + "." + key + "' must be an integer");
    }
    return f.get<int>();
}

std::string string_field(const json& j, const std::string& key, const std::string& path) {
    const json& f = require(j, key, path);
    if (!f.is_string()) {
        throw ConfigError("field '" + path + "." + key + "' must be a string");
    }
    return f.get<std::string>();
}

bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_boolean()) {
        throw ConfigError("field '" + path + "." + key + "' must be a boolean");
    }
    return j.at(key).get<bool>();
}

/// Impedance entry {re, im, unit: "pu"|"ohm"}; ohm values are normalized by
/// the configured bases.
Complex parse_impedance(const json& j, const std::string& path, double z_base_ohm) {
    const double re = number_field(j, "re", path);
    const double im = number_field(j, "im", path);
    std::string unit = "pu";
    if (j.contains("unit")) {
        if (!j.at("unit").is_string()) {
            throw ConfigError("field '" + path + ".unit' must be a string");
        }
        unit = j.at("unit").get<std::string>();
    }
    if (unit == "pu") {
        return {re, im};
    }
    if (unit == "ohm") {
        return {re / z_base_ohm, im / z_base_ohm};
    }
    throw ConfigError("field '" + path + ".unit' must be \"pu\" or \"ohm\"");
}

json echo_impedance(Complex z) {
    return json{{"re", z.real()}, {"im", z.imag()}, {"unit", "pu"}};
}

SgParams parse_sg(const json& j, const std::string& path) {
    SgParams sg;
    sg.tj = number_field(j, "tj", path);
    sg.d = number_field(j, "d", path);
    sg.p_star = number_field(j, "p_star", path);
    sg.e = number_field(j, "e", path);
    if (sg.tj <= 0.0 || sg.e <= 0.0 || sg.d < 0.0) {
        throw ConfigError("device '" + path + "' needs tj > 0, e > 0, d >= 0");
    }
    return sg;
}

json echo_sg(const SgParams& sg) {
    return json{{"tj", sg.tj}, {"d", sg.d}, {"p_star", sg.p_star}, {"e", sg.e}};
}

DroopParams parse_droop(const json& j, const std::string& path, bool allow_zero_k) {
    DroopParams inv;
    inv.k = number_field(j, "k", path);
    inv.p_star = number_field(j, "p_star", path);
    inv.e = number_field(j, "e", path);
    if (inv.k < 0.0 || (!allow_zero_k && inv.k == 0.0) || inv.e <= 0.0) {
        throw ConfigError("device '" + path + "' needs k " +
                          (allow_zero_k ? ">= 0" : "> 0") + " and e > 0");
    }
    return inv;
}

json echo_droop(const DroopParams& inv) {
    return json{{"k", inv.k}, {"p_star", inv.p_star}, {"e", inv.e}};
}

SystemKind parse_kind(const std::string& s) {
    if (s == "hybrid") return SystemKind::Hybrid;
    if (s == "smib") return SystemKind::Smib;
    if (s == "two_generator") return SystemKind::TwoGenerator;
    if (s == "two_inverter") return SystemKind::TwoInverter;
    if (s == "multimachine") return SystemKind::MultiMachine;
    throw ConfigError("unknown system kind '" + s +
                      "' (expected hybrid, smib, two_generator, two_inverter, or "
                      "multimachine)");
}

} // namespace

std::string to_string(SystemKind k) {
    switch (k) {
    case SystemKind::Hybrid: return "hybrid";
    case SystemKind::Smib: return "smib";
    case SystemKind::TwoGenerator: return "two_generator";
    case SystemKind::TwoInverter: return "two_inverter";
    case SystemKind::MultiMachine: return "multimachine";
    }
    return "unknown";
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("scenario file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_scenario(j, std::filesystem::path(path).parent_path().string());
}

ScenarioConfig parse_scenario(const json& j, const std::string& config_dir) {
    ScenarioConfig cfg;
    cfg.config_dir = config_dir;
    cfg.kind = parse_kind(string_field(j, "kind", ""));
    if (j.contains("description")) {
        if (!j.at("description").is_string()) {
            throw ConfigError("field 'description' must be a string");
        }
        cfg.description = j.at("description").get<std::string>();
    }
    cfg.frequency_hz = number_or(j, "frequency_hz", 50.0, "");
    if (cfg.frequency_hz <= 0.0) {
        throw ConfigError("field 'frequency_hz' must be positive");
    }
    cfg.g.omega_n = 2.0 * std::numbers::pi * cfg.frequency_hz;
    cfg.g.omega_0 = 1.0;

    json echo;
    echo["kind"] = to_string(cfg.kind);
    echo["description"] = cfg.description;
    echo["frequency_hz"] = cfg.frequency_hz;

    // ---- network + devices, by kind -------------------------------------
    const bool three_bus = cfg.kind != SystemKind::MultiMachine;
    if (three_bus) {
        const json& net = require(j, "network", "");
        cfg.network.bases.voltage_kv = 110.0;
        cfg.network.bases.power_mva = 100.0;
        if (net.contains("bases")) {
            cfg.network.bases.voltage_kv =
                number_or(net.at("bases"), "voltage_kv", 110.0, "network.bases");
            cfg.network.bases.power_mva =
                number_or(net.at("bases"), "power_mva", 100.0, "network.bases");
        }
        const double zb = cfg.network.bases.z_base_ohm();
        cfg.network.z1 = parse_impedance(require(net, "z1", "network"), "network.z1", zb);
        cfg.network.z2 = parse_impedance(require(net, "z2", "network"), "network.z2", zb);
        cfg.network.z_load =
            parse_impedance(require(net, "z_load", "network"), "network.z_load", zb);
        cfg.network.z_fault =
            parse_impedance(require(net, "z_fault", "network"), "network.z_fault", zb);
        cfg.network.z_v1 = net.contains("z_virtual1")
                               ? parse_impedance(net.at("z_virtual1"), "network.z_virtual1", zb)
                               : Complex{0.0, 0.0};
        cfg.network.z_v2 = net.contains("z_virtual2")
                               ? parse_impedance(net.at("z_virtual2"), "network.z_virtual2", zb)
                               : Complex{0.0, 0.0};
        cfg.network.validate();

        echo["network"] = json{{"bases",
                                json{{"voltage_kv", cfg.network.bases.voltage_kv},
                                     {"power_mva", cfg.network.bases.power_mva}}},
                               {"z1", echo_impedance(cfg.network.z1)},
                               {"z2", echo_impedance(cfg.network.z2)},
                               {"z_load", echo_impedance(cfg.network.z_load)},
                               {"z_fault", echo_impedance(cfg.network.z_fault)},
                               {"z_virtual1", echo_impedance(cfg.network.z_v1)},
                               {"z_virtual2", echo_impedance(cfg.network.z_v2)}};

        const json& dev = require(j, "devices", "");
        json dev_echo;
        switch (cfg.kind) {
        case SystemKind::Hybrid:
        case SystemKind::Smib:
            cfg.sg1 = parse_sg(require(dev, "sg1", "devices"), "devices.sg1");
            cfg.droop2 = parse_droop(require(dev, "droop2", "devices"), "devices.droop2",
                                     /*allow_zero_k=*/cfg.kind == SystemKind::Smib);
            if (cfg.kind == SystemKind::Smib && cfg.droop2.k != 0.0) {
                throw ConfigError("kind 'smib' requires devices.droop2.k == 0 (use kind "
                                  "'hybrid' for a live droop device)");
            }
            dev_echo["sg1"] = echo_sg(cfg.sg1);
            dev_echo["droop2"] = echo_droop(cfg.droop2);
            break;
        case SystemKind::TwoGenerator:
            cfg.sg1 = parse_sg(require(dev, "sg1", "devices"), "devices.sg1");
            cfg.sg2 = parse_sg(require(dev, "sg2", "devices"), "devices.sg2");
            dev_echo["sg1"] = echo_sg(cfg.sg1);
            dev_echo["sg2"] = echo_sg(cfg.sg2);
            break;
        case SystemKind::TwoInverter:
            cfg.droop1 = parse_droop(require(dev, "droop1", "devices"), "devices.droop1", false);
            cfg.droop2 = parse_droop(require(dev, "droop2", "devices"), "devices.droop2", false);
            dev_echo["droop1"] = echo_droop(cfg.droop1);
            dev_echo["droop2"] = echo_droop(cfg.droop2);
            break;
        case SystemKind::MultiMachine:
            break;
        }
        echo["devices"] = std::move(dev_echo);
    } else {
        const json& mm = require(j, "multimachine", "");
        MmOptions opt;
        opt.network_file = string_field(mm, "network_file", "multimachine");
        const json& flt = require(mm, "fault", "multimachine");
        opt.fault_bus = int_field(flt, "bus", "multimachine.fault") - 1; // file is 1-based
        opt.fault_impedance = number_or(flt, "impedance", 1e-5, "multimachine.fault");
        if (opt.fault_impedance <= 0.0) {
            throw ConfigError("field 'multimachine.fault.impedance' must be positive");
        }
        if (mm.contains("replace_with_droop")) {
            const json& reps = mm.at("replace_with_droop");
            if (!reps.is_array()) {
                throw ConfigError("field 'multimachine.replace_with_droop' must be an array");
            }
            for (std::size_t i = 0; i < reps.size(); ++i) {
                const std::string p = "multimachine.replace_with_droop[" + std::to_string(i) + "]";
                opt.replace_with_droop.emplace_back(int_field(reps[i], "machine", p) - 1,
                                                    number_field(reps[i], "k", p));
            }
        }
        if (mm.contains("classify")) {
            const json& cls = mm.at("classify");
            opt.classify.threshold =
                number_or(cls, "threshold_rad", opt.classify.threshold, "multimachine.classify");
            opt.classify.horizon =
                number_or(cls, "horizon", opt.classify.horizon, "multimachine.classify");
            opt.classify.dt = number_or(cls, "dt", opt.classify.dt, "multimachine.classify");
        }
        opt.include_gen_damping =
            bool_or(mm, "include_gen_damping", false, "multimachine");
        cfg.mm = opt;

        json reps = json::array();
        for (const auto& [idx, k] : opt.replace_with_droop) {
            reps.push_back(json{{"machine", idx + 1}, {"k", k}});
        }
        echo["multimachine"] =
            json{{"network_file", opt.network_file},
                 {"fault", json{{"bus", opt.fault_bus + 1}, {"impedance", opt.fault_impedance}}},
                 {"replace_with_droop", std::move(reps)},
                 {"classify", json{{"threshold_rad", opt.classify.threshold},
                                   {"horizon", opt.classify.horizon},
                                   {"dt", opt.classify.dt}}},
                 {"include_gen_damping", opt.include_gen_damping}};
    }

    // ---- common blocks ----------------------------------------------------
    if (j.contains("fault")) {
        cfg.events.apply = number_or(j.at("fault"), "apply", 0.0, "fault");
        cfg.events.clear = number_or(j.at("fault"), "clear", cfg.events.apply, "fault");
        if (cfg.events.apply < 0.0 || cfg.events.clear < cfg.events.apply) {
            throw ConfigError("fault block needs 0 <= apply <= clear");
        }
    }
    echo["fault"] = json{{"apply", cfg.events.apply}, {"clear", cfg.events.clear}};

    if (j.contains("solver")) {
        const json& sv = j.at("solver");
        cfg.solver.dt = number_or(sv, "dt", cfg.solver.dt, "solver");
        cfg.solver.t_end = number_or(sv, "t_end", cfg.solver.t_end, "solver");
        if (sv.contains("record_stride")) {
            cfg.solver.record_stride = int_field(sv, "record_stride", "solver");
        }
        if (cfg.solver.dt <= 0.0 || cfg.solver.record_stride < 1) {
            throw ConfigError("solver needs dt > 0 and record_stride >= 1");
        }
    }
    echo["solver"] = json{{"dt", cfg.solver.dt},
                          {"t_end", cfg.solver.t_end},
                          {"record_stride", cfg.solver.record_stride}};

    if (j.contains("classify")) {
        const json& cl = j.at("classify");
        cfg.classify.tol_delta = number_or(cl, "tol_delta", cfg.classify.tol_delta, "classify");
        cfg.classify.tol_omega = number_or(cl, "tol_omega", cfg.classify.tol_omega, "classify");
        cfg.classify.hold = number_or(cl, "hold", cfg.classify.hold, "classify");
        if (cl.contains("k_max")) {
            cfg.classify.k_max = int_field(cl, "k_max", "classify");
        }
        cfg.classify.horizon = number_or(cl, "horizon", cfg.classify.horizon, "classify");
        cfg.classify.horizon_ext =
            number_or(cl, "horizon_ext", cfg.classify.horizon_ext, "classify");
    }
    echo["classify"] = json{{"tol_delta", cfg.classify.tol_delta},
                            {"tol_omega", cfg.classify.tol_omega},
                            {"hold", cfg.classify.hold},
                            {"k_max", cfg.classify.k_max},
                            {"horizon", cfg.classify.horizon},
                            {"horizon_ext", cfg.classify.horizon_ext}};

    if (j.contains("cct")) {
        const json& cc = j.at("cct");
        cfg.cct.t_min = number_or(cc, "t_min", cfg.cct.t_min, "cct");
        cfg.cct.t_max = number_or(cc, "t_max", cfg.cct.t_max, "cct");
        cfg.cct.coarse = number_or(cc, "coarse", cfg.cct.coarse, "cct");
        cfg.cct.refine_tol = number_or(cc, "refine_tol", cfg.cct.refine_tol, "cct");
        cfg.cct.probe_grid = number_or(cc, "probe_grid", cfg.cct.probe_grid, "cct");
        cfg.cct_engineering = bool_or(cc, "engineering", true, "cct");
        cfg.disable_jump = bool_or(cc, "disable_jump", false, "cct");
    }
    echo["cct"] = json{{"t_min", cfg.cct.t_min},
                       {"t_max", cfg.cct.t_max},
                       {"coarse", cfg.cct.coarse},
                       {"refine_tol", cfg.cct.refine_tol},
                       {"probe_grid", cfg.cct.probe_grid},
                       {"engineering", cfg.cct_engineering},
                       {"disable_jump", cfg.disable_jump}};

    if (j.contains("boundary")) {
        const json& bd = j.at("boundary");
        if (bd.contains("method")) {
            cfg.boundary.method = string_field(bd, "method", "boundary");
            if (cfg.boundary.method != "trace" && cfg.boundary.method != "energy") {
                throw ConfigError("field 'boundary.method' must be \"trace\" or \"energy\"");
            }
        }
        cfg.boundary.trace.eps = number_or(bd, "eps", cfg.boundary.trace.eps, "boundary");
        cfg.boundary.trace.dt = number_or(bd, "dt", cfg.boundary.trace.dt, "boundary");
        cfg.boundary.trace.arc_limit =
            number_or(bd, "arc_limit", cfg.boundary.trace.arc_limit, "boundary");
        if (bd.contains("level_grid")) {
            cfg.boundary.level_grid = int_field(bd, "level_grid", "boundary");
        }
        cfg.boundary.omega_window =
            number_or(bd, "omega_window", cfg.boundary.omega_window, "boundary");
    }
    echo["boundary"] = json{{"method", cfg.boundary.method},
                            {"eps", cfg.boundary.trace.eps},
                            {"dt", cfg.boundary.trace.dt},
                            {"arc_limit", cfg.boundary.trace.arc_limit},
                            {"level_grid", cfg.boundary.level_grid},
                            {"omega_window", cfg.boundary.omega_window}};

    if (j.contains("sweep")) {
        const json& sw = j.at("sweep");
        SweepOptions opt;
        opt.axis = string_field(sw, "axis", "sweep");
        if (opt.axis != "theta_l_deg" && opt.axis != "zl_mag" && opt.axis != "d1") {
            throw ConfigError("field 'sweep.axis' must be \"theta_l_deg\", \"zl_mag\", or "
                              "\"d1\"");
        }
        const json& vals = require(sw, "values", "sweep");
        if (!vals.is_array() || vals.empty()) {
            throw ConfigError("field 'sweep.values' must be a non-empty array of numbers");
        }
        for (std::size_t i = 0; i < vals.size(); ++i) {
            opt.values.push_back(as_number(vals[i], "sweep.values[" + std::to_string(i) + "]"));
        }
        opt.zl_mag = number_or(sw, "zl_mag", 0.0, "sweep");
        opt.theta_l_deg = number_or(sw, "theta_l_deg", 35.0, "sweep");
        if (sw.contains("mc")) {
            const json& mc = sw.at("mc");
            McOptions m;
            m.nx = mc.contains("nx") ? int_field(mc, "nx", "sweep.mc") : m.nx;
            m.ny = mc.contains("ny") ? int_field(mc, "ny", "sweep.mc") : m.ny;
            if (mc.contains("seed")) {
                if (!mc.at("seed").is_number_unsigned() && !mc.at("seed").is_number_integer()) {
                    throw ConfigError("field 'sweep.mc.seed' must be an integer");
                }
                m.seed = mc.at("seed").get<std::uint64_t>();
            }
            m.mc.dt = number_or(mc, "dt", m.mc.dt, "sweep.mc");
            m.mc.horizon = number_or(mc, "horizon", m.mc.horizon, "sweep.mc");
            if (mc.contains("threads")) {
                m.mc.threads = int_field(mc, "threads", "sweep.mc");
            }
            opt.mc = m;
        }
        cfg.sweep = opt;

        json sw_echo{{"axis", opt.axis},
                     {"values", opt.values},
                     {"zl_mag", opt.zl_mag},
                     {"theta_l_deg", opt.theta_l_deg}};
        if (opt.mc) {
            sw_echo["mc"] = json{{"nx", opt.mc->nx},
                                 {"ny", opt.mc->ny},
                                 {"seed", opt.mc->seed},
                                 {"dt", opt.mc->mc.dt},
                                 {"horizon", opt.mc->mc.horizon},
                                 {"threads", opt.mc->mc.threads}};
        }
        echo["sweep"] = std::move(sw_echo);
    }

    cfg.canonical = std::move(echo);
    cfg.config_hash = fnv1a_hash(cfg.canonical.dump());
    return cfg;
}

// ----------------------------------------------------------------------------
// Builders
// ----------------------------------------------------------------------------

ReducedSystem build_reduced(const ScenarioConfig& cfg) {
    ReducedSystem sys;
    sys.g = cfg.g;
    const auto derive = [&cfg](TopologyMode mode) {
        const ReducedAdmittances red = reduce_three_bus(cfg.network, mode);
        switch (cfg.kind) {
        case SystemKind::Hybrid:
        case SystemKind::Smib:
            return hybrid_derived(cfg.sg1, cfg.droop2, red, cfg.g);
        case SystemKind::TwoGenerator:
            return two_generator_reduce(cfg.sg1, cfg.sg2, red, cfg.g);
        default:
            throw ConfigError("kind '" + to_string(cfg.kind) +
                              "' does not build a second-order reduced system");
        }
    };
    sys.pre = derive(TopologyMode::PreFault);
    sys.fault = derive(TopologyMode::Fault);
    sys.post = derive(TopologyMode::PostFault);
    sys.p2_star = cfg.kind == SystemKind::TwoGenerator ? 0.0 : cfg.droop2.p_star;
    sys.jump_enabled = !cfg.disable_jump;
    return sys;
}

FirstOrderSystem build_first_order(const ScenarioConfig& cfg) {
    if (cfg.kind != SystemKind::TwoInverter) {
        throw ConfigError("kind '" + to_string(cfg.kind) +
                          "' does not build a first-order system");
    }
    FirstOrderSystem sys;
    sys.g = cfg.g;
    const auto derive = [&cfg](TopologyMode mode) {
        return two_inverter_coefficients(cfg.droop1, cfg.droop2,
                                         reduce_three_bus(cfg.network, mode), cfg.g);
    };
    sys.pre = derive(TopologyMode::PreFault);
    sys.fault = derive(TopologyMode::Fault);
    sys.post = derive(TopologyMode::PostFault);
    sys.p1_star = cfg.droop1.p_star;
    sys.p2_star = cfg.droop2.p_star;
    return sys;
}

BusBranchNetwork load_bus_branch_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open network data file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("network data file '" + path + "' is not valid JSON: " + e.what());
    }

    BusBranchNetwork net;
    net.n_bus = int_field(j, "n_bus", "");
    const json& branches = require(j, "branches", "");
    if (!branches.is_array()) {
        throw ConfigError("field 'branches' must be an array");
    }
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string p = "branches[" + std::to_string(i) + "]";
        BranchData br;
        br.from = int_field(branches[i], "from", p) - 1;
        br.to = int_field(branches[i], "to", p) - 1;
        br.r = number_or(branches[i], "r", 0.0, p);
        br.x = number_field(branches[i], "x", p);
        br.b_charging = number_or(branches[i], "b", 0.0, p);
        net.branches.push_back(br);
    }
    if (j.contains("loads")) {
        const json& loads = j.at("loads");
        if (!loads.is_array()) {
            throw ConfigError("field 'loads' must be an array");
        }
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const std::string p = "loads[" + std::to_string(i) + "]";
            net.loads.emplace_back(int_field(loads[i], "bus", p) - 1,
                                   Complex(number_field(loads[i], "p", p),
                                           number_field(loads[i], "q", p)));
        }
    }
    const json& machines = require(j, "machines", "");
    if (!machines.is_array() || machines.empty()) {
        throw ConfigError("field 'machines' must be a non-empty array");
    }
    for (std::size_t i = 0; i < machines.size(); ++i) {
        const std::string p = "machines[" + std::to_string(i) + "]";
        MachineData m;
        m.bus = int_field(machines[i], "bus", p) - 1;
        m.h = number_field(machines[i], "h", p);
        m.xd_prime = number_field(machines[i], "xd_prime", p);
        net.machines.push_back(m);
    }
    const json& slack = require(j, "slack", "");
    net.slack_bus = int_field(slack, "bus", "slack") - 1;
    net.slack_v = number_field(slack, "v", "slack");
    if (j.contains("pv")) {
        const json& pv = j.at("pv");
        if (!pv.is_array()) {
            throw ConfigError("field 'pv' must be an array");
        }
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const std::string p = "pv[" + std::to_string(i) + "]";
            net.pv.emplace_back(int_field(pv[i], "bus", p) - 1, number_field(pv[i], "p", p),
                                number_field(pv[i], "v", p));
        }
    }
    net.validate();
    return net;
}

MmScenario build_multimachine(const ScenarioConfig& cfg) {
    if (cfg.kind != SystemKind::MultiMachine || !cfg.mm) {
        throw ConfigError("kind '" + to_string(cfg.kind) +
                          "' does not build a multi-machine scenario");
    }
    const MmOptions& opt = *cfg.mm;
    std::filesystem::path data_path(opt.network_file);
    if (data_path.is_relative() && !cfg.config_dir.empty()) {
        data_path = std::filesystem::path(cfg.config_dir) / data_path;
    }
    const BusBranchNetwork net = load_bus_branch_file(data_path.string());
    const ClassicalCase base = build_classical_case(net, cfg.g);
    const AdmittanceMatrix ybus = assemble_ybus(net);

    MmScenario sc;
    sc.classify = opt.classify;
    sc.include_gen_damping = opt.include_gen_damping;
    sc.y_fault = classical_reduction(net, ybus, base.pf.v, opt.fault_bus, opt.fault_impedance);
    sc.y_post = base.sys.y_internal; // bolted fault self-clears; no line trips

    if (opt.replace_with_droop.empty()) {
        sc.sys = base.sys;
        sc.initial = base.initial;
        return sc;
    }

    sc.sys = replace_with_droop(base.sys, opt.replace_with_droop);
    // Apply the identical source permutation to the other topologies by
    // running the replacement on temporary systems carrying those matrices.
    MultiMachineSystem tmp = base.sys;
    tmp.y_internal = sc.y_fault;
    sc.y_fault = replace_with_droop(tmp, opt.replace_with_droop).y_internal;
    tmp.y_internal = sc.y_post;
    sc.y_post = replace_with_droop(tmp, opt.replace_with_droop).y_internal;

    // Rebuild the initial state in the permuted order: kept generators first
    // (original order), then the replaced machines as inverters.
    std::vector<int> order;
    std::vector<bool> is_replaced(static_cast<std::size_t>(base.sys.m()), false);
    for (const auto& [idx, k] : opt.replace_with_droop) {
        (void)k;
        is_replaced[static_cast<std::size_t>(idx)] = true;
    }
    for (int i = 0; i < base.sys.m(); ++i) {
        if (!is_replaced[static_cast<std::size_t>(i)]) {
            order.push_back(i);
        }
    }
    for (const auto& [idx, k] : opt.replace_with_droop) {
        (void)k;
        order.push_back(idx);
    }
    const int ns = base.sys.m();
    sc.initial.delta.resize(ns);
    for (int a = 0; a < ns; ++a) {
        sc.initial.delta[a] = base.initial.delta[order[static_cast<std::size_t>(a)]];
    }
    sc.initial.gen_omega = Eigen::VectorXd::Constant(sc.sys.m(), cfg.g.omega_0);
    return sc;
}

} // namespace gfs
