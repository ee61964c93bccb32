#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfs/cct.hpp"
#include "gfs/dynamics.hpp"
#include "gfs/multimachine.hpp"
#include "gfs/network.hpp"
#include "gfs/region.hpp"

namespace gfs {

// ============================================================================
// Scenario configuration
//
// Analyses are driven by JSON scenario files.  Parsing is eager and
// validating: every missing or malformed field raises ConfigError naming the
// offending path, and the parsed result can be echoed back as canonical JSON
// whose FNV-1a hash stamps every output file.
// ============================================================================

enum class SystemKind { Hybrid, Smib, TwoGenerator, TwoInverter, MultiMachine };

[[nodiscard]] std::string to_string(SystemKind k);

/// Boundary-analysis options (cmd_boundary).
struct BoundaryOptions {
    std::string method = "trace"; ///< "trace" (backward integration) or "energy" (level set)
    TraceConfig trace{};
    int level_grid = 1000;
    double omega_window = 0.1;
};

/// Monte-Carlo sampling options for sweep area studies.
struct McOptions {
    int nx = 100;
    int ny = 100;
    std::uint64_t seed = 20260816;
    McConfig mc{};
};

/// Parameter sweep (cmd_sweep): one axis, many values.
struct SweepOptions {
    std::string axis; ///< "theta_l_deg" | "zl_mag" | "d1"
    std::vector<double> values;
    double zl_mag = 0.0;       ///< fixed |Z_L| for the theta sweep (0: keep config)
    double theta_l_deg = 35.0; ///< fixed angle for the magnitude sweep
    std::optional<McOptions> mc; ///< area study per value (d1 axis)
};

/// Multi-machine specifics.
struct MmOptions {
    std::string network_file; ///< bus/branch JSON, relative to the config file
    int fault_bus = 0;        ///< 0-based internal index
    double fault_impedance = 1e-5;
    std::vector<std::pair<int, double>> replace_with_droop; ///< (machine index, k)
    MmClassifyConfig classify{};
    bool include_gen_damping = false; ///< classical studies drop damping
};

struct ScenarioConfig {
    SystemKind kind = SystemKind::Hybrid;
    std::string description;
    GlobalConstants g{};
    double frequency_hz = 50.0;

    // Two-source building blocks (unused members stay default for kinds
    // that do not need them).
    ThreeBusNetwork network{};
    SgParams sg1{};
    SgParams sg2{};
    DroopParams droop1{};
    DroopParams droop2{};

    EventSchedule events{};
    IntegratorConfig solver{};
    ClassifyConfig classify{};
    CctConfig cct{};
    bool cct_engineering = true;
    bool disable_jump = false;

    BoundaryOptions boundary{};
    std::optional<SweepOptions> sweep;
    std::optional<MmOptions> mm;

    nlohmann::json canonical;  ///< canonical echo of everything parsed
    std::uint64_t config_hash = 0;
    std::string config_dir;    ///< directory of the source file (path resolution)
};

/// Parses and validates a scenario file; ConfigError names missing fields.
[[nodiscard]] ScenarioConfig load_scenario(const std::string& path);

/// Parses a scenario from an in-memory JSON document (config_dir resolves
/// relative data files; empty means the working directory).
[[nodiscard]] ScenarioConfig parse_scenario(const nlohmann::json& j,
                                            const std::string& config_dir);

/// FNV-1a 64-bit hash of a canonical JSON dump.
[[nodiscard]] std::uint64_t fnv1a_hash(const std::string& text);

// ============================================================================
// System builders
// ============================================================================

/// Second-order kinds (hybrid, smib, two_generator): derives the three
/// topology snapshots from the configured network.
[[nodiscard]] ReducedSystem build_reduced(const ScenarioConfig& cfg);

/// First-order kind (two_inverter).
[[nodiscard]] FirstOrderSystem build_first_order(const ScenarioConfig& cfg);

/// Multi-machine kind: loads the bus/branch file, runs the classical
/// workflow, applies droop replacements, and reduces all three topologies.
struct MmScenario {
    MultiMachineSystem sys;    ///< pre-fault (generators first, then inverters)
    AdmittanceMatrix y_fault;
    AdmittanceMatrix y_post;
    MultiState initial;
    MmClassifyConfig classify;
    bool include_gen_damping = false;
};

[[nodiscard]] MmScenario build_multimachine(const ScenarioConfig& cfg);

/// Bus/branch data file loader (1-based bus numbers in the file).
[[nodiscard]] BusBranchNetwork load_bus_branch_file(const std::string& path);

} // namespace gfs
