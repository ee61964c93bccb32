#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gfs/dynamics.hpp"
#include "gfs/multimachine.hpp"

namespace gfs {

// ============================================================================
// Critical clearing time
//
// All searches share one recipe: simulate the fault-on flow from the
// pre-fault equilibrium, clear at a candidate time, classify the post-fault
// motion, and locate the stable/unstable transition by a coarse forward scan
// followed by bisection.  Fault-on states are cached on the integration grid
// so every probe reuses the same prefix bit for bit.
// ============================================================================

struct CctConfig {
    double t_min = 0.0;       ///< scan start (s); must classify stable
    double t_max = 1.5;       ///< scan end (s); an unstable probe must appear by here
    double coarse = 0.01;     ///< forward-scan step (s)
    double refine_tol = 1e-3; ///< bisection bracket width target (s)
    double probe_grid = 1e-4; ///< probe times snap to this grid (0 disables)
};

struct CctReport {
    double last_stable = 0.0;
    double first_unstable = 0.0;
    double cct_refined = 0.0; ///< the refined last-stable clearing time
    double coarse_step = 0.0;
    Outcome at_last_stable;
    Outcome at_first_unstable;
    std::vector<std::pair<double, Outcome>> scan; ///< full coarse-scan record
    std::string notes;
};

/// Stability predicate: engineering counts only StableSamePeriod; the
/// mathematical reading also accepts adjacent-period convergence.
[[nodiscard]] bool outcome_is_stable(const Outcome& o, bool engineering = true);

/// Generic search over a clearing-time -> outcome oracle.  Throws ConfigError
/// when an end of the bracket fails its precondition (the message names the
/// failing end); InconclusiveError from probes propagates.
[[nodiscard]] CctReport compute_cct(const std::function<Outcome(double)>& probe,
                                    const CctConfig& cfg, bool engineering = true);

// ============================================================================
// Probe scenarios
// ============================================================================

/// Second-order reduced scenario (hybrid, SMIB, two-generator).
class ReducedCctScenario {
public:
    /// Resolves the pre- and post-fault principal SEPs; throws ConfigError
    /// when either does not exist.
    explicit ReducedCctScenario(const ReducedSystem& sys, double dt = 1e-4,
                                const ClassifyConfig& cc = {});

    /// Fault-on state at time t (applies the fault-application frequency
    /// jump at t = 0; t snaps to the integration grid).
    [[nodiscard]] SystemState fault_on_state(double t) const;

    /// Fault-on path from the pre-fault SEP up to t_max; t_max = 0 yields the
    /// single (jumped) initial sample.
    [[nodiscard]] Trajectory fault_on_trajectory(double t_max, int record_stride = 1) const;

    /// Clears at t_clear (frequency jump onto the post-fault network) and
    /// classifies against the post-fault SEP.
    [[nodiscard]] Outcome clear_and_classify(double t_clear) const;

    [[nodiscard]] CctReport compute(const CctConfig& cfg, bool engineering = true) const;

    [[nodiscard]] double pre_sep() const { return pre_sep_; }
    [[nodiscard]] double post_sep() const { return post_sep_; }

private:
    ReducedSystem sys_;
    double dt_;
    ClassifyConfig cc_;
    double pre_sep_;
    double post_sep_;
    mutable std::vector<SystemState> cache_; ///< fault-on states at i * dt

    void extend_cache(long n_steps) const;
};

/// First-order droop-droop scenario.
class FirstOrderCctScenario {
public:
    explicit FirstOrderCctScenario(const FirstOrderSystem& sys, double dt = 1e-4,
                                   const ClassifyConfig& cc = {});

    /// Fault-on angle at time t (continuous at application; no state jump).
    [[nodiscard]] double fault_on_delta(double t) const;
    [[nodiscard]] Trajectory fault_on_trajectory(double t_max, int record_stride = 1) const;
    [[nodiscard]] Outcome clear_and_classify(double t_clear) const;
    [[nodiscard]] CctReport compute(const CctConfig& cfg, bool engineering = true) const;

    [[nodiscard]] double pre_sep() const { return pre_sep_; }
    [[nodiscard]] double post_sep() const { return post_sep_; }

private:
    FirstOrderSystem sys_;
    double dt_;
    ClassifyConfig cc_;
    double pre_sep_;
    double post_sep_;
    mutable std::vector<double> cache_;

    void extend_cache(long n_steps) const;
};

/// Multi-machine scenario classified by COA-relative angle deviation.
class MmCctScenario {
public:
    MmCctScenario(const MultiMachineSystem& sys, AdmittanceMatrix y_fault,
                  AdmittanceMatrix y_post, MultiState initial,
                  const MmClassifyConfig& cc = {}, bool include_gen_damping = true);

    [[nodiscard]] MultiState fault_on_state(double t) const;
    /// Maps the deviation screen onto Outcome: stable -> StableSamePeriod,
    /// unstable -> Diverged (the COA rule does not count pole slips).
    [[nodiscard]] Outcome clear_and_classify(double t_clear) const;
    [[nodiscard]] CctReport compute(const CctConfig& cfg) const;

private:
    MultiMachineSystem sys_;
    MultiMachineSystem fault_sys_;
    MultiMachineSystem post_sys_;
    MultiState initial_;
    MmClassifyConfig cc_;
    bool damping_;
    Eigen::VectorXd ref_offsets_;
    mutable std::vector<MultiState> cache_;

    void extend_cache(long n_steps) const;
};

} // namespace gfs
