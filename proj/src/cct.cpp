#include "gfs/cct.hpp"

#include <cmath>
#include <sstream>

#include "gfs/equilibria.hpp"
#include "gfs/errors.hpp"

namespace gfs {

bool outcome_is_stable(const Outcome& o, bool engineering) {
    if (engineering) {
        return o.kind == OutcomeKind::StableSamePeriod;
    }
    return o.kind != OutcomeKind::Diverged;
}

namespace {

double snap_to_grid(double t, double grid) {
    return grid > 0.0 ? std::round(t / grid) * grid : t;
}

Outcome run_probe(const std::function<Outcome(double)>& probe, double t) {
    try {
        return probe(t);
    } catch (const InconclusiveError& e) {
        std::ostringstream os;
        os << e.what() << " (CCT probe at t_clear = " << t << " s)";
        throw InconclusiveError(os.str());
    }
}

} // namespace

CctReport compute_cct(const std::function<Outcome(double)>& probe, const CctConfig& cfg,
                      bool engineering) {
    if (!(cfg.t_min >= 0.0 && cfg.t_max > cfg.t_min && cfg.coarse > 0.0 &&
          cfg.refine_tol > 0.0)) {
        throw ConfigError("CCT search needs 0 <= t_min < t_max, positive coarse step and "
                          "refine tolerance");
    }

    CctReport rep;
    rep.coarse_step = cfg.coarse;

    // Lower bracket end must be stable.
    const double t0 = snap_to_grid(cfg.t_min, cfg.probe_grid);
    const Outcome o0 = run_probe(probe, t0);
    rep.scan.emplace_back(t0, o0);
    if (!outcome_is_stable(o0, engineering)) {
        std::ostringstream os;
        os << "CCT bracket invalid: the lower end t_clear = " << t0
           << " s already classifies unstable";
        throw ConfigError(os.str());
    }

    // Coarse forward scan for the first unstable clearing time.
    double lo = t0;
    Outcome lo_outcome = o0;
    double hi = -1.0;
    Outcome hi_outcome;
    for (long i = 1;; ++i) {
        double t = cfg.t_min + static_cast<double>(i) * cfg.coarse;
        if (t > cfg.t_max + 1e-9) {
            break;
        }
        t = snap_to_grid(std::min(t, cfg.t_max), cfg.probe_grid);
        const Outcome o = run_probe(probe, t);
        rep.scan.emplace_back(t, o);
        if (outcome_is_stable(o, engineering)) {
            lo = t;
            lo_outcome = o;
        } else {
            hi = t;
            hi_outcome = o;
            break;
        }
    }
    if (hi < 0.0) {
        std::ostringstream os;
        os << "CCT bracket invalid: the upper end t_clear = " << cfg.t_max
           << " s still classifies stable";
        throw ConfigError(os.str());
    }

    // Bisection, snapped to the probe grid for bit-reproducible results.
    while (hi - lo > cfg.refine_tol) {
        const double mid = snap_to_grid(0.5 * (lo + hi), cfg.probe_grid);
        if (mid <= lo || mid >= hi) {
            rep.notes += "bracket limited by the probe grid; ";
            break;
        }
        const Outcome o = run_probe(probe, mid);
        if (outcome_is_stable(o, engineering)) {
            lo = mid;
            lo_outcome = o;
        } else {
            hi = mid;
            hi_outcome = o;
        }
    }

    rep.last_stable = lo;
    rep.first_unstable = hi;
    rep.cct_refined = lo;
    rep.at_last_stable = lo_outcome;
    rep.at_first_unstable = hi_outcome;

    // Surface any non-monotone coarse scan (stable after unstable cannot
    // appear by construction, but a re-ordered record would).
    bool seen_unstable = false;
    for (const auto& [t, o] : rep.scan) {
        if (!outcome_is_stable(o, engineering)) {
            seen_unstable = true;
        } else if (seen_unstable) {
            rep.notes += "non-monotone outcome sequence in coarse scan; ";
            break;
        }
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Second-order scenario
// ----------------------------------------------------------------------------

ReducedCctScenario::ReducedCctScenario(const ReducedSystem& sys, double dt,
                                       const ClassifyConfig& cc)
    : sys_(sys), dt_(dt), cc_(cc) {
    if (dt_ <= 0.0) {
        throw ConfigError("scenario integration step must be positive");
    }
    constexpr double kPi = 3.141592653589793;
    try {
        pre_sep_ = principal_sep(find_equilibria_second_order(sys_.pre, sys_.g, -kPi, kPi)).delta;
    } catch (const NumericError&) {
        throw ConfigError("pre-fault system has no stable equilibrium; CCT undefined");
    }
    try {
        post_sep_ =
            principal_sep(find_equilibria_second_order(sys_.post, sys_.g, -kPi, kPi)).delta;
    } catch (const NumericError&) {
        throw ConfigError("post-fault system has no stable equilibrium; CCT undefined");
    }
    SystemState s0{pre_sep_, 0.0};
    if (sys_.jump_enabled) {
        s0.omega_e = frequency_jump_relative(0.0, s0.delta, sys_.fault.k2, sys_.pre.powers,
                                             sys_.fault.powers);
    }
    cache_.push_back(s0);
}

void ReducedCctScenario::extend_cache(long n_steps) const {
    while (static_cast<long>(cache_.size()) <= n_steps) {
        cache_.push_back(rk4_step(sys_.fault, sys_.g, cache_.back(), dt_));
        if (!std::isfinite(cache_.back().delta) || !std::isfinite(cache_.back().omega_e)) {
            throw NumericError("fault-on trajectory became non-finite at t = " +
                               std::to_string(static_cast<double>(cache_.size() - 1) * dt_) +
                               " s");
        }
    }
}

SystemState ReducedCctScenario::fault_on_state(double t) const {
    if (t < 0.0) {
        throw ConfigError("fault-on time must be non-negative");
    }
    const long n = std::llround(t / dt_);
    extend_cache(n);
    return cache_[static_cast<std::size_t>(n)];
}

Trajectory ReducedCctScenario::fault_on_trajectory(double t_max, int record_stride) const {
    if (record_stride < 1) {
        throw ConfigError("record stride must be >= 1");
    }
    const long n = std::llround(t_max / dt_);
    extend_cache(n);
    Trajectory traj;
    for (long i = 0; i <= n; i += record_stride) {
        const auto& s = cache_[static_cast<std::size_t>(i)];
        TrajectorySample smp;
        smp.t = static_cast<double>(i) * dt_;
        smp.delta = s.delta;
        smp.omega_e = s.omega_e;
        smp.omega2 = sys_.omega2(TopologyMode::Fault, s.delta);
        smp.omega1 = s.omega_e + smp.omega2;
        smp.p1 = sys_.fault.powers.p1(s.delta);
        smp.p2 = sys_.fault.powers.p2(s.delta);
        smp.d_eq = sys_.fault.d_eq(s.delta);
        smp.event_flag = i == 0 ? 1 : 0;
        traj.samples.push_back(smp);
    }
    return traj;
}

Outcome ReducedCctScenario::clear_and_classify(double t_clear) const {
    SystemState s = fault_on_state(t_clear);
    if (sys_.jump_enabled) {
        s.omega_e = frequency_jump_relative(s.omega_e, s.delta, sys_.post.k2,
                                            sys_.fault.powers, sys_.post.powers);
    }
    return classify_from(sys_, s, post_sep_, dt_, cc_);
}

CctReport ReducedCctScenario::compute(const CctConfig& cfg, bool engineering) const {
    return compute_cct([this](double t) { return clear_and_classify(t); }, cfg, engineering);
}

// ----------------------------------------------------------------------------
// First-order scenario
// ----------------------------------------------------------------------------

FirstOrderCctScenario::FirstOrderCctScenario(const FirstOrderSystem& sys, double dt,
                                             const ClassifyConfig& cc)
    : sys_(sys), dt_(dt), cc_(cc) {
    if (dt_ <= 0.0) {
        throw ConfigError("scenario integration step must be positive");
    }
    constexpr double kPi = 3.141592653589793;
    const auto pick_sep = [](const std::vector<EquilibriumPoint>& eqs, const char* which) {
        const EquilibriumPoint* best = nullptr;
        for (const auto& e : eqs) {
            if (e.kind == EquilibriumKind::Sep &&
                (best == nullptr || std::abs(e.delta) < std::abs(best->delta))) {
                best = &e;
            }
        }
        if (best == nullptr) {
            throw ConfigError(std::string(which) +
                              " first-order system has no stable equilibrium; CCT undefined");
        }
        return best->delta;
    };
    pre_sep_ = pick_sep(find_equilibria_first_order(sys_.pre, -kPi, kPi), "pre-fault");
    post_sep_ = pick_sep(find_equilibria_first_order(sys_.post, -kPi, kPi), "post-fault");
    cache_.push_back(pre_sep_); // the angle is continuous at fault application
}

void FirstOrderCctScenario::extend_cache(long n_steps) const {
    while (static_cast<long>(cache_.size()) <= n_steps) {
        cache_.push_back(rk4_step(sys_.fault, cache_.back(), dt_));
        if (!std::isfinite(cache_.back())) {
            throw NumericError("fault-on trajectory became non-finite at t = " +
                               std::to_string(static_cast<double>(cache_.size() - 1) * dt_) +
                               " s");
        }
    }
}

double FirstOrderCctScenario::fault_on_delta(double t) const {
    if (t < 0.0) {
        throw ConfigError("fault-on time must be non-negative");
    }
    const long n = std::llround(t / dt_);
    extend_cache(n);
    return cache_[static_cast<std::size_t>(n)];
}

Trajectory FirstOrderCctScenario::fault_on_trajectory(double t_max, int record_stride) const {
    if (record_stride < 1) {
        throw ConfigError("record stride must be >= 1");
    }
    const long n = std::llround(t_max / dt_);
    extend_cache(n);
    Trajectory traj;
    for (long i = 0; i <= n; i += record_stride) {
        const double d = cache_[static_cast<std::size_t>(i)];
        TrajectorySample smp;
        smp.t = static_cast<double>(i) * dt_;
        smp.delta = d;
        smp.omega1 = sys_.omega1(TopologyMode::Fault, d);
        smp.omega2 = sys_.omega2(TopologyMode::Fault, d);
        smp.omega_e = smp.omega1 - smp.omega2;
        smp.p1 = sys_.fault.powers.p1(d);
        smp.p2 = sys_.fault.powers.p2(d);
        smp.event_flag = i == 0 ? 1 : 0;
        traj.samples.push_back(smp);
    }
    return traj;
}

Outcome FirstOrderCctScenario::clear_and_classify(double t_clear) const {
    return classify_from(sys_, fault_on_delta(t_clear), post_sep_, dt_, cc_);
}

CctReport FirstOrderCctScenario::compute(const CctConfig& cfg, bool engineering) const {
    return compute_cct([this](double t) { return clear_and_classify(t); }, cfg, engineering);
}

// ----------------------------------------------------------------------------
// Multi-machine scenario
// ----------------------------------------------------------------------------

MmCctScenario::MmCctScenario(const MultiMachineSystem& sys, AdmittanceMatrix y_fault,
                             AdmittanceMatrix y_post, MultiState initial,
                             const MmClassifyConfig& cc, bool include_gen_damping)
    : sys_(sys), fault_sys_(sys), post_sys_(sys), initial_(std::move(initial)), cc_(cc),
      damping_(include_gen_damping) {
    sys_.validate();
    fault_sys_.y_internal = std::move(y_fault);
    post_sys_.y_internal = std::move(y_post);
    fault_sys_.validate();
    post_sys_.validate();
    ref_offsets_ = coa_relative_offsets(sys_, initial_.delta);
    cache_.push_back(initial_);
}

void MmCctScenario::extend_cache(long n_steps) const {
    while (static_cast<long>(cache_.size()) <= n_steps) {
        cache_.push_back(advance_mm(fault_sys_, cache_.back(), cc_.dt, 1, damping_));
    }
}

MultiState MmCctScenario::fault_on_state(double t) const {
    if (t < 0.0) {
        throw ConfigError("fault-on time must be non-negative");
    }
    const long n = std::llround(t / cc_.dt);
    extend_cache(n);
    return cache_[static_cast<std::size_t>(n)];
}

Outcome MmCctScenario::clear_and_classify(double t_clear) const {
    const MmOutcome mm = classify_mm(post_sys_, fault_on_state(t_clear), ref_offsets_, cc_,
                                     damping_);
    Outcome o;
    o.kind = mm.stable ? OutcomeKind::StableSamePeriod : OutcomeKind::Diverged;
    o.settling_time = -1.0;
    return o;
}

CctReport MmCctScenario::compute(const CctConfig& cfg) const {
    CctConfig adjusted = cfg;
    adjusted.probe_grid = cc_.dt;
    return compute_cct([this](double t) { return clear_and_classify(t); }, adjusted, true);
}

} // namespace gfs
