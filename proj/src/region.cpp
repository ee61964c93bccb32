#include "gfs/region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "gfs/errors.hpp"

namespace gfs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The phase plane mixes units (rad vs p.u.); distances for arc length and
// Uep-proximity tests use omega scaled by this factor so both axes carry
// comparable weight over the reference window.
constexpr double kOmegaScale = 20.0;

constexpr double kLeaveRadius = 0.05;  ///< scaled distance marking "left the Uep"
constexpr double kReturnRadius = 5e-4; ///< scaled distance marking "came back"

double scaled_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], kOmegaScale * (a[1] - b[1]));
}

WindowEdge violated_edge(const Window& w, double delta, double omega) {
    if (delta < w.delta_min) return WindowEdge::Left;
    if (delta > w.delta_max) return WindowEdge::Right;
    if (omega > w.omega_max) return WindowEdge::Top;
    if (omega < w.omega_min) return WindowEdge::Bottom;
    return WindowEdge::None;
}

BoundaryBranch trace_branch(const HybridDerived& hd, const GlobalConstants& g,
                            const std::array<double, 2>& uep_pt, SystemState seed,
                            const Window& win, const TraceConfig& tc) {
    BoundaryBranch br;
    br.points.push_back({seed.delta, seed.omega_e});

    SystemState s = seed;
    double arc = 0.0;
    bool left_uep = false;
    const long max_steps = 4'000'000; // hard stop; arc/window limits hit long before

    for (long i = 0; i < max_steps; ++i) {
        // One reverse-time RK4 step (integrate the negated field).
        const auto f = [&](const SystemState& x) {
            StateDerivative d = hybrid_rhs(x, hd, g);
            return StateDerivative{-d.ddelta, -d.domega_e};
        };
        const StateDerivative k1 = f(s);
        const StateDerivative k2 =
            f({s.delta + 0.5 * tc.dt * k1.ddelta, s.omega_e + 0.5 * tc.dt * k1.domega_e});
        const StateDerivative k3 =
            f({s.delta + 0.5 * tc.dt * k2.ddelta, s.omega_e + 0.5 * tc.dt * k2.domega_e});
        const StateDerivative k4 =
            f({s.delta + tc.dt * k3.ddelta, s.omega_e + tc.dt * k3.domega_e});
        SystemState next = s;
        next.delta +=
            tc.dt / 6.0 * (k1.ddelta + 2.0 * k2.ddelta + 2.0 * k3.ddelta + k4.ddelta);
        next.omega_e +=
            tc.dt / 6.0 * (k1.domega_e + 2.0 * k2.domega_e + 2.0 * k3.domega_e + k4.domega_e);
        if (!std::isfinite(next.delta) || !std::isfinite(next.omega_e)) {
            throw NumericError("boundary trace produced a non-finite state");
        }

        if (!win.contains(next.delta, next.omega_e)) {
            br.termination = BranchTermination::WindowExit;
            br.exit_edge = violated_edge(win, next.delta, next.omega_e);
            return br; // keep only in-window points
        }

        const std::array<double, 2> np{next.delta, next.omega_e};
        arc += scaled_dist(np, br.points.back());
        br.points.push_back(np);
        s = next;

        const double r = scaled_dist(np, uep_pt);
        if (!left_uep && r > kLeaveRadius) {
            left_uep = true;
        } else if (left_uep && r < kReturnRadius) {
            br.termination = BranchTermination::ReturnedToUep;
            return br;
        }
        if (arc > tc.arc_limit) {
            br.termination = BranchTermination::ArcLimit;
            return br;
        }
    }
    br.termination = BranchTermination::ArcLimit;
    return br;
}

} // namespace

Window reference_window(double sep_delta) {
    Window w;
    w.delta_min = sep_delta - kTwoPi;
    w.delta_max = sep_delta + kTwoPi;
    w.omega_min = -0.1;
    w.omega_max = 0.1;
    return w;
}

BoundaryPolyline trace_stability_boundary(const HybridDerived& hd, const EquilibriumPoint& uep,
                                          const GlobalConstants& g, const Window& window,
                                          const TraceConfig& tc) {
    if (uep.kind != EquilibriumKind::Uep) {
        throw ConfigError("boundary tracing requires a saddle (Uep) equilibrium");
    }
    const auto [l1, l2] = jacobian_eigenvalues(hd, g, uep.delta);
    if (l1.imag() != 0.0 || l2.imag() != 0.0 || l1.real() * l2.real() >= 0.0) {
        throw ConfigError("equilibrium is not a saddle with one stable eigendirection");
    }
    const double lambda_s = l1.real() < 0.0 ? l1.real() : l2.real();

    // Eigenvector of [[0, wN], [J21, J22]] for eigenvalue lambda: the first
    // row gives v = (wN, lambda) up to scale.  Orient it toward omega_e > 0
    // so branch_plus is always the upper branch.
    double v_d = g.omega_n;
    double v_w = lambda_s;
    const double norm = std::hypot(v_d, v_w);
    v_d /= norm;
    v_w /= norm;
    if (v_w < 0.0) {
        v_d = -v_d;
        v_w = -v_w;
    }

    const std::array<double, 2> uep_pt{uep.delta, 0.0};
    BoundaryPolyline out;
    out.uep = uep;
    out.window = window;
    out.branch_plus = trace_branch(
        hd, g, uep_pt, {uep.delta + tc.eps * v_d, tc.eps * v_w}, window, tc);
    out.branch_minus = trace_branch(
        hd, g, uep_pt, {uep.delta - tc.eps * v_d, -tc.eps * v_w}, window, tc);
    return out;
}

// ----------------------------------------------------------------------------
// Energy function and its level set
// ----------------------------------------------------------------------------

EnergyFunction::EnergyFunction(const HybridDerived& hd, const GlobalConstants& g,
                               double sep_delta)
    : t_jeq_(hd.t_jeq), omega_n_(g.omega_n), p_m_(hd.p_m), pe_cos_minus_(hd.pe_cos_minus),
      pe_cos_plus_(hd.pe_cos_plus), gamma_(hd.gamma), sep_delta_(sep_delta), u_sep_(0.0) {
    u_sep_ = potential(sep_delta); // potential() subtracts u_sep_, still 0 here
}

double EnergyFunction::potential(double delta) const {
    // Antiderivative of P_E - P_M: the two-harmonic electrical power
    // integrates in closed form.
    const double u = -p_m_ * delta + pe_cos_minus_ * std::sin(delta - gamma_) +
                     pe_cos_plus_ * std::sin(delta + gamma_);
    return u - u_sep_;
}

BoundaryPolyline energy_level_boundary(const HybridDerived& hd, const GlobalConstants& g,
                                       const EquilibriumPoint& uep, double sep_delta,
                                       const Window& window, int n_grid) {
    if (hd.d_const != 0.0 || hd.d_sin != 0.0) {
        throw ConfigError("energy level set is a stability boundary only for undamped "
                          "models (D_eq == 0)");
    }
    if (n_grid < 16) {
        throw ConfigError("level-set grid too coarse");
    }

    const EnergyFunction ef(hd, g, sep_delta);
    const double v_uep = ef.value(uep.delta, 0.0);
    const double d_step = (window.delta_max - window.delta_min) / (n_grid - 1);
    const double w_step = (window.omega_max - window.omega_min) / (n_grid - 1);

    BoundaryBranch plus;
    plus.points.push_back({uep.delta, 0.0});

    // Walk columns leftward from the Uep.  In each column the level value is
    // crossed at most once for omega_e >= 0 (V is quadratic in omega_e), so
    // scanning the vertical mesh edges and interpolating linearly is a
    // column-restricted marching of the contour.
    const auto col_of = [&](double delta) {
        return static_cast<int>(std::floor((delta - window.delta_min) / d_step));
    };
    double prev_delta = uep.delta;
    bool capped = false;
    for (int i = std::min(col_of(uep.delta), n_grid - 1); i >= 0; --i) {
        const double delta = window.delta_min + i * d_step;
        if (delta >= uep.delta) {
            continue;
        }
        if (ef.potential(delta) > v_uep) {
            // Left cap: the loop closed between this column and the previous
            // one.  Interpolate the omega_e = 0 crossing between them.
            const double f0 = ef.potential(prev_delta) - v_uep;
            const double f1 = ef.potential(delta) - v_uep;
            const double frac = f0 / (f0 - f1);
            plus.points.push_back({prev_delta + frac * (delta - prev_delta), 0.0});
            plus.termination = BranchTermination::ReturnedToUep; // closed curve
            capped = true;
            break;
        }
        // Scan this column's vertical edges for the sign change.
        double found = -1.0;
        for (int j = 0; j + 1 < n_grid; ++j) {
            const double w0 = window.omega_min + j * w_step;
            const double w1 = w0 + w_step;
            if (w1 < 0.0) {
                continue;
            }
            const double f0 = ef.value(delta, std::max(w0, 0.0)) - v_uep;
            const double f1 = ef.value(delta, w1) - v_uep;
            if (f0 <= 0.0 && f1 > 0.0) {
                const double wa = std::max(w0, 0.0);
                found = wa + f0 / (f0 - f1) * (w1 - wa);
                break;
            }
        }
        if (found < 0.0) {
            plus.termination = BranchTermination::WindowExit; // crest above window top
            plus.exit_edge = WindowEdge::Top;
            break;
        }
        plus.points.push_back({delta, found});
        prev_delta = delta;
    }
    if (!capped && plus.termination == BranchTermination::WindowExit &&
        plus.exit_edge == WindowEdge::None) {
        plus.exit_edge = WindowEdge::Left;
    }

    // V is even in omega_e: the lower branch is the exact mirror.
    BoundaryBranch minus = plus;
    for (auto& p : minus.points) {
        p[1] = -p[1];
    }

    BoundaryPolyline out;
    out.branch_plus = std::move(plus);
    out.branch_minus = std::move(minus);
    out.uep = uep;
    out.window = window;
    return out;
}

Outcome is_stable_point(const HybridDerived& hd, const GlobalConstants& g, SystemState state,
                        double sep_delta, double dt, const ClassifyConfig& cc) {
    ReducedSystem sys;
    sys.pre = sys.fault = sys.post = hd;
    sys.g = g;
    return classify_from(sys, state, sep_delta, dt, cc);
}

// ----------------------------------------------------------------------------
// Geometry helpers
// ----------------------------------------------------------------------------

namespace {

double point_segment_dist(const std::array<double, 2>& p, const std::array<double, 2>& a,
                          const std::array<double, 2>& b) {
    const double abx = b[0] - a[0];
    const double aby = b[1] - a[1];
    const double len2 = abx * abx + aby * aby;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2, 0.0, 1.0);
    }
    return std::hypot(p[0] - (a[0] + t * abx), p[1] - (a[1] + t * aby));
}

std::vector<std::array<double, 2>> decimate(const std::vector<std::array<double, 2>>& pts,
                                            std::size_t limit) {
    if (pts.size() <= limit) {
        return pts;
    }
    std::vector<std::array<double, 2>> out;
    const std::size_t stride = (pts.size() + limit - 1) / limit;
    for (std::size_t i = 0; i < pts.size(); i += stride) {
        out.push_back(pts[i]);
    }
    if (out.back() != pts.back()) {
        out.push_back(pts.back());
    }
    return out;
}

double directed_hausdorff(const std::vector<std::array<double, 2>>& a,
                          const std::vector<std::array<double, 2>>& b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < b.size(); ++i) {
            best = std::min(best, point_segment_dist(p, b[i], b[i + 1]));
            if (best == 0.0) {
                break;
            }
        }
        if (b.size() == 1) {
            best = std::hypot(p[0] - b[0][0], p[1] - b[0][1]);
        }
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

double hausdorff_distance(const std::vector<std::array<double, 2>>& a,
                          const std::vector<std::array<double, 2>>& b) {
    if (a.empty() || b.empty()) {
        throw ConfigError("hausdorff_distance needs non-empty point lists");
    }
    const auto da = decimate(a, 20'000);
    const auto db = decimate(b, 20'000);
    return std::max(directed_hausdorff(da, db), directed_hausdorff(db, da));
}

std::vector<std::array<double, 2>> boundary_points(const BoundaryPolyline& b) {
    std::vector<std::array<double, 2>> pts(b.branch_minus.points.rbegin(),
                                           b.branch_minus.points.rend());
    pts.insert(pts.end(), b.branch_plus.points.begin(), b.branch_plus.points.end());
    return pts;
}

bool upper_left_open(const BoundaryPolyline& b, double sep_delta) {
    (void)sep_delta;
    const auto& br = b.branch_plus;
    if (br.termination != BranchTermination::WindowExit) {
        return false; // returned to the Uep (closed) or spiraled inward
    }
    if (br.exit_edge == WindowEdge::Left) {
        return true;
    }
    return br.exit_edge == WindowEdge::Top && !br.points.empty() &&
           br.points.back()[0] <= b.uep.delta;
}

bool lower_right_open(const BoundaryPolyline& b, double sep_delta) {
    const auto& br = b.branch_minus;
    if (br.termination != BranchTermination::WindowExit) {
        return false;
    }
    if (br.exit_edge == WindowEdge::Right) {
        return true;
    }
    return br.exit_edge == WindowEdge::Bottom && !br.points.empty() &&
           br.points.back()[0] >= sep_delta;
}

// ----------------------------------------------------------------------------
// Monte-Carlo membership
// ----------------------------------------------------------------------------

std::vector<std::array<double, 2>> stratified_unit_samples(int nx, int ny, std::uint64_t seed) {
    if (nx < 1 || ny < 1) {
        throw ConfigError("stratified sampling needs nx, ny >= 1");
    }
    std::mt19937_64 rng(seed);
    // Explicit 53-bit mapping keeps the stream identical across standard
    // library implementations.
    const auto u01 = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    std::vector<std::array<double, 2>> out;
    out.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            out.push_back({(ix + u01()) / nx, (iy + u01()) / ny});
        }
    }
    return out;
}

namespace {

/// Per-sample membership test, undamped band rule or damped classifier.
class MembershipOracle {
public:
    MembershipOracle(const HybridDerived& hd, const GlobalConstants& g, double sep_delta,
                     const McConfig& mc)
        : hd_(hd), g_(g), sep_(sep_delta), mc_(mc),
          undamped_(hd.d_const == 0.0 && hd.d_sin == 0.0) {
        if (undamped_) {
            const auto eqs =
                find_equilibria_second_order(hd, g, sep_delta - kTwoPi, sep_delta + kTwoPi);
            const double uep = uep_right_of(eqs, sep_delta).delta;
            band_lo_ = uep - kTwoPi;
            band_hi_ = uep;
        }
    }

    /// true: stable; false: not; increments `inconclusive` when the damped
    /// classifier ran out of horizon (counted unstable).
    bool operator()(const SystemState& s, int& inconclusive) const {
        if (undamped_) {
            return stays_in_band(hd_, g_, s, band_lo_, band_hi_, mc_.horizon, mc_.dt);
        }
        try {
            return is_stable_point(hd_, g_, s, sep_, mc_.dt).kind ==
                   OutcomeKind::StableSamePeriod;
        } catch (const InconclusiveError&) {
            ++inconclusive;
            return false;
        }
    }

private:
    const HybridDerived& hd_;
    const GlobalConstants& g_;
    double sep_;
    McConfig mc_;
    bool undamped_;
    double band_lo_ = 0.0;
    double band_hi_ = 0.0;
};

template <typename Fn>
void parallel_over(std::size_t n, int threads, Fn&& body) {
    unsigned t = threads > 0 ? static_cast<unsigned>(threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    t = std::min<unsigned>(t, 64);
    if (t <= 1 || n < 2) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + t - 1) / t;
    for (unsigned i = 0; i < t; ++i) {
        const std::size_t lo = i * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([&body, lo, hi, i] { body(lo, hi, i); });
    }
    for (auto& th : pool) {
        th.join();
    }
}

} // namespace

McResult mc_stable_fraction(const HybridDerived& hd, const GlobalConstants& g, double sep_delta,
                            const Window& window,
                            const std::vector<std::array<double, 2>>& unit_samples,
                            const McConfig& mc) {
    const MembershipOracle oracle(hd, g, sep_delta, mc);
    const std::size_t n = unit_samples.size();
    std::vector<int> stable_ct(64, 0), inc_ct(64, 0);

    parallel_over(n, mc.threads, [&](std::size_t lo, std::size_t hi, unsigned tid) {
        int stable = 0, inconclusive = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            SystemState s;
            s.delta = window.delta_min + unit_samples[i][0] * (window.delta_max - window.delta_min);
            s.omega_e =
                window.omega_min + unit_samples[i][1] * (window.omega_max - window.omega_min);
            if (oracle(s, inconclusive)) {
                ++stable;
            }
        }
        stable_ct[tid] = stable;
        inc_ct[tid] = inconclusive;
    });

    McResult res;
    res.n_total = static_cast<int>(n);
    for (int v : stable_ct) res.n_stable += v;
    for (int v : inc_ct) res.n_inconclusive += v;
    return res;
}

NonContainmentWitness
find_noncontainment_witness(const HybridDerived& a, double sep_a, const HybridDerived& b,
                            double sep_b, const GlobalConstants& g, const Window& window,
                            const std::vector<std::array<double, 2>>& unit_samples,
                            const McConfig& mc) {
    const MembershipOracle oracle_a(a, g, sep_a, mc);
    const MembershipOracle oracle_b(b, g, sep_b, mc);
    NonContainmentWitness w;
    int scratch = 0;
    for (const auto& u : unit_samples) {
        if (w.only_in_a && w.only_in_b) {
            break;
        }
        SystemState s;
        s.delta = window.delta_min + u[0] * (window.delta_max - window.delta_min);
        s.omega_e = window.omega_min + u[1] * (window.omega_max - window.omega_min);
        const bool in_a = oracle_a(s, scratch);
        const bool in_b = oracle_b(s, scratch);
        if (in_a && !in_b && !w.only_in_a) {
            w.only_in_a = {{s.delta, s.omega_e}};
        } else if (in_b && !in_a && !w.only_in_b) {
            w.only_in_b = {{s.delta, s.omega_e}};
        }
    }
    return w;
}

// ----------------------------------------------------------------------------
// Boundary validation
// ----------------------------------------------------------------------------

BoundaryValidation validate_boundary(const HybridDerived& hd, const GlobalConstants& g,
                                     const BoundaryPolyline& boundary, double sep_delta,
                                     double offset, int stride, double dt,
                                     const ClassifyConfig& cc) {
    if (offset <= 0.0 || stride < 1) {
        throw ConfigError("boundary validation needs positive offset and stride");
    }
    constexpr int kSpan = 80; // central-difference half-width, in recorded points
    BoundaryValidation val;

    const auto classify_point = [&](const SystemState& s) {
        try {
            return is_stable_point(hd, g, s, sep_delta, dt, cc).kind ==
                   OutcomeKind::StableSamePeriod;
        } catch (const InconclusiveError&) {
            return false;
        }
    };

    for (const BoundaryBranch* br : {&boundary.branch_plus, &boundary.branch_minus}) {
        const auto& pts = br->points;
        if (pts.size() < 2 * kSpan + 1) {
            continue;
        }
        for (std::size_t i = kSpan; i + kSpan < pts.size(); i += static_cast<std::size_t>(stride)) {
            const double tx = pts[i + kSpan][0] - pts[i - kSpan][0];
            const double ty = pts[i + kSpan][1] - pts[i - kSpan][1];
            const double tn = std::hypot(tx, ty);
            if (tn == 0.0) {
                continue;
            }
            // Unit normal, oriented toward the Sep.
            double nx = -ty / tn;
            double ny = tx / tn;
            const double toward_sep =
                nx * (sep_delta - pts[i][0]) + ny * (0.0 - pts[i][1]);
            if (toward_sep < 0.0) {
                nx = -nx;
                ny = -ny;
            }

            const SystemState inside{pts[i][0] + offset * nx, pts[i][1] + offset * ny};
            const SystemState outside{pts[i][0] - offset * nx, pts[i][1] - offset * ny};
            if (boundary.window.contains(inside.delta, inside.omega_e)) {
                ++val.n_inside;
                if (classify_point(inside)) {
                    ++val.n_inside_stable;
                }
            }
            if (boundary.window.contains(outside.delta, outside.omega_e)) {
                ++val.n_outside;
                if (!classify_point(outside)) {
                    ++val.n_outside_unstable;
                }
            }
        }
    }
    return val;
}

} // namespace gfs
