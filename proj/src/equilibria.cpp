#include "gfs/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gfs/errors.hpp"

namespace gfs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kGridPerPeriod = 2000;
constexpr double kResidualTol = 1e-12;
constexpr double kDegenerateTol = 1e-9;

void check_window(double lo, double hi) {
    if (!(hi > lo)) {
        throw ConfigError("equilibrium window must have hi > lo");
    }
    if (hi - lo > 2.0 * kTwoPi + 1e-9) {
        throw ConfigError("equilibrium window wider than 4*pi is not supported");
    }
}

int period_of(double delta) {
    return static_cast<int>(std::floor((delta + std::numbers::pi) / kTwoPi));
}

/// Bisection on a bracketing interval, refined until the residual is below
/// kResidualTol relative to `scale` or the interval collapses.
template <typename F>
double bisect(F&& f, double lo, double hi, double scale) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) < kResidualTol * scale || hi - lo < 1e-15) {
            return mid;
        }
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Grid scan over [lo, hi) at kGridPerPeriod points per period, bisecting
/// every sign change of `f`.
template <typename F>
std::vector<double> scan_roots(F&& f, double lo, double hi, double scale) {
    std::vector<double> roots;
    const auto n = static_cast<int>(std::ceil((hi - lo) / kTwoPi * kGridPerPeriod));
    if (n < 2) {
        return roots;
    }
    const double h = (hi - lo) / n;
    double x0 = lo;
    double f0 = f(x0);
    for (int i = 1; i <= n; ++i) {
        const double x1 = lo + i * h;
        const double f1 = f(x1);
        if (f0 == 0.0) {
            roots.push_back(x0);
        } else if ((f0 < 0.0) != (f1 < 0.0)) {
            roots.push_back(bisect(f, x0, x1, scale));
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

} // namespace

std::pair<std::complex<double>, std::complex<double>>
jacobian_eigenvalues(const HybridDerived& hd, const GlobalConstants& g, double delta) {
    // J = [[0, wN], [-P_E'(delta)/T_J, -D_eq(delta)/T_J]]
    const double a = -hd.pe_slope(delta) * g.omega_n / hd.t_jeq; // wN * J21
    const double b = -hd.d_eq(delta) / hd.t_jeq;                 // trace
    const double disc = b * b + 4.0 * a;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {std::complex<double>{(b + s) / 2.0, 0.0},
                std::complex<double>{(b - s) / 2.0, 0.0}};
    }
    const double s = std::sqrt(-disc);
    return {std::complex<double>{b / 2.0, s / 2.0}, std::complex<double>{b / 2.0, -s / 2.0}};
}

std::vector<EquilibriumPoint> find_equilibria_second_order(const HybridDerived& hd,
                                                           const GlobalConstants& g, double lo,
                                                           double hi) {
    check_window(lo, hi);
    const double scale = std::max({std::abs(hd.p_m), std::abs(hd.pe_cos_minus),
                                   std::abs(hd.pe_cos_plus), 1.0});
    const auto residual = [&](double d) { return hd.p_acc(d); };
    std::vector<EquilibriumPoint> out;
    for (double root : scan_roots(residual, lo, hi, scale)) {
        EquilibriumPoint ep;
        ep.delta = root;
        ep.period_index = period_of(root);
        const auto [l1, l2] = jacobian_eigenvalues(hd, g, root);
        ep.eigenvalues = {l1, l2};
        if (std::abs(residual(root)) < kDegenerateTol * scale &&
            std::abs(hd.pe_slope(root)) < kDegenerateTol * scale) {
            ep.kind = EquilibriumKind::Degenerate;
        } else if (l1.real() <= 0.0 && l2.real() <= 0.0) {
            // "<= 0" keeps the undamped center on the stable side; see header.
            ep.kind = EquilibriumKind::Sep;
        } else {
            ep.kind = EquilibriumKind::Uep;
        }
        out.push_back(ep);
    }
    return out;
}

std::vector<EquilibriumPoint> find_equilibria_first_order(const TwoInverterCoefficients& tc,
                                                          double lo, double hi) {
    check_window(lo, hi);
    std::vector<EquilibriumPoint> out;
    const double r = std::hypot(tc.b, tc.c);
    const double scale = std::max({std::abs(tc.a), r, 1.0});
    if (r < kDegenerateTol * scale) {
        // Constant right-hand side: either no root at all or the whole line
        // is stationary; neither yields isolated equilibria to report.
        return out;
    }
    const double ratio = -tc.a / r;
    if (std::abs(ratio) > 1.0) {
        return out; // A^2 > B^2 + C^2: no equilibrium
    }

    const double phi = std::atan2(tc.c, tc.b);
    const double acos_term = std::acos(std::clamp(ratio, -1.0, 1.0));
    const auto slope = [&](double d) { return -tc.b * std::sin(d) + tc.c * std::cos(d); };

    // Both closed-form branches, replicated into every period meeting [lo, hi).
    std::vector<double> roots;
    for (double base : {phi + acos_term, phi - acos_term}) {
        for (double k = std::floor((lo - base) / kTwoPi); base + k * kTwoPi < hi; k += 1.0) {
            const double d = base + k * kTwoPi;
            if (d >= lo && d < hi) {
                roots.push_back(d);
            }
        }
    }
    std::sort(roots.begin(), roots.end());

    for (double d : roots) {
        EquilibriumPoint ep;
        ep.delta = d;
        ep.period_index = period_of(d);
        const double sl = slope(d);
        ep.eigenvalues = {std::complex<double>{sl, 0.0}};
        if (std::abs(sl) < kDegenerateTol * scale) {
            ep.kind = EquilibriumKind::Degenerate; // tangency: the branches met
        } else {
            ep.kind = sl < 0.0 ? EquilibriumKind::Sep : EquilibriumKind::Uep;
        }
        out.push_back(ep);
    }
    // A tangency produces the same root from both branches; keep one.
    out.erase(std::unique(out.begin(), out.end(),
                          [](const auto& a, const auto& b) {
                              return std::abs(a.delta - b.delta) < 1e-12;
                          }),
              out.end());
    return out;
}

ExistenceCondition existence_condition(const TwoInverterCoefficients& tc) {
    ExistenceCondition ec;
    ec.margin = tc.a * tc.a - tc.b * tc.b - tc.c * tc.c;
    ec.holds = ec.margin <= 0.0;
    return ec;
}

const EquilibriumPoint& principal_sep(const std::vector<EquilibriumPoint>& eqs) {
    const EquilibriumPoint* best = nullptr;
    for (const auto& ep : eqs) {
        if (ep.kind != EquilibriumKind::Sep) {
            continue;
        }
        if (best == nullptr || std::abs(ep.delta) < std::abs(best->delta)) {
            best = &ep;
        }
    }
    if (best == nullptr) {
        throw NumericError("no stable equilibrium in the searched window");
    }
    return *best;
}

const EquilibriumPoint& uep_right_of(const std::vector<EquilibriumPoint>& eqs, double delta) {
    const EquilibriumPoint* best = nullptr;
    for (const auto& ep : eqs) {
        if (ep.kind != EquilibriumKind::Uep || ep.delta <= delta) {
            continue;
        }
        if (best == nullptr || ep.delta < best->delta) {
            best = &ep;
        }
    }
    if (best == nullptr) {
        throw NumericError("no unstable equilibrium to the right of the given angle");
    }
    return *best;
}

} // namespace gfs
