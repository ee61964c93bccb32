#include "gfs/multimachine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gfs/errors.hpp"

namespace gfs {

// ----------------------------------------------------------------------------
// System basics
// ----------------------------------------------------------------------------

void MultiMachineSystem::validate() const {
    const int ns = n_sources();
    if (ns < 1) {
        throw ConfigError("multi-machine system needs at least one source");
    }
    if (y_internal.rows() != ns || y_internal.cols() != ns) {
        throw ConfigError("internal admittance matrix dimension does not match the "
                          "source count");
    }
    for (int i = 0; i < ns; ++i) {
        for (int l = i + 1; l < ns; ++l) {
            if (std::abs(y_internal(i, l) - y_internal(l, i)) > 1e-12) {
                throw ConfigError("internal admittance matrix is not reciprocal");
            }
        }
    }
    for (const auto& sg : generators) {
        if (sg.tj <= 0.0 || sg.e <= 0.0) {
            throw ConfigError("generator needs positive inertia and EMF");
        }
    }
    for (const auto& inv : inverters) {
        if (inv.k <= 0.0 || inv.e <= 0.0) {
            throw ConfigError("inverter needs positive droop gain and EMF");
        }
    }
}

Eigen::VectorXd electrical_powers(const MultiMachineSystem& sys, const Eigen::VectorXd& delta) {
    const int ns = sys.n_sources();
    Eigen::VectorXd p(ns);
    for (int i = 0; i < ns; ++i) {
        const double ei = sys.emf(i);
        double acc = 0.0;
        for (int l = 0; l < ns; ++l) {
            const Complex y = sys.y_internal(i, l);
            const double ang = delta[i] - delta[l];
            acc += ei * sys.emf(l) * (y.real() * std::cos(ang) + y.imag() * std::sin(ang));
        }
        p[i] = acc;
    }
    return p;
}

MultiDerivative mm_rhs(const MultiMachineSystem& sys, const MultiState& s,
                       bool include_gen_damping) {
    const int m = sys.m();
    const int n = sys.n();
    const Eigen::VectorXd p = electrical_powers(sys, s.delta);
    MultiDerivative d;
    d.ddelta.resize(m + n);
    d.dgen_omega.resize(m);
    for (int i = 0; i < m; ++i) {
        const auto& sg = sys.generators[static_cast<std::size_t>(i)];
        const double omega_rel = s.gen_omega[i] - sys.g.omega_0;
        d.ddelta[i] = sys.g.omega_n * omega_rel;
        double acc = sg.p_star - p[i];
        if (include_gen_damping) {
            acc -= sg.d * omega_rel;
        }
        d.dgen_omega[i] = acc / sg.tj;
    }
    for (int j = 0; j < n; ++j) {
        const auto& inv = sys.inverters[static_cast<std::size_t>(j)];
        d.ddelta[m + j] = sys.g.omega_n * inv.k * (inv.p_star - p[m + j]);
    }
    return d;
}

Eigen::VectorXd inverter_omegas(const MultiMachineSystem& sys, const Eigen::VectorXd& delta) {
    const Eigen::VectorXd p = electrical_powers(sys, delta);
    Eigen::VectorXd w(sys.n());
    for (int j = 0; j < sys.n(); ++j) {
        const auto& inv = sys.inverters[static_cast<std::size_t>(j)];
        w[j] = sys.g.omega_0 + inv.k * (inv.p_star - p[sys.m() + j]);
    }
    return w;
}

// ----------------------------------------------------------------------------
// Center-of-angle aggregates
// ----------------------------------------------------------------------------

CoaSnapshot coa_snapshot(const MultiMachineSystem& sys, const MultiState& s) {
    if (sys.m() < 1 || sys.n() < 1) {
        throw ConfigError("COA snapshot needs at least one generator and one inverter");
    }
    CoaSnapshot c;
    double wd = 0.0, ww = 0.0;
    for (int i = 0; i < sys.m(); ++i) {
        const double tj = sys.generators[static_cast<std::size_t>(i)].tj;
        c.t_coa1 += tj;
        wd += tj * s.delta[i];
        ww += tj * s.gen_omega[i];
    }
    c.delta_coa1 = wd / c.t_coa1;
    c.omega_coa1 = ww / c.t_coa1;

    const Eigen::VectorXd p = electrical_powers(sys, s.delta);
    double inv_k_sum = 0.0, wd2 = 0.0, dp = 0.0;
    for (int j = 0; j < sys.n(); ++j) {
        const auto& inv = sys.inverters[static_cast<std::size_t>(j)];
        inv_k_sum += 1.0 / inv.k;
        wd2 += s.delta[sys.m() + j] / inv.k;
        dp += inv.p_star - p[sys.m() + j];
    }
    c.k_coa2 = 1.0 / inv_k_sum;
    c.delta_coa2 = wd2 * c.k_coa2;
    c.omega_coa2 = sys.g.omega_0 + c.k_coa2 * dp;
    c.omega_rel = c.omega_coa1 - c.omega_coa2;
    return c;
}

Eigen::MatrixXd coa_damping_matrix(const MultiMachineSystem& sys, const Eigen::VectorXd& delta) {
    if (sys.m() < 1 || sys.n() < 1) {
        throw ConfigError("damping matrix needs at least one generator and one inverter");
    }
    double t_coa1 = 0.0;
    for (const auto& sg : sys.generators) {
        t_coa1 += sg.tj;
    }
    double inv_k_sum = 0.0;
    for (const auto& inv : sys.inverters) {
        inv_k_sum += 1.0 / inv.k;
    }
    const double k_coa2 = 1.0 / inv_k_sum;

    Eigen::MatrixXd d(sys.n(), sys.m());
    for (int j = 0; j < sys.n(); ++j) {
        const int gj = sys.m() + j;
        for (int i = 0; i < sys.m(); ++i) {
            d(j, i) = t_coa1 * k_coa2 * sys.emf(gj) * sys.emf(i) *
                      std::abs(sys.y_internal(gj, i)) * sys.g.omega_n *
                      std::cos(delta[gj] - delta[i]);
        }
    }
    return d;
}

Eigen::VectorXd coa_relative_offsets(const MultiMachineSystem& sys,
                                     const Eigen::VectorXd& delta) {
    double t_sum = 0.0, wd = 0.0;
    for (int i = 0; i < sys.m(); ++i) {
        const double tj = sys.generators[static_cast<std::size_t>(i)].tj;
        t_sum += tj;
        wd += tj * delta[i];
    }
    if (t_sum <= 0.0) {
        throw ConfigError("COA reference needs at least one generator");
    }
    return delta.array() - wd / t_sum;
}

// ----------------------------------------------------------------------------
// Simulation
// ----------------------------------------------------------------------------

namespace {

MultiState rk4_step_mm(const MultiMachineSystem& sys, const MultiState& s, double dt,
                       bool damping) {
    const auto shift = [&](const MultiDerivative& k, double a) {
        MultiState x;
        x.delta = s.delta + a * k.ddelta;
        x.gen_omega = s.gen_omega + a * k.dgen_omega;
        return x;
    };
    const MultiDerivative k1 = mm_rhs(sys, s, damping);
    const MultiDerivative k2 = mm_rhs(sys, shift(k1, 0.5 * dt), damping);
    const MultiDerivative k3 = mm_rhs(sys, shift(k2, 0.5 * dt), damping);
    const MultiDerivative k4 = mm_rhs(sys, shift(k3, dt), damping);
    MultiState out;
    out.delta = s.delta + dt / 6.0 * (k1.ddelta + 2.0 * k2.ddelta + 2.0 * k3.ddelta + k4.ddelta);
    out.gen_omega = s.gen_omega + dt / 6.0 * (k1.dgen_omega + 2.0 * k2.dgen_omega +
                                              2.0 * k3.dgen_omega + k4.dgen_omega);
    return out;
}

void check_finite_mm(const MultiState& s, double t) {
    if (!s.delta.allFinite() || !s.gen_omega.allFinite()) {
        throw NumericError("multi-machine state became non-finite at t = " +
                           std::to_string(t) + " s");
    }
}

MmSample make_sample_mm(const MultiMachineSystem& sys, const MultiState& s, double t,
                        int flag) {
    MmSample smp;
    smp.t = t;
    smp.delta = s.delta;
    smp.power = electrical_powers(sys, s.delta);
    smp.omega.resize(sys.n_sources());
    smp.omega.head(sys.m()) = s.gen_omega;
    if (sys.n() > 0) {
        smp.omega.tail(sys.n()) = inverter_omegas(sys, s.delta);
    }
    smp.event_flag = flag;
    return smp;
}

} // namespace

MultiState advance_mm(const MultiMachineSystem& sys, MultiState s, double dt, long n_steps,
                      bool include_gen_damping) {
    for (long i = 0; i < n_steps; ++i) {
        s = rk4_step_mm(sys, s, dt, include_gen_damping);
    }
    check_finite_mm(s, dt * static_cast<double>(n_steps));
    return s;
}

MmTrajectory integrate_mm(const MultiMachineSystem& sys, const AdmittanceMatrix& y_fault,
                          const AdmittanceMatrix& y_post, const MultiState& s0,
                          const IntegratorConfig& cfg, const EventSchedule& events,
                          bool include_gen_damping) {
    if (cfg.dt <= 0.0) {
        throw ConfigError("integrator step must be positive");
    }
    if (!(events.apply >= 0.0 && events.apply <= events.clear && events.clear <= cfg.t_end)) {
        throw ConfigError("event times must satisfy 0 <= apply <= clear <= t_end");
    }

    MultiMachineSystem active = sys;
    MmTrajectory traj;
    MultiState s = s0;
    long step = 0;
    double t = 0.0;
    traj.samples.push_back(make_sample_mm(active, s, t, 0));

    const double boundaries[] = {events.apply, events.clear, cfg.t_end};
    const AdmittanceMatrix* next_y[] = {&y_fault, &y_post, nullptr};
    for (int seg = 0; seg < 3; ++seg) {
        const double t_to = boundaries[seg];
        const double span = t_to - t;
        if (span > 0.0) {
            const long n_full = static_cast<long>(std::floor(span / cfg.dt + 1e-9));
            const double t0 = t;
            for (long i = 1; i <= n_full; ++i) {
                s = rk4_step_mm(active, s, cfg.dt, include_gen_damping);
                t = t0 + static_cast<double>(i) * cfg.dt;
                ++step;
                check_finite_mm(s, t);
                if (step % cfg.record_stride == 0) {
                    traj.samples.push_back(make_sample_mm(active, s, t, 0));
                }
            }
            if (t < t_to) {
                s = rk4_step_mm(active, s, t_to - t, include_gen_damping);
                t = t_to;
                ++step;
                check_finite_mm(s, t);
                if (step % cfg.record_stride == 0) {
                    traj.samples.push_back(make_sample_mm(active, s, t, 0));
                }
            }
        }
        if (next_y[seg] != nullptr) {
            // Topology switch: states are continuous, the algebraic inverter
            // frequencies jump with the recomputed powers.
            active.y_internal = *next_y[seg];
            if (!traj.samples.empty() && traj.samples.back().t == t) {
                traj.samples.pop_back();
            }
            traj.samples.push_back(make_sample_mm(active, s, t, 1));
        }
    }
    if (traj.samples.empty() || traj.samples.back().t != t) {
        traj.samples.push_back(make_sample_mm(active, s, t, -1));
    }
    return traj;
}

MmOutcome classify_mm(const MultiMachineSystem& sys, MultiState s,
                      const Eigen::VectorXd& ref_offsets, const MmClassifyConfig& cc,
                      bool include_gen_damping) {
    if (ref_offsets.size() != sys.n_sources()) {
        throw ConfigError("reference offset vector does not match the source count");
    }
    MmOutcome out;
    out.stable = true;
    const long n = static_cast<long>(std::llround(cc.horizon / cc.dt));
    for (long i = 0; i < n; ++i) {
        s = rk4_step_mm(sys, s, cc.dt, include_gen_damping);
        check_finite_mm(s, static_cast<double>(i + 1) * cc.dt);
        const Eigen::VectorXd rel = coa_relative_offsets(sys, s.delta);
        const double dev = (rel - ref_offsets).cwiseAbs().maxCoeff();
        out.max_deviation = std::max(out.max_deviation, dev);
        if (dev > cc.threshold) {
            out.stable = false;
            return out;
        }
    }
    return out;
}

MultiMachineSystem replace_with_droop(const MultiMachineSystem& sys,
                                      const std::vector<std::pair<int, double>>& replacements) {
    std::set<int> replaced;
    for (const auto& [idx, k] : replacements) {
        if (idx < 0 || idx >= sys.m()) {
            throw ConfigError("droop replacement index out of range");
        }
        if (k <= 0.0) {
            throw ConfigError("droop replacement needs a positive gain");
        }
        if (!replaced.insert(idx).second) {
            throw ConfigError("duplicate droop replacement index");
        }
    }

    MultiMachineSystem out;
    out.g = sys.g;
    std::vector<int> order; // new global order -> old global index
    for (int i = 0; i < sys.m(); ++i) {
        if (replaced.count(i) == 0) {
            out.generators.push_back(sys.generators[static_cast<std::size_t>(i)]);
            order.push_back(i);
        }
    }
    out.inverters.reserve(replaced.size() + sys.inverters.size());
    for (const auto& [idx, k] : replacements) {
        const auto& sg = sys.generators[static_cast<std::size_t>(idx)];
        DroopParams inv;
        inv.k = k;
        inv.p_star = sg.p_star;
        inv.e = sg.e;
        out.inverters.push_back(inv);
        order.push_back(idx);
    }
    for (int j = 0; j < sys.n(); ++j) {
        out.inverters.push_back(sys.inverters[static_cast<std::size_t>(j)]);
        order.push_back(sys.m() + j);
    }

    const int ns = sys.n_sources();
    out.y_internal.resize(ns, ns);
    for (int a = 0; a < ns; ++a) {
        for (int b = 0; b < ns; ++b) {
            out.y_internal(a, b) = sys.y_internal(order[static_cast<std::size_t>(a)],
                                                  order[static_cast<std::size_t>(b)]);
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Bus/branch ingestion and the classical reduction
// ----------------------------------------------------------------------------

void BusBranchNetwork::validate() const {
    if (n_bus < 2) {
        throw ConfigError("bus/branch network needs at least two buses");
    }
    const auto in_range = [this](int b) { return b >= 0 && b < n_bus; };
    for (const auto& br : branches) {
        if (!in_range(br.from) || !in_range(br.to) || br.from == br.to) {
            throw ConfigError("branch endpoints out of range");
        }
        if (br.r == 0.0 && br.x == 0.0) {
            throw ConfigError("branch impedance must be nonzero");
        }
    }
    for (const auto& [bus, s] : loads) {
        (void)s;
        if (!in_range(bus)) {
            throw ConfigError("load bus out of range");
        }
    }
    if (machines.empty()) {
        throw ConfigError("network needs at least one machine");
    }
    for (const auto& mach : machines) {
        if (!in_range(mach.bus) || mach.h <= 0.0 || mach.xd_prime <= 0.0) {
            throw ConfigError("machine entry invalid (bus, H, X'd)");
        }
    }
    if (!in_range(slack_bus) || slack_v <= 0.0) {
        throw ConfigError("slack specification invalid");
    }
    for (const auto& [bus, p, vm] : pv) {
        (void)p;
        if (!in_range(bus) || bus == slack_bus || vm <= 0.0) {
            throw ConfigError("PV specification invalid");
        }
    }
}

AdmittanceMatrix assemble_ybus(const BusBranchNetwork& net) {
    net.validate();
    AdmittanceMatrix y = AdmittanceMatrix::Zero(net.n_bus, net.n_bus);
    for (const auto& br : net.branches) {
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex half_charge(0.0, br.b_charging / 2.0);
        y(br.from, br.from) += ys + half_charge;
        y(br.to, br.to) += ys + half_charge;
        y(br.from, br.to) -= ys;
        y(br.to, br.from) -= ys;
    }
    return y;
}

PowerFlowResult newton_power_flow(const BusBranchNetwork& net, const AdmittanceMatrix& y,
                                  double tol, int it_max) {
    const int n = net.n_bus;
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
    vm[net.slack_bus] = net.slack_v;

    std::vector<int> pv_buses;
    Eigen::VectorXd p_sched = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_sched = Eigen::VectorXd::Zero(n);
    for (const auto& [bus, p, v] : net.pv) {
        pv_buses.push_back(bus);
        p_sched[bus] += p;
        vm[bus] = v;
    }
    for (const auto& [bus, s] : net.loads) {
        p_sched[bus] -= s.real();
        q_sched[bus] -= s.imag();
    }
    std::vector<int> pq_buses;
    for (int b = 0; b < n; ++b) {
        if (b != net.slack_bus &&
            std::find(pv_buses.begin(), pv_buses.end(), b) == pv_buses.end()) {
            pq_buses.push_back(b);
        }
    }

    std::vector<int> vars_th = pv_buses;
    vars_th.insert(vars_th.end(), pq_buses.begin(), pq_buses.end());
    const std::vector<int>& vars_v = pq_buses;
    const int n_th = static_cast<int>(vars_th.size());
    const int n_v = static_cast<int>(vars_v.size());
    const int dim = n_th + n_v;

    const auto mismatch = [&](const Eigen::VectorXd& vmag, const Eigen::VectorXd& ang) {
        Eigen::VectorXcd vc(n);
        for (int b = 0; b < n; ++b) {
            vc[b] = std::polar(vmag[b], ang[b]);
        }
        const Eigen::VectorXcd s = vc.cwiseProduct((y * vc).conjugate());
        Eigen::VectorXd mis(dim);
        for (int k = 0; k < n_th; ++k) {
            mis[k] = p_sched[vars_th[static_cast<std::size_t>(k)]] -
                     s[vars_th[static_cast<std::size_t>(k)]].real();
        }
        for (int k = 0; k < n_v; ++k) {
            mis[n_th + k] = q_sched[vars_v[static_cast<std::size_t>(k)]] -
                            s[vars_v[static_cast<std::size_t>(k)]].imag();
        }
        return mis;
    };

    for (int it = 0; it < it_max; ++it) {
        const Eigen::VectorXd mis = mismatch(vm, th);
        if (mis.cwiseAbs().maxCoeff() < tol) {
            PowerFlowResult res;
            res.v.resize(n);
            for (int b = 0; b < n; ++b) {
                res.v[b] = std::polar(vm[b], th[b]);
            }
            res.iterations = it;
            return res;
        }
        // Numeric Jacobian of the mismatch vector, column by column.
        constexpr double eps = 1e-7;
        Eigen::MatrixXd jac(dim, dim);
        for (int k = 0; k < n_th; ++k) {
            Eigen::VectorXd th2 = th;
            th2[vars_th[static_cast<std::size_t>(k)]] += eps;
            jac.col(k) = (mismatch(vm, th2) - mis) / eps;
        }
        for (int k = 0; k < n_v; ++k) {
            Eigen::VectorXd vm2 = vm;
            vm2[vars_v[static_cast<std::size_t>(k)]] += eps;
            jac.col(n_th + k) = (mismatch(vm2, th) - mis) / eps;
        }
        const Eigen::VectorXd dx = jac.fullPivLu().solve(-mis);
        if (!dx.allFinite()) {
            throw NumericError("power flow Jacobian solve failed");
        }
        for (int k = 0; k < n_th; ++k) {
            th[vars_th[static_cast<std::size_t>(k)]] += dx[k];
        }
        for (int k = 0; k < n_v; ++k) {
            vm[vars_v[static_cast<std::size_t>(k)]] += dx[n_th + k];
        }
    }
    throw NumericError("power flow did not converge");
}

AdmittanceMatrix classical_reduction(const BusBranchNetwork& net, const AdmittanceMatrix& ybus,
                                     const Eigen::VectorXcd& v, std::optional<int> fault_bus,
                                     double z_fault) {
    const int n = net.n_bus;
    const int m = static_cast<int>(net.machines.size());
    AdmittanceMatrix ya = AdmittanceMatrix::Zero(n + m, n + m);
    ya.topLeftCorner(n, n) = ybus;
    for (const auto& [bus, s] : net.loads) {
        ya(bus, bus) += std::conj(s) / std::norm(v[bus]);
    }
    for (int i = 0; i < m; ++i) {
        const auto& mach = net.machines[static_cast<std::size_t>(i)];
        const Complex yg = 1.0 / Complex(0.0, mach.xd_prime);
        ya(n + i, n + i) += yg;
        ya(mach.bus, mach.bus) += yg;
        ya(n + i, mach.bus) -= yg;
        ya(mach.bus, n + i) -= yg;
    }
    if (fault_bus) {
        if (*fault_bus < 0 || *fault_bus >= n) {
            throw ConfigError("fault bus out of range");
        }
        if (z_fault <= 0.0) {
            throw ConfigError("fault impedance must be positive");
        }
        ya(*fault_bus, *fault_bus) += 1.0 / z_fault;
    }
    std::vector<int> keep(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        keep[static_cast<std::size_t>(i)] = n + i;
    }
    return kron_reduce(ya, keep);
}

ClassicalCase build_classical_case(const BusBranchNetwork& net, const GlobalConstants& g) {
    net.validate();
    const AdmittanceMatrix ybus = assemble_ybus(net);
    ClassicalCase cc;
    cc.pf = newton_power_flow(net, ybus);
    const Eigen::VectorXcd& v = cc.pf.v;
    const Eigen::VectorXcd s_inj = v.cwiseProduct((ybus * v).conjugate());

    const int m = static_cast<int>(net.machines.size());
    cc.emf.resize(m);
    for (int i = 0; i < m; ++i) {
        const auto& mach = net.machines[static_cast<std::size_t>(i)];
        const Complex current = std::conj(s_inj[mach.bus] / v[mach.bus]);
        cc.emf[i] = v[mach.bus] + Complex(0.0, mach.xd_prime) * current;
    }

    cc.sys.g = g;
    cc.sys.y_internal = classical_reduction(net, ybus, v, std::nullopt, 0.0);
    cc.initial.delta.resize(m);
    cc.initial.gen_omega = Eigen::VectorXd::Constant(m, g.omega_0);
    cc.sys.generators.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        cc.initial.delta[i] = std::arg(cc.emf[i]);
        auto& sg = cc.sys.generators[static_cast<std::size_t>(i)];
        sg.tj = 2.0 * net.machines[static_cast<std::size_t>(i)].h;
        sg.d = 0.0;
        sg.e = std::abs(cc.emf[i]);
    }
    // Mechanical powers balance the pre-fault electrical powers exactly, so
    // the power-flow point is an equilibrium of the classical model.
    const Eigen::VectorXd pe = electrical_powers(cc.sys, cc.initial.delta);
    for (int i = 0; i < m; ++i) {
        cc.sys.generators[static_cast<std::size_t>(i)].p_star = pe[i];
    }
    return cc;
}

} // namespace gfs
