#include "gfs/network.hpp"

#include <cmath>

#include "gfs/errors.hpp"

namespace gfs {

namespace {

/// Parallel combination of two impedances.
Complex parallel(Complex a, Complex b) { return a * b / (a + b); }

/// Branch and shunt impedances of the star for a given topology mode.
struct StarLegs {
    Complex za; // source-1 branch
    Complex zb; // source-2 branch
    Complex zc; // shunt at the common bus
};

StarLegs legs_for_mode(const ThreeBusNetwork& net, TopologyMode mode) {
    switch (mode) {
    case TopologyMode::Fault:
        return {net.z1 + net.z_v1, net.z2 + net.z_v2, parallel(net.z_load, net.z_fault)};
    case TopologyMode::PreFault:
    case TopologyMode::PostFault:
        return {net.z1, net.z2, net.z_load};
    }
    throw ConfigError("unknown topology mode");
}

} // namespace

void ThreeBusNetwork::validate() const {
    if (std::abs(z1) == 0.0 || std::abs(z2) == 0.0) {
        throw ConfigError("source branch impedances z1 and z2 must be nonzero");
    }
    if (std::abs(z_load) == 0.0) {
        throw ConfigError("load impedance z_load must be nonzero");
    }
    if (bases.voltage_kv <= 0.0 || bases.power_mva <= 0.0) {
        throw ConfigError("impedance bases must be positive");
    }
}

ReducedAdmittances reduce_three_bus(const ThreeBusNetwork& net, TopologyMode mode) {
    net.validate();
    const auto [za, zb, zc] = legs_for_mode(net, mode);
    if (mode == TopologyMode::Fault && std::abs(net.z_fault) == 0.0) {
        throw ConfigError("fault mode requested but z_fault is zero; use a small "
                          "resistive value for a bolted fault");
    }

    // Star-delta: Z12 = Za + Zb + Za*Zb/Zc, cyclic for the two shunt legs.
    ReducedAdmittances red;
    red.y12 = 1.0 / (za + zb + za * zb / zc);
    red.y1g = 1.0 / (za + zc + za * zc / zb);
    red.y2g = 1.0 / (zb + zc + zb * zc / za);
    red.y12_mag = std::abs(red.y12);
    red.gamma = -std::arg(red.y12); // == arg(Z12); pi/2 in the lossless limit
    red.g12 = red.y12.real();
    red.g1g = red.y1g.real();
    red.g2g = red.y2g.real();
    if (!std::isfinite(red.y12_mag) || red.y12_mag == 0.0) {
        throw NumericError("three-bus reduction produced a non-finite or zero transfer "
                           "admittance");
    }
    return red;
}

AdmittanceMatrix kron_reduce(const AdmittanceMatrix& y, const std::vector<int>& retained) {
    const auto n = static_cast<int>(y.rows());
    if (y.cols() != n) {
        throw ConfigError("kron_reduce requires a square admittance matrix");
    }

    std::vector<bool> keep(static_cast<std::size_t>(n), false);
    for (int idx : retained) {
        if (idx < 0 || idx >= n) {
            throw ConfigError("kron_reduce: retained index out of range");
        }
        keep[static_cast<std::size_t>(idx)] = true;
    }
    std::vector<int> dropped;
    for (int i = 0; i < n; ++i) {
        if (!keep[static_cast<std::size_t>(i)]) {
            dropped.push_back(i);
        }
    }
    if (dropped.empty()) {
        AdmittanceMatrix out(retained.size(), retained.size());
        for (std::size_t r = 0; r < retained.size(); ++r) {
            for (std::size_t c = 0; c < retained.size(); ++c) {
                out(static_cast<int>(r), static_cast<int>(c)) = y(retained[r], retained[c]);
            }
        }
        return out;
    }

    const auto nr = static_cast<int>(retained.size());
    const auto nd = static_cast<int>(dropped.size());
    AdmittanceMatrix yrr(nr, nr), yrd(nr, nd), ydr(nd, nr), ydd(nd, nd);
    for (int r = 0; r < nr; ++r) {
        for (int c = 0; c < nr; ++c) yrr(r, c) = y(retained[static_cast<std::size_t>(r)],
                                                   retained[static_cast<std::size_t>(c)]);
        for (int c = 0; c < nd; ++c) yrd(r, c) = y(retained[static_cast<std::size_t>(r)],
                                                   dropped[static_cast<std::size_t>(c)]);
    }
    for (int r = 0; r < nd; ++r) {
        for (int c = 0; c < nr; ++c) ydr(r, c) = y(dropped[static_cast<std::size_t>(r)],
                                                   retained[static_cast<std::size_t>(c)]);
        for (int c = 0; c < nd; ++c) ydd(r, c) = y(dropped[static_cast<std::size_t>(r)],
                                                   dropped[static_cast<std::size_t>(c)]);
    }

    Eigen::FullPivLU<AdmittanceMatrix> lu(ydd);
    if (!lu.isInvertible()) {
        throw NumericError("kron_reduce: eliminated block is singular");
    }
    return yrr - yrd * lu.solve(ydr);
}

AdmittanceMatrix fold_constant_impedance_loads(
    AdmittanceMatrix y, const std::map<int, std::pair<Complex, Complex>>& loads_s_v) {
    for (const auto& [node, sv] : loads_s_v) {
        const auto& [s, v] = sv;
        if (node < 0 || node >= y.rows()) {
            throw ConfigError("load node index out of range");
        }
        const double vmag2 = std::norm(v);
        if (vmag2 <= 0.0) {
            throw NumericError("cannot fold a load metered at zero voltage");
        }
        y(node, node) += std::conj(s) / vmag2;
    }
    return y;
}

std::pair<double, double> solve_network_powers(const ThreeBusNetwork& net, TopologyMode mode,
                                               double e1, double e2, double delta1,
                                               double delta2) {
    net.validate();
    const auto [za, zb, zc] = legs_for_mode(net, mode);
    const Complex ea = std::polar(e1, delta1);
    const Complex eb = std::polar(e2, delta2);

    // Single nodal equation at the common bus.
    const Complex ysum = 1.0 / za + 1.0 / zb + 1.0 / zc;
    const Complex vm = (ea / za + eb / zb) / ysum;

    const Complex i1 = (ea - vm) / za;
    const Complex i2 = (eb - vm) / zb;
    return {(ea * std::conj(i1)).real(), (eb * std::conj(i2)).real()};
}

} // namespace gfs
