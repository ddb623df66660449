#include "fdia/power_flow.hpp"

#include <cmath>

namespace fdia {

PQ power_injection(const NetworkModel& net, const StateVector& x, int bus_id) {
    const int i = net.index_of(bus_id);
    const Eigen::MatrixXd& G = net.ybus_g();
    const Eigen::MatrixXd& B = net.ybus_b();
    const double vi = x.vmag[i];
    double p = vi * vi * G(i, i);
    double q = -vi * vi * B(i, i);
    for (int li : net.lines_at(i)) {
        const Line& l = net.lines()[li];
        const int j = net.index_of(l.from == bus_id ? l.to : l.from);
        const double dij = x.angle[i] - x.angle[j];
        const double c = std::cos(dij), s = std::sin(dij);
        p += vi * x.vmag[j] * (G(i, j) * c + B(i, j) * s);
        q += vi * x.vmag[j] * (G(i, j) * s - B(i, j) * c);
    }
    return {p, q};
}

PQ line_flow(const NetworkModel& net, const StateVector& x, int from_id, int to_id) {
    auto li = net.line_between(from_id, to_id);
    if (!li)
        throw CaseError("no line between " + std::to_string(from_id) + " and " +
                        std::to_string(to_id));
    const Line& l = net.lines()[*li];
    const int i = net.index_of(from_id);
    const int j = net.index_of(to_id);
    const double vi = x.vmag[i], vj = x.vmag[j];
    const double dij = x.angle[i] - x.angle[j];
    const double c = std::cos(dij), s = std::sin(dij);
    PQ out;
    out.p = vi * vi * l.g - vi * vj * (l.g * c + l.b * s);
    out.q = -vi * vi * (l.b + l.shunt_b / 2) - vi * vj * (l.g * s - l.b * c);
    return out;
}

int measurement_count(const NetworkModel& net) {
    return 2 * net.bus_count() + 4 * net.line_count();
}

int meas_index_p_injection(const NetworkModel& net, int bus_index) {
    (void)net;
    return bus_index;
}
int meas_index_q_injection(const NetworkModel& net, int bus_index) {
    return net.bus_count() + bus_index;
}
int meas_index_p_flow(const NetworkModel& net, int line_index, bool forward) {
    return 2 * net.bus_count() + (forward ? 0 : net.line_count()) + line_index;
}
int meas_index_q_flow(const NetworkModel& net, int line_index, bool forward) {
    return 2 * net.bus_count() + 2 * net.line_count() +
           (forward ? 0 : net.line_count()) + line_index;
}

Eigen::VectorXd measurement_function(const NetworkModel& net, const StateVector& x) {
    const int n = net.bus_count();
    Eigen::VectorXd z(measurement_count(net));
    for (int i = 0; i < n; ++i) {
        PQ inj = power_injection(net, x, net.buses()[i].id);
        z[meas_index_p_injection(net, i)] = inj.p;
        z[meas_index_q_injection(net, i)] = inj.q;
    }
    for (int li = 0; li < net.line_count(); ++li) {
        const Line& l = net.lines()[li];
        PQ f = line_flow(net, x, l.from, l.to);
        PQ r = line_flow(net, x, l.to, l.from);
        z[meas_index_p_flow(net, li, true)] = f.p;
        z[meas_index_p_flow(net, li, false)] = r.p;
        z[meas_index_q_flow(net, li, true)] = f.q;
        z[meas_index_q_flow(net, li, false)] = r.q;
    }
    return z;
}

int state_count(const NetworkModel& net) { return 2 * net.bus_count() - 1; }

namespace {

// column of the angle of bus index i, or -1 for the reference bus
inline int angle_col(const NetworkModel& net, int i) {
    const int r = net.reference_index();
    if (i == r) return -1;
    return i < r ? i : i - 1;
}
inline int vmag_col(const NetworkModel& net, int i) {
    return net.bus_count() - 1 + i;
}

}  // namespace

void apply_state_step(const NetworkModel& net, const Eigen::VectorXd& dx, StateVector& x) {
    const int n = net.bus_count();
    for (int i = 0; i < n; ++i) {
        int ac = angle_col(net, i);
        if (ac >= 0) x.angle[i] += dx[ac];
        x.vmag[i] += dx[vmag_col(net, i)];
    }
}

Eigen::MatrixXd jacobian(const NetworkModel& net, const StateVector& x) {
    const int n = net.bus_count();
    const int nl = net.line_count();
    const Eigen::MatrixXd& G = net.ybus_g();
    const Eigen::MatrixXd& B = net.ybus_b();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(measurement_count(net), state_count(net));

    // injection rows
    for (int i = 0; i < n; ++i) {
        const int bus_id = net.buses()[i].id;
        const double vi = x.vmag[i];
        PQ inj = power_injection(net, x, bus_id);
        const int rp = meas_index_p_injection(net, i);
        const int rq = meas_index_q_injection(net, i);
        // self terms
        if (int ac = angle_col(net, i); ac >= 0) {
            H(rp, ac) = -inj.q - vi * vi * B(i, i);
            H(rq, ac) = inj.p - vi * vi * G(i, i);
        }
        H(rp, vmag_col(net, i)) = inj.p / vi + vi * G(i, i);
        H(rq, vmag_col(net, i)) = inj.q / vi - vi * B(i, i);
        for (int li : net.lines_at(i)) {
            const Line& l = net.lines()[li];
            const int j = net.index_of(l.from == bus_id ? l.to : l.from);
            const double vj = x.vmag[j];
            const double dij = x.angle[i] - x.angle[j];
            const double c = std::cos(dij), s = std::sin(dij);
            if (int ac = angle_col(net, j); ac >= 0) {
                H(rp, ac) = vi * vj * (G(i, j) * s - B(i, j) * c);
                H(rq, ac) = -vi * vj * (G(i, j) * c + B(i, j) * s);
            }
            H(rp, vmag_col(net, j)) = vi * (G(i, j) * c + B(i, j) * s);
            H(rq, vmag_col(net, j)) = vi * (G(i, j) * s - B(i, j) * c);
        }
    }

    // flow rows
    for (int li = 0; li < nl; ++li) {
        const Line& l = net.lines()[li];
        for (bool forward : {true, false}) {
            const int i = net.index_of(forward ? l.from : l.to);
            const int j = net.index_of(forward ? l.to : l.from);
            const double vi = x.vmag[i], vj = x.vmag[j];
            const double dij = x.angle[i] - x.angle[j];
            const double c = std::cos(dij), s = std::sin(dij);
            const int rp = meas_index_p_flow(net, li, forward);
            const int rq = meas_index_q_flow(net, li, forward);
            const double gs_bc = l.g * s - l.b * c;
            const double gc_bs = l.g * c + l.b * s;
            if (int ac = angle_col(net, i); ac >= 0) {
                H(rp, ac) = vi * vj * gs_bc;
                H(rq, ac) = -vi * vj * gc_bs;
            }
            if (int ac = angle_col(net, j); ac >= 0) {
                H(rp, ac) = -vi * vj * gs_bc;
                H(rq, ac) = vi * vj * gc_bs;
            }
            H(rp, vmag_col(net, i)) = 2 * vi * l.g - vj * gc_bs;
            H(rp, vmag_col(net, j)) = -vi * gc_bs;
            H(rq, vmag_col(net, i)) = -2 * vi * (l.b + l.shunt_b / 2) - vj * gs_bc;
            H(rq, vmag_col(net, j)) = -vi * gs_bc;
        }
    }
    return H;
}

StateVector solve_power_flow(const NetworkModel& net, const PowerFlowOptions& opts) {
    const int n = net.bus_count();
    const int ref = net.reference_index();
    StateVector x = StateVector::flat(n);
    std::vector<int> pq;  // buses holding both P and Q
    for (int i = 0; i < n; ++i) {
        const Bus& b = net.buses()[i];
        if (b.kind == BusKind::Generator)
            x.vmag[i] = b.v_set.value_or(1.0);
        else
            pq.push_back(i);
    }

    // unknowns: angles (all but ref) then magnitudes of pq buses
    const int na = n - 1;
    const int m = na + static_cast<int>(pq.size());
    Eigen::VectorXd mis(m);
    Eigen::MatrixXd J(m, m);

    for (int it = 0; it < opts.max_iter; ++it) {
        Eigen::MatrixXd Hfull = jacobian(net, x);
        Eigen::VectorXd z = measurement_function(net, x);
        int r = 0;
        for (int i = 0; i < n; ++i)
            if (i != ref) mis[r++] = net.buses()[i].static_p - z[meas_index_p_injection(net, i)];
        for (int i : pq) mis[r++] = net.buses()[i].static_q - z[meas_index_q_injection(net, i)];
        if (mis.cwiseAbs().maxCoeff() < opts.tol) return x;

        // select rows (P of non-ref, Q of pq) and columns (angles, V of pq)
        r = 0;
        auto fill_row = [&](int meas_row) {
            int c = 0;
            for (int k = 0; k < na; ++k) J(r, c++) = Hfull(meas_row, k);
            for (int i : pq) J(r, c++) = Hfull(meas_row, na + i);
            ++r;
        };
        for (int i = 0; i < n; ++i)
            if (i != ref) fill_row(meas_index_p_injection(net, i));
        for (int i : pq) fill_row(meas_index_q_injection(net, i));

        Eigen::VectorXd dx = J.partialPivLu().solve(mis);
        int c = 0;
        for (int i = 0; i < n; ++i)
            if (i != ref) x.angle[i] += dx[c++];
        for (int i : pq) x.vmag[i] += dx[c++];
    }
    throw PowerFlowError("power flow did not converge in " +
                         std::to_string(opts.max_iter) + " iterations");
}

}  // namespace fdia
