#include "fdia/dynamics.hpp"

#include "fdia/rng.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/MatrixFunctions>

namespace fdia {

namespace {

// Injection Jacobian blocks dP/dd, dP/dV, dQ/dd, dQ/dV (n x n, dense),
// evaluated at x. Shared by linearize() and build_full_linear().
struct InjectionJacobian {
    Eigen::MatrixXd pd, pv, qd, qv;
};

InjectionJacobian injection_jacobian(const NetworkModel& net, const StateVector& x) {
    const int n = net.bus_count();
    const Eigen::MatrixXd& G = net.ybus_g();
    const Eigen::MatrixXd& B = net.ybus_b();
    InjectionJacobian J{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                        Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (int i = 0; i < n; ++i) {
        const int bus_id = net.buses()[i].id;
        const double vi = x.vmag[i];
        PQ inj = power_injection(net, x, bus_id);
        J.pd(i, i) = -inj.q - vi * vi * B(i, i);
        J.qd(i, i) = inj.p - vi * vi * G(i, i);
        J.pv(i, i) = inj.p / vi + vi * G(i, i);
        J.qv(i, i) = inj.q / vi - vi * B(i, i);
        for (int li : net.lines_at(i)) {
            const Line& l = net.lines()[li];
            const int j = net.index_of(l.from == bus_id ? l.to : l.from);
            const double vj = x.vmag[j];
            const double dij = x.angle[i] - x.angle[j];
            const double c = std::cos(dij), s = std::sin(dij);
            J.pd(i, j) = vi * vj * (G(i, j) * s - B(i, j) * c);
            J.qd(i, j) = -vi * vj * (G(i, j) * c + B(i, j) * s);
            J.pv(i, j) = vi * (G(i, j) * c + B(i, j) * s);
            J.qv(i, j) = vi * (G(i, j) * s - B(i, j) * c);
        }
    }
    return J;
}

}  // namespace

Trajectory simulate(const NetworkModel& net, double duration, double dt,
                    std::uint64_t seed, const SimulateOptions& opts) {
    if (dt <= 0) throw SimulationError("dt must be positive");
    if (duration < dt) throw SimulationError("duration must be at least dt");
    const int n = net.bus_count();
    const int ref = net.reference_index();
    StateVector eq = solve_power_flow(net);
    StateVector x = eq;

    std::vector<int> dyn, gens;
    for (int i = 0; i < n; ++i) {
        if (net.buses()[i].kind == BusKind::Generator) {
            if (i != ref) gens.push_back(i);
        } else {
            dyn.push_back(i);
        }
    }

    Eigen::VectorXd pmech(n);
    for (int i = 0; i < n; ++i)
        pmech[i] = power_injection(net, x, net.buses()[i].id).p;

    const int nsteps = static_cast<int>(std::llround(duration / dt));
    const int stride = std::max(1, opts.store_stride);
    const int nstore = nsteps / stride;
    Trajectory traj;
    traj.dt = dt * stride;
    traj.start_time = traj.dt;
    traj.bus_ids.reserve(n);
    for (const Bus& b : net.buses()) traj.bus_ids.push_back(b.id);
    traj.angle.resize(nstore, n);
    traj.vmag.resize(nstore, n);

    Rng rng(seed);
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(n);
    const double sq = std::sqrt(dt);
    const Eigen::MatrixXd& G = net.ybus_g();
    const Eigen::MatrixXd& B = net.ybus_b();
    int store_row = 0;

    for (int k = 0; k < nsteps; ++k) {
        // injections at the current state
        Eigen::VectorXd P(n), Q(n);
        for (int i = 0; i < n; ++i) {
            PQ inj = power_injection(net, x, net.buses()[i].id);
            P[i] = inj.p;
            Q[i] = inj.q;
        }
        for (int i : dyn) {
            const Bus& b = net.buses()[i];
            const double xi_p = rng.normal();
            const double xi_q = rng.normal();
            const double fp = (b.static_p - P[i]) / b.tau_p;
            const double gp = b.static_p * b.sigma_p / b.tau_p;
            const double fq = (b.static_q - Q[i]) / b.tau_q;
            const double gq = b.static_q * b.sigma_q / b.tau_q;
            // self-stiffness, integrated implicitly
            const double kp = (-Q[i] - x.vmag[i] * x.vmag[i] * B(i, i)) / b.tau_p;
            const double kq = (Q[i] / x.vmag[i] - x.vmag[i] * B(i, i)) / b.tau_q;
            x.angle[i] += (dt * fp + sq * gp * xi_p) / (1.0 + dt * std::max(kp, 0.0));
            x.vmag[i] += (dt * fq + sq * gq * xi_q) / (1.0 + dt * std::max(kq, 0.0));
        }
        for (int g : gens) {
            const Bus& b = net.buses()[g];
            omega[g] += dt * (pmech[g] - P[g] - *b.gen_damping * omega[g]) / *b.gen_inertia;
            x.angle[g] += dt * omega[g];
        }
        for (int i = 0; i < n; ++i) {
            if (x.vmag[i] < 0.2 || x.vmag[i] > 2.0)
                throw SimulationError("voltage out of [0.2, 2.0] at bus " +
                                      std::to_string(net.buses()[i].id) + ", t = " +
                                      std::to_string((k + 1) * dt) + " s");
        }
        if ((k + 1) % stride == 0 && store_row < nstore) {
            traj.angle.row(store_row) = x.angle.transpose();
            traj.vmag.row(store_row) = x.vmag.transpose();
            ++store_row;
        }
    }
    return traj;
}

OUSystem linearize(const NetworkModel& net, const StateVector& eq,
                   const std::set<int>& bus_subset) {
    std::vector<int> order;
    for (int id : bus_subset) {
        const Bus& b = net.bus(id);
        if (b.kind == BusKind::Generator)
            throw SimulationError("bus subset contains generator bus " + std::to_string(id));
        order.push_back(id);
    }
    const int k = static_cast<int>(order.size());
    InjectionJacobian J = injection_jacobian(net, eq);

    OUSystem sys;
    sys.bus_ordering = order;
    sys.a_matrix = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    sys.b_matrix = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    sys.eq_angle.resize(k);
    sys.eq_vmag.resize(k);
    for (int a = 0; a < k; ++a) {
        const int i = net.index_of(order[a]);
        const Bus& bi = net.buses()[i];
        sys.eq_angle[a] = eq.angle[i];
        sys.eq_vmag[a] = eq.vmag[i];
        for (int bcol = 0; bcol < k; ++bcol) {
            const int j = net.index_of(order[bcol]);
            sys.a_matrix(a, bcol) = -J.pd(i, j) / bi.tau_p;
            sys.a_matrix(a, k + bcol) = -J.pv(i, j) / bi.tau_p;
            sys.a_matrix(k + a, bcol) = -J.qd(i, j) / bi.tau_q;
            sys.a_matrix(k + a, k + bcol) = -J.qv(i, j) / bi.tau_q;
        }
        sys.b_matrix(a, a) = bi.static_p * bi.sigma_p / bi.tau_p;
        sys.b_matrix(k + a, k + a) = bi.static_q * bi.sigma_q / bi.tau_q;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a_matrix, false);
    sys.stable = (es.eigenvalues().real().array() < 0).all();
    return sys;
}

namespace {

// Continuous Lyapunov solve A S + S A' + Q = 0 through the spectral
// decomposition of A. The Van Loan block route is unusable here: stiff
// zero-injection rows give A eigenvalues near -2700/s, and exp(-A dt)
// overflows the integrand blocks.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success)
        throw SimulationError("eigendecomposition failed in Lyapunov solve");
    const Eigen::MatrixXcd V = es.eigenvectors();
    const Eigen::VectorXcd lam = es.eigenvalues();
    const Eigen::MatrixXcd Vinv = V.inverse();
    Eigen::MatrixXcd W = Vinv * Q * Vinv.adjoint();
    for (int i = 0; i < W.rows(); ++i)
        for (int j = 0; j < W.cols(); ++j) {
            const std::complex<double> den = lam[i] + std::conj(lam[j]);
            if (std::abs(den) < 1e-300)
                throw SimulationError("Lyapunov solve hit a zero eigenvalue pair");
            W(i, j) /= -den;
        }
    Eigen::MatrixXd S = (V * W * V.adjoint()).real();
    return ((S + S.transpose()) / 2).eval();
}

}  // namespace

DiscreteOU discretize_ou(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt) {
    DiscreteOU d;
    d.phi = (A * dt).exp();
    d.stationary_cov = solve_lyapunov(A, B * B.transpose());
    Eigen::MatrixXd Qd = d.stationary_cov - d.phi * d.stationary_cov * d.phi.transpose();
    Qd = ((Qd + Qd.transpose()) / 2).eval();

    auto psd_chol = [](const Eigen::MatrixXd& C) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return Eigen::MatrixXd(es.eigenvectors() * w.asDiagonal());
    };
    d.noise_chol = psd_chol(Qd);
    d.stationary_chol = psd_chol(d.stationary_cov);
    return d;
}

Trajectory simulate_ou(const OUSystem& sys, int n_samples, double dt,
                       std::uint64_t seed) {
    if (n_samples < 2) throw SimulationError("n_samples must be at least 2");
    if (!sys.stable) throw SimulationError("OU system matrix is not stable");
    const int k = static_cast<int>(sys.bus_ordering.size());
    const int m = 2 * k;
    DiscreteOU d = discretize_ou(sys.a_matrix, sys.b_matrix, dt);

    Rng rng(seed);
    Eigen::VectorXd w(m), x(m);
    for (int i = 0; i < m; ++i) w[i] = rng.normal();
    x = d.stationary_chol * w;

    Trajectory traj;
    traj.dt = dt;
    traj.start_time = dt;
    traj.bus_ids = sys.bus_ordering;
    traj.angle.resize(n_samples, k);
    traj.vmag.resize(n_samples, k);
    for (int t = 0; t < n_samples; ++t) {
        for (int i = 0; i < m; ++i) w[i] = rng.normal();
        x = d.phi * x + d.noise_chol * w;
        traj.angle.row(t) = (sys.eq_angle + x.head(k)).transpose();
        traj.vmag.row(t) = (sys.eq_vmag + x.tail(k)).transpose();
    }
    return traj;
}

int FullLinearModel::angle_state(int dense_bus) const {
    for (size_t k = 0; k < dynamic_buses.size(); ++k)
        if (dynamic_buses[k] == dense_bus) return static_cast<int>(k);
    for (size_t k = 0; k < swing_buses.size(); ++k)
        if (swing_buses[k] == dense_bus)
            return static_cast<int>(2 * dynamic_buses.size() + k);
    return -1;
}

int FullLinearModel::vmag_state(int dense_bus) const {
    for (size_t k = 0; k < dynamic_buses.size(); ++k)
        if (dynamic_buses[k] == dense_bus)
            return static_cast<int>(dynamic_buses.size() + k);
    return -1;
}

FullLinearModel build_full_linear(const NetworkModel& net, const StateVector& eq) {
    const int n = net.bus_count();
    const int ref = net.reference_index();
    FullLinearModel m;
    for (int i = 0; i < n; ++i) {
        if (net.buses()[i].kind == BusKind::Generator) {
            if (i != ref) m.swing_buses.push_back(i);
        } else {
            m.dynamic_buses.push_back(i);
        }
    }
    const int nd = static_cast<int>(m.dynamic_buses.size());
    const int ng = static_cast<int>(m.swing_buses.size());
    const int N = 2 * nd + 2 * ng;
    InjectionJacobian J = injection_jacobian(net, eq);

    m.a_matrix = Eigen::MatrixXd::Zero(N, N);
    m.b_matrix = Eigen::MatrixXd::Zero(N, 2 * nd);
    auto acol = [&](int dense) { return m.angle_state(dense); };
    auto vcol = [&](int dense) { return m.vmag_state(dense); };

    for (int a = 0; a < nd; ++a) {
        const int i = m.dynamic_buses[a];
        const Bus& bi = net.buses()[i];
        for (int j = 0; j < n; ++j) {
            if (J.pd(i, j) == 0 && J.pv(i, j) == 0 && J.qd(i, j) == 0 && J.qv(i, j) == 0)
                continue;
            const int ac = acol(j);
            if (ac >= 0) {
                m.a_matrix(a, ac) -= J.pd(i, j) / bi.tau_p;
                m.a_matrix(nd + a, ac) -= J.qd(i, j) / bi.tau_q;
            }
            const int vc = vcol(j);
            if (vc >= 0) {
                m.a_matrix(a, vc) -= J.pv(i, j) / bi.tau_p;
                m.a_matrix(nd + a, vc) -= J.qv(i, j) / bi.tau_q;
            }
        }
        m.b_matrix(a, a) = bi.static_p * bi.sigma_p / bi.tau_p;
        m.b_matrix(nd + a, nd + a) = bi.static_q * bi.sigma_q / bi.tau_q;
    }
    for (int g = 0; g < ng; ++g) {
        const int i = m.swing_buses[g];
        const Bus& bi = net.buses()[i];
        const int arow = 2 * nd + g;
        const int wrow = 2 * nd + ng + g;
        m.a_matrix(arow, wrow) = 1.0;
        for (int j = 0; j < n; ++j) {
            if (J.pd(i, j) == 0 && J.pv(i, j) == 0) continue;
            const int ac = acol(j);
            if (ac >= 0) m.a_matrix(wrow, ac) -= J.pd(i, j) / *bi.gen_inertia;
            const int vc = vcol(j);
            if (vc >= 0) m.a_matrix(wrow, vc) -= J.pv(i, j) / *bi.gen_inertia;
        }
        m.a_matrix(wrow, wrow) = -*bi.gen_damping / *bi.gen_inertia;
    }
    return m;
}

Trajectory simulate_linearized(const NetworkModel& net, const StateVector& eq,
                               const DiscreteOU& dou, const FullLinearModel& model,
                               int n_samples, double dt, std::uint64_t seed) {
    const int n = net.bus_count();
    const int N = model.state_dim();
    const int nd = static_cast<int>(model.dynamic_buses.size());
    Rng rng(seed);
    Eigen::VectorXd w(N), x(N);
    for (int i = 0; i < N; ++i) w[i] = rng.normal();
    x = dou.stationary_chol * w;

    Trajectory traj;
    traj.dt = dt;
    traj.start_time = dt;
    traj.bus_ids.reserve(n);
    for (const Bus& b : net.buses()) traj.bus_ids.push_back(b.id);
    traj.angle.resize(n_samples, n);
    traj.vmag.resize(n_samples, n);

    for (int t = 0; t < n_samples; ++t) {
        for (int i = 0; i < N; ++i) w[i] = rng.normal();
        x = dou.phi * x + dou.noise_chol * w;
        traj.angle.row(t) = eq.angle.transpose();
        traj.vmag.row(t) = eq.vmag.transpose();
        for (int a = 0; a < nd; ++a) {
            traj.angle(t, model.dynamic_buses[a]) += x[a];
            traj.vmag(t, model.dynamic_buses[a]) += x[nd + a];
        }
        for (size_t g = 0; g < model.swing_buses.size(); ++g)
            traj.angle(t, model.swing_buses[g]) += x[2 * nd + static_cast<int>(g)];
    }
    return traj;
}

}  // namespace fdia
