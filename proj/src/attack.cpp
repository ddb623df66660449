#include "fdia/attack.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>

namespace fdia {

namespace {

// Flow at the i-side of line (i,j) with explicit parameters.
PQ flow_with(double g, double b, const Phasor& pi, const Phasor& pj) {
    const double dij = pi.delta - pj.delta;
    const double c = std::cos(dij), s = std::sin(dij);
    PQ out;
    out.p = pi.v * pi.v * g - pi.v * pj.v * (g * c + b * s);
    out.q = -pi.v * pi.v * b - pi.v * pj.v * (g * s - b * c);
    return out;
}

}  // namespace

MaliciousState complete_malicious_state(const AttackRegion& region,
                                        const RegionParams& params,
                                        const PhasorMap& base,
                                        const Phasor& target_phasor) {
    MaliciousState out;
    for (int bus : region.omega_a) {
        auto it = base.find(bus);
        if (it == base.end())
            throw AttackError("base phasor missing for bus " + std::to_string(bus));
        out.phasors[bus] = it->second;
    }
    out.phasors[region.target] = target_phasor;
    out.target_out_of_bounds = target_phasor.v < 0.5 || target_phasor.v > 1.5;

    // zero-injection unknowns (interior by construction)
    std::vector<int> zi;
    for (int bus : region.omega_a)
        if (!region.omega_c.count(bus)) zi.push_back(bus);
    if (zi.empty()) return out;

    // neighbor lists inside L_A
    std::map<int, std::vector<int>> nbrs;
    for (const auto& [i, j] : region.l_a) nbrs[i].push_back(j);

    const int m = static_cast<int>(zi.size());
    std::map<int, int> slot;
    for (int k = 0; k < m; ++k) slot[zi[k]] = k;

    Eigen::VectorXd f(2 * m);
    Eigen::MatrixXd J(2 * m, 2 * m);
    for (int it = 0; it < 50; ++it) {
        f.setZero();
        J.setZero();
        for (int k = 0; k < m; ++k) {
            const int z = zi[k];
            const Phasor& pz = out.phasors[z];
            for (int j : nbrs[z]) {
                const double g = params.g(z, j);
                const double b = params.b(z, j);
                const Phasor& pj = out.phasors[j];
                PQ s = flow_with(g, b, pz, pj);
                f[2 * k] += s.p;
                f[2 * k + 1] += s.q;
                const double dij = pz.delta - pj.delta;
                const double c = std::cos(dij), sn = std::sin(dij);
                const double gs_bc = g * sn - b * c;
                const double gc_bs = g * c + b * sn;
                // own-state partials
                J(2 * k, 2 * k) += pz.v * pj.v * gs_bc;                  // dP/dd_z
                J(2 * k, 2 * k + 1) += 2 * pz.v * g - pj.v * gc_bs;      // dP/dV_z
                J(2 * k + 1, 2 * k) += -pz.v * pj.v * gc_bs;             // dQ/dd_z
                J(2 * k + 1, 2 * k + 1) += -2 * pz.v * b - pj.v * gs_bc; // dQ/dV_z
                auto js = slot.find(j);
                if (js != slot.end()) {
                    const int kj = js->second;
                    J(2 * k, 2 * kj) += -pz.v * pj.v * gs_bc;
                    J(2 * k, 2 * kj + 1) += -pz.v * gc_bs;
                    J(2 * k + 1, 2 * kj) += pz.v * pj.v * gc_bs;
                    J(2 * k + 1, 2 * kj + 1) += -pz.v * gs_bc;
                }
            }
        }
        if (f.cwiseAbs().maxCoeff() < 1e-10) {
            out.newton_iterations = it;
            for (int z : zi) {
                const double v = out.phasors[z].v;
                if (v < 0.5 || v > 1.5)
                    throw AttackError("zero-injection completion left bus " +
                                      std::to_string(z) + " outside [0.5, 1.5] pu");
            }
            return out;
        }
        Eigen::VectorXd dx = J.partialPivLu().solve(f);
        for (int k = 0; k < m; ++k) {
            out.phasors[zi[k]].delta -= dx[2 * k];
            out.phasors[zi[k]].v -= dx[2 * k + 1];
        }
    }
    throw AttackError("zero-injection completion did not converge in 50 iterations");
}

Eigen::VectorXd AttackVector::dense(int measurement_count) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(measurement_count);
    for (const auto& [idx, d] : rtu_deltas) a[idx] = d;
    return a;
}

bool AttackVector::is_zero(double tol) const {
    for (const auto& [idx, d] : rtu_deltas)
        if (std::abs(d) > tol) return false;
    return true;
}

AttackVector build_attack_vector(const NetworkModel& net, const AttackRegion& region,
                                 const RegionParams& params, const PhasorMap& base,
                                 const std::map<int, PQ>& base_injections,
                                 const PhasorMap& malicious) {
    AttackVector out;
    for (int bus : region.omega_a) {
        if (!malicious.count(bus))
            throw AttackError("malicious phasor missing for bus " + std::to_string(bus));
        if (!base.count(bus))
            throw AttackError("base phasor missing for bus " + std::to_string(bus));
    }
    const Phasor& t0 = base.at(region.target);
    const Phasor& t1 = malicious.at(region.target);
    out.intended_dv = t1.v - t0.v;
    out.intended_ddelta = t1.delta - t0.delta;

    std::map<int, PQ> inj_delta;  // accumulated flow deltas per bus
    for (const auto& [i, j] : region.l_a) {
        const double g = params.g(i, j);
        const double b = params.b(i, j);
        PQ f0 = flow_with(g, b, base.at(i), base.at(j));
        PQ f1 = flow_with(g, b, malicious.at(i), malicious.at(j));
        auto li = net.line_between(i, j);
        if (!li)
            throw AttackError("region line " + std::to_string(i) + "-" +
                              std::to_string(j) + " is not a network line");
        const bool forward = net.lines()[*li].from == i;
        out.rtu_deltas[meas_index_p_flow(net, *li, forward)] = f1.p - f0.p;
        out.rtu_deltas[meas_index_q_flow(net, *li, forward)] = f1.q - f0.q;
        inj_delta[i].p += f1.p - f0.p;
        inj_delta[i].q += f1.q - f0.q;
    }
    for (int k : region.omega_c) {
        const int ki = net.index_of(k);
        out.rtu_deltas[meas_index_p_injection(net, ki)] = inj_delta[k].p;
        out.rtu_deltas[meas_index_q_injection(net, ki)] = inj_delta[k].q;
    }

    // PMU overrides: forged injections via Eq-(7)/(8) increments on the
    // attacker's own PMU-derived base injections.
    for (int bus : region.omega_a) {
        auto bi = base_injections.find(bus);
        if (bi == base_injections.end())
            throw AttackError("base injection missing for bus " + std::to_string(bus));
        const Phasor& ph = malicious.at(bus);
        PQ forged{bi->second.p + inj_delta[bus].p, bi->second.q + inj_delta[bus].q};
        PmuOverride ov;
        ov.has_voltage = !region.omega_b.count(bus);
        ov.v = ph.v;
        ov.delta = ph.delta;
        ov.i = std::hypot(forged.p, forged.q) / ph.v;
        ov.theta = ph.delta - std::atan2(forged.q, forged.p);
        out.pmu_overrides[bus] = ov;
    }
    return out;
}

std::pair<RtuMeasurementSet, PmuSeries> apply_attack(const RtuMeasurementSet& z,
                                                     const PmuSeries& pmu,
                                                     const AttackVector& a) {
    RtuMeasurementSet z_bad = z;
    for (const auto& [idx, d] : a.rtu_deltas) {
        if (idx < 0 || idx >= z_bad.values.size())
            throw AttackError("attack delta index " + std::to_string(idx) +
                              " out of range");
        z_bad.values[idx] += d;
    }
    PmuSeries pmu_bad = pmu;
    const int t = pmu_bad.n_samples - 1;
    for (size_t k = 0; k < pmu_bad.bus_ids.size(); ++k) {
        auto ov = a.pmu_overrides.find(pmu_bad.bus_ids[k]);
        if (ov == a.pmu_overrides.end()) continue;
        PmuChannel& ch = pmu_bad.channels[k];
        if (ov->second.has_voltage) {
            ch.v[t] = ov->second.v;
            ch.delta[t] = ov->second.delta;
        }
        ch.i[t] = ov->second.i;
        ch.theta[t] = ov->second.theta;
    }
    return {std::move(z_bad), std::move(pmu_bad)};
}

PerfectConditionReport verify_perfect_conditions(const NetworkModel& net,
                                                 const AttackRegion& region,
                                                 const RegionParams& params,
                                                 const EstimatorOptions& opts,
                                                 double dv_target) {
    PerfectConditionReport rep;
    rep.jacobian_frozen = opts.method == EstimationMethod::DishonestGaussNewton;

    const StateVector eq = solve_power_flow(net);
    Eigen::MatrixXd Hfull = jacobian(net, eq);

    // measurement rows in use
    std::vector<int> rows;
    if (opts.measurement_mask.empty()) {
        rows.resize(measurement_count(net));
        for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    } else {
        rows = opts.measurement_mask;
    }
    Eigen::MatrixXd H(rows.size(), state_count(net));
    for (size_t r = 0; r < rows.size(); ++r) H.row(r) = Hfull.row(rows[r]);
    rep.h_rows = static_cast<int>(H.rows());
    rep.h_cols = static_cast<int>(H.cols());
    rep.h_square = rep.h_rows == rep.h_cols;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
    rep.h_full_rank = qr.rank() == std::min(rep.h_rows, rep.h_cols);

    // build the attack for a target-magnitude perturbation of dv_target
    PhasorMap base;
    std::map<int, PQ> base_inj;
    for (int bus : region.omega_a) {
        const int i = net.index_of(bus);
        base[bus] = {eq.vmag[i], eq.angle[i]};
        base_inj[bus] = power_injection(net, eq, bus);
    }
    Phasor target = base.at(region.target);
    target.v += dv_target;
    MaliciousState mal = complete_malicious_state(region, params, base, target);
    AttackVector av =
        build_attack_vector(net, region, params, base, base_inj, mal.phasors);
    Eigen::VectorXd a_full = av.dense(measurement_count(net));
    Eigen::VectorXd a(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) a[r] = a_full[rows[r]];

    // intended state change c (target and solved zero-injection buses)
    const int n = net.bus_count();
    const int ref = net.reference_index();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(state_count(net));
    for (const auto& [bus, ph] : mal.phasors) {
        const int i = net.index_of(bus);
        if (i != ref) c[i < ref ? i : i - 1] = ph.delta - eq.angle[i];
        c[n - 1 + i] = ph.v - eq.vmag[i];
    }

    const double anorm = a.cwiseAbs().maxCoeff();
    rep.linearity_proxy = anorm > 0 ? (a - H * c).cwiseAbs().maxCoeff() / anorm : 0.0;

    // projector residual terms
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H.transpose() * H);
    auto project_out = [&](const Eigen::VectorXd& v) {
        return (v - H * ldlt.solve(H.transpose() * v)).eval();
    };
    // intruder-side Jacobian with the region parameters swapped in
    std::vector<Line> lines = net.lines();
    for (auto& l : lines) {
        const auto key = std::minmax(l.from, l.to);
        if (params.g_hat.count(key)) {
            l.g = params.g_hat.at(key);
            l.b = params.b_hat.at(key);
        }
    }
    NetworkModel net_hat(net.buses(), std::move(lines), net.reference_bus_id(),
                         net.base_mva());
    Eigen::MatrixXd Hhat_full = jacobian(net_hat, eq);
    Eigen::VectorXd hc(rows.size());
    Eigen::VectorXd hc_full = Hhat_full * c;
    for (size_t r = 0; r < rows.size(); ++r) hc[r] = hc_full[rows[r]];
    rep.residual_bound = project_out(hc).cwiseAbs().maxCoeff();
    rep.residual_bound_nonlinear = project_out(a).cwiseAbs().maxCoeff();
    return rep;
}

std::string attack_vector_to_json(const AttackVector& a) {
    nlohmann::json doc;
    doc["rtu_deltas"] = nlohmann::json::array();
    for (const auto& [idx, d] : a.rtu_deltas)
        doc["rtu_deltas"].push_back({{"index", idx}, {"delta", d}});
    doc["pmu_overrides"] = nlohmann::json::array();
    for (const auto& [bus, ov] : a.pmu_overrides) {
        nlohmann::json o{{"bus", bus}, {"i", ov.i}, {"theta", ov.theta}};
        if (ov.has_voltage) {
            o["v"] = ov.v;
            o["delta"] = ov.delta;
        }
        doc["pmu_overrides"].push_back(o);
    }
    doc["intended_c"] = {{"dv", a.intended_dv}, {"ddelta", a.intended_ddelta}};
    return doc.dump(2);
}

}  // namespace fdia
