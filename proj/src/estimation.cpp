#include "fdia/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace fdia {

namespace {

struct AugmentedModel {
    std::vector<int> rtu_rows;            // indices into the RTU vector
    std::vector<int> pmu_buses;           // dense indices
    Eigen::VectorXd z;                    // stacked target vector
    Eigen::VectorXd weight;               // per row

    int rows() const { return static_cast<int>(z.size()); }
};

AugmentedModel build_model(const NetworkModel& net, const RtuMeasurementSet& z,
                           const std::optional<PmuSnapshot>& pmu,
                           const EstimatorOptions& opts) {
    AugmentedModel m;
    const int m_rtu = static_cast<int>(z.values.size());
    if (opts.measurement_mask.empty()) {
        m.rtu_rows.resize(m_rtu);
        for (int i = 0; i < m_rtu; ++i) m.rtu_rows[i] = i;
    } else {
        m.rtu_rows = opts.measurement_mask;
        for (int r : m.rtu_rows)
            if (r < 0 || r >= m_rtu)
                throw EstimationError("measurement mask index out of range");
    }
    int extra = 0;
    if (opts.include_pmu && pmu) extra = 4 * static_cast<int>(pmu->phasors.size());
    m.z.resize(m.rtu_rows.size() + extra);
    m.weight.resize(m.z.size());
    int r = 0;
    for (int idx : m.rtu_rows) {
        m.z[r] = z.values[idx];
        m.weight[r] = 1.0;
        ++r;
    }
    if (opts.include_pmu && pmu) {
        for (const auto& [bus_id, ph] : pmu->phasors) {
            m.pmu_buses.push_back(net.index_of(bus_id));
            for (int c = 0; c < 4; ++c) {
                m.z[r] = ph[c];
                m.weight[r] = opts.pmu_weight;
                ++r;
            }
        }
    }
    return m;
}

// h and H rows of the augmented model at state x.
void eval_model(const NetworkModel& net, const AugmentedModel& m, const StateVector& x,
                Eigen::VectorXd& h, Eigen::MatrixXd* H) {
    const Eigen::VectorXd hz = measurement_function(net, x);
    Eigen::MatrixXd Hfull;
    if (H) Hfull = jacobian(net, x);
    const int n = net.bus_count();
    const int ref = net.reference_index();
    h.resize(m.rows());
    if (H) H->setZero(m.rows(), state_count(net));
    int r = 0;
    for (int idx : m.rtu_rows) {
        h[r] = hz[idx];
        if (H) H->row(r) = Hfull.row(idx);
        ++r;
    }
    for (int bi : m.pmu_buses) {
        const int bus_id = net.buses()[bi].id;
        const double v = x.vmag[bi];
        const double d = x.angle[bi];
        const PQ inj{hz[meas_index_p_injection(net, bi)], hz[meas_index_q_injection(net, bi)]};
        const double s2 = inj.p * inj.p + inj.q * inj.q;
        const double s = std::sqrt(s2);
        const int acol = bi == ref ? -1 : (bi < ref ? bi : bi - 1);
        const int vcol = n - 1 + bi;
        // V row
        h[r] = v;
        if (H) (*H)(r, vcol) = 1.0;
        ++r;
        // delta row
        h[r] = d;
        if (H && acol >= 0) (*H)(r, acol) = 1.0;
        ++r;
        // I = |S| / V
        h[r] = s / v;
        if (H) {
            if (s > 1e-9) {
                H->row(r) = (inj.p * Hfull.row(meas_index_p_injection(net, bi)) +
                             inj.q * Hfull.row(meas_index_q_injection(net, bi))) /
                            (v * s);
                (*H)(r, vcol) -= s / (v * v);
            }
        }
        ++r;
        // theta = delta - atan2(Q, P)
        h[r] = d - std::atan2(inj.q, inj.p);
        if (H) {
            if (s2 > 1e-18) {
                H->row(r) = (inj.q * Hfull.row(meas_index_p_injection(net, bi)) -
                             inj.p * Hfull.row(meas_index_q_injection(net, bi))) /
                            s2;
                if (acol >= 0) (*H)(r, acol) += 1.0;
            }
        }
        ++r;
    }
}

}  // namespace

EstimationResult estimate(const NetworkModel& net, const RtuMeasurementSet& z,
                          const std::optional<PmuSnapshot>& pmu,
                          const EstimatorOptions& opts) {
    const AugmentedModel model = build_model(net, z, pmu, opts);
    const int nstate = state_count(net);
    if (model.rows() < nstate && opts.measurement_mask.empty())
        throw EstimationError("underdetermined measurement set");

    StateVector x = opts.flat_start || !opts.warm_start
                        ? StateVector::flat(net.bus_count())
                        : *opts.warm_start;
    EstimationResult res;
    Eigen::VectorXd h;
    Eigen::MatrixXd H, H_frozen;
    const bool freeze = opts.method == EstimationMethod::DishonestGaussNewton;
    const bool mes = opts.method == EstimationMethod::Mes;

    // The exponential-square weights vanish for residuals far beyond the
    // kernel width, so IRLS only starts once a plain WLS pass has brought the
    // iterate near the data (flat-start residuals would zero every row).
    bool reweight = false;
    for (int it = 0; it < opts.max_iter; ++it) {
        const bool need_jac = !freeze || it == 0;
        eval_model(net, model, x, h, need_jac ? &H : nullptr);
        if (freeze && it == 0) H_frozen = H;
        const Eigen::MatrixXd& Huse = freeze ? H_frozen : H;

        Eigen::VectorXd w = model.weight;
        if (mes && reweight) {
            const double two_s2 = 2.0 * opts.mes_window * opts.mes_window;
            for (int r = 0; r < model.rows(); ++r) {
                const double ri = model.z[r] - h[r];
                w[r] *= std::exp(-ri * ri / two_s2);
            }
        }
        Eigen::MatrixXd HtWH = Huse.transpose() * w.asDiagonal() * Huse;
        Eigen::VectorXd HtWr = Huse.transpose() * (w.asDiagonal() * (model.z - h));
        Eigen::LDLT<Eigen::MatrixXd> ldlt(HtWH);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(HtWH);
            const double cond = svd.singularValues()(0) /
                                std::max(svd.singularValues().tail(1)(0), 1e-300);
            throw EstimationError("singular normal matrix (condition estimate " +
                                  std::to_string(cond) + ")");
        }
        Eigen::VectorXd dx = ldlt.solve(HtWr);
        apply_state_step(net, dx, x);
        const double step = dx.cwiseAbs().maxCoeff();
        res.step_norms.push_back(step);
        res.iterations = it + 1;
        if (step < opts.tol_step) {
            if (mes && !reweight) {
                reweight = true;  // warm start done, switch to IRLS
                continue;
            }
            res.converged = true;
            break;
        }
        if (mes && !reweight && (step < 1e-3 || it >= 9)) reweight = true;
    }
    res.x_hat = x;
    eval_model(net, model, x, h, nullptr);
    res.residual_inf = (model.z - h).cwiseAbs().maxCoeff();
    return res;
}

double residual_inf(const NetworkModel& net, const Eigen::VectorXd& z,
                    const StateVector& x) {
    Eigen::VectorXd h = measurement_function(net, x);
    if (h.size() != z.size()) throw EstimationError("measurement dimension mismatch");
    return (z - h).cwiseAbs().maxCoeff();
}

BddVerdict bdd_check(double r, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("gamma must be positive");
    return r < gamma ? BddVerdict::Normal : BddVerdict::BadData;
}

std::string estimation_result_to_json(const EstimationResult& res) {
    nlohmann::json doc;
    doc["x_hat"]["angle"] = std::vector<double>(
        res.x_hat.angle.data(), res.x_hat.angle.data() + res.x_hat.angle.size());
    doc["x_hat"]["vmag"] = std::vector<double>(
        res.x_hat.vmag.data(), res.x_hat.vmag.data() + res.x_hat.vmag.size());
    doc["residual_inf"] = res.residual_inf;
    doc["converged"] = res.converged;
    doc["iterations"] = res.iterations;
    doc["step_norms"] = res.step_norms;
    return doc.dump();
}

double select_threshold(std::vector<double> residual_samples, double quantile) {
    if (residual_samples.empty())
        throw std::invalid_argument("empty residual sample set");
    if (quantile <= 0 || quantile >= 1)
        throw std::invalid_argument("quantile must be in (0, 1)");
    std::sort(residual_samples.begin(), residual_samples.end());
    const double pos = quantile * (static_cast<double>(residual_samples.size()) - 1.0);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= residual_samples.size()) return residual_samples.back();
    const double frac = pos - static_cast<double>(lo);
    return residual_samples[lo] * (1.0 - frac) + residual_samples[lo + 1] * frac;
}

}  // namespace fdia
