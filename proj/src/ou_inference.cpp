#include "fdia/ou_inference.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <json.hpp>

namespace fdia {

OUEstimate sample_stats(const PmuSeries& series, int lag_samples) {
    if (lag_samples < 1) throw InferenceError("lag must be positive");
    const int N = series.n_samples;
    if (N <= lag_samples) throw InferenceError("series shorter than the lag");
    const int k = static_cast<int>(series.bus_ids.size());
    const int m = 2 * k;

    Eigen::MatrixXd F(m, N);  // stacked state per sample
    for (int c = 0; c < k; ++c) {
        F.row(c) = series.channels[c].delta.transpose();
        F.row(k + c) = series.channels[c].v.transpose();
    }
    OUEstimate est;
    est.bus_ordering = series.bus_ids;
    est.n_samples = N;
    est.lag_seconds = lag_samples / series.rate_hz;
    est.mean = F.rowwise().mean();
    Eigen::MatrixXd Fc = F.colwise() - est.mean;
    est.c0 = Fc * Fc.transpose() / (N - 1.0);
    est.c_lag = Fc.rightCols(N - lag_samples) * Fc.leftCols(N - lag_samples).transpose() /
                (N - 1.0);
    // degenerate (constant) series
    if (est.c0.diagonal().minCoeff() < 1e-24)
        throw InferenceError("degenerate covariance: constant channel in the series");
    return est;
}

Eigen::MatrixXd principal_log(const Eigen::MatrixXd& m, double* imag_ratio,
                              bool* branch_warning) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw InferenceError("eigendecomposition failed in matrix log");
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd V = es.eigenvectors();
    bool branch = false;
    Eigen::VectorXcd loglam(lam.size());
    for (int i = 0; i < lam.size(); ++i) {
        const std::complex<double> l = lam[i];
        if (std::abs(l) < 1e-300)
            throw InferenceError("singular ratio matrix in matrix log");
        if (l.real() < 0 && std::abs(l.imag()) < 1e-12 * std::abs(l.real()))
            branch = true;  // on the negative real axis: principal branch cut
        loglam[i] = std::log(l);
    }
    Eigen::MatrixXcd L = V * loglam.asDiagonal() * V.inverse();
    if (imag_ratio) {
        const double re = L.real().norm();
        *imag_ratio = re > 0 ? L.imag().norm() / re : 0.0;
    }
    if (branch_warning) *branch_warning = branch;
    return L.real();
}

Eigen::MatrixXd estimate_a(OUEstimate& est) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(est.c0);
    const double smin = svd.singularValues().tail(1)(0);
    const double smax = svd.singularValues()(0);
    if (smin <= 0 || smax / smin > 1e12)
        throw InferenceError("C(0) is singular (condition " +
                             std::to_string(smax / std::max(smin, 1e-300)) + ")");
    Eigen::MatrixXd ratio = est.c_lag * est.c0.inverse();
    Eigen::EigenSolver<Eigen::MatrixXd> es(ratio, false);
    est.ratio_unstable = false;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()[i]) >= 1.0) est.ratio_unstable = true;
    est.a_hat =
        principal_log(ratio, &est.imag_ratio, &est.log_branch_warning) / est.lag_seconds;
    return est.a_hat;
}

PqSeries injections_from_pmu(const PmuSeries& series, int bus_id) {
    const PmuChannel& ch = series.channel(bus_id);
    PqSeries out;
    out.p.resize(series.n_samples);
    out.q.resize(series.n_samples);
    for (int t = 0; t < series.n_samples; ++t) {
        const double ang = ch.delta[t] - ch.theta[t];
        const double s = ch.v[t] * ch.i[t];
        out.p[t] = s * std::cos(ang);
        out.q[t] = s * std::sin(ang);
    }
    return out;
}

Eigen::VectorXd wls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                          const Eigen::VectorXd& w_diag) {
    if (X.rows() != Y.size() || X.rows() != w_diag.size())
        throw InferenceError("wls dimensions inconsistent");
    if (X.rows() < X.cols()) throw InferenceError("wls underdetermined");
    Eigen::MatrixXd XtWX = X.transpose() * w_diag.asDiagonal() * X;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XtWX);
    if (qr.rank() < X.cols())
        throw InferenceError("wls design rank deficient (effective rank " +
                             std::to_string(qr.rank()) + " of " +
                             std::to_string(X.cols()) + ")");
    return qr.solve(X.transpose() * (w_diag.asDiagonal() * Y));
}

TimeConstants estimate_time_constants(const PmuSeries& series, int bus_id, int n_small) {
    if (n_small < 2) throw InferenceError("time-constant window needs >= 2 samples");
    const PmuChannel& ch = series.channel(bus_id);
    const int N = series.n_samples;
    if (n_small > N) throw InferenceError("time-constant window longer than series");
    const PqSeries pq = injections_from_pmu(series, bus_id);
    const double rate = series.rate_hz;
    const double mu_p = pq.p.mean();
    const double mu_q = pq.q.mean();
    const int start = N - n_small;
    const int rows = n_small - 1;
    Eigen::MatrixXd Xp(rows, 1), Xq(rows, 1);
    Eigen::VectorXd Yp(rows), Yq(rows);
    for (int j = 0; j < rows; ++j) {
        Yp[j] = (ch.delta[start + j + 1] - ch.delta[start + j]) * rate;
        Xp(j, 0) = mu_p - pq.p[start + j];
        Yq[j] = (ch.v[start + j + 1] - ch.v[start + j]) * rate;
        Xq(j, 0) = mu_q - pq.q[start + j];
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(rows);
    TimeConstants tc;
    const double inv_tp = wls_solve(Xp, Yp, w)(0);
    const double inv_tq = wls_solve(Xq, Yq, w)(0);
    tc.valid_p = inv_tp > 0;
    tc.valid_q = inv_tq > 0;
    tc.tau_p = tc.valid_p ? 1.0 / inv_tp : 0.0;
    tc.tau_q = tc.valid_q ? 1.0 / inv_tq : 0.0;
    return tc;
}

RegionParams estimate_line_params(const Eigen::MatrixXd& a_hat,
                                  const std::map<int, TimeConstants>& taus,
                                  const Eigen::VectorXd& mean_vmag,
                                  const Eigen::VectorXd& mean_angle,
                                  const std::vector<int>& bus_ordering,
                                  const AttackRegion& region) {
    const int k = static_cast<int>(bus_ordering.size());
    if (a_hat.rows() != 2 * k || a_hat.cols() != 2 * k)
        throw InferenceError("a_hat dimensions do not match the bus ordering");
    auto pos_of = [&](int bus_id) {
        for (int c = 0; c < k; ++c)
            if (bus_ordering[c] == bus_id) return c;
        throw InferenceError("bus " + std::to_string(bus_id) + " not in ordering");
    };

    // per-direction estimates, then average over directions
    std::map<std::pair<int, int>, std::vector<std::array<double, 2>>> collected;
    for (const auto& [i, j] : region.l_a) {
        if (region.omega_b.count(i)) continue;  // boundary rows discarded
        auto it = taus.find(i);
        if (it == taus.end() || !it->second.valid_p || !it->second.valid_q)
            throw InferenceError("missing or invalid time constants for bus " +
                                 std::to_string(i));
        const double tp = it->second.tau_p;
        const double tq = it->second.tau_q;
        const int ii = pos_of(i), jj = pos_of(j);
        const double j_pd = -tp * a_hat(ii, jj);
        const double j_pv = -tp * a_hat(ii, k + jj);
        const double j_qd = -tq * a_hat(k + ii, jj);
        const double j_qv = -tq * a_hat(k + ii, k + jj);
        const double vi = mean_vmag[ii], vj = mean_vmag[jj];
        const double dij = mean_angle[ii] - mean_angle[jj];
        const double s = std::sin(dij), c = std::cos(dij);
        Eigen::MatrixXd X(4, 2);
        X << -vi * vj * s, vi * vj * c,
             -vi * c,      -vi * s,
             vi * vj * c,  vi * vj * s,
             -vi * s,      vi * c;
        Eigen::VectorXd Y(4);
        Y << j_pd, j_pv, j_qd, j_qv;
        Eigen::VectorXd beta = wls_solve(X, Y, Eigen::VectorXd::Ones(4));
        collected[std::minmax(i, j)].push_back({beta[0], beta[1]});
    }

    RegionParams out;
    for (const auto& [key, vals] : collected) {
        double g = 0, b = 0;
        for (const auto& v : vals) {
            g += v[0];
            b += v[1];
        }
        out.g_hat[key] = g / vals.size();
        out.b_hat[key] = b / vals.size();
    }
    for (const auto& [bus, tc] : taus) {
        out.tau_p_hat[bus] = tc.tau_p;
        out.tau_q_hat[bus] = tc.tau_q;
    }
    return out;
}

RegionParams true_region_params(const NetworkModel& net, const AttackRegion& region) {
    RegionParams out;
    for (const auto& [i, j] : region.l_a) {
        auto li = net.line_between(i, j);
        if (!li) continue;
        const Line& l = net.lines()[*li];
        out.g_hat[std::minmax(i, j)] = l.g;
        out.b_hat[std::minmax(i, j)] = l.b;
    }
    for (int bus : region.interior()) {
        const Bus& b = net.bus(bus);
        out.tau_p_hat[bus] = b.tau_p;
        out.tau_q_hat[bus] = b.tau_q;
    }
    return out;
}

std::string region_params_to_json(const RegionParams& p) {
    nlohmann::json doc;
    auto dump_lines = [](const std::map<std::pair<int, int>, double>& m) {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [key, v] : m)
            obj[std::to_string(key.first) + "-" + std::to_string(key.second)] = v;
        return obj;
    };
    doc["g_hat"] = dump_lines(p.g_hat);
    doc["b_hat"] = dump_lines(p.b_hat);
    doc["tau_p_hat"] = nlohmann::json::object();
    doc["tau_q_hat"] = nlohmann::json::object();
    for (const auto& [bus, v] : p.tau_p_hat) doc["tau_p_hat"][std::to_string(bus)] = v;
    for (const auto& [bus, v] : p.tau_q_hat) doc["tau_q_hat"][std::to_string(bus)] = v;
    return doc.dump(2);
}

RegionParams region_params_from_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    RegionParams p;
    auto parse_key = [](const std::string& s) {
        const auto dash = s.find('-');
        return std::make_pair(std::stoi(s.substr(0, dash)), std::stoi(s.substr(dash + 1)));
    };
    for (auto it = doc.at("g_hat").begin(); it != doc.at("g_hat").end(); ++it)
        p.g_hat[parse_key(it.key())] = it.value().get<double>();
    for (auto it = doc.at("b_hat").begin(); it != doc.at("b_hat").end(); ++it)
        p.b_hat[parse_key(it.key())] = it.value().get<double>();
    for (auto it = doc.at("tau_p_hat").begin(); it != doc.at("tau_p_hat").end(); ++it)
        p.tau_p_hat[std::stoi(it.key())] = it.value().get<double>();
    for (auto it = doc.at("tau_q_hat").begin(); it != doc.at("tau_q_hat").end(); ++it)
        p.tau_q_hat[std::stoi(it.key())] = it.value().get<double>();
    return p;
}

}  // namespace fdia
