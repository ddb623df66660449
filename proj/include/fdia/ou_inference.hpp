#pragma once

// Attacker-side system identification from PMU data: lag-correlation
// statistics, matrix-log recovery of the state matrix, and WLS estimation of
// time constants and line parameters.

#include "fdia/measurement.hpp"
#include "fdia/region.hpp"

#include <map>

namespace fdia {

struct OUEstimate {
    Eigen::MatrixXd a_hat;      // empty until estimate_a
    Eigen::MatrixXd c0;         // sample covariance
    Eigen::MatrixXd c_lag;      // lag correlation matrix
    double lag_seconds = 0.0;
    int n_samples = 0;
    std::vector<int> bus_ordering;          // state stacking [deltas; vmags]
    Eigen::VectorXd mean;                   // sample mean of the stacked state

    // data-quality diagnostics from estimate_a
    bool ratio_unstable = false;            // eigenvalue modulus >= 1
    bool log_branch_warning = false;        // eigenvalue near negative real axis
    double imag_ratio = 0.0;                // ||imag||_F / ||real||_F of the log
};

class InferenceError : public std::runtime_error {
public:
    explicit InferenceError(const std::string& w) : std::runtime_error(w) {}
};

/// Sample mean, covariance and K-lag correlation matrix of the stacked
/// [angles; magnitudes] state over the series' buses.
OUEstimate sample_stats(const PmuSeries& series, int lag_samples);

/// Principal matrix logarithm of C(dt) C(0)^{-1} divided by dt. Degenerate
/// C(0) throws; unstable-ratio and branch-cut conditions are reported via
/// the diagnostics fields, not patched.
Eigen::MatrixXd estimate_a(OUEstimate& est);

/// Principal matrix logarithm via complex eigendecomposition (real part,
/// with the imaginary Frobenius mass reported).
Eigen::MatrixXd principal_log(const Eigen::MatrixXd& m, double* imag_ratio = nullptr,
                              bool* branch_warning = nullptr);

/// P,Q series from voltage and current phasors, S = (V angle d)(I angle th)^*.
struct PqSeries {
    Eigen::VectorXd p, q;
};
PqSeries injections_from_pmu(const PmuSeries& series, int bus_id);

/// beta = (X' W X)^{-1} X' W Y; throws on rank deficiency.
Eigen::VectorXd wls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                          const Eigen::VectorXd& w_diag);

struct TimeConstants {
    double tau_p = 0.0;
    double tau_q = 0.0;
    bool valid_p = false;  // false when the regressed rate is non-positive
    bool valid_q = false;
};

/// Finite-difference regression of 1/tau over the last n_small samples,
/// with the full-window mean injection as the static-power surrogate.
TimeConstants estimate_time_constants(const PmuSeries& series, int bus_id, int n_small);

struct RegionParams {
    // per unordered line {i,j}, key (min,max)
    std::map<std::pair<int, int>, double> g_hat, b_hat;
    std::map<int, double> tau_p_hat, tau_q_hat;  // interior buses

    double g(int i, int j) const { return g_hat.at(std::minmax(i, j)); }
    double b(int i, int j) const { return b_hat.at(std::minmax(i, j)); }
};

/// Un-scale interior-bus rows of a_hat by the estimated time constants and
/// regress (G, B) per directed line; directions are averaged.
RegionParams estimate_line_params(const Eigen::MatrixXd& a_hat,
                                  const std::map<int, TimeConstants>& taus,
                                  const Eigen::VectorXd& mean_vmag,
                                  const Eigen::VectorXd& mean_angle,
                                  const std::vector<int>& bus_ordering,
                                  const AttackRegion& region);

/// Ground-truth RegionParams from the case (ablation path).
RegionParams true_region_params(const NetworkModel& net, const AttackRegion& region);

std::string region_params_to_json(const RegionParams& p);
RegionParams region_params_from_json(const std::string& text);

}  // namespace fdia
