#pragma once

// Defender-side AC state estimation and bad data detection.

#include "fdia/measurement.hpp"
#include "fdia/network.hpp"
#include "fdia/power_flow.hpp"

#include <optional>

namespace fdia {

enum class EstimationMethod { GaussNewton, DishonestGaussNewton, Mes };

struct EstimatorOptions {
    EstimationMethod method = EstimationMethod::GaussNewton;
    double tol_step = 1e-8;
    int max_iter = 50;
    bool flat_start = true;
    std::optional<StateVector> warm_start;  // diagnostics only
    double mes_window = 0.5;     // robust kernel width
    bool include_pmu = false;
    double pmu_weight = 10.0;
    // optional measurement subset (indices into the RTU vector); empty = all
    std::vector<int> measurement_mask;
};

struct EstimationResult {
    StateVector x_hat;
    double residual_inf = 0.0;  // over the measurement set used
    bool converged = false;
    int iterations = 0;
    std::vector<double> step_norms;
};

class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& w) : std::runtime_error(w) {}
};

/// Gauss-Newton WLS (or variants). `pmu` appends voltage and injection
/// current phasor rows with weight pmu_weight when include_pmu is set.
EstimationResult estimate(const NetworkModel& net, const RtuMeasurementSet& z,
                          const std::optional<PmuSnapshot>& pmu,
                          const EstimatorOptions& opts = {});

/// max_i |z_i - h_i(x)|
double residual_inf(const NetworkModel& net, const Eigen::VectorXd& z,
                    const StateVector& x);

enum class BddVerdict { Normal, BadData };

/// Normal iff r < gamma (strict).
BddVerdict bdd_check(double r, double gamma);

/// Empirical quantile with linear interpolation between order statistics.
double select_threshold(std::vector<double> residual_samples, double quantile);

/// JSON with fields mirroring EstimationResult.
std::string estimation_result_to_json(const EstimationResult& res);

}  // namespace fdia
