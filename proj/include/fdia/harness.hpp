#pragma once

// End-to-end trial pipeline and Monte Carlo campaigns: simulate ambient
// dynamics, identify region parameters from PMU data, synthesize and apply
// the attack, run defender estimation, aggregate bypass statistics.

#include "fdia/attack.hpp"
#include "fdia/dynamics.hpp"
#include "fdia/estimation.hpp"
#include "fdia/measurement.hpp"
#include "fdia/ou_inference.hpp"

#include <optional>

namespace fdia {

enum class SimEngine { Linear, Nonlinear };

struct AttackSpec {
    std::optional<double> v_factor;        // Vt -> factor * Vt
    std::optional<double> v_abs;           // Vt -> absolute magnitude, pu
    std::optional<double> delta_abs_deg;   // dt -> absolute angle, degrees
    std::optional<double> delta_offset_deg;
};

struct ExperimentConfig {
    std::string case_path;
    int target_bus = 28;
    AttackSpec attack;

    struct {
        SimEngine engine = SimEngine::Linear;
        double duration_s = 300.0;
        double dt_s = 1.0 / 600.0;   // nonlinear integration step
    } sim;

    struct {
        double rate_hz = 60.0;
        int n_samples = 18000;       // N for the correlation stats
        int n_small = 10;            // time-constant window
        PmuNoiseSpec noise{PmuNoiseSpec::Mode::StateChangeRelative, 0.10};
    } pmu;

    double lag_seconds = 0.1;
    double rtu_noise_std = 0.05;

    EstimatorOptions estimator;
    std::vector<int> defender_pmu_buses;   // used when estimator.include_pmu

    struct {
        double quantile = 0.95;
        int base_trials = 1000;
        double fixed_gamma = 0.0;          // >0 pins gamma
    } bdd;

    int trials = 1000;
    std::uint64_t master_seed = 1;
    bool use_true_params = false;
    bool reuse_estimate = false;  // one parameter estimate shared by all trials
    int workers = 0;              // 0 = hardware concurrency

    void validate() const;
};

struct TrialResult {
    std::uint64_t seed = 0;
    double r_pre = 0.0;
    double r_post = 0.0;
    bool bypassed = false;
    double est_target_v = 0.0;       // defender's post-attack estimate
    double est_target_delta = 0.0;   // rad
    double v_err = 0.0;              // |est - intended|
    double delta_err = 0.0;          // rad
    RegionParams params_used;
    std::string error;               // nonempty when a stage failed
};

struct SuccessStats {
    double p_bypass = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // Wilson 95%
    double gamma = 0.0;
    int trials = 0;
    int failed_trials = 0;
    std::vector<TrialResult> results;  // ordered by trial index
};

/// Shared per-case precomputation (power flow, linearization, propagator).
class CaseContext {
public:
    CaseContext(NetworkModel net, double rate_hz);
    const NetworkModel& net() const { return net_; }
    const StateVector& equilibrium() const { return eq_; }
    const FullLinearModel& linear_model() const { return model_; }
    const DiscreteOU& propagator() const { return dou_; }
    double rate_hz() const { return rate_hz_; }

private:
    NetworkModel net_;
    StateVector eq_;
    FullLinearModel model_;
    DiscreteOU dou_;
    double rate_hz_;
};

/// Algorithm steps 1-7 for one seed. `shared_params` (from reuse_estimate)
/// replaces the identification stage when provided.
TrialResult run_trial(const ExperimentConfig& cfg, const CaseContext& ctx,
                      std::uint64_t seed,
                      const RegionParams* shared_params = nullptr);

/// Clean-measurement residual (base case) for threshold selection.
double base_case_residual(const ExperimentConfig& cfg, const CaseContext& ctx,
                          std::uint64_t seed);

SuccessStats run_monte_carlo(const ExperimentConfig& cfg);

/// Variant with an injected case (bypasses cfg.case_path), for experiments
/// that modify bus parameters relative to a bundled case.
SuccessStats run_monte_carlo(const ExperimentConfig& cfg, NetworkModel net);

/// Wilson 95% interval for k successes of n.
std::pair<double, double> wilson_interval(int successes, int n);

/// JSON summary + per-trial CSV (seed,r_pre,r_post,bypassed,v_err,delta_err).
void export_results(const SuccessStats& stats, const std::string& json_path,
                    const std::string& csv_path);
SuccessStats import_results(const std::string& json_path);

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace fdia
