#pragma once

// Malicious-state completion under zero-injection constraints, attack-vector
// assembly, and the perfect-attack condition report.

#include "fdia/estimation.hpp"
#include "fdia/measurement.hpp"
#include "fdia/ou_inference.hpp"
#include "fdia/region.hpp"

#include <map>

namespace fdia {

struct Phasor {
    double v = 0.0;
    double delta = 0.0;  // rad
};

using PhasorMap = std::map<int, Phasor>;  // bus id -> phasor

class AttackError : public std::runtime_error {
public:
    explicit AttackError(const std::string& w) : std::runtime_error(w) {}
};

/// Solve S_z = 0 for every zero-injection bus of the region (one Newton
/// system over all of them), holding boundary phasors at base values and the
/// target at the requested phasor. Returns the full region assignment.
/// A warning flag is set when the requested target lies outside [0.5, 1.5].
struct MaliciousState {
    PhasorMap phasors;
    bool target_out_of_bounds = false;
    int newton_iterations = 0;
};

MaliciousState complete_malicious_state(const AttackRegion& region,
                                        const RegionParams& params,
                                        const PhasorMap& base,
                                        const Phasor& target_phasor);

struct PmuOverride {
    bool has_voltage = false;  // boundary buses keep their voltage phasor
    double v = 0.0, delta = 0.0;
    double i = 0.0, theta = 0.0;
};

struct AttackVector {
    std::map<int, double> rtu_deltas;       // measurement index -> delta (pu)
    std::map<int, PmuOverride> pmu_overrides;
    double intended_dv = 0.0;               // target magnitude change
    double intended_ddelta = 0.0;           // target angle change, rad

    Eigen::VectorXd dense(int measurement_count) const;
    bool is_zero(double tol = 0.0) const;
};

/// Assemble the sparse measurement deltas: forged flows on the region lines,
/// injection increments on the non-zero-injection buses, voltage-phasor
/// overrides on interior buses, current-phasor overrides everywhere in the
/// region. `base_injections` are the attacker's PMU-derived (P, Q) per
/// region bus.
AttackVector build_attack_vector(const NetworkModel& net, const AttackRegion& region,
                                 const RegionParams& params, const PhasorMap& base,
                                 const std::map<int, PQ>& base_injections,
                                 const PhasorMap& malicious);

/// z_bad = z + deltas; PMU overrides replace the latest sample of the
/// attacked buses' channels.
std::pair<RtuMeasurementSet, PmuSeries> apply_attack(const RtuMeasurementSet& z,
                                                     const PmuSeries& pmu,
                                                     const AttackVector& a);

struct PerfectConditionReport {
    double linearity_proxy = 0.0;       // ||a - H c||inf / ||a||inf
    bool jacobian_frozen = false;       // estimator does not update H
    bool h_square = false;
    bool h_full_rank = false;
    int h_rows = 0;
    int h_cols = 0;
    double residual_bound = 0.0;            // ||(I - H(H'H)^-1H') Hhat c||inf
    double residual_bound_nonlinear = 0.0;  // same projector applied to the actual a
};

/// Evaluate the sufficient conditions for a residual-preserving attack with
/// the given region parameters (true or estimated) and a target-magnitude
/// perturbation of size dv_target.
PerfectConditionReport verify_perfect_conditions(const NetworkModel& net,
                                                 const AttackRegion& region,
                                                 const RegionParams& params,
                                                 const EstimatorOptions& opts,
                                                 double dv_target = 1e-4);

std::string attack_vector_to_json(const AttackVector& a);

}  // namespace fdia
