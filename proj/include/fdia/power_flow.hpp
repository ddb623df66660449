#pragma once

// AC power-flow equations h(x), analytic Jacobian, and the Newton-Raphson
// steady-state solver. Measurement ordering (fixed, used everywhere):
//   [0, n)        P injection per bus
//   [n, 2n)       Q injection per bus
//   [2n, 2n+L)    P flow from->to per line
//   [2n+L, 2n+2L) P flow to->from per line
//   [2n+2L, ..3L) Q flow from->to per line
//   [2n+3L, ..4L) Q flow to->from per line
// State ordering for Jacobians: [angles of all buses except reference,
// magnitudes of all buses].

#include "fdia/network.hpp"

namespace fdia {

struct PQ {
    double p = 0.0;
    double q = 0.0;
};

/// Net complex power injected at bus (standard bus-admittance form with
/// self terms; line charging enters the diagonal).
PQ power_injection(const NetworkModel& net, const StateVector& x, int bus_id);

/// Directed line flow measured at the `from_id` end.
PQ line_flow(const NetworkModel& net, const StateVector& x, int from_id, int to_id);

/// Full RTU measurement vector, length 2n + 4L, ordering above.
Eigen::VectorXd measurement_function(const NetworkModel& net, const StateVector& x);

int measurement_count(const NetworkModel& net);

// Index helpers into the measurement vector.
int meas_index_p_injection(const NetworkModel& net, int bus_index);
int meas_index_q_injection(const NetworkModel& net, int bus_index);
int meas_index_p_flow(const NetworkModel& net, int line_index, bool forward);
int meas_index_q_flow(const NetworkModel& net, int line_index, bool forward);

/// Analytic Jacobian dh/dx, one row per measurement, one column per free
/// state (n-1 angles then n magnitudes).
Eigen::MatrixXd jacobian(const NetworkModel& net, const StateVector& x);

int state_count(const NetworkModel& net);

/// Map a free-state increment onto (angle, vmag).
void apply_state_step(const NetworkModel& net, const Eigen::VectorXd& dx, StateVector& x);

struct PowerFlowOptions {
    double tol = 1e-8;   // max |mismatch|, pu
    int max_iter = 50;
};

class PowerFlowError : public std::runtime_error {
public:
    explicit PowerFlowError(const std::string& w) : std::runtime_error(w) {}
};

/// Newton-Raphson power flow: generator buses hold v_set and scheduled P
/// (reference bus balances), other buses hold scheduled P and Q.
StateVector solve_power_flow(const NetworkModel& net, const PowerFlowOptions& opts = {});

}  // namespace fdia
