#pragma once

// Stochastic dynamics: nonlinear load/swing simulation (semi-implicit
// Euler-Maruyama) and the linearized Ornstein-Uhlenbeck machinery with exact
// discrete-time sampling.

#include "fdia/network.hpp"
#include "fdia/power_flow.hpp"

#include <cstdint>
#include <set>

namespace fdia {

/// Time series of bus states. `bus_ids` gives the column ordering; the full
/// simulator emits every bus, the OU sampler only the modeled subset.
struct Trajectory {
    double dt = 0.0;          // s between samples
    double start_time = 0.0;  // s
    std::vector<int> bus_ids;
    Eigen::MatrixXd angle;    // samples x buses, rad
    Eigen::MatrixXd vmag;     // samples x buses, pu

    int sample_count() const { return static_cast<int>(angle.rows()); }
    double rate_hz() const { return 1.0 / dt; }
};

class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& w) : std::runtime_error(w) {}
};

struct SimulateOptions {
    // store every `store_stride`-th step (1 = the raw integration rate)
    int store_stride = 1;
};

/// Nonlinear stochastic simulation from the power-flow equilibrium.
/// Dynamic (load / zero-injection) buses follow the first-order load
/// recovery equations with white-noise load perturbation; non-reference
/// generators follow second-order swing with fixed terminal magnitude;
/// the reference generator is the angle datum (infinite bus).
/// The per-bus self-stiffness term is integrated implicitly, which keeps
/// the scheme stable at dt = 1/600 s on cases with 0.1 s zero-injection
/// time constants (explicit Euler diverges there).
Trajectory simulate(const NetworkModel& net, double duration, double dt,
                    std::uint64_t seed, const SimulateOptions& opts = {});

/// Linearized load-dynamics system around an equilibrium (region model):
/// x = [angles; magnitudes] over `bus_ordering`, dx/dt = A x + B xi.
struct OUSystem {
    Eigen::MatrixXd a_matrix;   // 2k x 2k
    Eigen::MatrixXd b_matrix;   // 2k x 2k, diagonal
    std::vector<int> bus_ordering;
    Eigen::VectorXd eq_angle;   // equilibrium, per bus in ordering
    Eigen::VectorXd eq_vmag;
    bool stable = true;         // all eigenvalues of A in the open left half plane
};

/// Build the region OU model: A = -T^{-1} J with J the injection Jacobian
/// blocks restricted to `bus_subset` (which must contain no generator bus),
/// B diagonal with entries P^s sigma^p / tau_p and Q^s sigma^q / tau_q.
OUSystem linearize(const NetworkModel& net, const StateVector& eq,
                   const std::set<int>& bus_subset);

/// Exact discrete-time OU sampling: x_{t+dt} = e^{A dt} x_t + w,
/// cov(w) = integral_0^dt e^{As} BB' e^{A's} ds, started from the stationary
/// law. Returns absolute states (equilibrium + deviation).
Trajectory simulate_ou(const OUSystem& sys, int n_samples, double dt,
                       std::uint64_t seed);

/// Full-system linearization used by the fast Monte Carlo engine: states are
/// [angle, vmag] of every dynamic bus plus [angle, speed] of every
/// non-reference generator.
struct FullLinearModel {
    Eigen::MatrixXd a_matrix;
    Eigen::MatrixXd b_matrix;           // rectangular, one column per noise channel
    std::vector<int> dynamic_buses;     // dense bus indices
    std::vector<int> swing_buses;       // dense bus indices (non-reference generators)
    int angle_state(int dense_bus) const;
    int vmag_state(int dense_bus) const;
    int state_dim() const { return static_cast<int>(a_matrix.rows()); }
};

FullLinearModel build_full_linear(const NetworkModel& net, const StateVector& eq);

/// Discretized OU propagator: one step of x -> Phi x + L w, plus the
/// stationary covariance (for stationary starts).
struct DiscreteOU {
    Eigen::MatrixXd phi;
    Eigen::MatrixXd noise_chol;       // L with L L' = discrete noise covariance
    Eigen::MatrixXd stationary_cov;
    Eigen::MatrixXd stationary_chol;
};

DiscreteOU discretize_ou(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt);

/// Exact linearized trajectory of the full system at the given rate,
/// started from the stationary distribution. Emits full-network states
/// (reference bus pinned, generator magnitudes fixed).
Trajectory simulate_linearized(const NetworkModel& net, const StateVector& eq,
                               const DiscreteOU& dou, const FullLinearModel& model,
                               int n_samples, double dt, std::uint64_t seed);

}  // namespace fdia
