#pragma once

// Defender RTU snapshots and attacker PMU series.

#include "fdia/dynamics.hpp"
#include "fdia/network.hpp"
#include "fdia/power_flow.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <set>

namespace fdia {

struct RtuMeasurementSet {
    Eigen::VectorXd values;   // z, measurement_function ordering
    double noise_std = 0.0;   // pu
    StateVector truth_state;  // bookkeeping only; never shown to attacker logic
};

/// z = h(x) + e, e ~ iid N(0, noise_std^2), deterministic per seed.
RtuMeasurementSet sample_rtu(const NetworkModel& net, const StateVector& x,
                             double noise_std, std::uint64_t seed);

/// Per-bus phasor channels: voltage magnitude/angle and injection-current
/// magnitude/angle.
struct PmuChannel {
    Eigen::VectorXd v, delta, i, theta;
};

struct PmuSeries {
    double rate_hz = 0.0;
    std::vector<int> bus_ids;
    std::vector<PmuChannel> channels;  // parallel to bus_ids
    int n_samples = 0;

    const PmuChannel& channel(int bus_id) const;
};

struct PmuNoiseSpec {
    enum class Mode { None, StateChangeRelative, Tve };
    Mode mode = Mode::None;
    // StateChangeRelative: std = level x (max - min) of the channel's
    // noiseless series. Tve: phase-angle perturbation with std = level rad
    // (~ TVE fraction), magnitudes untouched.
    double level = 0.0;
};

/// Decimate a trajectory to rate_hz and read voltage phasors; current
/// phasors are injection currents computed from the instantaneous full
/// state, I angle theta = ((P+jQ)/(V angle delta))^*.
PmuSeries sample_pmu(const Trajectory& traj, const NetworkModel& net,
                     const std::set<int>& buses, double rate_hz,
                     const PmuNoiseSpec& noise, std::uint64_t seed);

/// One instant of phasors per bus (defender-side PMU integration).
struct PmuSnapshot {
    std::map<int, std::array<double, 4>> phasors;  // bus -> {V, delta, I, theta}
};

/// Last sample of a series as a snapshot.
PmuSnapshot latest_snapshot(const PmuSeries& series);

/// CSV export, columns `t, bus_id, v, delta, i, theta`.
std::string pmu_series_to_csv(const PmuSeries& series);

/// JSON export: {"z": [...], "ordering_version": "..."}.
std::string rtu_to_json(const RtuMeasurementSet& z);
Eigen::VectorXd rtu_values_from_json(const std::string& text);

}  // namespace fdia
