#include "fdia/measurement.hpp"

#include "fdia/rng.hpp"

#include <json.hpp>
#include <sstream>
#include <cmath>

namespace fdia {

RtuMeasurementSet sample_rtu(const NetworkModel& net, const StateVector& x,
                             double noise_std, std::uint64_t seed) {
    if (noise_std < 0) throw std::invalid_argument("noise_std must be >= 0");
    RtuMeasurementSet out;
    out.values = measurement_function(net, x);
    out.noise_std = noise_std;
    out.truth_state = x;
    if (noise_std > 0) {
        Rng rng(seed);
        for (int i = 0; i < out.values.size(); ++i)
            out.values[i] += noise_std * rng.normal();
    }
    return out;
}

const PmuChannel& PmuSeries::channel(int bus_id) const {
    for (size_t k = 0; k < bus_ids.size(); ++k)
        if (bus_ids[k] == bus_id) return channels[k];
    throw std::out_of_range("bus " + std::to_string(bus_id) + " not in PMU series");
}

PmuSeries sample_pmu(const Trajectory& traj, const NetworkModel& net,
                     const std::set<int>& buses, double rate_hz,
                     const PmuNoiseSpec& noise, std::uint64_t seed) {
    const double traj_rate = traj.rate_hz();
    const double ratio = traj_rate / rate_hz;
    const int stride = static_cast<int>(std::llround(ratio));
    if (std::abs(ratio - stride) > 1e-9 || stride < 1)
        throw SimulationError("pmu rate must divide the trajectory rate");

    // trajectory column per requested bus
    std::vector<int> cols;
    std::vector<int> ids;
    for (int id : buses) {
        int col = -1;
        for (size_t c = 0; c < traj.bus_ids.size(); ++c)
            if (traj.bus_ids[c] == id) { col = static_cast<int>(c); break; }
        if (col < 0)
            throw SimulationError("bus " + std::to_string(id) + " has no trajectory data");
        cols.push_back(col);
        ids.push_back(id);
    }

    const int n_out = traj.sample_count() / stride;
    PmuSeries series;
    series.rate_hz = rate_hz;
    series.bus_ids = ids;
    series.n_samples = n_out;
    series.channels.resize(ids.size());

    // full network state per decimated sample (for injection currents)
    const bool full_state = traj.bus_ids.size() == static_cast<size_t>(net.bus_count());
    StateVector x = StateVector::flat(net.bus_count());
    for (size_t k = 0; k < ids.size(); ++k) {
        PmuChannel& ch = series.channels[k];
        ch.v.resize(n_out);
        ch.delta.resize(n_out);
        ch.i.resize(n_out);
        ch.theta.resize(n_out);
    }
    for (int t = 0; t < n_out; ++t) {
        const int row = (t + 1) * stride - 1;
        if (full_state) {
            for (int c = 0; c < net.bus_count(); ++c) {
                x.angle[c] = traj.angle(row, c);
                x.vmag[c] = traj.vmag(row, c);
            }
        }
        for (size_t k = 0; k < ids.size(); ++k) {
            PmuChannel& ch = series.channels[k];
            const double v = traj.vmag(row, cols[k]);
            const double d = traj.angle(row, cols[k]);
            ch.v[t] = v;
            ch.delta[t] = d;
            if (full_state) {
                PQ inj = power_injection(net, x, ids[k]);
                const double s = std::hypot(inj.p, inj.q);
                ch.i[t] = s / v;
                ch.theta[t] = d - std::atan2(inj.q, inj.p);
            } else {
                ch.i[t] = 0.0;
                ch.theta[t] = 0.0;
            }
        }
    }

    if (noise.mode != PmuNoiseSpec::Mode::None && noise.level > 0) {
        Rng rng(seed);
        auto add_range_noise = [&](Eigen::VectorXd& series_vec) {
            const double std = noise.level * (series_vec.maxCoeff() - series_vec.minCoeff());
            for (int t = 0; t < series_vec.size(); ++t)
                series_vec[t] += std * rng.normal();
        };
        auto add_phase_noise = [&](Eigen::VectorXd& series_vec) {
            for (int t = 0; t < series_vec.size(); ++t)
                series_vec[t] += noise.level * rng.normal();
        };
        for (PmuChannel& ch : series.channels) {
            if (noise.mode == PmuNoiseSpec::Mode::StateChangeRelative) {
                add_range_noise(ch.v);
                add_range_noise(ch.delta);
                add_range_noise(ch.i);
                add_range_noise(ch.theta);
            } else {  // Tve: angles only
                add_phase_noise(ch.delta);
                add_phase_noise(ch.theta);
            }
        }
    }
    return series;
}

PmuSnapshot latest_snapshot(const PmuSeries& series) {
    PmuSnapshot snap;
    const int t = series.n_samples - 1;
    for (size_t k = 0; k < series.bus_ids.size(); ++k) {
        const PmuChannel& ch = series.channels[k];
        snap.phasors[series.bus_ids[k]] = {ch.v[t], ch.delta[t], ch.i[t], ch.theta[t]};
    }
    return snap;
}

std::string pmu_series_to_csv(const PmuSeries& series) {
    std::ostringstream os;
    os << "t,bus_id,v,delta,i,theta\n";
    os.precision(10);
    for (int t = 0; t < series.n_samples; ++t) {
        const double time = (t + 1) / series.rate_hz;
        for (size_t k = 0; k < series.bus_ids.size(); ++k) {
            const PmuChannel& ch = series.channels[k];
            os << time << ',' << series.bus_ids[k] << ',' << ch.v[t] << ','
               << ch.delta[t] << ',' << ch.i[t] << ',' << ch.theta[t] << "\n";
        }
    }
    return os.str();
}

std::string rtu_to_json(const RtuMeasurementSet& z) {
    nlohmann::json doc;
    doc["ordering_version"] = "p-inj,q-inj,p-flow-fwd,p-flow-rev,q-flow-fwd,q-flow-rev/v1";
    doc["z"] = std::vector<double>(z.values.data(), z.values.data() + z.values.size());
    return doc.dump();
}

Eigen::VectorXd rtu_values_from_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    const auto vals = doc.at("z").get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
}

}  // namespace fdia
