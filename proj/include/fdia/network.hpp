#pragma once

// Static grid description: buses, lines, operating state, case-file I/O.
// All quantities per unit on the case base; angles in radians.

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fdia {

enum class BusKind { Generator, Load, ZeroInjection };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double static_p = 0.0;   // P^s, net injection (loads negative)
    double static_q = 0.0;   // Q^s
    double tau_p = 0.0;      // s
    double tau_q = 0.0;      // s
    double sigma_p = 0.0;
    double sigma_q = 0.0;
    std::optional<double> gen_inertia;   // s (generator kind)
    std::optional<double> gen_damping;   // pu
    std::optional<double> v_set;         // pu, generator terminal setpoint
};

struct Line {
    int from = 0;        // bus ids
    int to = 0;
    double g = 0.0;      // series conductance, pu
    double b = 0.0;      // series susceptance, pu (typically negative)
    double shunt_b = 0.0;  // total line charging, pu (default 0)
};

class CaseError : public std::runtime_error {
public:
    explicit CaseError(const std::string& what) : std::runtime_error(what) {}
};

/// Validated immutable network. Construction checks all invariants:
/// unique bus ids, known line endpoints, connected graph, exactly one
/// reference bus of generator kind, zero-injection buses with exact zero
/// static injections.
class NetworkModel {
public:
    NetworkModel(std::vector<Bus> buses, std::vector<Line> lines,
                 int reference_bus, double base_mva);

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int line_count() const { return static_cast<int>(lines_.size()); }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }
    double base_mva() const { return base_mva_; }

    int reference_bus_id() const { return reference_bus_; }
    int reference_index() const { return ref_index_; }

    /// Dense index (0..n-1) of a bus id; throws on unknown id.
    int index_of(int bus_id) const;
    bool has_bus(int bus_id) const;
    const Bus& bus(int bus_id) const { return buses_[index_of(bus_id)]; }

    /// Line lookup by unordered endpoint pair; nullopt if not a line.
    std::optional<int> line_between(int bus_i, int bus_j) const;

    /// Indices of lines incident to the given bus index.
    const std::vector<int>& lines_at(int bus_index) const { return adjacency_[bus_index]; }

    /// Bus-admittance entries (dense, n x n). G(i,j) = -g_ij off-diagonal,
    /// G(i,i) = sum of incident g; B likewise with half line charging on
    /// the diagonal.
    const Eigen::MatrixXd& ybus_g() const { return ybus_g_; }
    const Eigen::MatrixXd& ybus_b() const { return ybus_b_; }

    int generator_count() const { return gen_count_; }

private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    int reference_bus_;
    double base_mva_;
    int ref_index_ = -1;
    int gen_count_ = 0;
    std::unordered_map<int, int> index_;
    std::vector<std::vector<int>> adjacency_;
    Eigen::MatrixXd ybus_g_, ybus_b_;
};

/// Per-bus voltage magnitudes and angles, ordered like NetworkModel::buses().
struct StateVector {
    Eigen::VectorXd angle;  // rad
    Eigen::VectorXd vmag;   // pu

    static StateVector flat(int n) {
        return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
    }
};

/// Parse a case file (JSON, schema in README). Unknown keys rejected;
/// errors carry the offending location.
NetworkModel parse_case(const std::string& text);

/// Inverse of parse_case; parse_case(serialize_case(net)) reproduces net.
std::string serialize_case(const NetworkModel& net);

/// Load and parse a case file from disk.
NetworkModel load_case(const std::string& path);

}  // namespace fdia
