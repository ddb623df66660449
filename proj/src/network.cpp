#include "fdia/network.hpp"

#include <fstream>
#include <json.hpp>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fdia {

using nlohmann::json;

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Line> lines,
                           int reference_bus, double base_mva)
    : buses_(std::move(buses)), lines_(std::move(lines)),
      reference_bus_(reference_bus), base_mva_(base_mva) {
    const int n = bus_count();
    if (n == 0) throw CaseError("case has no buses");

    std::unordered_map<int, int> index;
    for (int i = 0; i < n; ++i) {
        const Bus& b = buses_[i];
        if (!index.emplace(b.id, i).second)
            throw CaseError("duplicate bus id " + std::to_string(b.id));
        if (b.kind != BusKind::Generator) {
            if (b.tau_p <= 0 || b.tau_q <= 0)
                throw CaseError("bus " + std::to_string(b.id) +
                                ": tau_p and tau_q must be positive");
        }
        if (b.sigma_p < 0 || b.sigma_q < 0)
            throw CaseError("bus " + std::to_string(b.id) + ": negative sigma");
        if (b.kind == BusKind::Generator) {
            if (!b.gen_inertia || *b.gen_inertia <= 0 || !b.gen_damping ||
                *b.gen_damping <= 0)
                throw CaseError("generator bus " + std::to_string(b.id) +
                                ": gen_inertia and gen_damping must be present and positive");
            ++gen_count_;
        }
        if (b.kind == BusKind::ZeroInjection &&
            (b.static_p != 0.0 || b.static_q != 0.0))
            throw CaseError("zero-injection bus " + std::to_string(b.id) +
                            " has nonzero static injection");
    }

    auto it = index.find(reference_bus_);
    if (it == index.end())
        throw CaseError("reference bus " + std::to_string(reference_bus_) + " unknown");
    ref_index_ = it->second;
    if (buses_[ref_index_].kind != BusKind::Generator)
        throw CaseError("reference bus must be of generator kind");

    adjacency_.assign(n, {});
    std::unordered_set<long long> seen_pairs;
    for (size_t li = 0; li < lines_.size(); ++li) {
        Line& l = lines_[li];
        auto fi = index.find(l.from), ti = index.find(l.to);
        if (fi == index.end())
            throw CaseError("line " + std::to_string(l.from) + "-" +
                            std::to_string(l.to) + ": unknown bus " + std::to_string(l.from));
        if (ti == index.end())
            throw CaseError("line " + std::to_string(l.from) + "-" +
                            std::to_string(l.to) + ": unknown bus " + std::to_string(l.to));
        if (l.from == l.to)
            throw CaseError("line endpoints coincide at bus " + std::to_string(l.from));
        if (l.g == 0.0 && l.b == 0.0)
            throw CaseError("line " + std::to_string(l.from) + "-" +
                            std::to_string(l.to) + ": zero admittance");
        long long a = std::min(fi->second, ti->second);
        long long b = std::max(fi->second, ti->second);
        if (!seen_pairs.insert(a * 100000 + b).second)
            throw CaseError("line " + std::to_string(l.from) + "-" +
                            std::to_string(l.to) + " listed twice");
        adjacency_[fi->second].push_back(static_cast<int>(li));
        adjacency_[ti->second].push_back(static_cast<int>(li));
    }

    index_ = std::move(index);

    // connectivity
    std::vector<char> mark(n, 0);
    std::queue<int> q;
    q.push(0);
    mark[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int li : adjacency_[u]) {
            int v = index_.at(lines_[li].from) == u ? index_.at(lines_[li].to)
                                                    : index_.at(lines_[li].from);
            if (!mark[v]) {
                mark[v] = 1;
                ++reached;
                q.push(v);
            }
        }
    }
    if (reached != n) throw CaseError("line graph is not connected");

    ybus_g_ = Eigen::MatrixXd::Zero(n, n);
    ybus_b_ = Eigen::MatrixXd::Zero(n, n);
    for (const Line& l : lines_) {
        int i = index_.at(l.from), j = index_.at(l.to);
        ybus_g_(i, j) -= l.g;
        ybus_g_(j, i) -= l.g;
        ybus_b_(i, j) -= l.b;
        ybus_b_(j, i) -= l.b;
        ybus_g_(i, i) += l.g;
        ybus_g_(j, j) += l.g;
        ybus_b_(i, i) += l.b + l.shunt_b / 2;
        ybus_b_(j, j) += l.b + l.shunt_b / 2;
    }
}

int NetworkModel::index_of(int bus_id) const {
    auto it = index_.find(bus_id);
    if (it == index_.end())
        throw CaseError("unknown bus " + std::to_string(bus_id));
    return it->second;
}

bool NetworkModel::has_bus(int bus_id) const { return index_.count(bus_id) != 0; }

std::optional<int> NetworkModel::line_between(int bus_i, int bus_j) const {
    int i = index_of(bus_i);
    for (int li : adjacency_[i]) {
        const Line& l = lines_[li];
        if ((l.from == bus_i && l.to == bus_j) || (l.from == bus_j && l.to == bus_i))
            return li;
    }
    return std::nullopt;
}

namespace {

BusKind kind_from_string(const std::string& s) {
    if (s == "generator") return BusKind::Generator;
    if (s == "load") return BusKind::Load;
    if (s == "zero_injection") return BusKind::ZeroInjection;
    throw CaseError("unknown bus kind '" + s + "'");
}

std::string kind_to_string(BusKind k) {
    switch (k) {
        case BusKind::Generator: return "generator";
        case BusKind::Load: return "load";
        default: return "zero_injection";
    }
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw CaseError(where + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace

NetworkModel parse_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CaseError(std::string("case file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CaseError("case file root must be an object");
    reject_unknown_keys(doc, {"base_mva", "reference_bus", "buses", "lines"}, "root");
    for (const char* req : {"base_mva", "reference_bus", "buses", "lines"})
        if (!doc.contains(req)) throw CaseError(std::string("missing key '") + req + "'");

    std::vector<Bus> buses;
    for (size_t bi = 0; bi < doc["buses"].size(); ++bi) {
        const json& jb = doc["buses"][bi];
        std::string where = "buses[" + std::to_string(bi) + "]";
        reject_unknown_keys(jb,
                            {"id", "kind", "ps", "qs", "tau_p", "tau_q", "sigma_p",
                             "sigma_q", "gen_inertia", "gen_damping", "v_set"},
                            where);
        Bus b;
        try {
            b.id = jb.at("id").get<int>();
            b.kind = kind_from_string(jb.at("kind").get<std::string>());
            b.static_p = jb.at("ps").get<double>();
            b.static_q = jb.at("qs").get<double>();
            if (b.kind != BusKind::Generator) {
                b.tau_p = jb.at("tau_p").get<double>();
                b.tau_q = jb.at("tau_q").get<double>();
                b.sigma_p = jb.at("sigma_p").get<double>();
                b.sigma_q = jb.at("sigma_q").get<double>();
            } else {
                b.tau_p = jb.value("tau_p", 0.0);
                b.tau_q = jb.value("tau_q", 0.0);
                b.sigma_p = jb.value("sigma_p", 0.0);
                b.sigma_q = jb.value("sigma_q", 0.0);
            }
            if (jb.contains("gen_inertia")) b.gen_inertia = jb["gen_inertia"].get<double>();
            if (jb.contains("gen_damping")) b.gen_damping = jb["gen_damping"].get<double>();
            if (jb.contains("v_set")) b.v_set = jb["v_set"].get<double>();
        } catch (const json::exception& e) {
            throw CaseError(where + ": " + e.what());
        }
        buses.push_back(b);
    }

    std::vector<Line> lines;
    for (size_t li = 0; li < doc["lines"].size(); ++li) {
        const json& jl = doc["lines"][li];
        std::string where = "lines[" + std::to_string(li) + "]";
        reject_unknown_keys(jl, {"from", "to", "g", "b", "shunt_b"}, where);
        Line l;
        try {
            l.from = jl.at("from").get<int>();
            l.to = jl.at("to").get<int>();
            l.g = jl.at("g").get<double>();
            l.b = jl.at("b").get<double>();
            l.shunt_b = jl.value("shunt_b", 0.0);
        } catch (const json::exception& e) {
            throw CaseError(where + ": " + e.what());
        }
        lines.push_back(l);
    }

    return NetworkModel(std::move(buses), std::move(lines),
                        doc["reference_bus"].get<int>(), doc["base_mva"].get<double>());
}

std::string serialize_case(const NetworkModel& net) {
    json doc;
    doc["base_mva"] = net.base_mva();
    doc["reference_bus"] = net.reference_bus_id();
    doc["buses"] = json::array();
    for (const Bus& b : net.buses()) {
        json jb{{"id", b.id},
                {"kind", kind_to_string(b.kind)},
                {"ps", b.static_p},
                {"qs", b.static_q},
                {"tau_p", b.tau_p},
                {"tau_q", b.tau_q},
                {"sigma_p", b.sigma_p},
                {"sigma_q", b.sigma_q}};
        if (b.gen_inertia) jb["gen_inertia"] = *b.gen_inertia;
        if (b.gen_damping) jb["gen_damping"] = *b.gen_damping;
        if (b.v_set) jb["v_set"] = *b.v_set;
        doc["buses"].push_back(jb);
    }
    doc["lines"] = json::array();
    for (const Line& l : net.lines()) {
        json jl{{"from", l.from}, {"to", l.to}, {"g", l.g}, {"b", l.b}};
        if (l.shunt_b != 0.0) jl["shunt_b"] = l.shunt_b;
        doc["lines"].push_back(jl);
    }
    return doc.dump(2);
}

NetworkModel load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("case file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

}  // namespace fdia
