#include "fdia/region.hpp"

#include <deque>

namespace fdia {

AttackRegion build_region(const NetworkModel& net, int target_bus) {
    const Bus& target = net.bus(target_bus);
    if (target.kind == BusKind::Generator)
        throw RegionError("target bus " + std::to_string(target_bus) + " is a generator");

    AttackRegion r;
    r.target = target_bus;
    r.omega_a.insert(target_bus);
    std::deque<int> frontier{target_bus};

    while (!frontier.empty()) {
        const int t = frontier.front();
        frontier.pop_front();
        for (int li : net.lines_at(net.index_of(t))) {
            const Line& l = net.lines()[li];
            const int i = l.from == t ? l.to : l.from;
            if (net.bus(i).kind == BusKind::Generator)
                throw RegionError("attacking region for bus " + std::to_string(target_bus) +
                                  " reaches generator bus " + std::to_string(i));
            r.l_a.insert({t, i});
            r.l_a.insert({i, t});
            if (r.omega_a.insert(i).second) {
                if (net.bus(i).kind == BusKind::ZeroInjection)
                    frontier.push_back(i);   // expand through zero-injection buses
                else
                    r.omega_b.insert(i);
            }
        }
    }
    for (int b : r.omega_a)
        if (net.bus(b).kind != BusKind::ZeroInjection) r.omega_c.insert(b);
    return r;
}

}  // namespace fdia
