#pragma once

// Attacking-region construction: the target bus, its neighborhood expanded
// through zero-injection buses, internal lines, and non-zero-injection
// boundary.

#include "fdia/network.hpp"

#include <set>
#include <utility>

namespace fdia {

struct AttackRegion {
    int target = 0;
    std::set<int> omega_a;                   // all region buses
    std::set<int> omega_b;                   // boundary (non-zero-injection)
    std::set<int> omega_c;                   // non-zero-injection region buses
    std::set<std::pair<int, int>> l_a;       // directed pairs, closed under reversal

    std::set<int> interior() const {         // omega_a \ omega_b
        std::set<int> out;
        for (int b : omega_a)
            if (!omega_b.count(b)) out.insert(b);
        return out;
    }
};

class RegionError : public std::runtime_error {
public:
    explicit RegionError(const std::string& w) : std::runtime_error(w) {}
};

/// Expand from the target: add neighbors; while any boundary bus is
/// zero-injection, expand through it. Errors if the target is a generator
/// or the expansion reaches a generator bus.
AttackRegion build_region(const NetworkModel& net, int target_bus);

}  // namespace fdia
