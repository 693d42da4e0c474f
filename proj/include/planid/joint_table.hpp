#pragma once

#include <map>
#include <vector>

#include "planid/graph.hpp"

namespace planid {

// Dense joint probability table over an ordered variable list (row-major).
struct JointTable {
    std::vector<NodeId> vars;
    std::vector<int> cards;
    std::vector<double> probs;

    int card_of(const NodeId& n) const;

    // Probability mass of all entries matching the given partial assignment.
    double marginal(const std::map<NodeId, int>& assignment) const;

    // Conditional P(targets | given), with the convention that a zero-mass
    // conditioning event yields 0.
    double conditional(const std::map<NodeId, int>& targets,
                       const std::map<NodeId, int>& given) const;
};

}  // namespace planid
