#pragma once

#include <map>
#include <variant>
#include <vector>

#include "planid/graph.hpp"

namespace planid {

// Intervention regimes for a single action variable.
//
// Idle leaves the variable's own mechanism in place; Atomic forces a fixed
// value; Conditional forces g(c) for a deterministic table g over the
// conditioning set C; Random draws from a prescribed distribution P*(x | c).
// Conditioning sets are ordered lists: table rows are indexed row-major by
// the declared order.

struct IdleRegime {
    bool operator==(const IdleRegime&) const = default;
};

struct AtomicRegime {
    int value = 0;
    bool operator==(const AtomicRegime&) const = default;
};

struct ConditionalRegime {
    std::vector<NodeId> cond;
    std::vector<int> cond_cards;
    std::vector<int> table;  // one action value per conditioning configuration
    bool operator==(const ConditionalRegime&) const = default;
};

struct RandomRegime {
    std::vector<NodeId> cond;
    std::vector<int> cond_cards;
    int action_card = 2;
    std::vector<double> table;  // row-major: [config][action value]
    bool operator==(const RandomRegime&) const = default;
};

using Regime = std::variant<IdleRegime, AtomicRegime, ConditionalRegime, RandomRegime>;

struct Strategy {
    std::map<NodeId, Regime> assignments;

    bool is_idle(const NodeId& action) const;
    const Regime& regime(const NodeId& action) const;
    // Atomic value of `action`; throws MissingAssignment for other kinds.
    int atomic_value(const NodeId& action) const;
};

// Conditioning sets of a regime, empty for Idle/Atomic.
const std::vector<NodeId>& regime_cond(const Regime& r);

// Row index of a conditioning configuration, row-major in declared order.
int config_index(const std::vector<int>& cards, const std::vector<int>& values);

// P(x_i = action_value | c; sigma): the delta for Atomic/Conditional regimes
// and the P* table entry for Random ones. Idle regimes have no factor of
// their own.
double regime_factor(const Regime& r, int action_value, const std::map<NodeId, int>& cond_values);

// A query after normalization: idle actions reclassified as covariates.
struct NormalizedQuery {
    std::set<NodeId> actions;
    std::set<NodeId> covariates;
    Strategy strategy;  // only non-idle assignments
};

// Validates a strategy against a diagram and an action/outcome split:
// every conditioning variable must be an observed non-outcome variable and
// the manipulated graph must stay acyclic. Idle actions are moved to the
// covariate side, since their mechanism is untouched.
NormalizedQuery validate_strategy(const CausalDiagram& diagram,
                                  const std::set<NodeId>& actions,
                                  const std::set<NodeId>& outcome,
                                  const Strategy& strategy);

// The manipulated graph: arrows into each (non-idle) action are cut, and for
// Conditional/Random regimes an arrow is added from every conditioning
// variable. Throws CyclicStrategy if the added arrows create a cycle.
CausalDiagram manipulated_graph(const CausalDiagram& diagram, const Strategy& strategy);

}  // namespace planid
