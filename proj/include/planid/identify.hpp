#pragma once

#include <map>

#include "planid/estimand.hpp"
#include "planid/graph.hpp"
#include "planid/regimes.hpp"

namespace planid {

// A dynamic-plan identification query.
struct PlanQuery {
    CausalDiagram diagram;
    std::set<NodeId> actions;
    std::set<NodeId> outcome;
    Strategy strategy;
    std::map<NodeId, int> cardinalities;
};

// Verdict of plan identification. `identified == false` means the engine's
// sufficient criterion does not hold for Q[Y u Z_D]; for the Q-level question
// itself that failure is definitive, but the plan may in principle still be
// identifiable by other means, so reports must not overclaim.
struct IdentificationOutcome {
    bool identified = false;
    Estimand estimand;  // meaningful when identified
    std::set<NodeId> failing_set;
    std::set<NodeId> failing_component;
    std::set<NodeId> z_d;
    std::set<NodeId> x_d;
};

// Result of a Q[S] derivation.
struct QResult {
    bool ok = false;
    Estimand estimand;
    std::set<NodeId> failing_set;
    std::set<NodeId> failing_component;
};

// Q-factor of one c-component block T by the chain rule: the product over
// V_i in T of P(v_i | all order-predecessors of V_i). `order` must be a
// topological order of the projection.
Estimand c_factor(const std::set<NodeId>& block,
                  const ProjectedDiagram& projection,
                  const std::vector<NodeId>& order);

// The recursive c-component identification subroutine. C must be a
// bidirected-connected subset of T; qT must equal Q[T]. Returns Q[C] or a
// failure verdict carrying the witnessing (C, T) pair.
QResult identify_component(const std::set<NodeId>& c_set,
                           const std::set<NodeId>& t_set,
                           const Estimand& q_t,
                           const ProjectedDiagram& projection);

// Q[S] identification: decompose the S-induced projection into c-components,
// derive each from its enclosing c-component of the full projection, and
// multiply. Free symbols of the result cover S and the intervened variables
// the expression still mentions.
QResult identify_Q(const CausalDiagram& diagram, const std::set<NodeId>& s_set);

// Plan identification: build the manipulated graph, find the action and
// covariate ancestors of the outcome (X_D, Z_D), identify Q[Y u Z_D] on the
// original diagram, and assemble the plan estimand with one strategy factor
// per X_D action. Atomic values substitute directly, conditional regimes
// collapse through their deltas, random regimes stay as S[.] factors.
IdentificationOutcome identify_plan(const PlanQuery& query);

// All-atomic special case; `values` maps every action to its forced value.
// Z'_D lands in z_d.
IdentificationOutcome identify_unconditional(const CausalDiagram& diagram,
                                             const std::set<NodeId>& actions,
                                             const std::set<NodeId>& outcome,
                                             const std::map<NodeId, int>& values,
                                             const std::map<NodeId, int>& cardinalities);

// Direct G-formula assembly for latent-free diagrams: sum over covariates
// and non-atomic actions of the product of strategy factors and parent-set
// conditionals. Serves as an independent cross-check of identify_plan on
// Markovian inputs. Throws LatentsPresent otherwise.
Estimand g_formula(const PlanQuery& query);

// d-separation of A from B given C in the full diagram (latents included).
bool d_separated(const CausalDiagram& g,
                 const std::set<NodeId>& a,
                 const std::set<NodeId>& b,
                 const std::set<NodeId>& c);

// Graph-licensed reduction pass applied on top of simplify():
//  - conditioning sets of observational factors are pruned to a minimal
//    subset justified by d-separation;
//  - chain merges whose missing conditioning variables are d-separated from
//    the merged target become available when they let a bound variable be
//    summed out.
// Sound for every model compatible with the diagram (not for arbitrary
// tables, which is why it lives here and not in simplify).
Estimand reduce_with_graph(const Estimand& e, const CausalDiagram& diagram);

}  // namespace planid
