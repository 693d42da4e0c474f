#pragma once

#include <cstdint>
#include <map>

#include "planid/estimand.hpp"
#include "planid/graph.hpp"
#include "planid/joint_table.hpp"
#include "planid/regimes.hpp"

namespace planid {

// Conditional probability table of one node given its diagram parents.
// Parents are kept sorted by name; rows are indexed row-major over parent
// values in that order, each row being a distribution over the node's values.
struct Cpt {
    std::vector<NodeId> parents;
    std::vector<int> parent_cards;
    int card = 2;
    std::vector<double> table;  // [row][value]

    double value(const std::vector<int>& parent_values, int v) const;
};

// Fully specified discrete model: the oracle's ground truth.
struct DiscreteModel {
    CausalDiagram diagram;
    std::map<NodeId, int> cards;
    std::map<NodeId, Cpt> cpts;
};

// Shape checks plus row normalization to 1e-12. Also enforces the desk-scale
// enumeration cap (joint state space at most 2^20 configurations).
void validate_model(const DiscreteModel& m);

// Exact observational distribution: enumerate V u U, multiply CPTs, sum out
// the latents. Variables come out sorted by name.
JointTable observational(const DiscreteModel& m);

// Exact interventional distribution of the outcome variables under a
// strategy: action CPTs are replaced by their regime factors (idle regimes
// keep the model's own CPT). Returns a vector over outcome configurations,
// row-major in sorted outcome order.
std::vector<double> interventional(const DiscreteModel& m,
                                   const Strategy& strategy,
                                   const std::set<NodeId>& outcome);

// Independent second path for all-atomic strategies: the truncated-product
// factorization with action values fixed, no regime machinery involved.
std::vector<double> truncated_atomic(const DiscreteModel& m,
                                     const std::map<NodeId, int>& action_values,
                                     const std::set<NodeId>& outcome);

// Deterministic in (diagram, cards, seed); every CPT row is drawn from the
// interior of the simplex with all entries >= 0.01.
DiscreteModel random_model(const CausalDiagram& diagram,
                           const std::map<NodeId, int>& cards,
                           std::uint64_t seed);

// max over outcome configurations of |evaluate(estimand) - truth|.
double compare(const DiscreteModel& m,
               const Strategy& strategy,
               const std::set<NodeId>& outcome,
               const Estimand& estimand);

// Row-major index helpers for outcome configurations.
std::vector<std::map<NodeId, int>> enumerate_configs(const std::vector<NodeId>& vars,
                                                     const std::map<NodeId, int>& cards);

// ---------------------------------------------------------------------------
// Fixtures. Edge lists are chosen to be consistent with the observational
// factorizations each graph is known for; tests reproduce those
// factorizations from observational() directly.

// One latent confounder between X1 and Z; actions X1, X2, outcome Y.
CausalDiagram fig1();
// Two-stage treatment graph with confounders X1<->Z and Z<->Y.
CausalDiagram fig2a();
// Three-stage sequential treatment graph with confounders X1<->Z2, X2<->Z3.
CausalDiagram fig3();

std::map<NodeId, int> binary_cards(const CausalDiagram& g);

// Hand-built model pairs with identical observational tables but
// interventional behavior differing by at least 0.01 - positive witnesses
// that the corresponding queries are genuinely not identifiable.
// fig2a pair: dynamic plan with X2 responding to Z.
std::pair<DiscreteModel, DiscreteModel> fig2a_counterexample_pair();
// fig3 pair: the post-intervention distribution of Z2 under atomic
// interventions on all other observed variables.
std::pair<DiscreteModel, DiscreteModel> fig3_counterexample_pair();

// ---------------------------------------------------------------------------
// Random query generation (shared by the CLI random-test command and the
// verification suites).

struct RandomQuery {
    CausalDiagram diagram;
    std::set<NodeId> actions;
    std::set<NodeId> outcome;
    std::map<NodeId, int> cards;
    Strategy strategy;
};

CausalDiagram random_diagram(std::uint64_t seed, int max_observed, int max_latents);
Strategy random_strategy(const CausalDiagram& diagram,
                         const std::set<NodeId>& actions,
                         const std::set<NodeId>& outcome,
                         const std::map<NodeId, int>& cards,
                         std::uint64_t seed);
RandomQuery random_query(std::uint64_t seed, int max_observed, int max_latents);

}  // namespace planid
