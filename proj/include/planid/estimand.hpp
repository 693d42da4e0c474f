#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "planid/graph.hpp"
#include "planid/joint_table.hpp"
#include "planid/regimes.hpp"

namespace planid {

// A value term names the value plugged into one slot of a probability factor:
//
//   Sym    a symbol standing for the variable's value, free or bound by an
//          enclosing Sum (rendered as the symbol, e.g. "z")
//   Given  the externally chosen atomic value of an action (rendered as the
//          plain lowercase action name, mirroring the usual x* notation)
//   Const  a pinned literal category (rendered "x2:=0")
//   Apply  the value of a conditional regime's decision table at the given
//          arguments (rendered "x1:=g1(z1)")
struct ValueTerm {
    enum class Kind { Sym, Given, Const, Apply };

    Kind kind = Kind::Sym;
    NodeId node;                  // the variable (Sym/Given/Const) or action (Apply)
    std::string sym;              // Sym only
    int value = 0;                // Const only
    std::vector<ValueTerm> args;  // Apply only

    static ValueTerm make_sym(const NodeId& node, const std::string& sym);
    static ValueTerm make_sym(const NodeId& node);  // sym = lowercase(node)
    static ValueTerm make_given(const NodeId& action);
    static ValueTerm make_const(const NodeId& node, int value);
    static ValueTerm make_apply(const NodeId& action, std::vector<ValueTerm> args);

    bool operator==(const ValueTerm& o) const;
};

std::string canonical_sym(const NodeId& node);

struct Slot {
    NodeId node;
    ValueTerm term;
    bool operator==(const Slot& o) const { return node == o.node && term == o.term; }
};

struct Binding {
    NodeId node;
    std::string sym;
    bool operator==(const Binding& o) const { return node == o.node && sym == o.sym; }
};

// Symbolic estimand tree over observational factors, strategy factors,
// indicators, sums, products and quotients.
struct Estimand {
    enum class Kind { One, ObsProb, StrategyFactor, Indicator, Sum, Product, Quotient };

    Kind kind = Kind::One;
    std::vector<Slot> targets;         // ObsProb targets; StrategyFactor action slot (size 1)
    std::vector<Slot> given;           // ObsProb/StrategyFactor conditioning slots
    ValueTerm left, right;             // Indicator
    std::vector<Binding> bound;        // Sum
    std::vector<Estimand> children;    // Sum: {body}; Product: factors; Quotient: {num, den}

    static Estimand one();
    static Estimand obs_prob(std::vector<Slot> targets, std::vector<Slot> given);
    static Estimand strategy_factor(const NodeId& action, ValueTerm value, std::vector<Slot> cond);
    static Estimand indicator(ValueTerm a, ValueTerm b);
    static Estimand sum(std::vector<Binding> bound, Estimand body);
    static Estimand product(std::vector<Estimand> factors);
    static Estimand quotient(Estimand num, Estimand den);

    bool operator==(const Estimand& o) const;
};

// Nodes whose value must be supplied externally: symbols not bound by any
// enclosing Sum. Given/Const/Apply terms resolve through the strategy and are
// not free.
std::set<NodeId> free_symbols(const Estimand& e);

// Rewrites the tree to a canonical fixed point. All rules are plain
// probability algebra, valid for any joint table: delta collapse,
// normalization sums, chain merges, product flattening, quotient
// cancellation and scope minimization, followed by canonical renaming and
// ordering. Total and idempotent.
Estimand simplify(const Estimand& e);

// Deterministic ASCII rendering; byte-identical for equal trees.
std::string render(const Estimand& e);

// Exact evaluation against a concrete observational table. Sum nodes
// enumerate their bound variables' cardinalities; strategy factors and
// substituted decision-table terms resolve through `strategy`.
double evaluate(const Estimand& e,
                const JointTable& observational,
                const Strategy& strategy,
                const std::map<NodeId, int>& assignment);

// Capture-avoiding substitution of free occurrences of `sym` (alpha-renames
// inner binders that would capture symbols introduced by `replacement`).
Estimand substitute_free(const Estimand& e, const std::string& sym, const ValueTerm& replacement);

// True if the symbol occurs free in the tree (including Apply arguments).
bool mentions_sym(const Estimand& e, const std::string& sym);

// Sum over the canonical symbols of `nodes`, deliberately capturing the free
// occurrences of those symbols in `body`. Inner binders that already use one
// of the symbols are alpha-renamed first, so only the free occurrences bind.
Estimand sum_over_nodes(const std::set<NodeId>& nodes, Estimand body);

}  // namespace planid
