#pragma once

#include <map>
#include <string>

#include "planid/estimand.hpp"
#include "planid/graph.hpp"
#include "planid/oracle.hpp"
#include "planid/regimes.hpp"

namespace planid {

// Parsed graph file: diagram plus the query roles and cardinalities.
//
// Grammar (one declaration per line, `#` starts a comment):
//   observed <name> card=<k>
//   latent <name>
//   edge <parent> <child>
//   action <name>
//   outcome <name>
// Latent variables default to cardinality 2 when models are generated.
struct ParsedGraph {
    CausalDiagram diagram;
    std::set<NodeId> actions;
    std::set<NodeId> outcome;
    std::map<NodeId, int> cards;
};

ParsedGraph parse_graph(const std::string& text);

// Strategy grammar (tables may span lines until the closing brace):
//   <action> idle
//   <action> atomic <value>
//   <action> conditional <c1> <c2> ... { <cfg> -> <value> ; ... }
//   <action> random <c1> ... { <cfg> -> <p0> <p1> ... ; ... }
// <cfg> lists the conditioning variables' values in declared order.
Strategy parse_strategy(const std::string& text, const ParsedGraph& graph);

// Model file: CPT blocks against an already parsed graph.
//   cpt <node> | <parents...>
//   <cfg> : <p0> <p1> ...       (one line per parent configuration)
DiscreteModel parse_model(const std::string& text, const ParsedGraph& graph);

// Canonical text forms; parse(format(x)) == x.
std::string format_graph(const ParsedGraph& graph);
std::string format_strategy(const Strategy& strategy);

// Estimand (de)serialization for `identify --save-estimand` / `render`.
std::string estimand_to_json(const Estimand& e);
Estimand estimand_from_json(const std::string& text);

// Numbers are printed with 12 significant digits everywhere.
std::string fmt12(double x);

}  // namespace planid
