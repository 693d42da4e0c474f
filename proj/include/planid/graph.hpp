#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "planid/errors.hpp"

namespace planid {

// Node names are plain identifiers ([A-Za-z_][A-Za-z0-9_]*). Comparison is
// exact string equality; all containers are ordered so that every operation
// in this library is deterministic.
using NodeId = std::string;

using Edge = std::pair<NodeId, NodeId>;  // (parent, child)

// A causal diagram: a DAG over observed and latent variables.
struct CausalDiagram {
    std::set<NodeId> observed;
    std::set<NodeId> latent;
    std::set<Edge> edges;

    bool has_node(const NodeId& n) const { return observed.count(n) || latent.count(n); }
    bool is_latent(const NodeId& n) const { return latent.count(n) != 0; }

    std::set<NodeId> all_nodes() const;
    std::set<NodeId> parents(const NodeId& n) const;
    std::set<NodeId> children(const NodeId& n) const;
};

// Latent-projected (semi-Markovian) view of a diagram: observed nodes only,
// with latent confounding summarized as bidirected edges. Bidirected pairs
// are stored with lexicographically ordered endpoints.
struct ProjectedDiagram {
    std::set<NodeId> nodes;
    std::set<Edge> directed;
    std::set<Edge> bidirected;
    // True when the projection had to walk through intermediate latent nodes
    // (latent chains) rather than plain shared latent parents.
    bool compound_latent_paths = false;

    std::set<NodeId> parents(const NodeId& n) const;
    std::set<NodeId> bidirected_neighbors(const NodeId& n) const;
};

// Partition of a projection's nodes into maximal bidirected-connected blocks,
// emitted in order of each block's lexicographically smallest member.
struct CComponentPartition {
    std::vector<std::set<NodeId>> blocks;

    // Block containing `n`; throws UnknownNode if absent.
    const std::set<NodeId>& block_of(const NodeId& n) const;
};

// Checks all CausalDiagram invariants: disjoint observed/latent sets,
// declared edge endpoints, no self loops, acyclicity.
void validate(const CausalDiagram& g);

// Reflexive-transitive closure of the parent relation applied to S.
// The diagram overload walks latent nodes as well.
std::set<NodeId> ancestors(const CausalDiagram& g, const std::set<NodeId>& s);
std::set<NodeId> ancestors(const ProjectedDiagram& g, const std::set<NodeId>& s);

// Deterministic topological order: among admissible next nodes, the
// lexicographically smallest is picked, so equal graphs always produce
// byte-identical downstream output.
std::vector<NodeId> topological_order(const CausalDiagram& g);
std::vector<NodeId> topological_order(const ProjectedDiagram& g);

// Latent projection. Observed-to-observed edges are preserved; a directed
// edge a->b is added when a directed path a -> ... -> b has an all-latent
// interior; a bidirected edge {a,b} is added when some latent common cause
// reaches both a and b through latent-only interiors.
ProjectedDiagram project_latents(const CausalDiagram& g);

CComponentPartition c_components(const ProjectedDiagram& g);

// Keeps exactly the nodes of S and the edges (of both kinds) with both
// endpoints in S.
ProjectedDiagram induced_subgraph(const ProjectedDiagram& g, const std::set<NodeId>& s);

}  // namespace planid
