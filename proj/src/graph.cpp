#include "planid/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace planid {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::SelfLoop: return "SelfLoop";
        case Errc::CycleDetected: return "CycleDetected";
        case Errc::UnknownNode: return "UnknownNode";
        case Errc::DuplicateNode: return "DuplicateNode";
        case Errc::UnknownAction: return "UnknownAction";
        case Errc::LatentConditioning: return "LatentConditioning";
        case Errc::CyclicStrategy: return "CyclicStrategy";
        case Errc::IdleHasNoFactor: return "IdleHasNoFactor";
        case Errc::MissingConditioningValue: return "MissingConditioningValue";
        case Errc::MissingAssignment: return "MissingAssignment";
        case Errc::UnknownVariable: return "UnknownVariable";
        case Errc::NotACComponent: return "NotACComponent";
        case Errc::LatentsPresent: return "LatentsPresent";
        case Errc::ParseError: return "ParseError";
        case Errc::ModelTooLarge: return "ModelTooLarge";
        case Errc::InvalidModel: return "InvalidModel";
    }
    return "Error";
}

std::set<NodeId> CausalDiagram::all_nodes() const {
    std::set<NodeId> out = observed;
    out.insert(latent.begin(), latent.end());
    return out;
}

std::set<NodeId> CausalDiagram::parents(const NodeId& n) const {
    std::set<NodeId> out;
    for (const auto& [p, c] : edges)
        if (c == n) out.insert(p);
    return out;
}

std::set<NodeId> CausalDiagram::children(const NodeId& n) const {
    std::set<NodeId> out;
    for (const auto& [p, c] : edges)
        if (p == n) out.insert(c);
    return out;
}

std::set<NodeId> ProjectedDiagram::parents(const NodeId& n) const {
    std::set<NodeId> out;
    for (const auto& [p, c] : directed)
        if (c == n) out.insert(p);
    return out;
}

std::set<NodeId> ProjectedDiagram::bidirected_neighbors(const NodeId& n) const {
    std::set<NodeId> out;
    for (const auto& [a, b] : bidirected) {
        if (a == n) out.insert(b);
        if (b == n) out.insert(a);
    }
    return out;
}

const std::set<NodeId>& CComponentPartition::block_of(const NodeId& n) const {
    for (const auto& b : blocks)
        if (b.count(n)) return b;
    throw Error(Errc::UnknownNode, "node " + n + " not in any c-component block");
}

namespace {

// Kahn's algorithm over an explicit node/edge set; candidates are kept in an
// ordered set so ties break toward the lexicographically smallest node.
std::vector<NodeId> kahn_order(const std::set<NodeId>& nodes, const std::set<Edge>& edges) {
    std::map<NodeId, int> indeg;
    for (const auto& n : nodes) indeg[n] = 0;
    for (const auto& [p, c] : edges) {
        (void)p;
        indeg[c] += 1;
    }
    std::set<NodeId> ready;
    for (const auto& [n, d] : indeg)
        if (d == 0) ready.insert(n);

    std::vector<NodeId> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        NodeId n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (const auto& [p, c] : edges) {
            if (p != n) continue;
            if (--indeg[c] == 0) ready.insert(c);
        }
    }
    if (order.size() != nodes.size()) {
        // Extract one cycle from the leftover nodes by walking parents until a
        // node repeats.
        std::set<NodeId> leftover = nodes;
        for (const auto& n : order) leftover.erase(n);
        std::vector<NodeId> walk;
        std::set<NodeId> seen;
        NodeId cur = *leftover.begin();
        while (!seen.count(cur)) {
            seen.insert(cur);
            walk.push_back(cur);
            for (const auto& [p, c] : edges) {
                if (c == cur && leftover.count(p)) {
                    cur = p;
                    break;
                }
            }
        }
        std::string cycle = cur;
        for (auto it = walk.rbegin(); it != walk.rend(); ++it) {
            cycle += " <- " + *it;
            if (*it == cur) break;
        }
        throw Error(Errc::CycleDetected, cycle);
    }
    return order;
}

std::set<NodeId> ancestor_closure(const std::set<NodeId>& s,
                                  const std::set<NodeId>& nodes,
                                  const std::set<Edge>& edges) {
    for (const auto& n : s)
        if (!nodes.count(n)) throw Error(Errc::UnknownNode, n);
    std::set<NodeId> out = s;
    std::deque<NodeId> queue(s.begin(), s.end());
    while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        for (const auto& [p, c] : edges) {
            if (c == n && !out.count(p)) {
                out.insert(p);
                queue.push_back(p);
            }
        }
    }
    return out;
}

}  // namespace

void validate(const CausalDiagram& g) {
    for (const auto& n : g.observed)
        if (g.latent.count(n))
            throw Error(Errc::DuplicateNode, n + " declared both observed and latent");
    for (const auto& [p, c] : g.edges) {
        if (p == c) throw Error(Errc::SelfLoop, p);
        if (!g.has_node(p)) throw Error(Errc::UnknownNode, p);
        if (!g.has_node(c)) throw Error(Errc::UnknownNode, c);
    }
    kahn_order(g.all_nodes(), g.edges);  // throws CycleDetected
}

std::set<NodeId> ancestors(const CausalDiagram& g, const std::set<NodeId>& s) {
    return ancestor_closure(s, g.all_nodes(), g.edges);
}

std::set<NodeId> ancestors(const ProjectedDiagram& g, const std::set<NodeId>& s) {
    return ancestor_closure(s, g.nodes, g.directed);
}

std::vector<NodeId> topological_order(const CausalDiagram& g) {
    return kahn_order(g.all_nodes(), g.edges);
}

std::vector<NodeId> topological_order(const ProjectedDiagram& g) {
    return kahn_order(g.nodes, g.directed);
}

ProjectedDiagram project_latents(const CausalDiagram& g) {
    validate(g);
    ProjectedDiagram out;
    out.nodes = g.observed;
    for (const auto& [p, c] : g.edges)
        if (!g.is_latent(p) && !g.is_latent(c)) out.directed.insert({p, c});

    // Observed nodes reachable from `start`'s successors through latent-only
    // interiors. Walks stop at the first observed node on every branch.
    auto latent_reach = [&](const NodeId& start, bool& compound) {
        std::set<NodeId> hit;
        std::set<NodeId> visited_latents;
        std::deque<std::pair<NodeId, bool>> queue;  // (latent node, stepped through another latent)
        for (const auto& c : g.children(start)) {
            if (g.is_latent(c)) {
                queue.push_back({c, false});
                visited_latents.insert(c);
            } else {
                hit.insert(c);
            }
        }
        while (!queue.empty()) {
            auto [n, deep] = queue.front();
            queue.pop_front();
            for (const auto& c : g.children(n)) {
                if (g.is_latent(c)) {
                    if (!visited_latents.count(c)) {
                        visited_latents.insert(c);
                        queue.push_back({c, true});
                    }
                } else {
                    hit.insert(c);
                    if (deep) compound = true;
                }
            }
        }
        return hit;
    };

    // Bidirected edges: one per pair of observed nodes sharing a latent cause
    // through latent-only directed paths.
    for (const auto& u : g.latent) {
        bool compound = false;
        std::set<NodeId> reached = latent_reach(u, compound);
        // Direct observed children count as reached with a trivial path.
        if (reached.size() >= 2 && compound) out.compound_latent_paths = true;
        for (auto a = reached.begin(); a != reached.end(); ++a) {
            for (auto b = std::next(a); b != reached.end(); ++b) {
                out.bidirected.insert({*a, *b});  // *a < *b by set order
            }
        }
    }

    // Directed edges through latent mediators: a -> u -> ... -> b with an
    // all-latent interior behaves exactly like a direct edge a -> b for every
    // observed-level computation in this library.
    for (const auto& a : g.observed) {
        bool compound = false;
        std::set<NodeId> reached = latent_reach(a, compound);
        for (const auto& b : reached) {
            if (b != a && !out.directed.count({a, b})) {
                out.directed.insert({a, b});
                out.compound_latent_paths = true;
            }
        }
    }
    return out;
}

CComponentPartition c_components(const ProjectedDiagram& g) {
    CComponentPartition out;
    std::set<NodeId> remaining = g.nodes;
    // std::set iteration starts at the smallest member, so blocks come out
    // ordered by their lexicographically smallest element.
    while (!remaining.empty()) {
        NodeId seed = *remaining.begin();
        std::set<NodeId> block;
        std::deque<NodeId> queue{seed};
        block.insert(seed);
        while (!queue.empty()) {
            NodeId n = queue.front();
            queue.pop_front();
            for (const auto& m : g.bidirected_neighbors(n)) {
                if (!block.count(m)) {
                    block.insert(m);
                    queue.push_back(m);
                }
            }
        }
        for (const auto& n : block) remaining.erase(n);
        out.blocks.push_back(std::move(block));
    }
    return out;
}

ProjectedDiagram induced_subgraph(const ProjectedDiagram& g, const std::set<NodeId>& s) {
    for (const auto& n : s)
        if (!g.nodes.count(n)) throw Error(Errc::UnknownNode, n);
    ProjectedDiagram out;
    out.nodes = s;
    for (const auto& e : g.directed)
        if (s.count(e.first) && s.count(e.second)) out.directed.insert(e);
    for (const auto& e : g.bidirected)
        if (s.count(e.first) && s.count(e.second)) out.bidirected.insert(e);
    out.compound_latent_paths = g.compound_latent_paths;
    return out;
}

}  // namespace planid
