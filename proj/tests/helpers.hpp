#pragma once

#include <initializer_list>
#include <set>
#include <string>

#include "planid/graph.hpp"

namespace planid::testing {

inline CausalDiagram make_diagram(std::initializer_list<const char*> observed,
                                  std::initializer_list<const char*> latent,
                                  std::initializer_list<std::pair<const char*, const char*>> edges) {
    CausalDiagram g;
    for (const char* n : observed) g.observed.insert(n);
    for (const char* n : latent) g.latent.insert(n);
    for (const auto& [p, c] : edges) g.edges.insert({p, c});
    return g;
}

inline std::set<NodeId> names(std::initializer_list<const char*> list) {
    std::set<NodeId> out;
    for (const char* n : list) out.insert(n);
    return out;
}

}  // namespace planid::testing
