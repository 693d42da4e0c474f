#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "planid/graph.hpp"
#include "planid/oracle.hpp"

using namespace planid;
using planid::testing::make_diagram;
using planid::testing::names;

TEST_CASE("validate accepts the fixtures") {
    CHECK_NOTHROW(validate(fig1()));
    CHECK_NOTHROW(validate(fig2a()));
    CHECK_NOTHROW(validate(fig3()));
}

TEST_CASE("validate rejects self loops, cycles and undeclared nodes") {
    CausalDiagram self = make_diagram({"A"}, {}, {{"A", "A"}});
    try {
        validate(self);
        FAIL("expected SelfLoop");
    } catch (const Error& e) {
        CHECK(e.code == Errc::SelfLoop);
    }

    CausalDiagram cyc = make_diagram({"A", "B"}, {}, {{"A", "B"}, {"B", "A"}});
    try {
        validate(cyc);
        FAIL("expected CycleDetected");
    } catch (const Error& e) {
        CHECK(e.code == Errc::CycleDetected);
        CHECK(std::string(e.what()).find("A") != std::string::npos);
        CHECK(std::string(e.what()).find("B") != std::string::npos);
    }

    CausalDiagram unk = make_diagram({"A"}, {}, {{"A", "B"}});
    CHECK_THROWS_AS(validate(unk), Error);

    CausalDiagram dup;
    dup.observed = {"A"};
    dup.latent = {"A"};
    try {
        validate(dup);
        FAIL("expected DuplicateNode");
    } catch (const Error& e) {
        CHECK(e.code == Errc::DuplicateNode);
    }
}

TEST_CASE("ancestors") {
    SUBCASE("a root is its own ancestor set") {
        CHECK(ancestors(fig3(), names({"Z1"})) == names({"Z1"}));
    }
    SUBCASE("closure over latents") {
        CHECK(ancestors(fig1(), names({"Y"})) == names({"Y", "Z", "X1", "X2", "U"}));
    }
    SUBCASE("unknown node") { CHECK_THROWS_AS(ancestors(fig1(), names({"Q"})), Error); }
    SUBCASE("empty set") { CHECK(ancestors(fig1(), {}).empty()); }
}

TEST_CASE("topological order is deterministic with lexicographic ties") {
    CausalDiagram chain = make_diagram({"A", "B", "C"}, {}, {{"A", "B"}, {"B", "C"}});
    CHECK(topological_order(chain) == std::vector<NodeId>{"A", "B", "C"});

    CausalDiagram isolated = make_diagram({"B", "A"}, {}, {});
    CHECK(topological_order(isolated) == std::vector<NodeId>{"A", "B"});

    ProjectedDiagram p2a = project_latents(fig2a());
    CHECK(topological_order(p2a) == std::vector<NodeId>{"X1", "Z", "X2", "Y"});
}

TEST_CASE("latent projection") {
    SUBCASE("fig1") {
        ProjectedDiagram p = project_latents(fig1());
        CHECK(p.nodes == names({"X1", "X2", "Z", "Y"}));
        CHECK(p.bidirected == std::set<Edge>{{"X1", "Z"}});
        CHECK(p.directed ==
              std::set<Edge>{{"X2", "Z"}, {"X1", "Y"}, {"X2", "Y"}, {"Z", "Y"}});
        CHECK_FALSE(p.compound_latent_paths);
    }
    SUBCASE("no latents is the identity") {
        CausalDiagram g = make_diagram({"A", "B"}, {}, {{"A", "B"}});
        ProjectedDiagram p = project_latents(g);
        CHECK(p.directed == g.edges);
        CHECK(p.bidirected.empty());
    }
    SUBCASE("fig3") {
        ProjectedDiagram p = project_latents(fig3());
        CHECK(p.bidirected == std::set<Edge>{{"X1", "Z2"}, {"X2", "Z3"}});
    }
    SUBCASE("latent chains confound through latent-only interiors") {
        CausalDiagram g =
            make_diagram({"A", "B"}, {"U1", "U2"}, {{"U1", "U2"}, {"U2", "A"}, {"U1", "B"}});
        ProjectedDiagram p = project_latents(g);
        CHECK(p.bidirected == std::set<Edge>{{"A", "B"}});
        CHECK(p.compound_latent_paths);
    }
    SUBCASE("latent mediators become directed edges") {
        CausalDiagram g = make_diagram({"A", "B"}, {"U"}, {{"A", "U"}, {"U", "B"}});
        ProjectedDiagram p = project_latents(g);
        CHECK(p.directed == std::set<Edge>{{"A", "B"}});
        CHECK(p.bidirected.empty());
        CHECK(p.compound_latent_paths);
    }
}

TEST_CASE("c-components") {
    SUBCASE("fig3 blocks in smallest-member order") {
        CComponentPartition parts = c_components(project_latents(fig3()));
        REQUIRE(parts.blocks.size() == 5);
        CHECK(parts.blocks[0] == names({"X1", "Z2"}));
        CHECK(parts.blocks[1] == names({"X2", "Z3"}));
        CHECK(parts.blocks[2] == names({"X3"}));
        CHECK(parts.blocks[3] == names({"Y"}));
        CHECK(parts.blocks[4] == names({"Z1"}));
    }
    SUBCASE("no bidirected edges gives singletons") {
        CausalDiagram g = make_diagram({"A", "B", "C"}, {}, {{"A", "B"}});
        CComponentPartition parts = c_components(project_latents(g));
        CHECK(parts.blocks.size() == 3);
    }
    SUBCASE("fig2a") {
        CComponentPartition parts = c_components(project_latents(fig2a()));
        REQUIRE(parts.blocks.size() == 2);
        CHECK(parts.blocks[0] == names({"X1", "Y", "Z"}));
        CHECK(parts.blocks[1] == names({"X2"}));
    }
}

TEST_CASE("induced subgraph") {
    ProjectedDiagram p = project_latents(fig2a());
    SUBCASE("full node set is the identity") {
        ProjectedDiagram q = induced_subgraph(p, p.nodes);
        CHECK(q.directed == p.directed);
        CHECK(q.bidirected == p.bidirected);
    }
    SUBCASE("Y,Z keeps the confounding edge only") {
        ProjectedDiagram q = induced_subgraph(p, names({"Y", "Z"}));
        CHECK(q.nodes == names({"Y", "Z"}));
        CHECK(q.directed.empty());
        CHECK(q.bidirected == std::set<Edge>{{"Y", "Z"}});
    }
    SUBCASE("empty set") {
        ProjectedDiagram q = induced_subgraph(p, {});
        CHECK(q.nodes.empty());
        CHECK(q.directed.empty());
    }
    SUBCASE("composition equals intersection") {
        ProjectedDiagram a = induced_subgraph(induced_subgraph(p, names({"X1", "Z", "Y"})),
                                              names({"Z", "Y"}));
        ProjectedDiagram b = induced_subgraph(p, names({"Z", "Y"}));
        CHECK(a.directed == b.directed);
        CHECK(a.bidirected == b.bidirected);
    }
}

TEST_CASE("graph properties on random diagrams") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        CausalDiagram g = random_diagram(seed, 6, 3);
        std::vector<NodeId> obs(g.observed.begin(), g.observed.end());
        std::mt19937_64 rng(seed);

        std::set<NodeId> s, t;
        for (const auto& n : obs) {
            if (rng() % 2) s.insert(n);
            if (rng() % 2) t.insert(n);
        }
        t.insert(s.begin(), s.end());

        // monotone and idempotent
        std::set<NodeId> as = ancestors(g, s), at = ancestors(g, t);
        CHECK(std::includes(at.begin(), at.end(), as.begin(), as.end()));
        CHECK(ancestors(g, as) == as);

        // topological order is a permutation respecting every edge
        std::vector<NodeId> order = topological_order(g);
        CHECK(order.size() == g.all_nodes().size());
        std::map<NodeId, size_t> pos;
        for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (const auto& [p, c] : g.edges) CHECK(pos.at(p) < pos.at(c));
        CHECK(topological_order(g) == order);

        // c-component blocks partition the projection's nodes
        ProjectedDiagram proj = project_latents(g);
        CComponentPartition parts = c_components(proj);
        std::set<NodeId> covered;
        for (const auto& b : parts.blocks) {
            for (const auto& n : b) {
                CHECK(!covered.count(n));
                covered.insert(n);
            }
        }
        CHECK(covered == proj.nodes);
    }
}

TEST_CASE("c-components are equivariant under relabeling") {
    CausalDiagram g = fig2a();
    auto relabel = [](const NodeId& n) { return "n_" + n; };
    CausalDiagram h;
    for (const auto& n : g.observed) h.observed.insert(relabel(n));
    for (const auto& n : g.latent) h.latent.insert(relabel(n));
    for (const auto& [p, c] : g.edges) h.edges.insert({relabel(p), relabel(c)});

    CComponentPartition pg = c_components(project_latents(g));
    CComponentPartition ph = c_components(project_latents(h));
    REQUIRE(pg.blocks.size() == ph.blocks.size());
    std::set<std::set<NodeId>> relabeled;
    for (const auto& b : pg.blocks) {
        std::set<NodeId> rb;
        for (const auto& n : b) rb.insert(relabel(n));
        relabeled.insert(rb);
    }
    for (const auto& b : ph.blocks) CHECK(relabeled.count(b));
}
