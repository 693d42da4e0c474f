#include <doctest.h>

#include "helpers.hpp"
#include "planid/oracle.hpp"
#include "planid/regimes.hpp"

using namespace planid;
using planid::testing::make_diagram;
using planid::testing::names;

namespace {

// The three-stage conditional strategy used throughout: every X_i responds to
// its own Z_i through an identity table.
Strategy fig3_strategy() {
    Strategy s;
    s.assignments["X1"] = ConditionalRegime{{"Z1"}, {2}, {0, 1}};
    s.assignments["X2"] = ConditionalRegime{{"Z2"}, {2}, {0, 1}};
    s.assignments["X3"] = ConditionalRegime{{"Z3"}, {2}, {0, 1}};
    return s;
}

}  // namespace

TEST_CASE("regime_factor") {
    SUBCASE("atomic delta") {
        Regime r = AtomicRegime{1};
        CHECK(regime_factor(r, 1, {}) == 1.0);
        CHECK(regime_factor(r, 0, {}) == 0.0);
    }
    SUBCASE("conditional delta on g(c)") {
        Regime r = ConditionalRegime{{"Z"}, {2}, {1, 0}};  // g(0)=1, g(1)=0
        CHECK(regime_factor(r, 1, {{"Z", 0}}) == 1.0);
        CHECK(regime_factor(r, 0, {{"Z", 0}}) == 0.0);
        CHECK(regime_factor(r, 0, {{"Z", 1}}) == 1.0);
    }
    SUBCASE("random table lookup") {
        Regime r = RandomRegime{{"Z"}, {2}, 2, {0.25, 0.75, 0.5, 0.5}};
        CHECK(regime_factor(r, 1, {{"Z", 0}}) == 0.75);
        CHECK(regime_factor(r, 0, {{"Z", 1}}) == 0.5);
    }
    SUBCASE("idle has no factor") {
        Regime r = IdleRegime{};
        CHECK_THROWS_AS((void)regime_factor(r, 0, {}), Error);
    }
    SUBCASE("missing conditioning value") {
        Regime r = ConditionalRegime{{"Z"}, {2}, {0, 1}};
        CHECK_THROWS_AS((void)regime_factor(r, 0, {}), Error);
        CHECK_THROWS_AS((void)regime_factor(r, 0, {{"W", 0}}), Error);
    }
    SUBCASE("factors sum to one over action values") {
        Regime rnd = RandomRegime{{"Z"}, {2}, 3, {0.2, 0.3, 0.5, 0.1, 0.1, 0.8}};
        Regime cnd = ConditionalRegime{{"Z"}, {2}, {2, 0}};
        Regime atm = AtomicRegime{1};
        for (int z = 0; z < 2; ++z) {
            double s_rnd = 0, s_cnd = 0, s_atm = 0;
            for (int v = 0; v < 3; ++v) {
                s_rnd += regime_factor(rnd, v, {{"Z", z}});
                s_cnd += regime_factor(cnd, v, {{"Z", z}});
                s_atm += regime_factor(atm, v, {});
            }
            CHECK(s_rnd == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(s_cnd == 1.0);
            CHECK(s_atm == 1.0);
        }
    }
}

TEST_CASE("validate_strategy") {
    SUBCASE("fig3 conditional plan passes unchanged") {
        NormalizedQuery q = validate_strategy(fig3(), names({"X1", "X2", "X3"}), names({"Y"}),
                                              fig3_strategy());
        CHECK(q.actions == names({"X1", "X2", "X3"}));
        CHECK(q.covariates == names({"Z1", "Z2", "Z3"}));
        CHECK(q.strategy.assignments.size() == 3);
    }
    SUBCASE("idle actions become covariates") {
        Strategy s;
        s.assignments["X1"] = IdleRegime{};
        s.assignments["X2"] = AtomicRegime{0};
        NormalizedQuery q = validate_strategy(fig1(), names({"X1", "X2"}), names({"Y"}), s);
        CHECK(q.actions == names({"X2"}));
        CHECK(q.covariates == names({"X1", "Z"}));
        CHECK(q.strategy.assignments.count("X1") == 0);
    }
    SUBCASE("mutual conditioning is a cyclic strategy") {
        CausalDiagram g = make_diagram({"A", "B"}, {}, {{"A", "B"}});
        Strategy s;
        s.assignments["A"] = ConditionalRegime{{"B"}, {2}, {0, 1}};
        s.assignments["B"] = ConditionalRegime{{"A"}, {2}, {0, 1}};
        try {
            validate_strategy(g, names({"A", "B"}), {}, s);
            FAIL("expected CyclicStrategy");
        } catch (const Error& e) {
            CHECK(e.code == Errc::CyclicStrategy);
        }
    }
    SUBCASE("conditioning on a latent is rejected") {
        Strategy s;
        s.assignments["X1"] = ConditionalRegime{{"U"}, {2}, {0, 1}};
        s.assignments["X2"] = AtomicRegime{0};
        try {
            validate_strategy(fig1(), names({"X1", "X2"}), names({"Y"}), s);
            FAIL("expected LatentConditioning");
        } catch (const Error& e) {
            CHECK(e.code == Errc::LatentConditioning);
        }
    }
    SUBCASE("conditioning on the outcome is rejected") {
        Strategy s;
        s.assignments["X1"] = ConditionalRegime{{"Y"}, {2}, {0, 1}};
        s.assignments["X2"] = AtomicRegime{0};
        CHECK_THROWS_AS(validate_strategy(fig1(), names({"X1", "X2"}), names({"Y"}), s), Error);
    }
    SUBCASE("unknown action") {
        Strategy s;
        s.assignments["X1"] = AtomicRegime{0};
        try {
            validate_strategy(fig1(), names({"X1", "X2"}), names({"Y"}), s);
            FAIL("expected UnknownAction");
        } catch (const Error& e) {
            CHECK(e.code == Errc::UnknownAction);
        }
    }
}

TEST_CASE("manipulated graph") {
    SUBCASE("atomic actions become parentless") {
        Strategy s;
        s.assignments["X1"] = AtomicRegime{0};
        s.assignments["X2"] = AtomicRegime{1};
        CausalDiagram g = manipulated_graph(fig1(), s);
        CHECK(g.parents("X1").empty());
        CHECK(g.parents("X2").empty());
        CHECK(g.parents("Y") == names({"X1", "X2", "Z"}));
    }
    SUBCASE("fig3 conditional strategy rewires the action parents") {
        CausalDiagram g = manipulated_graph(fig3(), fig3_strategy());
        CHECK(g.parents("X1") == names({"Z1"}));
        CHECK(g.parents("X2") == names({"Z2"}));
        CHECK(g.parents("X3") == names({"Z3"}));
        CHECK(g.edges.count({"U1", "X1"}) == 0);
        CHECK(g.edges.count({"U2", "X2"}) == 0);
        CHECK(g.edges.count({"X2", "X3"}) == 0);
        // covariate ancestors of Y in the manipulated graph
        CHECK(ancestors(g, names({"Y"})) == names({"Y", "X1", "X3", "Z1", "Z3", "U2"}));
    }
    SUBCASE("all-idle strategies leave the diagram unchanged") {
        Strategy s;
        s.assignments["X1"] = IdleRegime{};
        s.assignments["X2"] = IdleRegime{};
        CausalDiagram g = manipulated_graph(fig1(), s);
        CHECK(g.edges == fig1().edges);
    }
    SUBCASE("idempotent under the same strategy") {
        CausalDiagram once = manipulated_graph(fig3(), fig3_strategy());
        CausalDiagram twice = manipulated_graph(once, fig3_strategy());
        CHECK(once.edges == twice.edges);
    }
}
