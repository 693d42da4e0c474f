#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "planid/oracle.hpp"

using namespace planid;
using planid::testing::make_diagram;
using planid::testing::names;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST_CASE("observational") {
    SUBCASE("independent uniform binaries give the uniform table") {
        CausalDiagram g = make_diagram({"A", "B"}, {}, {});
        DiscreteModel m = random_model(g, binary_cards(g), 0);
        m.cpts["A"].table = {0.5, 0.5};
        m.cpts["B"].table = {0.5, 0.5};
        JointTable t = observational(m);
        for (double p : t.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("latent-free models factor as the product of CPTs") {
        CausalDiagram g = make_diagram({"A", "B"}, {}, {{"A", "B"}});
        DiscreteModel m = random_model(g, binary_cards(g), 3);
        JointTable t = observational(m);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                double expect = m.cpts.at("A").value({}, a) * m.cpts.at("B").value({a}, b);
                CHECK(t.marginal({{"A", a}, {"B", b}}) == doctest::Approx(expect).epsilon(1e-12));
            }
    }
    SUBCASE("fig1 reproduces its mixture factorization") {
        DiscreteModel m = random_model(fig1(), binary_cards(fig1()), 0);
        JointTable t = observational(m);
        // P(v) = P(y|x1,x2,z) P(x2) sum_u P(z|x2,u) P(x1|u) P(u)
        for (int x1 = 0; x1 < 2; ++x1)
            for (int x2 = 0; x2 < 2; ++x2)
                for (int z = 0; z < 2; ++z)
                    for (int y = 0; y < 2; ++y) {
                        double qzx1 = 0.0;
                        for (int u = 0; u < 2; ++u)
                            qzx1 += m.cpts.at("Z").value({u, x2}, z) *  // parents U,X2
                                    m.cpts.at("X1").value({u}, x1) * m.cpts.at("U").value({}, u);
                        double expect = m.cpts.at("Y").value({x1, x2, z}, y) *
                                        m.cpts.at("X2").value({}, x2) * qzx1;
                        double got =
                            t.marginal({{"X1", x1}, {"X2", x2}, {"Z", z}, {"Y", y}});
                        CHECK(std::abs(got - expect) <= 1e-12);
                    }
    }
    SUBCASE("fig3 reproduces its c-factorization") {
        DiscreteModel m = random_model(fig3(), binary_cards(fig3()), 1);
        JointTable t = observational(m);
        // P(v) = P(y|x1,x3,z3) P(x3|x2,z3) P(z1) Q[{X2,Z3}] Q[{X1,Z2}]
        auto cfg = enumerate_configs({"X1", "X2", "X3", "Y", "Z1", "Z2", "Z3"}, m.cards);
        for (const auto& v : cfg) {
            double q23 = 0.0, q12 = 0.0;
            for (int u = 0; u < 2; ++u) {
                q23 += m.cpts.at("U2").value({}, u) *
                       m.cpts.at("X2").value({u, v.at("Z2")}, v.at("X2")) *
                       m.cpts.at("Z3").value({u}, v.at("Z3"));
                q12 += m.cpts.at("U1").value({}, u) *
                       m.cpts.at("X1").value({u, v.at("Z1")}, v.at("X1")) *
                       m.cpts.at("Z2").value({u, v.at("X1")}, v.at("Z2"));
            }
            double py = t.conditional({{"Y", v.at("Y")}},
                                      {{"X1", v.at("X1")}, {"X3", v.at("X3")}, {"Z3", v.at("Z3")}});
            double px3 = t.conditional({{"X3", v.at("X3")}},
                                       {{"X2", v.at("X2")}, {"Z3", v.at("Z3")}});
            double pz1 = m.cpts.at("Z1").value({}, v.at("Z1"));
            double expect = py * px3 * pz1 * q23 * q12;
            CHECK(std::abs(t.marginal(v) - expect) <= 1e-12);
        }
    }
}

TEST_CASE("interventional") {
    SUBCASE("all-idle strategies equal the observational marginal") {
        DiscreteModel m = random_model(fig1(), binary_cards(fig1()), 4);
        Strategy s;
        s.assignments["X1"] = IdleRegime{};
        s.assignments["X2"] = IdleRegime{};
        std::vector<double> post = interventional(m, s, names({"Y"}));
        JointTable t = observational(m);
        CHECK(std::abs(post[0] - t.marginal({{"Y", 0}})) <= 1e-12);
        CHECK(std::abs(post[1] - t.marginal({{"Y", 1}})) <= 1e-12);
    }
    SUBCASE("two independent paths agree for atomic strategies") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            DiscreteModel m = random_model(fig2a(), binary_cards(fig2a()), seed);
            Strategy s;
            s.assignments["X1"] = AtomicRegime{static_cast<int>(seed % 2)};
            s.assignments["X2"] = AtomicRegime{static_cast<int>((seed / 2) % 2)};
            std::vector<double> a = interventional(m, s, names({"Y", "Z"}));
            std::vector<double> b = truncated_atomic(
                m, {{"X1", static_cast<int>(seed % 2)}, {"X2", static_cast<int>((seed / 2) % 2)}},
                names({"Y", "Z"}));
            CHECK(max_abs_diff(a, b) <= 1e-12);
        }
    }
    SUBCASE("distributions sum to one") {
        DiscreteModel m = random_model(fig3(), binary_cards(fig3()), 9);
        Strategy s;
        s.assignments["X1"] = ConditionalRegime{{"Z1"}, {2}, {0, 1}};
        s.assignments["X2"] = ConditionalRegime{{"Z2"}, {2}, {1, 0}};
        s.assignments["X3"] = ConditionalRegime{{"Z3"}, {2}, {0, 1}};
        std::vector<double> post = interventional(m, s, names({"Y"}));
        CHECK(std::abs(post[0] + post[1] - 1.0) <= 1e-10);
    }
}

TEST_CASE("random models") {
    SUBCASE("deterministic in the seed") {
        DiscreteModel a = random_model(fig1(), binary_cards(fig1()), 7);
        DiscreteModel b = random_model(fig1(), binary_cards(fig1()), 7);
        for (const auto& [n, cpt] : a.cpts) CHECK(cpt.table == b.cpts.at(n).table);
    }
    SUBCASE("different seeds differ somewhere") {
        DiscreteModel a = random_model(fig1(), binary_cards(fig1()), 0);
        DiscreteModel b = random_model(fig1(), binary_cards(fig1()), 1);
        bool differs = false;
        for (const auto& [n, cpt] : a.cpts)
            if (cpt.table != b.cpts.at(n).table) differs = true;
        CHECK(differs);
    }
    SUBCASE("rows are normalized and strictly interior") {
        DiscreteModel m = random_model(fig3(), binary_cards(fig3()), 5);
        for (const auto& [n, cpt] : m.cpts) {
            size_t rows = cpt.table.size() / static_cast<size_t>(cpt.card);
            for (size_t r = 0; r < rows; ++r) {
                double s = 0.0;
                for (int v = 0; v < cpt.card; ++v) {
                    double q = cpt.table[r * static_cast<size_t>(cpt.card) + static_cast<size_t>(v)];
                    CHECK(q >= 0.01);
                    s += q;
                }
                CHECK(std::abs(s - 1.0) <= 1e-12);
            }
        }
    }
    SUBCASE("state-space cap is enforced") {
        CausalDiagram g;
        for (int i = 0; i < 25; ++i) g.observed.insert("N" + std::to_string(i));
        std::map<NodeId, int> cards;
        for (const auto& n : g.observed) cards[n] = 2;
        DiscreteModel m;
        m.diagram = g;
        m.cards = cards;
        for (const auto& n : g.observed) {
            Cpt cpt;
            cpt.card = 2;
            cpt.table = {0.5, 0.5};
            m.cpts[n] = cpt;
        }
        CHECK_THROWS_AS(validate_model(m), Error);
    }
}

TEST_CASE("compare flags wrong estimands") {
    DiscreteModel m = random_model(fig1(), binary_cards(fig1()), 2);
    Strategy s;
    s.assignments["X1"] = AtomicRegime{0};
    s.assignments["X2"] = AtomicRegime{0};
    double dev = compare(m, s, names({"Y"}), Estimand::one());
    CHECK(dev >= 0.5);
}

TEST_CASE("counterexample pairs witness non-identifiability") {
    SUBCASE("fig2a dynamic plan") {
        auto [a, b] = fig2a_counterexample_pair();
        CHECK(max_abs_diff(observational(a).probs, observational(b).probs) <= 1e-12);
        Strategy dynamic;
        dynamic.assignments["X1"] = AtomicRegime{0};
        dynamic.assignments["X2"] = ConditionalRegime{{"X1", "Z"}, {2, 2}, {1, 0, 1, 0}};
        std::vector<double> pa = interventional(a, dynamic, names({"Y"}));
        std::vector<double> pb = interventional(b, dynamic, names({"Y"}));
        CHECK(max_abs_diff(pa, pb) >= 0.01);
    }
    SUBCASE("fig3 post-intervention distribution of Z2") {
        auto [a, b] = fig3_counterexample_pair();
        CHECK(max_abs_diff(observational(a).probs, observational(b).probs) <= 1e-12);
        Strategy all_atomic;
        for (const auto& n : a.diagram.observed)
            if (n != "Z2") all_atomic.assignments[n] = AtomicRegime{0};
        std::vector<double> pa = interventional(a, all_atomic, names({"Z2"}));
        std::vector<double> pb = interventional(b, all_atomic, names({"Z2"}));
        CHECK(max_abs_diff(pa, pb) >= 0.01);
    }
}

TEST_CASE("observational is invariant under latent relabeling") {
    DiscreteModel m = random_model(fig2a(), binary_cards(fig2a()), 6);
    DiscreteModel renamed = m;
    renamed.diagram.latent = {"W1", "W2"};
    renamed.diagram.edges.clear();
    auto map_name = [](const NodeId& n) -> NodeId {
        if (n == "U1") return "W1";
        if (n == "U2") return "W2";
        return n;
    };
    for (const auto& [p, c] : m.diagram.edges)
        renamed.diagram.edges.insert({map_name(p), map_name(c)});
    renamed.cards.erase("U1");
    renamed.cards.erase("U2");
    renamed.cards["W1"] = 2;
    renamed.cards["W2"] = 2;
    renamed.cpts["W1"] = renamed.cpts.at("U1");
    renamed.cpts["W2"] = renamed.cpts.at("U2");
    renamed.cpts.erase("U1");
    renamed.cpts.erase("U2");
    for (auto& [n, cpt] : renamed.cpts)
        for (auto& p : cpt.parents) p = map_name(p);
    // parent lists must stay sorted after renaming (U* -> W* keeps order here)
    std::vector<double> a = observational(m).probs;
    std::vector<double> b = observational(renamed).probs;
    CHECK(max_abs_diff(a, b) <= 1e-15);
}
