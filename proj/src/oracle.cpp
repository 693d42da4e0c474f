#include "planid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace planid {

double Cpt::value(const std::vector<int>& parent_values, int v) const {
    return table[static_cast<size_t>(config_index(parent_cards, parent_values)) * card + v];
}

namespace {

constexpr std::uint64_t kMaxStates = 1u << 20;

struct Enumerator {
    std::vector<NodeId> vars;   // sorted
    std::vector<int> cards;
    std::vector<int> vals;

    explicit Enumerator(const std::map<NodeId, int>& card_map) {
        for (const auto& [n, k] : card_map) {
            vars.push_back(n);
            cards.push_back(k);
        }
        vals.assign(vars.size(), 0);
    }

    int index_of(const NodeId& n) const {
        auto it = std::lower_bound(vars.begin(), vars.end(), n);
        return static_cast<int>(it - vars.begin());
    }

    bool advance() {
        for (size_t i = vars.size(); i-- > 0;) {
            if (++vals[i] < cards[i]) return true;
            vals[i] = 0;
        }
        return false;
    }
};

// Per-node lookup plan: positions of the node and its parents in the
// enumerator's variable list.
struct NodePlan {
    NodeId node;
    int self = 0;
    std::vector<int> parent_pos;
    const Cpt* cpt = nullptr;
};

std::vector<NodePlan> make_plans(const DiscreteModel& m, const Enumerator& en) {
    std::vector<NodePlan> plans;
    for (const auto& [n, cpt] : m.cpts) {
        NodePlan p;
        p.node = n;
        p.self = en.index_of(n);
        for (const auto& par : cpt.parents) p.parent_pos.push_back(en.index_of(par));
        p.cpt = &cpt;
        plans.push_back(std::move(p));
    }
    return plans;
}

double plan_prob(const NodePlan& p, const std::vector<int>& vals) {
    std::vector<int> pv;
    pv.reserve(p.parent_pos.size());
    for (int i : p.parent_pos) pv.push_back(vals[i]);
    return p.cpt->value(pv, vals[p.self]);
}

}  // namespace

void validate_model(const DiscreteModel& m) {
    validate(m.diagram);
    std::uint64_t states = 1;
    for (const auto& n : m.diagram.all_nodes()) {
        auto it = m.cards.find(n);
        if (it == m.cards.end()) throw Error(Errc::InvalidModel, "no cardinality for " + n);
        if (it->second < 2) throw Error(Errc::InvalidModel, "cardinality of " + n + " below 2");
        states *= static_cast<std::uint64_t>(it->second);
        if (states > kMaxStates)
            throw Error(Errc::ModelTooLarge, "joint state space exceeds 2^20 configurations");
        if (!m.cpts.count(n)) throw Error(Errc::InvalidModel, "no CPT for " + n);
    }
    for (const auto& [n, cpt] : m.cpts) {
        if (!m.diagram.has_node(n)) throw Error(Errc::InvalidModel, "CPT for unknown node " + n);
        std::set<NodeId> declared(cpt.parents.begin(), cpt.parents.end());
        if (declared != m.diagram.parents(n))
            throw Error(Errc::InvalidModel, "CPT parents of " + n + " do not match the diagram");
        if (!std::is_sorted(cpt.parents.begin(), cpt.parents.end()))
            throw Error(Errc::InvalidModel, "CPT parents of " + n + " must be sorted");
        size_t rows = 1;
        for (size_t i = 0; i < cpt.parents.size(); ++i) {
            if (cpt.parent_cards[i] != m.cards.at(cpt.parents[i]))
                throw Error(Errc::InvalidModel, "CPT parent cards of " + n + " do not match");
            rows *= static_cast<size_t>(cpt.parent_cards[i]);
        }
        if (cpt.card != m.cards.at(n) || cpt.table.size() != rows * static_cast<size_t>(cpt.card))
            throw Error(Errc::InvalidModel, "CPT shape of " + n + " does not match");
        for (size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (int v = 0; v < cpt.card; ++v) {
                double q = cpt.table[r * cpt.card + v];
                if (q < 0.0) throw Error(Errc::InvalidModel, "negative CPT entry for " + n);
                s += q;
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw Error(Errc::InvalidModel, "CPT row of " + n + " does not sum to 1");
        }
    }
}

JointTable observational(const DiscreteModel& m) {
    validate_model(m);
    Enumerator en(m.cards);
    std::vector<NodePlan> plans = make_plans(m, en);

    JointTable out;
    std::map<NodeId, int> obs_cards;
    for (const auto& n : m.diagram.observed) obs_cards[n] = m.cards.at(n);
    for (const auto& [n, k] : obs_cards) {
        out.vars.push_back(n);
        out.cards.push_back(k);
    }
    size_t total = 1;
    for (int k : out.cards) total *= static_cast<size_t>(k);
    out.probs.assign(total, 0.0);

    std::vector<int> obs_pos;
    for (const auto& v : out.vars) obs_pos.push_back(en.index_of(v));

    do {
        double p = 1.0;
        for (const auto& plan : plans) p *= plan_prob(plan, en.vals);
        size_t idx = 0;
        for (size_t i = 0; i < obs_pos.size(); ++i)
            idx = idx * static_cast<size_t>(out.cards[i]) + static_cast<size_t>(en.vals[obs_pos[i]]);
        out.probs[idx] += p;
    } while (en.advance());
    return out;
}

namespace {

std::vector<double> marginalize_outcome(const DiscreteModel& m,
                                        const std::set<NodeId>& outcome,
                                        Enumerator& en,
                                        const std::function<double(const std::vector<int>&)>& weight) {
    std::vector<NodeId> outs(outcome.begin(), outcome.end());
    std::vector<int> out_cards, out_pos;
    size_t total = 1;
    for (const auto& n : outs) {
        out_cards.push_back(m.cards.at(n));
        out_pos.push_back(en.index_of(n));
        total *= static_cast<size_t>(m.cards.at(n));
    }
    std::vector<double> result(total, 0.0);
    do {
        double p = weight(en.vals);
        if (p == 0.0) continue;
        size_t idx = 0;
        for (size_t i = 0; i < out_pos.size(); ++i)
            idx = idx * static_cast<size_t>(out_cards[i]) + static_cast<size_t>(en.vals[out_pos[i]]);
        result[idx] += p;
    } while (en.advance());
    return result;
}

}  // namespace

std::vector<double> interventional(const DiscreteModel& m,
                                   const Strategy& strategy,
                                   const std::set<NodeId>& outcome) {
    validate_model(m);
    Enumerator en(m.cards);
    std::vector<NodePlan> plans = make_plans(m, en);

    // Positions of each non-idle action and its conditioning variables.
    struct ActionPlan {
        NodeId action;
        int self;
        const Regime* regime;
        std::vector<std::pair<NodeId, int>> cond_pos;
    };
    std::vector<ActionPlan> action_plans;
    std::set<NodeId> replaced;
    for (const auto& [a, r] : strategy.assignments) {
        if (std::holds_alternative<IdleRegime>(r)) continue;
        ActionPlan ap{a, en.index_of(a), &r, {}};
        for (const auto& c : regime_cond(r)) ap.cond_pos.push_back({c, en.index_of(c)});
        action_plans.push_back(std::move(ap));
        replaced.insert(a);
    }

    auto weight = [&](const std::vector<int>& vals) {
        double p = 1.0;
        for (const auto& plan : plans) {
            if (replaced.count(plan.node)) continue;
            p *= plan_prob(plan, vals);
            if (p == 0.0) return 0.0;
        }
        for (const auto& ap : action_plans) {
            std::map<NodeId, int> cond;
            for (const auto& [c, pos] : ap.cond_pos) cond[c] = vals[pos];
            p *= regime_factor(*ap.regime, vals[ap.self], cond);
            if (p == 0.0) return 0.0;
        }
        return p;
    };
    return marginalize_outcome(m, outcome, en, weight);
}

std::vector<double> truncated_atomic(const DiscreteModel& m,
                                     const std::map<NodeId, int>& action_values,
                                     const std::set<NodeId>& outcome) {
    validate_model(m);
    Enumerator en(m.cards);
    std::vector<NodePlan> plans = make_plans(m, en);
    std::vector<std::pair<int, int>> pins;
    for (const auto& [a, v] : action_values) pins.push_back({en.index_of(a), v});

    auto weight = [&](const std::vector<int>& vals) {
        for (const auto& [pos, v] : pins)
            if (vals[pos] != v) return 0.0;
        double p = 1.0;
        for (const auto& plan : plans) {
            if (action_values.count(plan.node)) continue;  // truncated factor
            p *= plan_prob(plan, vals);
            if (p == 0.0) return 0.0;
        }
        return p;
    };
    return marginalize_outcome(m, outcome, en, weight);
}

// ---------------------------------------------------------------------------
// Random generation. Raw engine bits are mapped to uniforms by hand so the
// output depends only on the mt19937_64 stream, which the standard pins down.

namespace {

double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
}

std::vector<double> interior_simplex_row(std::mt19937_64& rng, int k) {
    std::vector<double> e(k);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        e[i] = -std::log(uniform01(rng));
        total += e[i];
    }
    std::vector<double> row(k);
    for (int i = 0; i < k; ++i) row[i] = 0.01 + (1.0 - 0.01 * k) * e[i] / total;
    return row;
}

}  // namespace

DiscreteModel random_model(const CausalDiagram& diagram,
                           const std::map<NodeId, int>& cards,
                           std::uint64_t seed) {
    validate(diagram);
    std::mt19937_64 rng(seed);
    DiscreteModel m;
    m.diagram = diagram;
    m.cards = cards;
    for (const auto& n : diagram.all_nodes()) {  // sorted, so draws are reproducible
        Cpt cpt;
        std::set<NodeId> parents = diagram.parents(n);
        cpt.parents.assign(parents.begin(), parents.end());
        size_t rows = 1;
        for (const auto& p : cpt.parents) {
            cpt.parent_cards.push_back(cards.at(p));
            rows *= static_cast<size_t>(cards.at(p));
        }
        cpt.card = cards.at(n);
        for (size_t r = 0; r < rows; ++r) {
            std::vector<double> row = interior_simplex_row(rng, cpt.card);
            cpt.table.insert(cpt.table.end(), row.begin(), row.end());
        }
        m.cpts[n] = std::move(cpt);
    }
    validate_model(m);
    return m;
}

std::vector<std::map<NodeId, int>> enumerate_configs(const std::vector<NodeId>& vars,
                                                     const std::map<NodeId, int>& cards) {
    std::vector<std::map<NodeId, int>> out;
    std::vector<int> vals(vars.size(), 0);
    while (true) {
        std::map<NodeId, int> cfg;
        for (size_t i = 0; i < vars.size(); ++i) cfg[vars[i]] = vals[i];
        out.push_back(std::move(cfg));
        size_t i = vars.size();
        bool done = true;
        while (i-- > 0) {
            if (++vals[i] < cards.at(vars[i])) {
                done = false;
                break;
            }
            vals[i] = 0;
        }
        if (done) break;
    }
    return out;
}

double compare(const DiscreteModel& m,
               const Strategy& strategy,
               const std::set<NodeId>& outcome,
               const Estimand& estimand) {
    JointTable obs = observational(m);
    std::vector<double> truth = interventional(m, strategy, outcome);
    std::vector<NodeId> outs(outcome.begin(), outcome.end());
    auto configs = enumerate_configs(outs, m.cards);
    double worst = 0.0;
    for (size_t i = 0; i < configs.size(); ++i) {
        double got = evaluate(estimand, obs, strategy, configs[i]);
        worst = std::max(worst, std::abs(got - truth[i]));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Fixtures

CausalDiagram fig1() {
    CausalDiagram g;
    g.observed = {"X1", "X2", "Z", "Y"};
    g.latent = {"U"};
    g.edges = {{"U", "X1"}, {"U", "Z"}, {"X2", "Z"}, {"X1", "Y"}, {"X2", "Y"}, {"Z", "Y"}};
    return g;
}

CausalDiagram fig2a() {
    CausalDiagram g;
    g.observed = {"X1", "Z", "X2", "Y"};
    g.latent = {"U1", "U2"};
    g.edges = {{"U1", "X1"}, {"U1", "Z"},  {"U2", "Z"}, {"U2", "Y"}, {"X1", "Z"},
               {"X1", "X2"}, {"X1", "Y"},  {"Z", "X2"}, {"X2", "Y"}};
    return g;
}

CausalDiagram fig3() {
    CausalDiagram g;
    g.observed = {"Z1", "X1", "Z2", "X2", "Z3", "X3", "Y"};
    g.latent = {"U1", "U2"};
    g.edges = {{"Z1", "X1"}, {"U1", "X1"}, {"U1", "Z2"}, {"X1", "Z2"}, {"Z2", "X2"},
               {"U2", "X2"}, {"U2", "Z3"}, {"Z3", "X3"}, {"X2", "X3"}, {"X1", "Y"},
               {"X3", "Y"},  {"Z3", "Y"}};
    return g;
}

std::map<NodeId, int> binary_cards(const CausalDiagram& g) {
    std::map<NodeId, int> cards;
    for (const auto& n : g.all_nodes()) cards[n] = 2;
    return cards;
}

namespace {

std::vector<double> point_row(int card, int at) {
    std::vector<double> row(card, 0.0);
    row[at] = 1.0;
    return row;
}

std::vector<double> coin_row() { return {0.5, 0.5}; }

// Builds a binary CPT from a per-row generator over sorted parent values.
Cpt make_cpt(const DiscreteModel& m, const NodeId& n,
             const std::function<std::vector<double>(const std::map<NodeId, int>&)>& gen) {
    Cpt cpt;
    std::set<NodeId> parents = m.diagram.parents(n);
    cpt.parents.assign(parents.begin(), parents.end());
    for (const auto& p : cpt.parents) cpt.parent_cards.push_back(m.cards.at(p));
    cpt.card = m.cards.at(n);
    for (const auto& cfg : enumerate_configs(cpt.parents, m.cards)) {
        std::vector<double> row = gen(cfg);
        cpt.table.insert(cpt.table.end(), row.begin(), row.end());
    }
    return cpt;
}

}  // namespace

std::pair<DiscreteModel, DiscreteModel> fig2a_counterexample_pair() {
    DiscreteModel a;
    a.diagram = fig2a();
    a.cards = binary_cards(a.diagram);
    a.cpts["U1"] = make_cpt(a, "U1", [](const auto&) { return coin_row(); });
    a.cpts["U2"] = make_cpt(a, "U2", [](const auto&) { return coin_row(); });
    a.cpts["X1"] = make_cpt(a, "X1", [](const auto&) { return coin_row(); });
    a.cpts["Z"] = make_cpt(a, "Z", [](const auto& c) { return point_row(2, c.at("U2")); });
    a.cpts["X2"] = make_cpt(a, "X2", [](const auto& c) { return point_row(2, c.at("Z")); });
    DiscreteModel b = a;
    // Y = X2 xor U2 in one model, constant 0 in the other. Observationally
    // X2 = Z = U2, so both mechanisms emit Y = 0 with probability one.
    a.cpts["Y"] = make_cpt(a, "Y", [](const auto& c) {
        return point_row(2, c.at("X2") ^ c.at("U2"));
    });
    b.cpts["Y"] = make_cpt(b, "Y", [](const auto&) { return point_row(2, 0); });
    validate_model(a);
    validate_model(b);
    return {a, b};
}

std::pair<DiscreteModel, DiscreteModel> fig3_counterexample_pair() {
    DiscreteModel a;
    a.diagram = fig3();
    a.cards = binary_cards(a.diagram);
    for (const char* name : {"U1", "U2", "Z1", "X2", "Z3", "X3", "Y"})
        a.cpts[name] = make_cpt(a, name, [](const auto&) { return coin_row(); });
    a.cpts["X1"] = make_cpt(a, "X1", [](const auto& c) { return point_row(2, c.at("U1")); });
    DiscreteModel b = a;
    // Z2 = X1 xor U1 in one model, constant 0 in the other; observationally
    // X1 = U1 hides the difference.
    a.cpts["Z2"] = make_cpt(a, "Z2", [](const auto& c) {
        return point_row(2, c.at("X1") ^ c.at("U1"));
    });
    b.cpts["Z2"] = make_cpt(b, "Z2", [](const auto&) { return point_row(2, 0); });
    validate_model(a);
    validate_model(b);
    return {a, b};
}

// ---------------------------------------------------------------------------
// Random queries

CausalDiagram random_diagram(std::uint64_t seed, int max_observed, int max_latents) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
    int n_obs = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_observed - 1));
    int n_lat = static_cast<int>(rng() % static_cast<std::uint64_t>(max_latents + 1));

    CausalDiagram g;
    std::vector<NodeId> obs;
    for (int i = 1; i <= n_obs; ++i) {
        obs.push_back("V" + std::to_string(i));
        g.observed.insert(obs.back());
    }
    // random causal order
    for (int i = n_obs - 1; i > 0; --i)
        std::swap(obs[i], obs[rng() % static_cast<std::uint64_t>(i + 1)]);
    for (int i = 0; i < n_obs; ++i)
        for (int j = i + 1; j < n_obs; ++j)
            if (rng() % 10 < 4) g.edges.insert({obs[i], obs[j]});
    // latents are root confounders with two distinct observed children
    for (int u = 1; u <= n_lat; ++u) {
        NodeId name = "U" + std::to_string(u);
        g.latent.insert(name);
        int a = static_cast<int>(rng() % static_cast<std::uint64_t>(n_obs));
        int b = static_cast<int>(rng() % static_cast<std::uint64_t>(n_obs - 1));
        if (b >= a) ++b;
        g.edges.insert({name, obs[a]});
        g.edges.insert({name, obs[b]});
    }
    validate(g);
    return g;
}

Strategy random_strategy(const CausalDiagram& diagram,
                         const std::set<NodeId>& actions,
                         const std::set<NodeId>& outcome,
                         const std::map<NodeId, int>& cards,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0xbf58476d1ce4e5b9ull + 2);
    std::vector<NodeId> order;
    for (const auto& n : topological_order(diagram))
        if (diagram.observed.count(n)) order.push_back(n);
    auto predecessors = [&](const NodeId& a) {
        std::vector<NodeId> out;
        for (const auto& n : order) {
            if (n == a) break;
            if (!outcome.count(n)) out.push_back(n);
        }
        return out;
    };

    Strategy s;
    for (const auto& a : actions) {
        int card = cards.at(a);
        std::uint64_t roll = rng() % 10;
        if (roll < 1) {
            s.assignments[a] = IdleRegime{};
            continue;
        }
        if (roll < 4) {
            s.assignments[a] = AtomicRegime{static_cast<int>(rng() % static_cast<std::uint64_t>(card))};
            continue;
        }
        std::vector<NodeId> cand = predecessors(a);
        size_t want = cand.empty() ? 0 : rng() % std::min<std::uint64_t>(3, cand.size() + 1);
        std::vector<NodeId> cond;
        for (size_t i = 0; i < want; ++i) {
            size_t at = rng() % cand.size();
            cond.push_back(cand[at]);
            cand.erase(cand.begin() + static_cast<long>(at));
        }
        std::vector<int> cond_cards;
        size_t rows = 1;
        for (const auto& c : cond) {
            cond_cards.push_back(cards.at(c));
            rows *= static_cast<size_t>(cards.at(c));
        }
        if (roll < 7) {
            ConditionalRegime r{cond, cond_cards, {}};
            for (size_t i = 0; i < rows; ++i)
                r.table.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(card)));
            s.assignments[a] = std::move(r);
        } else {
            RandomRegime r{cond, cond_cards, card, {}};
            for (size_t i = 0; i < rows; ++i) {
                std::vector<double> row = interior_simplex_row(rng, card);
                r.table.insert(r.table.end(), row.begin(), row.end());
            }
            s.assignments[a] = std::move(r);
        }
    }
    return s;
}

RandomQuery random_query(std::uint64_t seed, int max_observed, int max_latents) {
    RandomQuery q;
    q.diagram = random_diagram(seed, max_observed, max_latents);
    q.cards = binary_cards(q.diagram);
    std::mt19937_64 rng(seed * 0x94d049bb133111ebull + 3);
    std::vector<NodeId> obs(q.diagram.observed.begin(), q.diagram.observed.end());
    NodeId y = obs[rng() % obs.size()];
    q.outcome = {y};
    for (const auto& n : obs) {
        if (n == y) continue;
        if (rng() % 2) q.actions.insert(n);
    }
    if (q.actions.empty()) {
        for (const auto& n : obs)
            if (n != y) {
                q.actions.insert(n);
                break;
            }
    }
    q.strategy = random_strategy(q.diagram, q.actions, q.outcome, q.cards, seed);
    return q;
}

}  // namespace planid
