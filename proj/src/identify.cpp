#include "planid/identify.hpp"

#include <algorithm>
#include <cassert>
#include <deque>

namespace planid {

// ---------------------------------------------------------------------------
// d-separation by reachability (the classic active-trail search: a collider
// is passable only when it has a descendant in the conditioning set).

bool d_separated(const CausalDiagram& g,
                 const std::set<NodeId>& a,
                 const std::set<NodeId>& b,
                 const std::set<NodeId>& c) {
    if (a.empty() || b.empty()) return true;
    std::set<NodeId> anc_c = c.empty() ? std::set<NodeId>{} : ancestors(g, c);

    enum Dir { Up, Down };  // Up: entered from a child; Down: entered from a parent
    std::set<std::pair<NodeId, int>> visited;
    std::deque<std::pair<NodeId, int>> queue;
    for (const auto& n : a) queue.push_back({n, Up});

    while (!queue.empty()) {
        auto [n, dir] = queue.front();
        queue.pop_front();
        if (!visited.insert({n, dir}).second) continue;
        if (b.count(n)) return false;

        if (dir == Up) {
            if (!c.count(n)) {
                for (const auto& p : g.parents(n)) queue.push_back({p, Up});
                for (const auto& ch : g.children(n)) queue.push_back({ch, Down});
            }
        } else {
            if (anc_c.count(n))  // collider with a descendant in C (or in C itself)
                for (const auto& p : g.parents(n)) queue.push_back({p, Up});
            if (!c.count(n))
                for (const auto& ch : g.children(n)) queue.push_back({ch, Down});
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Chain-rule factor of one c-component

Estimand c_factor(const std::set<NodeId>& block,
                  const ProjectedDiagram& projection,
                  const std::vector<NodeId>& order) {
    CComponentPartition parts = c_components(projection);
    bool found = false;
    for (const auto& blk : parts.blocks)
        if (blk == block) found = true;
    if (!found)
        throw Error(Errc::NotACComponent, "the given set is not a c-component of the projection");

    std::vector<Estimand> factors;
    std::vector<Slot> preceding;
    for (const auto& v : order) {
        if (block.count(v))
            factors.push_back(Estimand::obs_prob({Slot{v, ValueTerm::make_sym(v)}}, preceding));
        preceding.push_back(Slot{v, ValueTerm::make_sym(v)});
    }
    return Estimand::product(std::move(factors));
}

// ---------------------------------------------------------------------------
// Recursive component identification

QResult identify_component(const std::set<NodeId>& c_set,
                           const std::set<NodeId>& t_set,
                           const Estimand& q_t,
                           const ProjectedDiagram& projection) {
    ProjectedDiagram g_t = induced_subgraph(projection, t_set);
    std::set<NodeId> a_set = ancestors(g_t, c_set);

    if (a_set == c_set) {
        std::set<NodeId> drop;
        for (const auto& n : t_set)
            if (!c_set.count(n)) drop.insert(n);
        QResult r;
        r.ok = true;
        r.estimand = simplify(sum_over_nodes(drop, q_t));
        return r;
    }
    if (a_set == t_set) {
        QResult r;
        r.ok = false;
        r.failing_set = c_set;
        r.failing_component = t_set;
        return r;
    }

    // C strictly inside A strictly inside T: marginalize to the ancestral set,
    // carve out the c-component of C there via the quotient construction, and
    // recurse.
    std::set<NodeId> drop;
    for (const auto& n : t_set)
        if (!a_set.count(n)) drop.insert(n);
    Estimand q_a = simplify(sum_over_nodes(drop, q_t));

    ProjectedDiagram g_a = induced_subgraph(projection, a_set);
    CComponentPartition parts = c_components(g_a);
    const std::set<NodeId>& t_next = parts.block_of(*c_set.begin());
    for (const auto& n : c_set)
        if (!t_next.count(n))
            throw std::logic_error("c-set split across components of the ancestral subgraph");

    std::vector<NodeId> order = topological_order(g_a);
    std::vector<Estimand> factors;
    for (size_t i = 0; i < order.size(); ++i) {
        if (!t_next.count(order[i])) continue;
        std::set<NodeId> after(order.begin() + static_cast<long>(i) + 1, order.end());
        std::set<NodeId> from_here(order.begin() + static_cast<long>(i), order.end());
        Estimand num = sum_over_nodes(after, q_a);
        Estimand den = sum_over_nodes(from_here, q_a);
        factors.push_back(Estimand::quotient(std::move(num), std::move(den)));
    }
    Estimand q_next = simplify(Estimand::product(std::move(factors)));
    return identify_component(c_set, t_next, q_next, projection);
}

// ---------------------------------------------------------------------------
// Graph-licensed reduction

namespace {

std::set<NodeId> slot_nodes(const std::vector<Slot>& slots) {
    std::set<NodeId> out;
    for (const auto& s : slots) out.insert(s.node);
    return out;
}

// Minimal conditioning set: greedily drop given-slots whose variable is
// d-separated from the targets by the remaining ones.
Estimand prune_obs_probs(const Estimand& e, const CausalDiagram& g) {
    Estimand out = e;
    for (auto& c : out.children) c = prune_obs_probs(c, g);
    if (out.kind != Estimand::Kind::ObsProb || out.given.empty()) return out;
    std::set<NodeId> targets = slot_nodes(out.targets);
    bool dropped = true;
    while (dropped) {
        dropped = false;
        for (size_t i = 0; i < out.given.size(); ++i) {
            std::set<NodeId> rest;
            for (size_t j = 0; j < out.given.size(); ++j)
                if (j != i) rest.insert(out.given[j].node);
            if (d_separated(g, targets, {out.given[i].node}, rest)) {
                out.given.erase(out.given.begin() + static_cast<long>(i));
                dropped = true;
                break;
            }
        }
    }
    return out;
}

bool slot_subset(const std::vector<Slot>& sub, const std::vector<Slot>& super) {
    for (const auto& s : sub)
        if (std::find(super.begin(), super.end(), s) == super.end()) return false;
    return true;
}

// Chain merge allowing extra conditioning variables in the second factor when
// they are d-separated from the first factor's targets:
//   P(T1|W1) P(T2|W2) -> P(T1 u T2 | W2 \ T1)
// requires T1 subset of W2, W1 subset of W2 \ T1, and T1 independent of the
// leftover variables given W1.
bool try_graph_merge(const Estimand& f1, const Estimand& f2, const CausalDiagram& g,
                     Estimand* merged) {
    if (f1.kind != Estimand::Kind::ObsProb || f2.kind != Estimand::Kind::ObsProb) return false;
    if (!slot_subset(f1.targets, f2.given)) return false;
    std::vector<Slot> rest;  // W2 \ T1
    for (const auto& s : f2.given)
        if (std::find(f1.targets.begin(), f1.targets.end(), s) == f1.targets.end())
            rest.push_back(s);
    if (!slot_subset(f1.given, rest)) return false;
    for (const auto& t2 : f2.targets)
        for (const auto& t1 : f1.targets)
            if (t1.node == t2.node) return false;
    std::set<NodeId> w1 = slot_nodes(f1.given);
    std::set<NodeId> extra;
    for (const auto& s : rest)
        if (!w1.count(s.node)) extra.insert(s.node);
    if (!extra.empty() && !d_separated(g, slot_nodes(f1.targets), extra, w1)) return false;
    std::vector<Slot> targets = f1.targets;
    targets.insert(targets.end(), f2.targets.begin(), f2.targets.end());
    *merged = Estimand::obs_prob(std::move(targets), std::move(rest));
    return true;
}

bool slot_sym_matches(const Slot& s, const std::string& sym) {
    return s.term.kind == ValueTerm::Kind::Sym && s.term.sym == sym;
}

// Tries to sum out `b` from the factor list using graph-licensed merges.
// Commits only when the variable is actually eliminated.
bool graph_eliminate(const Binding& b, std::vector<Estimand>& factors, const CausalDiagram& g) {
    std::vector<Estimand> work = factors;
    for (int round = 0; round < 8; ++round) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < work.size(); ++i)
            if (mentions_sym(work[i], b.sym)) idx.push_back(i);
        if (idx.empty()) return false;
        if (idx.size() == 1) {
            Estimand& f = work[idx[0]];
            if (f.kind != Estimand::Kind::ObsProb) return false;
            int hits = 0;
            size_t slot_at = 0;
            bool elsewhere = false;
            for (size_t i = 0; i < f.targets.size(); ++i) {
                if (slot_sym_matches(f.targets[i], b.sym)) {
                    ++hits;
                    slot_at = i;
                } else if (mentions_sym(Estimand::obs_prob({f.targets[i]}, {}), b.sym)) {
                    elsewhere = true;
                }
            }
            for (const auto& s : f.given)
                if (s.term.kind != ValueTerm::Kind::Sym || s.term.sym != b.sym) {
                    if (mentions_sym(Estimand::obs_prob({s}, {}), b.sym)) elsewhere = true;
                } else {
                    elsewhere = true;
                }
            if (hits != 1 || elsewhere) return false;
            f.targets.erase(f.targets.begin() + static_cast<long>(slot_at));
            if (f.targets.empty()) f = Estimand::one();
            factors = work;
            return true;
        }
        bool merged_any = false;
        for (size_t x = 0; x < idx.size() && !merged_any; ++x) {
            for (size_t y = 0; y < idx.size() && !merged_any; ++y) {
                if (x == y) continue;
                Estimand merged;
                if (try_graph_merge(work[idx[x]], work[idx[y]], g, &merged)) {
                    size_t i1 = idx[x], i2 = idx[y];
                    if (i1 > i2) std::swap(i1, i2);
                    work.erase(work.begin() + static_cast<long>(i2));
                    work.erase(work.begin() + static_cast<long>(i1));
                    work.push_back(std::move(merged));
                    merged_any = true;
                }
            }
        }
        if (!merged_any) return false;
    }
    return false;
}

Estimand graph_norm_sums(const Estimand& e, const CausalDiagram& g) {
    Estimand out = e;
    for (auto& c : out.children) c = graph_norm_sums(c, g);
    if (out.kind != Estimand::Kind::Sum) return out;
    Estimand body = out.children[0];
    std::vector<Estimand> factors =
        body.kind == Estimand::Kind::Product ? body.children : std::vector<Estimand>{body};
    std::vector<Binding> bound = out.bound;
    bool changed = false;
    for (size_t i = 0; i < bound.size();) {
        if (graph_eliminate(bound[i], factors, g)) {
            bound.erase(bound.begin() + static_cast<long>(i));
            changed = true;
        } else {
            ++i;
        }
    }
    if (!changed) return out;
    Estimand rebuilt = Estimand::product(std::move(factors));
    if (bound.empty()) return rebuilt;
    return Estimand::sum(std::move(bound), std::move(rebuilt));
}

}  // namespace

Estimand reduce_with_graph(const Estimand& e, const CausalDiagram& diagram) {
    Estimand cur = simplify(e);
    for (int i = 0; i < 30; ++i) {
        Estimand next = simplify(graph_norm_sums(prune_obs_probs(cur, diagram), diagram));
        if (next == cur) return cur;
        cur = std::move(next);
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Q[S] identification

QResult identify_Q(const CausalDiagram& diagram, const std::set<NodeId>& s_set) {
    validate(diagram);
    for (const auto& n : s_set)
        if (!diagram.observed.count(n)) throw Error(Errc::UnknownNode, n + " is not observed");

    ProjectedDiagram proj = project_latents(diagram);
    ProjectedDiagram g_s = induced_subgraph(proj, s_set);
    CComponentPartition s_parts = c_components(g_s);
    CComponentPartition full = c_components(proj);
    std::vector<NodeId> order = topological_order(proj);

    std::vector<Estimand> parts;
    for (const auto& s_j : s_parts.blocks) {
        const std::set<NodeId>& t_j = full.block_of(*s_j.begin());
        Estimand q_t = c_factor(t_j, proj, order);
        QResult r = identify_component(s_j, t_j, q_t, proj);
        if (!r.ok) return r;
        parts.push_back(std::move(r.estimand));
    }
    QResult out;
    out.ok = true;
    out.estimand = reduce_with_graph(Estimand::product(std::move(parts)), diagram);
    return out;
}

// ---------------------------------------------------------------------------
// Plan identification

namespace {

// Value term used for a conditioning variable inside strategy factors and
// decision-table applications: atomic actions carry their given value,
// everything else stays symbolic.
ValueTerm term_for(const NodeId& n, const NormalizedQuery& norm) {
    if (norm.actions.count(n)) {
        const Regime& r = norm.strategy.regime(n);
        if (std::holds_alternative<AtomicRegime>(r)) return ValueTerm::make_given(n);
    }
    return ValueTerm::make_sym(n);
}

}  // namespace

IdentificationOutcome identify_plan(const PlanQuery& query) {
    validate(query.diagram);
    NormalizedQuery norm =
        validate_strategy(query.diagram, query.actions, query.outcome, query.strategy);

    CausalDiagram g_sigma = manipulated_graph(query.diagram, norm.strategy);
    std::set<NodeId> d_set = ancestors(g_sigma, query.outcome);

    IdentificationOutcome out;
    for (const auto& a : norm.actions)
        if (d_set.count(a)) out.x_d.insert(a);
    for (const auto& z : norm.covariates)
        if (d_set.count(z)) out.z_d.insert(z);

    // Every conditioning variable of an X_D regime points into an ancestor of
    // the outcome, so it is itself in X_D u Z_D.
    for (const auto& a : out.x_d)
        for (const auto& c : regime_cond(norm.strategy.regime(a)))
            if (!out.x_d.count(c) && !out.z_d.count(c))
                throw std::logic_error("conditioning variable escaped X_D u Z_D: " + c);

    std::set<NodeId> s_set = query.outcome;
    s_set.insert(out.z_d.begin(), out.z_d.end());
    QResult q = identify_Q(query.diagram, s_set);
    if (!q.ok) {
        out.identified = false;
        out.failing_set = q.failing_set;
        out.failing_component = q.failing_component;
        return out;
    }

    Estimand est = q.estimand;

    // Residual mentions of variables outside X_D u Z_D u Y cannot change the
    // expression's value on any compatible model; atomic actions take their
    // given value and everything else is pinned to category 0.
    for (const auto& v : free_symbols(est)) {
        if (query.outcome.count(v) || out.z_d.count(v) || out.x_d.count(v)) continue;
        if (norm.actions.count(v) &&
            std::holds_alternative<AtomicRegime>(norm.strategy.regime(v))) {
            est = substitute_free(est, canonical_sym(v), ValueTerm::make_given(v));
        } else {
            est = substitute_free(est, canonical_sym(v), ValueTerm::make_const(v, 0));
        }
    }

    // Assemble the plan sum: one strategy factor per X_D action.
    std::set<NodeId> binders = out.z_d;
    std::vector<Estimand> factors;
    for (const auto& a : out.x_d) {
        const Regime& r = norm.strategy.regime(a);
        if (std::holds_alternative<AtomicRegime>(r)) {
            est = substitute_free(est, canonical_sym(a), ValueTerm::make_given(a));
            continue;
        }
        binders.insert(a);
        if (const auto* cr = std::get_if<ConditionalRegime>(&r)) {
            std::vector<ValueTerm> args;
            for (const auto& c : cr->cond) args.push_back(term_for(c, norm));
            factors.push_back(Estimand::indicator(ValueTerm::make_sym(a),
                                                  ValueTerm::make_apply(a, std::move(args))));
        } else {
            const auto& rr = std::get<RandomRegime>(r);
            std::vector<Slot> cond;
            for (const auto& c : rr.cond) cond.push_back(Slot{c, term_for(c, norm)});
            factors.push_back(
                Estimand::strategy_factor(a, ValueTerm::make_sym(a), std::move(cond)));
        }
    }
    factors.push_back(std::move(est));
    Estimand plan = sum_over_nodes(binders, Estimand::product(std::move(factors)));
    plan = reduce_with_graph(plan, query.diagram);

    if (free_symbols(plan) != query.outcome)
        throw std::logic_error("plan estimand has unexpected free symbols: " + render(plan));

    out.identified = true;
    out.estimand = std::move(plan);
    return out;
}

IdentificationOutcome identify_unconditional(const CausalDiagram& diagram,
                                             const std::set<NodeId>& actions,
                                             const std::set<NodeId>& outcome,
                                             const std::map<NodeId, int>& values,
                                             const std::map<NodeId, int>& cardinalities) {
    PlanQuery q;
    q.diagram = diagram;
    q.actions = actions;
    q.outcome = outcome;
    q.cardinalities = cardinalities;
    for (const auto& a : actions) {
        auto it = values.find(a);
        if (it == values.end()) throw Error(Errc::UnknownAction, "no atomic value for " + a);
        q.strategy.assignments[a] = AtomicRegime{it->second};
    }
    return identify_plan(q);
}

Estimand g_formula(const PlanQuery& query) {
    validate(query.diagram);
    if (!query.diagram.latent.empty())
        throw Error(Errc::LatentsPresent, "the G-formula requires a latent-free diagram");
    NormalizedQuery norm =
        validate_strategy(query.diagram, query.actions, query.outcome, query.strategy);

    std::vector<Estimand> factors;
    std::set<NodeId> binders = norm.covariates;
    for (const auto& v : query.diagram.observed) {
        if (norm.actions.count(v)) continue;
        std::vector<Slot> given;
        for (const auto& p : query.diagram.parents(v)) given.push_back(Slot{p, term_for(p, norm)});
        factors.push_back(Estimand::obs_prob({Slot{v, ValueTerm::make_sym(v)}}, std::move(given)));
    }
    for (const auto& a : norm.actions) {
        const Regime& r = norm.strategy.regime(a);
        if (std::holds_alternative<AtomicRegime>(r)) continue;
        binders.insert(a);
        if (const auto* cr = std::get_if<ConditionalRegime>(&r)) {
            std::vector<ValueTerm> args;
            for (const auto& c : cr->cond) args.push_back(term_for(c, norm));
            factors.push_back(Estimand::indicator(ValueTerm::make_sym(a),
                                                  ValueTerm::make_apply(a, std::move(args))));
        } else {
            const auto& rr = std::get<RandomRegime>(r);
            std::vector<Slot> cond;
            for (const auto& c : rr.cond) cond.push_back(Slot{c, term_for(c, norm)});
            factors.push_back(
                Estimand::strategy_factor(a, ValueTerm::make_sym(a), std::move(cond)));
        }
    }
    Estimand e = sum_over_nodes(binders, Estimand::product(std::move(factors)));
    return reduce_with_graph(e, query.diagram);
}

}  // namespace planid
