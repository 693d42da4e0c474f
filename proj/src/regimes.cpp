#include "planid/regimes.hpp"

#include <cmath>

namespace planid {

bool Strategy::is_idle(const NodeId& action) const {
    auto it = assignments.find(action);
    if (it == assignments.end()) throw Error(Errc::UnknownAction, action);
    return std::holds_alternative<IdleRegime>(it->second);
}

const Regime& Strategy::regime(const NodeId& action) const {
    auto it = assignments.find(action);
    if (it == assignments.end()) throw Error(Errc::UnknownAction, action);
    return it->second;
}

int Strategy::atomic_value(const NodeId& action) const {
    const Regime& r = regime(action);
    if (const auto* a = std::get_if<AtomicRegime>(&r)) return a->value;
    throw Error(Errc::MissingAssignment, "no atomic value for action " + action);
}

const std::vector<NodeId>& regime_cond(const Regime& r) {
    static const std::vector<NodeId> empty;
    if (const auto* c = std::get_if<ConditionalRegime>(&r)) return c->cond;
    if (const auto* p = std::get_if<RandomRegime>(&r)) return p->cond;
    return empty;
}

int config_index(const std::vector<int>& cards, const std::vector<int>& values) {
    int idx = 0;
    for (size_t i = 0; i < cards.size(); ++i) idx = idx * cards[i] + values[i];
    return idx;
}

namespace {

std::vector<int> collect_cond_values(const std::vector<NodeId>& cond,
                                     const std::map<NodeId, int>& cond_values) {
    if (cond_values.size() != cond.size())
        throw Error(Errc::MissingConditioningValue,
                    "expected " + std::to_string(cond.size()) + " conditioning values, got " +
                        std::to_string(cond_values.size()));
    std::vector<int> vals;
    vals.reserve(cond.size());
    for (const auto& c : cond) {
        auto it = cond_values.find(c);
        if (it == cond_values.end()) throw Error(Errc::MissingConditioningValue, c);
        vals.push_back(it->second);
    }
    return vals;
}

}  // namespace

double regime_factor(const Regime& r, int action_value, const std::map<NodeId, int>& cond_values) {
    if (std::holds_alternative<IdleRegime>(r))
        throw Error(Errc::IdleHasNoFactor, "idle regimes keep the observational mechanism");
    if (const auto* a = std::get_if<AtomicRegime>(&r)) {
        return action_value == a->value ? 1.0 : 0.0;
    }
    if (const auto* c = std::get_if<ConditionalRegime>(&r)) {
        std::vector<int> vals = collect_cond_values(c->cond, cond_values);
        return action_value == c->table[config_index(c->cond_cards, vals)] ? 1.0 : 0.0;
    }
    const auto& p = std::get<RandomRegime>(r);
    std::vector<int> vals = collect_cond_values(p.cond, cond_values);
    return p.table[config_index(p.cond_cards, vals) * p.action_card + action_value];
}

NormalizedQuery validate_strategy(const CausalDiagram& diagram,
                                  const std::set<NodeId>& actions,
                                  const std::set<NodeId>& outcome,
                                  const Strategy& strategy) {
    for (const auto& a : actions) {
        if (!diagram.observed.count(a)) throw Error(Errc::UnknownAction, a + " is not observed");
        if (outcome.count(a)) throw Error(Errc::UnknownAction, a + " is both action and outcome");
        if (!strategy.assignments.count(a)) throw Error(Errc::UnknownAction, a + " has no regime");
    }
    for (const auto& [a, r] : strategy.assignments) {
        if (!actions.count(a))
            throw Error(Errc::UnknownAction, a + " has a regime but is not an action");
        for (const auto& c : regime_cond(r)) {
            if (diagram.latent.count(c))
                throw Error(Errc::LatentConditioning, a + " conditions on latent " + c);
            if (!diagram.observed.count(c))
                throw Error(Errc::LatentConditioning, a + " conditions on unknown node " + c);
            if (outcome.count(c))
                throw Error(Errc::LatentConditioning, a + " conditions on outcome " + c);
            if (c == a) throw Error(Errc::LatentConditioning, a + " conditions on itself");
        }
        if (const auto* p = std::get_if<RandomRegime>(&r)) {
            int rows = 1;
            for (int k : p->cond_cards) rows *= k;
            if (static_cast<int>(p->table.size()) != rows * p->action_card)
                throw Error(Errc::InvalidModel, "random regime table for " + a + " is not total");
            for (int i = 0; i < rows; ++i) {
                double s = 0.0;
                for (int v = 0; v < p->action_card; ++v) {
                    double q = p->table[i * p->action_card + v];
                    if (q < 0.0) throw Error(Errc::InvalidModel, "negative probability for " + a);
                    s += q;
                }
                if (std::abs(s - 1.0) > 1e-12)
                    throw Error(Errc::InvalidModel, "random regime row for " + a + " does not sum to 1");
            }
        }
        if (const auto* c = std::get_if<ConditionalRegime>(&r)) {
            int rows = 1;
            for (int k : c->cond_cards) rows *= k;
            if (static_cast<int>(c->table.size()) != rows)
                throw Error(Errc::InvalidModel, "conditional regime table for " + a + " is not total");
        }
    }

    NormalizedQuery out;
    for (const auto& a : actions) {
        if (strategy.is_idle(a)) {
            out.covariates.insert(a);  // mechanism unchanged, acts as a covariate
        } else {
            out.actions.insert(a);
            out.strategy.assignments[a] = strategy.regime(a);
        }
    }
    for (const auto& v : diagram.observed)
        if (!actions.count(v) && !outcome.count(v)) out.covariates.insert(v);

    manipulated_graph(diagram, out.strategy);  // throws CyclicStrategy on a cycle
    return out;
}

CausalDiagram manipulated_graph(const CausalDiagram& diagram, const Strategy& strategy) {
    CausalDiagram out;
    out.observed = diagram.observed;
    out.latent = diagram.latent;
    for (const auto& [p, c] : diagram.edges) {
        auto it = strategy.assignments.find(c);
        bool cut = it != strategy.assignments.end() && !std::holds_alternative<IdleRegime>(it->second);
        if (!cut) out.edges.insert({p, c});
    }
    for (const auto& [a, r] : strategy.assignments)
        for (const auto& c : regime_cond(r)) out.edges.insert({c, a});
    try {
        validate(out);
    } catch (const Error& e) {
        if (e.code == Errc::CycleDetected)
            throw Error(Errc::CyclicStrategy, e.what());
        throw;
    }
    return out;
}

}  // namespace planid
