#pragma once

// Random estimand trees over a fixed four-variable context, used for the
// simplifier soundness and idempotence properties. Trees are well-formed by
// construction: no binder shadows another along any root-to-leaf path, and
// every strategy-factor row is normalized so normalization rewrites are
// value-preserving.

#include <cstdint>
#include <random>

#include "planid/estimand.hpp"
#include "planid/joint_table.hpp"
#include "planid/regimes.hpp"

namespace planid::testing {

inline const std::vector<NodeId>& gen_vars() {
    static const std::vector<NodeId> vars{"A", "B", "C", "D"};
    return vars;
}

inline Strategy gen_strategy() {
    Strategy s;
    s.assignments["A"] = RandomRegime{{}, {}, 2, {0.3, 0.7}};
    s.assignments["B"] = ConditionalRegime{{"C"}, {2}, {1, 0}};
    s.assignments["D"] = RandomRegime{{"C"}, {2}, 2, {0.6, 0.4, 0.2, 0.8}};
    return s;
}

inline JointTable gen_table(std::mt19937_64& rng) {
    JointTable t;
    t.vars = gen_vars();
    t.cards = {2, 2, 2, 2};
    t.probs.resize(16);
    double total = 0.0;
    for (auto& p : t.probs) {
        p = 0.05 + static_cast<double>(rng() % 1000) / 1000.0;
        total += p;
    }
    for (auto& p : t.probs) p /= total;
    return t;
}

struct TreeGen {
    std::mt19937_64 rng;
    explicit TreeGen(std::uint64_t seed) : rng(seed * 0x2545f4914f6cdd1dull + 7) {}

    std::uint64_t roll(std::uint64_t n) { return rng() % n; }

    NodeId pick_var() { return gen_vars()[roll(gen_vars().size())]; }

    // A value term for `node`: usually its own symbol (free or bound by an
    // enclosing sum), sometimes a literal.
    ValueTerm term_for(const NodeId& node) {
        if (roll(10) < 8) return ValueTerm::make_sym(node);
        return ValueTerm::make_const(node, static_cast<int>(roll(2)));
    }

    Estimand leaf() {
        switch (roll(10)) {
            case 0: return Estimand::one();
            case 1: case 2: {  // indicator
                NodeId n = pick_var();
                if (roll(3) == 0)
                    return Estimand::indicator(
                        ValueTerm::make_sym(n),
                        ValueTerm::make_apply("B", {ValueTerm::make_sym("C")}));
                NodeId m = pick_var();
                return Estimand::indicator(ValueTerm::make_sym(n), term_for(m));
            }
            case 3: case 4: {  // strategy factor
                if (roll(2) == 0)
                    return Estimand::strategy_factor("A", term_for("A"), {});
                return Estimand::strategy_factor("D", term_for("D"),
                                                 {Slot{"C", term_for("C")}});
            }
            default: {  // observational factor
                std::vector<NodeId> pool = gen_vars();
                for (size_t i = pool.size() - 1; i > 0; --i)
                    std::swap(pool[i], pool[roll(i + 1)]);
                size_t n_targets = 1 + roll(2);
                size_t n_given = roll(3);
                std::vector<Slot> targets, given;
                size_t at = 0;
                for (size_t i = 0; i < n_targets && at < pool.size(); ++i, ++at)
                    targets.push_back(Slot{pool[at], term_for(pool[at])});
                for (size_t i = 0; i < n_given && at < pool.size(); ++i, ++at)
                    given.push_back(Slot{pool[at], term_for(pool[at])});
                return Estimand::obs_prob(std::move(targets), std::move(given));
            }
        }
    }

    Estimand tree(int depth, std::set<NodeId> bound_on_path) {
        if (depth <= 0) return leaf();
        switch (roll(10)) {
            case 0: case 1: case 2: {  // sum
                std::vector<NodeId> candidates;
                for (const auto& v : gen_vars())
                    if (!bound_on_path.count(v)) candidates.push_back(v);
                if (candidates.empty()) return leaf();
                std::set<NodeId> nodes{candidates[roll(candidates.size())]};
                std::set<NodeId> inner = bound_on_path;
                inner.insert(nodes.begin(), nodes.end());
                return sum_over_nodes(nodes, tree(depth - 1, std::move(inner)));
            }
            case 3: case 4: case 5: case 6: {  // product
                std::vector<Estimand> fs;
                size_t n = 2 + roll(2);
                for (size_t i = 0; i < n; ++i) fs.push_back(tree(depth - 1, bound_on_path));
                return Estimand::product(std::move(fs));
            }
            case 7: case 8:  // quotient
                return Estimand::quotient(tree(depth - 1, bound_on_path),
                                          tree(depth - 1, bound_on_path));
            default: return leaf();
        }
    }
};

inline Estimand random_estimand(std::uint64_t seed, int max_depth) {
    TreeGen gen(seed);
    return gen.tree(max_depth, {});
}

inline std::map<NodeId, int> full_assignment(std::mt19937_64& rng) {
    std::map<NodeId, int> a;
    for (const auto& v : gen_vars()) a[v] = static_cast<int>(rng() % 2);
    return a;
}

}  // namespace planid::testing
