#include "planid/estimand.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <functional>
#include <sstream>

namespace planid {

// ---------------------------------------------------------------------------
// Value terms

std::string canonical_sym(const NodeId& node) {
    std::string s;
    s.reserve(node.size());
    for (char c : node) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return s;
}

ValueTerm ValueTerm::make_sym(const NodeId& node, const std::string& sym) {
    ValueTerm t;
    t.kind = Kind::Sym;
    t.node = node;
    t.sym = sym;
    return t;
}

ValueTerm ValueTerm::make_sym(const NodeId& node) { return make_sym(node, canonical_sym(node)); }

ValueTerm ValueTerm::make_given(const NodeId& action) {
    ValueTerm t;
    t.kind = Kind::Given;
    t.node = action;
    return t;
}

ValueTerm ValueTerm::make_const(const NodeId& node, int value) {
    ValueTerm t;
    t.kind = Kind::Const;
    t.node = node;
    t.value = value;
    return t;
}

ValueTerm ValueTerm::make_apply(const NodeId& action, std::vector<ValueTerm> args) {
    ValueTerm t;
    t.kind = Kind::Apply;
    t.node = action;
    t.args = std::move(args);
    return t;
}

bool ValueTerm::operator==(const ValueTerm& o) const {
    return kind == o.kind && node == o.node && sym == o.sym && value == o.value && args == o.args;
}

namespace {

bool term_mentions(const ValueTerm& t, const std::string& sym) {
    if (t.kind == ValueTerm::Kind::Sym) return t.sym == sym;
    for (const auto& a : t.args)
        if (term_mentions(a, sym)) return true;
    return false;
}

void term_syms(const ValueTerm& t, std::set<std::string>& out) {
    if (t.kind == ValueTerm::Kind::Sym) out.insert(t.sym);
    for (const auto& a : t.args) term_syms(a, out);
}

ValueTerm term_subst(const ValueTerm& t, const std::string& sym, const ValueTerm& repl) {
    if (t.kind == ValueTerm::Kind::Sym && t.sym == sym) return repl;
    ValueTerm out = t;
    for (auto& a : out.args) a = term_subst(a, sym, repl);
    return out;
}

// Renames the symbol itself (Sym terms only), keeping the node.
ValueTerm term_rename(const ValueTerm& t, const std::string& from, const std::string& to) {
    ValueTerm out = t;
    if (out.kind == ValueTerm::Kind::Sym && out.sym == from) out.sym = to;
    for (auto& a : out.args) a = term_rename(a, from, to);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tree construction

Estimand Estimand::one() {
    Estimand e;
    e.kind = Kind::One;
    return e;
}

Estimand Estimand::obs_prob(std::vector<Slot> targets, std::vector<Slot> given) {
    Estimand e;
    e.kind = Kind::ObsProb;
    e.targets = std::move(targets);
    e.given = std::move(given);
    return e;
}

Estimand Estimand::strategy_factor(const NodeId& action, ValueTerm value, std::vector<Slot> cond) {
    Estimand e;
    e.kind = Kind::StrategyFactor;
    e.targets = {Slot{action, std::move(value)}};
    e.given = std::move(cond);
    return e;
}

Estimand Estimand::indicator(ValueTerm a, ValueTerm b) {
    Estimand e;
    e.kind = Kind::Indicator;
    e.left = std::move(a);
    e.right = std::move(b);
    return e;
}

Estimand Estimand::sum(std::vector<Binding> bound, Estimand body) {
    Estimand e;
    e.kind = Kind::Sum;
    e.bound = std::move(bound);
    e.children.push_back(std::move(body));
    return e;
}

Estimand Estimand::product(std::vector<Estimand> factors) {
    if (factors.empty()) return one();
    if (factors.size() == 1) return factors.front();
    Estimand e;
    e.kind = Kind::Product;
    e.children = std::move(factors);
    return e;
}

Estimand Estimand::quotient(Estimand num, Estimand den) {
    Estimand e;
    e.kind = Kind::Quotient;
    e.children.push_back(std::move(num));
    e.children.push_back(std::move(den));
    return e;
}

bool Estimand::operator==(const Estimand& o) const {
    return kind == o.kind && targets == o.targets && given == o.given && left == o.left &&
           right == o.right && bound == o.bound && children == o.children;
}

// ---------------------------------------------------------------------------
// Mentions, free symbols, substitution

bool mentions_sym(const Estimand& e, const std::string& sym) {
    switch (e.kind) {
        case Estimand::Kind::One: return false;
        case Estimand::Kind::ObsProb:
        case Estimand::Kind::StrategyFactor: {
            for (const auto& s : e.targets)
                if (term_mentions(s.term, sym)) return true;
            for (const auto& s : e.given)
                if (term_mentions(s.term, sym)) return true;
            return false;
        }
        case Estimand::Kind::Indicator:
            return term_mentions(e.left, sym) || term_mentions(e.right, sym);
        case Estimand::Kind::Sum:
            for (const auto& b : e.bound)
                if (b.sym == sym) return false;  // shadowed below
            return mentions_sym(e.children[0], sym);
        case Estimand::Kind::Product:
        case Estimand::Kind::Quotient:
            for (const auto& c : e.children)
                if (mentions_sym(c, sym)) return true;
            return false;
    }
    return false;
}

namespace {

void free_syms_rec(const Estimand& e, std::set<std::string> bound, std::map<std::string, NodeId>& out) {
    auto scan_term = [&](const ValueTerm& t, auto&& self) -> void {
        if (t.kind == ValueTerm::Kind::Sym && !bound.count(t.sym)) out[t.sym] = t.node;
        for (const auto& a : t.args) self(a, self);
    };
    switch (e.kind) {
        case Estimand::Kind::One: return;
        case Estimand::Kind::ObsProb:
        case Estimand::Kind::StrategyFactor:
            for (const auto& s : e.targets) scan_term(s.term, scan_term);
            for (const auto& s : e.given) scan_term(s.term, scan_term);
            return;
        case Estimand::Kind::Indicator:
            scan_term(e.left, scan_term);
            scan_term(e.right, scan_term);
            return;
        case Estimand::Kind::Sum: {
            std::set<std::string> b2 = bound;
            for (const auto& b : e.bound) b2.insert(b.sym);
            free_syms_rec(e.children[0], std::move(b2), out);
            return;
        }
        case Estimand::Kind::Product:
        case Estimand::Kind::Quotient:
            for (const auto& c : e.children) free_syms_rec(c, bound, out);
            return;
    }
}

thread_local int fresh_counter = 0;  // temporary alpha-renaming names

std::string fresh_tmp() { return "#t" + std::to_string(fresh_counter++); }

// Renames every binder named `sym` anywhere in the tree to a fresh temporary
// name, so a later capture-intending bind of `sym` is safe.
Estimand freshen_binders_named(const Estimand& e, const std::string& sym) {
    Estimand out = e;
    if (out.kind == Estimand::Kind::Sum) {
        for (auto& b : out.bound) {
            if (b.sym == sym) {
                std::string nn = fresh_tmp();
                // rename bound occurrences in the body
                Estimand body = out.children[0];
                out.children[0] = substitute_free(body, b.sym, ValueTerm::make_sym(b.node, nn));
                b.sym = nn;
            }
        }
    }
    for (auto& c : out.children) c = freshen_binders_named(c, sym);
    return out;
}

}  // namespace

std::set<NodeId> free_symbols(const Estimand& e) {
    std::map<std::string, NodeId> syms;
    free_syms_rec(e, {}, syms);
    std::set<NodeId> out;
    for (const auto& [s, n] : syms) out.insert(n);
    return out;
}

Estimand substitute_free(const Estimand& e, const std::string& sym, const ValueTerm& repl) {
    switch (e.kind) {
        case Estimand::Kind::One: return e;
        case Estimand::Kind::ObsProb:
        case Estimand::Kind::StrategyFactor: {
            Estimand out = e;
            for (auto& s : out.targets) s.term = term_subst(s.term, sym, repl);
            for (auto& s : out.given) s.term = term_subst(s.term, sym, repl);
            return out;
        }
        case Estimand::Kind::Indicator: {
            Estimand out = e;
            out.left = term_subst(out.left, sym, repl);
            out.right = term_subst(out.right, sym, repl);
            return out;
        }
        case Estimand::Kind::Sum: {
            for (const auto& b : e.bound)
                if (b.sym == sym) return e;  // shadowed; nothing free below
            std::set<std::string> repl_syms;
            term_syms(repl, repl_syms);
            Estimand out = e;
            for (auto& b : out.bound) {
                if (repl_syms.count(b.sym)) {
                    std::string nn = fresh_tmp();
                    out.children[0] =
                        substitute_free(out.children[0], b.sym, ValueTerm::make_sym(b.node, nn));
                    b.sym = nn;
                }
            }
            out.children[0] = substitute_free(out.children[0], sym, repl);
            return out;
        }
        case Estimand::Kind::Product:
        case Estimand::Kind::Quotient: {
            Estimand out = e;
            for (auto& c : out.children) c = substitute_free(c, sym, repl);
            return out;
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string render_term(const ValueTerm& t);

std::string apply_fn_name(const NodeId& action) {
    // Decision tables render as g<digits> when the action name has a digit
    // suffix (X1 -> g1), and g_<name> otherwise.
    size_t i = action.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(action[i - 1]))) --i;
    if (i < action.size() && i > 0) return "g" + action.substr(i);
    return "g_" + canonical_sym(action);
}

std::string render_apply(const ValueTerm& t) {
    std::string out = apply_fn_name(t.node) + "(";
    for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ",";
        out += render_term(t.args[i]);
    }
    return out + ")";
}

std::string render_term(const ValueTerm& t) {
    switch (t.kind) {
        case ValueTerm::Kind::Sym: return t.sym;
        case ValueTerm::Kind::Given: return canonical_sym(t.node);
        case ValueTerm::Kind::Const: return std::to_string(t.value);
        case ValueTerm::Kind::Apply: return render_apply(t);
    }
    return "?";
}

std::string render_slot(const Slot& s) {
    const std::string base = canonical_sym(s.node);
    if (s.term.kind == ValueTerm::Kind::Sym) {
        if (s.term.node == s.node && s.term.sym == base) return s.term.sym;
        return base + ":=" + s.term.sym;
    }
    if (s.term.kind == ValueTerm::Kind::Given && s.term.node == s.node) return base;
    return base + ":=" + render_term(s.term);
}

std::string render_slots(const std::vector<Slot>& slots) {
    std::string out;
    for (size_t i = 0; i < slots.size(); ++i) {
        if (i) out += ",";
        out += render_slot(slots[i]);
    }
    return out;
}

std::string render_rec(const Estimand& e, bool as_factor);

std::string render_product_body(const std::vector<Estimand>& factors) {
    std::string out;
    for (size_t i = 0; i < factors.size(); ++i) {
        if (i) out += " ";
        out += render_rec(factors[i], /*as_factor=*/true);
    }
    return out;
}

std::string render_rec(const Estimand& e, bool as_factor) {
    switch (e.kind) {
        case Estimand::Kind::One: return "1";
        case Estimand::Kind::ObsProb: {
            std::string out = "P(" + render_slots(e.targets);
            if (!e.given.empty()) out += "|" + render_slots(e.given);
            return out + ")";
        }
        case Estimand::Kind::StrategyFactor: {
            std::string out = "S[" + render_slot(e.targets[0]);
            if (!e.given.empty()) out += "|" + render_slots(e.given);
            return out + "]";
        }
        case Estimand::Kind::Indicator:
            return "1[" + render_term(e.left) + "=" + render_term(e.right) + "]";
        case Estimand::Kind::Sum: {
            std::string out = "sum_{";
            for (size_t i = 0; i < e.bound.size(); ++i) {
                if (i) out += ",";
                out += e.bound[i].sym;
            }
            out += "} ";
            const Estimand& body = e.children[0];
            if (body.kind == Estimand::Kind::Product)
                out += render_product_body(body.children);
            else
                out += render_rec(body, /*as_factor=*/false);
            return as_factor ? "(" + out + ")" : out;
        }
        case Estimand::Kind::Product: {
            std::string out = render_product_body(e.children);
            return as_factor ? "(" + out + ")" : out;
        }
        case Estimand::Kind::Quotient:
            return "(" + render_rec(e.children[0], false) + ")/(" +
                   render_rec(e.children[1], false) + ")";
    }
    return "?";
}

}  // namespace

std::string render(const Estimand& e) { return render_rec(e, false); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct EvalCtx {
    const JointTable& table;
    const Strategy& strategy;
    std::map<std::string, int> env;  // bound + free symbol values
};

int term_value(const ValueTerm& t, const EvalCtx& ctx) {
    switch (t.kind) {
        case ValueTerm::Kind::Sym: {
            auto it = ctx.env.find(t.sym);
            if (it == ctx.env.end()) throw Error(Errc::MissingAssignment, t.sym);
            return it->second;
        }
        case ValueTerm::Kind::Given: return ctx.strategy.atomic_value(t.node);
        case ValueTerm::Kind::Const: return t.value;
        case ValueTerm::Kind::Apply: {
            const Regime& r = ctx.strategy.regime(t.node);
            const auto* c = std::get_if<ConditionalRegime>(&r);
            if (!c) throw Error(Errc::MissingAssignment, "no decision table for " + t.node);
            std::vector<int> vals;
            vals.reserve(t.args.size());
            for (const auto& a : t.args) vals.push_back(term_value(a, ctx));
            return c->table[config_index(c->cond_cards, vals)];
        }
    }
    throw Error(Errc::MissingAssignment, "bad term");
}

double eval_rec(const Estimand& e, EvalCtx& ctx) {
    switch (e.kind) {
        case Estimand::Kind::One: return 1.0;
        case Estimand::Kind::ObsProb: {
            std::map<NodeId, int> t, g;
            for (const auto& s : e.targets) t[s.node] = term_value(s.term, ctx);
            for (const auto& s : e.given) g[s.node] = term_value(s.term, ctx);
            return ctx.table.conditional(t, g);
        }
        case Estimand::Kind::StrategyFactor: {
            int v = term_value(e.targets[0].term, ctx);
            std::map<NodeId, int> cond;
            for (const auto& s : e.given) cond[s.node] = term_value(s.term, ctx);
            return regime_factor(ctx.strategy.regime(e.targets[0].node), v, cond);
        }
        case Estimand::Kind::Indicator:
            return term_value(e.left, ctx) == term_value(e.right, ctx) ? 1.0 : 0.0;
        case Estimand::Kind::Sum: {
            std::vector<int> cards;
            cards.reserve(e.bound.size());
            for (const auto& b : e.bound) cards.push_back(ctx.table.card_of(b.node));
            double total = 0.0;
            std::vector<int> vals(e.bound.size(), 0);
            while (true) {
                for (size_t i = 0; i < e.bound.size(); ++i) ctx.env[e.bound[i].sym] = vals[i];
                total += eval_rec(e.children[0], ctx);
                size_t i = e.bound.size();
                while (i > 0) {
                    --i;
                    if (++vals[i] < cards[i]) break;
                    vals[i] = 0;
                    if (i == 0) {
                        for (const auto& b : e.bound) ctx.env.erase(b.sym);
                        return total;
                    }
                }
                if (e.bound.empty()) {
                    return total;
                }
            }
        }
        case Estimand::Kind::Product: {
            double out = 1.0;
            for (const auto& c : e.children) out *= eval_rec(c, ctx);
            return out;
        }
        case Estimand::Kind::Quotient: {
            double den = eval_rec(e.children[1], ctx);
            if (den == 0.0) return 0.0;
            return eval_rec(e.children[0], ctx) / den;
        }
    }
    return 0.0;
}

}  // namespace

double evaluate(const Estimand& e,
                const JointTable& observational,
                const Strategy& strategy,
                const std::map<NodeId, int>& assignment) {
    EvalCtx ctx{observational, strategy, {}};
    for (const auto& [node, v] : assignment) ctx.env[canonical_sym(node)] = v;
    return eval_rec(e, ctx);
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

std::vector<Estimand> factor_list(const Estimand& e) {
    if (e.kind == Estimand::Kind::Product) return e.children;
    if (e.kind == Estimand::Kind::One) return {};
    return {e};
}

bool has_slot(const std::vector<Slot>& slots, const Slot& s) {
    return std::find(slots.begin(), slots.end(), s) != slots.end();
}

// Chain merge of two observational factors: P(A|W) * P(B|W u A) -> P(A,B|W),
// requiring exact term-level agreement between A's target slots and the
// corresponding conditioning slots. Returns true and writes `merged` on
// success.
bool try_plain_merge(const Estimand& f1, const Estimand& f2, Estimand* merged) {
    if (f1.kind != Estimand::Kind::ObsProb || f2.kind != Estimand::Kind::ObsProb) return false;
    // every target of f1 appears among f2's given slots
    for (const auto& t : f1.targets)
        if (!has_slot(f2.given, t)) return false;
    // f2's remaining given slots equal f1's given slots exactly
    std::vector<Slot> rest;
    for (const auto& g : f2.given)
        if (!has_slot(f1.targets, g)) rest.push_back(g);
    if (rest.size() != f1.given.size()) return false;
    for (const auto& g : rest)
        if (!has_slot(f1.given, g)) return false;
    // target nodes must stay distinct
    for (const auto& t2 : f2.targets)
        for (const auto& t1 : f1.targets)
            if (t1.node == t2.node) return false;
    std::vector<Slot> targets = f1.targets;
    targets.insert(targets.end(), f2.targets.begin(), f2.targets.end());
    *merged = Estimand::obs_prob(std::move(targets), f1.given);
    return true;
}

bool slot_sym_is(const Slot& s, const std::string& sym) {
    return s.term.kind == ValueTerm::Kind::Sym && s.term.sym == sym;
}

// Attempts to eliminate bound variable `b` from the factors of a Sum body.
// Handles: a lone ObsProb with the symbol in target position (normalization
// sum), chain-merging factors until that shape appears, a lone
// StrategyFactor or Indicator over the symbol (both sum to one).
bool eliminate_bound_var(const Binding& b, std::vector<Estimand>& factors) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < factors.size(); ++i)
        if (mentions_sym(factors[i], b.sym)) idx.push_back(i);
    if (idx.empty()) return false;

    if (idx.size() == 1) {
        Estimand& f = factors[idx[0]];
        if (f.kind == Estimand::Kind::StrategyFactor && slot_sym_is(f.targets[0], b.sym)) {
            bool elsewhere = false;
            for (const auto& g : f.given)
                if (term_mentions(g.term, b.sym)) elsewhere = true;
            if (!elsewhere) {  // sum_x S[x|c] = 1
                factors.erase(factors.begin() + idx[0]);
                return true;
            }
        }
        if (f.kind == Estimand::Kind::Indicator) {
            // sum_x 1[x=t] = 1 when t does not mention x
            bool left_is = f.left.kind == ValueTerm::Kind::Sym && f.left.sym == b.sym;
            bool right_is = f.right.kind == ValueTerm::Kind::Sym && f.right.sym == b.sym;
            if ((left_is && !term_mentions(f.right, b.sym)) ||
                (right_is && !term_mentions(f.left, b.sym))) {
                factors.erase(factors.begin() + idx[0]);
                return true;
            }
        }
        if (f.kind == Estimand::Kind::ObsProb) {
            int hits = 0;
            size_t slot_at = 0;
            bool elsewhere = false;
            for (size_t i = 0; i < f.targets.size(); ++i) {
                if (slot_sym_is(f.targets[i], b.sym)) {
                    ++hits;
                    slot_at = i;
                } else if (term_mentions(f.targets[i].term, b.sym)) {
                    elsewhere = true;
                }
            }
            for (const auto& g : f.given)
                if (term_mentions(g.term, b.sym)) elsewhere = true;
            if (hits == 1 && !elsewhere) {  // sum_z P(z,rest|W) = P(rest|W)
                f.targets.erase(f.targets.begin() + slot_at);
                if (f.targets.empty()) f = Estimand::one();
                return true;
            }
        }
        return false;
    }

    // Several factors mention the symbol: try chain merges among the
    // observational ones to concentrate it in a single factor.
    for (size_t a = 0; a < idx.size(); ++a) {
        for (size_t c = 0; c < idx.size(); ++c) {
            if (a == c) continue;
            Estimand merged;
            if (try_plain_merge(factors[idx[a]], factors[idx[c]], &merged)) {
                size_t i1 = idx[a], i2 = idx[c];
                if (i1 > i2) std::swap(i1, i2);
                factors.erase(factors.begin() + i2);
                factors.erase(factors.begin() + i1);
                factors.push_back(std::move(merged));
                eliminate_bound_var(b, factors);  // retry after merge
                return true;
            }
        }
    }
    return false;
}

// One bottom-up rewrite pass. Returns the rewritten tree; the driver loops
// to a fixed point.
Estimand pass(const Estimand& e) {
    Estimand cur = e;
    for (auto& c : cur.children) c = pass(c);

    switch (cur.kind) {
        case Estimand::Kind::One:
        case Estimand::Kind::ObsProb:
        case Estimand::Kind::StrategyFactor:
        case Estimand::Kind::Indicator:
            return cur;

        case Estimand::Kind::Product: {
            // flatten, drop ones, pull quotients up
            std::vector<Estimand> nums, dens;
            std::function<void(Estimand&&)> add = [&](Estimand&& f) {
                if (f.kind == Estimand::Kind::One) return;
                if (f.kind == Estimand::Kind::Product) {
                    for (auto& g : f.children) add(std::move(g));
                    return;
                }
                if (f.kind == Estimand::Kind::Quotient) {
                    add(std::move(f.children[0]));
                    dens.push_back(std::move(f.children[1]));
                    return;
                }
                nums.push_back(std::move(f));
            };
            for (auto& c : cur.children) add(std::move(c));
            if (!dens.empty())
                return Estimand::quotient(Estimand::product(std::move(nums)),
                                          Estimand::product(std::move(dens)));
            return Estimand::product(std::move(nums));
        }

        case Estimand::Kind::Quotient: {
            Estimand num = cur.children[0];
            Estimand den = cur.children[1];
            if (den.kind == Estimand::Kind::One) return num;
            if (num.kind == Estimand::Kind::Quotient) {
                Estimand d2 = Estimand::product({num.children[1], den});
                return pass(Estimand::quotient(num.children[0], d2));
            }
            if (den.kind == Estimand::Kind::Quotient) {
                Estimand n2 = Estimand::product({num, den.children[1]});
                return pass(Estimand::quotient(n2, den.children[0]));
            }
            // cancel syntactically identical observational factors
            std::vector<Estimand> nf = factor_list(num), df = factor_list(den);
            bool changed = false;
            for (size_t i = 0; i < df.size();) {
                if (df[i].kind != Estimand::Kind::ObsProb) {
                    ++i;
                    continue;
                }
                auto it = std::find(nf.begin(), nf.end(), df[i]);
                if (it != nf.end()) {
                    nf.erase(it);
                    df.erase(df.begin() + i);
                    changed = true;
                } else {
                    ++i;
                }
            }
            if (changed) {
                if (df.empty()) return Estimand::product(std::move(nf));
                return Estimand::quotient(Estimand::product(std::move(nf)),
                                          Estimand::product(std::move(df)));
            }
            if (df.empty()) return Estimand::product(std::move(nf));
            return cur;
        }

        case Estimand::Kind::Sum: {
            Estimand body = cur.children[0];
            std::vector<Binding> bound = cur.bound;
            if (bound.empty()) return body;
            if (body.kind == Estimand::Kind::Sum) {  // merge nested sums
                std::vector<Binding> merged = bound;
                merged.insert(merged.end(), body.bound.begin(), body.bound.end());
                return pass(Estimand::sum(std::move(merged), body.children[0]));
            }
            if (body.kind == Estimand::Kind::Quotient) {
                // hoist the denominator out when it has no bound symbol
                bool clean = true;
                for (const auto& b : bound)
                    if (mentions_sym(body.children[1], b.sym)) clean = false;
                if (clean) {
                    Estimand n = Estimand::sum(bound, body.children[0]);
                    return pass(Estimand::quotient(std::move(n), body.children[1]));
                }
                return Estimand::sum(std::move(bound), std::move(body));
            }

            std::vector<Estimand> factors = factor_list(body);

            // delta collapse: sum_x 1[x=t] f(x) -> f(t)
            for (size_t bi = 0; bi < bound.size(); ++bi) {
                const Binding b = bound[bi];
                for (size_t fi = 0; fi < factors.size(); ++fi) {
                    const Estimand& f = factors[fi];
                    if (f.kind != Estimand::Kind::Indicator) continue;
                    ValueTerm repl;
                    bool match = false;
                    if (f.left.kind == ValueTerm::Kind::Sym && f.left.sym == b.sym &&
                        !term_mentions(f.right, b.sym)) {
                        repl = f.right;
                        match = true;
                    } else if (f.right.kind == ValueTerm::Kind::Sym && f.right.sym == b.sym &&
                               !term_mentions(f.left, b.sym)) {
                        repl = f.left;
                        match = true;
                    }
                    if (!match) continue;
                    factors.erase(factors.begin() + fi);
                    for (auto& g : factors) g = substitute_free(g, b.sym, repl);
                    std::vector<Binding> rest = bound;
                    rest.erase(rest.begin() + bi);
                    return pass(Estimand::sum(std::move(rest), Estimand::product(std::move(factors))));
                }
            }

            // normalization sums
            for (size_t bi = 0; bi < bound.size(); ++bi) {
                std::vector<Estimand> work = factors;
                if (eliminate_bound_var(bound[bi], work)) {
                    std::vector<Binding> rest = bound;
                    rest.erase(rest.begin() + bi);
                    return pass(Estimand::sum(std::move(rest), Estimand::product(std::move(work))));
                }
            }

            // scope minimization
            std::vector<Estimand> inside, outside;
            for (auto& f : factors) {
                bool touches = false;
                for (const auto& b : bound)
                    if (mentions_sym(f, b.sym)) touches = true;
                (touches ? inside : outside).push_back(std::move(f));
            }
            if (!outside.empty() && !inside.empty()) {
                outside.push_back(Estimand::sum(std::move(bound), Estimand::product(std::move(inside))));
                return pass(Estimand::product(std::move(outside)));
            }
            return Estimand::sum(std::move(bound), Estimand::product(std::move(factors)));
        }
    }
    return cur;
}

// --- canonicalization ------------------------------------------------------

// True if `sym` occurs free anywhere in the tree (Sum nodes shadow as usual).
bool sym_free_in(const Estimand& e, const std::string& sym) { return mentions_sym(e, sym); }

Estimand freshen_all_binders(const Estimand& e) {
    Estimand out = e;
    if (out.kind == Estimand::Kind::Sum) {
        for (auto& b : out.bound) {
            std::string nn = fresh_tmp();
            out.children[0] = substitute_free(out.children[0], b.sym, ValueTerm::make_sym(b.node, nn));
            b.sym = nn;
        }
    }
    for (auto& c : out.children) c = freshen_all_binders(c);
    return out;
}

Estimand assign_canonical_names(const Estimand& e, std::set<std::string> path_syms) {
    Estimand out = e;
    if (out.kind == Estimand::Kind::Sum) {
        for (auto& b : out.bound) {
            std::string base = canonical_sym(b.node);
            std::string candidate = base;
            while (path_syms.count(candidate) ||
                   (candidate != b.sym && sym_free_in(out.children[0], candidate)))
                candidate += "'";
            if (candidate != b.sym)
                out.children[0] =
                    substitute_free(out.children[0], b.sym, ValueTerm::make_sym(b.node, candidate));
            b.sym = candidate;
            path_syms.insert(candidate);
        }
        std::sort(out.bound.begin(), out.bound.end(),
                  [](const Binding& a, const Binding& b) { return a.sym < b.sym; });
    }
    for (auto& c : out.children) c = assign_canonical_names(c, path_syms);
    return out;
}

Estimand sort_slots_and_factors(const Estimand& e) {
    Estimand out = e;
    for (auto& c : out.children) c = sort_slots_and_factors(c);
    if (out.kind == Estimand::Kind::ObsProb) {
        auto by_node = [](const Slot& a, const Slot& b) { return a.node < b.node; };
        std::sort(out.targets.begin(), out.targets.end(), by_node);
        std::sort(out.given.begin(), out.given.end(), by_node);
    }
    if (out.kind == Estimand::Kind::Product) {
        std::vector<std::pair<std::string, Estimand>> keyed;
        keyed.reserve(out.children.size());
        for (auto& c : out.children) keyed.emplace_back(render(c), std::move(c));
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        out.children.clear();
        for (auto& [k, c] : keyed) out.children.push_back(std::move(c));
    }
    return out;
}

Estimand canonicalize(const Estimand& e) {
    Estimand out = freshen_all_binders(e);
    out = assign_canonical_names(out, {});
    return sort_slots_and_factors(out);
}

}  // namespace

Estimand simplify(const Estimand& e) {
    Estimand cur = canonicalize(pass(e));
    for (int i = 0; i < 50; ++i) {
        Estimand next = canonicalize(pass(cur));
        if (next == cur) return cur;
        cur = std::move(next);
    }
    return cur;
}

Estimand sum_over_nodes(const std::set<NodeId>& nodes, Estimand body) {
    if (nodes.empty()) return body;
    std::vector<Binding> bound;
    for (const auto& n : nodes) {
        std::string sym = canonical_sym(n);
        body = freshen_binders_named(body, sym);
        bound.push_back(Binding{n, sym});
    }
    return Estimand::sum(std::move(bound), std::move(body));
}

}  // namespace planid
