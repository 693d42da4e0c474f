#include "planid/textio.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace planid {

namespace {

using nlohmann::json;

struct Line {
    int number;
    std::vector<std::string> tokens;
};

[[noreturn]] void parse_fail(int line, const std::string& msg) {
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + msg);
}

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> out;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        // braces and separators become their own tokens
        std::string spaced;
        for (char c : raw) {
            if (c == '{' || c == '}' || c == ';') {
                spaced += ' ';
                spaced += c;
                spaced += ' ';
            } else {
                spaced += c;
            }
        }
        std::istringstream ls(spaced);
        Line line{number, {}};
        std::string tok;
        while (ls >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) out.push_back(std::move(line));
    }
    return out;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return !std::isdigit(static_cast<unsigned char>(s[0]));
}

int parse_int(const std::string& s, int line) {
    try {
        size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) parse_fail(line, "bad integer '" + s + "'");
        return v;
    } catch (const std::exception&) {
        parse_fail(line, "bad integer '" + s + "'");
    }
}

double parse_double(const std::string& s, int line) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) parse_fail(line, "bad number '" + s + "'");
        return v;
    } catch (const std::exception&) {
        parse_fail(line, "bad number '" + s + "'");
    }
}

}  // namespace

ParsedGraph parse_graph(const std::string& text) {
    ParsedGraph g;
    std::vector<Line> lines = tokenize(text);
    for (const auto& line : lines) {
        const auto& t = line.tokens;
        const std::string& kw = t[0];
        if (kw == "observed") {
            if (t.size() != 3 || t[2].rfind("card=", 0) != 0)
                parse_fail(line.number, "expected: observed <name> card=<k>");
            if (!valid_name(t[1])) parse_fail(line.number, "bad node name '" + t[1] + "'");
            if (g.diagram.has_node(t[1])) parse_fail(line.number, "duplicate node " + t[1]);
            int card = parse_int(t[2].substr(5), line.number);
            if (card < 2) parse_fail(line.number, "cardinality must be at least 2");
            g.diagram.observed.insert(t[1]);
            g.cards[t[1]] = card;
        } else if (kw == "latent") {
            if (t.size() != 2) parse_fail(line.number, "expected: latent <name>");
            if (!valid_name(t[1])) parse_fail(line.number, "bad node name '" + t[1] + "'");
            if (g.diagram.has_node(t[1])) parse_fail(line.number, "duplicate node " + t[1]);
            g.diagram.latent.insert(t[1]);
            g.cards[t[1]] = 2;
        } else if (kw == "edge") {
            if (t.size() != 3) parse_fail(line.number, "expected: edge <parent> <child>");
            if (!g.diagram.has_node(t[1])) parse_fail(line.number, "unknown node " + t[1]);
            if (!g.diagram.has_node(t[2])) parse_fail(line.number, "unknown node " + t[2]);
            if (t[1] == t[2]) parse_fail(line.number, "self loop on " + t[1]);
            g.diagram.edges.insert({t[1], t[2]});
        } else if (kw == "action") {
            if (t.size() != 2) parse_fail(line.number, "expected: action <name>");
            if (!g.diagram.observed.count(t[1]))
                parse_fail(line.number, "action " + t[1] + " is not an observed node");
            g.actions.insert(t[1]);
        } else if (kw == "outcome") {
            if (t.size() != 2) parse_fail(line.number, "expected: outcome <name>");
            if (!g.diagram.observed.count(t[1]))
                parse_fail(line.number, "outcome " + t[1] + " is not an observed node");
            g.outcome.insert(t[1]);
        } else {
            parse_fail(line.number, "unknown declaration '" + kw + "'");
        }
    }
    if (g.diagram.observed.empty()) throw Error(Errc::ParseError, "no nodes declared");
    // lowercase symbols must stay unambiguous for rendering
    std::map<std::string, NodeId> lower;
    for (const auto& n : g.diagram.all_nodes()) {
        auto [it, fresh] = lower.insert({canonical_sym(n), n});
        if (!fresh)
            throw Error(Errc::DuplicateNode, n + " and " + it->second + " collide case-insensitively");
    }
    validate(g.diagram);
    return g;
}

namespace {

// Joins tokenized lines into statements: idle/atomic statements end with the
// line, table statements run to the closing brace.
std::vector<Line> strategy_statements(const std::vector<Line>& lines) {
    std::vector<Line> out;
    size_t i = 0;
    while (i < lines.size()) {
        Line stmt = lines[i];
        bool open = std::count(stmt.tokens.begin(), stmt.tokens.end(), "{") >
                    std::count(stmt.tokens.begin(), stmt.tokens.end(), "}");
        ++i;
        while (open && i < lines.size()) {
            for (const auto& tok : lines[i].tokens) {
                stmt.tokens.push_back(tok);
                if (tok == "}") open = false;
            }
            ++i;
        }
        if (open) parse_fail(stmt.number, "unterminated '{'");
        out.push_back(std::move(stmt));
    }
    return out;
}

// Parses `{ cfg -> payload ; ... }` table entries; returns rows keyed by
// configuration index.
struct TableEntry {
    std::vector<int> cfg;
    std::vector<std::string> payload;
};

std::vector<TableEntry> parse_table(const std::vector<std::string>& t, size_t open_at,
                                    size_t cond_arity, int line) {
    if (t[open_at] != "{" || t.back() != "}") parse_fail(line, "expected a { ... } table");
    std::vector<TableEntry> entries;
    TableEntry cur;
    bool after_arrow = false;
    for (size_t i = open_at + 1; i < t.size(); ++i) {
        const std::string& tok = t[i];
        if (tok == "}") break;
        if (tok == ";") {
            if (after_arrow) entries.push_back(std::move(cur));
            cur = {};
            after_arrow = false;
            continue;
        }
        if (tok == "->") {
            if (cur.cfg.size() != cond_arity)
                parse_fail(line, "configuration lists " + std::to_string(cur.cfg.size()) +
                                     " values, expected " + std::to_string(cond_arity));
            after_arrow = true;
            continue;
        }
        if (after_arrow)
            cur.payload.push_back(tok);
        else
            cur.cfg.push_back(parse_int(tok, line));
    }
    if (after_arrow) entries.push_back(std::move(cur));
    return entries;
}

}  // namespace

Strategy parse_strategy(const std::string& text, const ParsedGraph& graph) {
    Strategy s;
    for (const auto& stmt : strategy_statements(tokenize(text))) {
        const auto& t = stmt.tokens;
        if (t.size() < 2) parse_fail(stmt.number, "expected: <action> <regime> ...");
        const NodeId& action = t[0];
        if (!graph.actions.count(action))
            parse_fail(stmt.number, action + " is not a declared action");
        if (s.assignments.count(action))
            parse_fail(stmt.number, "duplicate regime for " + action);
        const std::string& kind = t[1];
        int card = graph.cards.at(action);

        if (kind == "idle") {
            if (t.size() != 2) parse_fail(stmt.number, "idle takes no arguments");
            s.assignments[action] = IdleRegime{};
            continue;
        }
        if (kind == "atomic") {
            if (t.size() != 3) parse_fail(stmt.number, "expected: <action> atomic <value>");
            int v = parse_int(t[2], stmt.number);
            if (v < 0 || v >= card) parse_fail(stmt.number, "atomic value out of range");
            s.assignments[action] = AtomicRegime{v};
            continue;
        }
        if (kind != "conditional" && kind != "random")
            parse_fail(stmt.number, "unknown regime kind '" + kind + "'");

        size_t open_at = 2;
        std::vector<NodeId> cond;
        while (open_at < t.size() && t[open_at] != "{") cond.push_back(t[open_at++]);
        if (open_at == t.size()) parse_fail(stmt.number, "missing table");
        std::vector<int> cond_cards;
        size_t rows = 1;
        for (const auto& c : cond) {
            if (!graph.cards.count(c) || !graph.diagram.observed.count(c))
                parse_fail(stmt.number, "unknown conditioning variable " + c);
            cond_cards.push_back(graph.cards.at(c));
            rows *= static_cast<size_t>(graph.cards.at(c));
        }
        auto entries = parse_table(t, open_at, cond.size(), stmt.number);

        if (kind == "conditional") {
            std::vector<int> table(rows, -1);
            for (const auto& e : entries) {
                if (e.payload.size() != 1) parse_fail(stmt.number, "expected a single value");
                int v = parse_int(e.payload[0], stmt.number);
                if (v < 0 || v >= card) parse_fail(stmt.number, "value out of range");
                table[static_cast<size_t>(config_index(cond_cards, e.cfg))] = v;
            }
            for (int v : table)
                if (v < 0) parse_fail(stmt.number, "table for " + action + " is not total");
            s.assignments[action] = ConditionalRegime{cond, cond_cards, table};
        } else {
            std::vector<double> table(rows * static_cast<size_t>(card), -1.0);
            for (const auto& e : entries) {
                if (static_cast<int>(e.payload.size()) != card)
                    parse_fail(stmt.number, "expected " + std::to_string(card) + " probabilities");
                size_t base = static_cast<size_t>(config_index(cond_cards, e.cfg)) *
                              static_cast<size_t>(card);
                for (int v = 0; v < card; ++v)
                    table[base + static_cast<size_t>(v)] = parse_double(e.payload[v], stmt.number);
            }
            for (double p : table)
                if (p < 0.0) parse_fail(stmt.number, "table for " + action + " is not total");
            s.assignments[action] = RandomRegime{cond, cond_cards, card, table};
        }
    }
    for (const auto& a : graph.actions)
        if (!s.assignments.count(a)) throw Error(Errc::ParseError, "no regime given for " + a);
    return s;
}

DiscreteModel parse_model(const std::string& text, const ParsedGraph& graph) {
    DiscreteModel m;
    m.diagram = graph.diagram;
    m.cards = graph.cards;

    std::vector<Line> lines = tokenize(text);
    size_t i = 0;
    while (i < lines.size()) {
        const auto& t = lines[i].tokens;
        if (t[0] != "cpt") parse_fail(lines[i].number, "expected a 'cpt' block");
        if (t.size() < 3 || t[2] != "|") parse_fail(lines[i].number, "expected: cpt <node> | <parents...>");
        NodeId node = t[1];
        if (!m.diagram.has_node(node)) parse_fail(lines[i].number, "unknown node " + node);
        Cpt cpt;
        std::vector<NodeId> declared(t.begin() + 3, t.end());
        std::set<NodeId> declared_set(declared.begin(), declared.end());
        if (declared_set != m.diagram.parents(node))
            parse_fail(lines[i].number, "parents of " + node + " do not match the diagram");
        cpt.card = m.cards.at(node);
        std::vector<int> declared_cards;
        size_t rows = 1;
        for (const auto& p : declared) {
            declared_cards.push_back(m.cards.at(p));
            rows *= static_cast<size_t>(m.cards.at(p));
        }
        // rows are given in declared-parent order; re-index to sorted order
        std::set<NodeId> sorted_parents(declared.begin(), declared.end());
        cpt.parents.assign(sorted_parents.begin(), sorted_parents.end());
        for (const auto& p : cpt.parents) cpt.parent_cards.push_back(m.cards.at(p));
        cpt.table.assign(rows * static_cast<size_t>(cpt.card), -1.0);

        ++i;
        for (size_t row = 0; row < rows; ++row, ++i) {
            if (i >= lines.size()) throw Error(Errc::ParseError, "unexpected end of cpt block for " + node);
            const auto& rt = lines[i].tokens;
            auto colon = std::find(rt.begin(), rt.end(), ":");
            if (colon == rt.end()) parse_fail(lines[i].number, "expected '<cfg> : <probs>'");
            std::vector<int> cfg;
            for (auto it = rt.begin(); it != colon; ++it) cfg.push_back(parse_int(*it, lines[i].number));
            if (cfg.size() != declared.size()) parse_fail(lines[i].number, "bad configuration arity");
            std::vector<double> probs;
            for (auto it = colon + 1; it != rt.end(); ++it)
                probs.push_back(parse_double(*it, lines[i].number));
            if (static_cast<int>(probs.size()) != cpt.card)
                parse_fail(lines[i].number, "expected " + std::to_string(cpt.card) + " probabilities");
            // map declared-order cfg onto sorted-parent row index
            std::map<NodeId, int> assignment;
            for (size_t k = 0; k < declared.size(); ++k) assignment[declared[k]] = cfg[k];
            std::vector<int> sorted_cfg;
            for (const auto& p : cpt.parents) sorted_cfg.push_back(assignment.at(p));
            size_t base = static_cast<size_t>(config_index(cpt.parent_cards, sorted_cfg)) *
                          static_cast<size_t>(cpt.card);
            for (int v = 0; v < cpt.card; ++v) cpt.table[base + static_cast<size_t>(v)] = probs[v];
        }
        m.cpts[node] = std::move(cpt);
    }
    validate_model(m);
    return m;
}

std::string format_graph(const ParsedGraph& graph) {
    std::ostringstream out;
    for (const auto& n : graph.diagram.observed)
        out << "observed " << n << " card=" << graph.cards.at(n) << "\n";
    for (const auto& n : graph.diagram.latent) out << "latent " << n << "\n";
    for (const auto& [p, c] : graph.diagram.edges) out << "edge " << p << " " << c << "\n";
    for (const auto& a : graph.actions) out << "action " << a << "\n";
    for (const auto& y : graph.outcome) out << "outcome " << y << "\n";
    return out.str();
}

namespace {

void format_rows(std::ostringstream& out, const std::vector<int>& cond_cards,
                 const std::function<void(size_t)>& payload) {
    size_t rows = 1;
    for (int k : cond_cards) rows *= static_cast<size_t>(k);
    out << "{ ";
    for (size_t r = 0; r < rows; ++r) {
        if (r) out << " ; ";
        // decode row-major configuration
        std::vector<int> cfg(cond_cards.size());
        size_t rest = r;
        for (size_t i = cond_cards.size(); i-- > 0;) {
            cfg[i] = static_cast<int>(rest % static_cast<size_t>(cond_cards[i]));
            rest /= static_cast<size_t>(cond_cards[i]);
        }
        for (int v : cfg) out << v << " ";
        out << "->";
        payload(r);
    }
    out << " }";
}

}  // namespace

std::string format_strategy(const Strategy& strategy) {
    std::ostringstream out;
    for (const auto& [a, r] : strategy.assignments) {
        if (std::holds_alternative<IdleRegime>(r)) {
            out << a << " idle\n";
        } else if (const auto* at = std::get_if<AtomicRegime>(&r)) {
            out << a << " atomic " << at->value << "\n";
        } else if (const auto* c = std::get_if<ConditionalRegime>(&r)) {
            out << a << " conditional";
            for (const auto& n : c->cond) out << " " << n;
            out << " ";
            format_rows(out, c->cond_cards, [&](size_t row) { out << " " << c->table[row]; });
            out << "\n";
        } else {
            const auto& p = std::get<RandomRegime>(r);
            out << a << " random";
            for (const auto& n : p.cond) out << " " << n;
            out << " ";
            format_rows(out, p.cond_cards, [&](size_t row) {
                for (int v = 0; v < p.action_card; ++v)
                    out << " " << fmt12(p.table[row * static_cast<size_t>(p.action_card) +
                                                static_cast<size_t>(v)]);
            });
            out << "\n";
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Estimand JSON

namespace {

json term_to_json(const ValueTerm& t) {
    json j;
    switch (t.kind) {
        case ValueTerm::Kind::Sym: j["kind"] = "sym"; j["node"] = t.node; j["sym"] = t.sym; break;
        case ValueTerm::Kind::Given: j["kind"] = "given"; j["node"] = t.node; break;
        case ValueTerm::Kind::Const: j["kind"] = "const"; j["node"] = t.node; j["value"] = t.value; break;
        case ValueTerm::Kind::Apply: {
            j["kind"] = "apply";
            j["node"] = t.node;
            j["args"] = json::array();
            for (const auto& a : t.args) j["args"].push_back(term_to_json(a));
            break;
        }
    }
    return j;
}

ValueTerm term_from_json(const json& j) {
    std::string kind = j.at("kind");
    if (kind == "sym") return ValueTerm::make_sym(j.at("node"), j.at("sym"));
    if (kind == "given") return ValueTerm::make_given(j.at("node"));
    if (kind == "const") return ValueTerm::make_const(j.at("node"), j.at("value"));
    if (kind == "apply") {
        std::vector<ValueTerm> args;
        for (const auto& a : j.at("args")) args.push_back(term_from_json(a));
        return ValueTerm::make_apply(j.at("node"), std::move(args));
    }
    throw Error(Errc::ParseError, "bad term kind '" + kind + "'");
}

json slots_to_json(const std::vector<Slot>& slots) {
    json arr = json::array();
    for (const auto& s : slots) arr.push_back({{"node", s.node}, {"term", term_to_json(s.term)}});
    return arr;
}

std::vector<Slot> slots_from_json(const json& arr) {
    std::vector<Slot> out;
    for (const auto& j : arr) out.push_back(Slot{j.at("node"), term_from_json(j.at("term"))});
    return out;
}

json estimand_to_json_rec(const Estimand& e) {
    json j;
    switch (e.kind) {
        case Estimand::Kind::One: j["kind"] = "one"; break;
        case Estimand::Kind::ObsProb:
            j["kind"] = "obs";
            j["targets"] = slots_to_json(e.targets);
            j["given"] = slots_to_json(e.given);
            break;
        case Estimand::Kind::StrategyFactor:
            j["kind"] = "strategy";
            j["targets"] = slots_to_json(e.targets);
            j["given"] = slots_to_json(e.given);
            break;
        case Estimand::Kind::Indicator:
            j["kind"] = "indicator";
            j["left"] = term_to_json(e.left);
            j["right"] = term_to_json(e.right);
            break;
        case Estimand::Kind::Sum: {
            j["kind"] = "sum";
            j["bound"] = json::array();
            for (const auto& b : e.bound) j["bound"].push_back({{"node", b.node}, {"sym", b.sym}});
            j["body"] = estimand_to_json_rec(e.children[0]);
            break;
        }
        case Estimand::Kind::Product: {
            j["kind"] = "product";
            j["factors"] = json::array();
            for (const auto& c : e.children) j["factors"].push_back(estimand_to_json_rec(c));
            break;
        }
        case Estimand::Kind::Quotient:
            j["kind"] = "quotient";
            j["num"] = estimand_to_json_rec(e.children[0]);
            j["den"] = estimand_to_json_rec(e.children[1]);
            break;
    }
    return j;
}

Estimand estimand_from_json_rec(const json& j) {
    std::string kind = j.at("kind");
    if (kind == "one") return Estimand::one();
    if (kind == "obs") return Estimand::obs_prob(slots_from_json(j.at("targets")),
                                                 slots_from_json(j.at("given")));
    if (kind == "strategy") {
        std::vector<Slot> targets = slots_from_json(j.at("targets"));
        if (targets.size() != 1) throw Error(Errc::ParseError, "strategy factor needs one action slot");
        return Estimand::strategy_factor(targets[0].node, targets[0].term,
                                         slots_from_json(j.at("given")));
    }
    if (kind == "indicator")
        return Estimand::indicator(term_from_json(j.at("left")), term_from_json(j.at("right")));
    if (kind == "sum") {
        std::vector<Binding> bound;
        for (const auto& b : j.at("bound")) bound.push_back(Binding{b.at("node"), b.at("sym")});
        return Estimand::sum(std::move(bound), estimand_from_json_rec(j.at("body")));
    }
    if (kind == "product") {
        std::vector<Estimand> factors;
        for (const auto& f : j.at("factors")) factors.push_back(estimand_from_json_rec(f));
        return Estimand::product(std::move(factors));
    }
    if (kind == "quotient")
        return Estimand::quotient(estimand_from_json_rec(j.at("num")),
                                  estimand_from_json_rec(j.at("den")));
    throw Error(Errc::ParseError, "bad estimand kind '" + kind + "'");
}

}  // namespace

std::string estimand_to_json(const Estimand& e) { return estimand_to_json_rec(e).dump(2); }

Estimand estimand_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw Error(Errc::ParseError, ex.what());
    }
    try {
        return estimand_from_json_rec(j);
    } catch (const json::exception& ex) {
        throw Error(Errc::ParseError, ex.what());
    }
}

std::string fmt12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace planid
