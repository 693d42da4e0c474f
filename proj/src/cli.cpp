#include "planid/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "planid/identify.hpp"
#include "planid/oracle.hpp"
#include "planid/textio.hpp"

namespace planid {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string join_names(const std::set<NodeId>& s) {
    std::string out;
    for (const auto& n : s) {
        if (!out.empty()) out += " ";
        out += n;
    }
    return out.empty() ? "(none)" : out;
}

void print_outcome(const IdentificationOutcome& r, std::ostream& out) {
    out << "verdict: " << (r.identified ? "identified" : "criterion-fails") << "\n";
    out << "x_d: " << join_names(r.x_d) << "\n";
    out << "z_d: " << join_names(r.z_d) << "\n";
    if (r.identified) {
        out << "estimand: " << render(r.estimand) << "\n";
    } else {
        out << "failing_set: " << join_names(r.failing_set) << "\n";
        out << "failing_component: " << join_names(r.failing_component) << "\n";
        out << "note: the sufficient identification criterion does not hold; "
               "non-identifiability of the plan is conjectured, not proven\n";
    }
}

struct LoadedQuery {
    ParsedGraph graph;
    Strategy strategy;
    IdentificationOutcome outcome;
};

LoadedQuery load_and_identify(const RunConfig& config, std::ostream& err) {
    LoadedQuery q;
    q.graph = parse_graph(slurp(config.graph_path));
    q.strategy = parse_strategy(slurp(config.strategy_path), q.graph);
    ProjectedDiagram proj = project_latents(q.graph.diagram);
    if (proj.compound_latent_paths)
        err << "note: latent projection collapsed compound latent paths\n";

    PlanQuery query;
    query.diagram = q.graph.diagram;
    query.actions = q.graph.actions;
    query.outcome = q.graph.outcome;
    query.strategy = q.strategy;
    query.cardinalities = q.graph.cards;
    q.outcome = identify_plan(query);
    return q;
}

int cmd_identify(const RunConfig& config, std::ostream& out, std::ostream& err) {
    LoadedQuery q = load_and_identify(config, err);
    print_outcome(q.outcome, out);
    if (q.outcome.identified && !config.estimand_path.empty()) {
        std::ofstream f(config.estimand_path);
        if (!f) throw Error(Errc::ParseError, "cannot write " + config.estimand_path);
        f << estimand_to_json(q.outcome.estimand) << "\n";
    }
    return q.outcome.identified ? kExitOk : kExitCriterionFails;
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
    LoadedQuery q = load_and_identify(config, err);
    print_outcome(q.outcome, out);
    if (!q.outcome.identified) return kExitCriterionFails;

    double worst = 0.0;
    int trials = 0;
    if (!config.model_path.empty()) {
        DiscreteModel m = parse_model(slurp(config.model_path), q.graph);
        worst = compare(m, q.strategy, q.graph.outcome, q.outcome.estimand);
        trials = 1;
    } else {
        for (int t = 0; t < config.trials; ++t) {
            DiscreteModel m =
                random_model(q.graph.diagram, q.graph.cards, config.seed + static_cast<std::uint64_t>(t));
            worst = std::max(worst, compare(m, q.strategy, q.graph.outcome, q.outcome.estimand));
            ++trials;
        }
    }
    out << "trials: " << trials << "\n";
    out << "max_deviation: " << fmt12(worst) << "\n";
    out << "tolerance: " << fmt12(config.tolerance) << "\n";
    return worst <= config.tolerance ? kExitOk : kExitDeviationExceeded;
}

int cmd_render(const RunConfig& config, std::ostream& out) {
    Estimand e = estimand_from_json(slurp(config.estimand_path));
    out << render(e) << "\n";
    return kExitOk;
}

int cmd_random_test(const RunConfig& config, std::ostream& out) {
    int identified = 0, fails = 0, violations = 0;
    double worst = 0.0;
    for (int t = 0; t < config.trials; ++t) {
        RandomQuery rq = random_query(config.seed + static_cast<std::uint64_t>(t),
                                      config.max_observed, config.max_latents);
        PlanQuery query{rq.diagram, rq.actions, rq.outcome, rq.strategy, rq.cards};
        IdentificationOutcome r = identify_plan(query);
        if (!r.identified) {
            ++fails;
            continue;
        }
        ++identified;
        for (int k = 0; k < 3; ++k) {
            DiscreteModel m = random_model(rq.diagram, rq.cards,
                                           config.seed * 1000003 + static_cast<std::uint64_t>(t * 31 + k));
            double dev = compare(m, rq.strategy, rq.outcome, r.estimand);
            worst = std::max(worst, dev);
            if (dev > config.tolerance) ++violations;
        }
    }
    out << "trials: " << config.trials << "\n";
    out << "identified: " << identified << "\n";
    out << "criterion_fails: " << fails << "\n";
    out << "max_deviation: " << fmt12(worst) << "\n";
    out << "tolerance: " << fmt12(config.tolerance) << "\n";
    out << "violations: " << violations << "\n";
    return violations == 0 ? kExitOk : kExitDeviationExceeded;
}

}  // namespace

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        switch (config.command) {
            case RunConfig::Command::Identify: return cmd_identify(config, out, err);
            case RunConfig::Command::Verify: return cmd_verify(config, out, err);
            case RunConfig::Command::Render: return cmd_render(config, out);
            case RunConfig::Command::RandomTest: return cmd_random_test(config, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

}  // namespace planid
