#include "planid/joint_table.hpp"

#include <algorithm>

namespace planid {

int JointTable::card_of(const NodeId& n) const {
    auto it = std::find(vars.begin(), vars.end(), n);
    if (it == vars.end()) throw Error(Errc::UnknownVariable, n);
    return cards[static_cast<size_t>(it - vars.begin())];
}

double JointTable::marginal(const std::map<NodeId, int>& assignment) const {
    std::vector<int> want(vars.size(), -1);
    for (const auto& [n, v] : assignment) {
        auto it = std::find(vars.begin(), vars.end(), n);
        if (it == vars.end()) throw Error(Errc::UnknownVariable, n);
        want[static_cast<size_t>(it - vars.begin())] = v;
    }
    double total = 0.0;
    std::vector<int> vals(vars.size(), 0);
    for (size_t idx = 0; idx < probs.size(); ++idx) {
        bool match = true;
        for (size_t i = 0; i < vars.size(); ++i)
            if (want[i] >= 0 && vals[i] != want[i]) {
                match = false;
                break;
            }
        if (match) total += probs[idx];
        // advance row-major odometer
        for (size_t i = vars.size(); i-- > 0;) {
            if (++vals[i] < cards[i]) break;
            vals[i] = 0;
        }
    }
    return total;
}

double JointTable::conditional(const std::map<NodeId, int>& targets,
                               const std::map<NodeId, int>& given) const {
    double pg = given.empty() ? 1.0 : marginal(given);
    if (pg == 0.0) return 0.0;
    std::map<NodeId, int> both = given;
    for (const auto& [n, v] : targets) both[n] = v;
    return marginal(both) / pg;
}

}  // namespace planid
