#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "memdp/model.hpp"

namespace memdp {

using MemoryId = int;

// Stochastic Moore machine. The action choice depends on (state, memory); the
// memory update depends on (chosen action, source state, memory), so a step
// from (s, m) via a to s' carries probability
//   next_action(s,m)(a) * delta(s,a,s') * update(a,s,m)(m').
// Update rows exist exactly for triples whose action has positive mass; this
// canonical form makes serialization lossless.
struct StrategyMachine {
    std::vector<std::string> memory_names;
    std::map<MemoryId, Rat> init;
    std::map<std::pair<StateId, MemoryId>, std::map<ActionId, Rat>> next_action;
    std::map<std::tuple<ActionId, StateId, MemoryId>, std::map<MemoryId, Rat>> update;

    int memories() const { return static_cast<int>(memory_names.size()); }

    const std::map<ActionId, Rat>& act_row(StateId s, MemoryId m) const {
        auto it = next_action.find({s, m});
        if (it == next_action.end())
            throw std::out_of_range("strategy has no action row for state/memory");
        return it->second;
    }
    const std::map<MemoryId, Rat>& update_row(ActionId a, StateId s, MemoryId m) const {
        auto it = update.find({a, s, m});
        if (it == update.end())
            throw std::out_of_range("strategy has no update row for action/state/memory");
        return it->second;
    }

    bool operator==(const StrategyMachine&) const = default;
};

inline std::vector<std::string> validate_strategy(const Memdp& model, const StrategyMachine& sm) {
    std::vector<std::string> bad;
    if (sm.memory_names.empty()) bad.push_back("no memory states");
    Rat im = 0;
    for (auto& [mm, q] : sm.init) {
        if (mm < 0 || mm >= sm.memories()) bad.push_back("init names unknown memory");
        if (sgn(q) <= 0) bad.push_back("non-positive init mass");
        im += q;
    }
    if (im != 1) bad.push_back("init mass " + rat_str(im));
    for (auto& [key, row] : sm.next_action) {
        auto [s, mm] = key;
        if (s < 0 || s >= model.n() || mm < 0 || mm >= sm.memories()) {
            bad.push_back("action row out of range");
            continue;
        }
        Rat total = 0;
        for (auto& [a, q] : row) {
            if (sgn(q) <= 0) bad.push_back("non-positive action mass");
            total += q;
            if (!std::binary_search(model.enabled[s].begin(), model.enabled[s].end(), a))
                bad.push_back("action " + model.action_names[a] + " not enabled at " +
                              model.state_names[s]);
            if (sm.update.find({a, s, mm}) == sm.update.end())
                bad.push_back("missing update row at " + model.state_names[s] + "/" +
                              model.action_names[a]);
        }
        if (total != 1)
            bad.push_back("action row mass " + rat_str(total) + " at " + model.state_names[s]);
    }
    for (auto& [key, row] : sm.update) {
        auto [a, s, mm] = key;
        auto it = sm.next_action.find({s, mm});
        if (it == sm.next_action.end() || it->second.count(a) == 0)
            bad.push_back("update row for unused action at " + model.state_names[s]);
        Rat total = 0;
        for (auto& [m2, q] : row) {
            if (m2 < 0 || m2 >= sm.memories()) bad.push_back("update names unknown memory");
            if (sgn(q) <= 0) bad.push_back("non-positive update mass");
            total += q;
        }
        if (total != 1) bad.push_back("update row mass " + rat_str(total));
    }
    return bad;
}

// Memoryless machine from per-state action distributions. States without a row
// are given the uniform distribution over their enabled actions so the machine
// is total.
inline StrategyMachine memoryless_machine(const Memdp& model,
                                          const std::map<StateId, std::map<ActionId, Rat>>& rows,
                                          const std::string& memory_name = "m") {
    StrategyMachine sm;
    sm.memory_names = {memory_name};
    sm.init[0] = 1;
    for (StateId s = 0; s < model.n(); ++s) {
        std::map<ActionId, Rat> row;
        auto it = rows.find(s);
        if (it != rows.end() && !it->second.empty()) {
            row = it->second;
        } else {
            Rat u(1, static_cast<long>(model.enabled[s].size()));
            u.canonicalize();
            for (ActionId a : model.enabled[s]) row[a] = u;
        }
        for (auto& [a, q] : row) sm.update[{a, s, 0}] = {{0, Rat(1)}};
        sm.next_action[{s, 0}] = std::move(row);
    }
    return sm;
}

inline StrategyMachine pure_memoryless_machine(const Memdp& model,
                                               const std::map<StateId, ActionId>& choice) {
    std::map<StateId, std::map<ActionId, Rat>> rows;
    for (auto& [s, a] : choice) rows[s][a] = 1;
    return memoryless_machine(model, rows);
}

inline StrategyMachine uniform_machine(const Memdp& model) {
    return memoryless_machine(model, {});
}

// Pointwise mixture of memoryless machines (equal-weight rows), yielding the
// memoryless machine sum_i w_i * sigma_i.
inline StrategyMachine mix_memoryless(const Memdp& model,
                                      const std::vector<StrategyMachine>& parts,
                                      const std::vector<Rat>& weights) {
    std::map<StateId, std::map<ActionId, Rat>> rows;
    for (size_t i = 0; i < parts.size(); ++i)
        for (auto& [key, row] : parts[i].next_action)
            for (auto& [a, q] : row) rows[key.first][a] += weights[i] * q;
    for (auto& [s, row] : rows)
        for (auto it = row.begin(); it != row.end();)
            it = sgn(it->second) == 0 ? row.erase(it) : std::next(it);
    return memoryless_machine(model, rows);
}

struct SwitchCase {
    std::set<StateId> trigger;
    StrategyMachine inner;
};

// Product-memory switching machine: behaves as `outer` until the play acts from
// a state in some case's trigger set, then permanently as that case's inner
// machine (entered through its initial distribution). Earlier cases take
// precedence on overlapping triggers.
inline StrategyMachine compose_switching(const Memdp& model, const StrategyMachine& outer,
                                         const std::vector<SwitchCase>& cases) {
    StrategyMachine sm;
    std::vector<int> case_base;
    for (auto& name : outer.memory_names) sm.memory_names.push_back("o." + name);
    for (size_t c = 0; c < cases.size(); ++c) {
        case_base.push_back(sm.memories());
        for (auto& name : cases[c].inner.memory_names)
            sm.memory_names.push_back("c" + std::to_string(c) + "." + name);
    }
    sm.init = outer.init;

    auto case_of = [&](StateId s) -> int {
        for (size_t c = 0; c < cases.size(); ++c)
            if (cases[c].trigger.count(s)) return static_cast<int>(c);
        return -1;
    };

    for (StateId s = 0; s < model.n(); ++s) {
        int c = case_of(s);
        for (MemoryId m = 0; m < outer.memories(); ++m) {
            if (c < 0) {
                auto it = outer.next_action.find({s, m});
                if (it == outer.next_action.end()) continue;
                sm.next_action[{s, m}] = it->second;
                for (auto& [a, q] : it->second)
                    sm.update[{a, s, m}] = outer.update_row(a, s, m);
            } else {
                // First triggered step: actions drawn through the inner initial
                // distribution; the update is the Bayesian posterior over the
                // inner memory reached.
                const StrategyMachine& in = cases[c].inner;
                std::map<ActionId, Rat> row;
                std::map<ActionId, std::map<MemoryId, Rat>> post;
                for (auto& [m0, w] : in.init) {
                    auto rit = in.next_action.find({s, m0});
                    if (rit == in.next_action.end()) continue;
                    for (auto& [a, q] : rit->second) {
                        row[a] += w * q;
                        for (auto& [m2, u] : in.update_row(a, s, m0))
                            post[a][m2] += w * q * u;
                    }
                }
                if (row.empty()) continue;
                sm.next_action[{s, m}] = row;
                for (auto& [a, q] : row) {
                    std::map<MemoryId, Rat> norm;
                    for (auto& [m2, mass] : post[a])
                        if (sgn(mass) > 0) norm[case_base[c] + m2] = mass / q;
                    sm.update[{a, s, m}] = std::move(norm);
                }
            }
        }
    }
    // Inside a case, play the inner machine unchanged.
    for (size_t c = 0; c < cases.size(); ++c) {
        const StrategyMachine& in = cases[c].inner;
        for (auto& [key, row] : in.next_action) {
            auto [s, m0] = key;
            sm.next_action[{s, case_base[c] + m0}] = row;
            for (auto& [a, q] : row) {
                std::map<MemoryId, Rat> up;
                for (auto& [m2, u] : in.update_row(a, s, m0)) up[case_base[c] + m2] = u;
                sm.update[{a, s, case_base[c] + m0}] = std::move(up);
            }
        }
    }
    return sm;
}

}  // namespace memdp
