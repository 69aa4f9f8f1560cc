#pragma once

#include <array>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "memdp/mdp_analysis.hpp"
#include "memdp/model.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

// Single MDP whose transition function mixes both environments uniformly
// over the union of their supports.
inline Mdp union_mdp(const Memdp& m) {
    Mdp u;
    u.state_names = m.state_names;
    u.action_names = m.action_names;
    u.enabled = m.enabled;
    for (StateId s = 0; s < m.n(); ++s) {
        for (ActionId a : m.enabled[s]) {
            std::set<StateId> supp;
            for (int env = 1; env <= 2; ++env)
                for (auto& [t, q] : m.dist(env, s, a).p) supp.insert(t);
            Distribution d;
            Rat w = rat(1, (long)supp.size());
            for (StateId t : supp) d.add(t, w);
            u.delta[{s, a}] = std::move(d);
        }
    }
    return u;
}

// Rewires every target state (reachability) or unsafe state (safety) to a
// self-loop in both environments. Parity models come back unchanged.
inline std::pair<Memdp, Objective> absorb_objective_states(const Memdp& m,
                                                           const Objective& phi) {
    Memdp out = m;
    if (phi.kind == ObjectiveKind::Parity) return {std::move(out), phi};
    std::set<StateId> pin;
    if (phi.kind == ObjectiveKind::Reach) {
        pin = phi.states;
    } else {
        for (StateId s = 0; s < m.n(); ++s)
            if (!phi.states.count(s)) pin.insert(s);
    }
    for (StateId s : pin) {
        for (ActionId a : out.enabled[s]) {
            out.delta[0][{s, a}] = point_dist(s);
            out.delta[1][{s, a}] = point_dist(s);
        }
    }
    return {std::move(out), phi};
}

struct RevealResult {
    Memdp model;
    Objective phi;
    // Absorbing sinks created per environment; -1 when no edge fed them.
    std::array<StateId, 2> top{-1, -1};
    std::array<StateId, 2> bot{-1, -1};
    // Optimal per-environment values of the input model, used for the split.
    std::array<std::vector<Rat>, 2> values;
};

// Splits every environment-revealing edge into a winning and a losing sink
// according to the optimal value of the landing state in the revealed
// environment. The output carries a revealed annotation on the sinks and
// satisfies the revealed-form validation rules. Expects objective states to
// be absorbing already (see absorb_objective_states). Any annotation on the
// input is ignored: the model is treated as fully unrevealed.
inline RevealResult to_revealed_form(const Memdp& m, const Objective& phi) {
    RevealResult rr;
    for (int i = 0; i < 2; ++i) {
        auto vr = optimal_value(env_mdp(m, i + 1), phi);
        rr.values[i] = std::move(vr.value);
    }

    Memdp out;
    out.state_names = m.state_names;
    out.action_names = m.action_names;
    out.enabled = m.enabled;
    ActionId loop_a = 0;

    auto sink = [&](std::array<StateId, 2>& slot, int i, const char* stem) {
        if (slot[i] >= 0) return slot[i];
        StateId s = (StateId)out.state_names.size();
        out.state_names.push_back(std::string("__") + stem + "_" +
                                  std::to_string(i + 1) + "__");
        out.enabled.push_back({loop_a});
        out.delta[0][{s, loop_a}] = point_dist(s);
        out.delta[1][{s, loop_a}] = point_dist(s);
        slot[i] = s;
        return s;
    };

    for (StateId s = 0; s < m.n(); ++s) {
        for (ActionId a : m.enabled[s]) {
            for (int e = 0; e < 2; ++e) {
                const Distribution& mine = m.dist(e + 1, s, a);
                const Distribution& other = m.dist(2 - e, s, a);
                Distribution d;
                Rat to_top = 0, to_bot = 0;
                for (auto& [t, q] : mine.p) {
                    if (is_zero(other.at(t))) {
                        Rat v = rr.values[e][t];
                        to_top += q * v;
                        to_bot += q * (1 - v);
                    } else {
                        d.add(t, q);
                    }
                }
                if (!is_zero(to_top)) d.add(sink(rr.top, e, "top"), to_top);
                if (!is_zero(to_bot)) d.add(sink(rr.bot, e, "bot"), to_bot);
                out.delta[e][{s, a}] = std::move(d);
            }
        }
    }

    out.revealed.assign(out.n(), 0);
    for (int i = 0; i < 2; ++i) {
        if (rr.top[i] >= 0) out.revealed[rr.top[i]] = i + 1;
        if (rr.bot[i] >= 0) out.revealed[rr.bot[i]] = i + 1;
    }

    Objective phi2 = phi;
    switch (phi.kind) {
        case ObjectiveKind::Reach:
            for (int i = 0; i < 2; ++i)
                if (rr.top[i] >= 0) phi2.states.insert(rr.top[i]);
            break;
        case ObjectiveKind::Safety:
            for (int i = 0; i < 2; ++i)
                if (rr.top[i] >= 0) phi2.states.insert(rr.top[i]);
            break;
        case ObjectiveKind::Parity:
            phi2.priority.resize(out.n(), 1);
            for (int i = 0; i < 2; ++i) {
                if (rr.top[i] >= 0) phi2.priority[rr.top[i]] = 0;
                if (rr.bot[i] >= 0) phi2.priority[rr.bot[i]] = 1;
            }
            break;
    }
    rr.model = std::move(out);
    rr.phi = std::move(phi2);
    return rr;
}

// Infers a revealed annotation for a model already shaped like the output of
// to_revealed_form: an absorbing state whose incoming edges are all revealing
// for the same environment is tagged with that environment. Everything else
// stays unrevealed. Throws if the result fails validation.
inline void annotate_revealed(Memdp& m) {
    std::vector<int> tag(m.n(), 0);
    for (StateId r = 0; r < m.n(); ++r) {
        if (!m.absorbing(r)) continue;
        std::set<int> labels;
        bool plain_in = false, any_in = false;
        for (StateId s = 0; s < m.n(); ++s) {
            if (s == r) continue;
            for (ActionId a : m.enabled[s]) {
                Rat q1 = m.dist(1, s, a).at(r), q2 = m.dist(2, s, a).at(r);
                if (is_zero(q1) && is_zero(q2)) continue;
                any_in = true;
                if (is_zero(q2)) labels.insert(1);
                else if (is_zero(q1)) labels.insert(2);
                else plain_in = true;
            }
        }
        if (any_in && !plain_in && labels.size() == 1) tag[r] = *labels.begin();
    }
    m.revealed = std::move(tag);
    auto bad = validate(m);
    if (!bad.empty()) throw ValidationError("annotate: " + bad.front());
}

// Revealed states from which the annotated environment is won almost surely.
inline std::array<std::set<StateId>, 2> revealed_winning(const Memdp& m,
                                                         const Objective& phi) {
    std::array<std::set<StateId>, 2> w;
    if (m.revealed.empty()) return w;
    for (int i = 0; i < 2; ++i) {
        auto [win, rows] = as_winning(env_mdp(m, i + 1), phi);
        (void)rows;
        for (StateId s : win)
            if (m.revealed[s] == i + 1) w[i].insert(s);
    }
    return w;
}

// Lifts a strategy for the revealed model back onto the original model. The
// machine follows the inner strategy on shared states; one step after taking
// an action whose edges were split it inspects where the play landed, and on
// a revealing landing it switches permanently to optimal memoryless play for
// the environment just revealed. Landing values then match the split masses
// exactly, so the lifted machine attains the same satisfaction probability
// in each environment as the inner strategy does on the revealed model.
inline StrategyMachine transport_strategy(const Memdp& m, const Objective& phi,
                                          const StrategyMachine& sm) {
    std::array<MemorylessRows, 2> opt;
    for (int i = 0; i < 2; ++i)
        opt[i] = optimal_value(env_mdp(m, i + 1), phi).rows;

    // 0/1/2 per (s,a,t): which environment an edge reveals, if any.
    auto reveal_of = [&](StateId s, ActionId a, StateId t) -> int {
        Rat q1 = m.dist(1, s, a).at(t), q2 = m.dist(2, s, a).at(t);
        if (!is_zero(q1) && is_zero(q2)) return 1;
        if (is_zero(q1) && !is_zero(q2)) return 2;
        return 0;
    };
    auto splitting = [&](StateId s, ActionId a) {
        for (int env = 1; env <= 2; ++env)
            for (auto& [t, q] : m.dist(env, s, a).p)
                if (reveal_of(s, a, t)) return true;
        return false;
    };

    StrategyMachine out;
    auto mem = [&](const std::string& name) {
        for (MemoryId i = 0; i < (int)out.memory_names.size(); ++i)
            if (out.memory_names[i] == name) return i;
        out.memory_names.push_back(name);
        return (MemoryId)(out.memory_names.size() - 1);
    };
    auto inner_name = [&](MemoryId im) { return "i|" + sm.memory_names[im]; };
    for (MemoryId im = 0; im < (MemoryId)sm.memory_names.size(); ++im)
        mem(inner_name(im));
    MemoryId o1 = mem("opt1"), o2 = mem("opt2");
    for (auto& [im, q] : sm.init) out.init[im] = q;

    struct Pending {
        MemoryId inner;
        StateId src;
        ActionId act;
        MemoryId id;
    };
    std::vector<Pending> pend;
    auto pend_mem = [&](MemoryId inner, StateId s, ActionId a) {
        std::string name = "w|" + sm.memory_names[inner] + "|" +
                           m.state_names[s] + "|" + m.action_names[a];
        size_t before = out.memory_names.size();
        MemoryId id = mem(name);
        if (out.memory_names.size() > before) pend.push_back({inner, s, a, id});
        return id;
    };

    // Plays memory `im` of the inner strategy at state `s`, writing the rows
    // under memory `om` of the lifted machine.
    auto emit_inner = [&](StateId s, MemoryId im, MemoryId om) {
        auto ait = sm.next_action.find({s, im});
        if (ait == sm.next_action.end())
            throw ValidationError("transport: inner strategy undefined at " +
                                  m.state_names[s]);
        out.next_action[{s, om}] = ait->second;
        for (auto& [a, q] : ait->second) {
            auto uit = sm.update.find({a, s, im});
            if (uit == sm.update.end())
                throw ValidationError("transport: inner update missing at " +
                                      m.state_names[s]);
            auto& urow = out.update[{a, s, om}];
            bool split = splitting(s, a);
            for (auto& [m2, u] : uit->second) {
                MemoryId nm = split ? pend_mem(m2, s, a) : m2;
                urow[nm] += u;
            }
        }
    };

    auto emit_opt = [&](StateId s, int i, MemoryId om) {
        MemoryId oi = i == 0 ? o1 : o2;
        auto it = opt[i].find(s);
        std::map<ActionId, Rat> row;
        if (it != opt[i].end() && !it->second.empty()) row = it->second;
        else row[m.enabled[s].front()] = 1;
        out.next_action[{s, om}] = row;
        for (auto& [a, q] : row) out.update[{a, s, om}][oi] = 1;
    };

    for (StateId s = 0; s < m.n(); ++s)
        for (MemoryId im = 0; im < (MemoryId)sm.memory_names.size(); ++im)
            if (sm.next_action.count({s, im})) emit_inner(s, im, im);

    // Pending memories are discovered while emitting rows; the worklist grows
    // as new (inner, source, action) triples appear.
    for (size_t k = 0; k < pend.size(); ++k) {
        Pending p = pend[k];
        std::set<StateId> landings;
        for (int env = 1; env <= 2; ++env)
            for (auto& [t, q] : m.dist(env, p.src, p.act).p)
                landings.insert(t);
        for (StateId t : landings) {
            int rv = reveal_of(p.src, p.act, t);
            if (rv) emit_opt(t, rv - 1, p.id);
            else emit_inner(t, p.inner, p.id);
        }
    }

    for (int i = 0; i < 2; ++i)
        for (StateId s = 0; s < m.n(); ++s) emit_opt(s, i, i == 0 ? o1 : o2);
    return out;
}

}  // namespace memdp
