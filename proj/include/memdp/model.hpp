#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "memdp/rational.hpp"

namespace memdp {

// States and actions are dense indices into name tables.
using StateId = int;
using ActionId = int;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SyntaxError : std::runtime_error {
    int line;
    SyntaxError(int line_, const std::string& reason)
        : std::runtime_error("line " + std::to_string(line_) + ": " + reason), line(line_) {}
};

// Finite probability distribution, exact. Zero-mass entries are never stored.
struct Distribution {
    std::map<StateId, Rat> p;

    void add(StateId t, const Rat& q) {
        if (sgn(q) < 0) throw ValidationError("negative probability");
        if (sgn(q) == 0) return;
        p[t] += q;
    }
    Rat mass() const {
        Rat s = 0;
        for (auto& [t, q] : p) s += q;
        return s;
    }
    Rat at(StateId t) const {
        auto it = p.find(t);
        return it == p.end() ? Rat(0) : it->second;
    }
    bool is_point_on(StateId t) const { return p.size() == 1 && p.begin()->first == t; }
    bool operator==(const Distribution&) const = default;
};

inline Distribution point_dist(StateId t) {
    Distribution d;
    d.add(t, 1);
    return d;
}

enum class ObjectiveKind { Reach, Safety, Parity };

struct Objective {
    ObjectiveKind kind = ObjectiveKind::Reach;
    std::set<StateId> states;       // target set (Reach) or safe set (Safety)
    std::vector<int> priority;      // total priority map (Parity)

    static Objective reach(std::set<StateId> t) { return {ObjectiveKind::Reach, std::move(t), {}}; }
    static Objective safety(std::set<StateId> s) { return {ObjectiveKind::Safety, std::move(s), {}}; }
    static Objective parity(std::vector<int> pr) { return {ObjectiveKind::Parity, {}, std::move(pr)}; }
    bool operator==(const Objective&) const = default;
};

// Single-environment MDP. Also used for the union MDP and induced sub-MDPs.
struct Mdp {
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<std::vector<ActionId>> enabled;
    std::map<std::pair<StateId, ActionId>, Distribution> delta;

    int n() const { return static_cast<int>(state_names.size()); }
    const Distribution& dist(StateId s, ActionId a) const {
        auto it = delta.find({s, a});
        if (it == delta.end()) throw std::out_of_range("no distribution for state/action");
        return it->second;
    }
    bool has(StateId s, ActionId a) const { return delta.count({s, a}) > 0; }
    bool operator==(const Mdp&) const = default;
};

// Two-environment MDP with shared states, actions, and enabled sets. Environments
// are indexed 1 and 2 in every public signature.
struct Memdp {
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<std::vector<ActionId>> enabled;
    std::array<std::map<std::pair<StateId, ActionId>, Distribution>, 2> delta;
    // Optional annotation: 0 = unrevealed, i = state of R_i.
    std::vector<int> revealed;

    int n() const { return static_cast<int>(state_names.size()); }
    const Distribution& dist(int env, StateId s, ActionId a) const {
        auto it = delta[env - 1].find({s, a});
        if (it == delta[env - 1].end()) throw std::out_of_range("no distribution for state/action");
        return it->second;
    }
    bool has(int env, StateId s, ActionId a) const { return delta[env - 1].count({s, a}) > 0; }

    StateId state(const std::string& name) const {
        for (int i = 0; i < n(); ++i)
            if (state_names[i] == name) return i;
        throw std::out_of_range("unknown state " + name);
    }
    ActionId action(const std::string& name) const {
        for (size_t i = 0; i < action_names.size(); ++i)
            if (action_names[i] == name) return static_cast<ActionId>(i);
        throw std::out_of_range("unknown action " + name);
    }

    bool absorbing(StateId s) const {
        for (ActionId a : enabled[s])
            for (int e = 0; e < 2; ++e) {
                auto it = delta[e].find({s, a});
                if (it == delta[e].end() || !it->second.is_point_on(s)) return false;
            }
        return !enabled[s].empty();
    }

    // True when delta_i(s,a,t) > 0 and delta_{3-i}(s,a,t) = 0.
    bool revealing_edge(int env, StateId s, ActionId a, StateId t) const {
        return sgn(dist(env, s, a).at(t)) > 0 && sgn(dist(3 - env, s, a).at(t)) == 0;
    }
    bool operator==(const Memdp&) const = default;
};

struct ThresholdQuery {
    StateId start = 0;
    Rat alpha1, alpha2;
    Rat epsilon;
    long memory = 1;
};

// Extract one environment as a plain MDP.
inline Mdp env_mdp(const Memdp& m, int env) {
    Mdp out;
    out.state_names = m.state_names;
    out.action_names = m.action_names;
    out.enabled = m.enabled;
    out.delta = m.delta[env - 1];
    return out;
}

// Structural validity. Returns human-readable violations; empty means valid.
inline std::vector<std::string> validate(const Memdp& m) {
    std::vector<std::string> bad;
    std::set<std::string> seen;
    for (auto& s : m.state_names)
        if (!seen.insert(s).second) bad.push_back("duplicate state name " + s);
    seen.clear();
    for (auto& a : m.action_names)
        if (!seen.insert(a).second) bad.push_back("duplicate action name " + a);
    if (m.state_names.empty()) bad.push_back("no states");
    if (static_cast<int>(m.enabled.size()) != m.n()) {
        bad.push_back("enabled table size mismatch");
        return bad;
    }
    for (int s = 0; s < m.n(); ++s) {
        if (m.enabled[s].empty()) bad.push_back("empty enabled set at " + m.state_names[s]);
        for (ActionId a : m.enabled[s]) {
            for (int e = 0; e < 2; ++e) {
                auto it = m.delta[e].find({s, a});
                if (it == m.delta[e].end()) {
                    bad.push_back("missing environment " + std::to_string(e + 1) +
                                  " distribution at " + m.state_names[s]);
                    continue;
                }
                if (it->second.mass() != 1)
                    bad.push_back("distribution mass " + rat_str(it->second.mass()) + " at " +
                                  m.state_names[s] + "/" + m.action_names[a] +
                                  " env " + std::to_string(e + 1));
                for (auto& [t, q] : it->second.p)
                    if (t < 0 || t >= m.n()) bad.push_back("transition to unknown state index");
            }
        }
        for (int e = 0; e < 2; ++e)
            for (auto& [key, d] : m.delta[e])
                if (key.first == s &&
                    !std::binary_search(m.enabled[s].begin(), m.enabled[s].end(), key.second))
                    bad.push_back("distribution for disabled action at " + m.state_names[s]);
    }
    if (!m.revealed.empty()) {
        if (static_cast<int>(m.revealed.size()) != m.n()) {
            bad.push_back("revealed annotation size mismatch");
            return bad;
        }
        for (int s = 0; s < m.n(); ++s) {
            int r = m.revealed[s];
            if (r < 0 || r > 2) bad.push_back("revealed annotation out of range");
            if (r != 0 && !m.absorbing(s))
                bad.push_back("revealed state " + m.state_names[s] + " not absorbing");
        }
        // Single-environment edges must reveal that environment, and edges into a
        // revealed region must be single-environment. Missing rows were already
        // reported above and are treated as empty here.
        for (int s = 0; s < m.n(); ++s) {
            if (m.revealed[s] != 0) continue;
            for (ActionId a : m.enabled[s]) {
                std::set<StateId> support;
                std::array<const Distribution*, 2> d{};
                for (int e = 0; e < 2; ++e) {
                    auto it = m.delta[e].find({s, a});
                    d[e] = it == m.delta[e].end() ? nullptr : &it->second;
                    if (d[e])
                        for (auto& [t, q] : d[e]->p) support.insert(t);
                }
                for (StateId t : support) {
                    if (t < 0 || t >= m.n()) continue;
                    for (int i = 1; i <= 2; ++i) {
                        Rat qi = d[i - 1] ? d[i - 1]->at(t) : Rat(0);
                        Rat qo = d[2 - i] ? d[2 - i]->at(t) : Rat(0);
                        bool rev = sgn(qi) > 0 && sgn(qo) == 0;
                        if (rev && m.revealed[t] != i)
                            bad.push_back(std::to_string(i) + "-revealing edge from " +
                                          m.state_names[s] + " lands outside R_" +
                                          std::to_string(i));
                        if (!rev && m.revealed[t] == i && sgn(qi) > 0)
                            bad.push_back("non-revealing edge from " + m.state_names[s] +
                                          " into R_" + std::to_string(i));
                    }
                }
            }
        }
    }
    return bad;
}

inline std::vector<std::string> validate(const Memdp& m, const Objective& phi) {
    auto bad = validate(m);
    switch (phi.kind) {
        case ObjectiveKind::Reach:
        case ObjectiveKind::Safety:
            for (StateId s : phi.states)
                if (s < 0 || s >= m.n()) bad.push_back("objective names unknown state");
            break;
        case ObjectiveKind::Parity:
            if (static_cast<int>(phi.priority.size()) != m.n())
                bad.push_back("priority map not total");
            for (int p : phi.priority)
                if (p < 0) bad.push_back("negative priority");
            break;
    }
    return bad;
}

// Incremental construction helper used by the parser, the transformations, and tests.
struct MemdpBuilder {
    Memdp m;
    std::map<std::string, StateId> sidx;
    std::map<std::string, ActionId> aidx;

    StateId state(const std::string& name) {
        auto it = sidx.find(name);
        if (it != sidx.end()) return it->second;
        StateId id = m.n();
        m.state_names.push_back(name);
        m.enabled.emplace_back();
        sidx[name] = id;
        return id;
    }
    ActionId action(const std::string& name) {
        auto it = aidx.find(name);
        if (it != aidx.end()) return it->second;
        ActionId id = static_cast<ActionId>(m.action_names.size());
        m.action_names.push_back(name);
        aidx[name] = id;
        return id;
    }
    void edge(int env, const std::string& s, const std::string& a, const std::string& t,
              const Rat& q) {
        StateId si = state(s);
        ActionId ai = action(a);
        StateId ti = state(t);
        edge_ids(env, si, ai, ti, q);
    }
    void edge_ids(int env, StateId s, ActionId a, StateId t, const Rat& q) {
        m.delta[env - 1][{s, a}].add(t, q);
    }
    void loop(const std::string& s, const std::string& a = "a") {
        edge(1, s, a, s, 1);
        edge(2, s, a, s, 1);
    }
    // Derives enabled sets from the transition table; requires both environments
    // to define the same state/action pairs.
    Memdp finish() {
        std::set<std::pair<StateId, ActionId>> keys;
        for (int e = 0; e < 2; ++e)
            for (auto& [key, d] : m.delta[e]) keys.insert(key);
        for (int s = 0; s < m.n(); ++s) m.enabled[s].clear();
        for (auto& [s, a] : keys) m.enabled[s].push_back(a);
        for (auto& acts : m.enabled) std::sort(acts.begin(), acts.end());
        return m;
    }
};

}  // namespace memdp
