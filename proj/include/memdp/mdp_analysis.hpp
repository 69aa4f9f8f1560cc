#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "memdp/chain.hpp"
#include "memdp/graph.hpp"
#include "memdp/model.hpp"

namespace memdp {

// Restriction of an MDP to a state subset with per-state allowed actions.
struct SubView {
    std::vector<char> alive;
    std::map<StateId, std::set<ActionId>> acts;

    static SubView full(const Mdp& m) {
        SubView v;
        v.alive.assign(m.n(), 1);
        for (StateId s = 0; s < m.n(); ++s)
            v.acts[s] = std::set<ActionId>(m.enabled[s].begin(), m.enabled[s].end());
        return v;
    }
    bool has(StateId s) const { return s >= 0 && s < (int)alive.size() && alive[s]; }
    std::set<StateId> states() const {
        std::set<StateId> out;
        for (StateId s = 0; s < (int)alive.size(); ++s)
            if (alive[s]) out.insert(s);
        return out;
    }
};

struct EndComponent {
    std::set<StateId> states;
    std::map<StateId, std::set<ActionId>> actions;
};

using MemorylessRows = std::map<StateId, std::map<ActionId, Rat>>;

namespace detail {
inline SubView view_or_full(const Mdp& m, const SubView* view) {
    return view ? *view : SubView::full(m);
}
inline bool supp_inside(const Mdp& m, StateId s, ActionId a, const std::vector<char>& alive) {
    for (auto& [t, q] : m.dist(s, a).p)
        if (!alive[t]) return false;
    return true;
}
}  // namespace detail

// Maximal end components of the (restricted) MDP: maximal state/action pairs
// that are closed and strongly connected under their own edges.
inline std::vector<EndComponent> mec_decompose(const Mdp& m, const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    const int n = m.n();
    bool changed = true;
    while (changed) {
        changed = false;
        // Drop actions leaving the alive set, then states with no actions.
        for (StateId s = 0; s < n; ++s) {
            if (!v.alive[s]) continue;
            auto& acts = v.acts[s];
            for (auto it = acts.begin(); it != acts.end();) {
                if (!detail::supp_inside(m, s, *it, v.alive)) {
                    it = acts.erase(it);
                    changed = true;
                } else {
                    ++it;
                }
            }
            if (acts.empty()) {
                v.alive[s] = 0;
                changed = true;
            }
        }
        if (changed) continue;
        // Remove actions whose support leaves the state's component.
        std::vector<std::vector<int>> succ(n);
        for (StateId s = 0; s < n; ++s)
            if (v.alive[s])
                for (ActionId a : v.acts[s])
                    for (auto& [t, q] : m.dist(s, a).p) succ[s].push_back(t);
        SccResult scc = scc_decompose(n, succ);
        for (StateId s = 0; s < n; ++s) {
            if (!v.alive[s]) continue;
            auto& acts = v.acts[s];
            for (auto it = acts.begin(); it != acts.end();) {
                bool stays = true;
                for (auto& [t, q] : m.dist(s, *it).p) stays &= scc.comp[t] == scc.comp[s];
                if (!stays) {
                    it = acts.erase(it);
                    changed = true;
                } else {
                    ++it;
                }
            }
            if (acts.empty()) {
                v.alive[s] = 0;
                changed = true;
            }
        }
    }
    std::vector<std::vector<int>> succ(n);
    for (StateId s = 0; s < n; ++s)
        if (v.alive[s])
            for (ActionId a : v.acts[s])
                for (auto& [t, q] : m.dist(s, a).p) succ[s].push_back(t);
    SccResult scc = scc_decompose(n, succ);
    std::map<int, EndComponent> by_comp;
    for (StateId s = 0; s < n; ++s) {
        if (!v.alive[s]) continue;
        auto& ec = by_comp[scc.comp[s]];
        ec.states.insert(s);
        ec.actions[s] = v.acts[s];
    }
    std::vector<EndComponent> out;
    for (auto& [cid, ec] : by_comp) out.push_back(std::move(ec));
    return out;
}

// States with a strategy reaching T almost surely, together with an action for
// each winning non-target state that makes progress while staying inside the
// winning region.
inline std::pair<std::set<StateId>, std::map<StateId, ActionId>> prob1e_reach(
    const Mdp& m, const std::set<StateId>& T, const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    const int n = m.n();
    std::vector<char> X(n, 0);
    for (StateId s = 0; s < n; ++s) X[s] = v.alive[s];
    std::map<StateId, ActionId> progress;
    while (true) {
        // Grow Y from T: an action must stay in X and make progress into Y.
        std::vector<char> Y(n, 0);
        std::map<StateId, ActionId> round;
        for (StateId t : T)
            if (v.has(t) && X[t]) Y[t] = 1;
        bool grew = true;
        while (grew) {
            grew = false;
            for (StateId s = 0; s < n; ++s) {
                if (!v.alive[s] || !X[s] || Y[s]) continue;
                for (ActionId a : v.acts.at(s)) {
                    bool inside = true, hits = false;
                    for (auto& [t, q] : m.dist(s, a).p) {
                        inside &= static_cast<bool>(X[t]);
                        hits |= static_cast<bool>(Y[t]);
                    }
                    if (inside && hits) {
                        Y[s] = 1;
                        round[s] = a;
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (Y == X) {
            progress = std::move(round);
            break;
        }
        X = std::move(Y);
    }
    std::set<StateId> out;
    for (StateId s = 0; s < n; ++s)
        if (X[s]) out.insert(s);
    return {out, progress};
}

// Largest sub-MDP inside `safe` whose actions never leave it: the states where
// the controller can surely stay in `safe` forever, with the staying actions.
inline SubView sure_safe_region(const Mdp& m, const std::set<StateId>& safe,
                                const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    for (StateId s = 0; s < m.n(); ++s)
        if (v.alive[s] && !safe.count(s)) v.alive[s] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateId s = 0; s < m.n(); ++s) {
            if (!v.alive[s]) continue;
            auto& acts = v.acts[s];
            for (auto it = acts.begin(); it != acts.end();) {
                if (!detail::supp_inside(m, s, *it, v.alive)) {
                    it = acts.erase(it);
                    changed = true;
                } else {
                    ++it;
                }
            }
            if (acts.empty()) {
                v.alive[s] = 0;
                changed = true;
            }
        }
    }
    for (StateId s = 0; s < m.n(); ++s)
        if (!v.alive[s]) v.acts.erase(s);
    return v;
}

struct ValueResult {
    std::vector<Rat> value;
    MemorylessRows rows;  // memoryless optimal rows (total on the alive region)
};

namespace detail {

// Pure-policy evaluation helper: chain over an explicit node set with known
// boundary values folded into two absorbing nodes.
struct Quotient {
    // Node 0 = value-one sink, node 1 = value-zero sink, classes follow.
    struct QAction {
        StateId s;
        ActionId a;
        std::map<int, Rat> mass;  // quotient successor masses
    };
    std::vector<std::vector<QAction>> acts;  // per class
    std::vector<int> class_of;               // state -> class id or -1
    std::vector<std::vector<int>> members;   // class id -> states
};

inline std::vector<Rat> eval_quotient(const Quotient& q, const std::vector<int>& choice) {
    ExplicitChain c;
    const int k = static_cast<int>(q.acts.size());
    c.rows.resize(k + 2);
    c.state_of.assign(k + 2, -1);
    c.mem_of.assign(k + 2, 0);
    c.rows[0] = {{0, Rat(1)}};
    c.rows[1] = {{1, Rat(1)}};
    for (int i = 0; i < k; ++i) {
        const auto& act = q.acts[i][choice[i]];
        for (auto& [j, mass] : act.mass) c.rows[2 + i][j] += mass;
    }
    std::vector<char> tgt(k + 2, 0);
    tgt[0] = 1;
    c.initial[0] = 1;
    return chain_reach_probs(c, tgt);
}

// Routes every class state toward the exit state chosen in that class, using
// only actions that stay inside the class.
inline void route_inside_class(const Mdp& m, const std::vector<int>& members, StateId exit_state,
                               const std::map<StateId, std::set<ActionId>>& internal,
                               std::map<StateId, ActionId>& choice) {
    std::set<StateId> cls(members.begin(), members.end());
    std::map<StateId, int> dist;
    dist[exit_state] = 0;
    bool grew = true;
    while (grew) {
        grew = false;
        for (StateId s : members) {
            if (dist.count(s)) continue;
            auto it = internal.find(s);
            if (it == internal.end()) continue;
            for (ActionId a : it->second) {
                bool closer = false;
                for (auto& [t, p] : m.dist(s, a).p) closer |= dist.count(t) > 0;
                if (closer) {
                    dist[s] = 1;
                    choice[s] = a;
                    grew = true;
                    break;
                }
            }
        }
    }
}

}  // namespace detail

// Exact optimal reachability probabilities (maximizing), with a pure
// memoryless optimal policy. End components outside the sure and impossible
// regions are collapsed so that every policy of the collapsed model is proper
// and policy iteration terminates on exact rationals.
inline ValueResult max_reach_values(const Mdp& m, const std::set<StateId>& T,
                                    const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    const int n = m.n();
    ValueResult out;
    out.value.assign(n, 0);

    // Value-1 region (almost-sure reach) and value-0 region (cannot reach).
    auto [S1, progress] = prob1e_reach(m, T, &v);
    std::vector<std::vector<int>> succ(n);
    for (StateId s = 0; s < n; ++s)
        if (v.alive[s])
            for (ActionId a : v.acts.at(s))
                for (auto& [t, q] : m.dist(s, a).p)
                    if (v.alive[t]) succ[s].push_back(t);
    std::vector<int> tvec;
    for (StateId t : T)
        if (v.has(t)) tvec.push_back(t);
    std::vector<char> reach_t = can_reach(n, succ, tvec);

    for (StateId s : S1) out.value[s] = 1;
    for (auto& [s, a] : progress) out.rows[s] = {{a, Rat(1)}};
    for (StateId t : T)
        if (v.has(t) && !v.acts.at(t).empty())
            out.rows[t] = {{*v.acts.at(t).begin(), Rat(1)}};

    std::vector<char> middle(n, 0);
    std::vector<int> middle_list;
    for (StateId s = 0; s < n; ++s)
        if (v.alive[s] && reach_t[s] && !S1.count(s)) {
            middle[s] = 1;
            middle_list.push_back(s);
        }
    for (StateId s = 0; s < n; ++s)
        if (v.alive[s] && !middle[s] && !out.rows.count(s) && !v.acts.at(s).empty())
            out.rows[s] = {{*v.acts.at(s).begin(), Rat(1)}};
    if (middle_list.empty()) return out;

    // Collapse end components of the middle region.
    SubView mid = v;
    for (StateId s = 0; s < n; ++s)
        if (!middle[s]) {
            mid.alive[s] = 0;
            mid.acts.erase(s);
        }
    auto mecs = mec_decompose(m, &mid);

    detail::Quotient q;
    q.class_of.assign(n, -1);
    for (auto& ec : mecs) {
        int cid = static_cast<int>(q.members.size());
        q.members.emplace_back(ec.states.begin(), ec.states.end());
        for (StateId s : ec.states) q.class_of[s] = cid;
    }
    for (StateId s : middle_list)
        if (q.class_of[s] < 0) {
            q.class_of[s] = static_cast<int>(q.members.size());
            q.members.push_back({s});
        }
    q.acts.resize(q.members.size());
    std::vector<std::map<StateId, std::set<ActionId>>> internal(q.members.size());
    for (StateId s : middle_list) {
        int cid = q.class_of[s];
        for (ActionId a : v.acts.at(s)) {
            // Actions staying inside the own collapsed component move within a
            // class and vanish in the quotient; a singleton class never has
            // one (a pure self-loop would have formed a component).
            bool is_internal = true;
            for (auto& [t, p] : m.dist(s, a).p)
                is_internal &= middle[t] && q.class_of[t] == cid;
            if (is_internal) {
                internal[cid][s].insert(a);
                continue;
            }
            detail::Quotient::QAction qa;
            qa.s = s;
            qa.a = a;
            for (auto& [t, p] : m.dist(s, a).p) {
                if (middle[t])
                    qa.mass[2 + q.class_of[t]] += p;
                else if (out.value[t] == 1)
                    qa.mass[0] += p;
                else if (sgn(out.value[t]) == 0)
                    qa.mass[1] += p;
                else
                    throw std::logic_error("boundary value not 0/1");
            }
            q.acts[cid].push_back(std::move(qa));
        }
    }
    for (auto& acts : q.acts)
        if (acts.empty()) throw std::logic_error("quotient class without actions");

    // Policy iteration with exact evaluation.
    const int k = static_cast<int>(q.acts.size());
    std::vector<int> choice(k, 0);
    std::vector<Rat> qv;
    while (true) {
        qv = detail::eval_quotient(q, choice);
        bool improved = false;
        for (int i = 0; i < k; ++i) {
            Rat best = qv[2 + i];
            int arg = -1;
            for (size_t j = 0; j < q.acts[i].size(); ++j) {
                Rat val = 0;
                for (auto& [w, mass] : q.acts[i][j].mass) val += mass * qv[w];
                if (val > best) {
                    best = val;
                    arg = static_cast<int>(j);
                }
            }
            if (arg >= 0) {
                choice[i] = arg;
                improved = true;
            }
        }
        if (!improved) break;
    }
    for (StateId s : middle_list) out.value[s] = qv[2 + q.class_of[s]];
    std::map<StateId, ActionId> mid_choice;
    for (int i = 0; i < k; ++i) {
        const auto& act = q.acts[i][choice[i]];
        mid_choice[act.s] = act.a;
        if (q.members[i].size() > 1)
            detail::route_inside_class(m, q.members[i], act.s, internal[i], mid_choice);
    }
    for (auto& [s, a] : mid_choice) out.rows[s] = {{a, Rat(1)}};
    return out;
}

// Exact minimal reachability probabilities with a pure memoryless minimizing
// policy. The sure-avoidance region is removed first; afterwards every policy
// reaches an absorbing boundary, so iteration again terminates exactly.
inline ValueResult min_reach_values(const Mdp& m, const std::set<StateId>& T,
                                    const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    const int n = m.n();
    ValueResult out;
    out.value.assign(n, 0);

    std::set<StateId> not_t;
    for (StateId s = 0; s < n; ++s)
        if (v.alive[s] && !T.count(s)) not_t.insert(s);
    SubView avoid = sure_safe_region(m, not_t, &v);
    for (StateId s = 0; s < n; ++s)
        if (avoid.alive[s]) out.rows[s] = {{*avoid.acts.at(s).begin(), Rat(1)}};
    for (StateId t : T)
        if (v.has(t)) {
            out.value[t] = 1;
            if (!v.acts.at(t).empty()) out.rows[t] = {{*v.acts.at(t).begin(), Rat(1)}};
        }

    std::vector<int> rest;
    for (StateId s = 0; s < n; ++s)
        if (v.alive[s] && !avoid.alive[s] && !T.count(s)) rest.push_back(s);
    if (rest.empty()) return out;

    std::map<StateId, int> idx;
    for (StateId s : rest) idx[s] = static_cast<int>(idx.size());
    std::map<StateId, ActionId> choice;
    for (StateId s : rest) choice[s] = *v.acts.at(s).begin();

    auto eval = [&]() {
        ExplicitChain c;
        const int k = static_cast<int>(rest.size());
        c.rows.resize(k + 2);
        c.state_of.assign(k + 2, -1);
        c.mem_of.assign(k + 2, 0);
        c.rows[0] = {{0, Rat(1)}};
        c.rows[1] = {{1, Rat(1)}};
        for (StateId s : rest) {
            auto& row = c.rows[2 + idx[s]];
            for (auto& [t, p] : m.dist(s, choice[s]).p) {
                if (idx.count(t))
                    row[2 + idx[t]] += p;
                else if (T.count(t))
                    row[0] += p;
                else
                    row[1] += p;  // sure-avoidance region
            }
        }
        c.initial[0] = 1;
        std::vector<char> tgt(k + 2, 0);
        tgt[0] = 1;
        return chain_reach_probs(c, tgt);
    };

    std::vector<Rat> qv;
    while (true) {
        qv = eval();
        bool improved = false;
        for (StateId s : rest) {
            Rat best = qv[2 + idx[s]];
            ActionId arg = -1;
            for (ActionId a : v.acts.at(s)) {
                Rat val = 0;
                for (auto& [t, p] : m.dist(s, a).p) {
                    if (idx.count(t))
                        val += p * qv[2 + idx[t]];
                    else if (T.count(t))
                        val += p;
                }
                if (val < best) {
                    best = val;
                    arg = a;
                }
            }
            if (arg >= 0) {
                choice[s] = arg;
                improved = true;
            }
        }
        if (!improved) break;
    }
    for (StateId s : rest) {
        out.value[s] = qv[2 + idx[s]];
        out.rows[s] = {{choice[s], Rat(1)}};
    }
    return out;
}

// Winning memoryless rows inside an end component for the parity objective:
// stay on a sub-component avoiding priorities below some even value that the
// sub-component actually visits. Returns rows covering exactly the component's
// states, or nothing if the component is losing.
inline std::optional<MemorylessRows> ec_parity_winning(const Mdp& m, const EndComponent& D,
                                                       const std::vector<int>& priority) {
    std::set<int> evens;
    for (StateId s : D.states)
        if (priority[s] % 2 == 0) evens.insert(priority[s]);
    for (int e : evens) {
        SubView sub;
        sub.alive.assign(m.n(), 0);
        for (StateId s : D.states)
            if (priority[s] >= e) {
                sub.alive[s] = 1;
                sub.acts[s] = D.actions.at(s);
            }
        for (auto& ec : mec_decompose(m, &sub)) {
            bool hits = false;
            for (StateId s : ec.states) hits |= priority[s] == e;
            if (!hits) continue;
            MemorylessRows rows;
            for (StateId s : ec.states) {
                auto& row = rows[s];
                for (ActionId a : ec.actions.at(s))
                    row[a] = rat(1, static_cast<long>(ec.actions.at(s).size()));
            }
            // Route the rest of D into the winning sub-component.
            SubView dview;
            dview.alive.assign(m.n(), 0);
            for (StateId s : D.states) {
                dview.alive[s] = 1;
                dview.acts[s] = D.actions.at(s);
            }
            auto [win, progress] = prob1e_reach(m, ec.states, &dview);
            for (StateId s : D.states) {
                if (rows.count(s)) continue;
                auto it = progress.find(s);
                if (it == progress.end()) return std::nullopt;  // cannot happen inside an EC
                rows[s] = {{it->second, Rat(1)}};
            }
            return rows;
        }
    }
    return std::nullopt;
}

// Maximal end components winning the parity objective, each with in-component
// winning rows.
inline std::vector<std::pair<EndComponent, MemorylessRows>> winning_mecs(
    const Mdp& m, const std::vector<int>& priority, const SubView* view = nullptr) {
    std::vector<std::pair<EndComponent, MemorylessRows>> out;
    for (auto& ec : mec_decompose(m, view))
        if (auto rows = ec_parity_winning(m, ec, priority)) out.push_back({ec, *rows});
    return out;
}

// Almost-sure winning region with witnessing memoryless rows.
inline std::pair<std::set<StateId>, MemorylessRows> as_winning(const Mdp& m, const Objective& phi,
                                                               const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    switch (phi.kind) {
        case ObjectiveKind::Reach: {
            auto [win, progress] = prob1e_reach(m, phi.states, &v);
            MemorylessRows rows;
            for (auto& [s, a] : progress) rows[s] = {{a, Rat(1)}};
            for (StateId t : phi.states)
                if (win.count(t) && v.has(t) && !v.acts.at(t).empty())
                    rows[t] = {{*v.acts.at(t).begin(), Rat(1)}};
            return {win, rows};
        }
        case ObjectiveKind::Safety: {
            SubView region = sure_safe_region(m, phi.states, &v);
            MemorylessRows rows;
            for (StateId s = 0; s < m.n(); ++s)
                if (region.alive[s]) {
                    auto& row = rows[s];
                    for (ActionId a : region.acts.at(s))
                        row[a] = rat(1, static_cast<long>(region.acts.at(s).size()));
                }
            return {region.states(), rows};
        }
        case ObjectiveKind::Parity: {
            std::set<StateId> W;
            MemorylessRows rows;
            for (auto& [ec, ecrows] : winning_mecs(m, phi.priority, &v)) {
                for (StateId s : ec.states) W.insert(s);
                for (auto& [s, row] : ecrows) rows[s] = row;
            }
            auto [win, progress] = prob1e_reach(m, W, &v);
            for (auto& [s, a] : progress)
                if (!rows.count(s)) rows[s] = {{a, Rat(1)}};
            return {win, rows};
        }
    }
    throw std::logic_error("unreachable");
}

// Exact optimal value vector with memoryless optimal rows, for any of the
// three objectives (safety values maximize the probability of staying safe).
inline ValueResult optimal_value(const Mdp& m, const Objective& phi,
                                 const SubView* view = nullptr) {
    SubView v = detail::view_or_full(m, view);
    switch (phi.kind) {
        case ObjectiveKind::Reach:
            return max_reach_values(m, phi.states, &v);
        case ObjectiveKind::Safety: {
            std::set<StateId> unsafe;
            for (StateId s = 0; s < m.n(); ++s)
                if (v.alive[s] && !phi.states.count(s)) unsafe.insert(s);
            ValueResult r = min_reach_values(m, unsafe, &v);
            for (StateId s = 0; s < m.n(); ++s)
                if (v.alive[s]) r.value[s] = 1 - r.value[s];
            return r;
        }
        case ObjectiveKind::Parity: {
            std::set<StateId> W;
            MemorylessRows ecrows_all;
            for (auto& [ec, ecrows] : winning_mecs(m, phi.priority, &v)) {
                for (StateId s : ec.states) W.insert(s);
                for (auto& [s, row] : ecrows) ecrows_all[s] = row;
            }
            ValueResult r = max_reach_values(m, W, &v);
            for (auto& [s, row] : ecrows_all) r.rows[s] = row;
            return r;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace memdp
