#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "memdp/mdp_analysis.hpp"
#include "memdp/model.hpp"
#include "memdp/preprocess.hpp"

namespace memdp {

struct RequiresNormalForm : std::runtime_error {
    explicit RequiresNormalForm(const std::string& why)
        : std::runtime_error("requires normal form: " + why) {}
};
struct RequiresTrivialDecs : std::runtime_error {
    RequiresTrivialDecs()
        : std::runtime_error("model has a non-trivial double end component") {}
};

// A sub-model that is an end component of both environments. Under the
// revealed-form validation rules every action inside one has the same support
// in both environments, so the pair is found by dropping the actions whose
// supports differ and decomposing what remains.
struct Dec {
    EndComponent ec;
    bool distinguishing = false;
    bool trivial = false;
    // Enabled actions of member states that fall outside the component.
    std::vector<std::pair<StateId, ActionId>> frontier;
};

inline bool same_support(const Memdp& m, StateId s, ActionId a) {
    const Distribution& d1 = m.dist(1, s, a);
    const Distribution& d2 = m.dist(2, s, a);
    if (d1.p.size() != d2.p.size()) return false;
    for (auto& [t, q] : d1.p)
        if (is_zero(d2.at(t))) return false;
    return true;
}

inline std::vector<Dec> dec_decompose(const Memdp& m) {
    Mdp m1 = env_mdp(m, 1);
    SubView view;
    view.alive.assign(m.n(), 1);
    for (StateId s = 0; s < m.n(); ++s) {
        auto& as = view.acts[s];
        for (ActionId a : m.enabled[s])
            if (same_support(m, s, a)) as.insert(a);
    }
    std::vector<Dec> out;
    for (EndComponent& ec : mec_decompose(m1, &view)) {
        Dec d;
        d.ec = std::move(ec);
        for (StateId s : d.ec.states) {
            const auto& inside = d.ec.actions.at(s);
            for (ActionId a : inside)
                if (m.dist(1, s, a) != m.dist(2, s, a)) d.distinguishing = true;
            for (ActionId a : m.enabled[s])
                if (!inside.count(a)) d.frontier.push_back({s, a});
        }
        d.trivial = d.ec.states.size() == 1 && m.absorbing(*d.ec.states.begin());
        out.push_back(std::move(d));
    }
    return out;
}

// Contraction of non-trivial maximal double end components. A distinguishing
// component collapses to a state with a single action that pays the
// per-environment optimal value of the component; a non-distinguishing one
// keeps its frontier actions, with in-component mass looping back, plus an
// action paying the confined value of staying inside forever. With
// `parity_mode` the objective is a parity condition: the confined value comes
// from in-component winnability and fresh states get even/odd priorities
// instead of membership in a target or safe set.
struct HatResult {
    Memdp model;
    Objective phi;
    std::vector<StateId> to_hat;
    struct Module {
        Dec dec;
        StateId s_d = -1;
        StateId win = -1, lose = -1;
        ActionId stay = -1;
        std::array<Rat, 2> v{};
        std::map<std::pair<StateId, ActionId>, ActionId> faction;
    };
    std::vector<Module> modules;
};

inline HatResult build_hat(const Memdp& m, const Objective& phi,
                           bool parity_mode = false) {
    if (!parity_mode) {
        if (m.revealed.empty())
            throw RequiresNormalForm("model carries no revealed annotation");
        auto bad = validate(m);
        if (!bad.empty()) throw RequiresNormalForm(bad.front());
        for (StateId s = 0; s < m.n(); ++s) {
            bool pinned = phi.kind == ObjectiveKind::Reach ? phi.states.count(s) > 0
                                                           : phi.states.count(s) == 0;
            if (pinned && !m.absorbing(s))
                throw RequiresNormalForm("objective state " + m.state_names[s] +
                                         " not absorbing");
        }
    }
    HatResult hr;
    std::array<std::vector<Rat>, 2> vals;
    for (int i = 0; i < 2; ++i)
        vals[i] = optimal_value(env_mdp(m, i + 1), phi).value;

    std::vector<Dec> decs = dec_decompose(m);
    std::vector<int> module_of(m.n(), -1);
    for (Dec& d : decs) {
        if (d.trivial) continue;
        HatResult::Module mod;
        mod.dec = std::move(d);
        for (StateId s : mod.dec.ec.states)
            module_of[s] = (int)hr.modules.size();
        hr.modules.push_back(std::move(mod));
    }

    Memdp& out = hr.model;
    out.action_names = m.action_names;
    hr.to_hat.assign(m.n(), -1);
    for (StateId s = 0; s < m.n(); ++s) {
        if (module_of[s] >= 0) continue;
        hr.to_hat[s] = (StateId)out.state_names.size();
        out.state_names.push_back(m.state_names[s]);
    }
    auto member_list = [&](const HatResult::Module& mod) {
        std::string list;
        for (StateId s : mod.dec.ec.states) {
            if (!list.empty()) list += "+";
            list += m.state_names[s];
        }
        return list;
    };
    for (auto& mod : hr.modules) {
        mod.s_d = (StateId)out.state_names.size();
        out.state_names.push_back("dec(" + member_list(mod) + ")");
        for (StateId s : mod.dec.ec.states) hr.to_hat[s] = mod.s_d;
    }

    std::set<std::string> taken(out.action_names.begin(), out.action_names.end());
    auto fresh_action = [&](std::string name) {
        while (taken.count(name)) name += "~";
        taken.insert(name);
        out.action_names.push_back(name);
        return (ActionId)(out.action_names.size() - 1);
    };
    auto fresh_state = [&](const std::string& name) {
        StateId s = (StateId)out.state_names.size();
        out.state_names.push_back(name);
        return s;
    };

    out.enabled.resize(out.state_names.size());
    for (StateId s = 0; s < m.n(); ++s) {
        if (module_of[s] >= 0) continue;
        StateId hs = hr.to_hat[s];
        out.enabled[hs] = m.enabled[s];
        for (ActionId a : m.enabled[s]) {
            for (int e = 0; e < 2; ++e) {
                Distribution d;
                for (auto& [t, q] : m.delta[e].at({s, a}).p)
                    d.add(hr.to_hat[t], q);
                out.delta[e][{hs, a}] = std::move(d);
            }
        }
    }

    std::vector<char> even_fresh;
    auto sink = [&](StateId& slot, const std::string& name, bool good) {
        if (slot >= 0) return slot;
        slot = fresh_state(name);
        ActionId a = 0;
        out.enabled.push_back({a});
        out.delta[0][{slot, a}] = point_dist(slot);
        out.delta[1][{slot, a}] = point_dist(slot);
        even_fresh.push_back(good);
        return slot;
    };

    for (auto& mod : hr.modules) {
        const Dec& d = mod.dec;
        StateId rep = *d.ec.states.begin();
        std::string list = member_list(mod);

        if (d.distinguishing) {
            for (int i = 0; i < 2; ++i) mod.v[i] = vals[i][rep];
        } else {
            Rat confined;
            if (parity_mode) {
                Mdp m1 = env_mdp(m, 1);
                confined = ec_parity_winning(m1, d.ec, phi.priority) ? 1 : 0;
            } else if (phi.kind == ObjectiveKind::Reach) {
                confined = 0;
            } else {
                confined = 1;
                for (StateId s : d.ec.states)
                    if (!phi.states.count(s)) confined = 0;
            }
            mod.v = {confined, confined};
        }

        mod.stay = fresh_action("$");
        out.enabled[mod.s_d].push_back(mod.stay);
        for (int e = 0; e < 2; ++e) {
            Distribution dd;
            if (!is_zero(mod.v[e]))
                dd.add(sink(mod.win, "win(" + list + ")", true), mod.v[e]);
            if (!is_one(mod.v[e]))
                dd.add(sink(mod.lose, "lose(" + list + ")", false), 1 - mod.v[e]);
            out.delta[e][{mod.s_d, mod.stay}] = std::move(dd);
        }

        if (!d.distinguishing) {
            for (auto& [f, a] : d.frontier) {
                ActionId fa = fresh_action(m.state_names[f] + "." +
                                           m.action_names[a]);
                mod.faction[{f, a}] = fa;
                out.enabled[mod.s_d].push_back(fa);
                for (int e = 0; e < 2; ++e) {
                    Distribution dd;
                    for (auto& [t, q] : m.delta[e].at({f, a}).p)
                        dd.add(hr.to_hat[t], q);
                    out.delta[e][{mod.s_d, fa}] = std::move(dd);
                }
            }
        }
    }

    StateId base = 0;
    for (StateId s = 0; s < m.n(); ++s)
        if (module_of[s] < 0) ++base;
    StateId first_fresh = base + (StateId)hr.modules.size();

    if (parity_mode) {
        std::vector<int> pr(out.n(), 1);
        for (StateId s = 0; s < m.n(); ++s)
            if (module_of[s] < 0) pr[hr.to_hat[s]] = phi.priority[s];
        for (StateId s = first_fresh; s < out.n(); ++s)
            pr[s] = even_fresh[s - first_fresh] ? 0 : 1;
        hr.phi = Objective::parity(pr);
    } else {
        std::set<StateId> keep;
        for (StateId s : phi.states)
            if (module_of[s] < 0) keep.insert(hr.to_hat[s]);
        for (auto& mod : hr.modules) {
            if (mod.win >= 0) keep.insert(mod.win);
            // Contracted components never hold unsafe states (those are
            // absorbing, hence trivial), and the play can pass through s_D.
            if (phi.kind == ObjectiveKind::Safety) keep.insert(mod.s_d);
        }
        hr.phi = phi.kind == ObjectiveKind::Reach ? Objective::reach(keep)
                                                  : Objective::safety(keep);
    }
    return hr;
}

// Good end components: end components of one environment from which playing
// uniformly inside wins almost surely in the other environment. Expects a
// model in revealed form whose double end components are all trivial.
struct Mgec {
    int env = 0;
    EndComponent ec;
    bool trivial = false;
    bool win_own = false;
};

inline std::vector<Mgec> mgec_compute(const Memdp& m, const Objective& phi) {
    for (const Dec& d : dec_decompose(m))
        if (!d.trivial) throw RequiresTrivialDecs();
    std::vector<Mgec> out;
    Mdp um = union_mdp(m);
    auto rw = revealed_winning(m, phi);
    for (int i = 0; i < 2; ++i) {
        Mdp mi = env_mdp(m, i + 1);
        auto as_own = as_winning(mi, phi).first;
        std::set<StateId> rev_other, rev_other_win = rw[1 - i];
        if (!m.revealed.empty())
            for (StateId s = 0; s < m.n(); ++s)
                if (m.revealed[s] == 2 - i) rev_other.insert(s);

        std::set<StateId> ui;
        for (EndComponent& d : mec_decompose(mi)) {
            SubView view;
            view.alive.assign(m.n(), 0);
            std::set<StateId> allowed = d.states;
            allowed.insert(rev_other.begin(), rev_other.end());
            for (StateId s : allowed) view.alive[s] = 1;
            for (StateId s : allowed) {
                auto& as = view.acts[s];
                for (ActionId a : m.enabled[s]) {
                    bool in = true;
                    for (auto& [t, q] : um.delta.at({s, a}).p)
                        if (!view.alive[t]) in = false;
                    if (in) as.insert(a);
                }
            }
            std::set<StateId> safe = d.states;
            safe.insert(rev_other_win.begin(), rev_other_win.end());
            SubView sure = sure_safe_region(um, safe, &view);
            for (StateId s : d.states)
                if (sure.has(s)) ui.insert(s);
        }

        SubView vi;
        vi.alive.assign(m.n(), 0);
        for (StateId s : ui) vi.alive[s] = 1;
        for (StateId s : ui) {
            auto& as = vi.acts[s];
            for (ActionId a : m.enabled[s]) {
                bool in = true;
                for (auto& [t, q] : mi.delta.at({s, a}).p)
                    if (!vi.alive[t]) in = false;
                if (in) as.insert(a);
            }
        }
        for (EndComponent& g : mec_decompose(mi, &vi)) {
            Mgec mg;
            mg.env = i + 1;
            bool triv = g.states.size() == 1;
            if (triv) {
                StateId s = *g.states.begin();
                for (ActionId a : g.actions.at(s))
                    if (!mi.delta.at({s, a}).is_point_on(s)) triv = false;
            }
            mg.trivial = triv;
            if (triv && phi.kind == ObjectiveKind::Reach &&
                !phi.states.count(*g.states.begin()))
                continue;
            mg.win_own = as_own.count(*g.states.begin()) > 0;
            mg.ec = std::move(g);
            out.push_back(std::move(mg));
        }
    }
    return out;
}

// Contracts every state of a non-trivial good end component to a fresh
// absorbing state. The objective becomes a per-environment pair of target
// sets: the fresh state is winning for the environment the component wins
// almost surely in, which always includes the environment opposite to the one
// the component lives in.
struct TildeResult {
    Memdp model;
    std::array<std::set<StateId>, 2> targets;
    std::vector<StateId> to_tilde;
    struct Mark {
        int env = 0;
        EndComponent ec;
        StateId t_d = -1;
        bool win_own = false;
    };
    std::vector<Mark> marks;
};

inline TildeResult build_tilde(const Memdp& m, const Objective& phi) {
    TildeResult tr;
    std::vector<int> mark_of(m.n(), -1);
    std::vector<Mgec> gecs = mgec_compute(m, phi);
    for (auto& g : gecs) {
        if (g.trivial) continue;
        int id = -1;
        for (StateId s : g.ec.states) {
            if (mark_of[s] >= 0) continue;
            if (id < 0) {
                id = (int)tr.marks.size();
                tr.marks.push_back({g.env, g.ec, -1, g.win_own});
            }
            mark_of[s] = id;
        }
    }

    Memdp& out = tr.model;
    out.action_names = m.action_names;
    tr.to_tilde.assign(m.n(), -1);
    for (StateId s = 0; s < m.n(); ++s) {
        if (mark_of[s] >= 0) continue;
        tr.to_tilde[s] = (StateId)out.state_names.size();
        out.state_names.push_back(m.state_names[s]);
    }
    for (size_t k = 0; k < tr.marks.size(); ++k) {
        auto& mk = tr.marks[k];
        std::string list;
        for (StateId s : mk.ec.states)
            if (mark_of[s] == (int)k) {
                if (!list.empty()) list += "+";
                list += m.state_names[s];
            }
        mk.t_d = (StateId)out.state_names.size();
        out.state_names.push_back("gec(" + list + ")");
        for (StateId s : mk.ec.states)
            if (mark_of[s] == (int)k) tr.to_tilde[s] = mk.t_d;
    }

    out.enabled.resize(out.state_names.size());
    if (!m.revealed.empty()) out.revealed.assign(out.n(), 0);
    for (StateId s = 0; s < m.n(); ++s) {
        if (mark_of[s] >= 0) continue;
        StateId ts = tr.to_tilde[s];
        if (!m.revealed.empty()) out.revealed[ts] = m.revealed[s];
        out.enabled[ts] = m.enabled[s];
        for (ActionId a : m.enabled[s]) {
            for (int e = 0; e < 2; ++e) {
                Distribution d;
                for (auto& [t, q] : m.delta[e].at({s, a}).p)
                    d.add(tr.to_tilde[t], q);
                out.delta[e][{ts, a}] = std::move(d);
            }
        }
    }
    for (auto& mk : tr.marks) {
        ActionId a = 0;
        out.enabled[mk.t_d] = {a};
        out.delta[0][{mk.t_d, a}] = point_dist(mk.t_d);
        out.delta[1][{mk.t_d, a}] = point_dist(mk.t_d);
    }

    for (int i = 0; i < 2; ++i) {
        for (StateId s : phi.states)
            if (mark_of[s] < 0) tr.targets[i].insert(tr.to_tilde[s]);
        for (auto& mk : tr.marks)
            if (i + 1 != mk.env || mk.win_own) tr.targets[i].insert(mk.t_d);
    }
    return tr;
}

// Rewrite of a play of the original model as a play of the contracted one:
// stop at the first entry into a distinguishing component, and inside a
// non-distinguishing component keep only the frontier steps, each seen from
// the contracted state.
struct HatHistory {
    std::vector<StateId> states;
    std::vector<ActionId> actions;
};

inline HatHistory reduce_history(const HatResult& hat,
                                 const std::vector<StateId>& hs,
                                 const std::vector<ActionId>& ha) {
    HatHistory out;
    std::vector<int> module_of(hat.to_hat.size(), -1);
    for (size_t k = 0; k < hat.modules.size(); ++k)
        for (StateId s : hat.modules[k].dec.ec.states) module_of[s] = (int)k;

    size_t n = hs.size();
    for (size_t i = 0; i < n; ++i) {
        int mod = module_of[hs[i]];
        if (mod < 0) {
            out.states.push_back(hat.to_hat[hs[i]]);
            if (i < ha.size()) out.actions.push_back(ha[i]);
            continue;
        }
        const auto& md = hat.modules[mod];
        if (md.dec.distinguishing) {
            out.states.push_back(md.s_d);
            out.actions.resize(out.states.size() - 1);
            return out;
        }
        out.states.push_back(md.s_d);
        while (i < n) {
            StateId s = hs[i];
            if (module_of[s] != mod) {
                --i;
                break;
            }
            if (i >= ha.size()) break;
            auto it = md.faction.find({s, ha[i]});
            if (it != md.faction.end()) {
                out.actions.push_back(it->second);
                if (i + 1 < n && module_of[hs[i + 1]] == mod)
                    out.states.push_back(md.s_d);
            }
            ++i;
        }
    }
    if (!out.states.empty()) out.actions.resize(out.states.size() - 1);
    return out;
}

}  // namespace memdp
