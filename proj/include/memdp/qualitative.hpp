#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "memdp/chain.hpp"
#include "memdp/end_components.hpp"
#include "memdp/mdp_analysis.hpp"
#include "memdp/model.hpp"
#include "memdp/preprocess.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

enum class Verdict { Yes, No };

inline const char* verdict_str(Verdict v) { return v == Verdict::Yes ? "Yes" : "No"; }

// Named state sets backing a decision, reported over the input model's ids.
// Fresh states introduced by internal transformations are clipped away.
struct Certificate {
    // States winning in both environments separately, plus the revealed wins.
    std::set<StateId> winning_union;
    // Largest sub-model that surely stays inside winning_union.
    std::set<StateId> common_region;
    // Per environment: revealed states of that environment that win it.
    std::array<std::set<StateId>, 2> revealed_winning;
    // Per environment: states of the region's winning end components (parity).
    std::array<std::set<StateId>, 2> switch_targets;
    // States from which the objective is limit-sure winnable (limit-sure only).
    std::set<StateId> limit_winning;
};

struct Decision {
    Verdict verdict = Verdict::No;
    // Almost-sure decisions carry a machine achieving probability one in both
    // environments. Limit-sure decisions carry none here; per-tolerance
    // machines are built separately by the strategy construction layer.
    std::optional<StrategyMachine> witness;
    Certificate cert;
};

struct WitnessReport {
    std::array<Rat, 2> prob{};
    bool pass = false;
};

// Exact satisfaction probability of phi under sm from s0, per environment.
// Passes when both probabilities reach the bound.
inline WitnessReport witness_check(const Memdp& m, const Objective& phi,
                                   const StrategyMachine& sm, StateId s0, const Rat& bound) {
    WitnessReport r;
    for (int i = 0; i < 2; ++i) {
        ExplicitChain c = product_chain(env_mdp(m, i + 1), sm, s0);
        r.prob[i] = chain_objective_prob(c, phi).total;
    }
    r.pass = r.prob[0] >= bound && r.prob[1] >= bound;
    return r;
}

// Core of the almost-sure reachability decision on a revealed-form model,
// with one target set per environment.
struct ReachCore {
    bool yes = false;
    std::set<StateId> winning_union;
    SubView region;
    std::array<std::set<StateId>, 2> revealed_winning;
    std::array<ValueResult, 2> values;
};

inline ReachCore almost_sure_reach_core(const Memdp& m,
                                        const std::array<std::set<StateId>, 2>& targets,
                                        StateId s0, const SubView* base = nullptr) {
    ReachCore c;
    std::array<std::set<StateId>, 2> win;
    for (int i = 0; i < 2; ++i)
        win[i] = as_winning(env_mdp(m, i + 1), Objective::reach(targets[i]), base).first;
    for (int i = 0; i < 2; ++i)
        if (!m.revealed.empty())
            for (StateId s : win[i])
                if (m.revealed[s] == i + 1) c.revealed_winning[i].insert(s);
    for (StateId s : win[0])
        if (win[1].count(s)) c.winning_union.insert(s);
    for (auto& r : c.revealed_winning) c.winning_union.insert(r.begin(), r.end());
    Mdp um = union_mdp(m);
    c.region = sure_safe_region(um, c.winning_union, base);
    for (int i = 0; i < 2; ++i)
        c.values[i] = max_reach_values(env_mdp(m, i + 1), targets[i], &c.region);
    c.yes = c.region.has(s0) && c.values[0].value[s0] == 1 && c.values[1].value[s0] == 1;
    return c;
}

// Equal mix of the two per-environment optimal row sets over the region.
inline StrategyMachine reach_mix_witness(const Memdp& m, const ReachCore& core) {
    std::vector<StrategyMachine> parts{memoryless_machine(m, core.values[0].rows, "e1"),
                                       memoryless_machine(m, core.values[1].rows, "e2")};
    return mix_memoryless(m, parts, {rat(1, 2), rat(1, 2)});
}

// Pure alternative to the mix: follow the first environment's rows for
// `period` steps, then the second's, alternating forever. Rows are kept
// inside the common region by construction, so both phases are available
// from every reachable state.
inline StrategyMachine reach_alternating_witness(const Memdp& m, const ReachCore& core,
                                                 int period) {
    StrategyMachine sm;
    int cycle = 2 * period;
    for (int k = 0; k < cycle; ++k)
        sm.memory_names.push_back((k < period ? "e1." : "e2.") + std::to_string(k % period));
    sm.init[0] = rat(1);
    auto pure_row = [&](int env, StateId s) -> ActionId {
        auto it = core.values[env].rows.find(s);
        if (it != core.values[env].rows.end() && !it->second.empty())
            return it->second.begin()->first;
        return m.enabled[s].front();
    };
    for (StateId s = 0; s < m.n(); ++s)
        for (int k = 0; k < cycle; ++k) {
            ActionId a = pure_row(k < period ? 0 : 1, s);
            sm.next_action[{s, k}][a] = rat(1);
            sm.update[{a, s, k}][(k + 1) % cycle] = rat(1);
        }
    return sm;
}

// Uniform play over the actions that keep the play inside the region.
inline StrategyMachine region_uniform_witness(const Memdp& m, const SubView& region) {
    MemorylessRows rows;
    for (auto& [s, acts] : region.acts) {
        if (acts.empty()) continue;
        for (ActionId a : acts) rows[s][a] = rat(1, static_cast<long>(acts.size()));
    }
    return memoryless_machine(m, rows, "safe");
}

namespace detail {

inline std::set<StateId> clip_states(const std::set<StateId>& xs, int n) {
    std::set<StateId> out;
    for (StateId x : xs)
        if (x >= 0 && x < n) out.insert(x);
    return out;
}

}  // namespace detail

// Decides whether some strategy satisfies phi with probability one in both
// environments from s0, and if so returns a machine that provably does.
// Every Yes witness is re-checked by exact chain analysis before it is
// returned. `alternating_witness` selects the pure phase-switching witness
// for reachability instead of the default mixed one.
inline Decision decide_almost_sure(const Memdp& m, const Objective& phi, StateId s0,
                                   bool alternating_witness = false) {
    Decision d;
    auto [am, aphi] = absorb_objective_states(m, phi);
    RevealResult rv = to_revealed_form(am, aphi);
    const Memdp& rm = rv.model;
    const int n0 = m.n();
    StrategyMachine inner;
    bool have_witness = false;

    if (phi.kind == ObjectiveKind::Reach) {
        ReachCore core = almost_sure_reach_core(rm, {rv.phi.states, rv.phi.states}, s0);
        d.verdict = core.yes ? Verdict::Yes : Verdict::No;
        d.cert.winning_union = detail::clip_states(core.winning_union, n0);
        d.cert.common_region = detail::clip_states(core.region.states(), n0);
        for (int i = 0; i < 2; ++i)
            d.cert.revealed_winning[i] = detail::clip_states(core.revealed_winning[i], n0);
        if (core.yes) {
            inner = alternating_witness ? reach_alternating_witness(rm, core, rm.n())
                                        : reach_mix_witness(rm, core);
            have_witness = true;
        }
    } else if (phi.kind == ObjectiveKind::Safety) {
        std::array<std::set<StateId>, 2> safe;
        for (int i = 0; i < 2; ++i)
            safe[i] = as_winning(env_mdp(rm, i + 1), rv.phi).first;
        std::set<StateId> u;
        for (StateId s : safe[0])
            if (safe[1].count(s)) u.insert(s);
        std::array<std::set<StateId>, 2> rw;
        for (int i = 0; i < 2; ++i) {
            if (!rm.revealed.empty())
                for (StateId s : safe[i])
                    if (rm.revealed[s] == i + 1) rw[i].insert(s);
            u.insert(rw[i].begin(), rw[i].end());
        }
        Mdp um = union_mdp(rm);
        SubView region = sure_safe_region(um, u);
        d.verdict = region.has(s0) ? Verdict::Yes : Verdict::No;
        d.cert.winning_union = detail::clip_states(u, n0);
        d.cert.common_region = detail::clip_states(region.states(), n0);
        for (int i = 0; i < 2; ++i)
            d.cert.revealed_winning[i] = detail::clip_states(rw[i], n0);
        if (d.verdict == Verdict::Yes) {
            inner = region_uniform_witness(rm, region);
            have_witness = true;
        }
    } else {
        std::array<std::set<StateId>, 2> win;
        for (int i = 0; i < 2; ++i)
            win[i] = as_winning(env_mdp(rm, i + 1), rv.phi).first;
        std::array<std::set<StateId>, 2> rw;
        std::set<StateId> u;
        for (StateId s : win[0])
            if (win[1].count(s)) u.insert(s);
        for (int i = 0; i < 2; ++i) {
            if (!rm.revealed.empty())
                for (StateId s : win[i])
                    if (rm.revealed[s] == i + 1) rw[i].insert(s);
            u.insert(rw[i].begin(), rw[i].end());
        }
        Mdp um = union_mdp(rm);
        SubView region = sure_safe_region(um, u);
        std::array<std::vector<std::pair<EndComponent, MemorylessRows>>, 2> wm;
        std::array<std::set<StateId>, 2> t;
        for (int i = 0; i < 2; ++i) {
            wm[i] = winning_mecs(env_mdp(rm, i + 1), rv.phi.priority, &region);
            for (auto& [ec, rows] : wm[i]) t[i].insert(ec.states.begin(), ec.states.end());
        }
        std::set<StateId> tu = t[0];
        tu.insert(t[1].begin(), t[1].end());
        // Reaching the winning components almost surely is a reachability
        // question on a copy where they are made absorbing.
        Memdp frozen = rm;
        for (StateId s : tu)
            for (ActionId a : frozen.enabled[s])
                for (int e = 0; e < 2; ++e) {
                    Distribution dd;
                    dd.add(s, rat(1));
                    frozen.delta[e][{s, a}] = dd;
                }
        ReachCore core = almost_sure_reach_core(frozen, {tu, tu}, s0, &region);
        d.verdict = core.yes ? Verdict::Yes : Verdict::No;
        d.cert.winning_union = detail::clip_states(u, n0);
        d.cert.common_region = detail::clip_states(region.states(), n0);
        for (int i = 0; i < 2; ++i) {
            d.cert.revealed_winning[i] = detail::clip_states(rw[i], n0);
            d.cert.switch_targets[i] = detail::clip_states(t[i], n0);
        }
        if (core.yes) {
            StrategyMachine outer = reach_mix_witness(frozen, core);
            std::vector<SwitchCase> cases;
            for (int i = 0; i < 2; ++i) {
                MemorylessRows rows;
                for (auto& [ec, r] : wm[i])
                    for (auto& [s, row] : r) rows[s] = row;
                cases.push_back({t[i], memoryless_machine(rm, rows, i == 0 ? "w1" : "w2")});
            }
            inner = compose_switching(rm, outer, cases);
            have_witness = true;
        }
    }

    if (have_witness) {
        d.witness = transport_strategy(am, aphi, inner);
        WitnessReport rep = witness_check(m, phi, *d.witness, s0, rat(1));
        if (!rep.pass)
            throw std::logic_error("internal error: almost-sure witness fails exact check");
    }
    return d;
}

// Parity-to-reachability rewrite. Every state of a non-trivial end component
// of either environment of the contracted model gets one extra action that
// cashes out the component: in the owning environment it moves to a fresh
// even-priority sink with the state's optimal parity value (odd-priority sink
// with the rest), in the other environment to the odd-priority sink surely.
// The rewritten objective is reachability of the absorbing states of the
// union model that carry even priority.
struct BarResult {
    Memdp model;
    Objective phi;
    HatResult hat;
    std::vector<StateId> to_bar;
    struct Escape {
        int env = 0;
        EndComponent mec;
        ActionId action = -1;
        StateId t_even = -1;
        StateId t_odd = -1;
    };
    std::vector<Escape> escapes;
};

inline BarResult build_bar(const Memdp& m, const Objective& phi) {
    if (phi.kind != ObjectiveKind::Parity)
        throw std::invalid_argument("build_bar expects a parity objective");
    BarResult r;
    r.hat = build_hat(m, phi, true);
    r.to_bar = r.hat.to_hat;
    Memdp out = r.hat.model;
    std::vector<int> pr = r.hat.phi.priority;

    std::array<std::vector<EndComponent>, 2> mecs;
    std::array<ValueResult, 2> pv;
    for (int i = 0; i < 2; ++i) {
        Mdp me = env_mdp(r.hat.model, i + 1);
        mecs[i] = mec_decompose(me);
        pv[i] = optimal_value(me, r.hat.phi);
    }
    for (int i = 0; i < 2; ++i)
        for (auto& ec : mecs[i]) {
            if (ec.states.size() == 1 && r.hat.model.absorbing(*ec.states.begin())) continue;
            std::string members;
            for (StateId s : ec.states) {
                if (!members.empty()) members += "+";
                members += r.hat.model.state_names[s];
            }
            std::string tag = "@" + std::to_string(i + 1) + "(" + members + ")";
            ActionId ad = static_cast<ActionId>(out.action_names.size());
            out.action_names.push_back(tag);
            auto sink = [&](const std::string& name, int prio, int reveal) {
                StateId t = out.n();
                out.state_names.push_back(name);
                out.enabled.push_back({0});
                for (int e = 0; e < 2; ++e) {
                    Distribution dd;
                    dd.add(t, rat(1));
                    out.delta[e][{t, 0}] = dd;
                }
                pr.push_back(prio);
                if (!out.revealed.empty()) out.revealed.push_back(reveal);
                return t;
            };
            StateId te = sink("t0" + tag, 0, i + 1);
            StateId to = sink("t1" + tag, 1, 0);
            for (StateId s : ec.states) {
                out.enabled[s].push_back(ad);
                Distribution own;
                const Rat& v = pv[i].value[s];
                if (sgn(v) > 0) own.add(te, v);
                if (v != 1) own.add(to, Rat(1) - v);
                out.delta[i][{s, ad}] = own;
                Distribution other;
                other.add(to, rat(1));
                out.delta[1 - i][{s, ad}] = other;
            }
            r.escapes.push_back({i + 1, ec, ad, te, to});
        }

    std::set<StateId> targets;
    for (StateId s = 0; s < out.n(); ++s)
        if (out.absorbing(s) && pr[s] % 2 == 0) targets.insert(s);
    r.model = std::move(out);
    r.phi = Objective::reach(targets);
    return r;
}

// Pipeline shared by the limit-sure reachability decision and the strategy
// construction layer: make the objective absorbing, split revealing edges,
// contract the double end components, then rewrite the good components.
// to_reduced maps every input state to its image in the final model.
struct LsReachReduction {
    Memdp absorbed;
    Objective absorbed_phi;
    RevealResult revealed;
    HatResult hat;
    TildeResult tilde;
    std::vector<StateId> to_reduced;
};

inline LsReachReduction limit_sure_reach_reduce(const Memdp& m, const Objective& phi) {
    LsReachReduction r;
    auto ap = absorb_objective_states(m, phi);
    r.absorbed = std::move(ap.first);
    r.absorbed_phi = std::move(ap.second);
    r.revealed = to_revealed_form(r.absorbed, r.absorbed_phi);
    r.hat = build_hat(r.revealed.model, r.revealed.phi);
    annotate_revealed(r.hat.model);
    r.tilde = build_tilde(r.hat.model, r.hat.phi);
    r.to_reduced.assign(m.n(), -1);
    for (StateId s = 0; s < m.n(); ++s)
        r.to_reduced[s] = r.tilde.to_tilde[r.hat.to_hat[s]];
    return r;
}

// Decides whether for every tolerance some strategy satisfies phi with
// probability at least one minus the tolerance in both environments from s0.
inline Decision decide_limit_sure(const Memdp& m, const Objective& phi, StateId s0) {
    if (phi.kind == ObjectiveKind::Safety) {
        // A strategy family achieving safety probabilities arbitrarily close
        // to one can be pruned to one achieving exactly one, so the two
        // notions coincide and the fixed machine below serves every tolerance.
        Decision d = decide_almost_sure(m, phi, s0);
        d.cert.limit_winning = d.cert.common_region;
        return d;
    }

    std::vector<StateId> pre(m.n());
    for (StateId s = 0; s < m.n(); ++s) pre[s] = s;
    Memdp base;
    Objective bphi;
    if (phi.kind == ObjectiveKind::Parity) {
        BarResult bar = build_bar(m, phi);
        base = std::move(bar.model);
        bphi = std::move(bar.phi);
        for (StateId s = 0; s < m.n(); ++s) pre[s] = bar.to_bar[s];
    } else {
        base = m;
        bphi = phi;
    }
    LsReachReduction red = limit_sure_reach_reduce(base, bphi);
    ReachCore core =
        almost_sure_reach_core(red.tilde.model, red.tilde.targets, red.to_reduced[pre[s0]]);

    Decision d;
    d.verdict = core.yes ? Verdict::Yes : Verdict::No;
    auto back = [&](const std::set<StateId>& xs) {
        std::set<StateId> out;
        for (StateId s = 0; s < m.n(); ++s)
            if (xs.count(red.to_reduced[pre[s]])) out.insert(s);
        return out;
    };
    d.cert.winning_union = back(core.winning_union);
    d.cert.common_region = back(core.region.states());
    for (int i = 0; i < 2; ++i)
        d.cert.revealed_winning[i] = back(core.revealed_winning[i]);
    for (StateId s = 0; s < m.n(); ++s) {
        StateId ts = red.to_reduced[pre[s]];
        if (core.values[0].value[ts] == 1 && core.values[1].value[ts] == 1)
            d.cert.limit_winning.insert(s);
    }
    return d;
}

}  // namespace memdp
