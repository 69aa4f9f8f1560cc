#pragma once

// Approximate strategies for limit-sure reachability. The machines built here
// trade a tolerance eps for finite memory: inside a distinguishing component a
// frequency test on one probe edge identifies the environment, inside a merged
// good component an escape counter bounds the probability of having stayed in
// the wrong environment, and everywhere else the play follows the almost-sure
// witness of the reduced model.

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "memdp/end_components.hpp"
#include "memdp/mdp_analysis.hpp"
#include "memdp/model.hpp"
#include "memdp/preprocess.hpp"
#include "memdp/qualitative.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

struct NotDistinguishing : std::runtime_error {
    NotDistinguishing() : std::runtime_error("component has no distinguishing action") {}
};

struct NotLimitSureYes : std::runtime_error {
    explicit NotLimitSureYes(const std::string& where)
        : std::runtime_error("objective is not limit-sure winnable from " + where) {}
};

// Probes needed before a frequency test separates landing masses d1 < d2 with
// error at most eps per environment: ceil(2 ln(1/eps) / (d2-d1)^2).
inline long sampler_rounds(const Rat& eps, const Rat& d1, const Rat& d2) {
    if (eps >= 1) return 0;
    double e = mpq_get_d(eps.get_mpq_t());
    double gap = mpq_get_d(Rat(d2 - d1).get_mpq_t());
    return (long)std::ceil(2.0 * std::log(1.0 / e) / (gap * gap));
}

// Smallest K with (1-p)^K <= eps. Seeded with doubles, settled exactly.
inline long counter_rounds(const Rat& eps, const Rat& p) {
    if (eps >= 1) return 0;
    Rat q = 1 - p;
    if (sgn(q) == 0) return 1;
    auto pw = [&](long n) {
        Rat r = 1;
        for (long i = 0; i < n; ++i) r *= q;
        return r;
    };
    long k = (long)(std::log(mpq_get_d(eps.get_mpq_t())) / std::log(mpq_get_d(q.get_mpq_t())));
    if (k < 0) k = 0;
    while (pw(k) > eps) ++k;
    while (k > 0 && pw(k - 1) <= eps) --k;
    return k;
}

// Probe edge of a distinguishing component and the derived test parameters:
// the first in-component pair (by state, then action) whose distributions
// differ, counted on its first landing whose mass is lower in environment 1.
struct SamplerConfig {
    StateId state = -1;
    ActionId action = -1;
    StateId landing = -1;
    std::array<Rat, 2> d{};
    long rounds = 0;
    Rat threshold;  // commit to environment 1 when count <= rounds * threshold
};

inline SamplerConfig sampler_config(const Memdp& m, const Dec& dec, const Rat& eps) {
    for (StateId s : dec.ec.states)
        for (ActionId a : dec.ec.actions.at(s)) {
            const Distribution& x1 = m.dist(1, s, a);
            const Distribution& x2 = m.dist(2, s, a);
            if (x1 == x2) continue;
            for (const auto& [t, q1] : x1.p) {
                Rat q2 = x2.at(t);
                if (q1 < q2) {
                    SamplerConfig cfg;
                    cfg.state = s;
                    cfg.action = a;
                    cfg.landing = t;
                    cfg.d = {q1, q2};
                    cfg.threshold = (q1 + q2) / 2;
                    cfg.rounds = sampler_rounds(eps, q1, q2);
                    return cfg;
                }
            }
        }
    throw NotDistinguishing();
}

// Exact probability that the frequency test commits to the wrong environment:
// the landing count is binomial, environment 1 errs when it exceeds the cut,
// environment 2 when it stays at or below.
inline std::array<Rat, 2> misclassification_exact(const SamplerConfig& cfg) {
    const long K = cfg.rounds;
    Rat cut = Rat(K) * cfg.threshold;
    std::array<Rat, 2> wrong{0, 0};
    for (int i = 0; i < 2; ++i) {
        std::vector<Rat> up(K + 1), down(K + 1);
        up[0] = 1;
        down[0] = 1;
        for (long k = 1; k <= K; ++k) {
            up[k] = up[k - 1] * cfg.d[i];
            down[k] = down[k - 1] * (1 - cfg.d[i]);
        }
        for (long k = 0; k <= K; ++k) {
            bool commit1 = Rat(k) <= cut;
            if ((i == 0) == commit1) continue;
            mpz_class bin;
            mpz_bin_uiui(bin.get_mpz_t(), (unsigned long)K, (unsigned long)k);
            wrong[i] += Rat(bin) * up[k] * down[K - k];
        }
    }
    return wrong;
}

// Large-deviation ceiling the exact misclassification stays under.
inline double sampler_error_bound(const SamplerConfig& cfg) {
    double gap = mpq_get_d(Rat(cfg.d[1] - cfg.d[0]).get_mpq_t());
    return std::exp(-2.0 * (double)cfg.rounds * (gap / 2) * (gap / 2));
}

namespace detail {

// Appends the counting phase of the frequency test to a machine under
// construction. Memories carry (probes made, landings counted) plus a flag for
// the step right after a probe, whose update reads the landing off the state
// it acts from; rows exist at component states only. The step resolving the
// final probe routes to the commit memory picked by the threshold. Returns the
// entry memory, which is the first commit memory when no rounds are needed.
inline MemoryId sampler_block(StrategyMachine& sm, const std::map<StateId, std::set<ActionId>>& inside,
                              const SamplerConfig& cfg, const std::array<MemoryId, 2>& commit,
                              const std::string& tag) {
    const long K = cfg.rounds;
    if (K == 0) return commit[0];
    auto add = [&](long i, long j, const char* flag) {
        sm.memory_names.push_back("count(" + std::to_string(i) + "," + std::to_string(j) + ")" +
                                  flag + tag);
        return (MemoryId)(sm.memory_names.size() - 1);
    };
    std::map<std::pair<long, long>, MemoryId> idle, armed;
    for (long i = 0; i < K; ++i)
        for (long j = 0; j <= i; ++j) idle[{i, j}] = add(i, j, "");
    for (long i = 1; i <= K; ++i)
        for (long j = 0; j < i; ++j) armed[{i, j}] = add(i, j, "+");
    auto guess = [&](long j) { return Rat(j) <= Rat(K) * cfg.threshold ? commit[0] : commit[1]; };
    for (const auto& [t, acts] : inside) {
        std::map<ActionId, Rat> row;
        if (t == cfg.state)
            row[cfg.action] = 1;
        else
            for (ActionId a : acts) row[a] = rat(1, (long)acts.size());
        for (const auto& [ij, mem] : idle) {
            sm.next_action[{t, mem}] = row;
            for (const auto& [a, q] : row) {
                bool probe = t == cfg.state && a == cfg.action;
                sm.update[{a, t, mem}] = {{probe ? armed.at({ij.first + 1, ij.second}) : mem, Rat(1)}};
            }
        }
        for (const auto& [ij, mem] : armed) {
            long j2 = ij.second + (t == cfg.landing ? 1 : 0);
            sm.next_action[{t, mem}] = row;
            for (const auto& [a, q] : row) {
                bool probe = t == cfg.state && a == cfg.action;
                MemoryId nxt;
                if (ij.first == K)
                    nxt = guess(j2);
                else if (probe)
                    nxt = armed.at({ij.first + 1, j2});
                else
                    nxt = idle.at({ij.first, j2});
                sm.update[{a, t, mem}] = {{nxt, Rat(1)}};
            }
        }
    }
    return idle.at({0, 0});
}

}  // namespace detail

// Frequency-test machine over a distinguishing component with explicit
// parameters: explore the component uniformly, force the probe at its source
// state, and commit to the given per-environment rows once the rounds are
// spent. Commit rows are made total with a uniform filler.
inline StrategyMachine dec_sampler_machine(const Memdp& m, const Dec& dec, const SamplerConfig& cfg,
                                           const MemorylessRows& opt1, const MemorylessRows& opt2) {
    StrategyMachine sm;
    sm.memory_names = {"opt1", "opt2"};
    std::array<MemoryId, 2> commit{0, 1};
    for (int i = 0; i < 2; ++i) {
        const MemorylessRows& rows = i == 0 ? opt1 : opt2;
        for (StateId s = 0; s < m.n(); ++s) {
            std::map<ActionId, Rat> row;
            auto it = rows.find(s);
            if (it != rows.end() && !it->second.empty())
                row = it->second;
            else
                for (ActionId a : m.enabled[s]) row[a] = rat(1, (long)m.enabled[s].size());
            sm.next_action[{s, commit[i]}] = row;
            for (const auto& [a, q] : row) sm.update[{a, s, commit[i]}] = {{commit[i], Rat(1)}};
        }
    }
    sm.init = {{detail::sampler_block(sm, dec.ec.actions, cfg, commit, ""), Rat(1)}};
    return sm;
}

// Learning strategy for a distinguishing component: sample the probe edge
// until the rounds for the tolerance are spent, then play the rows of the
// environment the sampled frequency points to.
inline StrategyMachine dec_sampling_strategy(const Memdp& m, const Dec& dec, const Rat& eps,
                                             const MemorylessRows& opt1, const MemorylessRows& opt2) {
    return dec_sampler_machine(m, dec, sampler_config(m, dec, eps), opt1, opt2);
}

// Strategy achieving a reachability objective with probability at least
// 1 - eps in both environments from every limit-sure winning state. The play
// follows the blended almost-sure witness of the reduced model; entering a
// distinguishing component starts the frequency test, entering a merged good
// component starts the escape counter, and a non-distinguishing component is
// crossed by walking to the frontier pair drawn from the witness row at its
// contracted state. A non-negative s0 must be limit-sure winning and the
// returned machine is re-checked against the tolerance from it.
inline StrategyMachine limit_sure_strategy(const Memdp& m, const Objective& phi, const Rat& eps,
                                           StateId s0 = -1) {
    if (phi.kind != ObjectiveKind::Reach)
        throw std::invalid_argument("limit_sure_strategy expects a reachability objective");
    if (sgn(eps) <= 0) throw std::invalid_argument("tolerance must be positive");

    LsReachReduction red = limit_sure_reach_reduce(m, phi);
    const Memdp& R = red.revealed.model;
    const Memdp& H = red.hat.model;
    const TildeResult& tl = red.tilde;
    ReachCore core = almost_sure_reach_core(tl.model, tl.targets, 0);
    if (s0 >= 0) {
        StateId x = red.to_reduced[s0];
        if (!(core.region.has(x) && core.values[0].value[x] == 1 && core.values[1].value[x] == 1))
            throw NotLimitSureYes(m.state_names[s0]);
    }

    std::vector<int> module_of(R.n(), -1);
    std::map<StateId, int> module_by_sd;
    std::vector<std::map<ActionId, std::pair<StateId, ActionId>>> faction_rev(red.hat.modules.size());
    for (size_t e = 0; e < red.hat.modules.size(); ++e) {
        for (StateId s : red.hat.modules[e].dec.ec.states) module_of[s] = (int)e;
        module_by_sd[red.hat.modules[e].s_d] = (int)e;
        for (const auto& [pair, fa] : red.hat.modules[e].faction) faction_rev[e][fa] = pair;
    }
    std::vector<int> mark_of(H.n(), -1);
    for (size_t k = 0; k < tl.marks.size(); ++k)
        for (StateId h = 0; h < H.n(); ++h)
            if (tl.to_tilde[h] == tl.marks[k].t_d) mark_of[h] = (int)k;
    std::vector<StateId> plain_state(H.n(), -1);
    for (StateId s = 0; s < R.n(); ++s)
        if (module_of[s] < 0) plain_state[red.hat.to_hat[s]] = s;

    // Blended rows of the almost-sure witness on the reduced model.
    auto reduced_row = [&](StateId x) {
        std::map<ActionId, Rat> row;
        for (int i = 0; i < 2; ++i) {
            auto it = core.values[i].rows.find(x);
            if (it == core.values[i].rows.end()) continue;
            for (const auto& [a, w] : it->second) row[a] += w;
        }
        Rat total = 0;
        for (const auto& [a, w] : row) total += w;
        if (sgn(total) > 0)
            for (auto& [a, w] : row) w /= total;
        return row;
    };

    Rat pmin = 1;
    for (int e = 0; e < 2; ++e)
        for (const auto& [key, dist] : H.delta[e])
            for (const auto& [t, q] : dist.p)
                if (q < pmin) pmin = q;
    const long rounds = counter_rounds(eps, pmin);

    // Pairs of each merged component whose other-environment support leaves it.
    std::vector<std::set<std::pair<StateId, ActionId>>> escapes(tl.marks.size());
    for (size_t k = 0; k < tl.marks.size(); ++k)
        for (const auto& [h, acts] : tl.marks[k].ec.actions)
            for (ActionId a : acts)
                for (const auto& [t, q] : H.dist(3 - tl.marks[k].env, h, a).p)
                    if (!tl.marks[k].ec.states.count(t)) {
                        escapes[k].insert({h, a});
                        break;
                    }

    StrategyMachine sm;
    auto add = [&](const std::string& name) {
        sm.memory_names.push_back(name);
        return (MemoryId)(sm.memory_names.size() - 1);
    };
    std::array<MemoryId, 2> opt_mem{add("opt1"), add("opt2")};
    MemoryId fwd = add("follow");

    for (int i = 0; i < 2; ++i) {
        MemorylessRows rows = max_reach_values(env_mdp(R, i + 1), red.revealed.phi.states).rows;
        for (StateId s = 0; s < R.n(); ++s) {
            std::map<ActionId, Rat> row;
            auto it = rows.find(s);
            if (it != rows.end() && !it->second.empty())
                row = it->second;
            else
                for (ActionId a : R.enabled[s]) row[a] = rat(1, (long)R.enabled[s].size());
            sm.next_action[{s, opt_mem[i]}] = row;
            for (const auto& [a, q] : row) sm.update[{a, s, opt_mem[i]}] = {{opt_mem[i], Rat(1)}};
        }
    }

    std::vector<MemoryId> sampler_entry(red.hat.modules.size(), -1);
    for (size_t e = 0; e < red.hat.modules.size(); ++e) {
        const auto& mod = red.hat.modules[e];
        if (!mod.dec.distinguishing || mark_of[mod.s_d] >= 0) continue;
        sampler_entry[e] = detail::sampler_block(sm, mod.dec.ec.actions, sampler_config(R, mod.dec, eps),
                                                 opt_mem, "@" + H.state_names[mod.s_d]);
    }

    std::vector<std::vector<MemoryId>> watch(tl.marks.size());
    for (size_t k = 0; k < tl.marks.size(); ++k)
        for (long c = 0; c < rounds; ++c)
            watch[k].push_back(add("watch(" + std::to_string(c) + ")@" +
                                   tl.model.state_names[tl.marks[k].t_d]));
    auto watch_mem = [&](int k, long c) {
        return c >= rounds ? opt_mem[tl.marks[k].env - 1] : watch[k][c];
    };

    // Walk to a frontier state of a module, play its frontier action, then
    // hand control to the given return memory.
    std::map<std::tuple<int, StateId, ActionId, MemoryId>, MemoryId> steer_ids;
    std::map<std::pair<int, StateId>, std::map<StateId, ActionId>> routes;
    auto steer = [&](int e, StateId f, ActionId a, MemoryId ret) {
        auto key = std::make_tuple(e, f, a, ret);
        auto it = steer_ids.find(key);
        if (it != steer_ids.end()) return it->second;
        const auto& mod = red.hat.modules[e];
        MemoryId mem = add("go(" + R.state_names[f] + "." + R.action_names[a] + ")>" +
                           sm.memory_names[ret]);
        steer_ids[key] = mem;
        auto rit = routes.find({e, f});
        if (rit == routes.end()) {
            std::map<StateId, ActionId> choice;
            std::vector<int> members(mod.dec.ec.states.begin(), mod.dec.ec.states.end());
            detail::route_inside_class(env_mdp(R, 1), members, f, mod.dec.ec.actions, choice);
            rit = routes.emplace(std::pair<int, StateId>{e, f}, std::move(choice)).first;
        }
        for (StateId t : mod.dec.ec.states) {
            if (t == f) {
                sm.next_action[{t, mem}] = {{a, Rat(1)}};
                sm.update[{a, t, mem}] = {{ret, Rat(1)}};
            } else {
                ActionId w = rit->second.at(t);
                sm.next_action[{t, mem}] = {{w, Rat(1)}};
                sm.update[{w, t, mem}] = {{mem, Rat(1)}};
            }
        }
        return mem;
    };

    // Counting play at a position of merged component k holding count c in
    // memory mem: at a plain member play its component actions uniformly and
    // bump the count on escape-capable pairs; at a module member take one
    // uniform step inside while drawing the next frontier dispatch uniformly
    // from the component's pairs at the contracted state.
    auto emit_watch = [&](int k, long c, StateId s, MemoryId mem) {
        int e = module_of[s];
        if (e < 0) {
            StateId h = red.hat.to_hat[s];
            const auto& acts = tl.marks[k].ec.actions.at(h);
            std::map<ActionId, Rat> row;
            for (ActionId a : acts) row[a] = rat(1, (long)acts.size());
            sm.next_action[{s, mem}] = row;
            for (ActionId a : acts) {
                long c2 = c + (escapes[k].count({h, a}) ? 1 : 0);
                sm.update[{a, s, mem}] = {{watch_mem(k, c2), Rat(1)}};
            }
        } else {
            const auto& mod = red.hat.modules[e];
            const auto& tau = tl.marks[k].ec.actions.at(mod.s_d);
            std::map<MemoryId, Rat> draw;
            for (ActionId fa : tau) {
                auto [f, a0] = faction_rev[e].at(fa);
                long c2 = c + (escapes[k].count({mod.s_d, fa}) ? 1 : 0);
                draw[steer(e, f, a0, watch_mem(k, c2))] += rat(1, (long)tau.size());
            }
            const auto& inside = mod.dec.ec.actions.at(s);
            std::map<ActionId, Rat> row;
            for (ActionId a : inside) row[a] = rat(1, (long)inside.size());
            sm.next_action[{s, mem}] = row;
            for (ActionId a : inside) sm.update[{a, s, mem}] = draw;
        }
    };

    for (size_t k = 0; k < tl.marks.size(); ++k)
        for (long c = 0; c < rounds; ++c)
            for (StateId h : tl.marks[k].ec.states) {
                if (plain_state[h] >= 0)
                    emit_watch((int)k, c, plain_state[h], watch[k][c]);
                else
                    for (StateId s : red.hat.modules[module_by_sd.at(h)].dec.ec.states)
                        emit_watch((int)k, c, s, watch[k][c]);
            }

    for (StateId s = 0; s < R.n(); ++s) {
        int e = module_of[s];
        StateId h = e < 0 ? red.hat.to_hat[s] : red.hat.modules[e].s_d;
        int k = mark_of[h];
        if (k >= 0) {
            if (rounds == 0) {
                MemoryId om = opt_mem[tl.marks[k].env - 1];
                sm.next_action[{s, fwd}] = sm.next_action.at({s, om});
                for (const auto& [a, q] : sm.next_action.at({s, fwd}))
                    sm.update[{a, s, fwd}] = {{om, Rat(1)}};
            } else {
                emit_watch(k, 0, s, fwd);
            }
            continue;
        }
        if (e >= 0) {
            const auto& mod = red.hat.modules[e];
            if (mod.dec.distinguishing) {
                MemoryId entry = sampler_entry[e];
                sm.next_action[{s, fwd}] = sm.next_action.at({s, entry});
                for (const auto& [a, q] : sm.next_action.at({s, fwd}))
                    sm.update[{a, s, fwd}] = sm.update.at({a, s, entry});
            } else {
                StateId x = tl.to_tilde[h];
                std::map<MemoryId, Rat> draw;
                for (const auto& [fa, w] : reduced_row(x)) {
                    if (fa == mod.stay)
                        throw std::logic_error("internal error: reachability witness stays confined");
                    auto [f, a0] = faction_rev[e].at(fa);
                    draw[steer(e, f, a0, fwd)] += w;
                }
                if (draw.empty())
                    for (const auto& [pair, fa] : mod.faction)
                        draw[steer(e, pair.first, pair.second, fwd)] += rat(1, (long)mod.faction.size());
                const auto& inside = mod.dec.ec.actions.at(s);
                std::map<ActionId, Rat> row;
                for (ActionId a : inside) row[a] = rat(1, (long)inside.size());
                sm.next_action[{s, fwd}] = row;
                for (ActionId a : inside)
                    sm.update[{a, s, fwd}] = draw.empty() ? std::map<MemoryId, Rat>{{fwd, Rat(1)}} : draw;
            }
            continue;
        }
        StateId x = tl.to_tilde[h];
        std::map<ActionId, Rat> row = reduced_row(x);
        if (row.empty())
            for (ActionId a : R.enabled[s]) row[a] = rat(1, (long)R.enabled[s].size());
        sm.next_action[{s, fwd}] = row;
        for (const auto& [a, q] : row) sm.update[{a, s, fwd}] = {{fwd, Rat(1)}};
    }
    sm.init = {{fwd, Rat(1)}};

    StrategyMachine out = transport_strategy(red.absorbed, red.absorbed_phi, sm);
    if (s0 >= 0) {
        WitnessReport rep = witness_check(m, phi, out, s0, 1 - eps);
        if (!rep.pass)
            throw std::logic_error("internal error: limit-sure strategy misses its tolerance");
    }
    return out;
}

}  // namespace memdp
