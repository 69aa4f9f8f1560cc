#pragma once

#include <climits>
#include <functional>
#include <map>
#include <vector>

#include "memdp/graph.hpp"
#include "memdp/linalg.hpp"
#include "memdp/model.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

// Finite Markov chain with exact transition masses. Product chains label each
// node with the (state, memory) pair it came from and keep the action marginal
// chosen there.
struct ExplicitChain {
    std::vector<std::map<int, Rat>> rows;
    std::map<int, Rat> initial;
    std::vector<StateId> state_of;
    std::vector<MemoryId> mem_of;
    std::vector<std::map<ActionId, Rat>> action_marginal;

    int n() const { return static_cast<int>(rows.size()); }
};

inline std::vector<std::vector<int>> chain_graph(const ExplicitChain& c) {
    std::vector<std::vector<int>> succ(c.n());
    for (int v = 0; v < c.n(); ++v)
        for (auto& [w, q] : c.rows[v]) succ[v].push_back(w);
    return succ;
}

// Exact absorption probabilities into `target` (targets treated as absorbing).
// Solved one strongly connected component at a time, sinks first, so only
// small linear systems appear even on long counter chains.
inline std::vector<Rat> chain_reach_probs(const ExplicitChain& c, const std::vector<char>& target) {
    const int n = c.n();
    std::vector<std::map<int, Rat>> rows = c.rows;
    for (int v = 0; v < n; ++v)
        if (target[v]) rows[v] = {{v, Rat(1)}};
    std::vector<std::vector<int>> succ(n);
    for (int v = 0; v < n; ++v)
        for (auto& [w, q] : rows[v]) succ[v].push_back(w);

    SccResult scc = scc_decompose(n, succ);
    std::vector<Rat> val(n, 0);
    for (size_t cid = 0; cid < scc.members.size(); ++cid) {
        const auto& nodes = scc.members[cid];
        bool closed = true;
        for (int v : nodes)
            for (auto& [w, q] : rows[v]) closed &= scc.comp[w] == static_cast<int>(cid);
        if (nodes.size() == 1 && target[nodes[0]]) {
            val[nodes[0]] = 1;
            continue;
        }
        if (closed) continue;  // bottom component without target: probability 0
        std::map<int, int> local;
        for (int v : nodes) local[v] = static_cast<int>(local.size());
        const int k = static_cast<int>(nodes.size());
        std::vector<std::vector<Rat>> A(k, std::vector<Rat>(k, 0));
        std::vector<Rat> b(k, 0);
        for (int v : nodes) {
            int i = local[v];
            A[i][i] = 1;
            for (auto& [w, q] : rows[v]) {
                if (local.count(w))
                    A[i][local[w]] -= q;
                else
                    b[i] += q * val[w];
            }
        }
        std::vector<Rat> x = solve_linear(std::move(A), std::move(b));
        for (int v : nodes) val[v] = x[local[v]];
    }
    return val;
}

// Bottom strongly connected components of the chain as node lists.
inline std::vector<std::vector<int>> chain_bsccs(const ExplicitChain& c) {
    SccResult scc = scc_decompose(c.n(), chain_graph(c));
    std::vector<std::vector<int>> out;
    for (size_t cid = 0; cid < scc.members.size(); ++cid) {
        bool closed = true;
        for (int v : scc.members[cid])
            for (auto& [w, q] : c.rows[v]) closed &= scc.comp[w] == static_cast<int>(cid);
        if (closed) out.push_back(scc.members[cid]);
    }
    return out;
}

struct ChainProbs {
    std::vector<Rat> per_node;
    Rat total;
};

inline ChainProbs chain_weighted(const ExplicitChain& c, std::vector<Rat> per_node) {
    Rat total = 0;
    for (auto& [v, q] : c.initial) total += q * per_node[v];
    return {std::move(per_node), total};
}

// Probability of satisfying the objective, per node and from the initial
// distribution. Reachability and safety reduce to absorption; the parity value
// is the probability of ending in a bottom component whose minimum priority is
// even.
inline ChainProbs chain_objective_prob(const ExplicitChain& c, const Objective& phi) {
    const int n = c.n();
    std::vector<char> tgt(n, 0);
    switch (phi.kind) {
        case ObjectiveKind::Reach:
            for (int v = 0; v < n; ++v) tgt[v] = phi.states.count(c.state_of[v]) > 0;
            return chain_weighted(c, chain_reach_probs(c, tgt));
        case ObjectiveKind::Safety: {
            for (int v = 0; v < n; ++v) tgt[v] = phi.states.count(c.state_of[v]) == 0;
            auto bad = chain_reach_probs(c, tgt);
            std::vector<Rat> good(n);
            for (int v = 0; v < n; ++v) good[v] = 1 - bad[v];
            return chain_weighted(c, std::move(good));
        }
        case ObjectiveKind::Parity: {
            for (auto& nodes : chain_bsccs(c)) {
                int best = INT_MAX;
                for (int v : nodes) best = std::min(best, phi.priority[c.state_of[v]]);
                if (best % 2 == 0)
                    for (int v : nodes) tgt[v] = 1;
            }
            return chain_weighted(c, chain_reach_probs(c, tgt));
        }
    }
    throw std::logic_error("unreachable");
}

// Chain induced by a strategy machine on a single-environment MDP, restricted
// to the part reachable from s0.
inline ExplicitChain product_chain(const Mdp& mdp, const StrategyMachine& sm, StateId s0) {
    ExplicitChain c;
    std::map<std::pair<StateId, MemoryId>, int> id;
    std::vector<std::pair<StateId, MemoryId>> todo;
    auto node = [&](StateId s, MemoryId m) {
        auto it = id.find({s, m});
        if (it != id.end()) return it->second;
        int v = static_cast<int>(id.size());
        id[{s, m}] = v;
        c.state_of.push_back(s);
        c.mem_of.push_back(m);
        todo.push_back({s, m});
        return v;
    };
    for (auto& [m0, q] : sm.init) c.initial[node(s0, m0)] += q;
    for (size_t next = 0; next < todo.size(); ++next) {
        auto [s, m] = todo[next];
        auto it = sm.next_action.find({s, m});
        if (it == sm.next_action.end())
            throw ValidationError("strategy undefined at reached state " +
                                  mdp.state_names[s]);
        std::map<int, Rat> row;
        for (auto& [a, q] : it->second) {
            const auto& upd = sm.update_row(a, s, m);
            for (auto& [t, p] : mdp.dist(s, a).p)
                for (auto& [m2, u] : upd) row[node(t, m2)] += q * p * u;
        }
        int v = id.at({s, m});
        c.rows.resize(id.size());
        c.action_marginal.resize(id.size());
        c.rows[v] = std::move(row);
        c.action_marginal[v] = it->second;
    }
    c.rows.resize(id.size());
    c.action_marginal.resize(id.size());
    return c;
}

// Chain induced by memoryless stochastic rows; states without a row use the
// uniform distribution over enabled actions.
inline ExplicitChain rows_chain(const Mdp& mdp,
                                const std::map<StateId, std::map<ActionId, Rat>>& rows,
                                StateId s0) {
    ExplicitChain c;
    std::map<StateId, int> id;
    std::vector<StateId> todo;
    auto node = [&](StateId s) {
        auto it = id.find(s);
        if (it != id.end()) return it->second;
        int v = static_cast<int>(id.size());
        id[s] = v;
        c.state_of.push_back(s);
        c.mem_of.push_back(0);
        todo.push_back(s);
        return v;
    };
    c.initial[node(s0)] = 1;
    for (size_t next = 0; next < todo.size(); ++next) {
        StateId s = todo[next];
        std::map<ActionId, Rat> row;
        auto it = rows.find(s);
        if (it != rows.end() && !it->second.empty()) {
            row = it->second;
        } else {
            for (ActionId a : mdp.enabled[s])
                row[a] = rat(1, static_cast<long>(mdp.enabled[s].size()));
        }
        std::map<int, Rat> out;
        for (auto& [a, q] : row)
            for (auto& [t, p] : mdp.dist(s, a).p) out[node(t)] += q * p;
        int v = id.at(s);
        c.rows.resize(id.size());
        c.action_marginal.resize(id.size());
        c.rows[v] = std::move(out);
        c.action_marginal[v] = std::move(row);
    }
    c.rows.resize(id.size());
    c.action_marginal.resize(id.size());
    return c;
}

}  // namespace memdp
