#pragma once

#include <algorithm>
#include <functional>
#include <queue>
#include <vector>

namespace memdp {

// Iterative Tarjan. Component ids are assigned in reverse topological order:
// every edge u -> v across components has comp[u] > comp[v].
struct SccResult {
    std::vector<int> comp;                  // node -> component id
    std::vector<std::vector<int>> members;  // component id -> nodes
};

inline SccResult scc_decompose(int n, const std::vector<std::vector<int>>& succ) {
    SccResult out;
    out.comp.assign(n, -1);
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int next_index = 0;

    struct Frame {
        int v;
        size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& [v, child] = call.back();
            if (child < succ[v].size()) {
                int w = succ[v][child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            } else {
                if (low[v] == index[v]) {
                    int cid = static_cast<int>(out.members.size());
                    out.members.emplace_back();
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        out.comp[w] = cid;
                        out.members[cid].push_back(w);
                        if (w == v) break;
                    }
                }
                int fin = v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[fin]);
            }
        }
    }
    return out;
}

inline std::vector<char> reachable_from(int n, const std::vector<std::vector<int>>& succ,
                                        const std::vector<int>& starts) {
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    for (int s : starts)
        if (!seen[s]) {
            seen[s] = 1;
            q.push(s);
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : succ[v])
            if (!seen[w]) {
                seen[w] = 1;
                q.push(w);
            }
    }
    return seen;
}

// Nodes that can reach `targets` along succ edges.
inline std::vector<char> can_reach(int n, const std::vector<std::vector<int>>& succ,
                                   const std::vector<int>& targets) {
    std::vector<std::vector<int>> pred(n);
    for (int v = 0; v < n; ++v)
        for (int w : succ[v]) pred[w].push_back(v);
    return reachable_from(n, pred, targets);
}

}  // namespace memdp
