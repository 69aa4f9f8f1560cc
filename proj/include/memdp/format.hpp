#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "memdp/model.hpp"
#include "memdp/strategy.hpp"

namespace memdp {

namespace detail {
inline std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string t;
    while (in >> t) {
        if (t[0] == '#') break;
        out.push_back(t);
    }
    return out;
}
}  // namespace detail

// Text format, version 1 (grammar documented in the README):
//   states <id>+ / actions <id>+
//   exactly one of: target <id>+ | safe <id>* | priority <id>=<nat> ...
//   optional: revealed1 <id>* / revealed2 <id>*
//   env <1|2> followed by lines: <state> <action> <state> <prob>
// Probabilities are p/q or decimal literals; '#' starts a comment.
inline std::pair<Memdp, std::optional<Objective>> parse_memdp_text(const std::string& text) {
    MemdpBuilder b;
    Objective phi;
    bool have_objective = false;
    std::map<std::string, int> priority_by_name;
    std::vector<std::string> r1, r2, target_names, safe_names;
    ObjectiveKind kind = ObjectiveKind::Reach;
    int env = 0;
    std::set<std::tuple<int, StateId, ActionId, StateId>> seen_edges;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool decls_done = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = detail::tokens_of(line);
        if (tok.empty()) continue;
        const std::string& head = tok[0];
        if (head == "states") {
            for (size_t i = 1; i < tok.size(); ++i) b.state(tok[i]);
            decls_done = true;
        } else if (head == "actions") {
            for (size_t i = 1; i < tok.size(); ++i) b.action(tok[i]);
        } else if (head == "target" || head == "safe") {
            if (have_objective) throw SyntaxError(lineno, "objective declared twice");
            have_objective = true;
            kind = head == "target" ? ObjectiveKind::Reach : ObjectiveKind::Safety;
            auto& names = head == "target" ? target_names : safe_names;
            names.assign(tok.begin() + 1, tok.end());
        } else if (head == "priority") {
            if (have_objective) throw SyntaxError(lineno, "objective declared twice");
            have_objective = true;
            kind = ObjectiveKind::Parity;
            for (size_t i = 1; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string::npos) throw SyntaxError(lineno, "expected <state>=<nat>");
                std::string name = tok[i].substr(0, eq), val = tok[i].substr(eq + 1);
                auto q = rat_parse(val);
                if (!q || q->get_den() != 1 || sgn(*q) < 0)
                    throw SyntaxError(lineno, "priority must be a natural number");
                priority_by_name[name] = static_cast<int>(q->get_num().get_si());
            }
        } else if (head == "revealed1" || head == "revealed2") {
            auto& names = head == "revealed1" ? r1 : r2;
            names.insert(names.end(), tok.begin() + 1, tok.end());
        } else if (head == "env") {
            if (tok.size() != 2 || (tok[1] != "1" && tok[1] != "2"))
                throw SyntaxError(lineno, "expected env 1 or env 2");
            env = tok[1] == "1" ? 1 : 2;
        } else {
            if (env == 0) throw SyntaxError(lineno, "transition before env declaration");
            if (tok.size() != 4)
                throw SyntaxError(lineno, "expected <state> <action> <state> <prob>");
            if (!decls_done) throw SyntaxError(lineno, "transition before states declaration");
            if (!b.sidx.count(tok[0]) || !b.sidx.count(tok[2]))
                throw ValidationError("line " + std::to_string(lineno) + ": unknown state");
            if (!b.aidx.count(tok[1]))
                throw ValidationError("line " + std::to_string(lineno) + ": unknown action");
            if (tok[3].find('e') != std::string::npos || tok[3].find('E') != std::string::npos)
                throw SyntaxError(lineno, "scientific notation rejected");
            auto q = rat_parse(tok[3]);
            if (!q) throw SyntaxError(lineno, "bad probability literal " + tok[3]);
            StateId s = b.sidx[tok[0]], t = b.sidx[tok[2]];
            ActionId a = b.aidx[tok[1]];
            if (!seen_edges.insert({env, s, a, t}).second)
                throw SyntaxError(lineno, "duplicate transition");
            if (sgn(*q) < 0) throw ValidationError("negative probability");
            b.edge_ids(env, s, a, t, *q);
        }
    }
    Memdp m = b.finish();
    auto resolve = [&](const std::vector<std::string>& names) {
        std::set<StateId> out;
        for (auto& nm : names) {
            if (!b.sidx.count(nm)) throw ValidationError("objective names unknown state " + nm);
            out.insert(b.sidx.at(nm));
        }
        return out;
    };
    phi.kind = kind;
    if (kind == ObjectiveKind::Reach) phi.states = resolve(target_names);
    if (kind == ObjectiveKind::Safety) phi.states = resolve(safe_names);
    if (kind == ObjectiveKind::Parity) {
        phi.priority.assign(m.n(), -1);
        for (auto& [nm, p] : priority_by_name) {
            if (!b.sidx.count(nm)) throw ValidationError("priority names unknown state " + nm);
            phi.priority[b.sidx.at(nm)] = p;
        }
        for (int s = 0; s < m.n(); ++s)
            if (phi.priority[s] < 0)
                throw ValidationError("priority map not total: missing " + m.state_names[s]);
    }
    if (!r1.empty() || !r2.empty()) {
        m.revealed.assign(m.n(), 0);
        for (auto& nm : r1) m.revealed[m.state(nm)] = 1;
        for (auto& nm : r2) m.revealed[m.state(nm)] = 2;
    }
    if (!have_objective) return {m, std::nullopt};
    return {m, phi};
}

// Parse plus full validation; the objective is required here.
inline std::pair<Memdp, Objective> parse_memdp(const std::string& text) {
    auto [m, phi] = parse_memdp_text(text);
    if (!phi) throw ValidationError("missing objective (target, safe, or priority)");
    auto bad = validate(m, *phi);
    if (!bad.empty()) throw ValidationError(bad.front());
    return {m, *phi};
}

inline std::string serialize_memdp(const Memdp& m, const Objective& phi) {
    std::ostringstream out;
    out << "states";
    for (auto& s : m.state_names) out << " " << s;
    out << "\nactions";
    for (auto& a : m.action_names) out << " " << a;
    out << "\n";
    switch (phi.kind) {
        case ObjectiveKind::Reach:
            out << "target";
            for (StateId s : phi.states) out << " " << m.state_names[s];
            out << "\n";
            break;
        case ObjectiveKind::Safety:
            out << "safe";
            for (StateId s : phi.states) out << " " << m.state_names[s];
            out << "\n";
            break;
        case ObjectiveKind::Parity:
            out << "priority";
            for (int s = 0; s < m.n(); ++s)
                out << " " << m.state_names[s] << "=" << phi.priority[s];
            out << "\n";
            break;
    }
    if (!m.revealed.empty()) {
        for (int i = 1; i <= 2; ++i) {
            bool any = false;
            for (int s = 0; s < m.n(); ++s) any |= m.revealed[s] == i;
            if (!any) continue;
            out << "revealed" << i;
            for (int s = 0; s < m.n(); ++s)
                if (m.revealed[s] == i) out << " " << m.state_names[s];
            out << "\n";
        }
    }
    for (int e = 1; e <= 2; ++e) {
        out << "env " << e << "\n";
        for (int s = 0; s < m.n(); ++s)
            for (ActionId a : m.enabled[s])
                for (auto& [t, q] : m.dist(e, s, a).p)
                    out << m.state_names[s] << " " << m.action_names[a] << " "
                        << m.state_names[t] << " " << rat_str(q) << "\n";
    }
    return out.str();
}

// Strategy format, version 1:
//   memory <id>+
//   init <mem>=<prob> ...
//   act <state> <mem> <action> <mem'> <prob>   (joint action and update mass)
inline StrategyMachine parse_strategy(const std::string& text, const Memdp& model) {
    StrategyMachine sm;
    std::map<std::string, MemoryId> midx;
    std::map<std::tuple<StateId, MemoryId, ActionId, MemoryId>, Rat> joint;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = detail::tokens_of(line);
        if (tok.empty()) continue;
        if (tok[0] == "memory") {
            for (size_t i = 1; i < tok.size(); ++i) {
                if (midx.count(tok[i])) throw SyntaxError(lineno, "duplicate memory id");
                midx[tok[i]] = static_cast<MemoryId>(sm.memory_names.size());
                sm.memory_names.push_back(tok[i]);
            }
        } else if (tok[0] == "init") {
            for (size_t i = 1; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string::npos) throw SyntaxError(lineno, "expected <mem>=<prob>");
                std::string nm = tok[i].substr(0, eq);
                auto q = rat_parse(tok[i].substr(eq + 1));
                if (!midx.count(nm)) throw ValidationError("init names unknown memory " + nm);
                if (!q) throw SyntaxError(lineno, "bad probability literal");
                if (sgn(*q) > 0) sm.init[midx[nm]] += *q;
            }
        } else if (tok[0] == "act") {
            if (tok.size() != 6)
                throw SyntaxError(lineno, "expected act <state> <mem> <action> <mem'> <prob>");
            auto q = rat_parse(tok[5]);
            if (!q) throw SyntaxError(lineno, "bad probability literal");
            if (!midx.count(tok[2]) || !midx.count(tok[4]))
                throw ValidationError("act names unknown memory");
            StateId s;
            ActionId a;
            try {
                s = model.state(tok[1]);
                a = model.action(tok[3]);
            } catch (const std::out_of_range& e) {
                throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
            }
            auto key = std::make_tuple(s, midx[tok[2]], a, midx[tok[4]]);
            if (joint.count(key)) throw SyntaxError(lineno, "duplicate act entry");
            if (sgn(*q) > 0) joint[key] = *q;
        } else {
            throw SyntaxError(lineno, "unknown directive " + tok[0]);
        }
    }
    for (auto& [key, q] : joint) {
        auto [s, m0, a, m1] = key;
        sm.next_action[{s, m0}][a] += q;
    }
    for (auto& [key, q] : joint) {
        auto [s, m0, a, m1] = key;
        sm.update[{a, s, m0}][m1] = q / sm.next_action[{s, m0}][a];
    }
    auto bad = validate_strategy(model, sm);
    if (!bad.empty()) throw ValidationError(bad.front());
    return sm;
}

inline std::string serialize_strategy(const StrategyMachine& sm, const Memdp& model) {
    std::ostringstream out;
    out << "memory";
    for (auto& nm : sm.memory_names) out << " " << nm;
    out << "\ninit";
    for (auto& [m0, q] : sm.init) out << " " << sm.memory_names[m0] << "=" << rat_str(q);
    out << "\n";
    for (auto& [key, row] : sm.next_action) {
        auto [s, m0] = key;
        for (auto& [a, q] : row)
            for (auto& [m1, u] : sm.update_row(a, s, m0))
                out << "act " << model.state_names[s] << " " << sm.memory_names[m0] << " "
                    << model.action_names[a] << " " << sm.memory_names[m1] << " "
                    << rat_str(q * u) << "\n";
    }
    return out.str();
}

}  // namespace memdp
