#pragma once

// Bundled example instances. Each entry carries a small two-environment model,
// its objective, a designated start state, and the claims the test suite
// re-derives with the solvers. The CLI exposes the same data through
// `corpus list` and `corpus materialize`.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "memdp/format.hpp"
#include "memdp/model.hpp"

namespace memdp::corpus {

struct UnknownCorpusEntry : std::runtime_error {
    explicit UnknownCorpusEntry(const std::string& name)
        : std::runtime_error("unknown corpus entry: " + name) {}
};

struct Entry {
    std::string name;
    std::string summary;
    Memdp model;
    Objective phi;
    std::string start;
    // Claim key -> expected value, re-derived by the suite. Keys ending in
    // "@<state>" refer to that start state instead of the default one.
    std::vector<std::pair<std::string, std::string>> claims;
};

// Picking between two actions whose effects are swapped across environments.
// Only a randomizing strategy achieves the vector (1/2, 1/2).
inline Entry randomization_required() {
    MemdpBuilder b;
    b.state("s");
    b.state("t");
    b.state("u");
    b.edge(1, "s", "a", "u", 1);
    b.edge(2, "s", "a", "t", 1);
    b.edge(1, "s", "b", "t", 1);
    b.edge(2, "s", "b", "u", 1);
    b.loop("t");
    b.loop("u");
    Entry e;
    e.name = "randomization_required";
    e.summary = "2-action pick with swapped outcomes; only mixing achieves (1/2,1/2)";
    e.model = b.finish();
    e.phi = Objective::reach({b.sidx["u"]});
    e.start = "s";
    e.claims = {
        {"objective", "reach u"},
        {"almost_sure", "No"},
        {"limit_sure", "No"},
        {"pure_values", "(0,1) (1,0)"},
        {"quant_alpha", "1/2 1/2"},
        {"quant_feasible", "Yes"},
    };
    return e;
}

// One sampling round per play: action a at s is a coin whose bias depends on
// the environment; committing happens at u. The Pareto-optimal vector needs
// unbounded memory, and neither verdict is Yes.
inline Entry inf_memory() {
    MemdpBuilder b;
    b.state("s");
    b.state("t");
    b.state("u");
    b.state("v");
    b.state("w");
    b.edge(1, "s", "a", "t", rat(1, 2));
    b.edge(1, "s", "a", "u", rat(1, 2));
    b.edge(2, "s", "a", "t", rat(4, 5));
    b.edge(2, "s", "a", "u", rat(1, 5));
    b.edge(1, "t", "a", "s", 1);
    b.edge(2, "t", "a", "s", 1);
    b.edge(1, "u", "a", "w", 1);
    b.edge(2, "u", "a", "v", 1);
    b.edge(1, "u", "b", "v", 1);
    b.edge(2, "u", "b", "w", 1);
    b.loop("v");
    b.loop("w");
    Entry e;
    e.name = "inf_memory";
    e.summary = "same-support sampling action; Pareto point needs unbounded memory";
    e.model = b.finish();
    e.phi = Objective::reach({b.sidx["w"]});
    e.start = "s";
    e.claims = {
        {"objective", "reach w"},
        {"almost_sure", "No"},
        {"limit_sure", "No"},
        {"max_value_env1", "1"},
        {"max_value_env2", "1"},
    };
    return e;
}

// Sampling can be repeated: {s,t} is closed under a in both environments with
// different biases, so the environment can be learned to any confidence before
// committing with b or c. Limit-sure holds, almost-sure does not.
inline Entry unachievable() {
    MemdpBuilder b;
    b.state("s");
    b.state("t");
    b.state("u");
    b.state("v");
    b.edge(1, "s", "a", "s", rat(1, 2));
    b.edge(1, "s", "a", "t", rat(1, 2));
    b.edge(2, "s", "a", "s", rat(4, 5));
    b.edge(2, "s", "a", "t", rat(1, 5));
    b.edge(1, "t", "a", "s", 1);
    b.edge(2, "t", "a", "s", 1);
    b.edge(1, "s", "b", "u", 1);
    b.edge(2, "s", "b", "v", 1);
    b.edge(1, "s", "c", "v", 1);
    b.edge(2, "s", "c", "u", 1);
    b.loop("u");
    b.loop("v");
    Entry e;
    e.name = "unachievable";
    e.summary = "repeatable sampling loop {s,t}; limit-sure Yes, almost-sure No";
    e.model = b.finish();
    e.phi = Objective::reach({b.sidx["v"]});
    e.start = "s";
    e.claims = {
        {"objective", "reach v"},
        {"almost_sure", "No"},
        {"limit_sure", "Yes"},
        {"dec", "{s,t} distinguishing, self-landing bias 1/2 vs 4/5"},
    };
    return e;
}

// Minimal instance with a single 1-revealing edge into a non-absorbing state
// r of value 1/3, so normalization splits mass 1/2 into 1/6 toward the fresh
// winning sink and 1/3 toward the losing one.
inline Entry revealed_gadget() {
    MemdpBuilder b;
    b.state("s");
    b.state("r");
    b.state("g");
    b.state("h");
    b.edge(1, "s", "a", "g", rat(1, 2));
    b.edge(1, "s", "a", "r", rat(1, 2));
    b.edge(2, "s", "a", "g", 1);
    b.edge(1, "r", "a", "g", rat(1, 3));
    b.edge(1, "r", "a", "h", rat(2, 3));
    b.edge(2, "r", "a", "g", rat(1, 3));
    b.edge(2, "r", "a", "h", rat(2, 3));
    b.loop("g");
    b.loop("h");
    Entry e;
    e.name = "revealed_gadget";
    e.summary = "one revealing edge; normalization splits its mass 1/6 win, 1/3 lose";
    e.model = b.finish();
    e.phi = Objective::reach({b.sidx["g"]});
    e.start = "s";
    e.claims = {
        {"objective", "reach g"},
        {"almost_sure", "No"},
        {"limit_sure", "No"},
        {"max_value_env1", "2/3"},
        {"max_value_env2", "1"},
        {"reveal_split", "top1 1/6, bot1 1/3 on (s,a)"},
    };
    return e;
}

// Almost-sure positive instance: both self-looping actions at s make progress
// in exactly one environment, so the uniform mix wins almost surely in both
// while no pure memoryless strategy does.
inline Entry aspositive() {
    MemdpBuilder b;
    b.state("s");
    b.state("t");
    b.state("u");
    b.edge(1, "s", "a", "s", 1);
    b.edge(2, "s", "a", "t", 1);
    b.edge(1, "s", "b", "u", 1);
    b.edge(2, "s", "b", "s", 1);
    b.loop("t");
    b.loop("u");
    Entry e;
    e.name = "aspositive";
    e.summary = "uniform mix at s wins almost surely in both environments";
    e.model = b.finish();
    e.phi = Objective::reach({b.sidx["t"], b.sidx["u"]});
    e.start = "s";
    e.claims = {
        {"objective", "reach {t,u}"},
        {"almost_sure", "Yes"},
        {"limit_sure", "Yes"},
        {"witness_vector", "1 1"},
        {"pure_memoryless_witness", "No"},
    };
    return e;
}

// Already in revealed form. {s,t} is an end component of environment 2 whose
// uniform play wins almost surely in environment 1, so contracting it yields a
// state that is a target for both environments: limit-sure Yes from s even
// though almost-sure fails.
inline Entry lsreach() {
    MemdpBuilder b;
    b.state("s");
    b.state("t");
    b.state("u");
    b.state("v");
    b.state("w");
    b.state("x");
    b.edge(1, "s", "a", "t", rat(1, 2));
    b.edge(1, "s", "a", "u", rat(1, 2));
    b.edge(2, "s", "a", "t", 1);
    b.edge(1, "s", "b", "v", 1);
    b.edge(2, "s", "b", "v", 1);
    b.edge(1, "t", "a", "s", 1);
    b.edge(2, "t", "a", "s", 1);
    b.edge(1, "v", "a", "x", 1);
    b.edge(2, "v", "a", "w", 1);
    b.loop("u");
    b.loop("w");
    b.loop("x");
    Entry e;
    e.name = "lsreach";
    e.summary = "good end component {s,t}; limit-sure Yes from s, almost-sure No";
    e.model = b.finish();
    e.model.revealed.assign(e.model.n(), 0);
    e.model.revealed[b.sidx["u"]] = 1;
    e.model.revealed[b.sidx["x"]] = 1;
    e.model.revealed[b.sidx["w"]] = 2;
    e.phi = Objective::reach({b.sidx["u"], b.sidx["w"]});
    e.start = "s";
    e.claims = {
        {"objective", "reach {u,w}"},
        {"almost_sure", "No"},
        {"limit_sure", "Yes"},
        {"almost_sure@v", "No"},
        {"limit_sure@v", "No"},
        {"good_ec", "{s,t} in environment 2, both target sets gain its contraction"},
    };
    return e;
}

// Parity instance with one distinguishing and one non-distinguishing
// component. Priorities are 0 at s4 and s9, 1 elsewhere. Limit-sure holds
// exactly from s2, s3, s4, s9.
inline Entry parity() {
    MemdpBuilder b;
    for (int i = 1; i <= 9; ++i) b.state("s" + std::to_string(i));
    for (int env = 1; env <= 2; ++env) {
        b.edge(env, "s1", "a", "s2", rat(1, 2));
        b.edge(env, "s1", "a", "s6", rat(1, 2));
        b.edge(env, "s3", "a", "s2", 1);
        b.edge(env, "s6", "a", "s6", rat(1, 2));
        b.edge(env, "s6", "a", "s7", rat(1, 2));
        b.edge(env, "s7", "a", "s6", 1);
        b.edge(env, "s7", "c", "s7", rat(1, 2));
        b.edge(env, "s7", "c", "s8", rat(1, 2));
    }
    b.edge(1, "s2", "a", "s2", rat(1, 2));
    b.edge(1, "s2", "a", "s3", rat(1, 2));
    b.edge(2, "s2", "a", "s2", rat(4, 5));
    b.edge(2, "s2", "a", "s3", rat(1, 5));
    b.edge(1, "s3", "b", "s4", 1);
    b.edge(2, "s3", "b", "s5", 1);
    b.edge(1, "s3", "c", "s5", 1);
    b.edge(2, "s3", "c", "s4", 1);
    b.edge(1, "s7", "b", "s5", 1);
    b.edge(2, "s7", "b", "s4", 1);
    b.edge(1, "s8", "a", "s6", 1);
    b.edge(2, "s8", "a", "s6", rat(1, 2));
    b.edge(2, "s8", "a", "s9", rat(1, 2));
    b.loop("s4");
    b.loop("s5");
    b.loop("s9");
    Entry e;
    e.name = "parity";
    e.summary = "parity with a distinguishing and a non-distinguishing component";
    e.model = b.finish();
    std::vector<int> pr(e.model.n(), 1);
    pr[b.sidx["s4"]] = 0;
    pr[b.sidx["s9"]] = 0;
    e.phi = Objective::parity(pr);
    e.start = "s1";
    e.claims = {
        {"objective", "parity, even at s4 and s9"},
        {"almost_sure@s2", "No"},
        {"limit_sure@s1", "No"},
        {"limit_sure@s2", "Yes"},
        {"limit_sure@s3", "Yes"},
        {"limit_sure@s4", "Yes"},
        {"limit_sure@s5", "No"},
        {"limit_sure@s6", "No"},
        {"limit_sure@s7", "No"},
        {"limit_sure@s8", "No"},
        {"limit_sure@s9", "Yes"},
    };
    return e;
}

inline const std::vector<Entry>& all() {
    static const std::vector<Entry> entries = {
        randomization_required(), inf_memory(),  unachievable(), revealed_gadget(),
        aspositive(),             lsreach(),     parity(),
    };
    return entries;
}

inline const Entry& get(const std::string& name) {
    for (const Entry& e : all())
        if (e.name == name) return e;
    throw UnknownCorpusEntry(name);
}

inline std::string model_text(const Entry& e) { return serialize_memdp(e.model, e.phi); }

inline std::string manifest_text(const Entry& e) {
    std::string out;
    out += "name " + e.name + "\n";
    out += "summary " + e.summary + "\n";
    out += "start " + e.start + "\n";
    for (auto& [k, v] : e.claims) out += k + " " + v + "\n";
    return out;
}

}  // namespace memdp::corpus
