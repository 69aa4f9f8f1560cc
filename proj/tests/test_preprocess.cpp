#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "memdp/chain.hpp"
#include "memdp/preprocess.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace memdp;

namespace {

Memdp random_memdp(std::mt19937& rng, int ns, int na) {
    Mdp a = oracles::random_mdp(rng, ns, na);
    Mdp b = oracles::random_mdp(rng, ns, na);
    Memdp m;
    m.state_names = a.state_names;
    m.action_names = a.action_names;
    m.enabled = a.enabled;
    m.delta[0] = a.delta;
    m.delta[1] = b.delta;
    return m;
}

Objective random_objective(std::mt19937& rng, int ns, int kind3) {
    std::uniform_int_distribution<int> pick(0, ns - 1);
    if (kind3 == 0) return Objective::reach({pick(rng)});
    if (kind3 == 1) {
        std::set<StateId> safe;
        for (StateId s = 0; s < ns; ++s)
            if (rng() % 3) safe.insert(s);
        return Objective::safety(safe);
    }
    std::vector<int> pr(ns);
    std::uniform_int_distribution<int> pd(0, 2);
    for (auto& p : pr) p = pd(rng);
    return Objective::parity(pr);
}

}  // namespace

TEST_CASE("union mdp mixes support uniformly") {
    auto [m, phi] = fixtures::coin_pick();
    Mdp u = union_mdp(m);
    StateId s = m.state("s"), t = m.state("t"), wait = m.state("u");
    ActionId a = m.action("a");
    const Distribution& d = u.delta.at({s, a});
    CHECK(d.at(t) == rat(1, 2));
    CHECK(d.at(wait) == rat(1, 2));
    CHECK(u.delta.at({t, a}).is_point_on(t));
}

TEST_CASE("absorbing objective states keeps rows elsewhere") {
    auto [m, phi] = fixtures::coin_pick();
    auto [m2, phi2] = absorb_objective_states(m, phi);
    CHECK(phi2 == phi);
    StateId t = m.state("t");
    for (ActionId a : m2.enabled[t]) {
        CHECK(m2.dist(1, t, a).is_point_on(t));
        CHECK(m2.dist(2, t, a).is_point_on(t));
    }
    CHECK(m2.dist(1, m.state("s"), m.action("a")) ==
          m.dist(1, m.state("s"), m.action("a")));

    Objective sf = Objective::safety({m.state("s"), m.state("t")});
    auto [m3, sf2] = absorb_objective_states(m, sf);
    StateId u = m.state("u");
    CHECK(m3.dist(1, u, m3.enabled[u].front()).is_point_on(u));
    ActionId ta = m3.enabled[t].front();
    CHECK(m3.dist(2, t, ta) == m.dist(2, t, ta));

    Objective pr = Objective::parity({1, 0, 1});
    auto [m4, pr2] = absorb_objective_states(m, pr);
    CHECK(m4 == m);
}

TEST_CASE("absorbing objective states preserves per-env values") {
    std::mt19937 rng(101);
    for (int round = 0; round < 30; ++round) {
        Memdp m = random_memdp(rng, 5, 2);
        Objective phi = random_objective(rng, 5, round % 2);
        auto [m2, phi2] = absorb_objective_states(m, phi);
        for (int env = 1; env <= 2; ++env) {
            auto before = optimal_value(env_mdp(m, env), phi).value;
            auto after = optimal_value(env_mdp(m2, env), phi2).value;
            CHECK(before == after);
        }
    }
}

TEST_CASE("revealed form of the coin model") {
    auto [m0, phi0] = fixtures::coin_pick();
    auto [m, phi] = absorb_objective_states(m0, phi0);
    RevealResult rr = to_revealed_form(m, phi);

    CHECK(validate(rr.model).empty());
    CHECK(validate(rr.model, rr.phi).empty());
    REQUIRE(rr.top[0] >= 0);
    REQUIRE(rr.top[1] >= 0);
    REQUIRE(rr.bot[0] >= 0);
    REQUIRE(rr.bot[1] >= 0);

    StateId s = m.state("s");
    ActionId a = m.action("a"), b = m.action("b");
    CHECK(rr.model.dist(1, s, a).is_point_on(rr.bot[0]));
    CHECK(rr.model.dist(2, s, a).is_point_on(rr.top[1]));
    CHECK(rr.model.dist(1, s, b).is_point_on(rr.top[0]));
    CHECK(rr.model.dist(2, s, b).is_point_on(rr.bot[1]));

    CHECK(rr.phi.states.count(m.state("t")));
    CHECK(rr.phi.states.count(rr.top[0]));
    CHECK(rr.phi.states.count(rr.top[1]));
    CHECK(!rr.phi.states.count(rr.bot[0]));

    CHECK(rr.model.revealed[rr.top[0]] == 1);
    CHECK(rr.model.revealed[rr.bot[1]] == 2);
    CHECK(rr.model.revealed[s] == 0);

    auto w = revealed_winning(rr.model, rr.phi);
    CHECK(w[0] == std::set<StateId>{rr.top[0]});
    CHECK(w[1] == std::set<StateId>{rr.top[1]});
}

TEST_CASE("revealed form preserves per-env optimal values") {
    std::mt19937 rng(211);
    for (int round = 0; round < 60; ++round) {
        Memdp m0 = random_memdp(rng, 5, 2);
        Objective phi0 = random_objective(rng, 5, round % 3);
        auto [m, phi] = absorb_objective_states(m0, phi0);
        RevealResult rr = to_revealed_form(m, phi);
        CHECK(validate(rr.model).empty());
        for (int env = 1; env <= 2; ++env) {
            auto before = optimal_value(env_mdp(m, env), phi).value;
            CHECK(before == rr.values[env - 1]);
            auto after = optimal_value(env_mdp(rr.model, env), rr.phi).value;
            for (StateId s = 0; s < m.n(); ++s) CHECK(before[s] == after[s]);
        }
    }
}

TEST_CASE("annotation inference recovers the revealed tags") {
    auto [m0, phi0] = fixtures::coin_pick();
    auto [m, phi] = absorb_objective_states(m0, phi0);
    RevealResult rr = to_revealed_form(m, phi);
    std::vector<int> want = rr.model.revealed;
    Memdp bare = rr.model;
    bare.revealed.clear();
    annotate_revealed(bare);
    CHECK(bare.revealed == want);

    // The raw coin model has revealing edges into states that both
    // environments can feed, so no annotation is consistent.
    Memdp plain = m;
    plain.revealed.clear();
    CHECK_THROWS_AS(annotate_revealed(plain), ValidationError);
}

TEST_CASE("transport matches the inner strategy outcome exactly") {
    std::mt19937 rng(307);
    int ran = 0;
    for (int round = 0; round < 60; ++round) {
        Memdp m0 = random_memdp(rng, 5, 2);
        Objective phi0 = random_objective(rng, 5, round % 3);
        auto [m, phi] = absorb_objective_states(m0, phi0);
        RevealResult rr = to_revealed_form(m, phi);
        if (rr.top[0] < 0 && rr.top[1] < 0 && rr.bot[0] < 0 && rr.bot[1] < 0)
            continue;
        ++ran;
        StrategyMachine inner = uniform_machine(rr.model);
        StrategyMachine lifted = transport_strategy(m, phi, inner);
        CHECK(validate_strategy(m, lifted).empty());
        for (int env = 1; env <= 2; ++env) {
            for (StateId s = 0; s < m.n(); ++s) {
                Rat want = chain_objective_prob(
                               product_chain(env_mdp(rr.model, env), inner, s),
                               rr.phi)
                               .total;
                Rat got = chain_objective_prob(
                              product_chain(env_mdp(m, env), lifted, s), phi)
                              .total;
                CHECK(want == got);
            }
        }
    }
    CHECK(ran > 20);
}

TEST_CASE("transport handles machines with several memories") {
    auto [m0, phi0] = fixtures::coin_pick();
    auto [m, phi] = absorb_objective_states(m0, phi0);
    RevealResult rr = to_revealed_form(m, phi);

    StateId s = m.state("s");
    ActionId a = m.action("a"), b = m.action("b");
    StrategyMachine pa = pure_memoryless_machine(rr.model, {{s, a}});
    StrategyMachine pb = pure_memoryless_machine(rr.model, {{s, b}});
    StrategyMachine inner = mix_memoryless(rr.model, {pa, pb},
                                           {rat(1, 3), rat(2, 3)});
    StrategyMachine lifted = transport_strategy(m, phi, inner);
    CHECK(validate_strategy(m, lifted).empty());

    Rat p1 = chain_objective_prob(product_chain(env_mdp(m, 1), lifted, s), phi)
                 .total;
    Rat p2 = chain_objective_prob(product_chain(env_mdp(m, 2), lifted, s), phi)
                 .total;
    CHECK(p1 == rat(2, 3));
    CHECK(p2 == rat(1, 3));
}
