#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "memdp/mdp_analysis.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace memdp;

namespace {

// Two-action MDP with a nested component structure:
//   0 --a--> {0,1}   0 --b--> 2    1 --a--> 0    1 --b--> 1
//   2 --a--> {2,3}   2 --b--> 2    3 --a--> 3    3 --b--> {2}
Mdp nested() {
    Mdp m;
    m.state_names = {"s0", "s1", "s2", "s3"};
    m.action_names = {"a", "b"};
    m.enabled = {{0, 1}, {0, 1}, {0, 1}, {0, 1}};
    auto d = [&](StateId s, ActionId a, std::map<StateId, Rat> p) {
        Distribution dd;
        for (auto& [t, q] : p) dd.add(t, q);
        m.delta[{s, a}] = dd;
    };
    d(0, 0, {{0, rat(1, 2)}, {1, rat(1, 2)}});
    d(0, 1, {{2, Rat(1)}});
    d(1, 0, {{0, Rat(1)}});
    d(1, 1, {{1, Rat(1)}});
    d(2, 0, {{2, rat(1, 2)}, {3, rat(1, 2)}});
    d(2, 1, {{2, Rat(1)}});
    d(3, 0, {{3, Rat(1)}});
    d(3, 1, {{2, Rat(1)}});
    return m;
}

void check_mecs_match(const Mdp& m) {
    auto got = mec_decompose(m);
    auto want = oracles::brute_mecs(m);
    REQUIRE(got.size() == want.size());
    for (auto& w : want) {
        bool found = false;
        for (auto& g : got)
            if (g.states == w.states && g.actions == w.actions) found = true;
        CAPTURE(*w.states.begin());
        CHECK(found);
    }
}

}  // namespace

TEST_CASE("maximal end components match subset enumeration") {
    check_mecs_match(nested());
    check_mecs_match(env_mdp(fixtures::coin_pick().first, 1));
    std::mt19937 rng(7);
    for (int round = 0; round < 40; ++round) check_mecs_match(oracles::random_mdp(rng, 5, 2));
}

TEST_CASE("nested model decomposes into the two obvious components") {
    auto mecs = mec_decompose(nested());
    REQUIRE(mecs.size() == 2);
    CHECK(mecs[0].states == std::set<StateId>{0, 1});
    CHECK(mecs[1].states == std::set<StateId>{2, 3});
    // Action b at state 0 leaves the component and is dropped.
    CHECK(!mecs[0].actions.at(0).count(1));
    CHECK(mecs[1].actions.at(2).count(0));
}

TEST_CASE("restricted views cut components") {
    Mdp m = nested();
    SubView v = SubView::full(m);
    v.alive[0] = 0;
    v.acts.erase(0);
    auto mecs = mec_decompose(m, &v);
    REQUIRE(mecs.size() == 2);
    CHECK(mecs[0].states == std::set<StateId>{1});
    CHECK(mecs[1].states == std::set<StateId>{2, 3});
}

TEST_CASE("almost-sure reachability matches the enumeration oracle") {
    std::mt19937 rng(11);
    for (int round = 0; round < 40; ++round) {
        Mdp m = oracles::random_mdp(rng, 4, 2);
        std::set<StateId> T{0};
        auto [win, progress] = prob1e_reach(m, T);
        CHECK(win == oracles::brute_prob1e(m, T));
        // The progress rows witness the region: the induced chain from every
        // winning state reaches T with probability one.
        MemorylessRows rows;
        for (auto& [s, a] : progress) rows[s] = {{a, Rat(1)}};
        for (StateId s : win) {
            ExplicitChain c = rows_chain(m, rows, s);
            std::vector<char> tgt(c.n(), 0);
            for (int v = 0; v < c.n(); ++v) tgt[v] = T.count(c.state_of[v]) > 0;
            CHECK(chain_reach_probs(c, tgt)[0] == 1);
        }
    }
}

TEST_CASE("sure safety region matches the enumeration oracle") {
    std::mt19937 rng(13);
    for (int round = 0; round < 40; ++round) {
        Mdp m = oracles::random_mdp(rng, 4, 2);
        std::set<StateId> safe{0, 1, 2};
        SubView region = sure_safe_region(m, safe);
        CHECK(region.states() == oracles::brute_sure_safe(m, safe));
        for (StateId s : region.states())
            for (ActionId a : region.acts.at(s))
                for (auto& [t, q] : m.dist(s, a).p) CHECK(region.alive[t]);
    }
}

TEST_CASE("optimal reachability values match the policy enumeration oracle") {
    std::mt19937 rng(17);
    for (int round = 0; round < 60; ++round) {
        Mdp m = oracles::random_mdp(rng, 4, 2);
        std::set<StateId> T{3};
        ValueResult r = max_reach_values(m, T);
        auto want = oracles::brute_max_reach(m, T);
        for (StateId s = 0; s < m.n(); ++s) {
            CAPTURE(round);
            CAPTURE(s);
            CHECK(r.value[s] == want[s]);
        }
        // The returned rows achieve the value exactly.
        for (StateId s = 0; s < m.n(); ++s) {
            ExplicitChain c = rows_chain(m, r.rows, s);
            std::vector<char> tgt(c.n(), 0);
            for (int v = 0; v < c.n(); ++v) tgt[v] = T.count(c.state_of[v]) > 0;
            CHECK(chain_reach_probs(c, tgt)[0] == r.value[s]);
        }
    }
}

TEST_CASE("minimal reachability values match the policy enumeration oracle") {
    std::mt19937 rng(19);
    for (int round = 0; round < 60; ++round) {
        Mdp m = oracles::random_mdp(rng, 4, 2);
        std::set<StateId> T{3};
        ValueResult r = min_reach_values(m, T);
        auto want = oracles::brute_min_reach(m, T);
        for (StateId s = 0; s < m.n(); ++s) {
            CAPTURE(round);
            CAPTURE(s);
            CHECK(r.value[s] == want[s]);
        }
        for (StateId s = 0; s < m.n(); ++s) {
            ExplicitChain c = rows_chain(m, r.rows, s);
            std::vector<char> tgt(c.n(), 0);
            for (int v = 0; v < c.n(); ++v) tgt[v] = T.count(c.state_of[v]) > 0;
            CHECK(chain_reach_probs(c, tgt)[0] == r.value[s]);
        }
    }
}

TEST_CASE("hand instance with known fractional maximum") {
    // From 0, action a reaches the target 3 with probability 1/2 and falls to
    // the losing sink 2 otherwise; action b loops. Optimal from 0 is 1/2.
    Mdp m;
    m.state_names = {"s0", "s1", "s2", "s3"};
    m.action_names = {"a", "b"};
    m.enabled = {{0, 1}, {0}, {0}, {0}};
    m.delta[{0, 0}] = Distribution();
    m.delta[{0, 0}].add(3, rat(1, 2));
    m.delta[{0, 0}].add(2, rat(1, 2));
    m.delta[{0, 1}] = point_dist(0);
    m.delta[{1, 0}] = point_dist(0);
    m.delta[{2, 0}] = point_dist(2);
    m.delta[{3, 0}] = point_dist(3);
    ValueResult r = max_reach_values(m, {3});
    CHECK(r.value == std::vector<Rat>{rat(1, 2), rat(1, 2), Rat(0), Rat(1)});
    CHECK(r.rows.at(0).at(0) == 1);

    ValueResult mn = min_reach_values(m, {3});
    CHECK(mn.value == std::vector<Rat>{Rat(0), Rat(0), Rat(0), Rat(1)});
}

TEST_CASE("parity values and regions match the enumeration oracle") {
    std::mt19937 rng(23);
    for (int round = 0; round < 50; ++round) {
        Mdp m = oracles::random_mdp(rng, 4, 2);
        std::vector<int> priority;
        std::uniform_int_distribution<int> pr(0, 2);
        for (StateId s = 0; s < m.n(); ++s) priority.push_back(pr(rng));
        Objective phi = Objective::parity(priority);

        ValueResult r = optimal_value(m, phi);
        auto want = oracles::brute_parity_values(m, priority);
        for (StateId s = 0; s < m.n(); ++s) {
            CAPTURE(round);
            CAPTURE(s);
            CHECK(r.value[s] == want[s]);
        }

        auto [win, rows] = as_winning(m, phi);
        std::set<StateId> expect;
        for (StateId s = 0; s < m.n(); ++s)
            if (want[s] == 1) expect.insert(s);
        CHECK(win == expect);

        // Witness rows reach value 1 exactly on the winning region.
        for (StateId s : win) {
            ExplicitChain c = rows_chain(m, rows, s);
            CHECK(chain_objective_prob(c, phi).per_node[0] == 1);
        }
        // And the optimal rows achieve the optimal value everywhere.
        for (StateId s = 0; s < m.n(); ++s) {
            ExplicitChain c = rows_chain(m, r.rows, s);
            CHECK(chain_objective_prob(c, phi).per_node[0] == r.value[s]);
        }
    }
}

TEST_CASE("safety optimum is the complement of forced reachability") {
    std::mt19937 rng(29);
    for (int round = 0; round < 40; ++round) {
        Mdp m = oracles::random_mdp(rng, 4, 2);
        std::set<StateId> safe{0, 1, 2};
        Objective phi = Objective::safety(safe);
        ValueResult r = optimal_value(m, phi);
        auto forced = oracles::brute_min_reach(m, {3});
        for (StateId s = 0; s < m.n(); ++s) CHECK(r.value[s] == 1 - forced[s]);

        auto [win, rows] = as_winning(m, phi);
        CHECK(win == oracles::brute_sure_safe(m, safe));
        for (StateId s : win) {
            ExplicitChain c = rows_chain(m, rows, s);
            CHECK(chain_objective_prob(c, phi).per_node[0] == 1);
        }
    }
}

TEST_CASE("component parity winners pin the even ceiling") {
    // Cycle 0 <-> 1 with priorities 1 and 2: the only visited-forever minimum
    // is 1, so the component loses.
    Mdp m;
    m.state_names = {"x", "y"};
    m.action_names = {"a"};
    m.enabled = {{0}, {0}};
    m.delta[{0, 0}] = point_dist(1);
    m.delta[{1, 0}] = point_dist(0);
    auto mecs = mec_decompose(m);
    REQUIRE(mecs.size() == 1);
    CHECK(!ec_parity_winning(m, mecs[0], {1, 2}).has_value());
    CHECK(ec_parity_winning(m, mecs[0], {1, 0}).has_value());
    CHECK(ec_parity_winning(m, mecs[0], {2, 3}).has_value());

    // With a second action y can stay put, avoiding the odd state entirely.
    Mdp m2 = m;
    m2.action_names.push_back("b");
    m2.enabled = {{0}, {0, 1}};
    m2.delta[{1, 1}] = point_dist(1);
    auto mecs2 = mec_decompose(m2);
    REQUIRE(mecs2.size() == 1);
    auto rows = ec_parity_winning(m2, mecs2[0], {1, 2});
    REQUIRE(rows.has_value());
    ExplicitChain c = rows_chain(m2, *rows, 0);
    CHECK(chain_objective_prob(c, Objective::parity({1, 2})).per_node[0] == 1);
}
