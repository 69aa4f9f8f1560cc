#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "memdp/corpus.hpp"
#include "memdp/qualitative.hpp"
#include "support/oracles.hpp"

using namespace memdp;

namespace {

StateId claim_start(const corpus::Entry& e, const std::string& key) {
    auto at = key.find('@');
    return e.model.state(at == std::string::npos ? e.start : key.substr(at + 1));
}

bool subset(const std::set<StateId>& a, const std::set<StateId>& b) {
    for (StateId s : a)
        if (!b.count(s)) return false;
    return true;
}

void check_cert_shape(const Memdp& m, const Decision& d) {
    for (StateId s : d.cert.winning_union) CHECK((s >= 0 && s < m.n()));
    CHECK(subset(d.cert.common_region, d.cert.winning_union));
    for (int i = 0; i < 2; ++i) {
        CHECK(subset(d.cert.revealed_winning[i], d.cert.winning_union));
        CHECK(subset(d.cert.switch_targets[i], d.cert.common_region));
    }
}

Memdp one_sided_exit_model(bool reachable_exit) {
    MemdpBuilder b;
    b.edge(1, "s", "a", "t", 1);
    b.edge(2, "s", "a", reachable_exit ? "t" : "s", 1);
    b.edge(1, "t", "b", "u", 1);
    b.edge(2, "t", "b", "w", 1);
    b.loop("u");
    b.loop("w");
    return b.finish();
}

}  // namespace

TEST_CASE("corpus almost-sure and limit-sure claims are reproduced") {
    for (const auto& e : corpus::all())
        for (const auto& [key, expect] : e.claims) {
            if (key.rfind("almost_sure", 0) == 0) {
                Decision d = decide_almost_sure(e.model, e.phi, claim_start(e, key));
                INFO(e.name << " " << key);
                CHECK(verdict_str(d.verdict) == expect);
                CHECK(d.witness.has_value() == (d.verdict == Verdict::Yes));
                check_cert_shape(e.model, d);
            } else if (key.rfind("limit_sure", 0) == 0) {
                StateId s0 = claim_start(e, key);
                Decision d = decide_limit_sure(e.model, e.phi, s0);
                INFO(e.name << " " << key);
                CHECK(verdict_str(d.verdict) == expect);
                CHECK((d.verdict == Verdict::Yes) == (d.cert.limit_winning.count(s0) > 0));
                check_cert_shape(e.model, d);
            }
        }
}

TEST_CASE("mixing witness achieves exactly one in both environments") {
    auto e = corpus::get("aspositive");
    StateId s0 = e.model.state(e.start);
    Decision d = decide_almost_sure(e.model, e.phi, s0);
    REQUIRE(d.verdict == Verdict::Yes);
    REQUIRE(d.witness.has_value());
    auto rep = witness_check(e.model, e.phi, *d.witness, s0, rat(1));
    CHECK(rep.pass);
    CHECK(rep.prob[0] == 1);
    CHECK(rep.prob[1] == 1);
    CHECK(oracles::brute_almost_sure(e.model, e.phi, s0));
    CHECK_FALSE(oracles::brute_almost_sure(e.model, e.phi, s0, true));
}

TEST_CASE("alternating pure witness is pure and exact") {
    auto e = corpus::get("aspositive");
    StateId s0 = e.model.state(e.start);
    Decision d = decide_almost_sure(e.model, e.phi, s0, true);
    REQUIRE(d.verdict == Verdict::Yes);
    REQUIRE(d.witness.has_value());
    for (auto& [key, row] : d.witness->next_action) {
        CHECK(row.size() == 1);
        CHECK(row.begin()->second == 1);
    }
    auto rep = witness_check(e.model, e.phi, *d.witness, s0, rat(1));
    CHECK(rep.pass);
}

TEST_CASE("almost-sure parity matches the reachability reading of a reach instance") {
    auto e = corpus::get("aspositive");
    std::vector<int> pr(e.model.n(), 1);
    for (StateId s : e.phi.states) pr[s] = 0;
    Objective par = Objective::parity(pr);
    StateId s0 = e.model.state(e.start);
    Decision d = decide_almost_sure(e.model, par, s0);
    CHECK(d.verdict == Verdict::Yes);
    REQUIRE(d.witness.has_value());
    CHECK(witness_check(e.model, par, *d.witness, s0, rat(1)).pass);
}

TEST_CASE("almost-sure safety accounts for environment-revealing moves") {
    {
        Memdp m = one_sided_exit_model(false);
        Objective safe = Objective::safety({m.state("s"), m.state("t"), m.state("u")});
        StateId s0 = m.state("s");
        Decision d = decide_almost_sure(m, safe, s0);
        CHECK(d.verdict == Verdict::Yes);
        REQUIRE(d.witness.has_value());
        auto rep = witness_check(m, safe, *d.witness, s0, rat(1));
        CHECK(rep.pass);
        CHECK(oracles::brute_almost_sure(m, safe, s0));
        Decision ls = decide_limit_sure(m, safe, s0);
        CHECK(ls.verdict == Verdict::Yes);
        CHECK(ls.witness.has_value());
    }
    {
        Memdp m = one_sided_exit_model(true);
        Objective safe = Objective::safety({m.state("s"), m.state("t"), m.state("u")});
        StateId s0 = m.state("s");
        Decision d = decide_almost_sure(m, safe, s0);
        CHECK(d.verdict == Verdict::No);
        CHECK_FALSE(d.witness.has_value());
        CHECK_FALSE(oracles::brute_almost_sure(m, safe, s0));
        CHECK(decide_limit_sure(m, safe, s0).verdict == Verdict::No);
    }
}

TEST_CASE("limit-sure winning sets on the corpus") {
    {
        auto e = corpus::get("lsreach");
        Decision d = decide_limit_sure(e.model, e.phi, e.model.state("s"));
        std::set<StateId> expect{e.model.state("s"), e.model.state("t"), e.model.state("u"),
                                 e.model.state("w")};
        CHECK(d.cert.limit_winning == expect);
    }
    {
        auto e = corpus::get("parity");
        Decision d = decide_limit_sure(e.model, e.phi, e.model.state("s2"));
        std::set<StateId> expect{e.model.state("s2"), e.model.state("s3"), e.model.state("s4"),
                                 e.model.state("s9")};
        CHECK(d.cert.limit_winning == expect);
    }
}

TEST_CASE("parity-to-reachability rewrite of the parity instance") {
    auto e = corpus::get("parity");
    BarResult bar = build_bar(e.model, e.phi);
    CHECK(validate(bar.model, bar.phi).empty());

    REQUIRE(bar.escapes.size() == 1);
    const auto& esc = bar.escapes[0];
    CHECK(esc.env == 1);
    std::set<StateId> dpp{bar.model.state("dec(s6+s7)"), bar.model.state("s8")};
    CHECK(esc.mec.states == dpp);

    std::set<StateId> expect{bar.model.state("s4"), bar.model.state("s9"),
                             bar.model.state("win(s2+s3)"),
                             bar.model.state("t0@1(s8+dec(s6+s7))")};
    CHECK(bar.phi.states == expect);

    for (StateId s : esc.mec.states)
        for (int env = 1; env <= 2; ++env) {
            const Distribution& d = bar.model.dist(env, s, esc.action);
            REQUIRE(d.p.size() == 1);
            CHECK(d.p.begin()->first == esc.t_odd);
            CHECK(d.p.begin()->second == 1);
        }

    StateId sd = bar.model.state("dec(s2+s3)");
    CHECK(bar.to_bar[e.model.state("s2")] == sd);
    CHECK(bar.to_bar[e.model.state("s3")] == sd);

    for (const char* name : {"s1", "s2", "s6"}) {
        StateId s = e.model.state(name);
        Decision lp = decide_limit_sure(e.model, e.phi, s);
        Decision lr = decide_limit_sure(bar.model, bar.phi, bar.to_bar[s]);
        CHECK(lp.verdict == lr.verdict);
    }
}

TEST_CASE("random battery agrees with the support-level oracle") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> pick_n(2, 5);
    std::uniform_int_distribution<int> pick_prio(0, 3);
    for (int rep = 0; rep < 60; ++rep) {
        Memdp m = oracles::random_memdp(rng, pick_n(rng), 2);
        StateId s0 = 0;
        Objective reach = Objective::reach({m.n() - 1});
        Decision d = decide_almost_sure(m, reach, s0);
        INFO("reach rep " << rep);
        CHECK((d.verdict == Verdict::Yes) == oracles::brute_almost_sure(m, reach, s0));
        check_cert_shape(m, d);
        Decision ls = decide_limit_sure(m, reach, s0);
        if (d.verdict == Verdict::Yes) CHECK(ls.verdict == Verdict::Yes);
        if (ls.verdict == Verdict::Yes)
            for (int i = 0; i < 2; ++i) {
                auto vr = max_reach_values(env_mdp(m, i + 1), reach.states);
                CHECK(vr.value[s0] == 1);
            }

        std::vector<int> pr(m.n());
        for (auto& p : pr) p = pick_prio(rng);
        Objective par = Objective::parity(pr);
        Decision dp = decide_almost_sure(m, par, s0);
        INFO("parity rep " << rep);
        CHECK((dp.verdict == Verdict::Yes) == oracles::brute_almost_sure(m, par, s0));
        check_cert_shape(m, dp);

        Objective safe = Objective::safety({0, m.n() - 2});
        Decision dsafe = decide_almost_sure(m, safe, s0);
        INFO("safety rep " << rep);
        CHECK((dsafe.verdict == Verdict::Yes) == oracles::brute_almost_sure(m, safe, s0));
        CHECK(decide_limit_sure(m, safe, s0).verdict == dsafe.verdict);
    }
}
