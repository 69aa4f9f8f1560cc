#pragma once

#include "memdp/model.hpp"

namespace fixtures {

// Three states, two actions; the two environments send s to opposite
// successors, so reaching t from s needs randomization.
inline std::pair<memdp::Memdp, memdp::Objective> coin_pick() {
    memdp::MemdpBuilder b;
    b.state("s");
    b.state("t");
    b.state("u");
    b.edge(1, "s", "a", "u", 1);
    b.edge(2, "s", "a", "t", 1);
    b.edge(1, "s", "b", "t", 1);
    b.edge(2, "s", "b", "u", 1);
    b.loop("t");
    b.loop("u");
    memdp::Memdp m = b.finish();
    return {m, memdp::Objective::reach({m.state("t")})};
}

// Single absorbing state, both environments identical.
inline memdp::Memdp one_loop() {
    memdp::MemdpBuilder b;
    b.loop("s");
    return b.finish();
}

}  // namespace fixtures
