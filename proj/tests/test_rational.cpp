#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "memdp/rational.hpp"

using namespace memdp;

TEST_CASE("fraction literals parse exactly") {
    CHECK(*rat_parse("1/2") == rat(1, 2));
    CHECK(*rat_parse("-2/4") == rat(-1, 2));
    CHECK(*rat_parse("+3/9") == rat(1, 3));
    CHECK(*rat_parse("3") == 3);
    CHECK(*rat_parse("0") == 0);
    CHECK(*rat_parse("007/014") == rat(1, 2));
}

TEST_CASE("decimal literals convert without rounding") {
    CHECK(*rat_parse("0.25") == rat(1, 4));
    CHECK(*rat_parse(".5") == rat(1, 2));
    CHECK(*rat_parse("1.0") == 1);
    CHECK(*rat_parse("-0.1") == rat(-1, 10));
    CHECK(*rat_parse("0.142857") == rat(142857, 1000000));
}

TEST_CASE("malformed literals are rejected") {
    for (const char* bad : {"", "1e-3", "2E5", "1/0", "2.5.3", "a/b", "1/", "/2", "--1",
                            "0x10", "1.", "1 2", "nan", "inf"}) {
        CAPTURE(bad);
        CHECK(!rat_parse(bad).has_value());
    }
    CHECK_THROWS_AS(rat_parse_or_throw("1e-3"), std::invalid_argument);
}

TEST_CASE("printing uses p/q with integers bare") {
    CHECK(rat_str(rat(1, 2)) == "1/2");
    CHECK(rat_str(rat(4, 2)) == "2");
    CHECK(rat_str(rat(-3, 6)) == "-1/2");
    CHECK(rat_str(Rat(0)) == "0");
    CHECK(*rat_parse(rat_str(rat(355, 113))) == rat(355, 113));
}

TEST_CASE("powers stay exact at large exponents") {
    CHECK(int_pow(3, 5) == 243);
    CHECK(int_pow(10, 0) == 1);
    CHECK(rat_pow(rat(1, 2), 10) == rat(1, 1024));
    CHECK(rat_pow(rat(3, 2), 3) == rat(27, 8));
    Int big = int_pow(3, 512);
    CHECK(big.get_str().size() == 245);
}

TEST_CASE("ceil and floor on signed rationals") {
    CHECK(rat_ceil(rat(7, 2)) == 4);
    CHECK(rat_ceil(rat(-7, 2)) == -3);
    CHECK(rat_ceil(Rat(3)) == 3);
    CHECK(rat_floor(rat(7, 2)) == 3);
    CHECK(rat_floor(rat(-7, 2)) == -4);
    CHECK(rat_floor(Rat(-3)) == -3);
}
