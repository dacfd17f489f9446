#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "groupsieve/polynomial.hpp"

using namespace groupsieve;

namespace {
const GroupSpec kSl2{GroupModel::Sl2, 0, 0, 1};
const GroupSpec kQuat{GroupModel::QuatNormOne, 2, 3, 1};
}  // namespace

TEST_CASE("coordinate and trace functions evaluate") {
    auto tr = trace_function(kSl2);
    auto g = make_element_i(kSl2, 2, 3, 1, 2);
    CHECK(tr.eval(g) == 4);
    CHECK(named_function(kSl2, "g12").eval(g) == 3);
    CHECK(named_function(kQuat, "w").eval(make_element_i(kQuat, 5, 0, 0, 2)) == 2);
    CHECK(trace_function(kQuat).eval(make_element_i(kQuat, 3, 2, 0, 0)) == 6);
    CHECK_THROWS_AS(named_function(kSl2, "nope"), config_error);
}

TEST_CASE("arithmetic and normalization") {
    auto x = RegularFunction::coordinate(0);
    auto y = RegularFunction::coordinate(1);
    auto p = (x + y) * (x - y);
    auto q = x * x - y * y;
    CHECK(p == q);
    CHECK((p - q).is_zero());
    CHECK(p.total_degree() == 2);
    CHECK(RegularFunction(7).is_constant());
    CHECK(RegularFunction(7).constant_value() == 7);
    CHECK((x - x).is_zero());
    CHECK((3 * x - x - x - x).is_zero());
}

TEST_CASE("eval_mod agrees with exact evaluation") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<long> coord(-30, 30);
    auto x = RegularFunction::coordinate(0);
    auto w = RegularFunction::coordinate(3);
    auto f = 5 * x * x * w - 7 * w + RegularFunction(11);
    for (int t = 0; t < 200; ++t) {
        std::array<Integer, 4> v{coord(rng), coord(rng), coord(rng), coord(rng)};
        for (u64 m : {2ull, 3ull, 7ull, 60ull}) {
            std::array<u64, 4> vm;
            for (int i = 0; i < 4; ++i) vm[i] = mod_u64(v[i], m);
            CHECK(f.eval_mod(vm, m) == mod_u64(f.eval(v), m));
            auto ev = f.evaluator_mod(m);
            CHECK(ev(vm) == mod_u64(f.eval(v), m));
        }
    }
}

TEST_CASE("json round trip") {
    auto f = 5 * RegularFunction::coordinate(0) * RegularFunction::coordinate(3) -
             RegularFunction(Integer("123456789012345678901234567890"));
    f.set_name("probe");
    auto j = f.to_json();
    auto g = RegularFunction::from_json(j);
    CHECK(f == g);
    CHECK(g.name() == "probe");
}

TEST_CASE("symbolic products match concrete products") {
    std::mt19937 rng(4242);
    std::uniform_int_distribution<long> coord(-20, 20);
    for (const auto& spec : {kSl2, kQuat}) {
        auto sym = symbolic_coordinates();
        for (int t = 0; t < 50; ++t) {
            std::array<Integer, 4> a{coord(rng), coord(rng), coord(rng), coord(rng)};
            std::array<Integer, 4> b{coord(rng), coord(rng), coord(rng), coord(rng)};
            std::array<RegularFunction, 4> bconst{RegularFunction(b[0]), RegularFunction(b[1]),
                                                  RegularFunction(b[2]), RegularFunction(b[3])};
            auto symprod = model_product<RegularFunction>(spec, sym, bconst);
            auto concrete = model_product<Integer>(spec, a, b);
            for (int i = 0; i < 4; ++i) CHECK(symprod[i].eval(a) == concrete[i]);
        }
    }
}
