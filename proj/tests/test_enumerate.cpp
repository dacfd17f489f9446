#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "groupsieve/enumerate.hpp"

using namespace groupsieve;

namespace {
const GroupSpec kSl2{GroupModel::Sl2, 0, 0, 1};
const GroupSpec kQuat{GroupModel::QuatNormOne, 2, 3, 1};
}  // namespace

TEST_CASE("solver equals the scan oracle on small balls") {
    for (const auto& spec : {kSl2, kQuat})
        for (i64 T : {2, 4, 8, 16}) {
            BallQuery q{spec, T, std::nullopt};
            CHECK(enumerate_ball_raw(q) == enumerate_ball_naive(q));
        }
}

TEST_CASE("frozen small counts") {
    CHECK(count_ball(BallQuery{kSl2, 2, std::nullopt}) == 20);
    CHECK(count_ball(BallQuery{kSl2, 1, std::nullopt}) == 0);
    CHECK(count_ball(BallQuery{kQuat, 1, std::nullopt}) == 0);
    auto pts = enumerate_ball_raw(BallQuery{kQuat, 2, std::nullopt});
    CHECK(std::find(pts.begin(), pts.end(), Coords4{1, 0, 0, 0}) != pts.end());
    CHECK(std::find(pts.begin(), pts.end(), Coords4{-1, 0, 0, 0}) != pts.end());
}

TEST_CASE("count matches enumeration length, also under congruences") {
    Congruence cg{2, {1, 0, 0, 1}};
    for (const auto& spec : {kSl2, kQuat}) {
        Congruence c = cg;
        if (spec.is_quat()) c.target = {1, 0, 0, 0};
        for (i64 T : {4, 8, 16}) {
            BallQuery plain{spec, T, std::nullopt};
            BallQuery congr{spec, T, c};
            CHECK(count_ball(plain) == enumerate_ball_raw(plain).size());
            CHECK(count_ball(congr) == enumerate_ball_raw(congr).size());
            CHECK(count_ball(congr) <= count_ball(plain));
        }
    }
}

TEST_CASE("congruence filter matches the naive filter") {
    Congruence cg{2, {1, 0, 0, 1}};
    BallQuery q{kSl2, 8, cg};
    CHECK(enumerate_ball_raw(q) == enumerate_ball_naive(q));
}

TEST_CASE("counts are nondecreasing in T") {
    for (const auto& spec : {kSl2, kQuat}) {
        u64 prev = 0;
        for (i64 T = 1; T <= 20; ++T) {
            u64 n = count_ball(BallQuery{spec, T, std::nullopt});
            CHECK(n >= prev);
            prev = n;
        }
    }
}

TEST_CASE("CRT consistency of congruence counts") {
    // joint constraint mod 6 == simultaneous constraints mod 2 and mod 3
    for (const auto& spec : {kSl2, kQuat}) {
        auto id6 = identity_residue(spec, 6);
        BallQuery joint{spec, 12, Congruence{6, id6.coords}};
        u64 joint_count = count_ball(joint);

        auto id2 = identity_residue(spec, 2);
        auto id3 = identity_residue(spec, 3);
        auto all = enumerate_ball_raw(BallQuery{spec, 12, std::nullopt});
        u64 both = 0;
        for (const auto& c : all) {
            bool ok = true;
            for (int i = 0; i < 4 && ok; ++i) {
                i64 v2 = ((c[i] % 2) + 2) % 2;
                i64 v3 = ((c[i] % 3) + 3) % 3;
                ok = static_cast<u64>(v2) == id2.coords[i] &&
                     static_cast<u64>(v3) == id3.coords[i];
            }
            if (ok) ++both;
        }
        CHECK(joint_count == both);
    }
}

TEST_CASE("deterministic output under any worker count") {
    for (const auto& spec : {kSl2, kQuat}) {
        EnumOptions one, four;
        one.threads = 1;
        four.threads = 4;
        BallQuery q{spec, 24, std::nullopt};
        CHECK(enumerate_ball_raw(q, one) == enumerate_ball_raw(q, four));
        CHECK(count_ball(q, one) == count_ball(q, four));
    }
}

TEST_CASE("emission order is lexicographic") {
    auto pts = enumerate_ball_raw(BallQuery{kSl2, 6, std::nullopt});
    CHECK(std::is_sorted(pts.begin(), pts.end()));
    CHECK(std::adjacent_find(pts.begin(), pts.end()) == pts.end());  // duplicate-free
}

TEST_CASE("budget breach carries the completed prefix") {
    EnumOptions opts;
    opts.max_points = 5;
    try {
        enumerate_ball_raw(BallQuery{kSl2, 16, std::nullopt}, opts);
        FAIL("expected partial_result_error");
    } catch (const partial_result_error& e) {
        CHECK(e.completed_lo <= e.completed_hi);
        CHECK(std::is_sorted(e.partial.begin(), e.partial.end()));
        for (const auto& c : e.partial) {
            CHECK(model_equation<i64>(kSl2, c) == 0);
            CHECK(c[0] >= e.completed_lo);
            CHECK(c[0] < e.completed_hi);
        }
    }
}

TEST_CASE("growth fit recovers an exact power law") {
    std::vector<std::pair<i64, u64>> pts;
    for (i64 T : {8, 16, 32, 64, 128})
        pts.push_back({T, static_cast<u64>(5 * T * T)});
    auto rep = fit_growth_points(pts);
    CHECK(std::fabs(rep.a - 2.0) < 1e-6);
    CHECK(std::fabs(rep.b) < 1e-5);
    CHECK(rep.residual_max < 1e-8);
}

TEST_CASE("growth fit input validation") {
    CHECK_THROWS_AS(fit_growth_points({{2, 5}, {4, 20}, {8, 80}}), insufficient_data_error);
    CHECK_THROWS_AS(fit_growth_points({{8, 5}, {4, 20}, {16, 80}, {32, 100}}),
                    insufficient_data_error);
    CHECK_THROWS_AS(fit_growth_points({{2, 5}, {4, 0}, {8, 80}, {16, 100}}),
                    insufficient_data_error);
    CHECK_THROWS_AS(fit_growth(kSl2, {2, 4, 8}), insufficient_data_error);
}

TEST_CASE("find_congruent_point") {
    // empty target list: the identity
    CHECK(find_congruent_point(kSl2, {}, 16).coords == identity_element(kSl2).coords);

    // SL2 target id mod 3: the identity is the minimal match of height <= 3
    auto id3 = identity_residue(kSl2, 3);
    auto g = find_congruent_point(kSl2, {id3}, 16);
    CHECK(height(g) <= 3);
    CHECK(in_congruence_subgroup(g, 3));

    // quaternion target id mod 2: the identity itself is the minimal match
    auto id2 = identity_residue(kQuat, 2);
    auto h = find_congruent_point(kQuat, {id2}, 16);
    CHECK(h.coords == identity_element(kQuat).coords);

    // a genuinely nontrivial residue: (3,2,0,0) mod 4
    ResidueElement target{4, {3, 2, 0, 0}};
    auto k = find_congruent_point(kQuat, {target}, 16);
    CHECK(reduce_mod(k, 4) == target);
    CHECK(height(k) <= 3);

    // minimality against the scan oracle
    auto all = enumerate_ball_raw(BallQuery{kQuat, static_cast<i64>(height(k).get_si()) + 1,
                                            Congruence{4, target.coords}});
    bool any_smaller = false;
    for (const auto& c : all) {
        i64 hmax = 0;
        for (i64 v : c) hmax = std::max(hmax, v >= 0 ? v : -v);
        if (hmax < height(k)) any_smaller = true;
    }
    CHECK_FALSE(any_smaller);
}

TEST_CASE("find_congruent_point error paths") {
    auto id3 = identity_residue(kSl2, 3);
    auto id9 = identity_residue(kSl2, 9);
    CHECK_THROWS_AS(find_congruent_point(kSl2, {id3, id9}, 16), error);  // not coprime

    ResidueElement off{5, {2, 0, 0, 0}};  // det = 4 mod 5: not on the group
    CHECK_THROWS_AS(find_congruent_point(kSl2, {off}, 16), error);

    // unreachable below a tiny bound
    ResidueElement far{7, {2, 3, 3, 2}};  // 4 - 9 = -5 = 2 mod 7... check below
    // use a residue that is on the group: find one by construction
    auto sample = reduce_mod(make_element_i(kSl2, 2, 3, 1, 2), 7);
    CHECK_THROWS_AS(find_congruent_point(kSl2, {sample}, 2), not_found_error);
    (void)far;
}
