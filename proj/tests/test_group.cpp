#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "groupsieve/group.hpp"

using namespace groupsieve;

namespace {

const GroupSpec kSl2{GroupModel::Sl2, 0, 0, 1};
const GroupSpec kQuat{GroupModel::QuatNormOne, 2, 3, 1};

// random words in a fixed generator set, exact arithmetic
std::vector<GroupElement> random_elements(const GroupSpec& spec, std::size_t n,
                                          unsigned word_len, std::mt19937& rng) {
    std::vector<GroupElement> gens;
    if (spec.model == GroupModel::Sl2) {
        gens = {make_element_i(spec, 1, 1, 0, 1), make_element_i(spec, 1, 0, 1, 1),
                make_element_i(spec, 0, 1, -1, 0)};
    } else {
        gens = {make_element_i(spec, 3, 2, 0, 0), make_element_i(spec, 2, 0, 1, 0),
                make_element_i(spec, 5, 0, 0, 2)};
    }
    std::uniform_int_distribution<std::size_t> pick(0, gens.size() - 1);
    std::uniform_int_distribution<int> flip(0, 1);
    std::vector<GroupElement> out;
    for (std::size_t i = 0; i < n; ++i) {
        GroupElement g = identity_element(spec);
        for (unsigned k = 0; k < word_len; ++k) {
            GroupElement step = gens[pick(rng)];
            if (flip(rng)) step = conj_inverse(step);
            g = multiply(g, step);
        }
        out.push_back(g);
    }
    return out;
}

}  // namespace

TEST_CASE("quaternion basis relation i * j = ij") {
    auto i = make_raw_i(kQuat, 0, 1, 0, 0);
    auto j = make_raw_i(kQuat, 0, 0, 1, 0);
    auto k = multiply(i, j);
    CHECK(k.coords == std::array<Integer, 4>{0, 0, 0, 1});
    // and j * i = -ij
    auto ji = multiply(j, i);
    CHECK(ji.coords == std::array<Integer, 4>{0, 0, 0, -1});
}

TEST_CASE("multiplying by the identity is trivial") {
    auto g = make_element_i(kSl2, 2, 3, 1, 2);
    CHECK(multiply(g, identity_element(kSl2)).coords == g.coords);
    CHECK(multiply(identity_element(kSl2), g).coords == g.coords);
}

TEST_CASE("norm-one product (3+2i)(3-2i) = 1") {
    auto g = make_element_i(kQuat, 3, 2, 0, 0);
    auto h = make_element_i(kQuat, 3, -2, 0, 0);
    CHECK(multiply(g, h).coords == std::array<Integer, 4>{1, 0, 0, 0});
}

TEST_CASE("mixed specs are rejected") {
    auto g = make_element_i(kSl2, 1, 0, 0, 1);
    auto h = make_element_i(kQuat, 1, 0, 0, 0);
    CHECK_THROWS_AS(multiply(g, h), spec_mismatch_error);
}

TEST_CASE("conjugate inverse") {
    CHECK(conj_inverse(identity_element(kQuat)).coords ==
          std::array<Integer, 4>{1, 0, 0, 0});
    auto g = make_element_i(kQuat, 3, 2, 0, 0);
    CHECK(conj_inverse(g).coords == std::array<Integer, 4>{3, -2, 0, 0});
    auto u = make_element_i(kSl2, 1, 1, 0, 1);
    CHECK(conj_inverse(u).coords == std::array<Integer, 4>{1, -1, 0, 1});
    CHECK(multiply(u, conj_inverse(u)).coords == identity_element(kSl2).coords);
}

TEST_CASE("height is the max absolute coordinate") {
    CHECK(height(identity_element(kSl2)) == 1);
    CHECK(height(make_element_i(kSl2, 2, 3, 1, 2)) == 3);
    CHECK(height(make_element_i(kQuat, 3, 2, 0, 0)) == 3);
}

TEST_CASE("reduce_mod basics") {
    auto g = make_element_i(kQuat, 3, 2, 0, 0);
    auto r = reduce_mod(g, 2);
    CHECK(r.coords == std::array<u64, 4>{1, 0, 0, 0});
    CHECK(residue_satisfies_equation(kQuat, r));

    auto r1 = reduce_mod(g, 1);
    CHECK(r1.coords == std::array<u64, 4>{0, 0, 0, 0});

    CHECK_THROWS_AS(reduce_mod(g, 0), invalid_modulus_error);
}

TEST_CASE("reduce_mod is a homomorphism") {
    std::mt19937 rng(12345);
    for (const auto& spec : {kSl2, kQuat}) {
        auto elems = random_elements(spec, 40, 6, rng);
        for (std::size_t i = 0; i + 1 < elems.size(); i += 2) {
            const auto& g = elems[i];
            const auto& h = elems[i + 1];
            auto lhs = reduce_mod(multiply(g, h), 6);
            auto rhs = residue_multiply(spec, reduce_mod(g, 6), reduce_mod(h, 6));
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("congruence subgroup membership") {
    CHECK(in_congruence_subgroup(identity_element(kSl2), 5));
    CHECK(in_congruence_subgroup(make_element_i(kSl2, 1, 3, 0, 1), 3));
    CHECK(in_congruence_subgroup(make_element_i(kQuat, 3, 2, 0, 0), 2));
    CHECK_FALSE(in_congruence_subgroup(make_element_i(kSl2, 1, 1, 0, 1), 3));
    // level 1: everything is congruent to the identity
    CHECK(in_congruence_subgroup(make_element_i(kSl2, 2, 3, 1, 2), 1));
}

TEST_CASE("group axioms on random triples") {
    std::mt19937 rng(987);
    for (const auto& spec : {kSl2, kQuat}) {
        auto elems = random_elements(spec, 72, 5, rng);
        std::size_t cases = 0;
        for (std::size_t i = 0; i < elems.size(); ++i)
            for (std::size_t j = 0; j < elems.size(); ++j) {
                const auto& g = elems[i];
                const auto& h = elems[j];
                const auto& k = elems[(i + j) % elems.size()];
                REQUIRE(multiply(multiply(g, h), k).coords ==
                        multiply(g, multiply(h, k)).coords);
                ++cases;
            }
        REQUIRE(cases >= 5000);
        for (const auto& g : elems) {
            REQUIRE(is_group_point(g));
            REQUIRE(multiply(g, conj_inverse(g)).coords == identity_element(spec).coords);
            REQUIRE(multiply(conj_inverse(g), g).coords == identity_element(spec).coords);
        }
    }
}

TEST_CASE("reduced norm is multiplicative on arbitrary integral quaternions") {
    std::mt19937 rng(5150);
    std::uniform_int_distribution<long> coord(-50, 50);
    for (int trial = 0; trial < 2000; ++trial) {
        auto g = make_raw_i(kQuat, coord(rng), coord(rng), coord(rng), coord(rng));
        auto h = make_raw_i(kQuat, coord(rng), coord(rng), coord(rng), coord(rng));
        Integer lhs = model_norm<Integer>(kQuat, multiply(g, h).coords);
        Integer rhs = model_norm<Integer>(kQuat, g.coords) * model_norm<Integer>(kQuat, h.coords);
        REQUIRE(lhs == rhs);
    }
}

TEST_CASE("height is conjugation-symmetric") {
    std::mt19937 rng(777);
    for (const auto& spec : {kSl2, kQuat}) {
        for (const auto& g : random_elements(spec, 50, 6, rng))
            CHECK(height(conj_inverse(g)) == height(g));
    }
}

TEST_CASE("hilbert symbols at small places") {
    CHECK(hilbert_symbol(2, 3, 2) == -1);
    CHECK(hilbert_symbol(2, 3, 3) == -1);
    CHECK(hilbert_symbol(2, 3, 5) == 1);
    CHECK(hilbert_symbol(2, 3, 7) == 1);
    CHECK(hilbert_symbol(-1, -1, 2) == -1);
    CHECK(hilbert_symbol(5, 7, 5) == legendre_symbol(7, 5));
    CHECK(hilbert_symbol_real(-1, -1) == -1);
    CHECK(hilbert_symbol_real(2, -3) == 1);
}

TEST_CASE("division algebra certification") {
    auto cert = certify_division_algebra(2, 3);
    CHECK(cert.search_bound == 100);
    CHECK(cert.ramified_places == std::vector<long>{2, 3});

    // x^2 + y^2 = z^2 has (3,4,5): matrix algebra
    CHECK_THROWS_AS(certify_division_algebra(1, 1), config_error);
    // definite: compact real points
    CHECK_THROWS_AS(certify_division_algebra(-1, -1), config_error);
    // B(3,5) splits at 2? hilbert (3,5)_2: eps(3)eps(5) = 1*0 = 0 -> +1;
    // ramified at 3, 5 or nowhere: 3 is not a QR mod 5, so (3,5)_5 = -1
    CHECK_NOTHROW(certify_division_algebra(3, 5));
}

TEST_CASE("spec validation") {
    CHECK_NOTHROW(validate_spec(kQuat));
    GroupSpec bad = kQuat;
    bad.level = 0;
    CHECK_THROWS_AS(validate_spec(bad), config_error);
}
