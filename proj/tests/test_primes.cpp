#include <catch2/catch_amalgamated.hpp>

#include "groupsieve/primes.hpp"

using namespace groupsieve;

TEST_CASE("prime sieve") {
    CHECK(primes_below(2).empty());
    CHECK(primes_below(20) == std::vector<u64>{2, 3, 5, 7, 11, 13, 17, 19});
    CHECK(primes_below(100).size() == 25);
}

TEST_CASE("deterministic primality") {
    CHECK_FALSE(is_prime_u64(0));
    CHECK_FALSE(is_prime_u64(1));
    CHECK(is_prime_u64(2));
    CHECK(is_prime_u64(97));
    CHECK_FALSE(is_prime_u64(561));     // Carmichael
    CHECK_FALSE(is_prime_u64(341));     // 2-pseudoprime
    CHECK(is_prime_u64(1000003));
    CHECK(is_prime_u64(2147483647));    // 2^31 - 1
    CHECK(is_prime_u64(18446744073709551557ull));  // largest 64-bit prime
    CHECK(is_prime(Integer("2305843009213693951")));  // 2^61 - 1
    CHECK_FALSE(is_prime(Integer("2305843009213693953")));
}

TEST_CASE("factorization is certified") {
    auto f = factorize(Integer(72));
    REQUIRE(f.factors.size() == 2);
    CHECK(f.factors[0].p == 2);
    CHECK(f.factors[0].exponent == 3);
    CHECK(f.factors[1].p == 3);
    CHECK(f.factors[1].exponent == 2);
    CHECK(f.verify());

    // negative input: |n| is factored
    auto g = factorize(Integer(-30));
    CHECK(g.value == 30);
    CHECK(g.factors.size() == 3);

    // semiprime beyond the trial bound forces the rho path
    Integer p("1000003"), q("1000033");
    auto h = factorize(p * q, 1000);
    REQUIRE(h.factors.size() == 2);
    CHECK(h.factors[0].p == p);
    CHECK(h.factors[1].p == q);
    CHECK(h.verify());

    auto one = factorize(Integer(1));
    CHECK(one.factors.empty());
    CHECK(one.verify());

    CHECK_THROWS_AS(factorize(Integer(0)), error);
}

TEST_CASE("squarefree helpers") {
    auto spf = spf_table(60);
    auto i30 = squarefree_split(30, spf);
    CHECK(i30.squarefree);
    CHECK(i30.primes == std::vector<u64>{2, 3, 5});
    CHECK_FALSE(squarefree_split(12, spf).squarefree);
    CHECK(squarefree_split(1, spf).squarefree);
    CHECK(squarefree_split(1, spf).primes.empty());
}

TEST_CASE("prime power split") {
    auto pps = prime_power_split_u64(360);
    REQUIRE(pps.size() == 3);
    CHECK(pps[0].q == 8);
    CHECK(pps[1].q == 9);
    CHECK(pps[2].q == 5);
}
