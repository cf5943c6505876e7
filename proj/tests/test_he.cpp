#include <doctest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "psimc/errors.hpp"
#include "psimc/he.hpp"

using namespace psimc;
using namespace psimc::he;

namespace {

struct Fixture {
    Rng rng{12345};
    KeyPair kp = keygen(SchemeParams{}, rng);
    Field q = kp.pub.q;

    CtPtr enc(Field m) { return encrypt(kp.pub, m, rng); }
    Field dec(const CtPtr& ct) { return decrypt(kp.sec, ct); }
};

}  // namespace

TEST_CASE("field helpers") {
    Field q = kDefaultModulus;
    CHECK(f_add(q - 1, 1, q) == 0);
    CHECK(f_sub(0, 1, q) == q - 1);
    CHECK(f_mul(q - 1, q - 1, q) == 1);
    CHECK(f_pow(3, 0, q) == 1);
    CHECK(f_pow(0, 0, q) == 1);
    CHECK(f_pow(2, 61, q) == 1);  // 2^61 = q + 1, so it wraps to 1
    CHECK(is_prime_u64(q));
    CHECK(is_prime_u64(2));
    CHECK(!is_prime_u64(1));
    CHECK(!is_prime_u64(2305843009213693953ull));
}

TEST_CASE("random prime") {
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        Field p = random_prime(rng, 3, 1000);
        CHECK(p >= 3);
        CHECK(p < 1000);
        CHECK(is_prime_u64(p));
    }
}

TEST_CASE("scheme params validate") {
    SchemeParams bad_rho{32, kDefaultModulus};
    CHECK_THROWS_AS(bad_rho.validate(), CryptoError);
    SchemeParams bad_q{64, 12};
    CHECK_THROWS_AS(bad_q.validate(), CryptoError);
    SchemeParams ok;
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("encrypt decrypt round trip") {
    Fixture fx;
    for (Field m : {Field(0), Field(1), Field(7), fx.q - 1}) {
        CHECK(fx.dec(fx.enc(m)) == m);
    }
    CHECK_THROWS_AS(encrypt(fx.kp.pub, fx.q, fx.rng), CryptoError);
}

TEST_CASE("arithmetic goldens") {
    Fixture fx;
    CHECK(fx.dec(ct_add(fx.enc(5), 2)) == 7);
    CHECK(fx.dec(ct_sub(fx.enc(1), 1)) == 0);
    CHECK(fx.dec(ct_sub(fx.enc(0), 1)) == fx.q - 1);
    CHECK(fx.dec(ct_mul(fx.enc(3), fx.enc(4))) == 12);
    CHECK(fx.dec(ct_pow(fx.enc(2), fx.enc(4))) == 16);
    // p = 5: x^(p-1) with x = 2.
    CHECK(fx.dec(ct_pow(fx.enc(2), fx.enc(4)))
          == f_pow(2, 4, fx.q));
    CHECK(fx.dec(ct_pow(fx.enc(fx.q - 1), 4)) == 1);
    CHECK(fx.dec(ct_sub(2, fx.enc(5))) == fx.q - 3);
}

TEST_CASE("operand rules") {
    Fixture fx;
    CHECK_THROWS_AS(ct_add(Operand(1), Operand(2)), CryptoError);
    CHECK_THROWS_AS(ct_pow(nullptr, Operand(2)), CryptoError);
    Rng other_rng(777);
    KeyPair other = keygen(SchemeParams{}, other_rng);
    CHECK_THROWS_AS(ct_add(fx.enc(1), encrypt(other.pub, 1, other_rng)), CryptoError);
}

TEST_CASE("wrong key decrypt names both key ids") {
    Fixture fx;
    Rng other_rng(31337);
    KeyPair other = keygen(SchemeParams{}, other_rng);
    try {
        decrypt(other.sec, fx.enc(1));
        FAIL("expected CryptoError");
    } catch (const CryptoError& e) {
        std::string msg = e.what();
        CHECK(msg.find(key_id_hex(fx.kp.pub.key_id)) != std::string::npos);
        CHECK(msg.find(key_id_hex(other.sec.key_id)) != std::string::npos);
    }
}

TEST_CASE("random expression trees match plain field evaluation") {
    Fixture fx;
    std::mt19937_64 rng(2718);

    struct Pair {
        CtPtr ct;
        Field plain;
    };

    auto rand_field = [&]() { return rng() % 97; };

    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Pair> pool;
        for (int i = 0; i < 3; ++i) {
            Field m = rand_field();
            pool.push_back({fx.enc(m), m});
        }
        for (int step = 0; step < 8; ++step) {
            const Pair& a = pool[rng() % pool.size()];
            const Pair& b = pool[rng() % pool.size()];
            bool scalar_rhs = rng() % 3 == 0;
            Field sb = rand_field();
            switch (rng() % 4) {
                case 0:
                    pool.push_back(scalar_rhs
                                       ? Pair{ct_add(a.ct, sb), f_add(a.plain, sb, fx.q)}
                                       : Pair{ct_add(a.ct, b.ct), f_add(a.plain, b.plain, fx.q)});
                    break;
                case 1:
                    pool.push_back(scalar_rhs
                                       ? Pair{ct_sub(a.ct, sb), f_sub(a.plain, sb, fx.q)}
                                       : Pair{ct_sub(a.ct, b.ct), f_sub(a.plain, b.plain, fx.q)});
                    break;
                case 2:
                    pool.push_back(scalar_rhs
                                       ? Pair{ct_mul(a.ct, sb), f_mul(a.plain, sb, fx.q)}
                                       : Pair{ct_mul(a.ct, b.ct), f_mul(a.plain, b.plain, fx.q)});
                    break;
                default:
                    // Keep exponents small so evaluation stays cheap.
                    pool.push_back({ct_pow(a.ct, sb % 16), f_pow(a.plain, sb % 16, fx.q)});
                    break;
            }
        }
        const Pair& last = pool.back();
        CHECK(fx.dec(last.ct) == last.plain);
    }
}

TEST_CASE("equal plaintexts seal to distinct bytes") {
    Fixture fx;
    std::set<std::vector<std::uint8_t>> seen;
    for (int i = 0; i < 10000; ++i) {
        auto bytes = serialize_ct(fx.enc(1));
        CHECK(seen.insert(std::move(bytes)).second);
    }
    CHECK(seen.size() == 10000);
}

TEST_CASE("sealed bytes do not contain the plaintext trivially") {
    // The second sealed word is m + h^k mod q, never m itself (h^k == 0 is
    // impossible since h^k is a power of a generator).
    Fixture fx;
    for (int i = 0; i < 100; ++i) {
        auto ct = fx.enc(42);
        REQUIRE(ct->is_leaf());
        const auto& sealed = ct->leaf().sealed;
        REQUIRE(sealed.size() == 16);
        std::uint64_t c2 = 0;
        for (int b = 8; b < 16; ++b) c2 = (c2 << 8) | sealed[static_cast<std::size_t>(b)];
        CHECK(c2 != 42);
    }
}

TEST_CASE("serialize round trip") {
    Fixture fx;
    auto leaf = fx.enc(9);
    auto bytes = serialize_ct(leaf);
    auto back = deserialize_ct(bytes);
    CHECK(structurally_equal(*leaf, *back));
    CHECK(serialize_ct(back) == bytes);
    CHECK(fx.dec(back) == 9);

    auto node = ct_mul(ct_add(leaf, 3), ct_sub(leaf, fx.enc(2)));
    auto nb = serialize_ct(node);
    auto nback = deserialize_ct(nb);
    CHECK(structurally_equal(*node, *nback));
    CHECK(fx.dec(nback) == fx.dec(node));
    CHECK(serialize_ct(nback) == nb);
}

TEST_CASE("shared nodes serialize once") {
    Fixture fx;
    auto shared = fx.enc(4);
    auto once = ct_add(shared, 0);
    auto twice = ct_mul(ct_add(shared, 0), ct_add(shared, 1));
    // `twice` references `shared` twice but the encoding emits the leaf once
    // plus a small back reference, so it is far smaller than two copies.
    auto sz_once = serialize_ct(once).size();
    auto sz_twice = serialize_ct(twice).size();
    CHECK(sz_twice < 2 * sz_once);

    auto back = deserialize_ct(serialize_ct(twice));
    CHECK(structurally_equal(*twice, *back));
    CHECK(fx.dec(back) == 20);
    // Sharing survives the round trip: the node count stays the same.
    CHECK(total_node_count(*back) == total_node_count(*twice));
}

TEST_CASE("malformed bytes are rejected") {
    Fixture fx;
    auto bytes = serialize_ct(fx.enc(1));
    CHECK_THROWS_AS(deserialize_ct(std::vector<std::uint8_t>{}), CryptoError);
    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_AS(deserialize_ct(truncated), CryptoError);
    auto bad_tag = bytes;
    bad_tag[0] = 0xff;
    CHECK_THROWS_AS(deserialize_ct(bad_tag), CryptoError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_ct(trailing), CryptoError);
}

TEST_CASE("op node count") {
    Fixture fx;
    auto a = fx.enc(1);
    CHECK(op_node_count(*a) == 0);
    auto b = ct_add(a, 1);
    CHECK(op_node_count(*b) == 1);
    auto c = ct_mul(b, b);
    CHECK(op_node_count(*c) == 2);  // shared node counted once
    CHECK(total_node_count(*c) == 3);
}

TEST_CASE("deep chains evaluate without recursion limits") {
    Fixture fx;
    CtPtr ct = fx.enc(0);
    const int depth = 1 << 14;
    for (int i = 0; i < depth; ++i) ct = ct_add(ct, 1);
    CHECK(fx.dec(ct) == static_cast<Field>(depth));
    auto bytes = serialize_ct(ct);
    auto back = deserialize_ct(bytes);
    CHECK(fx.dec(back) == static_cast<Field>(depth));
    CHECK(op_node_count(*back) == depth);
}

TEST_CASE("keygen ids are unique even with equal seeds") {
    Rng r1(1), r2(1);
    KeyPair k1 = keygen(SchemeParams{}, r1);
    KeyPair k2 = keygen(SchemeParams{}, r2);
    CHECK(key_id_hex(k1.pub.key_id) != key_id_hex(k2.pub.key_id));
}
