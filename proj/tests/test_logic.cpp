#include <doctest.h>

#include <random>

#include "psimc/errors.hpp"
#include "psimc/logic.hpp"
#include "test_util.hpp"

using namespace psimc;
using namespace psimc::logic;

TEST_CASE("atom names") {
    CHECK(valid_atom_name("a"));
    CHECK(valid_atom_name("banList"));
    CHECK(valid_atom_name("_x9"));
    CHECK(!valid_atom_name("9x"));
    CHECK(!valid_atom_name(""));
    CHECK(!valid_atom_name("a-b"));
}

TEST_CASE("signature sorts and deduplicates") {
    Signature sig({"b", "a", "b", "c"});
    CHECK(sig.atoms() == std::vector<std::string>{"a", "b", "c"});
    CHECK(sig.index_of("b") == 1);
    CHECK(!sig.index_of("zz").has_value());
    CHECK_THROWS_AS(Signature({"bad name"}), SignatureError);
}

TEST_CASE("parser goldens") {
    CHECK(to_string(*parse_formula("a & b | c")) == "a & b | c");
    CHECK(to_string(*parse_formula("a & (b | c)")) == "a & (b | c)");
    CHECK(to_string(*parse_formula("a -> b -> c")) == "a -> b -> c");
    CHECK(to_string(*parse_formula("(a -> b) -> c")) == "(a -> b) -> c");
    CHECK(to_string(*parse_formula("!(a & b)")) == "!(a & b)");
    CHECK(to_string(*parse_formula("!a & b")) == "!a & b");
    CHECK(to_string(*parse_formula("  a  ")) == "a");
    CHECK(structurally_equal(*parse_formula("a -> b -> c"),
                             *parse_formula("a -> (b -> c)")));
    CHECK(!structurally_equal(*parse_formula("a -> b -> c"),
                              *parse_formula("(a -> b) -> c")));
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse_formula(""), ParseError);
    CHECK_THROWS_AS(parse_formula("a &"), ParseError);
    CHECK_THROWS_AS(parse_formula("(a"), ParseError);
    CHECK_THROWS_AS(parse_formula("a b"), ParseError);
    CHECK_THROWS_AS(parse_formula("a @ b"), ParseError);
    try {
        parse_formula("a & ?");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 4);
    }
    try {
        parse_kb("a\nb &\nc");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("kb parsing skips comments and deduplicates") {
    KnowledgeBase kb = parse_kb("# header\na&b\n\na & b\nb\n");
    CHECK(kb.size() == 2);
    KnowledgeBase same = parse_kb("b\na  &  b");
    CHECK(kb == same);
}

TEST_CASE("print parse round trip") {
    std::mt19937_64 rng(42);
    std::vector<std::string> atoms{"a", "b", "c", "d"};
    for (int i = 0; i < 500; ++i) {
        auto f = testutil::random_formula(rng, atoms, 6);
        auto back = parse_formula(to_string(*f));
        CHECK(structurally_equal(*f, *back));
    }
}

TEST_CASE("interpretation index convention") {
    Interpretation w = Interpretation::from_index(6, 3);
    CHECK(w.bits == std::vector<std::uint8_t>{1, 1, 0});
    CHECK(w.to_string() == "110");
    CHECK(w.to_index() == 6);
    for (std::uint64_t i = 0; i < 16; ++i)
        CHECK(Interpretation::from_index(i, 4).to_index() == i);
}

TEST_CASE("three valued connectives") {
    using enum TriValue;
    CHECK(tri_not(Both) == Both);
    CHECK(tri_not(True) == False);
    CHECK(tri_and(Both, True) == Both);
    CHECK(tri_and(Both, False) == False);
    CHECK(tri_or(Both, False) == Both);
    CHECK(tri_or(Both, True) == True);
}

TEST_CASE("implication in three values") {
    Signature sig({"a", "b"});
    auto f = parse_formula("a -> b");
    ThreeValuedInterpretation v{{TriValue::Both, TriValue::False}};
    CHECK(eval3(*f, v, sig) == TriValue::Both);
    CHECK(sat3(*f, v, sig));
    ThreeValuedInterpretation w{{TriValue::True, TriValue::False}};
    CHECK(eval3(*f, w, sig) == TriValue::False);
    CHECK(!sat3(*f, w, sig));
}

TEST_CASE("eval3 restricted to two values agrees with eval2") {
    std::mt19937_64 rng(7);
    std::vector<std::string> atom_names{"a", "b", "c", "d"};
    Signature sig(atom_names);
    for (int trial = 0; trial < 300; ++trial) {
        auto f = testutil::random_formula(rng, atom_names, 4);
        for (std::uint64_t i = 0; i < 16; ++i) {
            Interpretation w = Interpretation::from_index(i, 4);
            ThreeValuedInterpretation v;
            for (auto b : w.bits)
                v.values.push_back(b ? TriValue::True : TriValue::False);
            CHECK(eval2(*f, w, sig) == (eval3(*f, v, sig) == TriValue::True));
        }
    }
}

TEST_CASE("signature errors") {
    Signature sig({"a", "b"});
    auto f = parse_formula("a & z");
    // a must hold so evaluation actually reaches the unknown atom.
    Interpretation w = Interpretation::from_index(3, 2);
    CHECK_THROWS_AS(eval2(*f, w, sig), SignatureError);
    Interpretation narrow = Interpretation::from_index(0, 1);
    CHECK_THROWS_AS(eval2(*parse_formula("a"), narrow, sig), SignatureError);
    KnowledgeBase kb = parse_kb("a & z");
    CHECK_THROWS_AS(models(kb, sig), SignatureError);
}

TEST_CASE("models and satisfaction sequence correspond") {
    std::mt19937_64 rng(11);
    std::vector<std::string> atom_names{"p", "q", "r"};
    Signature sig(atom_names);
    for (int trial = 0; trial < 200; ++trial) {
        KnowledgeBase kb = testutil::random_kb(rng, atom_names, 3, 3);
        auto mods = models(kb, sig);
        BitSequence seq = satisfaction_sequence(kb, sig);
        REQUIRE(seq.size() == 8);
        std::size_t hits = 0;
        for (std::uint64_t i = 0; i < 8; ++i) {
            bool in_models = false;
            for (const auto& m : mods) in_models |= m.to_index() == i;
            CHECK(in_models == (seq[i] == 1));
            hits += seq[i];
        }
        CHECK(hits == mods.size());
    }
}

TEST_CASE("model enumeration is ascending") {
    Signature sig({"a", "b"});
    auto mods = models(parse_kb("a | b"), sig);
    REQUIRE(mods.size() == 3);
    CHECK(mods[0].to_index() == 1);
    CHECK(mods[1].to_index() == 2);
    CHECK(mods[2].to_index() == 3);
}

TEST_CASE("atom cap") {
    std::vector<std::string> many;
    for (int i = 0; i < 25; ++i) many.push_back("a" + std::to_string(i));
    Signature sig(many);
    CHECK_THROWS_AS(models(parse_kb("a0"), sig), CapError);
    CHECK_NOTHROW(models(parse_kb("a0"), sig, 25));
}

TEST_CASE("closed world interpretation goldens") {
    Signature abc({"a", "b", "c"});
    CHECK(cwa_interpretation(parse_kb("a & b"), abc).to_string() == "110");
    Signature ab({"a", "b"});
    CHECK(cwa_interpretation(parse_kb("a | b"), ab).to_string() == "00");
    CHECK_THROWS_AS(cwa_interpretation(parse_kb("a\n!a"), ab), InputError);
}

TEST_CASE("single both flip preserves values or yields both") {
    std::mt19937_64 rng(1337);
    std::vector<std::string> atom_names{"a", "b", "c", "d"};
    Signature sig(atom_names);
    for (int trial = 0; trial < 1000; ++trial) {
        auto f = testutil::random_formula(rng, atom_names, 4);
        auto v = testutil::random_tri(rng, 4);
        std::size_t at = rng() % 4;
        auto flipped = v;
        flipped.values[at] = TriValue::Both;
        TriValue before = eval3(*f, v, sig);
        TriValue after = eval3(*f, flipped, sig);
        CHECK((after == before || after == TriValue::Both));
    }
}

TEST_CASE("both flips keep two valued models designated") {
    std::mt19937_64 rng(2024);
    std::vector<std::string> atom_names{"a", "b", "c", "d"};
    Signature sig(atom_names);
    int checked = 0;
    while (checked < 1000) {
        auto f = testutil::random_formula(rng, atom_names, 4);
        std::vector<Interpretation> sat;
        for (std::uint64_t i = 0; i < 16; ++i) {
            Interpretation w = Interpretation::from_index(i, 4);
            if (eval2(*f, w, sig)) sat.push_back(w);
        }
        if (sat.empty()) continue;
        const Interpretation& w = sat[rng() % sat.size()];
        ThreeValuedInterpretation v;
        for (auto b : w.bits) v.values.push_back(b ? TriValue::True : TriValue::False);
        std::uint64_t mask = rng() & 15;
        for (std::size_t j = 0; j < 4; ++j)
            if (mask & (1ull << j)) v.values[j] = TriValue::Both;
        CHECK(sat3(*f, v, sig));
        ++checked;
    }
}
