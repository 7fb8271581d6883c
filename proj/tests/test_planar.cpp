#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace khs;
using namespace khs::testing;

TEST_CASE("PD parsing: right trefoil anchor") {
    auto T = parse_pd("X[1,5,2,4] X[3,1,4,6] X[5,3,6,2]");
    REQUIRE(T.crossings.size() == 3);
    CHECK(T.writhe() == 3);
    CHECK(T.components() == 1);
    auto S = seifert_resolve(T);
    CHECK(S.r == 2);
    CHECK(S.circle_label[0] != S.circle_label[1]);
}

TEST_CASE("PD parsing: errors and the empty diagram") {
    auto E = parse_pd("");
    CHECK(E.crossings.empty());
    CHECK(E.writhe() == 0);
    CHECK_THROWS_AS(parse_pd("X[1,5,2,4] X[3,1,4,7]"), ParseError);
    CHECK_THROWS_AS(parse_pd("X[1,5,2"), ParseError);
    CHECK_THROWS_AS(parse_pd("Y[1,2,3,4]"), ParseError);
}

TEST_CASE("PD round trip through the emitter") {
    for (auto T0 : {parse_braid({1, 1, 1}), parse_braid({1, -2, 1, -2}), pretzel_diagram(2, 3, 5)}) {
        auto T1 = parse_pd(emit_pd(T0));
        CHECK(T1.crossings.size() == T0.crossings.size());
        CHECK(std::abs(T1.writhe()) == std::abs(T0.writhe()));
        CHECK(T1.components() == T0.components());
        CHECK(seifert_resolve(T1).r == seifert_resolve(T0).r);
    }
}

TEST_CASE("braid words") {
    auto T = parse_braid({1, 1, 1});
    CHECK(T.writhe() == 3);
    CHECK(T.components() == 1);
    CHECK(seifert_resolve(T).r == 2);

    auto U = parse_braid({});
    CHECK(U.free_loops == 1);
    CHECK(seifert_resolve(U).r == 1);

    // a cancelling pair traces to a two-component unlink; the plat closure of
    // the same word is a one-component unknot diagram
    auto C = parse_braid({1, -1});
    CHECK(C.writhe() == 0);
    CHECK(C.components() == 2);
    auto P = parse_braid({1, -1}, true);
    CHECK(P.components() == 1);

    CHECK_THROWS_AS(parse_braid({1, 0, 2}), ParseError);
    CHECK_THROWS_AS(parse_braid_text("1 x 2"), ParseError);
}

TEST_CASE("writhe is the signed crossing count") {
    std::mt19937 rng(11);
    for (int i = 0; i < 20; ++i) {
        auto T = parse_braid(random_braid_word(rng, 8, 3));
        CHECK(T.writhe() == T.n_plus() - T.n_minus());
        CHECK(2 * (T.n_plus() - T.n_minus()) == 2 * seifert_resolve(T).writhe);
    }
}

TEST_CASE("seifert labels differ across every crossing") {
    std::mt19937 rng(23);
    for (int i = 0; i < 30; ++i) {
        auto T = parse_braid(random_braid_word(rng, 8, 4));
        auto S = seifert_resolve(T);
        for (int k = 0; k < (int)T.crossings.size(); ++k) {
            // the two smoothing strands at k
            int s0 = 0;
            int s1 = (T.crossings[k].sign > 0) ? 2 : 1;
            int c0 = S.comp_of_slot[k][s0], c1 = S.comp_of_slot[k][s1];
            REQUIRE(c0 != c1);
            CHECK(S.label_of(c0) != S.label_of(c1));
        }
    }
}

TEST_CASE("seifert in-boundary matchings are planar") {
    for (int q : {1, 2, 3, -3})
        for (int sg : {1, -1}) {
            auto S = seifert_resolve(twist_tangle(q, sg));
            CHECK(S.in_object.is_planar());
        }
}

TEST_CASE("pretzel construction") {
    auto P = pretzel_diagram(2, 3, 5);
    CHECK(P.crossings.size() == 10);
    CHECK(P.components() == 1);
    // p = 0 degenerates to nested clasps but stays a knot
    auto P0 = pretzel_diagram(0, 3, 5);
    CHECK(P0.crossings.size() == 8);
    CHECK(P0.components() == 1);
    CHECK_THROWS_AS(pretzel_diagram(2, 2, 3), SemanticError);
    // explicitly allowed links construct fine
    auto L = pretzel_diagram(2, 2, 3, true);
    CHECK(L.components() == 2);
    // piece orientations mirror the whole
    auto parts = pretzel_parts(3, -5, 7);
    for (int i = 0; i < 3; ++i)
        for (size_t k = 0; k < parts.pieces[i].crossings.size(); ++k)
            CHECK(parts.pieces[i].crossings[k].sign ==
                  parts.whole.crossings[parts.crossing_base[i] + k].sign);
}

TEST_CASE("twist tangles force the requested signs") {
    for (int q : {1, 4, -1, -4})
        for (int sg : {1, -1}) {
            auto T = twist_tangle(q, sg);
            REQUIRE(T.crossings.size() == (size_t)std::abs(q));
            for (auto& c : T.crossings) CHECK(c.sign == sg);
        }
    // oriented resolution shape: parallel twists keep two strands, the
    // antiparallel ones stack q-1 circles
    auto S = seifert_resolve(twist_tangle(3, 1));
    CHECK(S.r == 0);
    CHECK(S.arcs.size() == 2);
    auto S2 = seifert_resolve(twist_tangle(3, -1));
    CHECK(S2.r == 2);
    CHECK(S2.arcs.size() == 2);
    CHECK(S2.arc_label[0] != S2.arc_label[1]);
}

TEST_CASE("first Reidemeister moves") {
    auto T = parse_braid({1, 1, 1});
    auto check = [&](RMove m, int dw) {
        RSite s;
        s.move = m;
        s.edge = 1;
        auto res = apply_reidemeister(T, s);
        CHECK(res.dw == dw);
        CHECK(res.dr == 1);
        CHECK(res.after.crossings.size() == 4);
    };
    check(RMove::R1Plus, 1);
    check(RMove::R1Minus, 1);
    check(RMove::R1pPlus, -1);
    check(RMove::R1pMinus, -1);
}

TEST_CASE("R2 and its inverse round trip") {
    auto T = parse_braid({1, 1, 1});
    auto canon0 = canonical_pd_string(T);
    auto sites = enumerate_r2_sites(T);
    REQUIRE(!sites.empty());
    int round_trips = 0;
    for (size_t i = 0; i < sites.size() && round_trips < 5; ++i) {
        auto res = apply_reidemeister(T, sites[i]);
        CHECK(res.dw == 0);
        auto inv_sites = enumerate_r2inv_sites(res.after);
        REQUIRE(!inv_sites.empty());
        for (auto& inv : inv_sites) {
            auto back = apply_reidemeister(res.after, inv);
            if (back.after.crossings.size() != T.crossings.size()) continue;
            if (canonical_pd_string(back.after) == canon0) {
                ++round_trips;
                break;
            }
        }
    }
    CHECK(round_trips > 0);
}

TEST_CASE("R3 on a braid triangle") {
    auto B = parse_braid({1, 2, 1, 1, 2, 2});
    auto sites = enumerate_r3_sites(B);
    REQUIRE(!sites.empty());
    auto res = apply_reidemeister(B, sites[0]);
    CHECK(res.dw == 0);
    CHECK(res.after.crossings.size() == B.crossings.size());
    // a second application at the matching face undoes the move
    auto again = enumerate_r3_sites(res.after);
    bool undone = false;
    for (auto& s : again) {
        auto back = apply_reidemeister(res.after, s);
        if (canonical_pd_string(back.after) == canonical_pd_string(B)) undone = true;
    }
    CHECK(undone);
}
