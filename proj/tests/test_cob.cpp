#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"

using namespace khs;
using F = Rat;

namespace {

CobLin<F> closed_surface(int genus, int dots) {
    RawSurface<F> s;
    s.src = Object::empty();
    s.tgt = Object::empty();
    RawComponent c;
    c.genus = genus;
    c.dots = dots;
    s.comps.push_back(c);
    return normalize(s);
}

Mono<F> scalar_of(const CobLin<F>& v) {
    REQUIRE(v.terms.size() == 1);
    REQUIRE(v.terms.begin()->first == 0);
    return v.terms.begin()->second;
}

} // namespace

TEST_CASE("closed surface evaluation") {
    CHECK(closed_surface(0, 0).is_zero());
    CHECK(scalar_of(closed_surface(0, 1)).c == F(1));
    CHECK(scalar_of(closed_surface(0, 1)).h == 0);
    // k dots collapse to H^(k-1)
    for (int k = 1; k <= 4; ++k) {
        auto v = scalar_of(closed_surface(0, k));
        CHECK(v.c == F(1));
        CHECK(v.h == k - 1);
    }
    // genus table: 0 for even genus, 2 H^(g-1) for odd
    CHECK(scalar_of(closed_surface(1, 0)).c == F(2));
    CHECK(scalar_of(closed_surface(1, 0)).h == 0);
    CHECK(closed_surface(2, 0).is_zero());
    CHECK(scalar_of(closed_surface(3, 0)).c == F(2));
    CHECK(scalar_of(closed_surface(3, 0)).h == 2);
    // dotted: H^g for even genus, H^g (odd uses one dot eaten by the handle)
    CHECK(scalar_of(closed_surface(1, 1)).c == F(1));
    CHECK(scalar_of(closed_surface(1, 1)).h == 1);
    CHECK(scalar_of(closed_surface(2, 1)).c == F(1));
    CHECK(scalar_of(closed_surface(2, 1)).h == 2);
    // sphere with 3 dots = H^2
    CHECK(scalar_of(closed_surface(0, 3)).h == 2);
}

TEST_CASE("delooping maps compose to identities") {
    Object circ{{}, 1, 0};
    auto dm = deloop_maps<F>(circ, 0);
    CHECK(compose(dm.plus, circ, dm.plus, dm.fwd_plus, dm.back_plus) ==
          CobLin<F>::identity(dm.plus));
    CHECK(compose(dm.minus, circ, dm.minus, dm.fwd_minus, dm.back_minus) ==
          CobLin<F>::identity(dm.minus));
    CHECK(compose(dm.minus, circ, dm.plus, dm.fwd_plus, dm.back_minus).is_zero());
    CHECK(compose(dm.plus, circ, dm.minus, dm.fwd_minus, dm.back_plus).is_zero());

    // back o fwd equals the cylinder in normal form
    auto total = compose(circ, dm.plus, circ, dm.back_plus, dm.fwd_plus) +
                 compose(circ, dm.minus, circ, dm.back_minus, dm.fwd_minus);
    RawSurface<F> cyl;
    cyl.src = circ;
    cyl.tgt = circ;
    RawComponent cc;
    cc.src_arcs = {0};
    cc.tgt_arcs = {0};
    cyl.comps.push_back(cc);
    CHECK(total == normalize(cyl));
}

namespace {

// normal form of the identity on an object that may carry circles
CobLin<F> identity_surface(const Object& obj) {
    RawSurface<F> raw;
    raw.src = obj;
    raw.tgt = obj;
    for (int a = 0; a < obj.narcs() + obj.circles; ++a) {
        RawComponent c;
        c.src_arcs = {a};
        c.tgt_arcs = {a};
        raw.comps.push_back(c);
    }
    return normalize(raw);
}

} // namespace

TEST_CASE("delooping on objects with extra circles and arcs") {
    Object obj{{1, 0}, 2, 0}; // one arc, two circles
    for (int ci : {0, 1}) {
        auto dm = deloop_maps<F>(obj, ci);
        auto e = compose(dm.plus, obj, dm.plus, dm.fwd_plus, dm.back_plus);
        CHECK(e == identity_surface(dm.plus));
        auto f = compose(dm.minus, obj, dm.minus, dm.fwd_minus, dm.back_minus);
        CHECK(f == identity_surface(dm.minus));
    }
}

TEST_CASE("cup and cap composites") {
    Object circ{{}, 1, 0};
    auto dm = deloop_maps<F>(circ, 0);
    const auto& eps_y = dm.fwd_plus;
    const auto& eps = dm.fwd_minus;
    const auto& iota = dm.back_plus;
    const auto& iota_x = dm.back_minus;
    // eps o iota: sphere
    CHECK(compose(dm.plus, circ, dm.minus, eps, iota).is_zero());
    // eps_Y o iota = 1, eps_Y o iota_X = 0
    CHECK(scalar_of(compose(dm.plus, circ, dm.plus, eps_y, iota)).c == F(1));
    CHECK(compose(dm.minus, circ, dm.plus, eps_y, iota_x).is_zero());
    // eps o iota_X = dotted sphere = 1
    CHECK(scalar_of(compose(dm.minus, circ, dm.minus, eps, iota_x)).c == F(1));
}

TEST_CASE("Frobenius structure through pairs of pants") {
    // m: two circles -> one circle as a single genus-0 component
    Object two{{}, 2, 0};
    Object one{{}, 1, 0};
    RawSurface<F> pants;
    pants.src = two;
    pants.tgt = one;
    RawComponent c;
    c.src_arcs = {0, 1};
    c.tgt_arcs = {0};
    pants.comps.push_back(c);
    CobLin<F> m = normalize(pants);

    auto dm1 = deloop_maps<F>(one, 0);
    // iota_X x iota_X : empty -> two circles
    RawSurface<F> xx;
    xx.src = Object::empty();
    xx.tgt = two;
    RawComponent d1, d2;
    d1.tgt_arcs = {0};
    d1.dots = 1;
    d2.tgt_arcs = {1};
    d2.dots = 1;
    xx.comps = {d1, d2};
    CobLin<F> ixx = normalize(xx);
    // m(X (x) X) = H X
    CobLin<F> mx = compose(Object::empty(), two, one, m, ixx);
    CobLin<F> hx = dm1.back_minus.scaled(Mono<F>(F::one(), 1));
    CHECK(mx == hx);

    // Delta(1): one circle -> two circles, X(x)1 + 1(x)X - H 1(x)1
    RawSurface<F> copants;
    copants.src = one;
    copants.tgt = two;
    RawComponent cc;
    cc.src_arcs = {0};
    cc.tgt_arcs = {0, 1};
    copants.comps.push_back(cc);
    CobLin<F> delta = normalize(copants);
    CobLin<F> d_of_1 = compose(Object::empty(), one, two, delta, dm1.back_plus);
    CobLin<F> expect;
    expect.add_term(0b01, Mono<F>::one());
    expect.add_term(0b10, Mono<F>::one());
    expect.add_term(0, Mono<F>(-F::one(), 1));
    CHECK(d_of_1 == expect);
    // Delta(X) = X (x) X
    CobLin<F> d_of_x = compose(Object::empty(), one, two, delta, dm1.back_minus);
    CobLin<F> xtx;
    xtx.add_term(0b11, Mono<F>::one());
    CHECK(d_of_x == xtx);
}

TEST_CASE("quantum degrees") {
    // identity cylinder on one arc has qdeg 0
    Object arc{{1, 0}, 0, 0};
    CHECK(*CobLin<F>::identity(arc).qdeg(arc, arc) == 0);
    // dotted cup into a circle: -1 before shifts
    Object circ{{}, 1, 0};
    CobLin<F> cup_x;
    cup_x.add_term(1, Mono<F>::one());
    CHECK(*cup_x.qdeg(Object::empty(), circ) == -1);
    // hollow dot = dot - H stays homogeneous
    CobLin<F> cup_y;
    cup_y.add_term(1, Mono<F>::one());
    cup_y.add_term(0, Mono<F>(-F::one(), 1));
    CHECK(*cup_y.qdeg(Object::empty(), circ) == -1);
    // qdeg additivity under composition on saddles
    Object e0{{3, 2, 1, 0}, 0, 0};
    Object e1{{1, 0, 3, 2}, 0, 0};
    CobLin<F> saddle;
    saddle.add_term(0, Mono<F>::one());
    CHECK(*saddle.qdeg(e0, e1) == -1);
    auto ss = compose(e0, e1, e0, saddle, saddle);
    CHECK(*ss.qdeg(e0, e0) == -2);
}

TEST_CASE("star macro squares to H^2") {
    // star = 2 dot - H: a component with a star twice = adding a handle twice
    Object circ{{}, 1, 0};
    auto star = [&](const CobLin<F>& base, int cyc) {
        CobLin<F> dotted;
        for (auto& [mask, m] : base.terms) {
            if ((mask >> cyc) & 1) // second dot on a disk is worth H
                dotted.add_term(mask, Mono<F>(F(2) * m.c, m.h + 1));
            else
                dotted.add_term(mask | ((uint64_t)1 << cyc), Mono<F>(F(2) * m.c, m.h));
            dotted.add_term(mask, Mono<F>(-m.c, m.h + 1));
        }
        return dotted;
    };
    // on a dotted cup: star(star(iota)) should equal H^2 iota up to the dot
    // absorption rules; verify via closing with eps_Y and eps
    auto dm = deloop_maps<F>(circ, 0);
    CobLin<F> ss = star(star(dm.back_plus, 0), 0);
    // close: eps(ss) vs H^2 eps(iota)
    auto closed = compose(dm.plus, circ, dm.minus, dm.fwd_minus, ss);
    auto expect = compose(dm.plus, circ, dm.minus, dm.fwd_minus, dm.back_plus)
                      .scaled(Mono<F>(F::one(), 2));
    CHECK(closed == expect);
    auto closed2 = compose(dm.plus, circ, dm.plus, dm.fwd_plus, ss);
    auto expect2 = compose(dm.plus, circ, dm.plus, dm.fwd_plus, dm.back_plus)
                       .scaled(Mono<F>(F::one(), 2));
    CHECK(closed2 == expect2);
}

TEST_CASE("composition is associative on random morphisms") {
    std::mt19937 rng(7);
    auto random_matching = [&](int n) {
        // random planar matching by random balanced parentheses
        std::vector<int> m(n, -1);
        std::vector<int> stack;
        int opens = n / 2, closes = n / 2;
        for (int p = 0; p < n; ++p) {
            bool open = opens > 0 && (stack.empty() || rng() % 2);
            if (open) {
                stack.push_back(p);
                --opens;
            } else {
                m[p] = stack.back();
                m[stack.back()] = p;
                stack.pop_back();
                --closes;
            }
        }
        return m;
    };
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 * (1 + (int)(rng() % 3));
        Object A{random_matching(n), (int)(rng() % 2), 0};
        Object B{random_matching(n), (int)(rng() % 2), 0};
        Object C{random_matching(n), (int)(rng() % 2), 0};
        Object D{random_matching(n), 0, 0};
        auto random_mor = [&](const Object& s, const Object& t) {
            CyclePlan plan(s, t);
            CobLin<F> v;
            int terms = 1 + rng() % 3;
            int base = (int)(rng() % 3);
            for (int i = 0; i < terms; ++i) {
                uint64_t mask = rng() & (((uint64_t)1 << plan.ncyc) - 1);
                int k = __builtin_popcountll(mask);
                // homogeneous: h determined by the dot count
                v.add_term(mask, Mono<F>(F(1 + (long)(rng() % 5)), base - k));
            }
            return v;
        };
        CobLin<F> f = random_mor(A, B), g = random_mor(B, C), h = random_mor(C, D);
        auto left = compose(A, C, D, h, compose(A, B, C, g, f));
        auto right = compose(A, B, D, compose(B, C, D, h, g), f);
        CHECK(left == right);
        if (A.circles == 0) CHECK(compose(A, A, B, f, CobLin<F>::identity(A)) == f);
        if (B.circles == 0) CHECK(compose(A, B, B, CobLin<F>::identity(B), f) == f);
    }
}

TEST_CASE("debug serialization is stable") {
    Object circ{{}, 1, 0};
    auto dm = deloop_maps<F>(circ, 0);
    CHECK(dm.fwd_plus.dump(circ, dm.plus) == "-1*H^1*[-] + 1*[•]");
    CHECK(dm.back_minus.dump(dm.minus, circ) == "1*[•]");
    // cut cylinder golden
    RawSurface<F> cyl;
    cyl.src = circ;
    cyl.tgt = circ;
    RawComponent cc;
    cc.src_arcs = {0};
    cc.tgt_arcs = {0};
    cyl.comps.push_back(cc);
    CHECK(normalize(cyl).dump(circ, circ) == "-1*H^1*[- -] + 1*[• -] + 1*[- •]");
}
