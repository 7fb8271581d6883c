#pragma once

#include "complex.hpp"

namespace khs {

// ---------------------------------------------------------------------------
// Lee cycles built directly from a Seifert resolution: one cup per circle
// decorated X (dot) or Y (dot - H), one sheet per open arc decorated by the
// idempotent e_X = H^{-1}(dot) or e_Y = 1 - H^{-1}(dot).
// ---------------------------------------------------------------------------

template <class F>
struct LeeCycleData {
    Object source; // the resolved tangle without its circles
    Object target; // with circles
    CobLin<F> value;
};

template <class F>
LeeCycleData<F> lee_cycle(const SeifertData& S, bool reversed = false) {
    LeeCycleData<F> L;
    L.source = S.in_object;
    L.target = S.in_object;
    L.target.circles = (int)S.circles.size();
    CyclePlan plan(L.source, L.target);

    CobLin<F> out;
    out.add_term(0, Mono<F>::one());
    auto apply_dot = [&](int cyc, int label, bool idempotent) {
        CobLin<F> step;
        for (auto& [mask, m] : out.terms) {
            uint64_t dotted = mask | ((uint64_t)1 << cyc);
            if (label == 1) { // X
                if (idempotent)
                    step.add_term(dotted, m.times_h(-1));
                else
                    step.add_term(dotted, m);
            } else { // Y = X - H, e_Y = 1 - H^{-1} X
                if (idempotent) {
                    step.add_term(dotted, Mono<F>(-m.c, m.h - 1));
                    step.add_term(mask, m);
                } else {
                    step.add_term(dotted, m);
                    step.add_term(mask, Mono<F>(-m.c, m.h + 1));
                }
            }
        }
        out = std::move(step);
    };
    for (int j = 0; j < (int)S.circles.size(); ++j) {
        int label = S.circle_label[j];
        if (reversed) label = 1 - label;
        apply_dot(plan.cyc_of_tgt_circle[j], label, false);
    }
    for (int a = 0; a < L.source.narcs(); ++a) {
        int comp = S.in_arc_comp.at(a);
        int label = S.label_of(comp);
        if (reversed) label = 1 - label;
        auto [p, q] = L.source.arc_endpoints(a);
        (void)q;
        apply_dot(plan.cyc_of_point[p], label, true);
    }
    L.value = std::move(out);
    return L;
}

// ---------------------------------------------------------------------------
// Filtered elimination and H-divisibility.
//
// A fully reduced complex over a field has only non-invertible entries, i.e.
// monomials c H^m with m >= 1 between empty objects once the diagram is
// closed. Eliminating pivots in order of increasing H-exponent is a filtered
// change of basis: every Schur correction and every cycle update shifts by
// H^(m' - m) with m' >= m, so the final coordinates stay in the lattice and
// the minimal surviving exponent of the cycle is its divisibility.
// ---------------------------------------------------------------------------

struct DivisibilityResult {
    int dH = 0;
    int sH = 0;
    int writhe = 0;
    int seifert_circles = 0;
    std::vector<std::pair<int, int>> witnesses; // (qshift of generator, H-exponent)
    ReductionStats stats;
};

template <class F>
DivisibilityResult filtered_divisibility(Complex<F> K, CycleVector<F> z, int writhe,
                                         int seifert_circles, ReductionStats* stats = nullptr) {
    if (z.source.points() != 0)
        throw SemanticError("filtered divisibility needs a closed diagram");
    // sanity: strictly reduced input
    for (auto& [deg, mat] : K.diff)
        for (auto& [key, v] : mat) {
            for (auto& [mask, m] : v.terms)
                if (m.h < 0) throw std::logic_error("reduced complex has negative H-exponents");
            if (pivot_coefficient(K, deg, key.first, key.second, false))
                throw SemanticError("complex is not strictly reduced");
        }

    z.check_chain(K); // the tracked class must still be a chain map
    ReductionStats local;
    ReductionStats* st = stats ? stats : &local;
    while (true) {
        // smallest H-exponent pivot, ties by (degree, row, col)
        int best_h = -1;
        std::array<int, 3> at{0, 0, 0};
        for (auto& [deg, mat] : K.diff) {
            std::vector<std::pair<int, int>> keys;
            for (auto& [key, v] : mat) keys.push_back({key.second, key.first});
            std::sort(keys.begin(), keys.end());
            for (auto& [row, col] : keys) {
                auto piv = pivot_coefficient(K, deg, col, row, true);
                if (!piv) continue;
                if (best_h < 0 || piv->h < best_h) {
                    best_h = piv->h;
                    at = {deg, col, row};
                }
            }
        }
        if (best_h < 0) break;
        eliminate_entry(K, &z, at[0], at[1], at[2], st, true);
    }
    for (auto& [deg, mat] : K.diff)
        if (!mat.empty())
            throw std::logic_error("filtered elimination left non-invertible entries");

    DivisibilityResult R;
    R.writhe = writhe;
    R.seifert_circles = seifert_circles;
    if (z.comps.empty()) throw std::logic_error("Lee cycle vanished during reduction");
    int dH = -1;
    for (auto& [j, v] : z.comps) {
        if (v.terms.size() != 1 || v.terms.begin()->first != 0)
            throw std::logic_error("final cycle component is not a scalar");
        const Mono<F>& m = v.terms.begin()->second;
        if (m.h < 0) throw std::logic_error("final H-exponent is negative");
        R.witnesses.push_back({K.obj.at(0)[j].qshift, m.h});
        if (dH < 0 || m.h < dH) dH = m.h;
    }
    R.dH = dH;
    R.sH = 2 * dH + writhe - seifert_circles + 1;
    if (stats) R.stats = *stats;
    return R;
}

// ---------------------------------------------------------------------------
// Full pipeline: scan, reduce, extract.
// ---------------------------------------------------------------------------

template <class F>
DivisibilityResult s_invariant(const TangleDiagram& T, bool allow_links = false,
                               const ScanOptions& opts = {}) {
    if (!T.boundary.empty()) throw SemanticError("the s pipeline needs a closed diagram");
    if (!allow_links && T.components() != 1)
        throw SemanticError("diagram has " + std::to_string(T.components()) +
                            " components; pass the link flag to proceed");
    ScanResult<F> R = scan<F>(T, opts);
    return filtered_divisibility<F>(std::move(R.K), std::move(R.cycle), R.seifert.writhe,
                                    R.seifert.r, &R.stats);
}

// ---------------------------------------------------------------------------
// Closed-form reduced complexes of twist tangles: a length-(|q|+1) zigzag
//
//   E0 --s--> E1{1} --b--> E1{3} --a--> ... (q > 0)
//   E1{-2q+1} --...--> E1{-3} --a--> E1{-1}?... mirrored for q < 0,
//
// with a = dot_up + dot_low - H and b = dot_up - dot_low on E1, bigraded by
// the orientation, together with the image of the Lee cycle under the
// retraction: trivial for the parallel orientation of positive twists,
// +-H^(q-1) times the reduced cycle for the antiparallel one.
// ---------------------------------------------------------------------------

template <class F>
struct TwistReduced {
    Complex<F> K;
    CycleVector<F> cycle;
    SeifertData seifert;
};

template <class F>
TwistReduced<F> twist_reduced(int q, int sign) {
    TwistReduced<F> R;
    TangleDiagram T = twist_tangle(q, sign);
    R.seifert = seifert_resolve(T);

    Object E0{{3, 2, 1, 0}, 0, 0}; // vertical strands: 0-3, 1-2
    Object E1{{1, 0, 3, 2}, 0, 0}; // cap/cup: 0-1, 2-3
    int n = std::abs(q);

    // endomorphism coefficients on E1: cycles (0,1) = upper, (2,3) = lower
    auto make_a = [&] {
        CobLin<F> v;
        v.add_term(0b01, Mono<F>::one());
        v.add_term(0b10, Mono<F>::one());
        v.add_term(0, Mono<F>(-F::one(), 1));
        return v;
    };
    auto make_b = [&] {
        CobLin<F> v;
        v.add_term(0b01, Mono<F>::one());
        v.add_term(0b10, -Mono<F>::one());
        return v;
    };
    CobLin<F> saddle;
    saddle.add_term(0, Mono<F>::one());

    int dh, dq; // bigrading shift applied to the relative complex
    if (q > 0) {
        dh = sign > 0 ? 0 : -n;
        dq = sign > 0 ? n : -2 * n;
    } else {
        dh = sign > 0 ? n : 0;
        dq = sign > 0 ? 2 * n : -n;
    }

    if (q == 0) {
        R.K.obj[0] = {E0};
    } else if (q > 0) {
        R.K.obj[dh] = {E0.shifted(dq)};
        for (int j = 1; j <= n; ++j) R.K.obj[dh + j] = {E1.shifted(2 * j - 1 + dq)};
        R.K.set_entry(dh, 0, 0, saddle);
        for (int j = 1; j < n; ++j) R.K.set_entry(dh + j, 0, 0, j % 2 ? make_b() : make_a());
    } else {
        for (int j = n; j >= 1; --j) R.K.obj[dh - j] = {E1.shifted(-(2 * j - 1) + dq)};
        R.K.obj[dh] = {E0.shifted(dq)};
        R.K.set_entry(dh - 1, 0, 0, saddle);
        for (int j = 1; j < n; ++j) R.K.set_entry(dh - j - 1, 0, 0, j % 2 ? make_b() : make_a());
    }
    R.K.check_degrees();
    R.K.check_d_squared();

    // Lee cycle image: always lands in the homological degree 0 summand
    R.cycle.source = R.seifert.in_object;
    const Object& tgt = R.K.obj.at(0)[0];
    CyclePlan plan(R.cycle.source, tgt);
    CobLin<F> z;
    z.add_term(0, Mono<F>::one());
    for (int a = 0; a < R.cycle.source.narcs(); ++a) {
        int label = R.seifert.label_of(R.seifert.in_arc_comp.at(a));
        auto [p, pq] = R.cycle.source.arc_endpoints(a);
        (void)pq;
        int cyc = plan.cyc_of_point[p];
        CobLin<F> step;
        for (auto& [mask, m] : z.terms) {
            if (label == 1) {
                step.add_term(mask | ((uint64_t)1 << cyc), m.times_h(-1));
            } else {
                step.add_term(mask | ((uint64_t)1 << cyc), Mono<F>(-m.c, m.h - 1));
                step.add_term(mask, m);
            }
        }
        z = std::move(step);
    }
    // the antiparallel positive-twist cycle picks up H^(q-1)
    if (q > 0 && sign < 0) z = z.scaled(Mono<F>(F::one(), n - 1));
    if (q < 0 && sign > 0) {
        // antiparallel orientation of negative twists: plain image
    }
    R.cycle.comps[0] = std::move(z);
    return R;
}

} // namespace khs
