#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "planar.hpp"

namespace khs {

// ---------------------------------------------------------------------------
// Chain complexes in the additive closure: per homological degree a list of
// summand objects, and sparse differentials d: deg -> deg+1 stored
// column-major as (col, row) -> entry.
// ---------------------------------------------------------------------------

template <class F>
struct Complex {
    std::map<int, std::vector<Object>> obj;
    std::map<int, std::map<std::pair<int, int>, CobLin<F>>> diff;

    static Complex unit(int degree = 0) {
        Complex K;
        K.obj[degree].push_back(Object::empty());
        return K;
    }

    int summands() const {
        int n = 0;
        for (auto& [d, v] : obj) n += (int)v.size();
        return n;
    }

    const CobLin<F>* entry(int deg, int col, int row) const {
        auto it = diff.find(deg);
        if (it == diff.end()) return nullptr;
        auto jt = it->second.find({col, row});
        return jt == it->second.end() ? nullptr : &jt->second;
    }

    void set_entry(int deg, int col, int row, CobLin<F> v) {
        if (v.is_zero())
            diff[deg].erase({col, row});
        else
            diff[deg][{col, row}] = std::move(v);
        if (diff[deg].empty()) diff.erase(deg);
    }

    void add_entry(int deg, int col, int row, const CobLin<F>& v) {
        if (v.is_zero()) return;
        auto& slot = diff[deg][{col, row}];
        slot += v;
        if (slot.is_zero()) set_entry(deg, col, row, CobLin<F>::zero());
    }

    // Every differential entry must be quantum degree 0.
    void check_degrees() const {
        for (auto& [d, mat] : diff)
            for (auto& [key, v] : mat) {
                auto q = v.qdeg(obj.at(d)[key.first], obj.at(d + 1)[key.second]);
                if (q && *q != 0) throw std::logic_error("differential entry has nonzero qdeg");
            }
    }

    void check_d_squared() const {
        for (auto& [d, mat] : diff) {
            auto next = diff.find(d + 1);
            if (next == diff.end()) continue;
            // compose all pairs col -> mid -> row
            std::map<std::pair<int, int>, CobLin<F>> acc;
            for (auto& [key1, v1] : mat)
                for (auto& [key2, v2] : next->second) {
                    if (key2.first != key1.second) continue;
                    CobLin<F> prod = compose(obj.at(d)[key1.first], obj.at(d + 1)[key1.second],
                                             obj.at(d + 2)[key2.second], v2, v1);
                    auto& slot = acc[{key1.first, key2.second}];
                    slot += prod;
                }
            for (auto& [key, v] : acc)
                if (!v.is_zero()) throw std::logic_error("d^2 != 0");
        }
    }
};

// A chain map from the unit complex into degree 0, tracked through reductions.
template <class F>
struct CycleVector {
    Object source; // circle-free
    std::map<int, CobLin<F>> comps;

    void check_chain(const Complex<F>& K) const {
        auto it = K.diff.find(0);
        if (it == K.diff.end()) return;
        std::map<int, CobLin<F>> image;
        for (auto& [key, v] : it->second) {
            auto c = comps.find(key.first);
            if (c == comps.end() || c->second.is_zero()) continue;
            image[key.second] +=
                compose(source, K.obj.at(0)[key.first], K.obj.at(1)[key.second], v, c->second);
        }
        for (auto& [row, v] : image)
            if (!v.is_zero()) throw std::logic_error("cycle is not closed (d z != 0)");
    }
};

// ---------------------------------------------------------------------------
// Single-crossing bracket: 0-resolution -> 1-resolution joined by a saddle.
// Boundary points (0,1,2,3) are the crossing slots in rotational order, so
// the 0-resolution pairs (0,1)(2,3) and the 1-resolution pairs (0,3)(1,2).
// ---------------------------------------------------------------------------

template <class F>
Complex<F> crossing_bracket(int sign) {
    Object res0{{1, 0, 3, 2}, 0, 0};
    Object res1{{3, 2, 1, 0}, 0, 0};
    Complex<F> K;
    int deg0 = sign > 0 ? 0 : -1;
    res0.qshift = sign > 0 ? 1 : -2;
    res1.qshift = sign > 0 ? 2 : -1;
    K.obj[deg0] = {res0};
    K.obj[deg0 + 1] = {res1};
    CobLin<F> saddle;
    saddle.add_term(0, Mono<F>::one());
    K.set_entry(deg0, 0, 0, saddle);
    return K;
}

// ---------------------------------------------------------------------------
// Horizontal composition of complexes over a planar arc diagram, with the
// standard alternating signs: the differential of factor i is weighted by
// (-1)^(sum of the degrees of the earlier factors).
// ---------------------------------------------------------------------------

template <class F>
struct PluggedComplex {
    Complex<F> K;
    // (per input: degree, summand index) -> (degree, index) in K
    std::map<std::vector<std::pair<int, int>>, std::pair<int, int>> index;
    std::map<std::pair<int, int>, PluggedObject> prov;
};

template <class F>
PluggedComplex<F> plug_complex(const PAD& D, const std::vector<const Complex<F>*>& parts) {
    int d = (int)parts.size();
    if (d != D.inputs()) throw std::logic_error("plug_complex arity mismatch");
    PluggedComplex<F> out;

    // enumerate all summand tuples
    std::vector<std::vector<std::pair<int, int>>> tuples{{}};
    for (int i = 0; i < d; ++i) {
        std::vector<std::vector<std::pair<int, int>>> next;
        for (auto& t : tuples)
            for (auto& [deg, v] : parts[i]->obj)
                for (int idx = 0; idx < (int)v.size(); ++idx) {
                    auto t2 = t;
                    t2.push_back({deg, idx});
                    next.push_back(std::move(t2));
                }
        tuples = std::move(next);
    }
    for (auto& t : tuples) {
        int deg = 0;
        std::vector<Object> xs;
        for (int i = 0; i < d; ++i) {
            deg += t[i].first;
            xs.push_back(parts[i]->obj.at(t[i].first)[t[i].second]);
        }
        PluggedObject po = plug_obj(D, xs);
        int idx = (int)out.K.obj[deg].size();
        out.K.obj[deg].push_back(po.obj);
        out.index[t] = {deg, idx};
        out.prov[{deg, idx}] = std::move(po);
    }

    // differentials: one factor moves at a time
    for (auto& t : tuples) {
        auto [deg, col] = out.index.at(t);
        std::vector<Object> srcs;
        for (int i = 0; i < d; ++i) srcs.push_back(parts[i]->obj.at(t[i].first)[t[i].second]);
        int sign_exp = 0;
        for (int i = 0; i < d; ++i) {
            auto dit = parts[i]->diff.find(t[i].first);
            if (dit != parts[i]->diff.end()) {
                for (auto& [key, v] : dit->second) {
                    if (key.first != t[i].second) continue;
                    auto t2 = t;
                    t2[i] = {t[i].first + 1, key.second};
                    auto [deg2, row] = out.index.at(t2);
                    if (deg2 != deg + 1) throw std::logic_error("degree bookkeeping broke");
                    std::vector<Object> tgts = srcs;
                    tgts[i] = parts[i]->obj.at(t2[i].first)[t2[i].second];
                    std::vector<CobLin<F>> fs;
                    for (int j = 0; j < d; ++j)
                        fs.push_back(j == i ? v : CobLin<F>::identity(srcs[j]));
                    PluggedObject so, to;
                    CobLin<F> entry = plug_mor(D, srcs, tgts, fs, so, to);
                    if (sign_exp % 2) entry = -entry;
                    out.K.add_entry(deg, col, row, entry);
                }
            }
            sign_exp += t[i].first;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reduction events: delooping a circle and Gaussian elimination of an
// invertible entry. Both carry the tracked cycle along.
// ---------------------------------------------------------------------------

struct ReductionEvent {
    enum Kind { Deloop, Eliminate } kind;
    int degree;
    int a = -1, b = -1; // Deloop: summand index; Eliminate: (col, row)
};

struct ReductionStats {
    long deloops = 0;
    long eliminations = 0;
    std::vector<ReductionEvent> log;
    bool keep_log = false;

    void record(ReductionEvent e) {
        if (e.kind == ReductionEvent::Deloop)
            ++deloops;
        else
            ++eliminations;
        if (keep_log) log.push_back(e);
    }
};

namespace detail {

// Remove summand (deg, idx), shifting later indices down; fixes diff keys and
// cycle component keys.
template <class F>
void erase_summand(Complex<F>& K, CycleVector<F>* cyc, int deg, int idx) {
    auto& v = K.obj.at(deg);
    v.erase(v.begin() + idx);
    auto shift = [&](int j) { return j > idx ? j - 1 : j; };
    if (auto it = K.diff.find(deg); it != K.diff.end()) {
        std::map<std::pair<int, int>, CobLin<F>> nm;
        for (auto& [key, val] : it->second)
            if (key.first != idx) nm[{shift(key.first), key.second}] = std::move(val);
        it->second = std::move(nm);
        if (it->second.empty()) K.diff.erase(it);
    }
    if (auto it = K.diff.find(deg - 1); it != K.diff.end()) {
        std::map<std::pair<int, int>, CobLin<F>> nm;
        for (auto& [key, val] : it->second)
            if (key.second != idx) nm[{key.first, shift(key.second)}] = std::move(val);
        it->second = std::move(nm);
        if (it->second.empty()) K.diff.erase(it);
    }
    if (cyc && deg == 0) {
        std::map<int, CobLin<F>> nm;
        for (auto& [j, val] : cyc->comps)
            if (j != idx) nm[shift(j)] = std::move(val);
        cyc->comps = std::move(nm);
    }
    if (v.empty()) K.obj.erase(deg);
}

} // namespace detail

// Deloop one circle of summand (deg, idx). The summand is replaced by its
// {+1} copy in place; the {-1} copy is appended at the end of the degree.
template <class F>
void deloop_summand(Complex<F>& K, CycleVector<F>* cyc, int deg, int idx, ReductionStats* stats) {
    Object obj = K.obj.at(deg)[idx];
    if (obj.circles == 0) throw std::logic_error("deloop: no circle present");
    auto dm = deloop_maps<F>(obj, obj.circles - 1);
    int idx_minus = (int)K.obj.at(deg).size();
    K.obj.at(deg)[idx] = dm.plus;
    K.obj.at(deg).push_back(dm.minus);

    // incoming entries: post-compose with the forward maps
    if (auto it = K.diff.find(deg - 1); it != K.diff.end()) {
        auto entries = it->second;
        for (auto& [key, v] : entries) {
            if (key.second != idx) continue;
            const Object& src = K.obj.at(deg - 1)[key.first];
            K.set_entry(deg - 1, key.first, idx, compose(src, obj, dm.plus, dm.fwd_plus, v));
            K.set_entry(deg - 1, key.first, idx_minus, compose(src, obj, dm.minus, dm.fwd_minus, v));
        }
    }
    // outgoing entries: pre-compose with the backward maps
    if (auto it = K.diff.find(deg); it != K.diff.end()) {
        auto entries = it->second;
        for (auto& [key, v] : entries) {
            if (key.first != idx) continue;
            const Object& tgt = K.obj.at(deg + 1)[key.second];
            K.set_entry(deg, idx, key.second, compose(dm.plus, obj, tgt, v, dm.back_plus));
            K.set_entry(deg, idx_minus, key.second, compose(dm.minus, obj, tgt, v, dm.back_minus));
        }
    }
    if (cyc && deg == 0) {
        auto it = cyc->comps.find(idx);
        if (it != cyc->comps.end()) {
            CobLin<F> z = it->second;
            cyc->comps.erase(it);
            CobLin<F> zp = compose(cyc->source, obj, dm.plus, dm.fwd_plus, z);
            CobLin<F> zm = compose(cyc->source, obj, dm.minus, dm.fwd_minus, z);
            if (!zp.is_zero()) cyc->comps[idx] = std::move(zp);
            if (!zm.is_zero()) cyc->comps[idx_minus] = std::move(zm);
        }
    }
    if (stats) stats->record({ReductionEvent::Deloop, deg, idx, -1});
}

// Is this entry an isomorphism usable as a Gaussian pivot? In strict mode the
// coefficient must have H-exponent 0; in filtered mode any monomial times the
// identity qualifies (the caller picks minimal exponents first).
template <class F>
std::optional<Mono<F>> pivot_coefficient(const Complex<F>& K, int deg, int col, int row,
                                         bool filtered) {
    const CobLin<F>* e = K.entry(deg, col, row);
    if (!e || e->terms.size() != 1) return std::nullopt;
    auto& [mask, m] = *e->terms.begin();
    if (mask != 0) return std::nullopt;
    if (!filtered && m.h != 0) return std::nullopt;
    const Object& src = K.obj.at(deg)[col];
    const Object& tgt = K.obj.at(deg + 1)[row];
    if (src.match != tgt.match || src.circles != 0 || tgt.circles != 0) return std::nullopt;
    return m;
}

// Gaussian elimination of the invertible entry at (deg, col=src, row=tgt).
template <class F>
void eliminate_entry(Complex<F>& K, CycleVector<F>* cyc, int deg, int col, int row,
                     ReductionStats* stats, bool filtered = false) {
    auto piv = pivot_coefficient(K, deg, col, row, filtered);
    if (!piv) throw std::logic_error("eliminate: entry is not invertible");
    Mono<F> a_inv = piv->inv();

    const Object objX = K.obj.at(deg)[col];
    // gather b: Y -> Z (same row, other cols) and c: X -> W (same col, other rows)
    std::vector<std::pair<int, CobLin<F>>> bs, cs;
    for (auto& [key, v] : K.diff.at(deg)) {
        if (key.second == row && key.first != col) bs.push_back({key.first, v});
        if (key.first == col && key.second != row) cs.push_back({key.second, v});
    }
    for (auto& [y, b] : bs)
        for (auto& [w, c] : cs) {
            const Object& objY = K.obj.at(deg)[y];
            const Object& objW = K.obj.at(deg + 1)[w];
            CobLin<F> corr = compose(objY, objX, objW, c, b).scaled(a_inv);
            K.add_entry(deg, y, w, -corr);
        }
    if (cyc) {
        if (deg + 1 == 0) {
            // retraction on the target side: z_W -= c a^{-1} z_Z
            auto itZ = cyc->comps.find(row);
            if (itZ != cyc->comps.end()) {
                CobLin<F> zZ = itZ->second;
                for (auto& [w, c] : cs) {
                    const Object& objW = K.obj.at(0)[w];
                    CobLin<F> corr = compose(cyc->source, objX, objW, c, zZ).scaled(a_inv);
                    auto& slot = cyc->comps[w];
                    slot += -corr;
                    if (slot.is_zero()) cyc->comps.erase(w);
                }
                cyc->comps.erase(row);
            }
        } else if (deg == 0) {
            cyc->comps.erase(col);
        }
    }
    // remove the two summands (higher degree first keeps `row` valid)
    detail::erase_summand(K, cyc, deg + 1, row);
    detail::erase_summand(K, cyc, deg, col);
    if (stats) stats->record({ReductionEvent::Eliminate, deg, col, row});
}

struct ReduceOptions {
    bool debug_checks = false;
};

// Alternate delooping and strict (H-exponent 0) eliminations to a fixed point.
template <class F>
void reduce(Complex<F>& K, CycleVector<F>* cyc, ReductionStats* stats = nullptr,
            const ReduceOptions& opts = {}) {
    auto audit = [&] {
        if (!opts.debug_checks) return;
        K.check_degrees();
        K.check_d_squared();
        if (cyc) cyc->check_chain(K);
    };
    audit();
    while (true) {
        // deloop first
        bool acted = false;
        for (auto& [deg, v] : K.obj) {
            for (int idx = 0; idx < (int)v.size(); ++idx)
                if (v[idx].circles > 0) {
                    deloop_summand(K, cyc, deg, idx, stats);
                    acted = true;
                    break;
                }
            if (acted) break;
        }
        if (acted) {
            audit();
            continue;
        }
        // then eliminate the first invertible entry in (degree, row, col) order
        for (auto& [deg, mat] : K.diff) {
            std::vector<std::pair<int, int>> keys; // (row, col)
            for (auto& [key, v] : mat) keys.push_back({key.second, key.first});
            std::sort(keys.begin(), keys.end());
            for (auto& [row, col] : keys) {
                if (pivot_coefficient(K, deg, col, row, false)) {
                    eliminate_entry(K, cyc, deg, col, row, stats, false);
                    acted = true;
                    break;
                }
            }
            if (acted) break;
        }
        if (!acted) break;
        audit();
    }
}

// ---------------------------------------------------------------------------
// Crossing-by-crossing scan. Builds the reduced complex of a diagram while
// carrying the Lee cycle of the growing partial tangle; at each step the next
// crossing's bracket and Lee factor are plugged in and the result re-reduced.
// Seifert circles that close up during a step are capped by their labeled
// cups at the same moment.
// ---------------------------------------------------------------------------

struct ScanOptions {
    bool greedy_order = true; // smallest-frontier-first; otherwise input order
    bool debug_checks = false;
};

template <class F>
struct ScanResult {
    Complex<F> K;
    CycleVector<F> cycle;
    SeifertData seifert;
    ReductionStats stats;
};

namespace detail {

// Lee decoration factor of a single crossing: sheets over the two arcs of its
// oriented resolution decorated by the idempotents e_X = H^{-1} (dot) and
// e_Y = 1 - H^{-1} (dot), per the arcs' global labels.
template <class F>
CobLin<F> crossing_lee_factor(const Object& res, const std::array<int, 2>& arc_labels) {
    CyclePlan plan(res, res);
    CobLin<F> out;
    out.add_term(0, Mono<F>::one());
    for (int arc = 0; arc < 2; ++arc) {
        auto [p, q] = res.arc_endpoints(arc);
        (void)q;
        int cyc = plan.cyc_of_point[p];
        CobLin<F> step;
        for (auto& [mask, m] : out.terms) {
            // e_X: H^{-1} dot ; e_Y: -H^{-1} dot + 1
            if (arc_labels[arc] == 1) {
                step.add_term(mask | ((uint64_t)1 << cyc), m.times_h(-1));
            } else {
                step.add_term(mask | ((uint64_t)1 << cyc), Mono<F>(-m.c, m.h - 1));
                step.add_term(mask, m);
            }
        }
        out = std::move(step);
    }
    return out;
}

// Labeled cups capping the free circles of `target`; identity sheets on arcs.
// X-labeled circles get a dotted cup, Y-labeled ones (dot - H) cups.
template <class F>
CobLin<F> labeled_cups(const Object& source, const Object& target,
                       const std::vector<int>& labels) {
    if (source.circles != 0 || source.match != target.match)
        throw std::logic_error("labeled_cups: shape mismatch");
    CyclePlan plan(source, target);
    CobLin<F> out;
    out.add_term(0, Mono<F>::one());
    for (int j = 0; j < target.circles; ++j) {
        int cyc = plan.cyc_of_tgt_circle[j];
        CobLin<F> step;
        for (auto& [mask, m] : out.terms) {
            step.add_term(mask | ((uint64_t)1 << cyc), m);
            if (labels[j] == 0) step.add_term(mask, Mono<F>(-m.c, m.h + 1)); // Y: dot - H
        }
        out = std::move(step);
    }
    return out;
}

} // namespace detail

template <class F>
ScanResult<F> scan(const TangleDiagram& T, const ScanOptions& opts = {}) {
    ScanResult<F> R;
    R.seifert = seifert_resolve(T);
    const SeifertData& S = R.seifert;

    // per-edge Seifert component
    std::vector<int> comp_of_edge(T.num_edges, -1);
    for (int i = 0; i < (int)S.circles.size(); ++i)
        for (int e : S.circles[i]) comp_of_edge[e] = i;
    for (int i = 0; i < (int)S.arcs.size(); ++i)
        for (int e : S.arcs[i]) comp_of_edge[e] = (int)S.circles.size() + i;

    // crossing order
    std::vector<int> order;
    {
        int n = (int)T.crossings.size();
        std::vector<char> placed(n, 0);
        std::set<int> open_edges;
        for (int step = 0; step < n; ++step) {
            int best = -1, best_shared = -1;
            for (int k = 0; k < n; ++k) {
                if (placed[k]) continue;
                if (!opts.greedy_order) {
                    best = k;
                    break;
                }
                std::set<int> es(T.crossings[k].e.begin(), T.crossings[k].e.end());
                int shared = 0;
                for (int e : es)
                    if (open_edges.count(e)) ++shared;
                if (shared > best_shared) {
                    best = k;
                    best_shared = shared;
                }
            }
            placed[best] = 1;
            order.push_back(best);
            for (int s = 0; s < 4; ++s) {
                int e = T.crossings[best].e[s];
                if (open_edges.count(e))
                    open_edges.erase(e);
                else
                    open_edges.insert(e);
            }
        }
    }

    R.K = Complex<F>::unit();
    R.cycle.source = Object::empty();
    R.cycle.comps[0] = CobLin<F>::identity(Object::empty());
    Object m_in = Object::empty();
    std::vector<int> frontier; // open edge ids in partial-boundary order
    ReduceOptions ro;
    ro.debug_checks = opts.debug_checks;

    // One gluing step: plug the running complex (input 0) and a piece
    // (input 1) along D, push the cycle through, cap newly closed Seifert
    // circles, then reduce. comp_at(input, point) resolves the Seifert
    // component of a boundary point of an input.
    auto step_plug = [&](const PAD& D, const Complex<F>& piece, const Object& piece_in,
                         const CobLin<F>& lee_factor, int piece_deg0_idx,
                         const std::function<int(int, int)>& comp_at) {
        std::vector<const Complex<F>*> parts{&R.K, &piece};
        PluggedComplex<F> P = plug_complex(D, parts);

        PluggedObject src_prov = plug_obj(D, {m_in, piece_in});
        Object new_m_in = src_prov.obj;
        new_m_in.circles = 0;
        new_m_in.qshift = 0;

        // labels of circles closing up in the source
        std::vector<int> labels;
        for (auto& parts_list : src_prov.circle_parts) {
            int comp = -1;
            for (auto& cp : parts_list) {
                if (cp.kind != 0) throw std::logic_error("scan: unexpected inherited circle");
                const Object& x0 = cp.input == 0 ? m_in : piece_in;
                auto [p, q] = x0.arc_endpoints(cp.index);
                (void)q;
                int c = comp_at(cp.input, p);
                if (comp >= 0 && comp != c)
                    throw std::logic_error("scan: closing circle mixes Seifert components");
                comp = c;
            }
            if (comp < 0) throw std::logic_error("scan: could not identify closing circle");
            labels.push_back(S.label_of(comp));
        }
        CobLin<F> cups = src_prov.obj.circles > 0
                             ? detail::labeled_cups<F>(new_m_in, src_prov.obj, labels)
                             : CobLin<F>::identity(new_m_in);

        CycleVector<F> nz;
        nz.source = new_m_in;
        for (auto& [j, zj] : R.cycle.comps) {
            const Object& Oj = R.K.obj.at(0)[j];
            const Object& pd0 = piece.obj.at(0)[piece_deg0_idx];
            std::vector<Object> srcs{m_in, piece_in};
            std::vector<Object> tgts{Oj, pd0};
            std::vector<CobLin<F>> fs{zj, lee_factor};
            PluggedObject so, to;
            CobLin<F> plugged = plug_mor(D, srcs, tgts, fs, so, to);
            if (src_prov.obj.circles > 0)
                plugged = compose(new_m_in, src_prov.obj, to.obj, plugged, cups);
            auto key = P.index.at({{0, j}, {0, piece_deg0_idx}});
            if (key.first != 0) throw std::logic_error("scan: degree-0 bookkeeping broke");
            if (!plugged.is_zero()) nz.comps[key.second] = std::move(plugged);
        }
        R.K = std::move(P.K);
        R.cycle = std::move(nz);
        m_in = new_m_in;
        reduce(R.K, &R.cycle, &R.stats, ro);
    };

    // free loops: a 1-input diagram with one free circle, capped by an X cup
    for (int i = 0; i < T.free_loops; ++i) {
        PAD D;
        D.out_points = (int)frontier.size();
        D.in_points = {(int)frontier.size(), 0};
        for (int p = 0; p < D.out_points; ++p) D.arcs.push_back({PtRef{-1, p}, PtRef{0, p}});
        D.closed_circles = 1;
        Complex<F> unitK = Complex<F>::unit();
        Object empty_in = Object::empty();
        // the free circle of D is inherited into the source and capped below;
        // its label is X by convention (no constraint couples it)
        std::vector<const Complex<F>*> parts{&R.K, &unitK};
        PluggedComplex<F> P = plug_complex(D, parts);
        PluggedObject src_prov = plug_obj(D, {m_in, empty_in});
        Object new_m_in = src_prov.obj;
        new_m_in.circles = 0;
        std::vector<int> labels(src_prov.obj.circles, 1);
        CobLin<F> cups = detail::labeled_cups<F>(new_m_in, src_prov.obj, labels);
        CycleVector<F> nz;
        nz.source = new_m_in;
        for (auto& [j, zj] : R.cycle.comps) {
            std::vector<Object> srcs{m_in, empty_in};
            std::vector<Object> tgts{R.K.obj.at(0)[j], empty_in};
            std::vector<CobLin<F>> fs{zj, CobLin<F>::identity(empty_in)};
            PluggedObject so, to;
            CobLin<F> plugged = plug_mor(D, srcs, tgts, fs, so, to);
            plugged = compose(new_m_in, src_prov.obj, to.obj, plugged, cups);
            auto key = P.index.at({{0, j}, {0, 0}});
            if (!plugged.is_zero()) nz.comps[key.second] = std::move(plugged);
        }
        R.K = std::move(P.K);
        R.cycle = std::move(nz);
        m_in = new_m_in;
        reduce(R.K, &R.cycle, &R.stats, ro);
    }

    for (int k : order) {
        const Crossing& c = T.crossings[k];
        std::map<int, std::vector<int>> slot_of_edge;
        for (int s = 0; s < 4; ++s) slot_of_edge[c.e[s]].push_back(s);

        PAD D;
        std::vector<int> new_frontier;
        D.in_points = {(int)frontier.size(), 4};
        std::vector<char> slot_used(4, 0);
        std::vector<std::pair<int, int>> shared; // (frontier pos, slot)
        for (int p = 0; p < (int)frontier.size(); ++p) {
            auto it = slot_of_edge.find(frontier[p]);
            if (it == slot_of_edge.end() || it->second.empty()) continue;
            int s = it->second.front();
            it->second.erase(it->second.begin());
            shared.push_back({p, s});
            slot_used[s] = 1;
        }
        for (auto& [e, slots] : slot_of_edge) {
            if (slots.size() == 2) { // kink edge: both ends on this crossing
                D.arcs.push_back({PtRef{1, slots[0]}, PtRef{1, slots[1]}});
                slot_used[slots[0]] = slot_used[slots[1]] = 1;
            }
        }
        for (auto& [p, s] : shared) D.arcs.push_back({PtRef{0, p}, PtRef{1, s}});
        int insert_at = shared.empty() ? (int)frontier.size() : shared.front().first;
        std::set<int> shared_pos;
        for (auto& [p, s] : shared) shared_pos.insert(p);
        auto add_out = [&](PtRef from, int edge) {
            int q = (int)new_frontier.size();
            new_frontier.push_back(edge);
            D.arcs.push_back({from, PtRef{-1, q}});
        };
        auto add_free_slots = [&] {
            int anchor = shared.empty() ? 3 : shared.front().second;
            for (int ds = 1; ds <= 4; ++ds) {
                int s = (anchor + ds) % 4;
                if (!slot_used[s]) add_out(PtRef{1, s}, c.e[s]);
            }
        };
        for (int p = 0; p < (int)frontier.size(); ++p) {
            if (p == insert_at) add_free_slots();
            if (shared_pos.count(p)) continue;
            add_out(PtRef{0, p}, frontier[p]);
        }
        if (insert_at == (int)frontier.size()) add_free_slots();
        D.out_points = (int)new_frontier.size();

        Complex<F> piece = crossing_bracket<F>(c.sign);
        // the oriented resolution is the degree-0 summand of the bracket
        Object piece_in = piece.obj.at(0)[0];
        std::array<int, 2> arc_labels;
        for (int arc = 0; arc < 2; ++arc) {
            auto [p, q] = piece_in.arc_endpoints(arc);
            (void)q;
            arc_labels[arc] = S.label_of(S.comp_of_slot[k][p]);
        }
        CobLin<F> lee = detail::crossing_lee_factor<F>(piece_in, arc_labels);

        auto comp_at = [&](int input, int point) {
            if (input == 0) return comp_of_edge[frontier.at(point)];
            return S.comp_of_slot[k][point];
        };
        step_plug(D, piece, piece_in, lee, 0, comp_at);
        frontier = new_frontier;
    }

    if (T.boundary.empty()) {
        if (!frontier.empty() || m_in.points() != 0)
            throw std::logic_error("scan finished with an open frontier");
    } else {
        // permute the final boundary into the diagram's declared order
        std::vector<int> perm(T.boundary.size(), -1);
        for (int p = 0; p < (int)T.boundary.size(); ++p) {
            int e = T.boundary[p];
            auto it = std::find(frontier.begin(), frontier.end(), e);
            if (it == frontier.end()) throw std::logic_error("boundary edge missing from frontier");
            perm[p] = (int)(it - frontier.begin());
        }
        PAD D;
        D.out_points = (int)T.boundary.size();
        D.in_points = {(int)T.boundary.size()};
        for (int p = 0; p < (int)perm.size(); ++p)
            D.arcs.push_back({PtRef{-1, p}, PtRef{0, perm[p]}});
        std::vector<const Complex<F>*> parts{&R.K};
        PluggedComplex<F> P = plug_complex(D, parts);
        CycleVector<F> nz;
        nz.source = plug_obj(D, {m_in}).obj;
        for (auto& [j, zj] : R.cycle.comps) {
            std::vector<Object> srcs{m_in}, tgts{R.K.obj.at(0)[j]};
            std::vector<CobLin<F>> fs{zj};
            PluggedObject so, to;
            CobLin<F> plugged = plug_mor(D, srcs, tgts, fs, so, to);
            auto key = P.index.at({{0, j}});
            if (!plugged.is_zero()) nz.comps[key.second] = std::move(plugged);
        }
        R.K = std::move(P.K);
        R.cycle = std::move(nz);
    }
    return R;
}

} // namespace khs
