#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "field.hpp"

namespace khs {

// ---------------------------------------------------------------------------
// Objects: crossingless tangles.
//
// An object is a perfect matching of an even number of boundary points,
// together with a number of free circles and a quantum grading shift. Circles
// are transient: complexes deloop them away eagerly, so stored summands always
// have circles == 0.
// ---------------------------------------------------------------------------

struct Object {
    std::vector<int> match; // match[p] = partner point; involution, no fixed points
    int circles = 0;
    int qshift = 0;

    int points() const { return (int)match.size(); }
    int narcs() const { return (int)match.size() / 2; }

    static Object empty(int qshift = 0) { return Object{{}, 0, qshift}; }

    Object shifted(int dq) const { return Object{match, circles, qshift + dq}; }

    bool operator==(const Object& o) const {
        return match == o.match && circles == o.circles && qshift == o.qshift;
    }
    bool operator<(const Object& o) const {
        if (match != o.match) return match < o.match;
        if (circles != o.circles) return circles < o.circles;
        return qshift < o.qshift;
    }

    void validate() const {
        int n = points();
        if (n % 2) throw std::logic_error("odd number of boundary points");
        for (int p = 0; p < n; ++p) {
            int q = match[p];
            if (q < 0 || q >= n || q == p || match[q] != p)
                throw std::logic_error("matching is not a fixed-point-free involution");
        }
    }

    // Open arcs are indexed 0..narcs-1 by their smaller endpoint; circles
    // follow at narcs..narcs+circles-1.
    int arc_of_point(int p) const {
        int lo = std::min(p, match[p]);
        int idx = 0;
        for (int q = 0; q < lo; ++q)
            if (q < match[q]) ++idx;
        return idx;
    }
    std::pair<int, int> arc_endpoints(int arc) const {
        int idx = 0;
        for (int p = 0; p < points(); ++p)
            if (p < match[p]) {
                if (idx == arc) return {p, match[p]};
                ++idx;
            }
        throw std::logic_error("arc index out of range");
    }

    // Stack test for non-interleaving matchings; debug audit only.
    bool is_planar() const {
        std::vector<int> stack;
        for (int p = 0; p < points(); ++p) {
            if (match[p] > p) {
                stack.push_back(p);
            } else {
                if (stack.empty() || stack.back() != match[p]) return false;
                stack.pop_back();
            }
        }
        return stack.empty();
    }
};

// ---------------------------------------------------------------------------
// Cycle plan of a hom-set.
//
// Morphisms live in the quotient category where every neck can be cut, so a
// hom-set between two objects is free on "every component is a disk, at most
// one dot per disk". The disks are forced: one per boundary circle of the
// would-be cobordism. A boundary circle alternates source arcs, vertical
// boundary segments, and target arcs, so the circles are the connected
// components of the graph on boundary points generated by both matchings.
// Free circles of either object are single boundary circles of their own.
// ---------------------------------------------------------------------------

struct CyclePlan {
    int ncyc = 0;
    std::vector<int> cyc_of_point;      // shared boundary points
    std::vector<int> cyc_of_src_circle; // source free circles
    std::vector<int> cyc_of_tgt_circle; // target free circles

    CyclePlan() = default;
    CyclePlan(const Object& src, const Object& tgt) {
        if (src.points() != tgt.points())
            throw std::logic_error("hom-set between objects with different boundaries");
        int n = src.points();
        cyc_of_point.assign(n, -1);
        int c = 0;
        for (int p = 0; p < n; ++p) {
            if (cyc_of_point[p] >= 0) continue;
            // flood the orbit of p under both matchings
            std::vector<int> stack{p};
            cyc_of_point[p] = c;
            while (!stack.empty()) {
                int q = stack.back();
                stack.pop_back();
                for (int r : {src.match[q], tgt.match[q]}) {
                    if (cyc_of_point[r] < 0) {
                        cyc_of_point[r] = c;
                        stack.push_back(r);
                    }
                }
            }
            ++c;
        }
        for (int j = 0; j < src.circles; ++j) cyc_of_src_circle.push_back(c++);
        for (int j = 0; j < tgt.circles; ++j) cyc_of_tgt_circle.push_back(c++);
        ncyc = c;
        if (ncyc > 62) throw std::logic_error("too many components for dot mask");
    }
};

namespace detail {

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Morphisms.
//
// A morphism is a linear combination of disk-decompositions: a dot bitmask
// over the cycle plan, with a Laurent monomial c*H^h as coefficient. The
// underlying Frobenius algebra is A = F[H][X]/(X^2 - HX); a disk with k dots
// carries X^k = H^(k-1) X, a handle carries U = 2X - H with U^2 = H^2, and a
// closed component evaluates through the counit (eps(1) = 0, eps(X) = 1).
// ---------------------------------------------------------------------------

template <class F>
struct CobLin {
    std::map<uint64_t, Mono<F>> terms;

    bool is_zero() const { return terms.empty(); }

    static CobLin zero() { return {}; }

    static CobLin identity(const Object& obj) {
        if (obj.circles != 0)
            throw std::logic_error("identity on an object with free circles is not a single term");
        CobLin r;
        r.terms.emplace(0, Mono<F>::one());
        return r;
    }

    void add_term(uint64_t mask, const Mono<F>& m) {
        if (m.is_zero()) return;
        auto it = terms.find(mask);
        if (it == terms.end()) {
            terms.emplace(mask, m);
            return;
        }
        if (it->second.h != m.h)
            throw std::logic_error("inhomogeneous coefficient collision");
        it->second.c += m.c;
        if (it->second.c.is_zero()) terms.erase(it);
    }

    CobLin& operator+=(const CobLin& o) {
        for (const auto& [mask, m] : o.terms) add_term(mask, m);
        return *this;
    }
    CobLin operator+(const CobLin& o) const {
        CobLin r = *this;
        r += o;
        return r;
    }
    CobLin operator-() const {
        CobLin r = *this;
        for (auto& [mask, m] : r.terms) m = -m;
        return r;
    }
    CobLin operator-(const CobLin& o) const { return *this + (-o); }

    CobLin scaled(const Mono<F>& s) const {
        CobLin r;
        if (s.is_zero()) return r;
        for (const auto& [mask, m] : terms) r.terms.emplace(mask, m * s);
        return r;
    }

    bool operator==(const CobLin& o) const {
        if (terms.size() != o.terms.size()) return false;
        auto it = o.terms.begin();
        for (const auto& [mask, m] : terms) {
            if (it->first != mask || it->second.h != m.h || !(it->second.c == m.c)) return false;
            ++it;
        }
        return true;
    }

    // q-degree including object shifts; nullopt for the zero morphism.
    std::optional<int> qdeg(const Object& src, const Object& tgt) const {
        if (terms.empty()) return std::nullopt;
        CyclePlan plan(src, tgt);
        std::optional<int> deg;
        for (const auto& [mask, m] : terms) {
            int k = __builtin_popcountll(mask);
            int d = plan.ncyc - src.points() / 2 - 2 * k - 2 * m.h + tgt.qshift - src.qshift;
            if (deg && *deg != d) throw std::logic_error("inhomogeneous morphism");
            deg = d;
        }
        return deg;
    }

    std::string dump(const Object& src, const Object& tgt) const {
        CyclePlan plan(src, tgt);
        if (terms.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [mask, m] : terms) {
            if (!first) os << " + ";
            first = false;
            os << m.str() << "*[";
            for (int c = 0; c < plan.ncyc; ++c) {
                if (c) os << " ";
                os << ((mask >> c) & 1 ? "•" : "-");
            }
            os << "]";
        }
        return os.str();
    }
};

namespace detail {

// Distribution of an element of A over the b disks of one component:
//   X   -> dot on every disk
//   1   -> sum over proper dot subsets with coefficient (-H)^(b-1-|subset|)
// expressed via local masks over the component's own cycles.
template <class F>
void distribute_elt(int b, const Mono<F>& c1, const Mono<F>& c0,
                    std::vector<std::pair<uint64_t, Mono<F>>>& out) {
    out.clear();
    if (b > 20) throw std::logic_error("component touches too many disks");
    if (!c1.is_zero()) out.emplace_back(((uint64_t)1 << b) - 1, c1);
    if (!c0.is_zero()) {
        uint64_t full = ((uint64_t)1 << b) - 1;
        for (uint64_t m = 0; m < full; ++m) {
            int missing = b - 1 - __builtin_popcountll(m);
            F c = c0.c;
            if (missing & 1) c = -c;
            // (-H)^missing also shifts the H-exponent
            out.emplace_back(m, Mono<F>(c, c0.h + missing));
        }
    }
}

// X^k * U^g in A, split into (coefficient of X, coefficient of 1).
template <class F>
void handle_dot_element(int k, int g, Mono<F>& c1, Mono<F>& c0) {
    if (k >= 1) {
        c1 = Mono<F>(F::one(), k - 1 + g); // X U = HX collapses everything onto X
        c0 = Mono<F>();
    } else if (g % 2 == 0) {
        c1 = Mono<F>();
        c0 = Mono<F>(F::one(), g); // U^2 = H^2
    } else {
        c1 = Mono<F>(F(2), g - 1);
        c0 = Mono<F>(-F::one(), g);
    }
}

// Counit evaluation of X^k U^g (closed component).
template <class F>
Mono<F> eval_closed(int k, int g) {
    Mono<F> c1, c0;
    handle_dot_element<F>(k, g, c1, c0);
    return c1; // eps(1) = 0, eps(X) = 1
}

// Component structure shared by vertical and horizontal composition. Nodes
// are the disks of the inputs plus any extra sheets; gluing merges them.
// For every merged component we record its Euler characteristic, the list of
// output cycles it spans, and which input disks feed its dot count.
struct GlueComp {
    int chi = 0;
    std::vector<int> out_cycles;                // indices into the output plan
    std::vector<std::pair<int, int>> in_disks;  // (input index, cycle index)
};

template <class F>
struct Evaluator {
    std::vector<GlueComp> comps;
    int out_ncyc = 0;

    // Evaluate one choice of dot masks for the inputs; accumulate into `out`.
    void eval(const std::vector<uint64_t>& in_masks, const Mono<F>& coeff, CobLin<F>& out) const {
        Mono<F> scalar = coeff;
        std::vector<std::vector<std::pair<uint64_t, Mono<F>>>> parts;
        std::vector<std::pair<uint64_t, Mono<F>>> dist;
        for (const auto& comp : comps) {
            int dots = 0;
            for (auto [i, cyc] : comp.in_disks)
                dots += (in_masks[i] >> cyc) & 1;
            int b = (int)comp.out_cycles.size();
            int genus2 = 2 - b - comp.chi;
            if (genus2 < 0 || genus2 % 2)
                throw std::logic_error("bad glued component topology");
            int genus = genus2 / 2;
            if (b == 0) {
                Mono<F> v = eval_closed<F>(dots, genus);
                if (v.is_zero()) return; // whole term dies
                scalar = scalar * v;
            } else {
                Mono<F> c1, c0;
                handle_dot_element<F>(dots, genus, c1, c0);
                distribute_elt<F>(b, c1, c0, dist);
                if (dist.empty()) return;
                // translate local masks to global output masks
                std::vector<std::pair<uint64_t, Mono<F>>> global;
                global.reserve(dist.size());
                for (auto& [lm, m] : dist) {
                    uint64_t gm = 0;
                    for (int j = 0; j < b; ++j)
                        if ((lm >> j) & 1) gm |= (uint64_t)1 << comp.out_cycles[j];
                    global.emplace_back(gm, m);
                }
                parts.push_back(std::move(global));
            }
        }
        // expand the product over components
        std::vector<size_t> idx(parts.size(), 0);
        while (true) {
            uint64_t mask = 0;
            Mono<F> m = scalar;
            for (size_t i = 0; i < parts.size(); ++i) {
                mask |= parts[i][idx[i]].first;
                m = m * parts[i][idx[i]].second;
            }
            out.add_term(mask, m);
            size_t i = 0;
            for (; i < parts.size(); ++i) {
                if (++idx[i] < parts[i].size()) break;
                idx[i] = 0;
            }
            if (i == parts.size()) break;
        }
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Vertical composition g ∘ f for f: A -> B, g: B -> C.
//
// Gluing along B merges disks; each merged component keeps genus and dots by
// chi-additivity (chi drops by one per glued open arc of B) and is re-cut
// into the disks of the output plan.
// ---------------------------------------------------------------------------

template <class F>
CobLin<F> compose(const Object& A, const Object& B, const Object& C,
                  const CobLin<F>& g, const CobLin<F>& f) {
    if (g.is_zero() || f.is_zero()) return CobLin<F>::zero();
    CyclePlan pf(A, B), pg(B, C), pout(A, C);

    detail::Dsu dsu(pf.ncyc + pg.ncyc);
    int n = B.points();
    for (int p = 0; p < n; ++p)
        if (p < B.match[p]) dsu.unite(pf.cyc_of_point[p], pf.ncyc + pg.cyc_of_point[p]);
    for (int j = 0; j < B.circles; ++j)
        dsu.unite(pf.cyc_of_tgt_circle[j], pf.ncyc + pg.cyc_of_src_circle[j]);

    std::map<int, detail::GlueComp> comps;
    auto comp_of = [&](int node) -> detail::GlueComp& { return comps[dsu.find(node)]; };

    for (int c = 0; c < pf.ncyc; ++c) {
        auto& gc = comp_of(c);
        gc.chi += 1;
        gc.in_disks.emplace_back(0, c);
    }
    for (int c = 0; c < pg.ncyc; ++c) {
        auto& gc = comp_of(pf.ncyc + c);
        gc.chi += 1;
        gc.in_disks.emplace_back(1, c);
    }
    for (int p = 0; p < n; ++p)
        if (p < B.match[p]) comp_of(pf.cyc_of_point[p]).chi -= 1;

    // output cycles spanned by each component
    std::map<int, std::set<int>> outcyc;
    for (int p = 0; p < A.points(); ++p)
        outcyc[dsu.find(pf.cyc_of_point[p])].insert(pout.cyc_of_point[p]);
    for (int j = 0; j < A.circles; ++j)
        outcyc[dsu.find(pf.cyc_of_src_circle[j])].insert(pout.cyc_of_src_circle[j]);
    for (int j = 0; j < C.circles; ++j)
        outcyc[dsu.find(pf.ncyc + pg.cyc_of_tgt_circle[j])].insert(pout.cyc_of_tgt_circle[j]);

    detail::Evaluator<F> ev;
    ev.out_ncyc = pout.ncyc;
    for (auto& [root, gc] : comps) {
        auto it = outcyc.find(root);
        if (it != outcyc.end()) gc.out_cycles.assign(it->second.begin(), it->second.end());
        ev.comps.push_back(std::move(gc));
    }

    CobLin<F> result;
    std::vector<uint64_t> masks(2);
    for (const auto& [mf, cf] : f.terms)
        for (const auto& [mg, cg] : g.terms) {
            if (mf >> pf.ncyc || mg >> pg.ncyc)
                throw std::logic_error("term mask does not fit the hom-set of compose()");
            masks[0] = mf;
            masks[1] = mg;
            ev.eval(masks, cf * cg, result);
        }
    return result;
}

// ---------------------------------------------------------------------------
// Planar arc diagrams and horizontal composition.
// ---------------------------------------------------------------------------

struct PtRef {
    int disk; // -1 = output boundary, otherwise input disk index
    int pt;
    bool operator<(const PtRef& o) const { return disk != o.disk ? disk < o.disk : pt < o.pt; }
    bool operator==(const PtRef& o) const { return disk == o.disk && pt == o.pt; }
};

struct PAD {
    int out_points = 0;
    std::vector<int> in_points;
    std::vector<std::array<PtRef, 2>> arcs;
    int closed_circles = 0;

    int inputs() const { return (int)in_points.size(); }

    void validate() const {
        std::set<PtRef> seen;
        auto check = [&](PtRef r) {
            int limit = r.disk < 0 ? out_points : in_points.at(r.disk);
            if (r.pt < 0 || r.pt >= limit) throw std::logic_error("arc endpoint out of range");
            if (!seen.insert(r).second) throw std::logic_error("arc endpoint used twice");
        };
        for (auto& a : arcs) {
            check(a[0]);
            check(a[1]);
        }
        size_t total = out_points;
        for (int n : in_points) total += n;
        if (seen.size() != total) throw std::logic_error("uncovered boundary point");
    }

    static PAD identity(int n) {
        PAD d;
        d.out_points = n;
        d.in_points = {n};
        for (int p = 0; p < n; ++p) d.arcs.push_back({PtRef{-1, p}, PtRef{0, p}});
        return d;
    }
};

// Provenance of a circle of a plugged object.
struct CirclePart {
    int kind; // 0: input open arc, 1: inherited input circle, 2: free circle of the diagram
    int input;
    int index;
};

struct PluggedObject {
    Object obj;
    std::vector<std::vector<CirclePart>> circle_parts; // per circle of obj
};

inline PluggedObject plug_obj(const PAD& D, const std::vector<Object>& xs) {
    if ((int)xs.size() != D.inputs()) throw std::logic_error("plug arity mismatch");
    for (int i = 0; i < D.inputs(); ++i)
        if (xs[i].points() != D.in_points[i])
            throw std::logic_error("plug boundary mismatch on input " + std::to_string(i));

    // arc lookup per endpoint
    std::map<PtRef, int> arc_at;
    for (int a = 0; a < (int)D.arcs.size(); ++a) {
        arc_at[D.arcs[a][0]] = a;
        arc_at[D.arcs[a][1]] = a;
    }
    auto other_end = [&](int arc, PtRef from) {
        return D.arcs[arc][0] == from ? D.arcs[arc][1] : D.arcs[arc][0];
    };

    PluggedObject out;
    out.obj.match.assign(D.out_points, -1);
    out.obj.qshift = 0;
    for (auto& x : xs) out.obj.qshift += x.qshift;

    std::vector<char> arc_seen(D.arcs.size(), 0);
    // walk from an output point through alternating diagram arcs and input arcs
    for (int p = 0; p < D.out_points; ++p) {
        if (out.obj.match[p] >= 0) continue;
        PtRef pos{-1, p};
        while (true) {
            int a = arc_at.at(pos);
            arc_seen[a] = 1;
            PtRef q = other_end(a, pos);
            if (q.disk < 0) {
                out.obj.match[p] = q.pt;
                out.obj.match[q.pt] = p;
                break;
            }
            pos = PtRef{q.disk, xs[q.disk].match[q.pt]};
        }
    }
    // leftover arcs close up into circles
    for (int a0 = 0; a0 < (int)D.arcs.size(); ++a0) {
        if (arc_seen[a0]) continue;
        std::vector<CirclePart> parts;
        PtRef pos = D.arcs[a0][0];
        int a = a0;
        while (true) {
            arc_seen[a] = 1;
            PtRef q = other_end(a, pos);
            if (q.disk < 0) throw std::logic_error("open walk in circle trace");
            parts.push_back(CirclePart{0, q.disk, xs[q.disk].arc_of_point(q.pt)});
            pos = PtRef{q.disk, xs[q.disk].match[q.pt]};
            a = arc_at.at(pos);
            if (a == a0) break;
        }
        out.obj.circles += 1;
        out.circle_parts.push_back(std::move(parts));
    }
    // inherited circles of the inputs, then free circles of the diagram
    for (int i = 0; i < D.inputs(); ++i)
        for (int j = 0; j < xs[i].circles; ++j) {
            out.obj.circles += 1;
            out.circle_parts.push_back({CirclePart{1, i, j}});
        }
    for (int j = 0; j < D.closed_circles; ++j) {
        out.obj.circles += 1;
        out.circle_parts.push_back({CirclePart{2, -1, j}});
    }
    return out;
}

// Horizontal composition of morphisms. srcs[i] -> tgts[i] are composed along
// D; the identity sheets over the arcs of D glue the input disks together.
template <class F>
CobLin<F> plug_mor(const PAD& D, const std::vector<Object>& srcs, const std::vector<Object>& tgts,
                   const std::vector<CobLin<F>>& fs, PluggedObject& src_out,
                   PluggedObject& tgt_out) {
    int d = D.inputs();
    if ((int)srcs.size() != d || (int)tgts.size() != d || (int)fs.size() != d)
        throw std::logic_error("plug_mor arity mismatch");
    for (auto& f : fs)
        if (f.is_zero()) return CobLin<F>::zero();

    src_out = plug_obj(D, srcs);
    tgt_out = plug_obj(D, tgts);
    CyclePlan pout(src_out.obj, tgt_out.obj);

    std::vector<CyclePlan> plans;
    std::vector<int> offset(d + 1, 0);
    for (int i = 0; i < d; ++i) {
        plans.emplace_back(srcs[i], tgts[i]);
        offset[i + 1] = offset[i] + plans[i].ncyc;
    }
    int arc_base = offset[d];
    int circ_base = arc_base + (int)D.arcs.size();
    detail::Dsu dsu(circ_base + D.closed_circles);

    for (int a = 0; a < (int)D.arcs.size(); ++a)
        for (auto end : D.arcs[a])
            if (end.disk >= 0)
                dsu.unite(arc_base + a, offset[end.disk] + plans[end.disk].cyc_of_point[end.pt]);

    std::map<int, detail::GlueComp> comps;
    auto comp_of = [&](int node) -> detail::GlueComp& { return comps[dsu.find(node)]; };
    for (int i = 0; i < d; ++i)
        for (int c = 0; c < plans[i].ncyc; ++c) {
            auto& gc = comp_of(offset[i] + c);
            gc.chi += 1;
            gc.in_disks.emplace_back(i, c);
        }
    for (int a = 0; a < (int)D.arcs.size(); ++a) {
        auto& gc = comp_of(arc_base + a);
        gc.chi += 1; // a sheet over an arc is a square
        for (auto end : D.arcs[a])
            if (end.disk >= 0) gc.chi -= 1;
    }
    for (int j = 0; j < D.closed_circles; ++j)
        comp_of(circ_base + j).chi += 0; // cylinder

    // map output cycles onto components
    std::map<int, std::set<int>> outcyc;
    std::map<PtRef, int> arc_at;
    for (int a = 0; a < (int)D.arcs.size(); ++a) {
        arc_at[D.arcs[a][0]] = a;
        arc_at[D.arcs[a][1]] = a;
    }
    for (int p = 0; p < D.out_points; ++p)
        outcyc[dsu.find(arc_base + arc_at.at(PtRef{-1, p}))].insert(pout.cyc_of_point[p]);

    auto anchor_circle = [&](const std::vector<CirclePart>& parts, bool source) -> int {
        const CirclePart& cp = parts.front();
        if (cp.kind == 2) return circ_base + cp.index;
        const Object& x = source ? srcs[cp.input] : tgts[cp.input];
        const CyclePlan& pl = plans[cp.input];
        if (cp.kind == 1)
            return offset[cp.input] +
                   (source ? pl.cyc_of_src_circle[cp.index] : pl.cyc_of_tgt_circle[cp.index]);
        auto [p, q] = x.arc_endpoints(cp.index);
        (void)q;
        return offset[cp.input] + pl.cyc_of_point[p];
    };
    for (int j = 0; j < src_out.obj.circles; ++j)
        outcyc[dsu.find(anchor_circle(src_out.circle_parts[j], true))]
            .insert(pout.cyc_of_src_circle[j]);
    for (int j = 0; j < tgt_out.obj.circles; ++j)
        outcyc[dsu.find(anchor_circle(tgt_out.circle_parts[j], false))]
            .insert(pout.cyc_of_tgt_circle[j]);

    detail::Evaluator<F> ev;
    ev.out_ncyc = pout.ncyc;
    for (auto& [root, gc] : comps) {
        auto it = outcyc.find(root);
        if (it != outcyc.end()) gc.out_cycles.assign(it->second.begin(), it->second.end());
        ev.comps.push_back(std::move(gc));
    }

    CobLin<F> result;
    std::vector<uint64_t> masks(d);
    std::vector<typename std::map<uint64_t, Mono<F>>::const_iterator> its;
    for (auto& f : fs) its.push_back(f.terms.begin());
    while (true) {
        Mono<F> coeff = Mono<F>::one();
        for (int i = 0; i < d; ++i) {
            masks[i] = its[i]->first;
            if (masks[i] >> plans[i].ncyc)
                throw std::logic_error("term mask does not fit the hom-set of plug_mor()");
            coeff = coeff * its[i]->second;
        }
        ev.eval(masks, coeff, result);
        int i = 0;
        for (; i < d; ++i) {
            if (++its[i] != fs[i].terms.end()) break;
            its[i] = fs[i].terms.begin();
        }
        if (i == d) break;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Normalization of raw surface descriptions: arbitrary genus and dot counts,
// arbitrary (cycle-respecting) component structure, closed parts allowed.
// ---------------------------------------------------------------------------

struct RawComponent {
    std::vector<int> src_arcs; // open arc and circle indices of the source
    std::vector<int> tgt_arcs;
    int genus = 0;
    int dots = 0;
};

template <class F>
struct RawSurface {
    Object src, tgt;
    std::vector<RawComponent> comps;
    Mono<F> coeff = Mono<F>::one();
};

template <class F>
CobLin<F> normalize(const RawSurface<F>& raw) {
    CyclePlan plan(raw.src, raw.tgt);
    auto cycle_of = [&](const Object& obj, int arc, bool source) {
        if (arc >= obj.narcs()) {
            int j = arc - obj.narcs();
            return source ? plan.cyc_of_src_circle[j] : plan.cyc_of_tgt_circle[j];
        }
        auto [p, q] = obj.arc_endpoints(arc);
        (void)q;
        return plan.cyc_of_point[p];
    };

    // Every cycle must sit inside a single component; count arcs per cycle to
    // recover the boundary-circle count of each component.
    std::vector<int> owner(plan.ncyc, -1);
    detail::Evaluator<F> ev;
    ev.out_ncyc = plan.ncyc;
    for (size_t ci = 0; ci < raw.comps.size(); ++ci) {
        const auto& comp = raw.comps[ci];
        std::set<int> cycles;
        for (int a : comp.src_arcs) cycles.insert(cycle_of(raw.src, a, true));
        for (int a : comp.tgt_arcs) cycles.insert(cycle_of(raw.tgt, a, false));
        for (int c : cycles) {
            if (owner[c] != -1) throw std::logic_error("component structure splits a cycle");
            owner[c] = (int)ci;
        }
        detail::GlueComp gc;
        gc.out_cycles.assign(cycles.begin(), cycles.end());
        gc.chi = 2 - 2 * comp.genus - (int)cycles.size();
        // dots are injected through a virtual one-disk input below
        ev.comps.push_back(gc);
    }
    for (int c = 0; c < plan.ncyc; ++c)
        if (owner[c] == -1) throw std::logic_error("cycle not covered by any component");

    // Feed dots directly: reuse eval() by treating each component as having a
    // dedicated virtual input whose mask contributes `dots` via repetition.
    // Simpler: evaluate by hand here.
    CobLin<F> result;
    std::vector<std::vector<std::pair<uint64_t, Mono<F>>>> parts;
    std::vector<std::pair<uint64_t, Mono<F>>> dist;
    Mono<F> scalar = raw.coeff;
    for (size_t ci = 0; ci < raw.comps.size(); ++ci) {
        const auto& comp = raw.comps[ci];
        const auto& gc = ev.comps[ci];
        int b = (int)gc.out_cycles.size();
        if (b == 0) {
            Mono<F> v = detail::eval_closed<F>(comp.dots, comp.genus);
            if (v.is_zero()) return CobLin<F>::zero();
            scalar = scalar * v;
        } else {
            Mono<F> c1, c0;
            detail::handle_dot_element<F>(comp.dots, comp.genus, c1, c0);
            detail::distribute_elt<F>(b, c1, c0, dist);
            if (dist.empty()) return CobLin<F>::zero();
            std::vector<std::pair<uint64_t, Mono<F>>> global;
            for (auto& [lm, m] : dist) {
                uint64_t gm = 0;
                for (int j = 0; j < b; ++j)
                    if ((lm >> j) & 1) gm |= (uint64_t)1 << gc.out_cycles[j];
                global.emplace_back(gm, m);
            }
            parts.push_back(std::move(global));
        }
    }
    std::vector<size_t> idx(parts.size(), 0);
    while (true) {
        uint64_t mask = 0;
        Mono<F> m = scalar;
        for (size_t i = 0; i < parts.size(); ++i) {
            mask |= parts[i][idx[i]].first;
            m = m * parts[i][idx[i]].second;
        }
        result.add_term(mask, m);
        size_t i = 0;
        for (; i < parts.size(); ++i) {
            if (++idx[i] < parts[i].size()) break;
            idx[i] = 0;
        }
        if (i == parts.size()) break;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Delooping maps for one free circle of an object.
//
//   fwd = (eps_Y ; eps): circle -> {+1} summand (+) and {-1} summand (-)
//   back = (iota, iota_X)
// Both composites are identities on the nose in the cut normal form.
// ---------------------------------------------------------------------------

template <class F>
struct DeloopMaps {
    Object plus, minus;       // the circle-free replacements, qshift +/- 1
    CobLin<F> fwd_plus;       // obj -> plus
    CobLin<F> fwd_minus;      // obj -> minus
    CobLin<F> back_plus;      // plus -> obj
    CobLin<F> back_minus;     // minus -> obj
};

template <class F>
DeloopMaps<F> deloop_maps(const Object& obj, int circle_index);

namespace detail {

// Cap or cup over one circle of `obj`, identity elsewhere. Identity sheets
// over untouched circles are cylinders and expand by neck cutting, which
// normalize() performs.
template <class F>
CobLin<F> circle_end_map(const Object& obj, const Object& rest, int circle_index, int dots,
                         bool cap) {
    RawSurface<F> raw;
    raw.src = cap ? obj : rest;
    raw.tgt = cap ? rest : obj;
    int na = obj.narcs();
    for (int a = 0; a < na; ++a) {
        RawComponent sheet;
        sheet.src_arcs = {a};
        sheet.tgt_arcs = {a};
        raw.comps.push_back(sheet);
    }
    RawComponent disk;
    (cap ? disk.src_arcs : disk.tgt_arcs) = {na + circle_index};
    disk.dots = dots;
    raw.comps.push_back(disk);
    for (int j = 0; j < obj.circles; ++j) {
        if (j == circle_index) continue;
        int j_rest = j < circle_index ? j : j - 1;
        RawComponent cyl;
        cyl.src_arcs = {na + (cap ? j : j_rest)};
        cyl.tgt_arcs = {na + (cap ? j_rest : j)};
        raw.comps.push_back(cyl);
    }
    return normalize(raw);
}

} // namespace detail

template <class F>
DeloopMaps<F> deloop_maps(const Object& obj, int circle_index) {
    if (circle_index < 0 || circle_index >= obj.circles)
        throw std::logic_error("no such circle to deloop");
    DeloopMaps<F> dm;
    Object rest = obj;
    rest.circles -= 1;
    dm.plus = rest.shifted(+1);
    dm.minus = rest.shifted(-1);

    CobLin<F> eps = detail::circle_end_map<F>(obj, dm.minus, circle_index, 0, true);
    CobLin<F> eps_dot = detail::circle_end_map<F>(obj, dm.plus, circle_index, 1, true);
    CobLin<F> eps_plain_up = detail::circle_end_map<F>(obj, dm.plus, circle_index, 0, true);
    dm.fwd_plus = eps_dot - eps_plain_up.scaled(Mono<F>(F::one(), 1)); // eps_Y = eps(dot - H)
    dm.fwd_minus = eps;

    dm.back_plus = detail::circle_end_map<F>(obj, dm.plus, circle_index, 0, false);
    dm.back_minus = detail::circle_end_map<F>(obj, dm.minus, circle_index, 1, false);
    return dm;
}

} // namespace khs
