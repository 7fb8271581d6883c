#pragma once

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cob.hpp"

namespace khs {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Oriented tangle diagrams.
//
// A crossing stores its four edge-ends in cyclic order (a, b, c, d) with
// a = incoming under-strand and c = outgoing under-strand. The sign is +1
// when the over-strand runs d -> b and -1 when it runs b -> d. All builders
// use one fixed rotational convention; the absolute chirality is pinned by
// the parser tests (the standard PD of the right trefoil has writhe +3 and
// s = +2).
// ---------------------------------------------------------------------------

struct EndRef {
    int kind; // 0 = crossing slot, 1 = boundary position
    int idx;
    int slot; // slot 0..3 when kind == 0
    bool operator==(const EndRef& o) const {
        return kind == o.kind && idx == o.idx && slot == o.slot;
    }
};

struct Crossing {
    std::array<int, 4> e;
    int sign = +1;

    int under_in() const { return e[0]; }
    int under_out() const { return e[2]; }
    int over_in() const { return sign > 0 ? e[3] : e[1]; }
    int over_out() const { return sign > 0 ? e[1] : e[3]; }

    // Seifert (orientation-preserving) smoothing pairs slots (0,1)(2,3) for
    // positive crossings and (0,3)(1,2) for negative ones; the 0-resolution
    // of the bracket is always (0,1)(2,3) and the 1-resolution (0,3)(1,2).
    int seifert_partner(int s) const {
        static const int pos[4] = {1, 0, 3, 2};
        static const int neg[4] = {3, 2, 1, 0};
        return sign > 0 ? pos[s] : neg[s];
    }
    static int res0_partner(int s) {
        static const int p[4] = {1, 0, 3, 2};
        return p[s];
    }
    static int res1_partner(int s) {
        static const int p[4] = {3, 2, 1, 0};
        return p[s];
    }
};

struct TangleDiagram {
    std::vector<Crossing> crossings;
    int num_edges = 0;
    std::vector<std::array<EndRef, 2>> ends; // per edge: [tail, head]
    std::vector<int> boundary;               // boundary[pos] = edge id
    int free_loops = 0;
    std::string name;

    int writhe() const {
        int w = 0;
        for (auto& c : crossings) w += c.sign;
        return w;
    }
    int n_plus() const {
        int n = 0;
        for (auto& c : crossings) n += c.sign > 0;
        return n;
    }
    int n_minus() const { return (int)crossings.size() - n_plus(); }

    // Which end of `e` sits at (crossing k, slot s)?
    static bool end_is(const EndRef& r, int k, int s) {
        return r.kind == 0 && r.idx == k && r.slot == s;
    }

    // An edge end "leaves" a crossing at out-slots and "arrives" at in-slots.
    bool tail_at(int e, int k, int s) const { return end_is(ends[e][0], k, s); }
    bool head_at(int e, int k, int s) const { return end_is(ends[e][1], k, s); }

    void validate() const {
        if ((int)ends.size() != num_edges) throw std::logic_error("ends table size mismatch");
        for (int k = 0; k < (int)crossings.size(); ++k) {
            const Crossing& c = crossings[k];
            // a: head here, c: tail here, over-in: head, over-out: tail
            int oin = c.sign > 0 ? 3 : 1, oout = c.sign > 0 ? 1 : 3;
            if (!head_at(c.e[0], k, 0)) throw std::logic_error("under-in end mismatch");
            if (!tail_at(c.e[2], k, 2)) throw std::logic_error("under-out end mismatch");
            if (!head_at(c.e[oin], k, oin)) throw std::logic_error("over-in end mismatch");
            if (!tail_at(c.e[oout], k, oout)) throw std::logic_error("over-out end mismatch");
        }
        for (int p = 0; p < (int)boundary.size(); ++p) {
            int e = boundary[p];
            if (!(ends[e][0] == EndRef{1, p, 0}) && !(ends[e][1] == EndRef{1, p, 0}))
                throw std::logic_error("boundary end mismatch");
        }
    }

    // Strand components (closed ones plus open strands); free loops included.
    int components() const {
        detail::Dsu dsu(num_edges);
        for (auto& c : crossings) {
            dsu.unite(c.e[0], c.e[2]);
            dsu.unite(c.e[1], c.e[3]);
        }
        std::set<int> roots;
        for (int e = 0; e < num_edges; ++e) roots.insert(dsu.find(e));
        return (int)roots.size() + free_loops;
    }
};

// ---------------------------------------------------------------------------
// PD parsing: X[a,b,c,d], whitespace separated, positive integer edge labels,
// counterclockwise from the incoming under-strand. Over-strand directions are
// recovered by constraint propagation: every label is used exactly twice,
// once as a head and once as a tail.
// ---------------------------------------------------------------------------

namespace detail {

struct PdCrossing {
    std::array<long, 4> lab;
    size_t pos; // for error reporting
};

inline std::vector<PdCrossing> tokenize_pd(const std::string& text) {
    std::vector<PdCrossing> out;
    size_t i = 0;
    auto fail = [&](const std::string& msg, size_t at) {
        throw ParseError("PD syntax error at position " + std::to_string(at) + ": " + msg);
    };
    while (i < text.size()) {
        if (std::isspace((unsigned char)text[i])) {
            ++i;
            continue;
        }
        size_t start = i;
        if (text[i] != 'X') fail("expected 'X'", i);
        ++i;
        if (i >= text.size() || text[i] != '[') fail("expected '['", i);
        ++i;
        PdCrossing c;
        c.pos = start;
        for (int j = 0; j < 4; ++j) {
            size_t ns = i;
            while (i < text.size() && std::isdigit((unsigned char)text[i])) ++i;
            if (i == ns) fail("expected positive integer", ns);
            c.lab[j] = std::stol(text.substr(ns, i - ns));
            if (c.lab[j] <= 0) fail("edge labels are positive", ns);
            if (j < 3) {
                if (i >= text.size() || text[i] != ',') fail("expected ','", i);
                ++i;
            }
        }
        if (i >= text.size() || text[i] != ']') fail("expected ']'", i);
        ++i;
        out.push_back(c);
    }
    return out;
}

} // namespace detail

inline TangleDiagram parse_pd(const std::string& text) {
    auto pcs = detail::tokenize_pd(text);
    TangleDiagram T;
    if (pcs.empty()) return T;

    std::map<long, int> dense;
    std::map<long, int> uses;
    for (auto& pc : pcs)
        for (long l : pc.lab) ++uses[l];
    for (auto& [l, n] : uses) {
        if (n != 2)
            throw ParseError("dangling edge " + std::to_string(l) + " (used " + std::to_string(n) +
                             " times, expected 2)");
        int id = (int)dense.size();
        dense[l] = id;
    }
    T.num_edges = (int)dense.size();
    T.ends.assign(T.num_edges, {EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
    T.crossings.resize(pcs.size());

    // role[edge occurrence] resolution: +1 head, -1 tail, 0 unknown.
    // Under slots are forced; over pairs carry one boolean each.
    struct Occ {
        int cross, slot;
    };
    std::map<int, std::vector<Occ>> occs;
    for (int k = 0; k < (int)pcs.size(); ++k)
        for (int s = 0; s < 4; ++s) {
            int e = dense[pcs[k].lab[s]];
            T.crossings[k].e[s] = e;
            occs[e].push_back({k, s});
        }

    std::vector<int> sign(pcs.size(), 0); // 0 unknown
    std::vector<std::array<int, 4>> role(pcs.size(), {1, 0, -1, 0});
    auto set_end = [&](int e, int k, int s, bool head) {
        EndRef& slot = T.ends[e][head ? 1 : 0];
        if (slot.kind == -1) {
            slot = EndRef{0, k, s};
            return;
        }
        if (!(slot == EndRef{0, k, s})) throw ParseError("inconsistent orientation in PD code");
    };
    auto force_sign = [&](int k, int sg, auto&& recurse) -> void {
        if (sign[k] == sg) return;
        if (sign[k] != 0) throw ParseError("inconsistent orientation in PD code");
        sign[k] = sg;
        // sign +: over d->b: d head, b tail; sign -: b head, d tail
        role[k][1] = sg > 0 ? -1 : 1;
        role[k][3] = sg > 0 ? 1 : -1;
        for (int s : {1, 3}) {
            int e = T.crossings[k].e[s];
            set_end(e, k, s, role[k][s] > 0);
            // the mate occurrence of e gets the opposite role if still open
            for (auto& oc : occs[e]) {
                if (oc.cross == k && oc.slot == s) continue;
                int want = -role[k][s];
                if (oc.slot == 0 || oc.slot == 2) {
                    if (role[oc.cross][oc.slot] != want)
                        throw ParseError("inconsistent orientation in PD code");
                } else if (sign[oc.cross] == 0) {
                    int sg2 = (oc.slot == 3) == (want > 0) ? 1 : -1;
                    recurse(oc.cross, sg2, recurse);
                } else if (role[oc.cross][oc.slot] != want) {
                    throw ParseError("inconsistent orientation in PD code");
                }
            }
        }
    };

    // seed with the under-strand roles, then propagate over-pair choices
    for (int k = 0; k < (int)pcs.size(); ++k) {
        set_end(T.crossings[k].e[0], k, 0, true);
        set_end(T.crossings[k].e[2], k, 2, false);
    }
    for (int k = 0; k < (int)pcs.size(); ++k)
        for (int s : {1, 3}) {
            if (sign[k] != 0) continue;
            int e = T.crossings[k].e[s];
            for (auto& oc : occs[e]) {
                if (oc.cross == k && oc.slot == s) continue;
                int mate_role = role[oc.cross][oc.slot];
                if (oc.slot == 1 || oc.slot == 3) {
                    if (sign[oc.cross] == 0) continue;
                    mate_role = role[oc.cross][oc.slot];
                }
                if (mate_role == 0) continue;
                int want = -mate_role;
                int sg = (s == 3) == (want > 0) ? 1 : -1;
                force_sign(k, sg, force_sign);
                break;
            }
        }
    // any crossing still undecided gets a deterministic positive choice
    for (int k = 0; k < (int)pcs.size(); ++k)
        if (sign[k] == 0) force_sign(k, +1, force_sign);

    for (int k = 0; k < (int)pcs.size(); ++k) T.crossings[k].sign = sign[k];
    for (int e = 0; e < T.num_edges; ++e)
        if (T.ends[e][0].kind == -1 || T.ends[e][1].kind == -1)
            throw ParseError("inconsistent orientation in PD code");
    T.validate();
    return T;
}

// ---------------------------------------------------------------------------
// Braid words. Generators +/-i act on strands i, i+1 (1-based); all strands
// are oriented downward and the word is closed by the trace closure unless
// plat closure is requested (which needs an even strand count).
// ---------------------------------------------------------------------------

namespace detail {

// Rebuilds orientations of a diagram whose crossings have correct cyclic slot
// orders and under/over diagonals (slots 0,2 under; 1,3 over) but possibly
// stale head/tail data. Strands are traced and oriented; a tuple is rotated
// by two when the traced under-strand enters at slot 2, and the sign is
// re-derived from the over direction. `forced` pins the direction of chosen
// edges: (edge, end index that becomes the tail).
inline TangleDiagram reorient_by_tracing(const TangleDiagram& in,
                                         const std::vector<std::pair<int, int>>& forced = {});

// Appends a braid-style crossing: u over v' when positive.
// Slot tuples follow the fixed rotational convention of the builders.
inline void add_braid_crossing(TangleDiagram& T, int u, int v, int up, int vp, bool positive) {
    int k = (int)T.crossings.size();
    Crossing c;
    if (positive) {
        c.e = {v, vp, up, u}; // under v -> up, over u -> vp
        c.sign = +1;
        T.ends[v][1] = {0, k, 0};
        T.ends[vp][0] = {0, k, 1};
        T.ends[up][0] = {0, k, 2};
        T.ends[u][1] = {0, k, 3};
    } else {
        c.e = {u, v, vp, up}; // under u -> vp, over v -> up
        c.sign = -1;
        T.ends[u][1] = {0, k, 0};
        T.ends[v][1] = {0, k, 1};
        T.ends[vp][0] = {0, k, 2};
        T.ends[up][0] = {0, k, 3};
    }
    T.crossings.push_back(c);
}

} // namespace detail

inline TangleDiagram parse_braid(const std::vector<int>& word, bool plat = false) {
    int strands = 1;
    for (int g : word) {
        if (g == 0) throw ParseError("braid generator 0 is invalid");
        strands = std::max(strands, std::abs(g) + 1);
    }
    if (plat && strands % 2) ++strands;
    if (plat && strands % 2) throw ParseError("plat closure needs an even strand count");

    TangleDiagram T;
    auto newedge = [&]() {
        T.ends.push_back({EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
        return T.num_edges++;
    };
    std::vector<int> top(strands), cur(strands);
    for (int i = 0; i < strands; ++i) top[i] = cur[i] = newedge();
    for (int g : word) {
        int i = std::abs(g) - 1;
        int u = cur[i], v = cur[i + 1];
        int up = newedge(), vp = newedge();
        detail::add_braid_crossing(T, u, v, up, vp, g > 0);
        cur[i] = up;
        cur[i + 1] = vp;
    }

    // closure identifies edges; collapse with a union-find over edge ids
    detail::Dsu dsu(T.num_edges);
    if (!plat) {
        for (int i = 0; i < strands; ++i) dsu.unite(top[i], cur[i]);
    } else {
        for (int i = 0; i < strands; i += 2) {
            dsu.unite(top[i], top[i + 1]);
            dsu.unite(cur[i], cur[i + 1]);
        }
    }
    // merge end tables: each class keeps the crossing ends; a class with no
    // crossing end at all is a free loop
    std::map<int, std::vector<EndRef>> class_ends;
    for (int e = 0; e < T.num_edges; ++e)
        for (auto& r : T.ends[e])
            if (r.kind == 0) class_ends[dsu.find(e)].push_back(r);

    std::map<int, int> remap;
    TangleDiagram R;
    R.name = T.name;
    for (int e = 0; e < T.num_edges; ++e) {
        int root = dsu.find(e);
        if (remap.count(root)) continue;
        auto& ce = class_ends[root];
        if (ce.empty()) {
            R.free_loops += 1; // untouched strand closes to a circle
            remap[root] = -1;
            continue;
        }
        if (ce.size() != 2) throw std::logic_error("closure produced a bad edge class");
        remap[root] = R.num_edges++;
        R.ends.push_back({EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
    }
    R.crossings = T.crossings;
    for (int k = 0; k < (int)R.crossings.size(); ++k)
        for (int s = 0; s < 4; ++s) R.crossings[k].e[s] = remap[dsu.find(R.crossings[k].e[s])];
    for (int e = 0; e < T.num_edges; ++e) {
        int m = remap[dsu.find(e)];
        if (m < 0) continue;
        for (int side = 0; side < 2; ++side)
            if (T.ends[e][side].kind == 0) R.ends[m][side] = T.ends[e][side];
    }
    if (!plat) {
        for (int e = 0; e < R.num_edges; ++e)
            if (R.ends[e][0].kind == -1 || R.ends[e][1].kind == -1)
                throw std::logic_error("trace closure left an open edge");
        R.validate();
        return R;
    }
    // plat closure breaks the all-downward orientation; re-orient by tracing
    return detail::reorient_by_tracing(R);
}

inline TangleDiagram parse_braid_text(const std::string& text, bool plat = false) {
    std::vector<int> word;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        try {
            size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            word.push_back(v);
        } catch (...) {
            throw ParseError("bad braid generator '" + tok + "'");
        }
    }
    return parse_braid(word, plat);
}

namespace detail {

// Occurrences of every edge: crossing slots plus boundary positions.
inline std::vector<std::array<EndRef, 2>> edge_occurrences(const TangleDiagram& T) {
    std::vector<std::vector<EndRef>> occ(T.num_edges);
    for (int k = 0; k < (int)T.crossings.size(); ++k)
        for (int s = 0; s < 4; ++s) occ[T.crossings[k].e[s]].push_back(EndRef{0, k, s});
    for (int p = 0; p < (int)T.boundary.size(); ++p)
        occ[T.boundary[p]].push_back(EndRef{1, p, 0});
    std::vector<std::array<EndRef, 2>> out(T.num_edges);
    for (int e = 0; e < T.num_edges; ++e) {
        if (occ[e].size() != 2) throw std::logic_error("edge does not have exactly two ends");
        out[e] = {occ[e][0], occ[e][1]};
    }
    return out;
}

inline TangleDiagram reorient_by_tracing(const TangleDiagram& in,
                                         const std::vector<std::pair<int, int>>& forced) {
    TangleDiagram T = in;
    auto occ = edge_occurrences(T);
    // dir[e]: 0 unknown, 1 flows occ0 -> occ1, 2 flows occ1 -> occ0
    std::vector<int> dir(T.num_edges, 0);
    auto propagate = [&](int e0, int d0) {
        // walk both ways along the strand through e0
        std::vector<std::pair<int, int>> stack{{e0, d0}};
        while (!stack.empty()) {
            auto [e, d] = stack.back();
            stack.pop_back();
            if (dir[e]) {
                if (dir[e] != d) throw SemanticError("conflicting strand orientations");
                continue;
            }
            dir[e] = d;
            for (int side = 0; side < 2; ++side) {
                EndRef r = occ[e][side];
                if (r.kind != 0) continue;
                bool is_head = (side == 1) == (d == 1);
                int s2 = (r.slot + 2) % 4;
                int e2 = T.crossings[r.idx].e[s2];
                // pick the occurrence of e2 at (r.idx, s2); self-loop edges
                // occupy both slots, in which case either occurrence works
                int mate_side = -1;
                for (int t = 0; t < 2; ++t)
                    if (occ[e2][t] == EndRef{0, r.idx, s2}) mate_side = t;
                if (mate_side < 0) throw std::logic_error("occurrence table corrupt");
                if (e2 == e) continue; // kink loop: direction already set
                // strand continues: the far end of e2 at this crossing has the
                // opposite role (head meets tail)
                bool mate_is_head = !is_head;
                int d2 = (mate_side == 1) == mate_is_head ? 1 : 2;
                stack.push_back({e2, d2});
            }
        }
    };
    for (auto [e, tail_side] : forced) propagate(e, tail_side == 0 ? 1 : 2);
    for (int e = 0; e < T.num_edges; ++e)
        if (!dir[e]) propagate(e, 1);

    // rebuild ends, rotate tuples so slot 0 is the under-in, recompute signs
    T.ends.assign(T.num_edges, {EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
    for (int e = 0; e < T.num_edges; ++e) {
        int tail_side = dir[e] == 1 ? 0 : 1;
        T.ends[e][0] = occ[e][tail_side];
        T.ends[e][1] = occ[e][1 - tail_side];
    }
    for (int k = 0; k < (int)T.crossings.size(); ++k) {
        Crossing& c = T.crossings[k];
        auto head_here = [&](int s) {
            return T.ends[c.e[s]][1] == EndRef{0, k, s};
        };
        if (!head_here(0)) {
            std::swap(c.e[0], c.e[2]);
            std::swap(c.e[1], c.e[3]);
            // slots moved: fix the two ends tables for the rotated tuple
            for (int s = 0; s < 4; ++s) {
                int e = c.e[s];
                for (int side = 0; side < 2; ++side)
                    if (T.ends[e][side].kind == 0 && T.ends[e][side].idx == k &&
                        T.ends[e][side].slot == (s + 2) % 4)
                        T.ends[e][side].slot = s;
            }
        }
        if (!head_here(0)) throw std::logic_error("under-strand rotation failed");
        c.sign = head_here(3) ? +1 : -1;
    }
    T.validate();
    return T;
}

// Vertical twist region: |n| crossings stacked between a left and a right
// strand. For n > 0 each crossing is wired like a positive braid generator
// (so a downward-parallel orientation makes every crossing positive); for
// n < 0 like a negative one. Returns boundary edges (TL, TR, BR, BL).
struct TwistRegion {
    std::array<int, 4> ends; // TL, TR, BR, BL edge ids
};

inline TwistRegion add_twist_region(TangleDiagram& T, int n, int& edge_counter) {
    auto newedge = [&]() {
        T.ends.push_back({EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
        ++T.num_edges;
        return edge_counter++;
    };
    int l = newedge(), r = newedge();
    TwistRegion reg{{l, r, -1, -1}};
    for (int j = 0; j < std::abs(n); ++j) {
        int lp = newedge(), rp = newedge();
        add_braid_crossing(T, l, r, lp, rp, n > 0);
        l = lp;
        r = rp;
    }
    reg.ends[2] = r; // BR
    reg.ends[3] = l; // BL
    return reg;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Twist tangles: |q| half twists on two strands, boundary order
// (0,1,2,3) = (top-left, top-right, bottom-right, bottom-left).
// `sign` selects the orientation making every crossing carry that sign
// (parallel strands for one choice, antiparallel for the other).
// ---------------------------------------------------------------------------

inline TangleDiagram twist_tangle_raw(int n) {
    TangleDiagram T;
    int counter = 0;
    auto reg = detail::add_twist_region(T, n, counter);
    T.boundary = {reg.ends[0], reg.ends[1], reg.ends[2], reg.ends[3]};
    return T;
}

inline TangleDiagram twist_tangle(int q, int sign) {
    TangleDiagram T = twist_tangle_raw(q);
    if (q == 0) return detail::reorient_by_tracing(T);
    bool parallel = (q > 0) == (sign > 0);
    auto occ = detail::edge_occurrences(T);
    auto tail_side_at_boundary = [&](int e, int want_pos) {
        for (int side = 0; side < 2; ++side)
            if (occ[e][side].kind == 1 && occ[e][side].idx == want_pos) return side;
        throw std::logic_error("boundary edge not found");
    };
    std::vector<std::pair<int, int>> forced;
    forced.push_back({T.boundary[0], tail_side_at_boundary(T.boundary[0], 0)}); // left: down
    if (parallel)
        forced.push_back({T.boundary[1], tail_side_at_boundary(T.boundary[1], 1)}); // right: down
    else // right strand runs upward: its top-right end is a head
        forced.push_back({T.boundary[1], 1 - tail_side_at_boundary(T.boundary[1], 1)});
    TangleDiagram R = detail::reorient_by_tracing(T, forced);
    for (auto& c : R.crossings)
        if (c.sign != sign) throw std::logic_error("twist orientation failed to force signs");
    return R;
}

// ---------------------------------------------------------------------------
// Pretzel diagrams P(p, q, r): three twist regions joined by fixed top and
// bottom arcs. The twist handedness is pinned so that P(1,1,1) is the mirror
// trefoil (s = -2).
// ---------------------------------------------------------------------------

struct PretzelParts {
    TangleDiagram whole;
    std::array<TangleDiagram, 3> pieces;  // region twist tangles, oriented as in `whole`
    std::array<std::array<int, 4>, 3> corner_edges; // whole edge id at TL,TR,BR,BL per region
    std::array<int, 3> crossing_base;     // first crossing index of region i in `whole`
    PAD closure;                          // 3-input diagram gluing the pieces
};

inline constexpr int pretzel_twist_of_param(int p) { return p; }

inline PretzelParts pretzel_parts(int p, int q, int r, bool allow_links = false) {
    std::array<int, 3> par{p, q, r};

    TangleDiagram T;
    int counter = 0;
    std::array<detail::TwistRegion, 3> regs;
    std::array<int, 3> base;
    for (int i = 0; i < 3; ++i) {
        base[i] = (int)T.crossings.size();
        regs[i] = detail::add_twist_region(T, pretzel_twist_of_param(par[i]), counter);
    }

    // gluing arcs, evaluated one at a time because zero-twist regions alias
    // their corner edges
    int free_loops = 0;
    auto join = [&](int i1, int j1, int i2, int j2) {
        int e1 = regs[i1].ends[j1], e2 = regs[i2].ends[j2];
        if (e1 == e2) { // closing an edge onto itself makes a free loop
            ++free_loops;
            return;
        }
        for (auto& c : T.crossings)
            for (auto& e : c.e)
                if (e == e2) e = e1;
        for (auto& reg : regs)
            for (auto& e : reg.ends)
                if (e == e2) e = e1;
    };
    join(0, 1, 1, 0); // p.TR - q.TL
    join(1, 1, 2, 0); // q.TR - r.TL
    join(0, 0, 2, 1); // p.TL - r.TR
    join(0, 2, 1, 3); // p.BR - q.BL
    join(1, 2, 2, 3); // q.BR - r.BL
    join(0, 3, 2, 2); // p.BL - r.BR

    // compact ids; edges that survive only inside regs (no crossing use)
    // belong to loops already counted above
    std::map<int, int> remap;
    for (auto& c : T.crossings)
        for (auto& e : c.e)
            if (!remap.count(e)) remap[e] = (int)remap.size();

    TangleDiagram R;
    R.num_edges = (int)remap.size();
    R.ends.assign(R.num_edges, {EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
    R.crossings = T.crossings;
    for (auto& c : R.crossings)
        for (auto& e : c.e) e = remap[e];
    R.free_loops = free_loops;
    if (R.crossings.empty() && R.free_loops == 0) R.free_loops = 1;

    PretzelParts parts;
    parts.whole = detail::reorient_by_tracing(R);
    parts.whole.name = "P(" + std::to_string(p) + "," + std::to_string(q) + "," +
                       std::to_string(r) + ")";
    if (!allow_links && parts.whole.components() != 1)
        throw SemanticError("not a knot: " + parts.whole.name + " has " +
                            std::to_string(parts.whole.components()) + " components");

    parts.crossing_base = base;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) {
            auto it = remap.find(regs[i].ends[j]);
            parts.corner_edges[i][j] = it == remap.end() ? -1 : it->second;
        }

    // pieces: rebuilt with identical wiring, orientations forced to match the
    // whole via the top corner edges
    for (int i = 0; i < 3; ++i) {
        int twists = pretzel_twist_of_param(par[i]);
        TangleDiagram piece = twist_tangle_raw(twists);
        int nc = (int)piece.crossings.size();
        std::vector<std::pair<int, int>> forced;
        if (nc > 0) {
            auto occ = detail::edge_occurrences(piece);
            // locate the whole-diagram end sitting at corner j: it is the end
            // of the corner edge at the region's top crossing; in the builder
            // wiring the top-left slot is odd for positive twists and even
            // for negative ones (rotation during reorientation preserves
            // slot parity)
            auto corner_end = [&](int j) -> EndRef {
                int we = parts.corner_edges[i][j];
                int top = base[i];
                std::vector<EndRef> at_top;
                for (int side = 0; side < 2; ++side) {
                    EndRef r = parts.whole.ends[we][side];
                    if (r.kind == 0 && r.idx == top) at_top.push_back(r);
                }
                if (at_top.size() == 1) return at_top[0];
                if (at_top.size() == 2) {
                    int tl_parity = twists > 0 ? 1 : 0;
                    int want = j == 0 ? tl_parity : 1 - tl_parity;
                    for (auto& r : at_top)
                        if (r.slot % 2 == want) return r;
                }
                throw std::logic_error("pretzel corner end not found");
            };
            for (int j : {0, 1}) {
                EndRef ce = corner_end(j);
                int we = parts.corner_edges[i][j];
                bool entering = parts.whole.ends[we][1] == ce;
                int pe = piece.boundary[j];
                int side_bnd = -1, side_other = -1;
                for (int side = 0; side < 2; ++side) {
                    if (occ[pe][side].kind == 1 && occ[pe][side].idx == j)
                        side_bnd = side;
                    else
                        side_other = side;
                }
                // entering at a top corner = the piece strand starts there
                forced.push_back({pe, entering ? side_bnd : side_other});
            }
        }
        parts.pieces[i] = detail::reorient_by_tracing(piece, forced);
        for (int k = 0; k < nc; ++k)
            if (parts.pieces[i].crossings[k].sign != parts.whole.crossings[base[i] + k].sign)
                throw std::logic_error("pretzel piece signs diverge from the whole");
    }

    PAD D;
    D.out_points = 0;
    D.in_points = {4, 4, 4};
    D.arcs = {{PtRef{0, 1}, PtRef{1, 0}}, {PtRef{1, 1}, PtRef{2, 0}},
              {PtRef{0, 0}, PtRef{2, 1}}, {PtRef{0, 2}, PtRef{1, 3}},
              {PtRef{1, 2}, PtRef{2, 3}}, {PtRef{0, 3}, PtRef{2, 2}}};
    parts.closure = D;
    return parts;
}

inline TangleDiagram pretzel_diagram(int p, int q, int r, bool allow_links = false) {
    return pretzel_parts(p, q, r, allow_links).whole;
}


// ---------------------------------------------------------------------------
// Seifert resolution, face tracing and XY-labels.
//
// Faces of the resolved diagram are traced with the rule "arrive at a slot,
// leave at its smoothing partner"; faces of the unresolved diagram (used to
// locate Reidemeister sites) use "arrive at slot s, leave at slot s+1". Both
// walks treat the disk boundary as a wall: arriving at boundary point p the
// walk re-enters at point p+1.
// ---------------------------------------------------------------------------

struct Dart {
    int edge;
    int dir; // 0: tail->head, 1: head->tail
    bool operator<(const Dart& o) const { return edge != o.edge ? edge < o.edge : dir < o.dir; }
    bool operator==(const Dart& o) const { return edge == o.edge && dir == o.dir; }
};

namespace detail {

// Face walk of the 4-valent map: arrive at slot s, leave at slot s+1. The
// same walk underlies the resolved diagram, whose faces are these orbits
// with the two windows of each smoothing's middle region merged.
inline Dart face_next(const TangleDiagram& T, Dart d) {
    EndRef arrive = T.ends[d.edge][d.dir == 0 ? 1 : 0];
    if (arrive.kind == 1) {
        int n = (int)T.boundary.size();
        int p = (arrive.idx + 1) % n;
        int e2 = T.boundary[p];
        bool tail_here = T.ends[e2][0] == EndRef{1, p, 0};
        return Dart{e2, tail_here ? 0 : 1};
    }
    int t = (arrive.slot + 1) % 4;
    int e2 = T.crossings[arrive.idx].e[t];
    // leave outward through the end of e2 sitting at (arrive.idx, t)
    if (T.ends[e2][0] == EndRef{0, arrive.idx, t}) return Dart{e2, 0};
    if (T.ends[e2][1] == EndRef{0, arrive.idx, t}) return Dart{e2, 1};
    throw std::logic_error("face walk lost");
}

// dart of the edge at (k, s) pointing into the crossing
inline Dart arriving_dart(const TangleDiagram& T, int k, int s) {
    int e = T.crossings[k].e[s];
    if (T.ends[e][1] == EndRef{0, k, s}) return Dart{e, 0};
    if (T.ends[e][0] == EndRef{0, k, s}) return Dart{e, 1};
    throw std::logic_error("no edge end at slot");
}

struct Faces {
    std::vector<int> face_of_dart; // index: 2*edge + dir
    std::vector<std::vector<Dart>> darts;
    int outer = -1;

    int face(Dart d) const { return face_of_dart[2 * d.edge + d.dir]; }
};

inline Faces trace_faces(const TangleDiagram& T, bool merge_smoothing_windows = false) {
    Faces F;
    F.face_of_dart.assign(2 * T.num_edges, -1);
    std::vector<std::vector<Dart>> orbits;
    for (int e = 0; e < T.num_edges; ++e)
        for (int dir = 0; dir < 2; ++dir) {
            if (F.face_of_dart[2 * e + dir] >= 0) continue;
            int id = (int)orbits.size();
            orbits.push_back({});
            Dart d{e, dir};
            while (F.face_of_dart[2 * d.edge + d.dir] < 0) {
                F.face_of_dart[2 * d.edge + d.dir] = id;
                orbits[id].push_back(d);
                d = face_next(T, d);
            }
            if (F.face_of_dart[2 * d.edge + d.dir] != id)
                throw std::logic_error("face walk did not close");
        }
    if (!merge_smoothing_windows) {
        F.darts = std::move(orbits);
    } else {
        // Seifert smoothing (0,1)(2,3) leaves a middle region with windows at
        // the sectors (1,2) and (3,0); smoothing (0,3)(1,2) at (0,1), (2,3).
        // The walk arriving at slot s traverses window (s, s+1).
        Dsu dsu((int)orbits.size());
        for (int k = 0; k < (int)T.crossings.size(); ++k) {
            int s0 = T.crossings[k].sign > 0 ? 1 : 0;
            Dart a = arriving_dart(T, k, s0), b = arriving_dart(T, k, s0 + 2);
            dsu.unite(F.face_of_dart[2 * a.edge + a.dir], F.face_of_dart[2 * b.edge + b.dir]);
        }
        std::map<int, int> newid;
        for (int f = 0; f < (int)orbits.size(); ++f) {
            int root = dsu.find(f);
            if (!newid.count(root)) {
                newid[root] = (int)F.darts.size();
                F.darts.push_back({});
            }
            int nf = newid[root];
            for (auto& d : orbits[f]) {
                F.face_of_dart[2 * d.edge + d.dir] = nf;
                F.darts[nf].push_back(d);
            }
        }
    }
    if (!T.boundary.empty()) {
        // outer face: the one whose walk passes the sector before point 0
        int e0 = T.boundary[0];
        bool tail_here = T.ends[e0][0] == EndRef{1, 0, 0};
        F.outer = F.face(Dart{e0, tail_here ? 0 : 1});
    } else if (T.num_edges > 0) {
        F.outer = F.face(Dart{0, 0});
    }
    return F;
}

// 2-coloring: faces on opposite sides of an edge get opposite colors. Split
// diagrams are colored one connected piece at a time (the relative colors of
// separate pieces carry no constraint).
inline std::vector<int> checkerboard(const TangleDiagram& T, const Faces& F, bool outer_black) {
    std::vector<int> color(F.darts.size(), -1);
    if (F.darts.empty()) return color;
    auto flood = [&](int seed, int c0) {
        std::vector<int> stack{seed};
        color[seed] = c0;
        while (!stack.empty()) {
            int f = stack.back();
            stack.pop_back();
            for (const Dart& d : F.darts[f]) {
                int g = F.face(Dart{d.edge, 1 - d.dir});
                if (color[g] < 0) {
                    color[g] = 1 - color[f];
                    stack.push_back(g);
                } else if (color[g] == color[f]) {
                    throw std::logic_error("resolved diagram is not checkerboard colorable");
                }
            }
        }
    };
    flood(F.outer, outer_black ? 1 : 0);
    for (int f = 0; f < (int)F.darts.size(); ++f)
        if (color[f] < 0) flood(f, 0);
    return color;
}

} // namespace detail

struct SeifertData {
    std::vector<std::vector<int>> circles; // edge lists in cyclic order; free loops are empty
    std::vector<std::vector<int>> arcs;    // open strands, tail boundary to head boundary
    std::vector<int> circle_label;         // 1 = X, 0 = Y
    std::vector<int> arc_label;            // 1 = e_X, 0 = e_Y
    int writhe = 0;
    int r = 0;
    bool outer_black = false;

    // component id per crossing slot: circles first, then arcs
    std::vector<std::array<int, 4>> comp_of_slot;
    // boundary structure of the Seifert-resolved tangle
    Object in_object;
    std::vector<int> in_arc_comp;   // per arc of in_object: component id
    std::vector<int> arc_start_pos; // per arcs[] entry: boundary position of its start

    int n_components() const { return (int)(circles.size() + arcs.size()); }
    int label_of(int comp) const {
        return comp < (int)circles.size() ? circle_label[comp] : arc_label[comp - circles.size()];
    }
};

inline SeifertData seifert_resolve(const TangleDiagram& T, bool outer_black = false) {
    SeifertData S;
    S.outer_black = outer_black;
    S.writhe = T.writhe();
    S.comp_of_slot.assign(T.crossings.size(), {-1, -1, -1, -1});

    auto seifert_partner = [&](int k, int s) { return T.crossings[k].seifert_partner(s); };
    std::vector<char> edge_done(T.num_edges, 0);

    auto walk = [&](int e0, std::vector<int>& path) {
        // follow orientation from edge e0 until boundary or closure
        int e = e0;
        while (true) {
            path.push_back(e);
            edge_done[e] = 1;
            EndRef h = T.ends[e][1];
            if (h.kind == 1) return false; // ended at boundary
            int t = seifert_partner(h.idx, h.slot);
            e = T.crossings[h.idx].e[t];
            if (e == e0) return true;
            if (edge_done[e]) return true;
        }
    };

    // open arcs first: start from boundary tails
    std::vector<std::pair<int, int>> arc_ends; // (start pos, end pos)
    for (int p = 0; p < (int)T.boundary.size(); ++p) {
        int e = T.boundary[p];
        if (!(T.ends[e][0] == EndRef{1, p, 0}) || edge_done[e]) continue;
        std::vector<int> tmp;
        walk(e, tmp);
        int last = tmp.back();
        arc_ends.push_back({p, T.ends[last][1].idx});
        S.arcs.push_back(std::move(tmp));
    }
    // circles
    for (int e = 0; e < T.num_edges; ++e) {
        if (edge_done[e]) continue;
        std::vector<int> path;
        bool closed = walk(e, path);
        if (!closed) throw std::logic_error("seifert walk hit a boundary unexpectedly");
        S.circles.push_back(std::move(path));
    }
    for (int i = 0; i < T.free_loops; ++i) S.circles.push_back({});
    S.r = (int)S.circles.size();

    auto mark = [&](const std::vector<int>& path, int comp) {
        for (int e : path) {
            EndRef h = T.ends[e][1];
            if (h.kind != 1) {
                S.comp_of_slot[h.idx][h.slot] = comp;
                S.comp_of_slot[h.idx][seifert_partner(h.idx, h.slot)] = comp;
            }
        }
    };
    for (int i = 0; i < (int)S.circles.size(); ++i) mark(S.circles[i], i);
    for (int i = 0; i < (int)S.arcs.size(); ++i) mark(S.arcs[i], (int)S.circles.size() + i);
    for (auto& slots : S.comp_of_slot)
        for (int v : slots)
            if (v < 0) throw std::logic_error("unassigned smoothing slot");

    // labels via the checkerboard coloring of the resolved diagram
    if (T.num_edges > 0) {
        auto F = detail::trace_faces(T, true);
        auto color = detail::checkerboard(T, F, outer_black);
        auto label_from = [&](const std::vector<int>& path) {
            if (path.empty()) return 1; // free loop: conventional X
            int f = F.face(Dart{path[0], 0});
            return color[f] == 1 ? 1 : 0; // black on the left: X
        };
        for (auto& c : S.circles) S.circle_label.push_back(label_from(c));
        for (auto& a : S.arcs) S.arc_label.push_back(label_from(a));
    } else {
        S.circle_label.assign(S.circles.size(), 1);
    }

    // boundary matching of the resolved tangle
    S.in_object.match.assign(T.boundary.size(), -1);
    for (int i = 0; i < (int)S.arcs.size(); ++i) {
        auto [a, b] = arc_ends[i];
        S.in_object.match[a] = b;
        S.in_object.match[b] = a;
        S.arc_start_pos.push_back(a);
    }
    if (!T.boundary.empty()) {
        S.in_object.validate();
        S.in_arc_comp.assign(S.in_object.narcs(), -1);
        for (int i = 0; i < (int)S.arcs.size(); ++i) {
            int arc = S.in_object.arc_of_point(arc_ends[i].first);
            S.in_arc_comp[arc] = (int)S.circles.size() + i;
        }
    }
    return S;
}

// ---------------------------------------------------------------------------
// Reidemeister moves.
// ---------------------------------------------------------------------------

enum class RMove { R1Plus, R1Minus, R1pPlus, R1pMinus, R2, R2Inv, R3 };

inline const char* rmove_name(RMove m) {
    switch (m) {
        case RMove::R1Plus: return "R1+";
        case RMove::R1Minus: return "R1-";
        case RMove::R1pPlus: return "R1'+";
        case RMove::R1pMinus: return "R1'-";
        case RMove::R2: return "R2";
        case RMove::R2Inv: return "R2inv";
        case RMove::R3: return "R3";
    }
    return "?";
}

struct RSite {
    RMove move;
    int edge = -1;                 // R1 family
    Dart d1{-1, 0}, d2{-1, 0};     // R2: two darts on one face
    std::vector<Dart> face_darts;  // R2inv / R3
};

namespace detail {

inline int new_edge(TangleDiagram& T) {
    T.ends.push_back({EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
    return T.num_edges++;
}

// After rewiring, rotate a crossing so slot 0 holds the incoming under-strand
// and recompute the sign from the over direction.
inline void fix_crossing_orientation(TangleDiagram& T, int k) {
    Crossing& c = T.crossings[k];
    auto head_here = [&](int s) { return T.ends[c.e[s]][1] == EndRef{0, k, s}; };
    if (!head_here(0)) {
        std::swap(c.e[0], c.e[2]);
        std::swap(c.e[1], c.e[3]);
        for (int s = 0; s < 4; ++s) {
            int e = c.e[s];
            for (int side = 0; side < 2; ++side)
                if (T.ends[e][side].kind == 0 && T.ends[e][side].idx == k &&
                    T.ends[e][side].slot == (s + 2) % 4)
                    T.ends[e][side].slot = s;
        }
    }
    if (!head_here(0) || head_here(2)) throw std::logic_error("crossing rotation failed");
    c.sign = head_here(3) ? +1 : -1;
}

// Removes a set of crossings, splicing the strands straight through them.
inline void splice_out_crossings(TangleDiagram& T, const std::set<int>& gone) {
    Dsu dsu(T.num_edges);
    for (int k : gone) {
        const Crossing& c = T.crossings[k];
        dsu.unite(c.under_in(), c.under_out());
        dsu.unite(c.over_in(), c.over_out());
    }
    // surviving ends per class
    std::map<int, std::vector<std::pair<int, EndRef>>> live; // class -> (edge, end)
    for (int e = 0; e < T.num_edges; ++e)
        for (int side = 0; side < 2; ++side) {
            EndRef r = T.ends[e][side];
            if (r.kind == 0 && gone.count(r.idx)) continue;
            live[dsu.find(e)].push_back({e, r});
        }
    std::map<int, int> remap; // old class -> new edge id
    TangleDiagram R;
    R.free_loops = T.free_loops;
    R.name = T.name;
    R.boundary = T.boundary;
    for (int e = 0; e < T.num_edges; ++e) {
        int root = dsu.find(e);
        if (remap.count(root)) continue;
        auto& ends = live[root];
        if (ends.empty()) {
            remap[root] = -1;
            R.free_loops += 1;
            continue;
        }
        if (ends.size() != 2) throw std::logic_error("splice created a bad edge class");
        remap[root] = new_edge(R);
    }
    // old crossing index -> new index
    std::map<int, int> kmap;
    for (int k = 0; k < (int)T.crossings.size(); ++k) {
        if (gone.count(k)) continue;
        int nk = (int)kmap.size();
        kmap[k] = nk;
        Crossing c = T.crossings[k];
        for (auto& e : c.e) e = remap[dsu.find(e)];
        R.crossings.push_back(c);
    }
    for (auto& [root, ends] : live) {
        int ne = remap[root];
        if (ne < 0) continue;
        // orientation: exactly one surviving end is a head, one a tail
        int placed = 0;
        for (auto& [e, r] : ends) {
            bool head = T.ends[e][1] == r;
            EndRef nr = r;
            if (nr.kind == 0) nr.idx = kmap.at(nr.idx);
            R.ends[ne][head ? 1 : 0] = nr;
            ++placed;
        }
        if (placed != 2 || R.ends[ne][0].kind == -1 || R.ends[ne][1].kind == -1)
            throw std::logic_error("splice orientation mismatch");
    }
    for (int p = 0; p < (int)R.boundary.size(); ++p) R.boundary[p] = remap[dsu.find(R.boundary[p])];
    R.validate();
    T = R;
}

} // namespace detail

struct RResult {
    TangleDiagram after;
    int dw = 0; // writhe change
    int dr = 0; // Seifert circle count change
};

inline RResult apply_reidemeister(const TangleDiagram& T0, const RSite& site) {
    TangleDiagram T = T0;

    switch (site.move) {
        case RMove::R1Plus:
        case RMove::R1Minus:
        case RMove::R1pPlus:
        case RMove::R1pMinus: {
            int e = site.edge;
            if (e < 0 || e >= T.num_edges) throw SemanticError("invalid R1 site");
            int f = detail::new_edge(T);
            int l = detail::new_edge(T);
            int k = (int)T.crossings.size();
            EndRef old_head = T.ends[e][1];
            // the far attachment of e moves to f
            if (old_head.kind == 0)
                T.crossings[old_head.idx].e[old_head.slot] = f;
            else
                T.boundary[old_head.idx] = f;
            T.ends[f][1] = old_head;
            Crossing c;
            switch (site.move) {
                case RMove::R1Plus:
                    c = {{e, f, l, l}, +1};
                    T.ends[e][1] = {0, k, 0};
                    T.ends[f][0] = {0, k, 1};
                    T.ends[l][0] = {0, k, 2};
                    T.ends[l][1] = {0, k, 3};
                    break;
                case RMove::R1Minus:
                    c = {{l, l, f, e}, +1};
                    T.ends[l][1] = {0, k, 0};
                    T.ends[l][0] = {0, k, 1};
                    T.ends[f][0] = {0, k, 2};
                    T.ends[e][1] = {0, k, 3};
                    break;
                case RMove::R1pPlus:
                    c = {{e, l, l, f}, -1};
                    T.ends[e][1] = {0, k, 0};
                    T.ends[l][1] = {0, k, 1};
                    T.ends[l][0] = {0, k, 2};
                    T.ends[f][0] = {0, k, 3};
                    break;
                default: // R1pMinus
                    c = {{l, e, f, l}, -1};
                    T.ends[l][1] = {0, k, 0};
                    T.ends[e][1] = {0, k, 1};
                    T.ends[f][0] = {0, k, 2};
                    T.ends[l][0] = {0, k, 3};
                    break;
            }
            T.crossings.push_back(c);
            break;
        }
        case RMove::R2: {
            auto F = detail::trace_faces(T);
            if (site.d1.edge == site.d2.edge || F.face(site.d1) != F.face(site.d2))
                throw SemanticError("invalid R2 site: darts do not share a face");
            // split both edges into three parts along the dart direction
            auto split3 = [&](Dart d, std::array<int, 3>& parts) {
                int e = d.edge;
                int m = detail::new_edge(T), last = detail::new_edge(T);
                EndRef old_head = T.ends[e][1];
                if (old_head.kind == 0)
                    T.crossings[old_head.idx].e[old_head.slot] = last;
                else
                    T.boundary[old_head.idx] = last;
                T.ends[last][1] = old_head;
                // intrinsic orientation: e -> m -> last
                parts = d.dir == 0 ? std::array<int, 3>{e, m, last}
                                   : std::array<int, 3>{last, m, e};
            };
            std::array<int, 3> u, v; // along the darts: u[0], m_u = u[1], u[2]
            split3(site.d1, u);
            split3(site.d2, v);
            int kA = (int)T.crossings.size();
            int kB = kA + 1;
            // crossing A: cyclic (m_v, u0, v2, m_u); crossing B: (v0, u2, m_v, m_u)
            T.crossings.push_back({{v[1], u[0], v[2], u[1]}, +1});
            T.crossings.push_back({{v[0], u[2], v[1], u[1]}, +1});
            // ends in the dart frame; intrinsic direction fixed below
            // u-strand: u0 -> A(slot1), m_u: A(slot3) -> B(slot3), u2: B(slot1) ->
            // v-strand: v0 -> B(slot0), m_v: B(slot2) -> A(slot0), v2: A(slot2) ->
            // New edges carry the intrinsic orientation of the edge they split
            // off; darts with dir == 1 traverse them backwards.
            auto place = [&](Dart d0, const std::array<int, 3>& w, int k_in, int s_in, int k_mid_a,
                             int s_mid_a, int k_mid_b, int s_mid_b, int k_out, int s_out) {
                bool fwd = d0.dir == 0;
                // w[0]'s dart-head at (k_in, s_in)
                T.ends[w[0]][fwd ? 1 : 0] = {0, k_in, s_in};
                T.ends[w[1]][fwd ? 0 : 1] = {0, k_mid_a, s_mid_a};
                T.ends[w[1]][fwd ? 1 : 0] = {0, k_mid_b, s_mid_b};
                T.ends[w[2]][fwd ? 0 : 1] = {0, k_out, s_out};
            };
            place(site.d1, {u[0], u[1], u[2]}, kA, 1, kA, 3, kB, 3, kB, 1);
            place(site.d2, {v[0], v[1], v[2]}, kB, 0, kB, 2, kA, 0, kA, 2);
            detail::fix_crossing_orientation(T, kA);
            detail::fix_crossing_orientation(T, kB);
            break;
        }
        case RMove::R2Inv: {
            if (site.face_darts.size() != 2) throw SemanticError("invalid R2inv site");
            auto F = detail::trace_faces(T);
            Dart d1 = site.face_darts[0], d2 = site.face_darts[1];
            if (F.face(d1) != F.face(d2) || F.darts[F.face(d1)].size() != 2)
                throw SemanticError("invalid R2inv site: not a bigon");
            EndRef h1 = T.ends[d1.edge][d1.dir == 0 ? 1 : 0];
            EndRef h2 = T.ends[d2.edge][d2.dir == 0 ? 1 : 0];
            if (h1.kind != 0 || h2.kind != 0) throw SemanticError("bigon touches the boundary");
            int A = h1.idx, B = h2.idx;
            if (A == B || d1.edge == d2.edge) throw SemanticError("degenerate bigon");
            if (T.crossings[A].sign == T.crossings[B].sign)
                throw SemanticError("bigon is not an R2 pair (equal signs)");
            auto level = [&](int k, int e) {
                const Crossing& c = T.crossings[k];
                for (int s = 0; s < 4; ++s)
                    if (c.e[s] == e && (T.ends[e][0] == EndRef{0, k, s} ||
                                        T.ends[e][1] == EndRef{0, k, s}))
                        return s % 2; // 0: under diagonal, 1: over diagonal
                throw std::logic_error("edge not at crossing");
            };
            if (level(A, d1.edge) != level(B, d1.edge))
                throw SemanticError("bigon is not an R2 pair (strand changes level)");
            detail::splice_out_crossings(T, {A, B});
            break;
        }
        case RMove::R3: {
            if (site.face_darts.size() != 3) throw SemanticError("invalid R3 site");
            auto F = detail::trace_faces(T);
            int f = F.face(site.face_darts[0]);
            for (auto& d : site.face_darts)
                if (F.face(d) != f) throw SemanticError("R3 darts do not share a face");
            if (F.darts[f].size() != 3) throw SemanticError("R3 face is not a triangle");
            struct Side {
                int m;      // triangle edge
                int Fk, Fs; // crossing and slot at the tail of m
                int Gk, Gs; // crossing and slot at the head of m
                int a, b;   // outer edges before/after m along the strand
            };
            std::array<Side, 3> sides;
            std::set<int> corner_set, edge_set;
            for (int i = 0; i < 3; ++i) {
                Side s;
                s.m = site.face_darts[i].edge;
                EndRef t = T.ends[s.m][0], h = T.ends[s.m][1];
                if (t.kind != 0 || h.kind != 0) throw SemanticError("R3 side on the boundary");
                s.Fk = t.idx;
                s.Fs = t.slot;
                s.Gk = h.idx;
                s.Gs = h.slot;
                s.a = T.crossings[s.Fk].e[(s.Fs + 2) % 4];
                s.b = T.crossings[s.Gk].e[(s.Gs + 2) % 4];
                corner_set.insert(s.Fk);
                corner_set.insert(s.Gk);
                edge_set.insert(s.m);
                sides[i] = s;
            }
            if (corner_set.size() != 3 || edge_set.size() != 3)
                throw SemanticError("degenerate R3 triangle");
            // applicability: over/under pattern must not be cyclic
            bool has_extreme = false;
            for (auto& s : sides)
                if ((s.Fs % 2) == (s.Gs % 2)) has_extreme = true;
            if (!has_extreme) throw SemanticError("R3 pattern is cyclic");
            // rewire: every strand swaps the order of its two triangle corners;
            // all updates are computed against the pre-move tables
            struct EndUpd {
                int edge, side;
                EndRef now, then;
            };
            std::vector<EndUpd> upd;
            for (auto& s : sides) {
                int in_slot_F = (s.Fs + 2) % 4;  // held a
                int out_slot_G = (s.Gs + 2) % 4; // held b
                T.crossings[s.Fk].e[in_slot_F] = s.m;
                T.crossings[s.Fk].e[s.Fs] = s.b;
                T.crossings[s.Gk].e[s.Gs] = s.a;
                T.crossings[s.Gk].e[out_slot_G] = s.m;
                upd.push_back({s.m, 0, EndRef{0, s.Fk, s.Fs}, EndRef{0, s.Gk, out_slot_G}});
                upd.push_back({s.m, 1, EndRef{0, s.Gk, s.Gs}, EndRef{0, s.Fk, in_slot_F}});
                upd.push_back({s.a, 1, EndRef{0, s.Fk, in_slot_F}, EndRef{0, s.Gk, s.Gs}});
                upd.push_back({s.b, 0, EndRef{0, s.Gk, out_slot_G}, EndRef{0, s.Fk, s.Fs}});
            }
            std::vector<std::pair<std::pair<int, int>, EndRef>> writes;
            for (auto& u : upd) {
                if (!(T0.ends[u.edge][u.side] == u.now))
                    throw std::logic_error("R3 end bookkeeping mismatch");
                writes.push_back({{u.edge, u.side}, u.then});
            }
            for (auto& [key, ref] : writes) T.ends[key.first][key.second] = ref;
            break;
        }
    }
    T.validate();
    RResult res;
    res.after = T;
    SeifertData s0 = seifert_resolve(T0), s1 = seifert_resolve(T);
    res.dw = s1.writhe - s0.writhe;
    res.dr = s1.r - s0.r;
    return res;
}

// Site enumeration helpers for randomized move generation.
inline std::vector<RSite> enumerate_r1_sites(const TangleDiagram& T) {
    std::vector<RSite> out;
    for (int e = 0; e < T.num_edges; ++e)
        for (RMove m : {RMove::R1Plus, RMove::R1Minus, RMove::R1pPlus, RMove::R1pMinus}) {
            RSite s;
            s.move = m;
            s.edge = e;
            out.push_back(s);
        }
    return out;
}

inline std::vector<RSite> enumerate_r2_sites(const TangleDiagram& T) {
    std::vector<RSite> out;
    if (T.num_edges == 0) return out;
    auto F = detail::trace_faces(T);
    for (auto& face : F.darts)
        for (size_t i = 0; i < face.size(); ++i)
            for (size_t j = 0; j < face.size(); ++j) {
                if (i == j || face[i].edge == face[j].edge) continue;
                RSite s;
                s.move = RMove::R2;
                s.d1 = face[i];
                s.d2 = face[j];
                out.push_back(s);
            }
    return out;
}

inline std::vector<RSite> enumerate_r2inv_sites(const TangleDiagram& T) {
    std::vector<RSite> out;
    if (T.num_edges == 0) return out;
    auto F = detail::trace_faces(T);
    for (auto& face : F.darts) {
        if (face.size() != 2) continue;
        RSite s;
        s.move = RMove::R2Inv;
        s.face_darts = {face[0], face[1]};
        try {
            apply_reidemeister(T, s);
        } catch (const SemanticError&) {
            continue;
        }
        out.push_back(s);
    }
    return out;
}

inline std::vector<RSite> enumerate_r3_sites(const TangleDiagram& T) {
    std::vector<RSite> out;
    if (T.num_edges == 0) return out;
    auto F = detail::trace_faces(T);
    for (auto& face : F.darts) {
        if (face.size() != 3) continue;
        RSite s;
        s.move = RMove::R3;
        s.face_darts = {face[0], face[1], face[2]};
        try {
            apply_reidemeister(T, s);
        } catch (const SemanticError&) {
            continue;
        }
        out.push_back(s);
    }
    return out;
}

} // namespace khs
