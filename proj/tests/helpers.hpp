#pragma once

#include <random>
#include <set>
#include <sstream>

#include "khs/oracle.hpp"

namespace khs::testing {

inline std::string emit_pd(const TangleDiagram& T) {
    std::ostringstream os;
    for (size_t k = 0; k < T.crossings.size(); ++k) {
        if (k) os << " ";
        const auto& c = T.crossings[k];
        os << "X[" << c.e[0] + 1 << "," << c.e[1] + 1 << "," << c.e[2] + 1 << "," << c.e[3] + 1
           << "]";
    }
    return os.str();
}

// graded Euler characteristic: circles expand as q + q^{-1}
template <class F>
std::map<std::pair<std::vector<int>, int>, long> euler(const Complex<F>& K) {
    std::map<std::pair<std::vector<int>, int>, long> chi;
    for (auto& [deg, v] : K.obj)
        for (auto& o : v) {
            long sgn = deg % 2 == 0 ? 1 : -1;
            // expand (q + q^-1)^circles
            for (int j = 0; j <= o.circles; ++j) {
                long binom = 1;
                for (int t = 0; t < j; ++t) binom = binom * (o.circles - t) / (t + 1);
                int q = o.qshift + o.circles - 2 * j;
                chi[{o.match, q}] += sgn * binom;
            }
        }
    for (auto it = chi.begin(); it != chi.end();)
        it = it->second == 0 ? chi.erase(it) : std::next(it);
    return chi;
}

template <class F>
std::multiset<std::tuple<int, int, std::vector<int>>> summands(const Complex<F>& K) {
    std::multiset<std::tuple<int, int, std::vector<int>>> out;
    for (auto& [d, v] : K.obj)
        for (auto& o : v) out.insert({d, o.qshift, o.match});
    return out;
}

// canonical string of a closed diagram under edge relabeling: trace strands
// from every possible anchor, relabel by discovery order, take the minimum
inline std::string canonical_pd_string(const TangleDiagram& T) {
    std::string best;
    int n = T.num_edges;
    for (int start = 0; start < n; ++start) {
        // relabel edges by walking strands from `start` along orientation
        std::vector<int> label(n, -1);
        int next = 0;
        std::vector<int> queue{start};
        // follow the knot strand through crossings
        int e = start;
        for (int guard = 0; guard < 2 * n + 2 && label[e] < 0; ++guard) {
            label[e] = next++;
            EndRef h = T.ends[e][1];
            if (h.kind != 0) break;
            const Crossing& c = T.crossings[h.idx];
            e = c.e[(h.slot + 2) % 4];
        }
        for (int f = 0; f < n; ++f)
            if (label[f] < 0) label[f] = next++;
        std::vector<std::string> rows;
        for (auto& c : T.crossings) {
            std::ostringstream os;
            os << (c.sign > 0 ? "+" : "-");
            // normalize rotational phase: smallest over-slot label first is
            // unnecessary; the tuple starts at the under-in slot already
            os << label[c.e[0]] << "," << label[c.e[1]] << "," << label[c.e[2]] << ","
               << label[c.e[3]];
            rows.push_back(os.str());
        }
        std::sort(rows.begin(), rows.end());
        std::string s;
        for (auto& r : rows) s += r + ";";
        if (best.empty() || s < best) best = s;
    }
    return best;
}

inline TangleDiagram reverse_orientation(const TangleDiagram& T) {
    std::vector<std::pair<int, int>> forced;
    for (int e = 0; e < T.num_edges; ++e) {
        // current tail end must become the head
        auto occ = detail::edge_occurrences(T);
        for (int side = 0; side < 2; ++side)
            if (occ[e][side] == T.ends[e][1]) forced.push_back({e, side});
    }
    return detail::reorient_by_tracing(T, forced);
}

inline std::vector<int> random_braid_word(std::mt19937& rng, int max_len, int strands) {
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_int_distribution<int> gen(1, strands - 1);
    std::uniform_int_distribution<int> sgn(0, 1);
    int L = len(rng);
    std::vector<int> w;
    for (int i = 0; i < L; ++i) w.push_back(gen(rng) * (sgn(rng) ? 1 : -1));
    return w;
}


// Composed-vs-direct Lee cycle comparison for a pretzel: plug the three
// twist-tangle cycles (with induced labels) over the closure diagram, cap
// the inner unlink, and compare term-exactly against the directly built
// cycle of the glued diagram. Throws on bookkeeping failures; returns
// whether the two morphisms agree.
template <class F>
bool composed_lee_cycle_matches(int p, int q, int r) {
    PretzelParts parts = pretzel_parts(p, q, r, true);
    auto Sw = seifert_resolve(parts.whole);
    auto Lw = lee_cycle<F>(Sw);
    std::vector<int> comp_of_edge_w(parts.whole.num_edges, -1);
    for (int i = 0; i < (int)Sw.circles.size(); ++i)
        for (int e : Sw.circles[i]) comp_of_edge_w[e] = i;

    std::vector<Object> ins, outs;
    std::vector<CobLin<F>> alphas;
    std::vector<std::vector<int>> piece_circle_comp(3), piece_arc_comp(3);
    for (int i = 0; i < 3; ++i) {
        auto Si = seifert_resolve(parts.pieces[i]);
        for (int j = 0; j < (int)Si.circles.size(); ++j) {
            if (Si.circles[j].empty()) throw std::runtime_error("piece free loop");
            int e = Si.circles[j][0];
            EndRef h = parts.pieces[i].ends[e][1];
            int wc = Sw.comp_of_slot[parts.crossing_base[i] + h.idx][h.slot];
            Si.circle_label[j] = Sw.circle_label[wc];
            piece_circle_comp[i].push_back(wc);
        }
        for (int j = 0; j < (int)Si.arcs.size(); ++j) {
            int we = parts.corner_edges[i][Si.arc_start_pos[j]];
            if (we < 0) throw std::runtime_error("degenerate corner");
            Si.arc_label[j] = Sw.circle_label[comp_of_edge_w[we]];
        }
        piece_arc_comp[i].assign(Si.in_object.narcs(), -1);
        for (int a = 0; a < Si.in_object.narcs(); ++a) {
            auto [pp, qq] = Si.in_object.arc_endpoints(a);
            (void)qq;
            int we = parts.corner_edges[i][pp];
            if (we < 0) throw std::runtime_error("degenerate corner");
            piece_arc_comp[i][a] = comp_of_edge_w[we];
        }
        auto Li = lee_cycle<F>(Si);
        ins.push_back(Li.source);
        outs.push_back(Li.target);
        alphas.push_back(Li.value);
    }

    PluggedObject T0 = plug_obj(parts.closure, ins);
    std::vector<int> t0_labels;
    for (auto& pl : T0.circle_parts) {
        int comp = -1;
        for (auto& cp : pl) {
            if (cp.kind != 0) throw std::runtime_error("unexpected circle kind");
            int c = piece_arc_comp[cp.input][cp.index];
            if (comp >= 0 && c != comp) throw std::runtime_error("mixed components");
            comp = c;
        }
        t0_labels.push_back(Sw.circle_label[comp]);
    }
    CobLin<F> alpha0 = khs::detail::labeled_cups<F>(Object::empty(), T0.obj, t0_labels);

    PluggedObject so, to;
    CobLin<F> Dalpha = plug_mor(parts.closure, ins, outs, alphas, so, to);
    CobLin<F> composed = compose(Object::empty(), T0.obj, to.obj, Dalpha, alpha0);

    std::vector<int> perm;
    for (auto& pl : to.circle_parts) {
        int comp = -1;
        for (auto& cp : pl) {
            int c = cp.kind == 1 ? piece_circle_comp[cp.input][cp.index]
                                 : piece_arc_comp[cp.input][cp.index];
            if (comp >= 0 && c != comp) throw std::runtime_error("mixed components");
            comp = c;
        }
        perm.push_back(comp);
    }
    CobLin<F> expected;
    for (auto& [mask, m] : Lw.value.terms) {
        uint64_t nm = 0;
        for (int c = 0; c < (int)perm.size(); ++c)
            if ((mask >> perm[c]) & 1) nm |= (uint64_t)1 << c;
        expected.add_term(nm, m);
    }
    return composed == expected;
}


// glue pairs of boundary points of an open diagram (edge identification)
inline TangleDiagram close_tangle(const TangleDiagram& T,
                                  const std::vector<std::pair<int, int>>& pairs) {
    TangleDiagram R = T;
    detail::Dsu dsu(R.num_edges);
    for (auto [a, b] : pairs) dsu.unite(R.boundary.at(a), R.boundary.at(b));
    std::map<int, std::vector<EndRef>> crossing_ends;
    for (int e = 0; e < R.num_edges; ++e)
        for (auto& r : R.ends[e])
            if (r.kind == 0) crossing_ends[dsu.find(e)].push_back(r);
    std::map<int, int> remap;
    TangleDiagram out;
    out.free_loops = R.free_loops;
    for (int e = 0; e < R.num_edges; ++e) {
        int root = dsu.find(e);
        if (remap.count(root)) continue;
        auto& ce = crossing_ends[root];
        if (ce.empty()) {
            out.free_loops += 1;
            remap[root] = -1;
            continue;
        }
        if (ce.size() != 2) throw std::runtime_error("closure left an open edge");
        remap[root] = out.num_edges++;
        out.ends.push_back({EndRef{-1, -1, -1}, EndRef{-1, -1, -1}});
    }
    out.crossings = R.crossings;
    for (auto& c : out.crossings)
        for (auto& e : c.e) e = remap[dsu.find(e)];
    for (int e = 0; e < R.num_edges; ++e) {
        int m = remap[dsu.find(e)];
        if (m < 0) continue;
        for (int side = 0; side < 2; ++side)
            if (R.ends[e][side].kind == 0) out.ends[m][side] = R.ends[e][side];
    }
    out.validate();
    return out;
}

} // namespace khs::testing
