#pragma once

#include "lee.hpp"

namespace khs {

// ---------------------------------------------------------------------------
// Brute-force validator: the explicit cube of resolutions with coefficients
// in F[H], the Frobenius algebra A = F[H][X]/(X^2 - HX) acting in the {1, X}
// basis, and an exhaustive divisibility search for the Lee class. Everything
// here works with plain matrices; none of the cobordism machinery is used.
// ---------------------------------------------------------------------------

template <class F>
struct CubeComplex {
    struct Gen {
        int vertex;
        uint32_t word; // bit j = circle j carries X
        int qdeg;
    };
    int n = 0;
    int n_plus = 0, n_minus = 0;
    std::map<int, std::vector<Gen>> gens;                              // degree -> generators
    std::map<int, std::map<std::pair<int, int>, Mono<F>>> diff;       // (col,row) -> c H^h
    std::map<int, Mono<F>> alpha;                                      // degree-0 cycle
    int writhe = 0, r = 0;
    int qdeg_alpha = 0;

    void check_d_squared() const {
        for (auto& [d, mat] : diff) {
            auto next = diff.find(d + 1);
            if (next == diff.end()) continue;
            std::map<std::pair<int, int>, std::map<int, F>> acc;
            for (auto& [k1, m1] : mat)
                for (auto& [k2, m2] : next->second) {
                    if (k2.first != k1.second) continue;
                    auto& poly = acc[{k1.first, k2.second}];
                    poly[m1.h + m2.h] += m1.c * m2.c;
                }
            for (auto& [key, poly] : acc)
                for (auto& [h, c] : poly)
                    if (!c.is_zero()) throw std::logic_error("cube d^2 != 0");
        }
    }
};

namespace detail {

// circle decomposition of a full resolution: union-find over edges
inline std::vector<int> resolution_components(const TangleDiagram& T, uint32_t v, int& count) {
    Dsu dsu(T.num_edges);
    for (int k = 0; k < (int)T.crossings.size(); ++k) {
        bool one = (v >> k) & 1;
        auto partner = [&](int s) {
            return one ? Crossing::res1_partner(s) : Crossing::res0_partner(s);
        };
        const Crossing& c = T.crossings[k];
        dsu.unite(c.e[0], c.e[partner(0)]);
        dsu.unite(c.e[2], c.e[partner(2)]);
    }
    std::map<int, int> id;
    std::vector<int> comp(T.num_edges, -1);
    for (int e = 0; e < T.num_edges; ++e) {
        int root = dsu.find(e);
        if (!id.count(root)) id[root] = (int)id.size();
        comp[e] = id[root];
    }
    count = (int)id.size();
    return comp;
}

} // namespace detail

template <class F>
CubeComplex<F> cube_complex(const TangleDiagram& T, int max_crossings = 12) {
    if (!T.boundary.empty()) throw SemanticError("cube complex needs a closed diagram");
    int n = (int)T.crossings.size();
    if (n > max_crossings)
        throw SemanticError("too many crossings for the cube (" + std::to_string(n) + ")");
    CubeComplex<F> C;
    C.n = n;
    C.n_plus = T.n_plus();
    C.n_minus = T.n_minus();
    C.writhe = T.writhe();

    // per-vertex circle structure; free loops append as extra circles
    int V = 1 << n;
    std::vector<std::vector<int>> comp(V);
    std::vector<int> circ(V);
    for (int v = 0; v < V; ++v) {
        comp[v] = detail::resolution_components(T, v, circ[v]);
        circ[v] += T.free_loops;
    }

    // generators with global indices per homological degree
    std::map<int, std::map<std::pair<int, uint32_t>, int>> index;
    for (int v = 0; v < V; ++v) {
        int deg = __builtin_popcount((unsigned)v) - C.n_minus;
        for (uint32_t w = 0; w < (uint32_t)(1 << circ[v]); ++w) {
            int q = circ[v] - 2 * (int)__builtin_popcount(w) +
                    __builtin_popcount((unsigned)v) + C.n_plus - 2 * C.n_minus;
            int idx = (int)C.gens[deg].size();
            C.gens[deg].push_back({v, w, q});
            index[deg][{v, w}] = idx;
        }
    }

    // differentials
    for (int v = 0; v < V; ++v) {
        int deg = __builtin_popcount((unsigned)v) - C.n_minus;
        for (int k = 0; k < n; ++k) {
            if ((v >> k) & 1) continue;
            int v2 = v | (1 << k);
            int sgn = __builtin_popcount((unsigned)v & ((1u << k) - 1)) % 2 ? -1 : 1;
            // circle correspondence via edges
            int c1 = circ[v] - T.free_loops, c2 = circ[v2] - T.free_loops;
            std::vector<std::set<int>> img(c1), pre(c2);
            for (int e = 0; e < T.num_edges; ++e) {
                int a = comp[v][e], b = comp[v2][e];
                img[a].insert(b);
                pre[b].insert(a);
            }
            bool is_merge = c2 == c1 - 1;
            if (!is_merge && c2 != c1 + 1) throw std::logic_error("cube edge changes != 1 circle");

            for (auto& [key, col] : index[deg]) {
                if (key.first != v) continue;
                uint32_t w = key.second;
                // build images
                auto emit = [&](uint32_t w2, int hexp, int coeff_sign) {
                    int row = index[deg + 1].at({v2, w2});
                    F c = coeff_sign * sgn > 0 ? F::one() : -F::one();
                    auto& slot = C.diff[deg][{col, row}];
                    if (slot.is_zero())
                        slot = Mono<F>(c, hexp);
                    else {
                        if (slot.h != hexp) throw std::logic_error("inhomogeneous cube entry");
                        slot.c += c;
                        if (slot.c.is_zero()) C.diff[deg].erase({col, row});
                    }
                };
                if (is_merge) {
                    int b = -1;
                    for (int bb = 0; bb < c2; ++bb)
                        if (pre[bb].size() == 2) b = bb;
                    if (b < 0) throw std::logic_error("merge target not found");
                    int a1 = *pre[b].begin(), a2 = *std::next(pre[b].begin());
                    uint32_t w2 = 0;
                    for (int aa = 0; aa < c1; ++aa)
                        if (aa != a1 && aa != a2 && ((w >> aa) & 1)) w2 |= 1u << *img[aa].begin();
                    for (int j = 0; j < T.free_loops; ++j)
                        if ((w >> (c1 + j)) & 1) w2 |= 1u << (c2 + j);
                    bool x1 = (w >> a1) & 1, x2 = (w >> a2) & 1;
                    if (!x1 && !x2) emit(w2, 0, +1);                 // 1*1 = 1
                    else if (x1 != x2) emit(w2 | (1u << b), 0, +1);  // X
                    else emit(w2 | (1u << b), 1, +1);                // X*X = H X
                } else {
                    int a = -1;
                    for (int aa = 0; aa < c1; ++aa)
                        if (img[aa].size() == 2) a = aa;
                    if (a < 0) throw std::logic_error("split source not found");
                    int b1 = *img[a].begin(), b2 = *std::next(img[a].begin());
                    uint32_t w2 = 0;
                    for (int aa = 0; aa < c1; ++aa)
                        if (aa != a && ((w >> aa) & 1)) w2 |= 1u << *img[aa].begin();
                    for (int j = 0; j < T.free_loops; ++j)
                        if ((w >> (c1 + j)) & 1) w2 |= 1u << (c2 + j);
                    if ((w >> a) & 1) {
                        emit(w2 | (1u << b1) | (1u << b2), 0, +1);   // X -> X x X
                    } else {
                        emit(w2 | (1u << b1), 0, +1);
                        emit(w2 | (1u << b2), 0, +1);
                        emit(w2, 1, -1);                              // - H 1x1
                    }
                }
            }
        }
    }

    // Lee class at the oriented resolution
    SeifertData S = seifert_resolve(T);
    C.r = S.r;
    C.qdeg_alpha = C.writhe - S.r;
    uint32_t vs = 0;
    for (int k = 0; k < n; ++k)
        if (T.crossings[k].sign < 0) vs |= 1u << k;
    // identify cube circles at vs with Seifert components
    int cs = circ[vs] - T.free_loops;
    std::vector<int> label(circ[vs], 1); // free loops labeled X
    {
        std::vector<int> comp_of_edge(T.num_edges, -1);
        for (int i = 0; i < (int)S.circles.size(); ++i)
            for (int e : S.circles[i]) comp_of_edge[e] = i;
        for (int e = 0; e < T.num_edges; ++e) {
            if (comp_of_edge[e] < 0) throw std::logic_error("seifert component missing");
            label[comp[vs][e]] = S.circle_label[comp_of_edge[e]];
        }
    }
    // alpha = tensor of X or (X - H) over circles
    int deg0 = __builtin_popcount(vs) - C.n_minus;
    if (deg0 != 0) throw std::logic_error("oriented resolution is not at degree 0");
    std::vector<std::pair<uint32_t, Mono<F>>> terms{{0, Mono<F>::one()}};
    for (int j = 0; j < circ[vs]; ++j) {
        std::vector<std::pair<uint32_t, Mono<F>>> next;
        for (auto& [w, m] : terms) {
            next.push_back({w | (1u << j), m});
            if (label[j] == 0) next.push_back({w, Mono<F>(-m.c, m.h + 1)});
        }
        terms = std::move(next);
    }
    std::map<std::pair<int, uint32_t>, int> idx0;
    for (int i = 0; i < (int)C.gens[0].size(); ++i)
        idx0[{C.gens[0][i].vertex, C.gens[0][i].word}] = i;
    for (auto& [w, m] : terms) C.alpha[idx0.at({(int)vs, w})] = m;
    return C;
}

// ---------------------------------------------------------------------------
// Unit-entry reduction of the cube: plain Gaussian elimination of H^0 unit
// entries with the class vector carried through, shrinking the complex to
// homology size. Entries stay monomials by q-homogeneity.
// ---------------------------------------------------------------------------

template <class F>
void cube_reduce_units(CubeComplex<F>& C) {
    while (true) {
        int deg = 0, col = -1, row = -1;
        for (auto& [d, mat] : C.diff) {
            for (auto& [key, m] : mat)
                if (m.h == 0) {
                    deg = d;
                    col = key.first;
                    row = key.second;
                    break;
                }
            if (col >= 0) break;
        }
        if (col < 0) return;
        Mono<F> a = C.diff[deg][{col, row}];
        Mono<F> a_inv = a.inv();
        std::vector<std::pair<int, Mono<F>>> bs, cs;
        for (auto& [key, m] : C.diff[deg]) {
            if (key.second == row && key.first != col) bs.push_back({key.first, m});
            if (key.first == col && key.second != row) cs.push_back({key.second, m});
        }
        for (auto& [y, b] : bs)
            for (auto& [w, c] : cs) {
                Mono<F> corr = c * a_inv * b;
                auto it = C.diff[deg].find({y, w});
                if (it == C.diff[deg].end()) {
                    C.diff[deg][{y, w}] = -corr;
                } else {
                    if (it->second.h != corr.h) throw std::logic_error("inhomogeneous correction");
                    it->second.c += (-corr).c;
                    if (it->second.c.is_zero()) C.diff[deg].erase(it);
                }
            }
        if (deg + 1 == 0) {
            auto itZ = C.alpha.find(row);
            if (itZ != C.alpha.end()) {
                Mono<F> zZ = itZ->second;
                for (auto& [w, c] : cs) {
                    Mono<F> corr = c * a_inv * zZ;
                    auto& slot = C.alpha[w];
                    if (slot.is_zero())
                        slot = -corr;
                    else {
                        if (slot.h != corr.h) throw std::logic_error("inhomogeneous alpha update");
                        slot.c += (-corr).c;
                        if (slot.c.is_zero()) C.alpha.erase(w);
                    }
                }
                C.alpha.erase(row);
            }
        } else if (deg == 0) {
            C.alpha.erase(col);
        }
        // remove the two generators; compact indices
        auto drop = [&](int d, int idx) {
            auto& v = C.gens[d];
            v.erase(v.begin() + idx);
            auto shift = [&](int j) { return j > idx ? j - 1 : j; };
            if (auto it = C.diff.find(d); it != C.diff.end()) {
                std::map<std::pair<int, int>, Mono<F>> nm;
                for (auto& [key, m] : it->second)
                    if (key.first != idx) nm[{shift(key.first), key.second}] = m;
                it->second = std::move(nm);
                if (it->second.empty()) C.diff.erase(it);
            }
            if (auto it = C.diff.find(d - 1); it != C.diff.end()) {
                std::map<std::pair<int, int>, Mono<F>> nm;
                for (auto& [key, m] : it->second)
                    if (key.second != idx) nm[{key.first, shift(key.second)}] = m;
                it->second = std::move(nm);
                if (it->second.empty()) C.diff.erase(it);
            }
            if (d == 0) {
                std::map<int, Mono<F>> nm;
                for (auto& [j, m] : C.alpha)
                    if (j != idx) nm[shift(j)] = m;
                C.alpha = std::move(nm);
            }
            if (v.empty()) C.gens.erase(d);
        };
        drop(deg + 1, row);
        drop(deg, col);
    }
}

// ---------------------------------------------------------------------------
// Divisibility by truncated graded linear algebra: the largest k such that
// for some saturation exponent l, H^l alpha lies in H^(k+l) Z_0 + B_0 inside
// the finite q-graded piece. All solves happen on the unit-reduced complex.
// ---------------------------------------------------------------------------

namespace detail {

// does `target` lie in the span of the given columns? plain row reduction on
// the augmented matrix
template <class F>
bool in_span(const std::vector<std::vector<F>>& cols, const std::vector<F>& target) {
    int rows = (int)target.size();
    int ncols = (int)cols.size();
    std::vector<std::vector<F>> A(rows, std::vector<F>(ncols + 1, F::zero()));
    for (int c = 0; c < ncols; ++c)
        for (int r = 0; r < rows; ++r) A[r][c] = cols[c][r];
    for (int r = 0; r < rows; ++r) A[r][ncols] = target[r];
    int lead = 0;
    for (int c = 0; c < ncols && lead < rows; ++c) {
        int piv = -1;
        for (int r = lead; r < rows; ++r)
            if (!A[r][c].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) continue;
        std::swap(A[lead], A[piv]);
        F inv = A[lead][c].inv();
        for (int r = 0; r < rows; ++r) {
            if (r == lead || A[r][c].is_zero()) continue;
            F f = A[r][c] * inv;
            for (int cc = c; cc <= ncols; ++cc) A[r][cc] = A[r][cc] - f * A[lead][cc];
        }
        ++lead;
    }
    // consistent iff no row reads 0 ... 0 | nonzero
    for (int r = 0; r < rows; ++r) {
        bool allz = true;
        for (int c = 0; c < ncols; ++c)
            if (!A[r][c].is_zero()) {
                allz = false;
                break;
            }
        if (allz && !A[r][ncols].is_zero()) return false;
    }
    return true;
}

// kernel basis of the column->row map M (columns = domain basis)
template <class F>
std::vector<std::vector<F>> kernel_basis(std::vector<std::vector<F>> M, int rows) {
    int ncols = (int)M.size();
    // row-reduce the transpose-augmented system M x = 0
    std::vector<std::vector<F>> A(rows, std::vector<F>(ncols, F::zero()));
    for (int c = 0; c < ncols; ++c)
        for (int r = 0; r < rows; ++r) A[r][c] = M[c][r];
    std::vector<int> pivot_col;
    int lead = 0;
    for (int c = 0; c < ncols && lead < rows; ++c) {
        int piv = -1;
        for (int r = lead; r < rows; ++r)
            if (!A[r][c].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) continue;
        std::swap(A[lead], A[piv]);
        F inv = A[lead][c].inv();
        for (int r = 0; r < rows; ++r) {
            if (r == lead || A[r][c].is_zero()) continue;
            F f = A[r][c] * inv;
            for (int cc = 0; cc < ncols; ++cc) A[r][cc] = A[r][cc] - f * A[lead][cc];
        }
        pivot_col.push_back(c);
        ++lead;
    }
    std::set<int> pivots(pivot_col.begin(), pivot_col.end());
    std::vector<std::vector<F>> basis;
    for (int c = 0; c < ncols; ++c) {
        if (pivots.count(c)) continue;
        std::vector<F> v(ncols, F::zero());
        v[c] = F::one();
        for (int i = 0; i < (int)pivot_col.size(); ++i) {
            // row i has its pivot at pivot_col[i]
            F num = A[i][c];
            if (num.is_zero()) continue;
            v[pivot_col[i]] = -(num * A[i][pivot_col[i]].inv());
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace detail

// Exhaustive H-divisibility of the Lee class on the unit-reduced cube.
template <class F>
int brute_d_h(const TangleDiagram& T, int max_crossings = 8) {
    if ((int)T.crossings.size() > max_crossings)
        throw SemanticError("too many crossings for the brute-force search");
    CubeComplex<F> C = cube_complex<F>(T, max_crossings + 4);
    C.check_d_squared();
    cube_reduce_units(C);
    if (C.alpha.empty()) throw std::logic_error("Lee class died in the unit reduction");

    // q-degree bookkeeping on the reduced complex
    int qa = C.qdeg_alpha;
    int qmin = qa, qmax = qa;
    for (auto& [d, v] : C.gens)
        for (auto& g : v) {
            qmin = std::min(qmin, g.qdeg);
            qmax = std::max(qmax, g.qdeg);
        }
    int kmax = std::max(0, (qmax - qa) / 2);
    int L = (qmax - qmin) / 2 + 2;

    auto degree_gens = [&](int d) -> const std::vector<typename CubeComplex<F>::Gen>* {
        auto it = C.gens.find(d);
        return it == C.gens.end() ? nullptr : &it->second;
    };

    // basis of C_d at fixed quantum degree qq: generator i with
    // H-exponent t_i = (qdeg_i - qq)/2 when >= 0 and even difference
    auto graded_basis = [&](int d, int qq, std::vector<int>& gen_of_basis) {
        gen_of_basis.clear();
        auto* v = degree_gens(d);
        if (!v) return;
        for (int i = 0; i < (int)v->size(); ++i) {
            int diff = (*v)[i].qdeg - qq;
            if (diff >= 0 && diff % 2 == 0) gen_of_basis.push_back(i);
        }
    };

    // matrix of d_d between two graded windows, as columns over F (the
    // H-exponent of an entry is absorbed by the window bookkeeping)
    auto graded_matrix = [&](int d, const std::vector<int>& dom, const std::vector<int>& cod) {
        std::map<int, int> cod_pos;
        for (int i = 0; i < (int)cod.size(); ++i) cod_pos[cod[i]] = i;
        std::vector<std::vector<F>> cols(dom.size(), std::vector<F>(cod.size(), F::zero()));
        auto it = C.diff.find(d);
        if (it == C.diff.end()) return cols;
        std::map<int, int> dom_pos;
        for (int i = 0; i < (int)dom.size(); ++i) dom_pos[dom[i]] = i;
        for (auto& [key, m] : it->second) {
            auto dp = dom_pos.find(key.first);
            auto cp = cod_pos.find(key.second);
            if (dp == dom_pos.end() || cp == cod_pos.end()) continue;
            cols[dp->second][cp->second] = cols[dp->second][cp->second] + m.c;
        }
        return cols;
    };

    auto test = [&](int k) {
        for (int l = 0; l <= L; ++l) {
            int qq = qa - 2 * l;
            std::vector<int> b0, b1, bm1, bz, bz1;
            graded_basis(0, qq, b0);
            if (b0.empty()) continue;
            graded_basis(1, qq, b1);
            graded_basis(-1, qq, bm1);
            graded_basis(0, qa + 2 * k, bz);
            graded_basis(1, qa + 2 * k, bz1);
            std::map<int, int> pos0;
            for (int i = 0; i < (int)b0.size(); ++i) pos0[b0[i]] = i;
            // target: H^l alpha
            std::vector<F> target(b0.size(), F::zero());
            for (auto& [g, m] : C.alpha) {
                auto it = pos0.find(g);
                if (it == pos0.end()) return false; // cannot express alpha here
                target[it->second] = target[it->second] + m.c;
            }
            // candidate span: boundaries + H^(k+l) cycles
            std::vector<std::vector<F>> span_cols = graded_matrix(-1, bm1, b0);
            auto M0 = graded_matrix(0, bz, bz1);
            auto Zbasis = detail::kernel_basis(M0, (int)bz1.size());
            for (auto& z : Zbasis) {
                std::vector<F> col(b0.size(), F::zero());
                for (int i = 0; i < (int)bz.size(); ++i) {
                    if (z[i].is_zero()) continue;
                    auto it = pos0.find(bz[i]); // shifting by H^(k+l) keeps the generator
                    if (it == pos0.end()) throw std::logic_error("graded shift left the window");
                    col[it->second] = col[it->second] + z[i];
                }
                span_cols.push_back(std::move(col));
            }
            if (detail::in_span(span_cols, target)) return true;
        }
        return false;
    };

    if (!test(0)) throw std::logic_error("Lee class is not even H^0-divisible");
    for (int k = kmax; k >= 1; --k)
        if (test(k)) return k;
    return 0;
}

// graded Euler characteristic over the free generators: q^qdeg with sign
template <class F>
std::map<int, long> cube_euler(const CubeComplex<F>& C) {
    std::map<int, long> chi;
    for (auto& [d, v] : C.gens)
        for (auto& g : v) chi[g.qdeg] += (d % 2 == 0) ? 1 : -1;
    for (auto it = chi.begin(); it != chi.end();)
        it = it->second == 0 ? chi.erase(it) : std::next(it);
    return chi;
}

} // namespace khs
