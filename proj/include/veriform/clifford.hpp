#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <map>
#include <string>
#include <vector>

#include "veriform/grassmann.hpp"
#include "veriform/lambda.hpp"
#include "veriform/rational.hpp"
#include "veriform/rng.hpp"

namespace veriform {

// --- 4x4 matrices over the Gaussian rationals ---

struct CliffordElement {
    std::array<GaussRational, 16> a{};

    GaussRational& at(int i, int j) { return a[i * 4 + j]; }
    const GaussRational& at(int i, int j) const { return a[i * 4 + j]; }

    static CliffordElement identity(GaussRational c = GaussRational(1)) {
        CliffordElement m;
        for (int i = 0; i < 4; ++i) m.at(i, i) = c;
        return m;
    }
    bool is_zero() const {
        for (auto& x : a)
            if (!x.is_zero()) return false;
        return true;
    }
    CliffordElement transpose() const {
        CliffordElement r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r.at(i, j) = at(j, i);
        return r;
    }
    friend CliffordElement operator*(const CliffordElement& x, const CliffordElement& y) {
        CliffordElement r;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) {
                if (x.at(i, k).is_zero()) continue;
                for (int j = 0; j < 4; ++j) r.at(i, j) += x.at(i, k) * y.at(k, j);
            }
        return r;
    }
    friend CliffordElement operator*(const GaussRational& c, const CliffordElement& y) {
        CliffordElement r;
        for (int i = 0; i < 16; ++i) r.a[i] = c * y.a[i];
        return r;
    }
    friend CliffordElement operator+(const CliffordElement& x, const CliffordElement& y) {
        CliffordElement r;
        for (int i = 0; i < 16; ++i) r.a[i] = x.a[i] + y.a[i];
        return r;
    }
    friend CliffordElement operator-(const CliffordElement& x, const CliffordElement& y) {
        CliffordElement r;
        for (int i = 0; i < 16; ++i) r.a[i] = x.a[i] - y.a[i];
        return r;
    }
    CliffordElement operator-() const {
        CliffordElement r;
        for (int i = 0; i < 16; ++i) r.a[i] = -a[i];
        return r;
    }
    friend bool operator==(const CliffordElement& x, const CliffordElement& y) {
        return x.a == y.a;
    }
};

// Lambda V-valued matrices: gamma = gamma^a v_a and its powers live here.
using LambdaMat = std::map<std::uint8_t, CliffordElement>;

inline void lam_add(LambdaMat& m, std::uint8_t mask, const CliffordElement& x) {
    if (x.is_zero()) return;
    auto it = m.find(mask);
    if (it == m.end()) {
        m.emplace(mask, x);
    } else {
        it->second = it->second + x;
        if (it->second.is_zero()) m.erase(it);
    }
}
inline LambdaMat lam_mul(const LambdaMat& x, const LambdaMat& y) {
    LambdaMat r;
    for (auto& [mx, ax] : x)
        for (auto& [my, ay] : y) {
            int s = merge_sign(mx, my);
            if (s == 0) continue;
            CliffordElement p = ax * ay;
            if (s < 0) p = -p;
            lam_add(r, mx | my, p);
        }
    return r;
}
inline LambdaMat lam_sub(LambdaMat x, const LambdaMat& y) {
    for (auto& [m, a] : y) lam_add(x, m, -a);
    return x;
}
inline bool lam_zero(const LambdaMat& x) { return x.empty(); }

// Lambda V-valued Grassmann scalars: values of spinor bilinears.
using LambdaGr = std::map<std::uint8_t, GrassmannElement>;

inline void lgr_add(LambdaGr& m, std::uint8_t mask, const GrassmannElement& x) {
    if (x.is_zero()) return;
    auto it = m.find(mask);
    if (it == m.end()) {
        m.emplace(mask, x);
    } else {
        it->second = it->second + x;
        if (it->second.is_zero()) m.erase(it);
    }
}
// Product in Lambda V tensor Grassmann with ONE joint parity: the v's
// anticommute with odd Grassmann coefficients. Normal form is coefficient
// first, v-monomial second, so (g v_m)(h v_u) = (-1)^{deg(m)|h|} gh v_m v_u.
inline LambdaGr lgr_mul(const LambdaGr& x, const LambdaGr& y) {
    LambdaGr r;
    for (auto& [mx, ax] : x)
        for (auto& [my, ay] : y) {
            int s = merge_sign(mx, my);
            if (s == 0) continue;
            auto py = gr_parity(ay);
            assert(py.has_value());
            if ((vdeg(mx) & 1) && *py == 1) s = -s;
            GrassmannElement p = gr_mul(ax, ay);
            if (s < 0) p = -p;
            lgr_add(r, mx | my, p);
        }
    return r;
}
inline LambdaGr lgr_sub(LambdaGr x, const LambdaGr& y) {
    for (auto& [m, a] : y) lgr_add(x, m, -a);
    return x;
}
inline LambdaGr lgr_scale(const GaussRational& c, LambdaGr x) {
    LambdaGr r;
    for (auto& [m, a] : x) {
        GrassmannElement s = c * a;
        if (!s.is_zero()) r.emplace(m, std::move(s));
    }
    return r;
}

// --- the concrete exact representation ---
//
// Dirac basis over Q(i) with {g^a, g^b} = -2 eta^{ab}:
//   g^0 = diag(1,1,-1,-1), g^k = [[0, s_k], [-s_k, 0]],
// charge conjugation C = g^0 g^2 (antisymmetric, C g^a C^{-1} = -(g^a)^T).

struct ChargeConjugation {
    CliffordElement C;
    CliffordElement Cinv;
};

struct CliffordAlgebra {
    std::array<CliffordElement, 4> gamma;  // index up
    ChargeConjugation cc;
    CliffordElement gamma5;

    static const CliffordAlgebra& instance() {
        static CliffordAlgebra alg = build();
        return alg;
    }

    static CliffordAlgebra build() {
        CliffordAlgebra A;
        GaussRational i = GaussRational::i(), one(1);
        auto& g = A.gamma;
        g[0].at(0, 0) = one;  g[0].at(1, 1) = one;  g[0].at(2, 2) = -one; g[0].at(3, 3) = -one;
        // g^1: sigma_x
        g[1].at(0, 3) = one;  g[1].at(1, 2) = one;  g[1].at(2, 1) = -one; g[1].at(3, 0) = -one;
        // g^2: sigma_y
        g[2].at(0, 3) = -i;   g[2].at(1, 2) = i;    g[2].at(2, 1) = i;    g[2].at(3, 0) = -i;
        // g^3: sigma_z
        g[3].at(0, 2) = one;  g[3].at(1, 3) = -one; g[3].at(2, 0) = -one; g[3].at(3, 1) = one;
        A.cc.C = g[0] * g[2];
        A.cc.Cinv = A.cc.C;  // C^2 = 1 in this rep
        A.gamma5 = i * (g[0] * (g[1] * (g[2] * g[3])));
        return A;
    }

    CliffordElement gamma_lo(int a) const { return GaussRational(kEta[a]) * gamma[a]; }

    // gamma^{a_1 ... a_n}: antisymmetrized product, weight 1/n!
    CliffordElement gamma_anti(const std::vector<int>& idx) const {
        int n = int(idx.size());
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        CliffordElement sum;
        long fact = 1;
        for (int i = 2; i <= n; ++i) fact *= i;
        do {
            int s = 1;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (perm[i] > perm[j]) s = -s;
            CliffordElement p = CliffordElement::identity();
            for (int i = 0; i < n; ++i) p = p * gamma[idx[perm[i]]];
            sum = sum + (GaussRational(s) * p);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return GaussRational(Rat(1, fact)) * sum;
    }

    // gamma := gamma^a v_a as a Lambda V-valued matrix, and its powers
    LambdaMat gamma_v() const {
        LambdaMat m;
        for (int a = 0; a < 4; ++a) lam_add(m, std::uint8_t(1) << a, gamma[a]);
        return m;
    }
    LambdaMat gamma_power(int n) const {
        LambdaMat m;
        lam_add(m, 0, CliffordElement::identity());
        LambdaMat gv = gamma_v();
        for (int i = 0; i < n; ++i) m = lam_mul(m, gv);
        return m;
    }
};

// --- Majorana spinors with Grassmann components ---

struct MajoranaSpinor {
    std::array<GrassmannElement, 4> c;
    int parity = 1;  // pool-0 parity of every component
};

// frozen real basis of the Majorana subspace (conj(v) = B v, B = g^0 C^T)
inline const std::array<std::array<GaussRational, 4>, 4>& majorana_basis() {
    static const std::array<std::array<GaussRational, 4>, 4> basis = [] {
        GaussRational i = GaussRational::i(), one(1);
        std::array<std::array<GaussRational, 4>, 4> b{};
        b[0] = {i, GaussRational(0), GaussRational(0), -one};
        b[1] = {GaussRational(0), i, one, GaussRational(0)};
        b[2] = {GaussRational(0), one, i, GaussRational(0)};
        b[3] = {-one, GaussRational(0), GaussRational(0), i};
        return b;
    }();
    return basis;
}

// random Majorana spinor of given parity: real-rational Grassmann coefficients
// against the real Majorana basis
inline MajoranaSpinor sample_majorana(Sampler& rng, int parity, int gen_lo, int gen_count) {
    MajoranaSpinor s;
    s.parity = parity;
    auto& basis = majorana_basis();
    for (int k = 0; k < 4; ++k) {
        GrassmannElement g = rng.grassmann(parity, gen_lo, gen_count, /*real*/ true);
        for (int al = 0; al < 4; ++al) {
            GrassmannElement scaled = basis[k][al] * g;
            s.c[al] = s.c[al] + scaled;
        }
    }
    return s;
}

// cheap nonvanishing sample: one fresh generator per basis direction
inline MajoranaSpinor sample_majorana_simple(Sampler& rng, int parity, int gen_lo) {
    MajoranaSpinor s;
    s.parity = parity;
    auto& basis = majorana_basis();
    for (int k = 0; k < 4; ++k) {
        GrassmannElement g = parity ? rng.theta(gen_lo + k)
                                    : GrassmannElement::scalar(GaussRational(rng.rat_nonzero()));
        if (!parity && rng.int_in(0, 1)) {
            g = gr_mul(rng.theta(gen_lo + k), rng.theta(gen_lo + 4 + k));
        }
        for (int al = 0; al < 4; ++al) s.c[al] = s.c[al] + basis[k][al] * g;
    }
    return s;
}

// bar(chi) Gamma^N psi as a Lambda^N V-valued Grassmann scalar. The written
// order is chi_a (C gamma^w)_{ab} v_w psi_b; pulling psi_b left across the odd
// v-word costs (-1)^{N |psi|}, giving the normal form coefficient-then-v.
inline LambdaGr bilinear_gamma_power(const CliffordAlgebra& A, const MajoranaSpinor& chi, int N,
                                     const MajoranaSpinor& psi) {
    LambdaMat CgN;
    {
        LambdaMat gN = A.gamma_power(N);
        for (auto& [m, M] : gN) lam_add(CgN, m, A.cc.C * M);
    }
    int sandwich = ((N * psi.parity) & 1) ? -1 : 1;
    LambdaGr out;
    for (auto& [mask, M] : CgN) {
        GrassmannElement acc;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                if (M.at(a, b).is_zero()) continue;
                GrassmannElement p = gr_mul(chi.c[a], psi.c[b]);
                acc = acc + M.at(a, b) * p;
            }
        if (sandwich < 0) acc = -acc;
        lgr_add(out, mask, acc);
    }
    return out;
}

// flip:N sign for Majorana bilinears
inline int flip_sign(int N, int par_chi, int par_psi) {
    static const int t[4] = {1, -1, -1, 1};
    int tn = t[((N % 4) + 4) % 4];
    int expo = N * (par_psi + par_chi) + par_psi * par_chi;
    return -tn * ((expo & 1) ? -1 : 1);
}

// spin action [alpha, psi] = -1/4 alpha^{ab} gamma_{ab} psi, alpha in Lambda^2 V
// given by its coefficient in the v-monomial basis (mask -> rational coeff).
inline MajoranaSpinor spin_action(const CliffordAlgebra& A,
                                  const std::map<std::uint8_t, Rat>& alpha,
                                  const MajoranaSpinor& psi) {
    // alpha = sum_{E<F} alpha_{EF} v_E v_F  ->  rho(alpha) = -1/2 sum alpha_{EF} g_{EF}
    CliffordElement rho;
    for (auto& [mask, c] : alpha) {
        assert(vdeg(mask) == 2);
        int E = __builtin_ctz(mask);
        int F = __builtin_ctz(mask ^ (1u << E));
        CliffordElement gEF =
            GaussRational(Rat(kEta[E] * kEta[F])) * A.gamma_anti({E, F});
        rho = rho + GaussRational(-c / 2) * gEF;
    }
    MajoranaSpinor out;
    out.parity = psi.parity;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (rho.at(i, j).is_zero()) continue;
            out.c[i] = out.c[i] + rho.at(i, j) * psi.c[j];
        }
    return out;
}

}  // namespace veriform
