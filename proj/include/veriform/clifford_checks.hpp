#pragma once

// The gamma-matrix and Majorana-bilinear identity battery. Everything here is
// an exact equality of 4x4 matrices over Q(i), of Lambda V-valued matrices, or
// of Grassmann-valued bilinears sampled over random Majorana spinors.

#include <algorithm>
#include <sstream>
#include <string>

#include "veriform/clifford.hpp"
#include "veriform/linalg.hpp"
#include "veriform/report.hpp"
#include "veriform/rng.hpp"

namespace veriform {

inline std::string cliff_str(const CliffordElement& m) {
    std::string s = "[";
    for (int i = 0; i < 4; ++i) {
        s += "[";
        for (int j = 0; j < 4; ++j) {
            s += m.at(i, j).str();
            if (j < 3) s += ",";
        }
        s += "]";
    }
    return s + "]";
}

inline std::string lgr_witness(const LambdaGr& diff) {
    for (auto& [mask, g] : diff) {
        std::ostringstream os;
        os << "v-mask " << int(mask) << ": " << gr_str(g);
        return os.str();
    }
    return "";
}

namespace detail {

inline CliffordElement gamma_word(const CliffordAlgebra& A, std::initializer_list<int> w) {
    CliffordElement p = CliffordElement::identity();
    for (int a : w) p = p * A.gamma[a];
    return p;
}

}  // namespace detail

// contraction identities, first in the general-D form evaluated at D=4, then
// the D=4 resummations
inline void check_gamma_contractions(const CliffordAlgebra& A, VerificationReport& r) {
    const int D = 4;
    using detail::gamma_word;

    {
        CliffordElement lhs;
        for (int a = 0; a < 4; ++a) lhs = lhs + A.gamma[a] * A.gamma_lo(a);
        CliffordElement rhs = CliffordElement::identity(GaussRational(-D));
        r.add("gamma-contract-1", "gamma^a gamma_a = -D", lhs == rhs,
              lhs == rhs ? "" : cliff_str(lhs - rhs));
    }
    {
        bool ok = true;
        std::string w;
        for (int b = 0; b < 4 && ok; ++b) {
            CliffordElement lhs;
            for (int a = 0; a < 4; ++a) lhs = lhs + A.gamma[a] * A.gamma[b] * A.gamma_lo(a);
            CliffordElement rhs = GaussRational(D - 2) * A.gamma[b];
            ok = lhs == rhs;
            if (!ok) w = "b=" + std::to_string(b);
        }
        r.add("gamma-contract-2", "gamma^a gamma^b gamma_a = (D-2) gamma^b", ok, w);
    }
    {
        bool ok = true;
        std::string w;
        for (int b = 0; b < 4 && ok; ++b)
            for (int c = 0; c < 4 && ok; ++c) {
                CliffordElement lhs;
                for (int a = 0; a < 4; ++a)
                    lhs = lhs + A.gamma[a] * A.gamma[b] * A.gamma[c] * A.gamma_lo(a);
                CliffordElement rhs = GaussRational(4 - D) * gamma_word(A, {b, c});
                if (b == c)
                    rhs = rhs + CliffordElement::identity(GaussRational(4 * kEta[b]));
                ok = lhs == rhs;
                if (!ok) w = "b=" + std::to_string(b) + " c=" + std::to_string(c);
            }
        r.add("gamma-contract-3", "gamma^a gamma^b gamma^c gamma_a = (4-D) gamma^b gamma^c + 4 eta^{bc}",
              ok, w);
    }
    {
        // gamma^{[b} eta^{cd]} reads as the alternating cycle
        // (1/3)(gamma^b eta^{cd} - gamma^c eta^{bd} + gamma^d eta^{bc});
        // full antisymmetrization would vanish against symmetric eta.
        bool ok = true, ok4 = true;
        std::string w, w4;
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    CliffordElement lhs;
                    for (int a = 0; a < 4; ++a)
                        lhs = lhs +
                              A.gamma[a] * A.gamma[b] * A.gamma[c] * A.gamma[d] * A.gamma_lo(a);
                    CliffordElement cyc;
                    if (c == d) cyc = cyc + GaussRational(kEta[c]) * A.gamma[b];
                    if (b == d) cyc = cyc - GaussRational(kEta[b]) * A.gamma[c];
                    if (b == c) cyc = cyc + GaussRational(kEta[b]) * A.gamma[d];
                    CliffordElement rhs = GaussRational(D - 6) * gamma_word(A, {b, c, d}) -
                                          GaussRational(Rat(12, 3)) * cyc;
                    if (ok && !(lhs == rhs))
                        ok = false,
                        w = "b=" + std::to_string(b) + " c=" + std::to_string(c) +
                            " d=" + std::to_string(d);
                    CliffordElement rhs4 = GaussRational(2) * gamma_word(A, {d, c, b});
                    if (ok4 && !(lhs == rhs4))
                        ok4 = false,
                        w4 = "b=" + std::to_string(b) + " c=" + std::to_string(c) +
                             " d=" + std::to_string(d);
                }
        r.add("gamma-contract-4",
              "gamma^a gamma^b gamma^c gamma^d gamma_a = (D-6) gamma^b gamma^c gamma^d - 12 gamma^{[b} eta^{cd]}",
              ok, w);
        r.add("gamma-contract-4-d4",
              "gamma^a gamma^b gamma^c gamma^d gamma_a = 2 gamma^d gamma^c gamma^b at D=4", ok4,
              w4);
    }
}

inline void check_gamma5_dualities(const CliffordAlgebra& A, VerificationReport& r) {
    using detail::gamma_word;
    {
        CliffordElement sq = A.gamma5 * A.gamma5;
        bool ok = sq == CliffordElement::identity();
        for (int a = 0; a < 4 && ok; ++a)
            ok = (A.gamma5 * A.gamma[a] + A.gamma[a] * A.gamma5).is_zero();
        r.add("gamma5-props", "(gamma^5)^2 = 1 and {gamma^5, gamma^a} = 0", ok);
    }
    {
        // gamma^a gamma^b gamma^c =
        //   -eta^{ab} gamma^c - eta^{bc} gamma^a + eta^{ac} gamma^b
        //   + i eps^{dabc} gamma^5 gamma_d   (orientation eps_{0123} = +1)
        bool ok = true, okrev = true;
        std::string w;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c) {
                    CliffordElement lhs = gamma_word(A, {a, b, c});
                    CliffordElement base;
                    if (a == b) base = base - GaussRational(kEta[a]) * A.gamma[c];
                    if (b == c) base = base - GaussRational(kEta[b]) * A.gamma[a];
                    if (a == c) base = base + GaussRational(kEta[a]) * A.gamma[b];
                    CliffordElement dual, dualrev;
                    for (int d = 0; d < 4; ++d) {
                        int e = eps_hi(d, a, b, c);
                        if (e == 0) continue;
                        dual = dual + (GaussRational(e) * GaussRational::i()) *
                                          (A.gamma5 * A.gamma_lo(d));
                        dualrev = dualrev + (GaussRational(-e) * GaussRational::i()) *
                                                (A.gamma_lo(d) * A.gamma5);
                    }
                    if (ok && !(lhs == base + dual))
                        ok = false,
                        w = "a=" + std::to_string(a) + " b=" + std::to_string(b) +
                            " c=" + std::to_string(c);
                    if (okrev && !(lhs == base + dualrev)) okrev = false;
                }
        r.add("gamma-triple-dual",
              "gamma^a gamma^b gamma^c = -eta^{ab} gamma^c - eta^{bc} gamma^a + eta^{ac} gamma^b + i eps^{dabc} gamma^5 gamma_d, eps_{0123}=+1",
              ok, w);
        r.add("gamma-triple-dual-flipped-orientation",
              "same identity with operator order gamma_d gamma^5 holds iff eps_{0123}=-1", okrev);
    }
    {
        bool ok = true;
        std::string w;
        for (int c = 0; c < 4 && ok; ++c)
            for (int d = 0; d < 4 && ok; ++d) {
                CliffordElement lhs = A.gamma5 * A.gamma_anti({c, d});
                CliffordElement rhs;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        int e = eps_hi(a, b, c, d);
                        if (e == 0) continue;
                        CliffordElement gab = GaussRational(kEta[a] * kEta[b]) * A.gamma_anti({a, b});
                        rhs = rhs + (GaussRational(Rat(-e, 2)) * GaussRational::i()) * gab;
                    }
                ok = lhs == rhs;
                if (!ok) w = "c=" + std::to_string(c) + " d=" + std::to_string(d);
            }
        r.add("gamma5-2form", "gamma^5 gamma^{[c} gamma^{d]} = -(i/2) eps^{abcd} gamma_{ab}", ok, w);
    }
    {
        // index-consistent reading of the 3-form dual: sum over a,b,d
        bool ok = true;
        std::string w;
        for (int c = 0; c < 4 && ok; ++c) {
            CliffordElement lhs = A.gamma5 * A.gamma[c];
            CliffordElement rhs;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    for (int d = 0; d < 4; ++d) {
                        int e = eps_hi(a, b, c, d);
                        if (e == 0) continue;
                        CliffordElement gabd = GaussRational(kEta[a] * kEta[b] * kEta[d]) *
                                               A.gamma_anti({a, b, d});
                        rhs = rhs + GaussRational(Rat(e, 6)) * GaussRational::i() * gabd;
                    }
            ok = lhs == rhs;
            if (!ok) w = "c=" + std::to_string(c);
        }
        r.add("gamma5-3form", "gamma^5 gamma^c = (i/6) eps^{abcd} gamma_{abd}", ok, w);
    }
}

inline void check_charge_conjugation(const CliffordAlgebra& A, VerificationReport& r) {
    {
        bool ok = (A.cc.C * A.cc.Cinv) == CliffordElement::identity() &&
                  A.cc.C.transpose() == -A.cc.C;
        for (int a = 0; a < 4 && ok; ++a)
            ok = (A.cc.C * A.gamma[a] * A.cc.Cinv) == -(A.gamma[a].transpose());
        r.add("charge-conjugation", "C^T = -C and C gamma^a C^{-1} = -(gamma^a)^T", ok);
    }
    {
        static const int t[5] = {1, -1, -1, 1, 1};
        bool ok = true;
        std::string w;
        for (int N = 0; N <= 4 && ok; ++N) {
            LambdaMat gp = A.gamma_power(N);
            for (auto& [mask, M] : gp) {
                CliffordElement CM = A.cc.C * M;
                if (!(CM.transpose() == GaussRational(-t[N]) * CM)) {
                    ok = false;
                    w = "N=" + std::to_string(N) + " mask=" + std::to_string(int(mask));
                    break;
                }
            }
        }
        r.add("t-table", "(C gamma^N)^T = -t_N C gamma^N with t = (1,-1,-1,1), t_{N+4} = t_N", ok,
              w);
    }
}

// Majorana condition conj(psi) = B psi with B = gamma^0 C^T, realified to an
// 8-dim rational system; solution space must be 4-dimensional and the
// averaging projector idempotent of rank 4.
inline void check_majorana_rank(const CliffordAlgebra& A, VerificationReport& r) {
    CliffordElement B = A.gamma[0] * A.cc.C.transpose();
    // A(psi) = conj(B psi), realified: [x;y] -> [Br x - Bi y; -(Bi x + Br y)]
    Matrix K(8, 8);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            Rat br = B.at(i, j).re, bi = B.at(i, j).im;
            K.at(i, j) = GaussRational(br);
            K.at(i, j + 4) = GaussRational(-bi);
            K.at(i + 4, j) = GaussRational(-bi);
            K.at(i + 4, j + 4) = GaussRational(-br);
        }
    bool invol = (K * K) == Matrix::identity(8);
    // P = (1 + K)/2
    Matrix P(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            P.at(i, j) = (K.at(i, j) + (i == j ? GaussRational(1) : GaussRational(0))) *
                         GaussRational(Rat(1, 2));
    bool idem = (P * P) == P;
    int rk = rank(P);
    bool ok = invol && idem && rk == 4;

    // the frozen basis must solve the condition (K - 1)v = 0
    Matrix KmI = K - Matrix::identity(8);
    auto& mb = majorana_basis();
    bool basis_ok = true;
    for (int k = 0; k < 4 && basis_ok; ++k) {
        std::vector<GaussRational> v(8);
        for (int i = 0; i < 4; ++i) {
            v[i] = GaussRational(mb[k][i].re);
            v[i + 4] = GaussRational(mb[k][i].im);
        }
        auto img = KmI.apply(v);
        for (auto& x : img)
            if (!x.is_zero()) basis_ok = false;
    }
    r.add("majorana-rank",
          "Majorana condition conj(psi) = B psi: involutive, projector idempotent, rank 4, frozen basis solves it",
          ok && basis_ok,
          ok && basis_ok ? "" : "invol=" + std::to_string(invol) + " idem=" + std::to_string(idem) +
                                    " rank=" + std::to_string(rk));
}

// [v_a, Gamma^N] as Lambda V-valued matrices, both printed forms, N = 2..4
inline void check_v_contraction_gamma_power(const CliffordAlgebra& A, VerificationReport& r) {
    auto vcontract = [&](const LambdaMat& m, int a) {
        LambdaMat out;
        for (auto& [mask, M] : m) {
            // [v_a, .] on the monomial: derivation with [v_a, v_i] = eta_{ai}
            if (!(mask >> a & 1)) continue;
            int below = __builtin_popcount(mask & ((1u << a) - 1));
            int s = (below & 1) ? -1 : 1;
            CliffordElement c = GaussRational(s * kEta[a]) * M;
            lam_add(out, std::uint8_t(mask & ~(1u << a)), c);
        }
        return out;
    };
    auto vwedge_left = [&](int a, const LambdaMat& m) {
        LambdaMat out;
        for (auto& [mask, M] : m) {
            int s = merge_sign(std::uint8_t(1) << a, mask);
            if (s == 0) continue;
            lam_add(out, std::uint8_t(mask | (1u << a)), s < 0 ? -M : M);
        }
        return out;
    };
    bool ok1 = true, ok2 = true;
    std::string w1, w2;
    for (int N = 2; N <= 4; ++N) {
        LambdaMat gN = A.gamma_power(N), gNm1 = A.gamma_power(N - 1), gNm2 = A.gamma_power(N - 2);
        for (int a = 0; a < 4; ++a) {
            LambdaMat lhs = vcontract(gN, a);
            // [v_a, gamma] = gamma_a as a Lambda^0 matrix
            LambdaMat ga;
            lam_add(ga, 0, A.gamma_lo(a));
            LambdaMat rhs1 = lam_mul(ga, gNm1);
            for (auto& [m, M] : rhs1) M = GaussRational(N) * M;
            LambdaMat t1 = vwedge_left(a, gNm2);
            for (auto& [m, M] : t1) lam_add(rhs1, m, GaussRational(N * (N - 1)) * M);
            if (ok1 && !lam_zero(lam_sub(lhs, rhs1)))
                ok1 = false, w1 = "N=" + std::to_string(N) + " a=" + std::to_string(a);

            LambdaMat rhs2 = lam_mul(gNm1, ga);
            for (auto& [m, M] : rhs2) M = GaussRational(N) * M;
            // v_a on the right of Gamma^{N-2}
            LambdaMat t2r;
            for (auto& [mask, M] : gNm2) {
                int s = merge_sign(mask, std::uint8_t(1) << a);
                if (s == 0) continue;
                lam_add(t2r, std::uint8_t(mask | (1u << a)), s < 0 ? -M : M);
            }
            for (auto& [m, M] : t2r) lam_add(rhs2, m, GaussRational(N * (N - 1)) * M);
            int sgn = (N % 2 == 0) ? -1 : 1;  // (-1)^{N-1}
            for (auto& [m, M] : rhs2) M = GaussRational(sgn) * M;
            if (ok2 && !lam_zero(lam_sub(lhs, rhs2)))
                ok2 = false, w2 = "N=" + std::to_string(N) + " a=" + std::to_string(a);
        }
    }
    r.add("v-contraction-gamma-N",
          "[v_a, Gamma^N] = N [v_a, Gamma] Gamma^{N-1} + N(N-1) v_a Gamma^{N-2}, N >= 2", ok1, w1);
    r.add("v-contraction-gamma-N-reversed",
          "[v_a, Gamma^N] = (-1)^{N-1} (N Gamma^{N-1} Gamma_a + N(N-1) Gamma^{N-2} v_a)", ok2, w2);
}

// covariant constancy of gamma: the spin action on the matrix leg cancels the
// Lambda^2 V action on the v leg
inline void check_spin_covariance(const CliffordAlgebra& A, Sampler& rng, int trials,
                                  VerificationReport& r) {
    bool ok = true;
    std::string w;
    for (int t = 0; t < trials && ok; ++t) {
        std::map<std::uint8_t, Rat> alpha;
        for (int i = 0; i < 4 && ok; ++i)
            for (int j = i + 1; j < 4; ++j) {
                Rat c = rng.rat();
                if (c != 0) alpha[std::uint8_t((1u << i) | (1u << j))] = c;
            }
        // matrix leg: rho(alpha) gamma^c - gamma^c rho(alpha), built through
        // spin_action on each column of gamma^c is awkward; do it directly
        CliffordElement rho;
        for (auto& [mask, c] : alpha) {
            int E = __builtin_ctz(mask);
            int F = __builtin_ctz(mask ^ (1u << E));
            rho = rho + GaussRational(-c / 2 * kEta[E] * kEta[F]) * A.gamma_anti({E, F});
        }
        // compare per output label b: [alpha, gamma]_S picks up [rho, gamma^b],
        // [alpha, gamma]_V contributes gamma^c for every v_b produced by [alpha, v_c]
        std::array<CliffordElement, 4> v_leg;
        for (int c = 0; c < 4; ++c)
            for (auto& [mask, coef] : alpha)
                for (auto& [rmask, icoef] : vbracket(mask, std::uint8_t(1) << c)) {
                    assert(vdeg(rmask) == 1);
                    int b = __builtin_ctz(rmask);
                    v_leg[b] = v_leg[b] + GaussRational(coef * icoef) * A.gamma[c];
                }
        for (int b = 0; b < 4 && ok; ++b) {
            CliffordElement mat_leg = rho * A.gamma[b] - A.gamma[b] * rho;
            if (!((mat_leg + v_leg[b]).is_zero())) {
                ok = false;
                w = "trial " + std::to_string(t) + " b=" + std::to_string(b);
            }
        }
    }
    r.add("spin-covariant-gamma", "[alpha, gamma]_S + [alpha, gamma]_V = 0 for alpha in Lambda^2 V",
          ok, w);
}

// flip relations on random Majorana pairs, all parities, N = 0..3
inline void check_flips(const CliffordAlgebra& A, Sampler& rng, int trials, VerificationReport& r) {
    static const char* anchors[4] = {
        "chi-bar psi = -(-1)^{|chi||psi|} psi-bar chi",
        "chi-bar gamma psi = (-1)^{|psi|+|chi|+|psi||chi|} psi-bar gamma chi",
        "chi-bar gamma^2 psi = (-1)^{|psi||chi|} psi-bar gamma^2 chi",
        "chi-bar gamma^3 psi = -(-1)^{|psi|+|chi|+|psi||chi|} psi-bar gamma^3 chi"};
    for (int N = 0; N <= 3; ++N) {
        bool ok = true;
        std::string w;
        for (int t = 0; t < trials && ok; ++t) {
            int pc = int(rng.int_in(0, 1)), pp = int(rng.int_in(0, 1));
            MajoranaSpinor chi = sample_majorana(rng, pc, 0, 8);
            MajoranaSpinor psi = sample_majorana(rng, pp, 8, 8);
            LambdaGr lhs = bilinear_gamma_power(A, chi, N, psi);
            LambdaGr rhs = bilinear_gamma_power(A, psi, N, chi);
            int s = flip_sign(N, pc, pp);
            LambdaGr diff = lgr_sub(lhs, lgr_scale(GaussRational(s), rhs));
            if (!diff.empty()) {
                ok = false;
                w = "trial " + std::to_string(t) + " |chi|=" + std::to_string(pc) +
                    " |psi|=" + std::to_string(pp) + " at " + lgr_witness(diff);
            }
        }
        r.add("flip-" + std::to_string(N), anchors[N], ok, w);
    }
    // the closed formula reproduces the four printed signs
    bool ok = true;
    for (int pc = 0; pc <= 1; ++pc)
        for (int pp = 0; pp <= 1; ++pp) {
            int f0 = -(((pc * pp) & 1) ? -1 : 1);
            int f1 = ((pp + pc + pp * pc) & 1) ? -1 : 1;
            int f2 = ((pp * pc) & 1) ? -1 : 1;
            int f3 = -(((pp + pc + pp * pc) & 1) ? -1 : 1);
            ok = ok && flip_sign(0, pc, pp) == f0 && flip_sign(1, pc, pp) == f1 &&
                 flip_sign(2, pc, pp) == f2 && flip_sign(3, pc, pp) == f3;
        }
    r.add("flip-N-formula", "flip sign = -t_N (-1)^{N(|psi|+|chi|)+|psi||chi|}", ok);
}

inline void check_fierz(const CliffordAlgebra& A, Sampler& rng, int trials,
                        VerificationReport& r) {
    {
        // completeness: sum_a (C gamma^a)_{alpha(delta} (C gamma_a)_{rho beta)} = 0,
        // symmetrized over (delta, rho, beta)
        bool ok = true;
        std::string w;
        std::array<CliffordElement, 4> Cg, Cg_lo;
        for (int a = 0; a < 4; ++a) {
            Cg[a] = A.cc.C * A.gamma[a];
            Cg_lo[a] = GaussRational(kEta[a]) * Cg[a];
        }
        for (int al = 0; al < 4 && ok; ++al)
            for (int de = 0; de < 4 && ok; ++de)
                for (int rh = 0; rh < 4 && ok; ++rh)
                    for (int be = 0; be < 4 && ok; ++be) {
                        GaussRational acc;
                        int idx[3] = {de, rh, be};
                        int perm[3] = {0, 1, 2};
                        std::sort(perm, perm + 3);
                        do {
                            int d2 = idx[perm[0]], r2 = idx[perm[1]], b2 = idx[perm[2]];
                            for (int a = 0; a < 4; ++a)
                                acc += Cg[a].at(al, d2) * Cg_lo[a].at(r2, b2);
                        } while (std::next_permutation(perm, perm + 3));
                        if (!acc.is_zero()) {
                            ok = false;
                            w = "alpha=" + std::to_string(al) + " delta=" + std::to_string(de) +
                                " rho=" + std::to_string(rh) + " beta=" + std::to_string(be);
                        }
                    }
        r.add("fierz-completeness", "(C gamma^a)_{alpha(delta} (C gamma_a)_{rho beta)} = 0", ok, w);
    }

    auto sample4 = [&](std::array<MajoranaSpinor, 4>& l, std::array<int, 4>& p) {
        for (int i = 0; i < 4; ++i) {
            p[i] = int(rng.int_in(0, 1));
            l[i] = sample_majorana_simple(rng, p[i], 12 * i);
        }
    };
    auto bil = [&](const MajoranaSpinor& a, int N, const MajoranaSpinor& b) {
        return bilinear_gamma_power(A, a, N, b);
    };
    {
        bool ok1 = true, ok2 = true;
        std::string w1, w2;
        for (int t = 0; t < trials && (ok1 || ok2); ++t) {
            std::array<MajoranaSpinor, 4> l;
            std::array<int, 4> p;
            sample4(l, p);
            LambdaGr lhs = lgr_mul(bil(l[0], 3, l[1]), bil(l[2], 1, l[3]));
            {
                // both rearrangement terms carry a global minus, mirroring the
                // gamma^3-first variant below; an exhaustive probe over all 16
                // parity combinations admits no other sign assignment
                int s1 = ((p[1] * p[2]) & 1) ? 1 : -1;
                int s2 = ((p[3] * (p[1] + p[2] + 1) + p[2]) & 1) ? 1 : -1;
                LambdaGr rhs = lgr_scale(GaussRational(s1),
                                         lgr_mul(bil(l[0], 1, l[2]), bil(l[1], 3, l[3])));
                LambdaGr t2 = lgr_scale(GaussRational(s2),
                                        lgr_mul(bil(l[0], 1, l[3]), bil(l[1], 3, l[2])));
                for (auto& [m, g] : t2) lgr_add(rhs, m, g);
                LambdaGr diff = lgr_sub(lhs, rhs);
                if (ok1 && !diff.empty()) ok1 = false, w1 = "trial " + std::to_string(t);
            }
            {
                int s1 = ((p[1] * p[2]) & 1) ? 1 : -1;
                int s2 = ((p[3] * (p[1] + p[2] + 1) + p[2]) & 1) ? 1 : -1;
                LambdaGr rhs = lgr_scale(GaussRational(s1),
                                         lgr_mul(bil(l[0], 3, l[2]), bil(l[1], 1, l[3])));
                LambdaGr t2 = lgr_scale(GaussRational(s2),
                                        lgr_mul(bil(l[0], 3, l[3]), bil(l[1], 1, l[2])));
                for (auto& [m, g] : t2) lgr_add(rhs, m, g);
                LambdaGr diff = lgr_sub(lhs, rhs);
                if (ok2 && !diff.empty()) ok2 = false, w2 = "trial " + std::to_string(t);
            }
        }
        r.add("fierz-1",
              "l1-bar gamma^3 l2 l3-bar gamma l4 = -(-1)^{|l2||l3|} l1-bar gamma l3 l2-bar gamma^3 l4 - (-1)^{|l4|(|l2|+|l3|+1)+|l3|} l1-bar gamma l4 l2-bar gamma^3 l3",
              ok1, w1);
        r.add("fierz-2",
              "l1-bar gamma^3 l2 l3-bar gamma l4 = -(-1)^{|l2||l3|} l1-bar gamma^3 l3 l2-bar gamma l4 - (-1)^{|l4|(|l2|+|l3|+1)+|l3|} l1-bar gamma^3 l4 l2-bar gamma l3",
              ok2, w2);
    }
    {
        // |chi| = 0, |psi| = 1, lambda arbitrary; same chi twice in each product.
        // These three products do NOT vanish for generic arguments: the middle
        // one pairs chi-bar gamma^a chi (nonzero for even chi, it is the vector
        // phi used by the constraint algebra) against the dual of
        // lambda-bar gamma^3 psi, which sweeps all of V as lambda, psi vary.
        // The check is kept as stated and reports the counterexample.
        bool ok = true;
        std::string w;
        for (int t = 0; t < trials && ok; ++t) {
            int pl = int(rng.int_in(0, 1));
            MajoranaSpinor lam = sample_majorana_simple(rng, pl, 0);
            MajoranaSpinor chi = sample_majorana_simple(rng, 0, 16);
            MajoranaSpinor psi = sample_majorana_simple(rng, 1, 32);
            LambdaGr e1 = lgr_mul(bil(lam, 3, chi), bil(chi, 1, psi));
            LambdaGr e2 = lgr_mul(bil(chi, 1, chi), bil(lam, 3, psi));
            LambdaGr e3 = lgr_mul(bil(lam, 1, chi), bil(chi, 3, psi));
            if (!e1.empty() || !e2.empty() || !e3.empty()) {
                ok = false;
                std::string which = !e1.empty() ? "first" : (!e2.empty() ? "second" : "third");
                w = "trial " + std::to_string(t) + ": " + which +
                    " product nonzero, |lambda|=" + std::to_string(pl);
            }
        }
        r.add("fierz-lemma",
              "|chi|=0, |psi|=1: lambda-bar gamma^3 chi chi-bar gamma psi = 0, chi-bar gamma chi lambda-bar gamma^3 psi = 0, lambda-bar gamma chi chi-bar gamma^3 psi = 0",
              ok, w);
    }
    {
        // chi-bar gamma^3 [alpha, psi] = 3 chi-bar gamma psi alpha
        //                              + (1/2) chi-bar [alpha, gamma^3]_V psi
        bool ok = true;
        std::string w;
        for (int t = 0; t < trials && ok; ++t) {
            int pc = int(rng.int_in(0, 1)), pp = int(rng.int_in(0, 1));
            MajoranaSpinor chi = sample_majorana_simple(rng, pc, 0);
            MajoranaSpinor psi = sample_majorana_simple(rng, pp, 16);
            std::map<std::uint8_t, Rat> alpha;
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j) {
                    Rat c = rng.rat();
                    if (c != 0) alpha[std::uint8_t((1u << i) | (1u << j))] = c;
                }
            MajoranaSpinor apsi = spin_action(A, alpha, psi);
            LambdaGr lhs = bilinear_gamma_power(A, chi, 3, apsi);

            LambdaGr rhs = bilinear_gamma_power(A, chi, 1, psi);
            {
                LambdaGr scaled;
                for (auto& [m, g] : rhs)
                    for (auto& [am, ac] : alpha) {
                        int s = merge_sign(m, am);
                        if (s == 0) continue;
                        lgr_add(scaled, std::uint8_t(m | am), GaussRational(3 * s * ac) * g);
                    }
                rhs = std::move(scaled);
            }
            {
                // chi-bar [alpha, gamma^3]_V psi: bracket the v legs of gamma^3
                LambdaMat g3 = A.gamma_power(3);
                LambdaMat br;
                for (auto& [am, ac] : alpha)
                    for (auto& [gm, M] : g3)
                        for (auto& [rm, ic] : vbracket(am, gm))
                            lam_add(br, rm, GaussRational(ac * ic) * M);
                LambdaMat Cbr;
                for (auto& [m, M] : br) lam_add(Cbr, m, A.cc.C * M);
                // same sandwich normalization as the bilinear: psi crosses an
                // odd v-word (the bracket keeps deg 3 here)
                int sw = ((3 * psi.parity) & 1) ? -1 : 1;
                for (auto& [mask, M] : Cbr) {
                    GrassmannElement acc;
                    for (int a2 = 0; a2 < 4; ++a2)
                        for (int b2 = 0; b2 < 4; ++b2) {
                            if (M.at(a2, b2).is_zero()) continue;
                            acc = acc + M.at(a2, b2) * gr_mul(chi.c[a2], psi.c[b2]);
                        }
                    lgr_add(rhs, mask, GaussRational(Rat(sw, 2)) * acc);
                }
            }
            LambdaGr diff = lgr_sub(lhs, rhs);
            if (!diff.empty()) {
                ok = false;
                w = "trial " + std::to_string(t) + " at " + lgr_witness(diff);
            }
        }
        r.add("action-of-omega",
              "chi-bar gamma^3 [alpha, psi] = 3 chi-bar gamma psi alpha + (1/2) chi-bar [alpha, gamma^3]_V psi",
              ok, w);
    }
}

inline VerificationReport run_clifford_suite(std::uint64_t seed, int trials) {
    const CliffordAlgebra& A = CliffordAlgebra::instance();
    VerificationReport r;
    r.suite = "appendixB";
    {
        bool ok = true;
        for (int a = 0; a < 4 && ok; ++a)
            for (int b = 0; b < 4 && ok; ++b) {
                CliffordElement anti = A.gamma[a] * A.gamma[b] + A.gamma[b] * A.gamma[a];
                CliffordElement want =
                    (a == b) ? CliffordElement::identity(GaussRational(-2 * kEta[a]))
                             : CliffordElement{};
                ok = anti == want;
            }
        r.add("clifford-relation", "{gamma^a, gamma^b} = -2 eta^{ab}", ok);
    }
    check_gamma_contractions(A, r);
    check_gamma5_dualities(A, r);
    check_charge_conjugation(A, r);
    check_majorana_rank(A, r);
    check_v_contraction_gamma_power(A, r);
    Sampler rng(seed);
    check_spin_covariance(A, rng, trials, r);
    check_flips(A, rng, trials, r);
    check_fierz(A, rng, trials, r);
    return r;
}

}  // namespace veriform
