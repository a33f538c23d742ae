#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "veriform/clifford.hpp"
#include "veriform/fiber.hpp"
#include "veriform/grassmann.hpp"
#include "veriform/lambda.hpp"
#include "veriform/rational.hpp"

namespace veriform {

// Concrete evaluation model: differential forms on a small coordinate patch
// with polynomial, Grassmann-valued coefficients. The polynomial ring is
// exact up to total degree kJetDeg and multiplication throws beyond it, so
// identities checked here are checked in an honest ring; a cap that silently
// dropped terms would not commute with d. Term layout fixes the letter order
// once and for all:
//   coefficient . dx-word . v-word . spinor slot
// dx letters commute with v letters and with Grassmann generators; v letters
// anticommute with odd Grassmann coefficients (shared odd pool with ghosts).

inline constexpr int kJetDeg = 12;

inline int jexp_total(std::uint16_t m) {
    return int((m & 0xf) + ((m >> 4) & 0xf) + ((m >> 8) & 0xf) + ((m >> 12) & 0xf));
}
inline int jexp_get(std::uint16_t m, int i) { return (m >> (4 * i)) & 0xf; }
inline std::uint16_t jexp_set(std::uint16_t m, int i, int v) {
    return std::uint16_t((m & ~(0xf << (4 * i))) | (v << (4 * i)));
}

inline int gr_key_parity(const GrassmannElement::Key& k) {
    return (__builtin_popcountll(k.m0) + __builtin_popcountll(k.m1)) & 1;
}

struct JetPoly {
    std::map<std::uint16_t, GrassmannElement> c;

    bool is_zero() const { return c.empty(); }

    void add_term(std::uint16_t m, const GrassmannElement& g) {
        if (g.is_zero()) return;
        auto it = c.find(m);
        if (it == c.end()) {
            c.emplace(m, g);
            return;
        }
        it->second = it->second + g;
        if (it->second.is_zero()) c.erase(it);
    }

    friend bool operator==(const JetPoly& a, const JetPoly& b) { return a.c == b.c; }
};

inline JetPoly jp_scalar(GaussRational x) {
    JetPoly p;
    p.add_term(0, GrassmannElement::scalar(std::move(x)));
    return p;
}
inline JetPoly jp_gr(GrassmannElement g) {
    JetPoly p;
    p.add_term(0, std::move(g));
    return p;
}
inline JetPoly jp_mono(std::uint16_t m, GrassmannElement g) {
    JetPoly p;
    if (jexp_total(m) <= kJetDeg) p.add_term(m, std::move(g));
    return p;
}

inline JetPoly jp_add(const JetPoly& a, const JetPoly& b) {
    JetPoly r = a;
    for (auto& [m, g] : b.c) r.add_term(m, g);
    return r;
}
inline JetPoly jp_neg(const JetPoly& a) {
    JetPoly r;
    for (auto& [m, g] : a.c) r.c.emplace(m, -g);
    return r;
}
inline JetPoly jp_sub(const JetPoly& a, const JetPoly& b) { return jp_add(a, jp_neg(b)); }

inline JetPoly jp_mul(const JetPoly& a, const JetPoly& b) {
    JetPoly r;
    for (auto& [ma, ga] : a.c) {
        for (auto& [mb, gb] : b.c) {
            std::uint16_t m = 0;
            for (int i = 0; i < 4; ++i) {
                int e = jexp_get(ma, i) + jexp_get(mb, i);
                if (e > 0xf) throw std::overflow_error("jp_mul: exponent overflow");
                m = jexp_set(m, i, e & 0xf);
            }
            if (jexp_total(m) > kJetDeg)
                throw std::overflow_error("jp_mul: degree ceiling exceeded");
            r.add_term(m, gr_mul(ga, gb));
        }
    }
    return r;
}

inline JetPoly jp_scale(const GaussRational& s, const JetPoly& a) {
    JetPoly r;
    if (s.is_zero()) return r;
    for (auto& [m, g] : a.c) r.c.emplace(m, s * g);
    return r;
}

// left multiplication by a Grassmann scalar sitting in the coefficient slot
inline JetPoly jp_gr_lmul(const GrassmannElement& g, const JetPoly& a) {
    JetPoly r;
    for (auto& [m, p] : a.c) r.add_term(m, gr_mul(g, p));
    return r;
}

inline JetPoly jp_diff(int i, const JetPoly& a) {
    JetPoly r;
    for (auto& [m, g] : a.c) {
        int e = jexp_get(m, i);
        if (e == 0) continue;
        r.add_term(jexp_set(m, i, e - 1), GaussRational(e) * g);
    }
    return r;
}

// sign picked up by the coefficient when it crosses l v-letters
inline JetPoly jp_vcross(const JetPoly& a, int l) {
    if (!(l & 1)) return a;
    JetPoly r;
    for (auto& [m, g] : a.c) {
        GrassmannElement h;
        h.num_generators = g.num_generators;
        for (auto& [k, x] : g.coeffs) h.coeffs.emplace(k, gr_key_parity(k) ? -x : x);
        r.c.emplace(m, std::move(h));
    }
    return r;
}

struct JetKey {
    std::uint8_t km = 0;
    std::uint8_t vm = 0;
    std::int8_t sp = -1;  // -1 when the form has no spinor slot
    friend bool operator<(const JetKey& a, const JetKey& b) {
        if (a.km != b.km) return a.km < b.km;
        if (a.vm != b.vm) return a.vm < b.vm;
        return a.sp < b.sp;
    }
    friend bool operator==(const JetKey& a, const JetKey& b) {
        return a.km == b.km && a.vm == b.vm && a.sp == b.sp;
    }
};

struct JetForm {
    int base_dim = 3;
    SpinorSlot spinor = SpinorSlot::none;
    std::map<JetKey, JetPoly> c;

    bool is_zero() const {
        for (auto& [k, p] : c)
            if (!p.is_zero()) return false;
        return true;
    }

    void add_term(JetKey k, const JetPoly& p) {
        if (p.is_zero()) return;
        auto it = c.find(k);
        if (it == c.end()) {
            c.emplace(k, p);
            return;
        }
        it->second = jp_add(it->second, p);
        if (it->second.is_zero()) c.erase(it);
    }

    friend bool operator==(const JetForm& a, const JetForm& b) {
        if (a.base_dim != b.base_dim || a.spinor != b.spinor) return false;
        auto strip = [](const JetForm& f) {
            std::map<JetKey, JetPoly> m;
            for (auto& [k, p] : f.c)
                if (!p.is_zero()) m.emplace(k, p);
            return m;
        };
        return strip(a) == strip(b);
    }
};

inline JetForm jf_zero(int base_dim, SpinorSlot s = SpinorSlot::none) {
    JetForm f;
    f.base_dim = base_dim;
    f.spinor = s;
    return f;
}

inline JetForm jf_add(const JetForm& a, const JetForm& b) {
    if (a.base_dim != b.base_dim || a.spinor != b.spinor)
        throw std::invalid_argument("jf_add: shape mismatch");
    JetForm r = a;
    for (auto& [k, p] : b.c) r.add_term(k, p);
    return r;
}
inline JetForm jf_neg(const JetForm& a) {
    JetForm r = jf_zero(a.base_dim, a.spinor);
    for (auto& [k, p] : a.c) r.c.emplace(k, jp_neg(p));
    return r;
}
inline JetForm jf_sub(const JetForm& a, const JetForm& b) { return jf_add(a, jf_neg(b)); }
inline JetForm jf_scale(const GaussRational& s, const JetForm& a) {
    JetForm r = jf_zero(a.base_dim, a.spinor);
    for (auto& [k, p] : a.c) r.add_term(k, jp_scale(s, p));
    return r;
}
inline JetForm jf_gr_lmul(const GrassmannElement& g, const JetForm& a) {
    JetForm r = jf_zero(a.base_dim, a.spinor);
    for (auto& [k, p] : a.c) r.add_term(k, jp_gr_lmul(g, p));
    return r;
}

inline JetForm jf_wedge(const JetForm& a, const JetForm& b) {
    if (a.base_dim != b.base_dim) throw std::invalid_argument("jf_wedge: base mismatch");
    if (a.spinor != SpinorSlot::none && b.spinor != SpinorSlot::none)
        throw std::invalid_argument("jf_wedge: two spinor slots");
    JetForm r = jf_zero(a.base_dim, a.spinor != SpinorSlot::none ? a.spinor : b.spinor);
    for (auto& [ka, pa] : a.c) {
        for (auto& [kb, pb] : b.c) {
            if ((ka.km & kb.km) || (ka.vm & kb.vm)) continue;
            int s = merge_sign(ka.km, kb.km) * merge_sign(ka.vm, kb.vm);
            JetPoly coef = jp_mul(pa, jp_vcross(pb, vdeg(ka.vm)));
            if (s < 0) coef = jp_neg(coef);
            std::int8_t sp = a.spinor != SpinorSlot::none ? ka.sp : kb.sp;
            r.add_term({std::uint8_t(ka.km | kb.km), std::uint8_t(ka.vm | kb.vm), sp}, coef);
        }
    }
    return r;
}

inline JetForm jf_d(const JetForm& a) {
    JetForm r = jf_zero(a.base_dim, a.spinor);
    for (auto& [k, p] : a.c) {
        for (int mu = 0; mu < a.base_dim; ++mu) {
            std::uint8_t bit = std::uint8_t(1u << mu);
            if (k.km & bit) continue;
            JetPoly dp = jp_diff(mu, p);
            if (dp.is_zero()) continue;
            int s = merge_sign(bit, k.km);
            if (s < 0) dp = jp_neg(dp);
            r.add_term({std::uint8_t(k.km | bit), k.vm, k.sp}, dp);
        }
    }
    return r;
}

inline JetForm jf_iota_dir(int mu, const JetForm& a) {
    JetForm r = jf_zero(a.base_dim, a.spinor);
    std::uint8_t bit = std::uint8_t(1u << mu);
    for (auto& [k, p] : a.c) {
        if (!(k.km & bit)) continue;
        int below = __builtin_popcount(k.km & (bit - 1));
        JetPoly q = (below & 1) ? jp_neg(p) : p;
        r.add_term({std::uint8_t(k.km & ~bit), k.vm, k.sp}, q);
    }
    return r;
}

// contraction with xi = xi^mu d/dx^mu; the components multiply in from the left
inline JetForm jf_iota(const std::vector<JetPoly>& xi, const JetForm& a) {
    if (int(xi.size()) != a.base_dim) throw std::invalid_argument("jf_iota: size mismatch");
    JetForm r = jf_zero(a.base_dim, a.spinor);
    for (int mu = 0; mu < a.base_dim; ++mu) {
        if (xi[mu].is_zero()) continue;
        JetForm part = jf_iota_dir(mu, a);
        for (auto& [k, p] : part.c) r.add_term(k, jp_mul(xi[mu], p));
    }
    return r;
}

// spin generator for the Lambda^2 basis monomial v_a v_b (a<b from the mask):
// Sigma_{ab} = -1/4 [gamma_a, gamma_b], lower indices. With the frozen
// {gamma,gamma} = -2 eta convention the minus is forced twice over: it makes
// Sigma a homomorphism for the vbracket Lie structure ([Sigma_01, Sigma_12]
// comes out as -Sigma_02 without it) and it makes the spin and v actions on
// the gamma element cancel instead of add.
inline CliffordElement spin_generator(std::uint8_t vm) {
    const auto& A = CliffordAlgebra::instance();
    int idx[2], n = 0;
    for (int i = 0; i < 4; ++i)
        if (vm >> i & 1) idx[n++] = i;
    if (n != 2) throw std::invalid_argument("spin_generator: mask is not a bivector");
    CliffordElement ga = A.gamma_lo(idx[0]), gb = A.gamma_lo(idx[1]);
    return GaussRational(Rat(1, 4)) * (gb * ga - ga * gb);
}

// row-spinor companion: bar(Sigma psi) = psibar . spin_generator_row
inline CliffordElement spin_generator_row(std::uint8_t vm) {
    const auto& A = CliffordAlgebra::instance();
    return A.cc.Cinv * spin_generator(vm).transpose() * A.cc.C;
}

// adjoint action of a Lambda^2-valued form on v-content and spinor slot
inline JetForm jf_ad(const JetForm& alpha, const JetForm& x) {
    if (alpha.base_dim != x.base_dim) throw std::invalid_argument("jf_ad: base mismatch");
    if (alpha.spinor != SpinorSlot::none) throw std::invalid_argument("jf_ad: spinor argument");
    JetForm r = jf_zero(x.base_dim, x.spinor);
    for (auto& [ka, pa] : alpha.c) {
        if (vdeg(ka.vm) != 2) throw std::invalid_argument("jf_ad: argument is not Lambda^2-valued");
        for (auto& [kx, px] : x.c) {
            if (ka.km & kx.km) continue;
            int skm = merge_sign(ka.km, kx.km);
            JetPoly coef = jp_mul(pa, px);  // crossing two v-letters is free
            if (skm < 0) coef = jp_neg(coef);
            // action on the v-word
            for (auto& [vm, s] : vbracket(ka.vm, kx.vm)) {
                if (s == 0) continue;
                r.add_term({std::uint8_t(ka.km | kx.km), vm, kx.sp},
                           s < 0 ? jp_neg(coef) : coef);
            }
            // action on the spinor slot
            if (x.spinor == SpinorSlot::column) {
                CliffordElement S = spin_generator(ka.vm);
                for (int out = 0; out < 4; ++out) {
                    const GaussRational& m = S.at(out, kx.sp);
                    if (m.is_zero()) continue;
                    r.add_term({std::uint8_t(ka.km | kx.km), kx.vm, std::int8_t(out)},
                               jp_scale(m, coef));
                }
            } else if (x.spinor == SpinorSlot::row) {
                CliffordElement S = spin_generator_row(ka.vm);
                for (int out = 0; out < 4; ++out) {
                    const GaussRational& m = S.at(kx.sp, out);
                    if (m.is_zero()) continue;
                    r.add_term({std::uint8_t(ka.km | kx.km), kx.vm, std::int8_t(out)},
                               jp_scale(m, coef));
                }
            }
        }
    }
    return r;
}

// covariant exterior derivative for a Lambda^2-valued connection form
inline JetForm jf_D(const JetForm& omega, const JetForm& x) {
    return jf_add(jf_d(x), jf_ad(omega, x));
}

// curvature of the connection: F = d omega + 1/2 [omega, omega]
inline JetForm jf_curv(const JetForm& omega) {
    return jf_add(jf_d(omega), jf_scale(GaussRational(Rat(1, 2)), jf_ad(omega, omega)));
}

// biderivation extension of the v-bracket to arbitrary multivector words;
// assembly mirrors jf_ad so that jf_bider(alpha, x) == jf_ad(alpha, x) when
// alpha is Lambda^2-valued. Spinor slots are not supported here.
inline JetForm jf_bider(const JetForm& x, const JetForm& y) {
    if (x.base_dim != y.base_dim) throw std::invalid_argument("jf_bider: base mismatch");
    if (x.spinor != SpinorSlot::none || y.spinor != SpinorSlot::none)
        throw std::invalid_argument("jf_bider: spinor argument");
    JetForm r = jf_zero(x.base_dim);
    for (auto& [kx, px] : x.c) {
        for (auto& [ky, py] : y.c) {
            if (kx.km & ky.km) continue;
            int skm = merge_sign(kx.km, ky.km);
            JetPoly coef = jp_mul(px, jp_vcross(py, vdeg(kx.vm)));
            if (skm < 0) coef = jp_neg(coef);
            for (auto& [vm, s] : vbracket(kx.vm, ky.vm)) {
                if (s == 0) continue;
                r.add_term({std::uint8_t(kx.km | ky.km), vm, -1},
                           s < 0 ? jp_neg(coef) : coef);
            }
        }
    }
    return r;
}

// both sign candidates for the Lie derivative along an odd vector field
inline JetForm jf_lie_plus(const std::vector<JetPoly>& xi, const JetForm& omega0,
                           const JetForm& x) {
    return jf_add(jf_iota(xi, jf_D(omega0, x)), jf_D(omega0, jf_iota(xi, x)));
}
inline JetForm jf_lie_minus(const std::vector<JetPoly>& xi, const JetForm& omega0,
                            const JetForm& x) {
    return jf_sub(jf_iota(xi, jf_D(omega0, x)), jf_D(omega0, jf_iota(xi, x)));
}

// Majorana bilinear bar(a) . S . G . b with an optional v-valued form S wedged
// into the middle from the left and G a constant matrix-valued v-element.
// Both spinor arguments are column forms; the bar is taken here via C.
inline JetForm jf_bil_mid(const JetForm& a, const JetForm* s_mid, const LambdaMat& g,
                          const JetForm& b) {
    if (a.spinor != SpinorSlot::column || b.spinor != SpinorSlot::column)
        throw std::invalid_argument("jf_bil_mid: needs two column-spinor forms");
    if (s_mid && s_mid->spinor != SpinorSlot::none)
        throw std::invalid_argument("jf_bil_mid: middle form carries a spinor slot");
    const auto& A = CliffordAlgebra::instance();
    JetForm r = jf_zero(a.base_dim, SpinorSlot::none);

    JetForm unit = jf_zero(a.base_dim);
    unit.add_term({0, 0, -1}, jp_scalar(GaussRational(1)));
    const JetForm& S = s_mid ? *s_mid : unit;

    for (auto& [kg, mat] : g) {
        CliffordElement CG = A.cc.C * mat;
        for (auto& [kaK, pa] : a.c) {
            for (auto& [ksK, ps] : S.c) {
                if (kaK.km & ksK.km) continue;
                if (kaK.vm & ksK.vm) continue;
                int s1 = merge_sign(kaK.km, ksK.km) * merge_sign(kaK.vm, ksK.vm);
                std::uint8_t kmAS = kaK.km | ksK.km;
                std::uint8_t vmAS = kaK.vm | ksK.vm;
                if (vmAS & kg) continue;
                int s2 = merge_sign(vmAS, kg);
                std::uint8_t vmASG = vmAS | kg;
                JetPoly pas = jp_mul(pa, jp_vcross(ps, vdeg(kaK.vm)));
                for (auto& [kbK, pb] : b.c) {
                    if (kmAS & kbK.km) continue;
                    if (vmASG & kbK.vm) continue;
                    const GaussRational& m = CG.at(kaK.sp, kbK.sp);
                    if (m.is_zero()) continue;
                    int s3 = merge_sign(kmAS, kbK.km) * merge_sign(vmASG, kbK.vm);
                    JetPoly coef = jp_mul(pas, jp_vcross(pb, vdeg(vmASG)));
                    coef = jp_scale(m, coef);
                    int s = s1 * s2 * s3;
                    if (s < 0) coef = jp_neg(coef);
                    r.add_term({std::uint8_t(kmAS | kbK.km), std::uint8_t(vmASG | kbK.vm), -1},
                               coef);
                }
            }
        }
    }
    return r;
}

inline JetForm jf_bil(const JetForm& a, const LambdaMat& g, const JetForm& b) {
    return jf_bil_mid(a, nullptr, g, b);
}

// adjoint action of a constant bivector on the v-content of a matrix middle
inline LambdaMat lam_ad(std::uint8_t vm, const LambdaMat& g) {
    LambdaMat r;
    for (auto& [m, mat] : g)
        for (auto& [m2, s] : vbracket(vm, m)) {
            if (s == 0) continue;
            lam_add(r, m2, s < 0 ? -mat : mat);
        }
    return r;
}

inline JetForm jf_bil_n(const JetForm& a, int n, const JetForm& b) {
    return jf_bil(a, CliffordAlgebra::instance().gamma_power(n), b);
}

inline std::string jf_str(const JetForm& f) {
    if (f.is_zero()) return "0";
    std::string out;
    int shown = 0;
    for (auto& [k, p] : f.c) {
        if (p.is_zero()) continue;
        if (shown++ >= 6) {
            out += " + ...";
            break;
        }
        if (!out.empty()) out += " + ";
        out += "[dx:" + std::to_string(k.km) + " v:" + std::to_string(k.vm) +
               " sp:" + std::to_string(k.sp) + "]{";
        int tshown = 0;
        for (auto& [m, g] : p.c) {
            if (tshown++ >= 2) {
                out += "; ...";
                break;
            }
            out += "x^" + std::to_string(m) + ":(" + gr_str(g) + ") ";
        }
        out += "}";
    }
    return out;
}

}  // namespace veriform
