#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clifford.hpp"
#include "fiber.hpp"

namespace veriform {

// Unique-decomposition solvers. Every split is an exact linear solve against
// explicit subspace bases; the solved parts are returned together with the
// reconstruction residual, which must vanish identically.

struct SplitResult {
    std::map<std::string, FiberForm> parts;
    FiberForm residual;

    const FiberForm& part(const std::string& name) const {
        auto it = parts.find(name);
        if (it == parts.end()) throw std::out_of_range("SplitResult: no part " + name);
        return it->second;
    }
};

inline std::vector<GaussRational> to_coords(const FiberShape& sh, const FiberForm& x) {
    if (x.base_dim != sh.base_dim || x.k != sh.k || x.l != sh.l || x.spinor != sh.spinor)
        throw std::invalid_argument("to_coords: form does not match shape " + sh.str());
    std::vector<GaussRational> v(sh.dim());
    for (auto& [key, c] : x.c) v[sh.position(key)] = c;
    return v;
}

inline FiberForm from_coords(const FiberShape& sh, const std::vector<GaussRational>& v) {
    FiberForm f = ff_zero(sh.base_dim, sh.k, sh.l, sh.spinor);
    for (int i = 0; i < sh.dim(); ++i)
        if (!v[i].is_zero()) f = ff_add(f, ff_scale(v[i], sh.basis(i)));
    return f;
}

inline Matrix columns_matrix(const FiberShape& cod, const std::vector<FiberForm>& cols) {
    Matrix m(cod.dim(), int(cols.size()));
    for (int j = 0; j < int(cols.size()); ++j) {
        auto v = to_coords(cod, cols[j]);
        for (int i = 0; i < cod.dim(); ++i) m.at(i, j) = v[i];
    }
    return m;
}

inline bool in_image(const Matrix& m, int mrank, const FiberShape& cod, const FiberForm& b) {
    auto v = to_coords(cod, b);
    Matrix aug(m.nr, m.nc + 1);
    for (int i = 0; i < m.nr; ++i) {
        for (int j = 0; j < m.nc; ++j) aug.at(i, j) = m.at(i, j);
        aug.at(i, m.nc) = v[i];
    }
    return rank(aug) == mrank;
}

// left action of a Lambda(V)-valued matrix (no form content) on a spinor form
inline FiberForm apply_lambda_mat(const LambdaMat& G, const FiberForm& x, int vshift) {
    if (x.spinor != SpinorSlot::column)
        throw std::invalid_argument("apply_lambda_mat: needs a column spinor form");
    FiberForm r = ff_zero(x.base_dim, x.k, x.l + vshift, SpinorSlot::column);
    r.parity = x.parity;
    for (auto& [wm, mat] : G) {
        for (auto& [key, c] : x.c) {
            auto [km, vm, s] = key;
            if (wm & vm) continue;
            int sg = merge_sign(wm, vm);
            for (int row = 0; row < 4; ++row) {
                const GaussRational& g = mat.at(row, s);
                if (g.is_zero()) continue;
                r.add_term(km, std::uint8_t(wm | vm), row, GaussRational(sg) * g * c);
            }
        }
    }
    return r;
}

// gamma^3 = gamma^{abc} v_a v_b v_c acting from the left, (k,l) -> (k,l+3)
inline FiberForm apply_gamma3(const FiberForm& x) {
    return apply_lambda_mat(CliffordAlgebra::instance().gamma_power(3), x, 3);
}

inline FiberForm apply_gamma1(const FiberForm& x) {
    return apply_lambda_mat(CliffordAlgebra::instance().gamma_v(), x, 1);
}

// gamma-underline = [e, gamma] = gamma_mu dx^mu with gamma_mu = e^a_mu gamma_a,
// acting from the left, (k,l) -> (k+1,l)
inline FiberForm apply_gamma_under(const Frame& f, const FiberForm& x) {
    if (x.spinor != SpinorSlot::column)
        throw std::invalid_argument("apply_gamma_under: needs a column spinor form");
    const auto& A = CliffordAlgebra::instance();
    FiberForm r = ff_zero(x.base_dim, x.k + 1, x.l, SpinorSlot::column);
    r.parity = x.parity;
    for (int mu = 0; mu < f.base_dim; ++mu) {
        CliffordElement gmu;
        for (int a = 0; a < 4; ++a)
            gmu = gmu + (f.e.at(mu, a) * GaussRational(kEta[a])) * A.gamma[a];
        std::uint8_t mbit = std::uint8_t(std::uint8_t(1) << mu);
        for (auto& [key, c] : x.c) {
            auto [km, vm, s] = key;
            if (km & mbit) continue;
            int sg = merge_sign(mbit, km);
            for (int row = 0; row < 4; ++row) {
                const GaussRational& g = gmu.at(row, s);
                if (g.is_zero()) continue;
                r.add_term(std::uint8_t(km | mbit), vm, row, GaussRational(sg) * g * c);
            }
        }
    }
    return r;
}

// Boundary solver state: subspace bases and inverted systems, built once per
// frame and reused across splits.
struct BoundarySplitData {
    Frame f;
    FiberForm e;
    FiberForm epsn;
    std::vector<FiberForm> ker_w12;  // ker of e-wedge on (1,2), dimension 6
    Matrix w11;                      // e-wedge (1,1) -> (2,2)
    int w11_rank = 0;
    Matrix w02;  // e-wedge (0,2) -> (1,3)
    int w02_rank = 0;
    Matrix inv22;  // inverse of [e-wedge | eps_n [e, ker]] on (2,2)
    Matrix inv13;  // inverse of [e-wedge | eps_n ker] on (1,3)
};

inline BoundarySplitData make_boundary_split_data(const Frame& f) {
    if (f.bulk()) throw std::invalid_argument("boundary split data needs a boundary frame");
    BoundarySplitData d;
    d.f = f;
    d.e = coframe(f);
    d.epsn = epsn_form(f);

    MapCertificate w12 = W_map(f, 1, 1, 2);
    d.ker_w12 = w12.kernel_basis;
    if (d.ker_w12.size() != 6)
        throw std::logic_error("boundary frame: ker of the (1,2) wedge map is not 6-dim");

    MapCertificate w11 = W_map(f, 1, 1, 1);
    d.w11 = w11.matrix;
    d.w11_rank = w11.rank;
    MapCertificate w02 = W_map(f, 1, 0, 2);
    d.w02 = w02.matrix;
    d.w02_rank = w02.rank;

    FiberShape s11{3, 1, 1, SpinorSlot::none};
    FiberShape s22{3, 2, 2, SpinorSlot::none};
    std::vector<FiberForm> cols22;
    for (int i = 0; i < s11.dim(); ++i) cols22.push_back(wedge(d.e, s11.basis(i)));
    for (auto& v : d.ker_w12) cols22.push_back(wedge(d.epsn, e_bracket(f, v)));
    auto inv22 = inverse(columns_matrix(s22, cols22));
    if (!inv22) throw DegenerateFrame("(2,2) splitting system is singular");
    d.inv22 = *inv22;

    FiberShape s02{3, 0, 2, SpinorSlot::none};
    FiberShape s13{3, 1, 3, SpinorSlot::none};
    std::vector<FiberForm> cols13;
    for (int i = 0; i < s02.dim(); ++i) cols13.push_back(wedge(d.e, s02.basis(i)));
    for (auto& v : d.ker_w12) cols13.push_back(wedge(d.epsn, v));
    auto inv13 = inverse(columns_matrix(s13, cols13));
    if (!inv13) throw DegenerateFrame("(1,3) decomposition system is singular");
    d.inv13 = *inv13;
    return d;
}

// beta = e rho + eps_n [e, v] with rho in (1,1) and v in ker of the (1,2)
// wedge map; unique for nondegenerate induced metric
inline SplitResult split_22(const BoundarySplitData& d, const FiberForm& beta) {
    FiberShape s22{3, 2, 2, SpinorSlot::none};
    FiberShape s11{3, 1, 1, SpinorSlot::none};
    auto x = d.inv22.apply(to_coords(s22, beta));
    std::vector<GaussRational> xr(x.begin(), x.begin() + 12);
    FiberForm rho = from_coords(s11, xr);
    FiberForm v = ff_zero(3, 1, 2);
    for (int i = 0; i < 6; ++i)
        if (!x[12 + i].is_zero()) v = ff_add(v, ff_scale(x[12 + i], d.ker_w12[i]));
    SplitResult r;
    r.residual = ff_sub(ff_sub(beta, wedge(d.e, rho)), wedge(d.epsn, e_bracket(d.f, v)));
    r.parts = {{"rho", std::move(rho)}, {"v", std::move(v)}};
    return r;
}

inline SplitResult split_22(const Frame& f, const FiberForm& beta) {
    return split_22(make_boundary_split_data(f), beta);
}

// alpha = 0 iff e alpha = 0 and eps_n alpha lies in the image of the (1,1)
// wedge map
inline bool check_21(const BoundarySplitData& d, const FiberForm& alpha) {
    if (alpha.k != 2 || alpha.l != 1 || alpha.base_dim != 3)
        throw std::invalid_argument("check_21: expects a boundary (2,1) form");
    if (!wedge(d.e, alpha).is_zero()) return false;
    FiberShape s22{3, 2, 2, SpinorSlot::none};
    return in_image(d.w11, d.w11_rank, s22, wedge(d.epsn, alpha));
}

inline bool check_21(const Frame& f, const FiberForm& alpha) {
    return check_21(make_boundary_split_data(f), alpha);
}

// a = 0 iff e a = 0 and eps_n a lies in the image of the (0,2) wedge map
inline bool check_12(const BoundarySplitData& d, const FiberForm& a) {
    if (a.k != 1 || a.l != 2 || a.base_dim != 3)
        throw std::invalid_argument("check_12: expects a boundary (1,2) form");
    if (!wedge(d.e, a).is_zero()) return false;
    FiberShape s13{3, 1, 3, SpinorSlot::none};
    return in_image(d.w02, d.w02_rank, s13, wedge(d.epsn, a));
}

inline bool check_12(const Frame& f, const FiberForm& a) {
    return check_12(make_boundary_split_data(f), a);
}

// k-tilde = k-check + r with e r = 0 and eps_n k-check = e a-check; k-check
// depends only on the class of k-tilde modulo forms killed by e-wedge
inline SplitResult split_cdag(const BoundarySplitData& d, const FiberForm& ktilde) {
    if (ktilde.k != 2 || ktilde.l != 1 || ktilde.base_dim != 3)
        throw std::invalid_argument("split_cdag: expects a boundary (2,1) form");
    SplitResult s = split_22(d, wedge(d.epsn, ktilde));
    FiberForm r = e_bracket(d.f, s.part("v"));
    FiberForm kcheck = ff_sub(ktilde, r);
    SplitResult out;
    out.residual = ff_sub(wedge(d.epsn, kcheck), wedge(d.e, s.part("rho")));
    out.parts = {{"kcheck", std::move(kcheck)},
                 {"r", std::move(r)},
                 {"acheck", s.part("rho")},
                 {"bcheck", s.part("v")}};
    return out;
}

inline SplitResult split_cdag(const Frame& f, const FiberForm& ktilde) {
    return split_cdag(make_boundary_split_data(f), ktilde);
}

// Theta = e alpha + eps_n beta with alpha in (0,2) and beta in ker of the
// (1,2) wedge map; the two images fill the 12-dimensional (1,3) fiber
inline SplitResult split_13(const BoundarySplitData& d, const FiberForm& theta) {
    FiberShape s13{3, 1, 3, SpinorSlot::none};
    FiberShape s02{3, 0, 2, SpinorSlot::none};
    auto x = d.inv13.apply(to_coords(s13, theta));
    std::vector<GaussRational> xa(x.begin(), x.begin() + 6);
    FiberForm alpha = from_coords(s02, xa);
    FiberForm beta = ff_zero(3, 1, 2);
    for (int i = 0; i < 6; ++i)
        if (!x[6 + i].is_zero()) beta = ff_add(beta, ff_scale(x[6 + i], d.ker_w12[i]));
    SplitResult r;
    r.residual = ff_sub(ff_sub(theta, wedge(d.e, alpha)), wedge(d.epsn, beta));
    r.parts = {{"alpha", std::move(alpha)}, {"beta", std::move(beta)}};
    return r;
}

inline SplitResult split_13(const Frame& f, const FiberForm& theta) {
    return split_13(make_boundary_split_data(f), theta);
}

// Given the torsion value T in the boundary (2,1) fiber, produce the unique
// v in ker of the (1,2) wedge map and sigma with eps_n (T - [e,v]) = e sigma;
// shifting the connection by -v realizes T -> T - [e,v]
inline SplitResult structural_fix(const BoundarySplitData& d, const FiberForm& T) {
    if (T.k != 2 || T.l != 1 || T.base_dim != 3)
        throw std::invalid_argument("structural_fix: expects a boundary (2,1) torsion value");
    SplitResult s = split_22(d, wedge(d.epsn, T));
    SplitResult out;
    out.residual =
        ff_sub(wedge(d.epsn, ff_sub(T, e_bracket(d.f, s.part("v")))), wedge(d.e, s.part("rho")));
    out.parts = {{"v", s.part("v")}, {"sigma", s.part("rho")}};
    return out;
}

inline SplitResult structural_fix(const Frame& f, const FiberForm& T) {
    return structural_fix(make_boundary_split_data(f), T);
}

// Bulk solver state for the spinor-valued splittings.
struct BulkSplitData {
    Frame f;
    FiberForm e;
    std::vector<FiberForm> ker_g3_31;   // ker of gamma^3 on (3,1) spinors, dim 48
    std::vector<FiberForm> ker_gg3_21;  // ker of gamma-underline gamma^3 on (2,1), dim 80
    Matrix inv31;                       // inverse of [i e gamma-underline | ker] on (3,1)
    Matrix inv21;                       // inverse of [e-wedge | ker] on (2,1)
};

inline BulkSplitData make_bulk_split_data(const Frame& f) {
    if (!f.bulk()) throw std::invalid_argument("bulk split data needs a bulk frame");
    BulkSplitData d;
    d.f = f;
    d.e = coframe(f);

    FiberShape s31{4, 3, 1, SpinorSlot::column};
    FiberShape s34{4, 3, 4, SpinorSlot::column};
    MapCertificate g3 =
        certify(s31, s34, [](const FiberForm& x) { return apply_gamma3(x); });
    d.ker_g3_31 = g3.kernel_basis;
    if (d.ker_g3_31.size() != 48)
        throw std::logic_error("ker of gamma^3 on (3,1) spinors is not 48-dim");

    FiberShape s21{4, 2, 1, SpinorSlot::column};
    MapCertificate gg3 = certify(s21, s34, [&](const FiberForm& x) {
        return apply_gamma_under(f, apply_gamma3(x));
    });
    d.ker_gg3_21 = gg3.kernel_basis;
    if (d.ker_gg3_21.size() != 80)
        throw std::logic_error("ker of gamma-underline gamma^3 on (2,1) spinors is not 80-dim");

    FiberShape s10{4, 1, 0, SpinorSlot::column};
    std::vector<FiberForm> cols31;
    for (int i = 0; i < s10.dim(); ++i)
        cols31.push_back(
            ff_scale(GaussRational::i(), wedge(d.e, apply_gamma_under(f, s10.basis(i)))));
    for (auto& b : d.ker_g3_31) cols31.push_back(b);
    auto inv31 = inverse(columns_matrix(s31, cols31));
    if (!inv31) throw DegenerateFrame("(3,1) spinor splitting system is singular");
    d.inv31 = *inv31;

    std::vector<FiberForm> cols21;
    for (int i = 0; i < s10.dim(); ++i) cols21.push_back(wedge(d.e, s10.basis(i)));
    for (auto& b : d.ker_gg3_21) cols21.push_back(b);
    auto inv21 = inverse(columns_matrix(s21, cols21));
    if (!inv21) throw DegenerateFrame("(2,1) spinor splitting system is singular");
    d.inv21 = *inv21;
    return d;
}

// theta = i e gamma-underline alpha + beta with gamma^3 beta = 0
inline SplitResult spinor_split_31(const BulkSplitData& d, const FiberForm& theta) {
    FiberShape s31{4, 3, 1, SpinorSlot::column};
    FiberShape s10{4, 1, 0, SpinorSlot::column};
    auto x = d.inv31.apply(to_coords(s31, theta));
    std::vector<GaussRational> xa(x.begin(), x.begin() + 16);
    FiberForm alpha = from_coords(s10, xa);
    FiberForm beta = ff_zero(4, 3, 1, SpinorSlot::column);
    for (int i = 0; i < 48; ++i)
        if (!x[16 + i].is_zero()) beta = ff_add(beta, ff_scale(x[16 + i], d.ker_g3_31[i]));
    SplitResult r;
    r.residual = ff_sub(
        ff_sub(theta,
               ff_scale(GaussRational::i(), wedge(d.e, apply_gamma_under(d.f, alpha)))),
        beta);
    r.parts = {{"alpha", std::move(alpha)}, {"beta", std::move(beta)}};
    return r;
}

inline SplitResult spinor_split_31(const Frame& f, const FiberForm& theta) {
    return spinor_split_31(make_bulk_split_data(f), theta);
}

// theta = e kappa + varkappa with varkappa killed by gamma-underline gamma^3
inline SplitResult spinor_split_21(const BulkSplitData& d, const FiberForm& theta) {
    FiberShape s21{4, 2, 1, SpinorSlot::column};
    FiberShape s10{4, 1, 0, SpinorSlot::column};
    auto x = d.inv21.apply(to_coords(s21, theta));
    std::vector<GaussRational> xk(x.begin(), x.begin() + 16);
    FiberForm kappa = from_coords(s10, xk);
    FiberForm vark = ff_zero(4, 2, 1, SpinorSlot::column);
    for (int i = 0; i < 80; ++i)
        if (!x[16 + i].is_zero()) vark = ff_add(vark, ff_scale(x[16 + i], d.ker_gg3_21[i]));
    SplitResult r;
    r.residual = ff_sub(ff_sub(theta, wedge(d.e, kappa)), vark);
    r.parts = {{"kappa", std::move(kappa)}, {"varkappa", std::move(vark)}};
    return r;
}

inline SplitResult spinor_split_21(const Frame& f, const FiberForm& theta) {
    return spinor_split_21(make_bulk_split_data(f), theta);
}

// Certificates for the isomorphism and injectivity statements tied to a
// single frame; boundary and bulk frames carry different lists.
inline VerificationReport certify_isos(const Frame& f) {
    VerificationReport rep;
    rep.suite = "decompositions";
    auto record = [&](const std::string& id, const std::string& anchor,
                      const MapCertificate& c, bool want_inj, bool want_surj) {
        bool ok = (!want_inj || c.injective()) && (!want_surj || c.surjective());
        std::string w = "rank " + std::to_string(c.rank) + ", " +
                        std::to_string(c.domain.dim()) + " -> " +
                        std::to_string(c.codomain.dim());
        rep.add(id, anchor, ok, w);
    };

    if (!f.bulk()) {
        FiberForm e = coframe(f);
        FiberForm epsn = epsn_form(f);
        FiberForm e3 = ff_scale(GaussRational(Rat(1, 6)), wedge(wedge(e, e), e));
        FiberShape s00{3, 0, 0, SpinorSlot::none};
        FiberShape s34{3, 3, 4, SpinorSlot::none};
        record("epsn-e3",
               "(1/3!) eps_n e^3 is an isomorphism from scalars to the top fiber",
               certify(s00, s34,
                       [&](const FiberForm& x) { return wedge(wedge(epsn, e3), x); }),
               true, true);
        FiberShape p00{3, 0, 0, SpinorSlot::column};
        FiberShape p34{3, 3, 4, SpinorSlot::column};
        record("e3-gamma",
               "(1/3!) e^3 gamma is an isomorphism on spinor scalars",
               certify(p00, p34,
                       [&](const FiberForm& x) { return wedge(e3, apply_gamma1(x)); }),
               true, true);
        FiberShape p10{3, 1, 0, SpinorSlot::column};
        FiberShape p24{3, 2, 4, SpinorSlot::column};
        record("e-gamma3-bdry",
               "(1/3!) e gamma^3 is injective on boundary (1,0) spinors",
               certify(p10, p24,
                       [&](const FiberForm& x) {
                           return ff_scale(GaussRational(Rat(1, 6)),
                                           wedge(e, apply_gamma3(x)));
                       }),
               true, false);
        return rep;
    }

    for (auto [i, j, name] : {std::tuple<int, int, const char*>{0, 2, "w2-02"},
                              {2, 0, "w2-20"},
                              {1, 1, "w2-11"}})
        record(name,
               std::string("W_2 on the (") + std::to_string(i) + "," + std::to_string(j) +
                   ") fiber is an isomorphism",
               W_map(f, 2, i, j), true, true);
    record("w4-00", "W_4 on scalars is an isomorphism", W_map(f, 4, 0, 0), true, true);
    record("rho-01", "the coframe bracket on (0,1) is an isomorphism", rho_map(f, 0, 1),
           true, true);
    record("rho-34", "the coframe bracket on (3,4) is an isomorphism", rho_map(f, 3, 4),
           true, true);

    FiberForm e = coframe(f);
    FiberShape p10{4, 1, 0, SpinorSlot::column};
    FiberShape p24{4, 2, 4, SpinorSlot::column};
    FiberShape p34{4, 3, 4, SpinorSlot::column};
    GaussRational sixth(Rat(1, 6));
    record("e-gamma3",
           "(1/3!) e gamma^3 is injective on (1,0) spinors",
           certify(p10, p24,
                   [&](const FiberForm& x) {
                       return ff_scale(sixth, wedge(e, apply_gamma3(x)));
                   }),
           true, false);
    record("e-gamma3-gunder",
           "(1/3!) e gamma^3 gamma-underline is an isomorphism onto the spinor top fiber",
           certify(p10, p34,
                   [&](const FiberForm& x) {
                       return ff_scale(sixth,
                                       wedge(e, apply_gamma3(apply_gamma_under(f, x))));
                   }),
           true, true);
    record("e-gunder-gamma3",
           "(1/3!) e gamma-underline gamma^3 is an isomorphism onto the spinor top fiber",
           certify(p10, p34,
                   [&](const FiberForm& x) {
                       return ff_scale(sixth,
                                       wedge(e, apply_gamma_under(f, apply_gamma3(x))));
                   }),
           true, true);
    return rep;
}

}  // namespace veriform
