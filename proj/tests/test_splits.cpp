#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "veriform/splits.hpp"

using namespace veriform;

namespace {

FiberForm random_form(Sampler& rng, int base_dim, int k, int l,
                      SpinorSlot s = SpinorSlot::none) {
    FiberShape sh{base_dim, k, l, s};
    FiberForm f = ff_zero(base_dim, k, l, s);
    for (int idx = 0; idx < sh.dim(); ++idx) {
        GaussRational c(int(rng.int_in(-4, 4)));
        if (!c.is_zero()) f = ff_add(f, ff_scale(c, sh.basis(idx)));
    }
    return f;
}

FiberForm random_kernel_element(Sampler& rng, const std::vector<FiberForm>& basis) {
    FiberForm f = basis.at(0);
    f.c.clear();
    for (auto& b : basis) {
        GaussRational c(int(rng.int_in(-3, 3)));
        if (!c.is_zero()) f = ff_add(f, ff_scale(c, b));
    }
    return f;
}

// substitute v_b -> sum_a R(a,b) v_a in the internal slot
FiberForm rotate_v(const Matrix& R, const FiberForm& x) {
    FiberForm r = ff_zero(x.base_dim, x.k, x.l, x.spinor);
    for (auto& [key, c] : x.c) {
        auto [km, vm, sp] = key;
        std::vector<std::pair<std::uint8_t, GaussRational>> acc = {{0, c}};
        for (int b = 0; b < 4; ++b) {
            if (!(vm & (1 << b))) continue;
            std::vector<std::pair<std::uint8_t, GaussRational>> next;
            for (auto& [m, cc] : acc)
                for (int a = 0; a < 4; ++a) {
                    if (R.at(a, b).is_zero() || (m & (1 << a))) continue;
                    int sg = merge_sign(m, std::uint8_t(1) << a);
                    next.emplace_back(std::uint8_t(m | (1 << a)),
                                      GaussRational(sg) * R.at(a, b) * cc);
                }
            acc = std::move(next);
        }
        for (auto& [m, cc] : acc) r.add_term(km, m, sp, cc);
    }
    return r;
}

Frame rotate_boundary_frame(const Matrix& R, const Frame& f) {
    Matrix e(3, 4);
    std::array<GaussRational, 4> eps;
    for (int mu = 0; mu < 3; ++mu)
        for (int a = 0; a < 4; ++a) {
            GaussRational s;
            for (int b = 0; b < 4; ++b) s += R.at(a, b) * f.e.at(mu, b);
            e.at(mu, a) = s;
        }
    for (int a = 0; a < 4; ++a) {
        GaussRational s;
        for (int b = 0; b < 4; ++b) s += R.at(a, b) * f.epsilon_n[b];
        eps[a] = s;
    }
    return make_boundary_frame(e, eps);
}

// rational boost in the (0,1) plane composed with a rational rotation in the
// (2,3) plane; preserves the internal metric exactly
Matrix rational_lorentz() {
    Matrix R(4, 4);
    R.at(0, 0) = GaussRational(Rat(5, 3));
    R.at(0, 1) = GaussRational(Rat(4, 3));
    R.at(1, 0) = GaussRational(Rat(4, 3));
    R.at(1, 1) = GaussRational(Rat(5, 3));
    R.at(2, 2) = GaussRational(Rat(4, 5));
    R.at(2, 3) = GaussRational(Rat(-3, 5));
    R.at(3, 2) = GaussRational(Rat(3, 5));
    R.at(3, 3) = GaussRational(Rat(4, 5));
    return R;
}

}  // namespace

TEST_CASE("(2,2) splitting") {
    Sampler rng(401);
    Frame f = sample_boundary_frame(rng);
    BoundarySplitData d = make_boundary_split_data(f);
    FiberForm e = coframe(f);
    FiberForm epsn = epsn_form(f);

    SECTION("pure image input returns the known part") {
        FiberForm rho0 = random_form(rng, 3, 1, 1);
        SplitResult s = split_22(d, wedge(e, rho0));
        REQUIRE(s.residual.is_zero());
        REQUIRE(s.part("rho") == rho0);
        REQUIRE(s.part("v").is_zero());
    }
    SECTION("pure kernel input returns the known part") {
        FiberForm v0 = random_kernel_element(rng, d.ker_w12);
        SplitResult s = split_22(d, wedge(epsn, e_bracket(f, v0)));
        REQUIRE(s.residual.is_zero());
        REQUIRE(s.part("rho").is_zero());
        REQUIRE(s.part("v") == v0);
    }
    SECTION("random input reconstructs exactly and splits linearly") {
        for (int t = 0; t < 5; ++t) {
            FiberForm b1 = random_form(rng, 3, 2, 2);
            FiberForm b2 = random_form(rng, 3, 2, 2);
            SplitResult s1 = split_22(d, b1);
            SplitResult s2 = split_22(d, b2);
            SplitResult s12 = split_22(d, ff_add(b1, b2));
            REQUIRE(s1.residual.is_zero());
            REQUIRE(s12.part("rho") == ff_add(s1.part("rho"), s2.part("rho")));
            REQUIRE(s12.part("v") == ff_add(s1.part("v"), s2.part("v")));
            // v lands in the kernel
            REQUIRE(wedge(e, s1.part("v")).is_zero());
        }
    }
    SECTION("a different kernel basis yields identical parts") {
        BoundarySplitData d2 = d;
        for (int i = 0; i < 5; ++i)
            d2.ker_w12[i] = ff_add(d2.ker_w12[i], d2.ker_w12[i + 1]);
        FiberShape s11{3, 1, 1, SpinorSlot::none};
        FiberShape s22{3, 2, 2, SpinorSlot::none};
        std::vector<FiberForm> cols;
        for (int i = 0; i < s11.dim(); ++i) cols.push_back(wedge(d2.e, s11.basis(i)));
        for (auto& v : d2.ker_w12) cols.push_back(wedge(d2.epsn, e_bracket(f, v)));
        d2.inv22 = *inverse(columns_matrix(s22, cols));
        for (int t = 0; t < 3; ++t) {
            FiberForm beta = random_form(rng, 3, 2, 2);
            SplitResult a = split_22(d, beta);
            SplitResult b = split_22(d2, beta);
            REQUIRE(a.part("rho") == b.part("rho"));
            REQUIRE(a.part("v") == b.part("v"));
        }
    }
}

TEST_CASE("(2,1) and (1,2) zero criteria") {
    Sampler rng(402);
    Frame f = sample_boundary_frame(rng);
    BoundarySplitData d = make_boundary_split_data(f);

    SECTION("zero passes") {
        REQUIRE(check_21(d, ff_zero(3, 2, 1)));
        REQUIRE(check_12(d, ff_zero(3, 1, 2)));
    }
    SECTION("both conditions together imply vanishing") {
        for (int t = 0; t < 10; ++t) {
            FiberForm alpha = random_form(rng, 3, 2, 1);
            REQUIRE(check_21(d, alpha) == alpha.is_zero());
            FiberForm a = random_form(rng, 3, 1, 2);
            REQUIRE(check_12(d, a) == a.is_zero());
        }
    }
    SECTION("nonzero kernel elements fail the image half") {
        MapCertificate w21 = W_map(f, 1, 2, 1);
        FiberForm alpha = random_kernel_element(rng, w21.kernel_basis);
        if (alpha.is_zero()) alpha = w21.kernel_basis[0];
        REQUIRE(wedge(coframe(f), alpha).is_zero());
        REQUIRE_FALSE(check_21(d, alpha));

        FiberForm a = random_kernel_element(rng, d.ker_w12);
        if (a.is_zero()) a = d.ker_w12[0];
        REQUIRE_FALSE(check_12(d, a));
    }
    SECTION("nonvanishing e-wedge fails") {
        FiberForm alpha = random_form(rng, 3, 2, 1);
        while (wedge(coframe(f), alpha).is_zero()) alpha = random_form(rng, 3, 2, 1);
        REQUIRE_FALSE(check_21(d, alpha));
    }
}

TEST_CASE("(2,1) representative fixing") {
    Sampler rng(403);
    Frame f = sample_boundary_frame(rng);
    BoundarySplitData d = make_boundary_split_data(f);
    FiberForm e = coframe(f);
    FiberForm epsn = epsn_form(f);
    std::vector<FiberForm> ker21 = W_map(f, 1, 2, 1).kernel_basis;
    REQUIRE(ker21.size() == 6);

    for (int t = 0; t < 4; ++t) {
        FiberForm kt = random_form(rng, 3, 2, 1);
        SplitResult s = split_cdag(d, kt);
        REQUIRE(s.residual.is_zero());
        REQUIRE(ff_add(s.part("kcheck"), s.part("r")) == kt);
        REQUIRE(wedge(e, s.part("r")).is_zero());
        REQUIRE(wedge(epsn, s.part("kcheck")) == wedge(e, s.part("acheck")));

        // the fixed representative only depends on the class modulo ker(e-wedge)
        FiberForm kt2 = ff_add(kt, random_kernel_element(rng, ker21));
        SplitResult s2 = split_cdag(d, kt2);
        REQUIRE(s2.part("kcheck") == s.part("kcheck"));

        // re-splitting the representative leaves it unchanged
        SplitResult s3 = split_cdag(d, s.part("kcheck"));
        REQUIRE(s3.part("r").is_zero());
        REQUIRE(s3.part("kcheck") == s.part("kcheck"));
    }
}

TEST_CASE("(1,3) decomposition") {
    Sampler rng(404);
    Frame f = sample_boundary_frame(rng);
    BoundarySplitData d = make_boundary_split_data(f);
    FiberForm e = coframe(f);
    FiberForm epsn = epsn_form(f);

    REQUIRE(d.ker_w12.size() == 6);  // 6 + 6 image dimensions fill the 12-dim fiber

    FiberForm alpha0 = random_form(rng, 3, 0, 2);
    SplitResult sa = split_13(d, wedge(e, alpha0));
    REQUIRE(sa.residual.is_zero());
    REQUIRE(sa.part("alpha") == alpha0);
    REQUIRE(sa.part("beta").is_zero());

    FiberForm beta0 = random_kernel_element(rng, d.ker_w12);
    SplitResult sb = split_13(d, wedge(epsn, beta0));
    REQUIRE(sb.part("alpha").is_zero());
    REQUIRE(sb.part("beta") == beta0);

    for (int t = 0; t < 4; ++t) {
        FiberForm theta = random_form(rng, 3, 1, 3);
        SplitResult s = split_13(d, theta);
        REQUIRE(s.residual.is_zero());
        REQUIRE(theta == ff_add(wedge(e, s.part("alpha")), wedge(epsn, s.part("beta"))));
        REQUIRE(wedge(e, s.part("beta")).is_zero());
    }
}

TEST_CASE("torsion representative fixing") {
    Sampler rng(405);
    Frame f = sample_boundary_frame(rng);
    BoundarySplitData d = make_boundary_split_data(f);

    SECTION("pure shift input recovers the shift") {
        FiberForm v0 = random_kernel_element(rng, d.ker_w12);
        SplitResult s = structural_fix(d, e_bracket(f, v0));
        REQUIRE(s.residual.is_zero());
        REQUIRE(s.part("v") == v0);
        REQUIRE(s.part("sigma").is_zero());
    }
    SECTION("random torsion value, then idempotence") {
        for (int t = 0; t < 4; ++t) {
            FiberForm T = random_form(rng, 3, 2, 1);
            SplitResult s = structural_fix(d, T);
            REQUIRE(s.residual.is_zero());
            FiberForm fixed = ff_sub(T, e_bracket(f, s.part("v")));
            SplitResult s2 = structural_fix(d, fixed);
            REQUIRE(s2.part("v").is_zero());
            REQUIRE(s2.part("sigma") == s.part("sigma"));
        }
    }
}

TEST_CASE("bulk spinor splittings") {
    Sampler rng(406);
    Frame f = sample_bulk_frame(rng);
    BulkSplitData d = make_bulk_split_data(f);
    FiberForm e = coframe(f);

    SECTION("kernel dimensions") {
        REQUIRE(d.ker_g3_31.size() == 48);
        REQUIRE(d.ker_gg3_21.size() == 80);
    }
    SECTION("(3,1): pure parts round-trip") {
        FiberForm a0 = random_form(rng, 4, 1, 0, SpinorSlot::column);
        FiberForm th = ff_scale(GaussRational::i(), wedge(e, apply_gamma_under(f, a0)));
        SplitResult s = spinor_split_31(d, th);
        REQUIRE(s.residual.is_zero());
        REQUIRE(s.part("alpha") == a0);
        REQUIRE(s.part("beta").is_zero());

        FiberForm b0 = random_kernel_element(rng, d.ker_g3_31);
        SplitResult sb = spinor_split_31(d, b0);
        REQUIRE(sb.part("alpha").is_zero());
        REQUIRE(sb.part("beta") == b0);
    }
    SECTION("(3,1): random input") {
        for (int t = 0; t < 3; ++t) {
            FiberForm th = random_form(rng, 4, 3, 1, SpinorSlot::column);
            SplitResult s = spinor_split_31(d, th);
            REQUIRE(s.residual.is_zero());
            REQUIRE(apply_gamma3(s.part("beta")).is_zero());
        }
    }
    SECTION("(2,1): pure parts and random input") {
        FiberForm k0 = random_form(rng, 4, 1, 0, SpinorSlot::column);
        SplitResult s = spinor_split_21(d, wedge(e, k0));
        REQUIRE(s.residual.is_zero());
        REQUIRE(s.part("kappa") == k0);
        REQUIRE(s.part("varkappa").is_zero());

        for (int t = 0; t < 3; ++t) {
            FiberForm th = random_form(rng, 4, 2, 1, SpinorSlot::column);
            SplitResult r = spinor_split_21(d, th);
            REQUIRE(r.residual.is_zero());
            REQUIRE(apply_gamma_under(f, apply_gamma3(r.part("varkappa"))).is_zero());
            REQUIRE(th == ff_add(wedge(e, r.part("kappa")), r.part("varkappa")));
        }
    }
    SECTION("linearity") {
        FiberForm t1 = random_form(rng, 4, 3, 1, SpinorSlot::column);
        FiberForm t2 = random_form(rng, 4, 3, 1, SpinorSlot::column);
        SplitResult s1 = spinor_split_31(d, t1);
        SplitResult s2 = spinor_split_31(d, t2);
        SplitResult s12 = spinor_split_31(d, ff_add(t1, t2));
        REQUIRE(s12.part("alpha") == ff_add(s1.part("alpha"), s2.part("alpha")));
        REQUIRE(s12.part("beta") == ff_add(s1.part("beta"), s2.part("beta")));
    }
}

TEST_CASE("isomorphism certificates") {
    Sampler rng(407);
    SECTION("bulk list") {
        Frame f = sample_bulk_frame(rng);
        VerificationReport rep = certify_isos(f);
        REQUIRE(rep.items.size() == 9);
        for (auto& item : rep.items) {
            INFO(item.id << " [" << item.anchor << "] " << item.witness);
            CHECK(item.pass);
        }
    }
    SECTION("boundary list") {
        Frame f = sample_boundary_frame(rng);
        VerificationReport rep = certify_isos(f);
        REQUIRE(rep.items.size() == 3);
        for (auto& item : rep.items) {
            INFO(item.id << " [" << item.anchor << "] " << item.witness);
            CHECK(item.pass);
        }
    }
    SECTION("side mismatch is refused") {
        Frame fb = sample_bulk_frame(rng);
        REQUIRE_THROWS_AS(make_boundary_split_data(fb), std::invalid_argument);
        Frame fd = sample_boundary_frame(rng);
        REQUIRE_THROWS_AS(make_bulk_split_data(fd), std::invalid_argument);
    }
}

TEST_CASE("splitting is equivariant under internal rotations") {
    Sampler rng(408);
    Matrix R = rational_lorentz();
    // R preserves the internal metric
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            GaussRational s;
            for (int c = 0; c < 4; ++c)
                s += R.at(c, a) * GaussRational(kEta[c]) * R.at(c, b);
            REQUIRE(s == GaussRational(a == b ? kEta[a] : 0));
        }

    Frame f = sample_boundary_frame(rng);
    Frame fr = rotate_boundary_frame(R, f);
    REQUIRE(rotate_v(R, coframe(f)) == coframe(fr));

    BoundarySplitData d = make_boundary_split_data(f);
    BoundarySplitData dr = make_boundary_split_data(fr);
    for (int t = 0; t < 3; ++t) {
        FiberForm beta = random_form(rng, 3, 2, 2);
        SplitResult s = split_22(d, beta);
        SplitResult sr = split_22(dr, rotate_v(R, beta));
        REQUIRE(sr.part("rho") == rotate_v(R, s.part("rho")));
        REQUIRE(sr.part("v") == rotate_v(R, s.part("v")));
    }
}
