#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "veriform/rng.hpp"
#include "veriform/symbolic.hpp"

using namespace veriform;

namespace {

JetPoly rand_poly(Sampler& rng, int gpar, int base_dim, int gen_lo, bool real = true) {
    JetPoly p;
    int terms = int(rng.int_in(1, 2));
    for (int t = 0; t < terms; ++t) {
        std::uint16_t m = 0;
        int total = int(rng.int_in(0, 2));
        for (int d = 0; d < total; ++d) {
            int var = int(rng.int_in(0, base_dim - 1));
            m = jexp_set(m, var, jexp_get(m, var) + 1);
        }
        p.add_term(m, rng.grassmann(gpar, gen_lo, 6, real));
    }
    return p;
}

std::uint8_t rand_mask(Sampler& rng, int bits, int width) {
    std::uint8_t m = 0;
    int placed = 0;
    while (placed < bits) {
        int b = int(rng.int_in(0, width - 1));
        if (m >> b & 1) continue;
        m |= std::uint8_t(1u << b);
        ++placed;
    }
    return m;
}

JetForm rand_form(Sampler& rng, int base_dim, int k, int l, int gpar,
                  SpinorSlot sp = SpinorSlot::none, int gen_lo = 0) {
    JetForm f = jf_zero(base_dim, sp);
    int keys = int(rng.int_in(1, 2));
    for (int i = 0; i < keys; ++i) {
        JetKey key;
        key.km = rand_mask(rng, k, base_dim);
        key.vm = rand_mask(rng, l, 4);
        key.sp = sp == SpinorSlot::none ? std::int8_t(-1) : std::int8_t(rng.int_in(0, 3));
        f.add_term(key, rand_poly(rng, gpar, base_dim, gen_lo));
    }
    return f;
}

JetForm rand_majorana_form(Sampler& rng, int base_dim, int k, int gpar, int gen_lo) {
    JetForm f = jf_zero(base_dim, SpinorSlot::column);
    auto& basis = majorana_basis();
    for (int dir = 0; dir < 4; ++dir) {
        std::uint8_t km = rand_mask(rng, k, base_dim);
        JetPoly p = rand_poly(rng, gpar, base_dim, gen_lo + dir, true);
        for (int al = 0; al < 4; ++al)
            f.add_term({km, 0, std::int8_t(al)}, jp_scale(basis[dir][al], p));
    }
    return f;
}

std::vector<JetPoly> rand_vf(Sampler& rng, int base_dim, int gpar, int gen_lo) {
    std::vector<JetPoly> v{std::size_t(base_dim), JetPoly{}};
    for (int mu = 0; mu < base_dim; ++mu) v[std::size_t(mu)] = rand_poly(rng, gpar, base_dim, gen_lo);
    return v;
}

// the working field set: coframe e, connection fluctuation w, background
// curvature F0, normal frame en and its companion sig, the fermions, and the
// ghost-valued generators of the three transformation families
Registry toy_registry(int dim) {
    Registry reg(dim);
    reg.add({"c", 0, 0, 2, 1, Bundle::lambda, VarClass::parameter, 0});
    reg.add({"xi", 1, 0, 0, 1, Bundle::vectorfield, VarClass::parameter, 0});
    reg.add({"xixi", 2, 0, 0, 2, Bundle::vectorfield, VarClass::parameter, 0});
    reg.add({"lam", 3, 0, 0, 1, Bundle::scalar, VarClass::parameter, 0});
    reg.add({"chi", 4, 0, 0, 1, Bundle::spinor, VarClass::parameter, 1});
    reg.add({"en", 7, 0, 1, 0, Bundle::lambda, VarClass::background, 0});
    reg.add({"sig", 8, 1, 1, 0, Bundle::lambda, VarClass::background, 0});
    reg.add({"F0", 9, 2, 2, 0, Bundle::lambda, VarClass::background, 0});
    reg.add({"e", 11, 1, 1, 0, Bundle::lambda, VarClass::dynamical, 0});
    reg.add({"w", 12, 1, 2, 0, Bundle::lambda, VarClass::dynamical, 0});
    reg.add({"psi", 13, 1, 0, 0, Bundle::spinor, VarClass::dynamical, 1});
    reg.add({"phi", 19, 0, 0, 2, Bundle::vectorfield, VarClass::parameter, 0});
    return reg;
}

Expr parse_raw(const std::string& src, const Registry& reg) {
    detail::Parser p(src, reg);
    Expr e = p.parse_sum();
    p.skip_ws();
    REQUIRE(p.pos == src.size());
    return e;
}

std::size_t err_offset(const std::string& src, const Registry& reg) {
    try {
        parse_expr(src, reg);
    } catch (const parse_error& e) {
        return e.offset;
    }
    FAIL("no parse error for: " << src);
    return std::size_t(-1);
}

} // namespace

TEST_CASE("expression grammar round trips and rejects malformed input") {
    Registry reg = toy_registry(4);

    SECTION("round trips") {
        std::vector<std::string> srcs = {
            "e^e^F[w]",
            "bar(psi)^G3^d[w](psi)",
            "c^e^d[w](e)",
            "1/2*e^e^F[w]",
            "2+3i*c^e",
            "br(c,psi)^e - bar(chi)^G1^psi",
            "i[xi](e)^br(c,c)^en",
            "L[xi,w0](psi)^e^en",
            "lam^en^e^F[w0]",
            "3/4i*c^c^e^e",
            "<e,br(c,e)>",
        };
        for (auto& s : srcs) {
            INFO(s);
            Expr e = parse_expr(s, reg);
            std::string printed = print_expr(e);
            INFO(printed);
            Expr back = parse_expr(printed, reg);
            REQUIRE(expr_equal_normalized(back, e));
        }
    }

    SECTION("curvature expands against the background") {
        Expr e = parse_expr("e^e^F[w]", reg);
        Expr manual = parse_expr("e^e^F[w0] + e^e^d[w](w) - 1/2*e^e^br(w,w)", reg);
        REQUIRE(expr_equal_normalized(e, manual));
        REQUIRE(e.terms.size() == 3);
    }

    SECTION("pairing and juxtaposition are sugar") {
        REQUIRE(expr_equal_normalized(parse_expr("<e,br(c,e)>", reg),
                                      parse_expr("e^br(c,e)", reg)));
        REQUIRE(expr_equal_normalized(parse_expr("bar(psi) G3 psi", reg),
                                      parse_expr("bar(psi)^G3^psi", reg)));
    }

    SECTION("zero literal") { REQUIRE(expr_is_zero(parse_expr("0", reg))); }

    SECTION("errors carry offsets") {
        REQUIRE(err_offset("d[", reg) == 2);
        REQUIRE(err_offset("q^e", reg) == 0);
        REQUIRE(err_offset("e^q", reg) == 2);
        REQUIRE(err_offset("xi^e", reg) == 0);
        REQUIRE(err_offset("bar(psi)^psi", reg) == 9);
        REQUIRE(err_offset("bar(psi)^e", reg) == 9);
        REQUIRE(err_offset("G3^psi", reg) == 0);
        REQUIRE(err_offset("e^bar(psi)", reg) == 2);
        REQUIRE(err_offset("e)", reg) == 1);
        REQUIRE(err_offset("d[q](e)", reg) == 2);
        REQUIRE(err_offset("i[e](w)", reg) == 2);
        REQUIRE_THROWS_AS(parse_expr("", reg), parse_error);
    }
}

TEST_CASE("normalization is idempotent and kills graded squares") {
    Registry reg = toy_registry(3);

    std::vector<std::string> srcs = {
        "c^e^d[w](e)",
        "br(c,c)^e^en",
        "bar(chi)^G3^d[w](psi)^e",
        "i[xi](d[w](e))^en^en",
        "L[xi,w0](br(c,psi))",
        "e^br(w,br(w,w))",
    };
    for (auto& s : srcs) {
        INFO(s);
        Expr e = parse_expr(s, reg);
        REQUIRE(expr_equal_normalized(normalize(e, reg), e));
    }

    // odd wedge squares vanish, bracket and bilinear squares follow their own laws
    REQUIRE(expr_is_zero(parse_expr("c^c", reg)));
    REQUIRE(expr_is_zero(parse_expr("lam^lam", reg)));
    REQUIRE_FALSE(expr_is_zero(parse_expr("e^e", reg)));
    REQUIRE_FALSE(expr_is_zero(parse_expr("br(c,c)", reg)));
    REQUIRE(expr_is_zero(parse_expr("bar(chi)^G3^chi", reg)));
    REQUIRE(expr_is_zero(parse_expr("bar(psi)^G3^psi", reg)));
    REQUIRE_FALSE(expr_is_zero(parse_expr("bar(psi)^G1^psi", reg)));
    REQUIRE_FALSE(expr_is_zero(parse_expr("bar(chi)^G1^chi", reg)));

    // slot symmetries
    REQUIRE(expr_equal_normalized(parse_expr("br(e,c)", reg), parse_expr("br(c,e)", reg)));
    REQUIRE(expr_equal_normalized(parse_expr("br(psi,c)", reg),
                                  normalize(expr_neg(parse_expr("br(c,psi)", reg)), reg)));
    REQUIRE(expr_equal_normalized(parse_expr("br(c,e) + br(e,c)", reg),
                                  parse_expr("2*br(c,e)", reg)));
    REQUIRE(expr_equal_normalized(parse_expr("bar(psi)^G1^chi", reg),
                                  parse_expr("bar(chi)^G1^psi", reg)));

    // degree kills: past the base dimension or the multivector top
    REQUIRE(expr_is_zero(parse_expr("e^e^F[w0]", reg)));       // a 4-form on dim 3
    REQUIRE(expr_is_zero(parse_expr("c^br(c,c)^en^en", reg))); // multivector degree 5
}

TEST_CASE("rewrites agree with the concrete model", "[soundness]") {
    Registry reg = toy_registry(3);
    Sampler rng(120);

    JetAssignment asn;
    asn.base_dim = 3;
    asn.omega0 = rand_form(rng, 3, 1, 2, 0, SpinorSlot::none, 0);
    asn.fields["e"] = rand_form(rng, 3, 1, 1, 0, SpinorSlot::none, 1);
    asn.fields["w"] = rand_form(rng, 3, 1, 2, 0, SpinorSlot::none, 2);
    asn.fields["c"] = rand_form(rng, 3, 0, 2, 1, SpinorSlot::none, 3);
    asn.fields["en"] = rand_form(rng, 3, 0, 1, 0, SpinorSlot::none, 4);
    asn.fields["sig"] = rand_form(rng, 3, 1, 1, 0, SpinorSlot::none, 5);
    asn.fields["lam"] = rand_form(rng, 3, 0, 0, 1, SpinorSlot::none, 6);
    asn.fields["F0"] = jf_curv(asn.omega0); // rules for F0 assume it is the curvature
    asn.fields["psi"] = rand_majorana_form(rng, 3, 1, 1, 7);
    asn.fields["chi"] = rand_majorana_form(rng, 3, 0, 0, 11);
    asn.vfs["xi"] = rand_vf(rng, 3, 1, 15);
    asn.vfs["phi"] = rand_vf(rng, 3, 0, 16);

    std::vector<std::string> srcs = {
        // covariant derivative chains
        "d[w](d[w](e))",
        "d[w](d[w](psi))",
        "d[w](d[w](c))",
        "d[w](F[w0])",
        "d[w0](br(w,c))",
        // contraction and transport chains along the odd generator
        "i[xi](d[w](e))",
        "d[w](i[xi](e))",
        "L[xi,w0](d[w](psi))",
        "L[xi,w0](L[xi,w0](e))",
        "L[xi,w0](L[xi,w0](psi))",
        "L[xi,w0](i[xi](psi))",
        "L[xi,w0](F[w0])",
        "L[xi,w](psi)",
        // even generators
        "i[xixi](d[w](c))",
        "L[xixi,w0](d[w](e))",
        "L[xixi,w0](F[w0])",
        "i[phi](d[w](e))",
        "L[phi,w0](d[w](c))",
        "i[xi](i[xixi](e^e))",
        "i[xi](L[xixi,w0](e))",
        // operators through brackets and bilinears
        "d[w](br(c,psi))",
        "d[w](br(c,c))",
        "i[xi](br(c,e))",
        "L[xi,w0](br(c,psi))",
        "d[w](bar(psi)^G3^psi)",
        "i[xi](bar(chi)^G1^psi)",
        "L[xi,w0](bar(chi)^G3^chi)",
        // slot canonicalization
        "bar(psi)^G3^d[w](chi)",
        "bar(d[w](chi))^G3^psi",
        "bar(chi)^G0^psi",
        "bar(chi)^G2^psi",
        "br(c,bar(chi)^G1^psi)",
        // nested brackets
        "br(br(c,c),c)",
        "br(c,br(c,c))",
        "e^br(w,br(w,w))",
        // mixed products
        "i[xi](e)^br(c,c)^en",
        "c^e^d[w](e)",
        "bar(chi)^G3^d[w](psi)^e",
    };
    for (auto& s : srcs) {
        INFO(s);
        Expr raw = parse_raw(s, reg);
        Expr norm = normalize(raw, reg);
        JetForm lhs = eval_expr(norm, asn, reg);
        JetForm rhs = eval_expr(raw, asn, reg);
        REQUIRE(lhs == rhs);
        REQUIRE(expr_equal_normalized(normalize(norm, reg), norm));
    }

    SECTION("named rewrite shapes") {
        REQUIRE(expr_equal_normalized(parse_expr("d[w](d[w](e))", reg),
                                      parse_expr("br(F[w],e)", reg)));
        REQUIRE(expr_equal_normalized(
            parse_expr("i[xi](d[w](e)) + d[w](i[xi](e))", reg),
            parse_expr("L[xi,w0](e) + br(i[xi](w),e)", reg)));
        REQUIRE(expr_equal_normalized(
            parse_expr("L[xi,w0](L[xi,w0](psi))", reg),
            parse_expr("1/2*L[xixi,w0](psi) - 1/2*br(i[xi](i[xi](F[w0])),psi)", reg)));
    }
}

TEST_CASE("first variations match hand-computed results") {
    Registry reg3 = toy_registry(3);
    Registry reg4 = toy_registry(4);

    SECTION("coframe and connection variations of the curvature density") {
        Expr o1 = parse_expr("1/2*e^e^F[w]", reg4);
        Expr de = variational_derivative(o1, "e", reg4);
        REQUIRE(expr_equal_normalized(de, parse_expr("delta_e^e^F[w]", reg4)));
        Expr dw = variational_derivative(o1, "w", reg4);
        REQUIRE(expr_equal_normalized(dw, parse_expr("e^d[w](e)^delta_w", reg4)));
        REQUIRE(expr_is_zero(variational_derivative(o1, "psi", reg4)));
    }

    SECTION("variations of a background-weighted density") {
        Expr o2 = parse_expr("lam^en^e^F[w0]", reg4);
        REQUIRE(expr_equal_normalized(variational_derivative(o2, "lam", reg4),
                                      parse_expr("delta_lam^en^e^F[w0]", reg4)));
        REQUIRE(expr_equal_normalized(variational_derivative(o2, "en", reg4),
                                      parse_expr("lam^delta_en^e^F[w0]", reg4)));
        REQUIRE(expr_equal_normalized(variational_derivative(o2, "e", reg4),
                                      parse_expr("lam^en^delta_e^F[w0]", reg4)));
        REQUIRE(expr_is_zero(variational_derivative(o2, "w", reg4)));
    }

    SECTION("variations annihilate total derivatives") {
        std::vector<std::string> xs = {
            "br(c,c)^e^e",
            "bar(psi)^G3^psi^en",
            "c^e^sig",
            "bar(chi)^G3^psi^e",
        };
        for (auto& xsrc : xs) {
            Expr dx = apply_d_omega(parse_expr(xsrc, reg3), reg3);
            for (auto& sym : reg3.field_names()) {
                const FieldInfo& fi = reg3.info(sym);
                if (fi.bundle == Bundle::vectorfield) continue;
                if (sym.rfind("delta_", 0) == 0) continue;
                INFO(xsrc << " / " << sym);
                REQUIRE(expr_is_zero(variational_derivative(dx, sym, reg3)));
            }
        }
    }

    SECTION("unknown symbols are rejected") {
        Expr f = parse_expr("c^e^d[w](e)", reg3);
        REQUIRE_THROWS_AS(variational_derivative(f, "nope", reg3), unknown_symbol);
    }
}

TEST_CASE("densities compare modulo exact terms") {
    Registry reg = toy_registry(3);
    Expr f = parse_expr("c^e^d[w](e)", reg);
    Expr x = parse_expr("br(c,c)^e^e", reg);
    Expr g = normalize(expr_add(f, apply_d_omega(x, reg)), reg);

    auto same = equals_mod_d(f, g, reg);
    REQUIRE(same.equal);

    Expr p = parse_expr("bar(chi)^G3^d[w](psi)^e", reg);
    auto diff = equals_mod_d(f, normalize(expr_add(g, p), reg), reg);
    REQUIRE_FALSE(diff.equal);
    REQUIRE_FALSE(diff.field.empty());
    REQUIRE_FALSE(diff.witness.empty());
}

TEST_CASE("term ceiling aborts runaway normalizations") {
    Registry reg = toy_registry(4);
    NormOptions tiny;
    tiny.term_ceiling = 5;
    REQUIRE_THROWS_AS(parse_expr("e^e^F[w]^F[w]", reg, tiny), term_ceiling_error);
}

TEST_CASE("integrand projection and span solving") {
    Registry reg = toy_registry(3);

    Expr mixed = parse_expr("c^e^d[w](e) + c^e^en", reg);
    Expr top = integrand_project(mixed, reg);
    REQUIRE(top.terms.size() == 1);

    Expr r1 = parse_expr("c^e^d[w](e)", reg);
    Expr r2 = parse_expr("bar(chi)^G3^d[w](psi)^e", reg);
    Expr target = normalize(
        expr_add(expr_scale(GaussRational(2), r1), expr_scale(GaussRational(-3), r2)), reg);

    auto sol = solve_in_span(target, {r1, r2}, reg);
    REQUIRE(sol.has_value());
    REQUIRE((*sol)[0] == GaussRational(2));
    REQUIRE((*sol)[1] == GaussRational(-3));

    auto miss = solve_in_span(target, {r2}, reg);
    REQUIRE_FALSE(miss.has_value());
}
