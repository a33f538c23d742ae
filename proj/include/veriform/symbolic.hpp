#pragma once

// graded symbolic terms over a field registry. Factors are wedge-ordered
// with Koszul signs against the bidegree (form degree k, swap parity m),
// operators push to the leaves through frozen Leibniz characters, and the
// variational machinery strips decorations off marked occurrences by exact
// integration-by-parts moves. Everything is exact rational arithmetic; the
// jet bridge at the bottom evaluates an expression in the concrete model so
// every rewrite can be cross-checked pointwise.

#include "jet.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace veriform {

enum class Bundle { scalar, lambda, spinor, vectorfield };
enum class VarClass { dynamical, parameter, background, defined };

struct FieldInfo {
    std::string name;
    int rank = 0;
    int k = 0;
    int lv = 0;        // Lambda-degree for lambda bundles, 0 otherwise
    int ghost = 0;
    Bundle bundle = Bundle::lambda;
    VarClass var = VarClass::parameter;
    int intrinsic = 0; // extra coefficient parity on top of the ghost number
};

struct unknown_symbol : std::runtime_error {
    explicit unknown_symbol(const std::string& s) : std::runtime_error("unknown symbol: " + s) {}
};

struct term_ceiling_error : std::runtime_error {
    std::size_t count;
    explicit term_ceiling_error(std::size_t n)
        : std::runtime_error("term ceiling exceeded at " + std::to_string(n) + " live terms"),
          count(n) {}
};

// every field gets a variation twin so marked occurrences stay first-class
// expressions; twins rank far right and never enter physics input
class Registry {
public:
    explicit Registry(int dim) : dim_(dim) {}

    void add(FieldInfo f) {
        if (f.bundle != Bundle::vectorfield) {
            FieldInfo d = f;
            d.name = "delta_" + f.name;
            d.rank = f.rank + 1000;
            by_name_.emplace(d.name, d);
        }
        by_name_.emplace(f.name, std::move(f));
    }

    bool has(const std::string& n) const { return by_name_.count(n) != 0; }

    const FieldInfo& info(const std::string& n) const {
        auto it = by_name_.find(n);
        if (it == by_name_.end()) throw unknown_symbol(n);
        return it->second;
    }

    int dim() const { return dim_; }

    std::vector<std::string> field_names() const {
        std::vector<const FieldInfo*> v;
        for (auto& [n, f] : by_name_) v.push_back(&f);
        std::sort(v.begin(), v.end(),
                  [](const FieldInfo* a, const FieldInfo* b) { return a->rank < b->rank; });
        std::vector<std::string> out;
        for (auto* f : v) out.push_back(f->name);
        return out;
    }

private:
    int dim_;
    std::map<std::string, FieldInfo> by_name_;
};

enum class AtomKind { field, op, bracket, bilinear };
enum class OpKind { cov_d, iota, lie };

// op atoms carry the vector field name in sym; cov_d is the covariant
// derivative at the full working connection
struct Atom {
    AtomKind kind = AtomKind::field;
    std::string sym;
    OpKind op = OpKind::cov_d;
    int gamma = 0;
    std::vector<Atom> args;

    friend bool operator==(const Atom& a, const Atom& b) {
        return a.kind == b.kind && a.sym == b.sym && a.op == b.op && a.gamma == b.gamma &&
               a.args == b.args;
    }
};

struct Term {
    GaussRational coef;
    std::vector<Atom> factors;
};

struct Expr {
    std::vector<Term> terms;
};

inline Atom mk_field(const std::string& s) { return Atom{AtomKind::field, s, OpKind::cov_d, 0, {}}; }

inline Atom mk_op_atom(OpKind op, const std::string& vf, Atom arg) {
    return Atom{AtomKind::op, vf, op, 0, {std::move(arg)}};
}

inline Expr expr_of(Atom a) { return Expr{{Term{GaussRational(1), {std::move(a)}}}}; }
inline Expr expr_zero() { return Expr{}; }
inline Expr expr_one() { return Expr{{Term{GaussRational(1), {}}}}; }

inline Expr expr_add(Expr a, const Expr& b) {
    for (auto& t : b.terms) a.terms.push_back(t);
    return a;
}

inline Expr expr_scale(const GaussRational& s, Expr a) {
    if (s.is_zero()) return {};
    for (auto& t : a.terms) t.coef = t.coef * s;
    return a;
}

inline Expr expr_neg(Expr a) { return expr_scale(GaussRational(-1), std::move(a)); }

inline Expr expr_sub(Expr a, Expr b) { return expr_add(std::move(a), expr_neg(std::move(b))); }

// positional product, no reordering; coefficients are central so they hop out
inline Expr expr_mul(const Expr& a, const Expr& b) {
    Expr out;
    for (auto& ta : a.terms)
        for (auto& tb : b.terms) {
            Term t{ta.coef * tb.coef, ta.factors};
            t.factors.insert(t.factors.end(), tb.factors.begin(), tb.factors.end());
            out.terms.push_back(std::move(t));
        }
    return out;
}

// bidegrees. m is the Koszul swap parity (lambda degree + coefficient
// parity + spinor slot); gp is the bare coefficient parity used by the
// Majorana flip laws and the bilinear slot crossings
struct Deg {
    int k = 0, lv = 0, ghost = 0, gp = 0;
    bool spin = false;
    int m() const { return (lv + gp + (spin ? 1 : 0)) & 1; }
};

inline int pow_sign(int e) { return (e & 1) ? -1 : 1; }

inline Deg degrees(const Atom& a, const Registry& reg) {
    switch (a.kind) {
        case AtomKind::field: {
            const FieldInfo& f = reg.info(a.sym);
            Deg d;
            d.k = f.k;
            d.lv = f.bundle == Bundle::lambda || f.bundle == Bundle::scalar ? f.lv : 0;
            d.ghost = f.ghost;
            d.gp = (f.ghost + f.intrinsic) & 1;
            d.spin = f.bundle == Bundle::spinor;
            return d;
        }
        case AtomKind::op: {
            Deg d = degrees(a.args[0], reg);
            if (a.op == OpKind::cov_d) {
                d.k += 1;
            } else {
                const FieldInfo& vf = reg.info(a.sym);
                if (a.op == OpKind::iota) d.k -= 1;
                d.ghost += vf.ghost;
                d.gp ^= vf.ghost & 1;
            }
            return d;
        }
        case AtomKind::bracket: {
            Deg x = degrees(a.args[0], reg), y = degrees(a.args[1], reg);
            Deg d;
            d.k = x.k + y.k;
            d.ghost = x.ghost + y.ghost;
            d.gp = (x.gp + y.gp) & 1;
            d.spin = y.spin;
            d.lv = d.spin ? 0 : x.lv + y.lv - 2;
            return d;
        }
        case AtomKind::bilinear: {
            Deg x = degrees(a.args[0], reg), y = degrees(a.args[1], reg);
            Deg d;
            d.k = x.k + y.k;
            d.lv = a.gamma;
            d.ghost = x.ghost + y.ghost;
            d.gp = (x.gp + y.gp) & 1;
            return d;
        }
    }
    throw std::logic_error("degrees: bad atom kind");
}

inline int wedge_swap_sign(const Deg& a, const Deg& b) {
    return pow_sign(a.k * b.k + a.m() * b.m());
}

// operator characters (kappa, mu): passing a factor of bidegree (k, m)
// costs (-1)^{kappa k + mu m}
struct OpChar {
    int kappa = 0, mu = 0;
};

inline OpChar op_char(OpKind op, const std::string& vf, const Registry& reg) {
    if (op == OpKind::cov_d) return {1, 0};
    int odd = reg.info(vf).ghost & 1;
    if (op == OpKind::iota) return {1, odd};
    return {0, odd};
}

inline int pass_sign(const OpChar& c, const Deg& d) {
    return pow_sign(c.kappa * d.k + c.mu * d.m());
}

// crossing the barred slot and the gamma letters of a bilinear
inline int bil_cross_sign(const OpChar& c, const Deg& da, int gamma) {
    return pow_sign(c.kappa * da.k + c.mu * (da.gp + gamma));
}

// Majorana flip of a gamma bilinear, slots both spinor-valued forms
inline int flip_total(int gamma, const Deg& da, const Deg& db) {
    static const int t[4] = {1, -1, -1, 1};
    return -t[gamma] * pow_sign(gamma * (da.gp + db.gp) + da.gp * db.gp + da.k * db.k);
}

inline std::string atom_key(const Atom& a) {
    switch (a.kind) {
        case AtomKind::field: return "f:" + a.sym;
        case AtomKind::op: {
            char c = a.op == OpKind::cov_d ? 'd' : a.op == OpKind::iota ? 'i' : 'l';
            return std::string(1, c) + a.sym + "(" + atom_key(a.args[0]) + ")";
        }
        case AtomKind::bracket:
            return "b(" + atom_key(a.args[0]) + "," + atom_key(a.args[1]) + ")";
        case AtomKind::bilinear:
            return "g" + std::to_string(a.gamma) + "(" + atom_key(a.args[0]) + "," +
                   atom_key(a.args[1]) + ")";
    }
    return "?";
}

inline int head_rank(const Atom& a, const Registry& reg) {
    if (a.kind == AtomKind::field) return reg.info(a.sym).rank;
    return head_rank(a.args[0], reg);
}

inline int deco_depth(const Atom& a) {
    if (a.kind == AtomKind::field) return 0;
    int d = 0;
    for (auto& x : a.args) d = std::max(d, deco_depth(x));
    return d + 1;
}

inline std::string sort_key(const Atom& a, const Registry& reg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d%02d", head_rank(a, reg) + 100, deco_depth(a));
    return std::string(buf) + atom_key(a);
}

inline std::string term_signature(const Term& t) {
    std::string s;
    for (auto& f : t.factors) s += atom_key(f) + "|";
    return s;
}

// selection sort with Koszul signs; returns 0 when an odd square collapses
inline int koszul_sort(std::vector<Atom>& fs, const Registry& reg) {
    int sign = 1;
    std::vector<std::string> keys;
    std::vector<Deg> degs;
    keys.reserve(fs.size());
    for (auto& f : fs) {
        keys.push_back(sort_key(f, reg));
        degs.push_back(degrees(f, reg));
    }
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
        std::size_t best = i;
        for (std::size_t j = i + 1; j < fs.size(); ++j)
            if (keys[j] < keys[best]) best = j;
        for (std::size_t j = best; j > i; --j) {
            sign *= wedge_swap_sign(degs[j], degs[j - 1]);
            std::swap(fs[j], fs[j - 1]);
            std::swap(keys[j], keys[j - 1]);
            std::swap(degs[j], degs[j - 1]);
        }
    }
    for (std::size_t i = 0; i + 1 < fs.size(); ++i)
        if (fs[i] == fs[i + 1] && ((degs[i].k + degs[i].m()) & 1)) return 0;
    return sign;
}

// ---- canonicalizing constructors ----------------------------------------

Expr mk_brk(const Expr& a, const Expr& b, const Registry& reg);
Expr mk_bil(const Expr& a, int gamma, const Expr& b, const Registry& reg);
Expr mk_op(OpKind op, const std::string& vf, const Expr& e, const Registry& reg);

inline Deg list_degrees(const std::vector<Atom>& fs, const Registry& reg) {
    Deg d;
    for (auto& f : fs) {
        Deg x = degrees(f, reg);
        d.k += x.k;
        d.lv += x.lv;
        d.ghost += x.ghost;
        d.gp = (d.gp + x.gp) & 1;
        d.spin = d.spin || x.spin;
    }
    return d;
}

namespace detail {

inline void brk_terms(GaussRational coef, const std::vector<Atom>& xs, const std::vector<Atom>& ys,
                      const Registry& reg, Expr& out);

// single acting slot against a single target atom
inline void brk_single(GaussRational coef, const Atom& x, const Atom& y, const Registry& reg,
                       Expr& out) {
    Deg dx = degrees(x, reg), dy = degrees(y, reg);
    if (dx.spin && dy.spin) throw std::invalid_argument("bracket of two spinor slots");
    if (dx.spin) {
        // move the spinor to the target side
        int s = -wedge_swap_sign(dx, dy);
        brk_single(coef * GaussRational(s), y, x, reg, out);
        return;
    }
    if (!dy.spin && (dx.lv == 0 || dy.lv == 0)) return;
    if (dx.lv == 0 && dy.spin) return;
    if (x.kind == AtomKind::bracket) {
        // flatten a nested acting slot through the graded Jacobi identity
        const Atom& p = x.args[0];
        const Atom& q = x.args[1];
        Deg dp = degrees(p, reg), dq = degrees(q, reg);
        Expr inner = mk_brk(expr_of(q), expr_of(y), reg);
        Expr t1 = mk_brk(expr_of(p), inner, reg);
        Expr inner2 = mk_brk(expr_of(p), expr_of(y), reg);
        Expr t2 = mk_brk(expr_of(q), inner2, reg);
        int s = -pow_sign(dp.k * dq.k + dp.m() * dq.m());
        out = expr_add(std::move(out),
                       expr_scale(coef, expr_add(std::move(t1), expr_scale(GaussRational(s), t2))));
        return;
    }
    if (!dy.spin && sort_key(x, reg) > sort_key(y, reg)) {
        int s = -wedge_swap_sign(dx, dy);
        brk_single(coef * GaussRational(s), y, x, reg, out);
        return;
    }
    if (!dy.spin && x == y && ((dx.k * dy.k + dx.m() * dy.m()) & 1) == 0) return;
    out.terms.push_back(Term{coef, {Atom{AtomKind::bracket, "", OpKind::cov_d, 0, {x, y}}}});
}

inline void brk_terms(GaussRational coef, const std::vector<Atom>& xs, const std::vector<Atom>& ys,
                      const Registry& reg, Expr& out) {
    if (xs.empty() || ys.empty()) return;
    if (xs.size() > 1) {
        Deg dx = list_degrees(xs, reg), dy = list_degrees(ys, reg);
        int s = -pow_sign(dx.k * dy.k + dx.m() * dy.m());
        brk_terms(coef * GaussRational(s), ys, xs, reg, out);
        return;
    }
    const Atom& x = xs[0];
    Deg dx = degrees(x, reg);
    if (ys.size() == 1) {
        brk_single(coef, x, ys[0], reg, out);
        return;
    }
    // derivation across the target product at character (k_x, m_x)
    int sign = 1;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        Deg dyj = degrees(ys[j], reg);
        Expr piece;
        brk_single(GaussRational(sign), x, ys[j], reg, piece);
        for (auto& t : piece.terms) {
            Term nt{coef * t.coef, {}};
            nt.factors.assign(ys.begin(), ys.begin() + long(j));
            nt.factors.insert(nt.factors.end(), t.factors.begin(), t.factors.end());
            nt.factors.insert(nt.factors.end(), ys.begin() + long(j) + 1, ys.end());
            out.terms.push_back(std::move(nt));
        }
        sign *= pow_sign(dx.k * dyj.k + dx.m() * dyj.m());
    }
}

} // namespace detail

inline Expr mk_brk(const Expr& a, const Expr& b, const Registry& reg) {
    Expr out;
    for (auto& ta : a.terms)
        for (auto& tb : b.terms)
            detail::brk_terms(ta.coef * tb.coef, ta.factors, tb.factors, reg, out);
    return out;
}

namespace detail {

// pull the multivector prefix out of one slot, leaving a bare spinor atom.
// Left slot factors leave with no crossing; right slot factors cross the
// barred slot and the gamma letters at (-1)^{k_X k_A + m_X (p_A + gamma)}
struct SlotSplit {
    int sign = 1;
    std::vector<Atom> prefix;
    Atom spin;
};

inline SlotSplit split_slot(std::vector<Atom> fs, const Registry& reg) {
    SlotSplit s;
    int spin_at = -1, nspin = 0;
    for (std::size_t i = 0; i < fs.size(); ++i)
        if (degrees(fs[i], reg).spin) {
            spin_at = int(i);
            ++nspin;
        }
    if (nspin != 1) throw std::invalid_argument("bilinear slot needs exactly one spinor factor");
    Deg dspin = degrees(fs[std::size_t(spin_at)], reg);
    for (std::size_t i = std::size_t(spin_at) + 1; i < fs.size(); ++i)
        s.sign *= wedge_swap_sign(dspin, degrees(fs[i], reg));
    s.spin = fs[std::size_t(spin_at)];
    fs.erase(fs.begin() + spin_at);
    s.prefix = std::move(fs);
    return s;
}

} // namespace detail

inline Expr mk_bil(const Expr& a, int gamma, const Expr& b, const Registry& reg) {
    if (gamma < 0 || gamma > 3) throw std::invalid_argument("gamma power out of range");
    Expr out;
    for (auto& ta : a.terms)
        for (auto& tb : b.terms) {
            detail::SlotSplit sa = detail::split_slot(ta.factors, reg);
            detail::SlotSplit sb = detail::split_slot(tb.factors, reg);
            GaussRational coef = ta.coef * tb.coef * GaussRational(sa.sign * sb.sign);
            Deg dA = degrees(sa.spin, reg);
            for (auto& y : sb.prefix) {
                Deg dy = degrees(y, reg);
                coef = coef * GaussRational(pow_sign(dy.k * dA.k + dy.m() * (dA.gp + gamma)));
            }
            Atom A = sa.spin, B = sb.spin;
            Deg dB = degrees(B, reg);
            if (sort_key(A, reg) > sort_key(B, reg)) {
                coef = coef * GaussRational(flip_total(gamma, dA, dB));
                std::swap(A, B);
            } else if (A == B && flip_total(gamma, dA, dB) < 0) {
                continue;
            }
            Term t{coef, sa.prefix};
            t.factors.insert(t.factors.end(), sb.prefix.begin(), sb.prefix.end());
            t.factors.push_back(Atom{AtomKind::bilinear, "", OpKind::cov_d, gamma, {A, B}});
            out.terms.push_back(std::move(t));
        }
    return out;
}

inline Expr mk_op(OpKind op, const std::string& vf, const Expr& e, const Registry& reg) {
    OpChar ch = op_char(op, vf, reg);
    Expr out;
    for (auto& t : e.terms) {
        int sign = 1;
        for (std::size_t i = 0; i < t.factors.size(); ++i) {
            Term nt{t.coef * GaussRational(sign), t.factors};
            nt.factors[i] = mk_op_atom(op, vf, t.factors[i]);
            out.terms.push_back(std::move(nt));
            sign *= pass_sign(ch, degrees(t.factors[i], reg));
        }
    }
    return out;
}

// ---- rewrite system -------------------------------------------------------

// curvature of the working connection relative to the frozen background
inline Expr curvature_expr(const Registry& reg) {
    Expr f0 = expr_of(mk_field("F0"));
    Expr w = expr_of(mk_field("w"));
    Expr dw = mk_op(OpKind::cov_d, "", w, reg);
    Expr ww = mk_brk(w, w, reg);
    return expr_add(expr_add(f0, dw), expr_scale(GaussRational(Rat(-1, 2)), ww));
}

namespace detail {

inline int op_order(OpKind op, const std::string& vf, const Registry& reg) {
    if (op == OpKind::cov_d) return 0;
    int odd = reg.info(vf).ghost & 1;
    if (op == OpKind::iota) return odd ? 3 : 1;
    return odd ? 4 : 2;
}

inline bool same_flow(const std::string& a, const std::string& b) {
    auto fam = [](const std::string& v) { return v == "xi" || v == "xixi"; };
    return a == b || (fam(a) && fam(b));
}

inline std::optional<Expr> reduce(const Atom& a, const Registry& reg);

inline std::optional<Expr> reduce_op(const Atom& a, const Registry& reg) {
    const Atom& arg = a.args[0];
    Deg darg = degrees(arg, reg);
    OpChar ch = op_char(a.op, a.sym, reg);
    if (a.op == OpKind::iota && darg.k == 0) return expr_zero();
    if (arg.kind == AtomKind::field) {
        if (arg.sym == "F0") {
            if (a.op == OpKind::cov_d) {
                // covariantly constant at its own connection, so only the
                // fluctuation acts
                if (!reg.has("w")) return expr_zero();
                return mk_brk(expr_of(mk_field("w")), expr_of(arg), reg);
            }
            if (a.op == OpKind::lie) {
                Expr i_f0 = expr_of(mk_op_atom(OpKind::iota, a.sym, arg));
                Expr d_if0 = mk_op(OpKind::cov_d, "", i_f0, reg);
                if (!reg.has("w")) return d_if0;
                return expr_sub(std::move(d_if0), mk_brk(expr_of(mk_field("w")), i_f0, reg));
            }
        }
        return std::nullopt;
    }
    if (arg.kind == AtomKind::op) {
        const Atom& inner = arg;
        const Atom& x = inner.args[0];
        Expr ex = expr_of(x);
        if (a.op == OpKind::cov_d && inner.op == OpKind::cov_d)
            return mk_brk(curvature_expr(reg), ex, reg);
        if (inner.op == OpKind::cov_d && (a.op == OpKind::iota || a.op == OpKind::lie)) {
            Expr w = expr_of(mk_field("w"));
            if (a.op == OpKind::iota) {
                Expr lie_x = mk_op(OpKind::lie, a.sym, ex, reg);
                Expr d_ix = mk_op(OpKind::cov_d, "", mk_op(OpKind::iota, a.sym, ex, reg), reg);
                Expr br = mk_brk(mk_op(OpKind::iota, a.sym, w, reg), ex, reg);
                return expr_add(expr_sub(std::move(lie_x), std::move(d_ix)), std::move(br));
            }
            Expr d_lx = mk_op(OpKind::cov_d, "", mk_op(OpKind::lie, a.sym, ex, reg), reg);
            Expr br_f = mk_brk(mk_op(OpKind::iota, a.sym, expr_of(mk_field("F0")), reg), ex, reg);
            Expr br_w = mk_brk(mk_op(OpKind::lie, a.sym, w, reg), ex, reg);
            return expr_add(expr_add(std::move(d_lx), std::move(br_f)), std::move(br_w));
        }
        if (a.op == OpKind::lie && inner.op == OpKind::lie && a.sym == "xi" &&
            inner.sym == "xi") {
            // the square of an odd flow is half the flow of its self-bracket,
            // corrected by the doubly contracted background curvature
            Expr half_l = expr_scale(GaussRational(Rat(1, 2)),
                                     mk_op(OpKind::lie, "xixi", ex, reg));
            Expr iif0 = mk_op(OpKind::iota, "xi",
                              mk_op(OpKind::iota, "xi", expr_of(mk_field("F0")), reg), reg);
            Expr corr = expr_scale(GaussRational(Rat(-1, 2)), mk_brk(iif0, ex, reg));
            return expr_add(std::move(half_l), std::move(corr));
        }
        if (a.op == OpKind::lie && inner.op == OpKind::iota && a.sym == "xi" &&
            inner.sym == "xi") {
            Expr ixx = mk_op(OpKind::iota, "xixi", ex, reg);
            Expr il = mk_op(OpKind::iota, "xi", mk_op(OpKind::lie, "xi", ex, reg), reg);
            return expr_sub(std::move(ixx), std::move(il));
        }
        if (a.op != OpKind::cov_d && inner.op != OpKind::cov_d) {
            if (a.op == inner.op && a.sym == inner.sym && a.op == OpKind::iota &&
                (reg.info(a.sym).ghost & 1) == 0)
                return expr_zero();
            int oo = op_order(a.op, a.sym, reg), oi = op_order(inner.op, inner.sym, reg);
            bool swappable = same_flow(a.sym, inner.sym);
            if (swappable && (oo > oi || (oo == oi && a.sym > inner.sym))) {
                OpChar ci = op_char(inner.op, inner.sym, reg);
                int s = pow_sign(ch.kappa * ci.kappa + ch.mu * ci.mu);
                Expr swapped = mk_op(inner.op, inner.sym, mk_op(a.op, a.sym, ex, reg), reg);
                return expr_scale(GaussRational(s), std::move(swapped));
            }
        }
        if (auto r = reduce(inner, reg)) return mk_op(a.op, a.sym, *r, reg);
        return std::nullopt;
    }
    if (arg.kind == AtomKind::bracket) {
        const Atom& x = arg.args[0];
        const Atom& y = arg.args[1];
        Expr px = mk_op(a.op, a.sym, expr_of(x), reg);
        Expr py = mk_op(a.op, a.sym, expr_of(y), reg);
        Expr t1 = mk_brk(px, expr_of(y), reg);
        Expr t2 = mk_brk(expr_of(x), py, reg);
        int s = pass_sign(ch, degrees(x, reg));
        return expr_add(std::move(t1), expr_scale(GaussRational(s), std::move(t2)));
    }
    if (arg.kind == AtomKind::bilinear) {
        const Atom& A = arg.args[0];
        const Atom& B = arg.args[1];
        Expr pa = mk_op(a.op, a.sym, expr_of(A), reg);
        Expr pb = mk_op(a.op, a.sym, expr_of(B), reg);
        Expr t1 = mk_bil(pa, arg.gamma, expr_of(B), reg);
        Expr t2 = mk_bil(expr_of(A), arg.gamma, pb, reg);
        int s = bil_cross_sign(ch, degrees(A, reg), arg.gamma);
        return expr_add(std::move(t1), expr_scale(GaussRational(s), std::move(t2)));
    }
    return std::nullopt;
}

inline std::optional<Expr> reduce(const Atom& a, const Registry& reg) {
    switch (a.kind) {
        case AtomKind::field: return std::nullopt;
        case AtomKind::op: return reduce_op(a, reg);
        case AtomKind::bracket: {
            if (auto r0 = reduce(a.args[0], reg)) return mk_brk(*r0, expr_of(a.args[1]), reg);
            if (auto r1 = reduce(a.args[1], reg)) return mk_brk(expr_of(a.args[0]), *r1, reg);
            Expr r = mk_brk(expr_of(a.args[0]), expr_of(a.args[1]), reg);
            if (r.terms.size() == 1 && r.terms[0].factors.size() == 1 &&
                r.terms[0].factors[0] == a && r.terms[0].coef == GaussRational(1))
                return std::nullopt;
            return r;
        }
        case AtomKind::bilinear: {
            if (auto r0 = reduce(a.args[0], reg))
                return mk_bil(*r0, a.gamma, expr_of(a.args[1]), reg);
            if (auto r1 = reduce(a.args[1], reg))
                return mk_bil(expr_of(a.args[0]), a.gamma, *r1, reg);
            Expr r = mk_bil(expr_of(a.args[0]), a.gamma, expr_of(a.args[1]), reg);
            if (r.terms.size() == 1 && r.terms[0].factors.size() == 1 &&
                r.terms[0].factors[0] == a && r.terms[0].coef == GaussRational(1))
                return std::nullopt;
            return r;
        }
    }
    return std::nullopt;
}

} // namespace detail

struct NormOptions {
    std::size_t term_ceiling = 1000000;
};

inline Expr normalize(Expr in, const Registry& reg, NormOptions opt = {}) {
    std::vector<Term> work = std::move(in.terms);
    std::map<std::string, Term> out;
    std::size_t live = work.size();
    while (!work.empty()) {
        Term t = std::move(work.back());
        work.pop_back();
        --live;
        if (t.coef.is_zero()) continue;
        Deg total = list_degrees(t.factors, reg);
        if (total.k > reg.dim() || total.lv > 4) continue;
        bool has_e = false, has_vker = false;
        for (auto& f : t.factors)
            if (f.kind == AtomKind::field) {
                if (f.sym == "e") has_e = true;
                if (f.sym == "Vker") has_vker = true;
            }
        if (has_e && has_vker) continue;
        bool reduced = false;
        for (std::size_t i = 0; i < t.factors.size() && !reduced; ++i) {
            if (auto r = detail::reduce(t.factors[i], reg)) {
                reduced = true;
                for (auto& rt : r->terms) {
                    Term nt{t.coef * rt.coef, {}};
                    nt.factors.assign(t.factors.begin(), t.factors.begin() + long(i));
                    nt.factors.insert(nt.factors.end(), rt.factors.begin(), rt.factors.end());
                    nt.factors.insert(nt.factors.end(), t.factors.begin() + long(i) + 1,
                                      t.factors.end());
                    work.push_back(std::move(nt));
                    ++live;
                }
            }
        }
        if (reduced) {
            if (live + out.size() > opt.term_ceiling) throw term_ceiling_error(live + out.size());
            continue;
        }
        int s = koszul_sort(t.factors, reg);
        if (s == 0) continue;
        t.coef = t.coef * GaussRational(s);
        std::string sig = term_signature(t);
        auto it = out.find(sig);
        if (it == out.end()) {
            out.emplace(std::move(sig), std::move(t));
            if (out.size() > opt.term_ceiling) throw term_ceiling_error(out.size());
        } else {
            it->second.coef = it->second.coef + t.coef;
        }
    }
    Expr result;
    for (auto& [sig, t] : out)
        if (!t.coef.is_zero()) result.terms.push_back(std::move(t));
    return result;
}

inline bool expr_is_zero(const Expr& e) { return e.terms.empty(); }

inline bool expr_equal_normalized(const Expr& a, const Expr& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
        if (!(a.terms[i].coef == b.terms[i].coef)) return false;
        if (!(a.terms[i].factors == b.terms[i].factors)) return false;
    }
    return true;
}

// keep only top-degree pieces, the ones a density integral can see
inline Expr integrand_project(Expr e, const Registry& reg) {
    Expr out;
    for (auto& t : e.terms) {
        Deg d = list_degrees(t.factors, reg);
        if (d.k == reg.dim() && d.lv == 4) out.terms.push_back(std::move(t));
    }
    return out;
}

// ---- public operator application -----------------------------------------

inline Expr apply_d_omega(const Expr& e, const Registry& reg, NormOptions opt = {}) {
    return normalize(mk_op(OpKind::cov_d, "", e, reg), reg, opt);
}

// derivative at the frozen background connection
inline Expr apply_d_background(const Expr& e, const Registry& reg, NormOptions opt = {}) {
    Expr d = mk_op(OpKind::cov_d, "", e, reg);
    Expr br = mk_brk(expr_of(mk_field("w")), e, reg);
    return normalize(expr_sub(std::move(d), std::move(br)), reg, opt);
}

inline Expr apply_iota(const std::string& vf, const Expr& e, const Registry& reg,
                       NormOptions opt = {}) {
    return normalize(mk_op(OpKind::iota, vf, e, reg), reg, opt);
}

inline Expr apply_lie(const std::string& vf, const Expr& e, const Registry& reg,
                      NormOptions opt = {}) {
    return normalize(mk_op(OpKind::lie, vf, e, reg), reg, opt);
}

// ---- grammar --------------------------------------------------------------

struct parse_error : std::runtime_error {
    std::size_t offset;
    parse_error(const std::string& msg, std::size_t off)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

namespace detail {

struct Parser {
    const std::string& s;
    const Registry& reg;
    std::size_t pos = 0;

    Parser(const std::string& src, const Registry& r) : s(src), reg(r) {}

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n')) ++pos;
    }

    bool peek_char(char c) {
        skip_ws();
        return pos < s.size() && s[pos] == c;
    }

    void expect_char(char c) {
        skip_ws();
        if (pos >= s.size() || s[pos] != c)
            throw parse_error(std::string("expected '") + c + "'", pos);
        ++pos;
    }

    static bool sym_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool sym_cont(char c) { return sym_start(c) || (c >= '0' && c <= '9'); }

    std::string read_sym() {
        skip_ws();
        if (pos >= s.size() || !sym_start(s[pos])) throw parse_error("expected symbol", pos);
        std::size_t b = pos;
        while (pos < s.size() && sym_cont(s[pos])) ++pos;
        return s.substr(b, pos - b);
    }

    Rat read_rational() {
        skip_ws();
        std::size_t b = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == b) throw parse_error("expected number", pos);
        Rat num(s.substr(b, pos - b));
        if (pos < s.size() && s[pos] == '/') {
            ++pos;
            std::size_t d = pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
            if (pos == d) throw parse_error("expected denominator", pos);
            num /= Rat(s.substr(d, pos - d));
        }
        return num;
    }

    bool starts_factor() {
        skip_ws();
        if (pos >= s.size()) return false;
        return sym_start(s[pos]) || s[pos] == '<';
    }

    // optional leading coefficient "q*" or "q+ri*" with an i-suffix marking
    // the imaginary part
    std::optional<GaussRational> try_coef() {
        skip_ws();
        if (pos >= s.size() || !(s[pos] >= '0' && s[pos] <= '9')) return std::nullopt;
        std::size_t save = pos;
        Rat r1 = read_rational();
        bool imag1 = pos < s.size() && s[pos] == 'i';
        if (imag1) ++pos;
        GaussRational c = imag1 ? GaussRational(Rat(0), r1) : GaussRational(r1);
        skip_ws();
        if (!imag1 && pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
            std::size_t save2 = pos;
            int sg = s[pos] == '-' ? -1 : 1;
            ++pos;
            skip_ws();
            if (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                Rat r2 = read_rational();
                if (pos < s.size() && s[pos] == 'i') {
                    ++pos;
                    c = GaussRational(r1, sg < 0 ? Rat(-r2) : r2);
                } else {
                    pos = save2;
                }
            } else {
                pos = save2;
            }
        }
        skip_ws();
        if (pos < s.size() && s[pos] == '*') {
            ++pos;
            return c;
        }
        pos = save;
        return std::nullopt;
    }

    std::string read_vf() {
        std::size_t at = pos;
        std::string v = read_sym();
        if (!reg.has(v) || reg.info(v).bundle != Bundle::vectorfield)
            throw parse_error("not a vector field: " + v, at);
        return v;
    }

    Expr parse_factor() {
        skip_ws();
        std::size_t at = pos;
        if (peek_char('<')) {
            ++pos;
            std::size_t ea = pos;
            std::string ename = read_sym();
            if (ename != "e") throw parse_error("pairing expects e", ea);
            expect_char(',');
            Expr inner = parse_sum();
            expect_char('>');
            return expr_mul(expr_of(mk_field("e")), inner);
        }
        std::string sym = read_sym();
        if (sym == "d" && peek_char('[')) {
            ++pos;
            std::size_t ca = pos;
            std::string conn = read_sym();
            expect_char(']');
            expect_char('(');
            Expr inner = parse_sum();
            expect_char(')');
            if (conn == "w") return mk_op(OpKind::cov_d, "", inner, reg);
            if (conn == "w0")
                return expr_sub(mk_op(OpKind::cov_d, "", inner, reg),
                                mk_brk(expr_of(mk_field("w")), inner, reg));
            throw parse_error("unknown connection: " + conn, ca);
        }
        if (sym == "i" && peek_char('[')) {
            ++pos;
            std::string vf = read_vf();
            expect_char(']');
            expect_char('(');
            Expr inner = parse_sum();
            expect_char(')');
            return mk_op(OpKind::iota, vf, inner, reg);
        }
        if (sym == "L" && peek_char('[')) {
            ++pos;
            std::string vf = read_vf();
            expect_char(',');
            std::size_t ca = pos;
            std::string conn = read_sym();
            expect_char(']');
            expect_char('(');
            Expr inner = parse_sum();
            expect_char(')');
            Expr lie = mk_op(OpKind::lie, vf, inner, reg);
            if (conn == "w0") return lie;
            if (conn == "w") {
                Expr iw = mk_op(OpKind::iota, vf, expr_of(mk_field("w")), reg);
                return expr_add(std::move(lie), mk_brk(iw, inner, reg));
            }
            throw parse_error("unknown connection: " + conn, ca);
        }
        if (sym == "F" && peek_char('[')) {
            ++pos;
            std::size_t ca = pos;
            std::string conn = read_sym();
            expect_char(']');
            if (conn == "w") return curvature_expr(reg);
            if (conn == "w0") return expr_of(mk_field("F0"));
            throw parse_error("unknown connection: " + conn, ca);
        }
        if (sym == "br" && peek_char('(')) {
            ++pos;
            Expr a = parse_sum();
            expect_char(',');
            Expr b = parse_sum();
            expect_char(')');
            return mk_brk(a, b, reg);
        }
        if (sym == "bar" || (sym.size() == 2 && sym[0] == 'G' && sym[1] >= '0' && sym[1] <= '3'))
            throw parse_error("bilinear fragment outside a term", at);
        if (!reg.has(sym)) throw parse_error("unknown symbol: " + sym, at);
        if (reg.info(sym).bundle == Bundle::vectorfield)
            throw parse_error("vector field cannot stand as a factor: " + sym, at);
        return expr_of(mk_field(sym));
    }

    // a term is a juxtaposed or ^-joined chain of factors; "bar(A) Gn B"
    // folds into a single gamma bilinear
    Expr parse_term() {
        Expr acc = expr_one();
        GaussRational coef(1);
        if (auto c = try_coef()) coef = *c;
        bool any = false;
        std::optional<Expr> pending_bar;
        int pending_gamma = -1;
        std::size_t bar_at = 0;
        while (true) {
            skip_ws();
            if (peek_char('^')) {
                ++pos;
                skip_ws();
            } else if (any && !starts_factor()) {
                break;
            }
            if (!starts_factor()) {
                if (!any) throw parse_error("expected factor", pos);
                break;
            }
            std::size_t at = pos;
            // bilinear staging
            std::size_t save = pos;
            std::string head = read_sym_soft();
            if (head == "bar" && peek_char('(')) {
                if (pending_bar) throw parse_error("nested barred factor", at);
                ++pos;
                Expr inner = parse_factor();
                expect_char(')');
                pending_bar = inner;
                pending_gamma = -1;
                bar_at = at;
                any = true;
                continue;
            }
            if (head.size() == 2 && head[0] == 'G' && head[1] >= '0' && head[1] <= '3') {
                if (!pending_bar || pending_gamma >= 0)
                    throw parse_error("gamma factor without a barred partner", at);
                pending_gamma = head[1] - '0';
                continue;
            }
            pos = save;
            Expr f = parse_factor();
            if (pending_bar) {
                if (pending_gamma < 0)
                    throw parse_error("expected gamma power after barred factor", at);
                acc = expr_mul(acc, mk_bil(*pending_bar, pending_gamma, f, reg));
                pending_bar.reset();
                pending_gamma = -1;
            } else {
                acc = expr_mul(acc, f);
            }
            any = true;
        }
        if (pending_bar) throw parse_error("unfinished bilinear", bar_at);
        return expr_scale(coef, acc);
    }

    std::string read_sym_soft() {
        skip_ws();
        if (pos >= s.size() || !sym_start(s[pos])) return "";
        std::size_t b = pos;
        while (pos < s.size() && sym_cont(s[pos])) ++pos;
        return s.substr(b, pos - b);
    }

    Expr parse_sum() {
        skip_ws();
        bool neg = false;
        if (peek_char('-')) {
            ++pos;
            neg = true;
        } else if (peek_char('+')) {
            ++pos;
        }
        Expr acc = parse_term();
        if (neg) acc = expr_neg(std::move(acc));
        while (true) {
            skip_ws();
            if (pos >= s.size() || (s[pos] != '+' && s[pos] != '-')) break;
            bool m = s[pos] == '-';
            ++pos;
            Expr t = parse_term();
            acc = expr_add(std::move(acc), m ? expr_neg(std::move(t)) : std::move(t));
        }
        return acc;
    }
};

} // namespace detail

inline Expr parse_expr(const std::string& src, const Registry& reg, NormOptions opt = {}) {
    detail::Parser p(src, reg);
    p.skip_ws();
    if (p.pos >= src.size()) throw parse_error("empty expression", 0);
    if (src.substr(p.pos) == "0") return expr_zero();
    Expr e = p.parse_sum();
    p.skip_ws();
    if (p.pos != src.size()) throw parse_error("trailing input", p.pos);
    return normalize(std::move(e), reg, opt);
}

inline std::string print_atom(const Atom& a) {
    switch (a.kind) {
        case AtomKind::field: return a.sym;
        case AtomKind::op:
            if (a.op == OpKind::cov_d) return "d[w](" + print_atom(a.args[0]) + ")";
            if (a.op == OpKind::iota) return "i[" + a.sym + "](" + print_atom(a.args[0]) + ")";
            return "L[" + a.sym + ",w0](" + print_atom(a.args[0]) + ")";
        case AtomKind::bracket:
            return "br(" + print_atom(a.args[0]) + "," + print_atom(a.args[1]) + ")";
        case AtomKind::bilinear:
            return "bar(" + print_atom(a.args[0]) + ")^G" + std::to_string(a.gamma) + "^" +
                   print_atom(a.args[1]);
    }
    return "?";
}

inline std::string print_term(const Term& t, bool leading) {
    GaussRational c = t.coef;
    std::string out;
    bool neg = c.re < 0 || (c.re == 0 && c.im < 0);
    if (neg) c = GaussRational(-1) * c;
    out += leading ? (neg ? "-" : "") : (neg ? " - " : " + ");
    std::string body;
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
        if (i) body += "^";
        body += print_atom(t.factors[i]);
    }
    bool unit = c == GaussRational(1);
    if (body.empty()) return out + c.str();
    if (unit) return out + body;
    return out + c.str() + "*" + body;
}

inline std::string print_expr(const Expr& e) {
    if (e.terms.empty()) return "0";
    std::string out;
    for (std::size_t i = 0; i < e.terms.size(); ++i) out += print_term(e.terms[i], i == 0);
    return out;
}

// ---- variational calculus -------------------------------------------------

namespace detail {

inline bool contains_delta(const Atom& a) {
    if (a.kind == AtomKind::field) return a.sym.rfind("delta_", 0) == 0;
    for (auto& x : a.args)
        if (contains_delta(x)) return true;
    return false;
}

// sum over single-occurrence replacements of the named field inside one atom
inline Expr vary_atom(const Atom& a, const std::string& sym, const Registry& reg) {
    switch (a.kind) {
        case AtomKind::field:
            if (a.sym == sym) return expr_of(mk_field("delta_" + sym));
            return expr_zero();
        case AtomKind::op: {
            Expr inner = vary_atom(a.args[0], sym, reg);
            Expr out = expr_is_zero(inner) ? expr_zero() : mk_op(a.op, a.sym, inner, reg);
            if (a.op == OpKind::cov_d && sym == "w") {
                // the working connection itself varies
                Expr br = mk_brk(expr_of(mk_field("delta_w")), expr_of(a.args[0]), reg);
                out = expr_add(std::move(out), std::move(br));
            }
            return out;
        }
        case AtomKind::bracket: {
            Expr va = vary_atom(a.args[0], sym, reg);
            Expr vb = vary_atom(a.args[1], sym, reg);
            Expr out = expr_zero();
            if (!expr_is_zero(va)) out = expr_add(std::move(out), mk_brk(va, expr_of(a.args[1]), reg));
            if (!expr_is_zero(vb)) out = expr_add(std::move(out), mk_brk(expr_of(a.args[0]), vb, reg));
            return out;
        }
        case AtomKind::bilinear: {
            Expr va = vary_atom(a.args[0], sym, reg);
            Expr vb = vary_atom(a.args[1], sym, reg);
            Expr out = expr_zero();
            if (!expr_is_zero(va))
                out = expr_add(std::move(out), mk_bil(va, a.gamma, expr_of(a.args[1]), reg));
            if (!expr_is_zero(vb))
                out = expr_add(std::move(out), mk_bil(expr_of(a.args[0]), a.gamma, vb, reg));
            return out;
        }
    }
    return expr_zero();
}

inline Expr vary_expr(const Expr& e, const std::string& sym, const Registry& reg) {
    Expr out;
    for (auto& t : e.terms)
        for (std::size_t i = 0; i < t.factors.size(); ++i) {
            Expr v = vary_atom(t.factors[i], sym, reg);
            for (auto& vt : v.terms) {
                Term nt{t.coef * vt.coef, {}};
                nt.factors.assign(t.factors.begin(), t.factors.begin() + long(i));
                nt.factors.insert(nt.factors.end(), vt.factors.begin(), vt.factors.end());
                nt.factors.insert(nt.factors.end(), t.factors.begin() + long(i) + 1,
                                  t.factors.end());
                out.terms.push_back(std::move(nt));
            }
        }
    return out;
}

// integration by parts against a top-degree density: strip decorations and
// bracket walls off the marked occurrence until it stands bare (or bare
// inside a bilinear slot, where it compares in place)
inline Expr euler_strip(Expr varied, const Registry& reg, NormOptions opt) {
    std::vector<Term> work = std::move(varied.terms);
    Expr done;
    std::size_t guard = 0;
    while (!work.empty()) {
        if (++guard > opt.term_ceiling) throw term_ceiling_error(guard);
        Term t = std::move(work.back());
        work.pop_back();
        if (t.coef.is_zero()) continue;
        int idx = -1;
        for (std::size_t i = 0; i < t.factors.size(); ++i)
            if (contains_delta(t.factors[i])) {
                idx = int(i);
                break;
            }
        if (idx < 0) {
            done.terms.push_back(std::move(t));
            continue;
        }
        Atom f = t.factors[std::size_t(idx)];
        if (f.kind == AtomKind::field) {
            done.terms.push_back(std::move(t));
            continue;
        }
        // bring the marked factor to the front, then one surgery step
        GaussRational coef = t.coef;
        Deg df = degrees(f, reg);
        for (int j = 0; j < idx; ++j)
            coef = coef * GaussRational(wedge_swap_sign(df, degrees(t.factors[std::size_t(j)], reg)));
        std::vector<Atom> rest;
        for (std::size_t j = 0; j < t.factors.size(); ++j)
            if (int(j) != idx) rest.push_back(t.factors[j]);
        Expr rest_expr{{Term{GaussRational(1), rest}}};
        if (f.kind == AtomKind::op) {
            const Atom& y = f.args[0];
            OpChar ch = op_char(f.op, f.sym, reg);
            int s = -pass_sign(ch, degrees(y, reg));
            Expr tail = mk_op(f.op, f.sym, rest_expr, reg);
            Expr stepped = expr_mul(expr_of(y), tail);
            for (auto& st : stepped.terms) {
                st.coef = st.coef * coef * GaussRational(s);
                work.push_back(std::move(st));
            }
            continue;
        }
        if (f.kind == AtomKind::bracket) {
            Atom x = f.args[0], y = f.args[1];
            if (!contains_delta(y)) {
                Deg dx = degrees(x, reg), dy = degrees(y, reg);
                coef = coef * GaussRational(-pow_sign(dx.k * dy.k + dx.m() * dy.m()));
                std::swap(x, y);
            }
            Deg dx = degrees(x, reg), dy = degrees(y, reg);
            if (rest.empty()) continue; // a lone bracket pairs to zero at the top
            int s = -pow_sign(dx.k * dy.k + dx.m() * dy.m());
            Expr tail = mk_brk(expr_of(x), rest_expr, reg);
            Expr stepped = expr_mul(expr_of(y), tail);
            for (auto& st : stepped.terms) {
                st.coef = st.coef * coef * GaussRational(s);
                work.push_back(std::move(st));
            }
            continue;
        }
        // bilinear: canonicalize the marked side to the right slot, then
        // reflect its outer decoration to the other slot
        Atom A = f.args[0], B = f.args[1];
        int gamma = f.gamma;
        if (contains_delta(A) && !contains_delta(B)) {
            Deg dA = degrees(A, reg), dB = degrees(B, reg);
            coef = coef * GaussRational(flip_total(gamma, dA, dB));
            std::swap(A, B);
        }
        if (B.kind == AtomKind::field) {
            Term nt{coef, rest};
            nt.factors.push_back(Atom{AtomKind::bilinear, "", OpKind::cov_d, gamma, {A, B}});
            done.terms.push_back(std::move(nt));
            continue;
        }
        if (B.kind == AtomKind::op) {
            const Atom& y = B.args[0];
            OpChar ch = op_char(B.op, B.sym, reg);
            int s = bil_cross_sign(ch, degrees(A, reg), gamma);
            Expr whole = mk_op(B.op, B.sym, mk_bil(expr_of(A), gamma, expr_of(y), reg), reg);
            Expr other = mk_bil(mk_op(B.op, B.sym, expr_of(A), reg), gamma, expr_of(y), reg);
            Expr rep = expr_scale(GaussRational(s), expr_sub(std::move(whole), std::move(other)));
            Expr stepped = expr_mul(rep, rest_expr);
            for (auto& st : stepped.terms) {
                st.coef = st.coef * coef;
                work.push_back(std::move(st));
            }
            continue;
        }
        if (B.kind == AtomKind::bracket) {
            Atom al = B.args[0], y = B.args[1];
            if (!contains_delta(y)) {
                Deg d1 = degrees(al, reg), d2 = degrees(y, reg);
                coef = coef * GaussRational(-pow_sign(d1.k * d2.k + d1.m() * d2.m()));
                std::swap(al, y);
            }
            Deg dal = degrees(al, reg), dA = degrees(A, reg);
            int s = pow_sign(dal.k * dA.k + dal.m() * (dA.gp + gamma));
            Expr whole = mk_brk(expr_of(al), mk_bil(expr_of(A), gamma, expr_of(y), reg), reg);
            Expr other = mk_bil(mk_brk(expr_of(al), expr_of(A), reg), gamma, expr_of(y), reg);
            Expr rep = expr_scale(GaussRational(s), expr_sub(std::move(whole), std::move(other)));
            Expr stepped = expr_mul(rep, rest_expr);
            for (auto& st : stepped.terms) {
                st.coef = st.coef * coef;
                work.push_back(std::move(st));
            }
            continue;
        }
        throw std::logic_error("euler_strip: unexpected marked slot shape");
    }
    return done;
}

} // namespace detail

// the marked first variation, integrated by parts until every mark stands
// undecorated; terms keep the delta twin as an ordinary factor
inline Expr variational_derivative(const Expr& f, const std::string& sym, const Registry& reg,
                                   NormOptions opt = {}) {
    if (!reg.has(sym)) throw unknown_symbol(sym);
    Expr varied = normalize(detail::vary_expr(normalize(f, reg, opt), sym, reg), reg, opt);
    Expr stripped = detail::euler_strip(std::move(varied), reg, opt);
    return normalize(std::move(stripped), reg, opt);
}

struct ModDResult {
    bool equal = true;
    std::string field;
    std::string witness;
};

// two densities agree up to exact terms iff every first variation vanishes
// identically; variations annihilate exact terms, and a density with all
// variations zero and no field-free part is itself exact
inline ModDResult equals_mod_d(const Expr& f, const Expr& g, const Registry& reg,
                               NormOptions opt = {}) {
    Expr r = normalize(expr_sub(f, g), reg, opt);
    for (auto& sym : reg.field_names()) {
        const FieldInfo& fi = reg.info(sym);
        if (fi.bundle == Bundle::vectorfield) continue;
        if (sym.rfind("delta_", 0) == 0) continue;
        Expr e = variational_derivative(r, sym, reg, opt);
        if (!expr_is_zero(e))
            return {false, sym, print_term(e.terms[0], true)};
    }
    return {true, "", ""};
}

// euler coordinates: one exact rational per (field, term shape); densities
// equal mod d iff the coordinate vectors match
inline std::map<std::string, GaussRational> euler_coords(const Expr& r, const Registry& reg,
                                                         NormOptions opt = {}) {
    std::map<std::string, GaussRational> out;
    for (auto& sym : reg.field_names()) {
        const FieldInfo& fi = reg.info(sym);
        if (fi.bundle == Bundle::vectorfield) continue;
        if (sym.rfind("delta_", 0) == 0) continue;
        Expr e = variational_derivative(r, sym, reg, opt);
        for (auto& t : e.terms) out[sym + "\x1f" + term_signature(t)] = t.coef;
    }
    return out;
}

// does the target sit in the exact rational span of the relation densities,
// modulo exact terms? solved in euler coordinates
inline std::optional<std::vector<GaussRational>> solve_in_span(
    const Expr& target, const std::vector<Expr>& relations, const Registry& reg,
    NormOptions opt = {}) {
    auto tc = euler_coords(target, reg, opt);
    std::vector<std::map<std::string, GaussRational>> rc;
    std::set<std::string> keys;
    for (auto& [k, v] : tc) keys.insert(k);
    for (auto& r : relations) {
        rc.push_back(euler_coords(r, reg, opt));
        for (auto& [k, v] : rc.back()) keys.insert(k);
    }
    if (keys.empty()) return std::vector<GaussRational>(relations.size(), GaussRational(0));
    if (relations.empty()) return std::nullopt;
    Matrix m(int(keys.size()), int(relations.size()));
    std::vector<GaussRational> rhs;
    int row = 0;
    for (auto& k : keys) {
        for (std::size_t j = 0; j < rc.size(); ++j) {
            auto it = rc[j].find(k);
            if (it != rc[j].end()) m.at(row, int(j)) = it->second;
        }
        auto it = tc.find(k);
        rhs.push_back(it == tc.end() ? GaussRational(0) : it->second);
        ++row;
    }
    return solve(m, rhs);
}

// ---- jet bridge -------------------------------------------------------------

struct JetAssignment {
    int base_dim = 3;
    JetForm omega0 = jf_zero(3);
    std::map<std::string, JetForm> fields;
    std::map<std::string, std::vector<JetPoly>> vfs;
};

inline JetForm eval_expr(const Expr& e, const JetAssignment& asn, const Registry& reg);

inline JetForm eval_atom(const Atom& a, const JetAssignment& asn, const Registry& reg) {
    switch (a.kind) {
        case AtomKind::field: {
            auto it = asn.fields.find(a.sym);
            if (it == asn.fields.end()) throw unknown_symbol("jet assignment: " + a.sym);
            return it->second;
        }
        case AtomKind::op: {
            JetForm x = eval_atom(a.args[0], asn, reg);
            if (a.op == OpKind::cov_d) {
                JetForm omega = asn.omega0;
                auto itw = asn.fields.find("w");
                if (itw != asn.fields.end()) omega = jf_add(omega, itw->second);
                return jf_D(omega, x);
            }
            if (a.sym == "xixi") {
                const auto& xi = asn.vfs.at("xi");
                auto iz = [&](const JetForm& y) {
                    return jf_add(jf_lie_plus(xi, asn.omega0, jf_iota(xi, y)),
                                  jf_iota(xi, jf_lie_plus(xi, asn.omega0, y)));
                };
                if (a.op == OpKind::iota) return iz(x);
                return jf_add(iz(jf_D(asn.omega0, x)), jf_D(asn.omega0, iz(x)));
            }
            const auto& vf = asn.vfs.at(a.sym);
            if (a.op == OpKind::iota) return jf_iota(vf, x);
            return jf_lie_plus(vf, asn.omega0, x);
        }
        case AtomKind::bracket: {
            JetForm x = eval_atom(a.args[0], asn, reg);
            JetForm y = eval_atom(a.args[1], asn, reg);
            if (y.spinor != SpinorSlot::none) return jf_ad(x, y);
            return jf_bider(x, y);
        }
        case AtomKind::bilinear: {
            JetForm x = eval_atom(a.args[0], asn, reg);
            JetForm y = eval_atom(a.args[1], asn, reg);
            return jf_bil_n(x, a.gamma, y);
        }
    }
    throw std::logic_error("eval_atom: bad kind");
}

inline JetForm eval_expr(const Expr& e, const JetAssignment& asn, const Registry& reg) {
    std::optional<JetForm> acc;
    for (auto& t : e.terms) {
        JetForm prod = jf_zero(asn.base_dim);
        prod.add_term({0, 0, -1}, jp_scalar(GaussRational(1)));
        for (auto& f : t.factors) prod = jf_wedge(prod, eval_atom(f, asn, reg));
        prod = jf_scale(t.coef, prod);
        acc = acc ? jf_add(*acc, prod) : prod;
    }
    return acc ? *acc : jf_zero(asn.base_dim);
}

} // namespace veriform
