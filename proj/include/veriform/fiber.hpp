#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "grassmann.hpp"
#include "lambda.hpp"
#include "linalg.hpp"
#include "report.hpp"
#include "rng.hpp"

namespace veriform {

// Fiberwise exterior algebra: coefficients in a pointwise frame, form part
// over the base (dimension 3 or 4) and a Lambda(V) part over the fixed
// 4-dimensional internal space. dx generators commute with v generators;
// each slot carries its own Koszul sign.

struct DegenerateFrame : std::runtime_error {
    explicit DegenerateFrame(const std::string& what) : std::runtime_error(what) {}
};

inline int binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return int(r);
}

// strictly increasing multi-indices over n letters as bitmasks, enumerated in
// lexicographic tuple order: n=4, k=2 gives 01, 02, 03, 12, 13, 23
inline const std::vector<std::uint8_t>& index_masks(int n, int k) {
    static std::map<std::pair<int, int>, std::vector<std::uint8_t>> cache;
    auto key = std::make_pair(n, k);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<std::uint8_t> out;
    if (k >= 0 && k <= n) {
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            std::uint8_t m = 0;
            for (int i : idx) m |= std::uint8_t(std::uint8_t(1) << i);
            out.push_back(m);
            if (k == 0) break;
            int p = k - 1;
            while (p >= 0 && idx[p] == n - k + p) --p;
            if (p < 0) break;
            ++idx[p];
            for (int q = p + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
        }
    }
    return cache.emplace(key, std::move(out)).first->second;
}

inline int mask_pos(int n, int k, std::uint8_t m) {
    const auto& tab = index_masks(n, k);
    for (int i = 0; i < int(tab.size()); ++i)
        if (tab[i] == m) return i;
    throw std::logic_error("mask_pos: mask not of the requested degree");
}

enum class SpinorSlot { none, column, row };

// key: (dx mask, v mask, spinor component); zero coefficients are pruned
using FiberKey = std::tuple<std::uint8_t, std::uint8_t, int>;

struct FiberForm {
    int base_dim = 4;
    int k = 0;
    int l = 0;
    SpinorSlot spinor = SpinorSlot::none;
    int parity = 0;  // bookkeeping tag for odd coefficients; inert here
    std::map<FiberKey, GaussRational> c;

    bool is_zero() const { return c.empty(); }

    void add_term(std::uint8_t km, std::uint8_t vm, int sp, const GaussRational& x) {
        if (x.is_zero()) return;
        FiberKey key{km, vm, sp};
        auto it = c.find(key);
        if (it == c.end()) {
            c.emplace(key, x);
            return;
        }
        it->second += x;
        if (it->second.is_zero()) c.erase(it);
    }

    friend bool operator==(const FiberForm& a, const FiberForm& b) {
        return a.base_dim == b.base_dim && a.k == b.k && a.l == b.l &&
               a.spinor == b.spinor && a.c == b.c;
    }
};

inline int fiber_dim(int base_dim, int k, int l, SpinorSlot s) {
    return binom(base_dim, k) * binom(4, l) * (s == SpinorSlot::none ? 1 : 4);
}

// one homogeneous fiber, basis enumerated lexicographically by
// (dx multi-index, v multi-index, spinor component)
struct FiberShape {
    int base_dim = 4;
    int k = 0;
    int l = 0;
    SpinorSlot spinor = SpinorSlot::none;

    int dim() const { return fiber_dim(base_dim, k, l, spinor); }

    int spin_count() const { return spinor == SpinorSlot::none ? 1 : 4; }

    FiberForm basis(int idx) const {
        int ns = spin_count();
        int nl = binom(4, l);
        int sp = idx % ns;
        int li = (idx / ns) % nl;
        int ki = idx / (ns * nl);
        FiberForm f;
        f.base_dim = base_dim;
        f.k = k;
        f.l = l;
        f.spinor = spinor;
        f.add_term(index_masks(base_dim, k)[ki], index_masks(4, l)[li], sp, GaussRational(1));
        return f;
    }

    int position(const FiberKey& key) const {
        auto [km, vm, sp] = key;
        int ki = mask_pos(base_dim, k, km);
        int li = mask_pos(4, l, vm);
        return (ki * binom(4, l) + li) * spin_count() + sp;
    }

    std::string str() const {
        std::string s = "(" + std::to_string(k) + "," + std::to_string(l) + ")";
        if (spinor == SpinorSlot::column) s += "+spinor";
        if (spinor == SpinorSlot::row) s += "+cospinor";
        return s;
    }
};

inline FiberForm ff_zero(int base_dim, int k, int l, SpinorSlot s = SpinorSlot::none) {
    FiberForm f;
    f.base_dim = base_dim;
    f.k = k;
    f.l = l;
    f.spinor = s;
    return f;
}

inline FiberForm ff_add(FiberForm a, const FiberForm& b) {
    if (a.base_dim != b.base_dim || a.k != b.k || a.l != b.l || a.spinor != b.spinor)
        throw std::invalid_argument("ff_add: degree mismatch");
    for (auto& [key, x] : b.c) {
        auto [km, vm, sp] = key;
        a.add_term(km, vm, sp, x);
    }
    return a;
}

inline FiberForm ff_sub(FiberForm a, const FiberForm& b) {
    if (a.base_dim != b.base_dim || a.k != b.k || a.l != b.l || a.spinor != b.spinor)
        throw std::invalid_argument("ff_sub: degree mismatch");
    for (auto& [key, x] : b.c) {
        auto [km, vm, sp] = key;
        a.add_term(km, vm, sp, -x);
    }
    return a;
}

inline FiberForm ff_scale(const GaussRational& s, FiberForm a) {
    if (s.is_zero()) {
        a.c.clear();
        return a;
    }
    for (auto& [key, x] : a.c) x *= s;
    return a;
}

// wedge on both slots; merge signs act per slot and dx's commute with v's.
// Degrees beyond (base_dim, 4) yield the canonical zero form of that degree.
inline FiberForm wedge(const FiberForm& a, const FiberForm& b) {
    if (a.base_dim != b.base_dim) throw std::invalid_argument("wedge: base_dim mismatch");
    if (a.spinor != SpinorSlot::none && b.spinor != SpinorSlot::none)
        throw std::invalid_argument("wedge: both factors carry a spinor slot");
    FiberForm r;
    r.base_dim = a.base_dim;
    r.k = a.k + b.k;
    r.l = a.l + b.l;
    r.spinor = a.spinor != SpinorSlot::none ? a.spinor : b.spinor;
    r.parity = (a.parity + b.parity) & 1;
    for (auto& [ka, ca] : a.c) {
        auto [kma, vma, sa] = ka;
        for (auto& [kb, cb] : b.c) {
            auto [kmb, vmb, sb] = kb;
            if ((kma & kmb) || (vma & vmb)) continue;
            int s = merge_sign(kma, kmb) * merge_sign(vma, vmb);
            int sp = a.spinor != SpinorSlot::none ? sa : sb;
            r.add_term(std::uint8_t(kma | kmb), std::uint8_t(vma | vmb), sp,
                       GaussRational(s) * ca * cb);
        }
    }
    return r;
}

// interior product in the base slot; the zero map on 0-forms
inline FiberForm iota(const std::vector<GaussRational>& v, const FiberForm& s) {
    if (int(v.size()) != s.base_dim) throw std::invalid_argument("iota: vector size mismatch");
    FiberForm r = ff_zero(s.base_dim, std::max(0, s.k - 1), s.l, s.spinor);
    r.parity = s.parity;
    if (s.k == 0) return r;
    for (auto& [key, x] : s.c) {
        auto [km, vm, sp] = key;
        int below = 0;
        for (int mu = 0; mu < s.base_dim; ++mu) {
            std::uint8_t bit = std::uint8_t(std::uint8_t(1) << mu);
            if (!(km & bit)) continue;
            GaussRational coef = v[mu] * x;
            if ((below & 1)) coef = -coef;
            r.add_term(std::uint8_t(km & ~bit), vm, sp, coef);
            ++below;
        }
    }
    return r;
}

inline FiberForm iota_dir(int mu, const FiberForm& s) {
    std::vector<GaussRational> v(s.base_dim);
    v[mu] = GaussRational(1);
    return iota(v, s);
}

// Pointwise frame. e.at(mu, a) holds the coframe component with base index mu
// and internal index a; epsilon_n completes a boundary triple to a V-basis.
struct Frame {
    int base_dim = 4;
    Matrix e;
    std::array<GaussRational, 4> epsilon_n{};

    bool bulk() const { return base_dim == 4; }
};

inline Frame make_bulk_frame(const Matrix& e) {
    if (e.nr != 4 || e.nc != 4) throw std::invalid_argument("bulk frame needs a 4x4 matrix");
    if (!inverse(e)) throw DegenerateFrame("bulk coframe is not invertible");
    Frame f;
    f.base_dim = 4;
    f.e = e;
    return f;
}

inline Matrix boundary_metric(const Matrix& e) {
    Matrix g(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            GaussRational s;
            for (int a = 0; a < 4; ++a) s += e.at(i, a) * GaussRational(kEta[a]) * e.at(j, a);
            g.at(i, j) = s;
        }
    return g;
}

inline Frame make_boundary_frame(const Matrix& e, const std::array<GaussRational, 4>& eps_n) {
    if (e.nr != 3 || e.nc != 4) throw std::invalid_argument("boundary frame needs a 3x4 matrix");
    Matrix full(4, 4);
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 4; ++a) full.at(i, a) = e.at(i, a);
    for (int a = 0; a < 4; ++a) full.at(3, a) = eps_n[a];
    if (rank(full) != 4) throw DegenerateFrame("(e_1,e_2,e_3,eps_n) is not a basis of V");
    if (!inverse(boundary_metric(e))) throw DegenerateFrame("induced boundary metric degenerate");
    Frame f;
    f.base_dim = 3;
    f.e = e;
    f.epsilon_n = eps_n;
    return f;
}

// e as a (1,1) fiber element
inline FiberForm coframe(const Frame& f) {
    FiberForm r = ff_zero(f.base_dim, 1, 1);
    for (int mu = 0; mu < f.base_dim; ++mu)
        for (int a = 0; a < 4; ++a)
            r.add_term(std::uint8_t(std::uint8_t(1) << mu), std::uint8_t(std::uint8_t(1) << a),
                       0, f.e.at(mu, a));
    return r;
}

inline FiberForm epsn_form(const Frame& f) {
    if (f.bulk()) throw std::invalid_argument("epsn_form: bulk frame has no normal section");
    FiberForm r = ff_zero(3, 0, 1);
    for (int a = 0; a < 4; ++a)
        r.add_term(0, std::uint8_t(std::uint8_t(1) << a), 0, f.epsilon_n[a]);
    return r;
}

// dual components e^mu_a, stored as row a, column mu. Bulk: inverse coframe.
// Boundary: indices raised with the induced metric, e^mu_a = g^{mu nu} e^b_nu eta_{ba}.
inline Matrix dual_components(const Frame& f) {
    if (f.bulk()) {
        auto inv = inverse(f.e);
        if (!inv) throw DegenerateFrame("bulk coframe is not invertible");
        return *inv;
    }
    auto ginv = inverse(boundary_metric(f.e));
    if (!ginv) throw DegenerateFrame("induced boundary metric degenerate");
    Matrix d(4, 3);
    for (int a = 0; a < 4; ++a)
        for (int mu = 0; mu < 3; ++mu) {
            GaussRational s;
            for (int nu = 0; nu < 3; ++nu)
                s += ginv->at(mu, nu) * f.e.at(nu, a) * GaussRational(kEta[a]);
            d.at(a, mu) = s;
        }
    return d;
}

// <e, sigma> = v_a eta^{ab} e^mu_b iota_mu sigma, degree (i,j) -> (i-1,j+1)
inline FiberForm contract_e(const Frame& f, const FiberForm& s) {
    if (f.base_dim != s.base_dim) throw std::invalid_argument("contract_e: base_dim mismatch");
    if (s.k == 0) throw std::invalid_argument("contract_e: form degree is zero");
    Matrix dual = dual_components(f);
    FiberForm r = ff_zero(s.base_dim, s.k - 1, s.l + 1, s.spinor);
    r.parity = s.parity;
    for (int a = 0; a < 4; ++a) {
        std::vector<GaussRational> w(s.base_dim);
        for (int mu = 0; mu < s.base_dim; ++mu)
            w[mu] = GaussRational(kEta[a]) * dual.at(a, mu);
        FiberForm t = iota(w, s);
        std::uint8_t abit = std::uint8_t(std::uint8_t(1) << a);
        for (auto& [key, x] : t.c) {
            auto [km, vm, sp] = key;
            if (vm & abit) continue;
            int sg = merge_sign(abit, vm);
            r.add_term(km, std::uint8_t(vm | abit), sp, GaussRational(sg) * x);
        }
    }
    return r;
}

// [e, X]: dx^mu e^a_mu wedges into the base slot while v_a acts on the
// Lambda(V) slot through the pairing bracket
inline FiberForm e_bracket(const Frame& f, const FiberForm& s) {
    if (f.base_dim != s.base_dim) throw std::invalid_argument("e_bracket: base_dim mismatch");
    if (s.l == 0) throw std::invalid_argument("e_bracket: V-degree is zero");
    FiberForm r = ff_zero(s.base_dim, s.k + 1, s.l - 1, s.spinor);
    r.parity = s.parity;
    for (auto& [key, x] : s.c) {
        auto [km, vm, sp] = key;
        for (int mu = 0; mu < s.base_dim; ++mu) {
            std::uint8_t mbit = std::uint8_t(std::uint8_t(1) << mu);
            if (km & mbit) continue;
            int sdx = merge_sign(mbit, km);
            for (int a = 0; a < 4; ++a) {
                const GaussRational& ce = f.e.at(mu, a);
                if (ce.is_zero()) continue;
                for (auto& [rm, coef] : vbracket(std::uint8_t(std::uint8_t(1) << a), vm))
                    r.add_term(std::uint8_t(km | mbit), rm, sp,
                               GaussRational(sdx * coef) * ce * x);
            }
        }
    }
    return r;
}

struct MapCertificate {
    FiberShape domain;
    FiberShape codomain;
    Matrix matrix;  // codomain.dim() rows, domain.dim() columns
    int rank = 0;
    std::vector<FiberForm> kernel_basis;
    std::vector<FiberForm> image_basis;

    bool injective() const { return rank == domain.dim(); }
    bool surjective() const { return rank == codomain.dim(); }
    bool bijective() const { return injective() && surjective(); }
};

template <class Fn>
MapCertificate certify(const FiberShape& dom, const FiberShape& cod, Fn&& map) {
    MapCertificate cert;
    cert.domain = dom;
    cert.codomain = cod;
    cert.matrix = Matrix(cod.dim(), dom.dim());
    for (int j = 0; j < dom.dim(); ++j) {
        FiberForm img = map(dom.basis(j));
        if (img.k != cod.k || img.l != cod.l || img.spinor != cod.spinor)
            throw std::logic_error("certify: image degree disagrees with codomain");
        for (auto& [key, x] : img.c) cert.matrix.at(cod.position(key), j) = x;
    }
    Rref rr = rref(cert.matrix);
    cert.rank = rr.rank;
    for (auto& v : kernel_basis(cert.matrix)) {
        FiberForm kf = ff_zero(dom.base_dim, dom.k, dom.l, dom.spinor);
        for (int j = 0; j < dom.dim(); ++j)
            if (!v[j].is_zero()) kf = ff_add(kf, ff_scale(v[j], dom.basis(j)));
        cert.kernel_basis.push_back(std::move(kf));
    }
    for (int p : rr.pivots) cert.image_basis.push_back(map(dom.basis(p)));
    return cert;
}

// X -> (1/k!) e^k wedge X on the (i,j) fiber
inline MapCertificate W_map(const Frame& f, int k, int i, int j,
                            SpinorSlot spinor = SpinorSlot::none) {
    if (k < 1 || k > 4) throw std::invalid_argument("W_map: wedge power out of range");
    if (i + k > f.base_dim || j + k > 4)
        throw std::invalid_argument("W_map: degree out of range");
    FiberForm e = coframe(f);
    FiberForm ek = e;
    Rat fact = 1;
    for (int t = 2; t <= k; ++t) {
        ek = wedge(ek, e);
        fact *= t;
    }
    ek = ff_scale(GaussRational(Rat(1) / fact), std::move(ek));
    FiberShape dom{f.base_dim, i, j, spinor};
    FiberShape cod{f.base_dim, i + k, j + k, spinor};
    return certify(dom, cod, [&](const FiberForm& x) { return wedge(ek, x); });
}

// X -> [e, X] on the (i,j) fiber
inline MapCertificate rho_map(const Frame& f, int i, int j) {
    if (j < 1) throw std::invalid_argument("rho_map: V-degree must be at least 1");
    if (i + 1 > f.base_dim) throw std::invalid_argument("rho_map: form degree out of range");
    FiberShape dom{f.base_dim, i, j, SpinorSlot::none};
    FiberShape cod{f.base_dim, i + 1, j - 1, SpinorSlot::none};
    return certify(dom, cod, [&](const FiberForm& x) { return e_bracket(f, x); });
}

inline Frame sample_bulk_frame(Sampler& rng) {
    for (int attempt = 0; attempt < 4096; ++attempt) {
        Matrix e(4, 4);
        for (int mu = 0; mu < 4; ++mu)
            for (int a = 0; a < 4; ++a) e.at(mu, a) = GaussRational(int(rng.int_in(-3, 3)));
        if (rank(e) != 4) continue;  // degenerate draw, resample
        return make_bulk_frame(e);
    }
    throw std::runtime_error("sample_bulk_frame: rejection sampling stalled");
}

inline Frame sample_boundary_frame(Sampler& rng) {
    for (int attempt = 0; attempt < 4096; ++attempt) {
        Matrix e(3, 4);
        std::array<GaussRational, 4> eps;
        for (int mu = 0; mu < 3; ++mu)
            for (int a = 0; a < 4; ++a) e.at(mu, a) = GaussRational(int(rng.int_in(-3, 3)));
        for (int a = 0; a < 4; ++a) eps[a] = GaussRational(int(rng.int_in(-3, 3)));
        Matrix full(4, 4);
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 4; ++a) full.at(i, a) = e.at(i, a);
        for (int a = 0; a < 4; ++a) full.at(3, a) = eps[a];
        if (rank(full) != 4) continue;
        if (!inverse(boundary_metric(e))) continue;
        return make_boundary_frame(e, eps);
    }
    throw std::runtime_error("sample_boundary_frame: rejection sampling stalled");
}

// one W_1 arrow of the property diagrams: source degree and the printed
// injectivity (hook) / surjectivity (two heads) marks
struct ArrowSpec {
    int i = 0;
    int j = 0;
    bool inj = false;
    bool surj = false;
};

inline const std::vector<ArrowSpec>& bulk_arrows() {
    static const std::vector<ArrowSpec> arrows = {
        {0, 0, true, false},  {0, 1, true, false}, {0, 2, true, false}, {0, 3, true, true},
        {1, 0, true, false},  {1, 1, true, false}, {1, 2, true, true},  {1, 3, false, true},
        {2, 0, true, false},  {2, 1, true, true},  {2, 2, false, true}, {2, 3, false, true},
        {3, 0, true, true},   {3, 1, false, true}, {3, 2, false, true}, {3, 3, false, true},
    };
    return arrows;
}

inline const std::vector<ArrowSpec>& boundary_arrows() {
    static const std::vector<ArrowSpec> arrows = {
        {0, 0, true, false}, {0, 1, true, false}, {0, 2, true, false}, {0, 3, false, true},
        {1, 0, true, false}, {1, 1, true, false}, {1, 2, false, true}, {1, 3, false, true},
        {2, 0, true, false}, {2, 1, false, true}, {2, 2, false, true}, {2, 3, false, true},
    };
    return arrows;
}

inline std::string arrow_anchor(const ArrowSpec& a) {
    std::string props = a.inj && a.surj ? "bijective" : a.inj ? "injective" : "surjective";
    return "W_1: (" + std::to_string(a.i) + "," + std::to_string(a.j) + ") -> (" +
           std::to_string(a.i + 1) + "," + std::to_string(a.j + 1) + ") " + props;
}

// Replays the two W_1 property diagrams on sampled nondegenerate frames:
// every arrow's hook / two-head marks must match the computed rank, and the
// ranks themselves must not depend on the frame.
inline VerificationReport check_diagram(const std::string& side, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("check_diagram: trials must be >= 1");
    bool bulk = side == "bulk";
    if (!bulk && side != "boundary")
        throw std::invalid_argument("check_diagram: side must be bulk or boundary");
    const auto& arrows = bulk ? bulk_arrows() : boundary_arrows();

    VerificationReport rep;
    rep.suite = "diagrams";
    Sampler rng(seed);

    std::vector<bool> ok(arrows.size(), true);
    std::vector<std::string> bad(arrows.size());
    std::vector<int> rank0(arrows.size(), -1);
    bool ranks_stable = true;
    std::string rank_witness;
    bool kernel6 = true;
    std::string kernel_witness;

    for (int t = 0; t < trials; ++t) {
        Frame f = bulk ? sample_bulk_frame(rng) : sample_boundary_frame(rng);
        for (std::size_t idx = 0; idx < arrows.size(); ++idx) {
            const ArrowSpec& ar = arrows[idx];
            MapCertificate cert = W_map(f, 1, ar.i, ar.j);
            if (cert.injective() != ar.inj || cert.surjective() != ar.surj) {
                if (ok[idx])
                    bad[idx] = "trial " + std::to_string(t) + ": rank " +
                               std::to_string(cert.rank) + " of " +
                               std::to_string(cert.domain.dim()) + "->" +
                               std::to_string(cert.codomain.dim());
                ok[idx] = false;
            }
            if (rank0[idx] < 0) {
                rank0[idx] = cert.rank;
            } else if (rank0[idx] != cert.rank && ranks_stable) {
                ranks_stable = false;
                rank_witness = "arrow (" + std::to_string(ar.i) + "," + std::to_string(ar.j) +
                               ") rank " + std::to_string(cert.rank) + " vs " +
                               std::to_string(rank0[idx]) + " at trial " + std::to_string(t);
            }
            if (!bulk && ar.i == 1 && ar.j == 2) {
                int kd = int(cert.kernel_basis.size());
                if (kd != 6 && kernel6) {
                    kernel6 = false;
                    kernel_witness = "kernel dim " + std::to_string(kd) + " at trial " +
                                     std::to_string(t);
                }
            }
        }
    }

    std::string tag = bulk ? "bulk" : "bdry";
    for (std::size_t idx = 0; idx < arrows.size(); ++idx) {
        const ArrowSpec& ar = arrows[idx];
        std::string id = tag + "-w1-" + std::to_string(ar.i) + std::to_string(ar.j);
        std::string wit = ok[idx] ? "rank " + std::to_string(rank0[idx]) + " on " +
                                        std::to_string(trials) + " frames"
                                  : bad[idx];
        rep.add(id, arrow_anchor(ar), ok[idx], wit);
    }
    rep.add(tag + "-w1-rank-stability", "W_1 ranks are frame-independent", ranks_stable,
            ranks_stable ? std::to_string(trials) + " frames" : rank_witness);
    if (!bulk)
        rep.add("bdry-w1-12-kernel", "dim ker W_1 on the (1,2) fiber equals 6", kernel6,
                kernel6 ? std::to_string(trials) + " frames" : kernel_witness);
    return rep;
}

}  // namespace veriform
