#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "veriform/rational.hpp"

namespace veriform {

// Sign of merging two strictly increasing generator words given as bitmasks:
// (-1)^{#inversions}. Overlapping masks mean the product vanishes.
inline int merge_sign(std::uint64_t a, std::uint64_t b) {
    if (a & b) return 0;
    int inv = 0;
    std::uint64_t rest = a;
    while (rest) {
        std::uint64_t low = rest & (~rest + 1);
        int pos = __builtin_ctzll(low);
        // generators of b below pos must hop over this one
        inv += __builtin_popcountll(b & (low - 1));
        (void)pos;
        rest ^= low;
    }
    return (inv & 1) ? -1 : 1;
}

// Exact finite Grassmann algebra with two independent anticommuting pools:
// pool 0 carries ordinary odd coefficients, pool 1 is reserved for variational
// generators. Generators across pools commute; within a pool they anticommute.
struct GrassmannElement {
    struct Key {
        std::uint64_t m0 = 0;
        std::uint64_t m1 = 0;
        friend bool operator<(const Key& a, const Key& b) {
            if (a.m0 != b.m0) return a.m0 < b.m0;
            return a.m1 < b.m1;
        }
        friend bool operator==(const Key& a, const Key& b) {
            return a.m0 == b.m0 && a.m1 == b.m1;
        }
    };

    std::map<Key, GaussRational> coeffs;
    int num_generators = 16;

    GrassmannElement() = default;

    static GrassmannElement scalar(GaussRational c) {
        GrassmannElement g;
        if (!c.is_zero()) g.coeffs[{0, 0}] = std::move(c);
        return g;
    }
    static GrassmannElement one() { return scalar(GaussRational(1)); }
    static GrassmannElement generator(int idx, GaussRational c = GaussRational(1)) {
        GrassmannElement g;
        g.coeffs[{std::uint64_t(1) << idx, 0}] = std::move(c);
        return g;
    }
    static GrassmannElement vgenerator(int idx, GaussRational c = GaussRational(1)) {
        GrassmannElement g;
        g.coeffs[{0, std::uint64_t(1) << idx}] = std::move(c);
        return g;
    }

    bool is_zero() const { return coeffs.empty(); }

    void add_term(Key k, const GaussRational& c) {
        if (c.is_zero()) return;
        auto it = coeffs.find(k);
        if (it == coeffs.end()) {
            coeffs.emplace(k, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) coeffs.erase(it);
        }
    }

    friend GrassmannElement operator+(const GrassmannElement& a, const GrassmannElement& b) {
        GrassmannElement r = a;
        for (auto& [k, c] : b.coeffs) r.add_term(k, c);
        return r;
    }
    friend GrassmannElement operator-(const GrassmannElement& a, const GrassmannElement& b) {
        GrassmannElement r = a;
        for (auto& [k, c] : b.coeffs) r.add_term(k, -c);
        return r;
    }
    GrassmannElement operator-() const {
        GrassmannElement r;
        for (auto& [k, c] : coeffs) r.coeffs.emplace(k, -c);
        return r;
    }
    friend GrassmannElement operator*(const GaussRational& s, const GrassmannElement& a) {
        GrassmannElement r;
        if (s.is_zero()) return r;
        for (auto& [k, c] : a.coeffs) r.coeffs.emplace(k, s * c);
        return r;
    }

    friend bool operator==(const GrassmannElement& a, const GrassmannElement& b) {
        return a.coeffs == b.coeffs;
    }
};

inline GrassmannElement gr_mul(const GrassmannElement& a, const GrassmannElement& b) {
    GrassmannElement r;
    r.num_generators = a.num_generators;
    for (auto& [ka, ca] : a.coeffs) {
        for (auto& [kb, cb] : b.coeffs) {
            int s0 = merge_sign(ka.m0, kb.m0);
            if (s0 == 0) continue;
            int s1 = merge_sign(ka.m1, kb.m1);
            if (s1 == 0) continue;
            // pool-1 generators of b pass every pool-0 generator of a without sign:
            // pools are mutually commuting by convention.
            GaussRational c = ca * cb;
            if (s0 * s1 < 0) c = -c;
            r.add_term({ka.m0 | kb.m0, ka.m1 | kb.m1}, c);
        }
    }
    return r;
}

// parity in the ordinary (pool-0) grading; nullopt when inhomogeneous
inline std::optional<int> gr_parity(const GrassmannElement& a) {
    std::optional<int> p;
    for (auto& [k, c] : a.coeffs) {
        int q = __builtin_popcountll(k.m0) & 1;
        if (!p) {
            p = q;
        } else if (*p != q) {
            return std::nullopt;
        }
    }
    return p ? p : std::optional<int>(0);
}

inline std::optional<int> gr_vparity(const GrassmannElement& a) {
    std::optional<int> p;
    for (auto& [k, c] : a.coeffs) {
        int q = __builtin_popcountll(k.m1) & 1;
        if (!p) {
            p = q;
        } else if (*p != q) {
            return std::nullopt;
        }
    }
    return p ? p : std::optional<int>(0);
}

inline std::string gr_str(const GrassmannElement& a) {
    if (a.coeffs.empty()) return "0";
    std::string s;
    for (auto& [k, c] : a.coeffs) {
        if (!s.empty()) s += " + ";
        s += "(" + c.str() + ")";
        for (int i = 0; i < 64; ++i)
            if (k.m0 >> i & 1) s += ".t" + std::to_string(i);
        for (int i = 0; i < 64; ++i)
            if (k.m1 >> i & 1) s += ".w" + std::to_string(i);
    }
    return s;
}

}  // namespace veriform
