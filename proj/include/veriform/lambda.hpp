#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "veriform/grassmann.hpp"
#include "veriform/rational.hpp"

namespace veriform {

// Exterior algebra over the 4-dim internal space V with metric
// eta = diag(-1,1,1,1). Monomials are bitmasks over generators v_0..v_3.
inline constexpr int kEta[4] = {-1, 1, 1, 1};

inline int vdeg(std::uint8_t m) { return __builtin_popcount(m); }

// One bracket generates everything: the biderivation extension of
// [v_a, v_b] = eta_{ab}. Degree -2, reproduces the contraction [v_a, .],
// the Lambda^2 action on Lambda^l and the so(3,1) bracket on Lambda^2.
// Returns list of (mask, integer coefficient).
inline std::vector<std::pair<std::uint8_t, int>> vbracket(std::uint8_t m1, std::uint8_t m2) {
    std::vector<std::pair<std::uint8_t, int>> out;
    for (int i = 0; i < 4; ++i) {
        if (!(m1 >> i & 1) || !(m2 >> i & 1)) continue;  // eta diagonal
        // move v_i to the right end of m1 ...
        int s1 = __builtin_popcount(m1 & ~((2u << i) - 1)) & 1 ? -1 : 1;
        // ... and to the left end of m2, contract in the middle
        int s2 = __builtin_popcount(m2 & ((1u << i) - 1)) & 1 ? -1 : 1;
        std::uint8_t r1 = m1 & ~(1u << i), r2 = m2 & ~(1u << i);
        int sm = merge_sign(r1, r2);
        if (sm == 0) continue;
        out.emplace_back(std::uint8_t(r1 | r2), s1 * s2 * sm * kEta[i]);
    }
    return out;
}

// mask-level swap law of the bracket: [a,b] = -(-1)^{l_a l_b} [b,a]
inline int vbracket_swap_sign(int la, int lb) { return ((la * lb) & 1) ? 1 : -1; }

// epsilon tensor with eps_{0123} = +1
inline int eps_lo(int a, int b, int c, int d) {
    int idx[4] = {a, b, c, d};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (idx[i] == idx[j]) return 0;
    int s = 1;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (idx[i] > idx[j]) s = -s;
    return s;
}
inline int eps_hi(int a, int b, int c, int d) {
    return eps_lo(a, b, c, d) * kEta[a] * kEta[b] * kEta[c] * kEta[d];
}

}  // namespace veriform
