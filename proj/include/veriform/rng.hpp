#pragma once

#include <cstdint>
#include <random>

#include "veriform/grassmann.hpp"
#include "veriform/rational.hpp"

namespace veriform {

// All randomness flows through this, keyed by an explicit seed, so every run
// with the same (suite, seed, trials) produces identical traces.
struct Sampler {
    std::mt19937_64 eng;

    explicit Sampler(std::uint64_t seed) : eng(seed) {}

    std::int64_t int_in(std::int64_t lo, std::int64_t hi) {
        // uniform_int_distribution is not portable across standard libraries;
        // derive from the raw engine instead.
        std::uint64_t span = std::uint64_t(hi - lo + 1);
        return lo + std::int64_t(eng() % span);
    }

    Rat rat(int max_abs = 4, int max_den = 3) {
        std::int64_t num = int_in(-max_abs, max_abs);
        std::int64_t den = int_in(1, max_den);
        return Rat(num, den);
    }

    Rat rat_nonzero(int max_abs = 4, int max_den = 3) {
        for (;;) {
            Rat r = rat(max_abs, max_den);
            if (r != 0) return r;
        }
    }

    GaussRational gauss(bool with_imag = true) {
        if (!with_imag) return GaussRational(rat());
        return GaussRational(rat(), rat());
    }

    // homogeneous element of the requested pool-0 parity built from generators
    // [gen_lo, gen_lo+gen_count)
    GrassmannElement grassmann(int parity, int gen_lo = 0, int gen_count = 16,
                               bool real_coeffs = true) {
        GrassmannElement out;
        int terms = int(int_in(1, 2));
        for (int t = 0; t < terms; ++t) {
            int deg = parity ? (int_in(0, 1) ? 1 : 3) : (int_in(0, 1) ? 0 : 2);
            if (deg > gen_count) deg = parity ? 1 : 0;
            std::uint64_t mask = 0;
            int placed = 0;
            while (placed < deg) {
                int g = int(int_in(gen_lo, gen_lo + gen_count - 1));
                std::uint64_t bit = std::uint64_t(1) << g;
                if (mask & bit) continue;
                mask |= bit;
                ++placed;
            }
            GaussRational c = real_coeffs ? GaussRational(rat()) : gauss();
            out.add_term({mask, 0}, c);
        }
        return out;
    }

    // single fresh generator, real coefficient; the cheap way to build
    // non-vanishing products of many odd factors
    GrassmannElement theta(int idx, bool nonzero = true) {
        Rat c = nonzero ? rat_nonzero() : rat();
        return GrassmannElement::generator(idx, GaussRational(c));
    }
};

}  // namespace veriform
