#pragma once

#include <cassert>
#include <optional>
#include <vector>

#include "veriform/rational.hpp"

namespace veriform {

// Dense exact matrix over GaussRational. Sizes here are tiny (<= a few hundred),
// plain fraction Gauss elimination is plenty.
struct Matrix {
    int nr = 0, nc = 0;
    std::vector<GaussRational> d;

    Matrix() = default;
    Matrix(int r, int c) : nr(r), nc(c), d(std::size_t(r) * c) {}

    GaussRational& at(int i, int j) { return d[std::size_t(i) * nc + j]; }
    const GaussRational& at(int i, int j) const { return d[std::size_t(i) * nc + j]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = GaussRational(1);
        return m;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        assert(a.nc == b.nr);
        Matrix r(a.nr, b.nc);
        for (int i = 0; i < a.nr; ++i)
            for (int k = 0; k < a.nc; ++k) {
                const GaussRational& aik = a.at(i, k);
                if (aik.is_zero()) continue;
                for (int j = 0; j < b.nc; ++j) {
                    const GaussRational& bkj = b.at(k, j);
                    if (!bkj.is_zero()) r.at(i, j) += aik * bkj;
                }
            }
        return r;
    }
    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        assert(a.nr == b.nr && a.nc == b.nc);
        Matrix r = a;
        for (std::size_t i = 0; i < r.d.size(); ++i) r.d[i] += b.d[i];
        return r;
    }
    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        assert(a.nr == b.nr && a.nc == b.nc);
        Matrix r = a;
        for (std::size_t i = 0; i < r.d.size(); ++i) r.d[i] -= b.d[i];
        return r;
    }
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.nr == b.nr && a.nc == b.nc && a.d == b.d;
    }

    bool is_zero() const {
        for (auto& x : d)
            if (!x.is_zero()) return false;
        return true;
    }

    std::vector<GaussRational> apply(const std::vector<GaussRational>& v) const {
        assert(int(v.size()) == nc);
        std::vector<GaussRational> r(nr);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j)
                if (!at(i, j).is_zero() && !v[j].is_zero()) r[i] += at(i, j) * v[j];
        return r;
    }
};

struct Rref {
    Matrix m;                 // reduced row echelon form
    std::vector<int> pivots;  // pivot column per pivot row
    int rank = 0;
};

inline Rref rref(Matrix a) {
    Rref out;
    int r = 0;
    out.pivots.clear();
    for (int c = 0; c < a.nc && r < a.nr; ++c) {
        int pr = -1;
        for (int i = r; i < a.nr; ++i)
            if (!a.at(i, c).is_zero()) { pr = i; break; }
        if (pr < 0) continue;
        for (int j = 0; j < a.nc; ++j) std::swap(a.at(r, j), a.at(pr, j));
        GaussRational inv = GaussRational(1) / a.at(r, c);
        for (int j = 0; j < a.nc; ++j) a.at(r, j) *= inv;
        for (int i = 0; i < a.nr; ++i) {
            if (i == r || a.at(i, c).is_zero()) continue;
            GaussRational f = a.at(i, c);
            for (int j = 0; j < a.nc; ++j) a.at(i, j) -= f * a.at(r, j);
        }
        out.pivots.push_back(c);
        ++r;
    }
    out.rank = r;
    out.m = std::move(a);
    return out;
}

inline int rank(const Matrix& a) { return rref(a).rank; }

// columns spanning ker(a)
inline std::vector<std::vector<GaussRational>> kernel_basis(const Matrix& a) {
    Rref rr = rref(a);
    std::vector<bool> is_pivot(a.nc, false);
    for (int c : rr.pivots) is_pivot[c] = true;
    std::vector<std::vector<GaussRational>> ker;
    for (int c = 0; c < a.nc; ++c) {
        if (is_pivot[c]) continue;
        std::vector<GaussRational> v(a.nc);
        v[c] = GaussRational(1);
        for (int i = 0; i < rr.rank; ++i) v[rr.pivots[i]] = -rr.m.at(i, c);
        ker.push_back(std::move(v));
    }
    return ker;
}

// solve a x = b; nullopt when inconsistent
inline std::optional<std::vector<GaussRational>> solve(const Matrix& a,
                                                       const std::vector<GaussRational>& b) {
    assert(int(b.size()) == a.nr);
    Matrix aug(a.nr, a.nc + 1);
    for (int i = 0; i < a.nr; ++i) {
        for (int j = 0; j < a.nc; ++j) aug.at(i, j) = a.at(i, j);
        aug.at(i, a.nc) = b[i];
    }
    Rref rr = rref(std::move(aug));
    std::vector<GaussRational> x(a.nc);
    for (int i = 0; i < rr.rank; ++i) {
        if (rr.pivots[i] == a.nc) return std::nullopt;  // pivot in the rhs column
        x[rr.pivots[i]] = rr.m.at(i, a.nc);
    }
    return x;
}

inline std::optional<Matrix> inverse(const Matrix& a) {
    assert(a.nr == a.nc);
    int n = a.nr;
    Matrix aug(n, 2 * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug.at(i, j) = a.at(i, j);
        aug.at(i, n + i) = GaussRational(1);
    }
    Rref rr = rref(std::move(aug));
    if (rr.rank < n || rr.pivots[n - 1] != n - 1) return std::nullopt;
    Matrix inv(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv.at(i, j) = rr.m.at(i, n + j);
    return inv;
}

// a basis of the column image, as column indices of the input
inline std::vector<int> image_pivot_columns(const Matrix& a) { return rref(a).pivots; }

}  // namespace veriform
