#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>

namespace veriform {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline std::string rat_str(const Rat& r) { return r.str(); }

// Gaussian rationals, re + im*i with i^2 = -1. The only scalar field used anywhere.
struct GaussRational {
    Rat re{0};
    Rat im{0};

    GaussRational() = default;
    GaussRational(int n) : re(n) {}
    GaussRational(long long n) : re(n) {}
    GaussRational(Rat r) : re(std::move(r)) {}
    GaussRational(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

    static GaussRational i() { return {Rat(0), Rat(1)}; }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    GaussRational conj() const { return {re, -im}; }
    Rat norm2() const { return re * re + im * im; }

    friend GaussRational operator+(const GaussRational& a, const GaussRational& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend GaussRational operator-(const GaussRational& a, const GaussRational& b) {
        return {a.re - b.re, a.im - b.im};
    }
    GaussRational operator-() const { return {-re, -im}; }
    friend GaussRational operator*(const GaussRational& a, const GaussRational& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend GaussRational operator/(const GaussRational& a, const GaussRational& b) {
        Rat n = b.norm2();
        GaussRational num = a * b.conj();
        return {num.re / n, num.im / n};
    }
    GaussRational& operator+=(const GaussRational& b) { *this = *this + b; return *this; }
    GaussRational& operator-=(const GaussRational& b) { *this = *this - b; return *this; }
    GaussRational& operator*=(const GaussRational& b) { *this = *this * b; return *this; }
    GaussRational& operator/=(const GaussRational& b) { *this = *this / b; return *this; }

    friend bool operator==(const GaussRational& a, const GaussRational& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const GaussRational& a, const GaussRational& b) { return !(a == b); }
    friend bool operator<(const GaussRational& a, const GaussRational& b) {
        if (a.re != b.re) return a.re < b.re;
        return a.im < b.im;
    }

    std::string str() const {
        if (im == 0) return re.str();
        if (re == 0) return im.str() + "i";
        std::string s = re.str();
        if (im > 0) s += "+";
        return s + im.str() + "i";
    }
};

inline GaussRational gq(long long num, long long den = 1) {
    return GaussRational(Rat(num, den));
}

}  // namespace veriform
