#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace khs {

// Exact rational scalars. Reductions chain many Schur complements, so
// arbitrary precision is required; doubles are not an option here.
class Rat {
public:
    Rat() : v_(0) {}
    Rat(long n) : v_(n) {}
    Rat(long n, long d) : v_(n, d) { v_.canonicalize(); }
    explicit Rat(const mpq_class& v) : v_(v) {}

    static Rat zero() { return Rat(0); }
    static Rat one() { return Rat(1); }
    static std::string name() { return "Q"; }

    bool is_zero() const { return v_ == 0; }

    Rat operator+(const Rat& o) const { return Rat(mpq_class(v_ + o.v_)); }
    Rat operator-(const Rat& o) const { return Rat(mpq_class(v_ - o.v_)); }
    Rat operator-() const { return Rat(mpq_class(-v_)); }
    Rat operator*(const Rat& o) const { return Rat(mpq_class(v_ * o.v_)); }
    Rat inv() const {
        if (is_zero()) throw std::domain_error("division by zero in Q");
        return Rat(mpq_class(1 / v_));
    }
    Rat& operator+=(const Rat& o) { v_ += o.v_; return *this; }
    Rat& operator*=(const Rat& o) { v_ *= o.v_; return *this; }

    bool operator==(const Rat& o) const { return v_ == o.v_; }
    bool operator!=(const Rat& o) const { return v_ != o.v_; }

    std::string str() const { return v_.get_str(); }

private:
    mpq_class v_;
};

// Prime field with a process-wide runtime modulus. The CLI fixes the modulus
// once before any computation starts; batch workers share it read-only.
class Zp {
public:
    Zp() : v_(0) {}
    Zp(long n) { v_ = norm(n % (long)p_); }

    static void set_modulus(uint64_t p) {
        if (p < 2) throw std::invalid_argument("modulus must be >= 2");
        for (uint64_t d = 2; d * d <= p; ++d)
            if (p % d == 0) throw std::invalid_argument("modulus must be prime");
        p_ = p;
    }
    static uint64_t modulus() { return p_; }

    static Zp zero() { return Zp(); }
    static Zp one() { return Zp(1); }
    static std::string name() { return p_ == 2 ? "F2" : "F" + std::to_string(p_); }

    bool is_zero() const { return v_ == 0; }

    Zp operator+(const Zp& o) const { return from(v_ + o.v_ >= p_ ? v_ + o.v_ - p_ : v_ + o.v_); }
    Zp operator-(const Zp& o) const { return from(v_ >= o.v_ ? v_ - o.v_ : v_ + p_ - o.v_); }
    Zp operator-() const { return from(v_ == 0 ? 0 : p_ - v_); }
    Zp operator*(const Zp& o) const { return from((v_ * o.v_) % p_); }
    Zp inv() const {
        if (v_ == 0) throw std::domain_error("division by zero in Fp");
        return pow(p_ - 2);
    }
    Zp& operator+=(const Zp& o) { *this = *this + o; return *this; }
    Zp& operator*=(const Zp& o) { *this = *this * o; return *this; }

    bool operator==(const Zp& o) const { return v_ == o.v_; }
    bool operator!=(const Zp& o) const { return v_ != o.v_; }

    std::string str() const { return std::to_string(v_); }

private:
    static Zp from(uint64_t raw) { Zp z; z.v_ = raw; return z; }
    static uint64_t norm(long r) { return r < 0 ? (uint64_t)(r + (long)p_) : (uint64_t)r; }
    Zp pow(uint64_t e) const {
        Zp acc = one(), base = *this;
        while (e) {
            if (e & 1) acc *= base;
            base *= base;
            e >>= 1;
        }
        return acc;
    }

    inline static uint64_t p_ = 2;
    uint64_t v_;
};

// Laurent monomial c*H^h. Every scalar that appears in a cobordism term is of
// this shape; full polynomials only ever arise as sums of terms with distinct
// underlying dot patterns.
template <class F>
struct Mono {
    F c;
    int h = 0;

    Mono() : c(F::zero()) {}
    Mono(F c_, int h_) : c(c_), h(h_) {}
    static Mono one() { return Mono(F::one(), 0); }

    bool is_zero() const { return c.is_zero(); }
    Mono operator*(const Mono& o) const { return Mono(c * o.c, h + o.h); }
    Mono operator-() const { return Mono(-c, h); }
    Mono inv() const { return Mono(c.inv(), -h); }
    Mono times_h(int k) const { return Mono(c, h + k); }

    std::string str() const {
        std::string s = c.str();
        if (h != 0) s += "*H^" + std::to_string(h);
        return s;
    }
};

} // namespace khs
