#pragma once

#include "cartan/poly.hpp"

namespace cartan {

// Rational function num/den kept in lowest terms. The denominator has coprime
// integer coefficients and a positive leading coefficient; polynomials carry
// den == 1 so polynomial arithmetic never pays for a gcd.
class RatFun {
public:
    RatFun() = default;
    RatFun(long c) : num_(c) {}
    RatFun(const Rational& c) : num_(c) {}
    RatFun(Poly p) : num_(std::move(p)) {}
    RatFun(Poly num, Poly den);
    static RatFun variable(Var v) { return RatFun(Poly::variable(v)); }
    static RatFun variable(std::string_view n) { return RatFun(Poly::variable(n)); }

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_polynomial() const { return den_.is_constant(); }
    bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
    Rational constant_value() const;
    std::vector<Var> variables() const;
    bool contains(Var v) const { return num_.contains(v) || den_.contains(v); }

    RatFun operator-() const;
    RatFun operator+(const RatFun& o) const;
    RatFun operator-(const RatFun& o) const;
    RatFun operator*(const RatFun& o) const;
    RatFun operator/(const RatFun& o) const;
    RatFun& operator+=(const RatFun& o) { return *this = *this + o; }
    RatFun& operator-=(const RatFun& o) { return *this = *this - o; }
    RatFun& operator*=(const RatFun& o) { return *this = *this * o; }
    RatFun& operator/=(const RatFun& o) { return *this = *this / o; }
    RatFun scaled(const Rational& c) const;
    RatFun pow(int e) const;

    RatFun derivative(Var v) const;
    RatFun substitute(const std::function<std::optional<RatFun>(Var)>& f) const;
    RatFun substitute(Var v, const RatFun& value) const;
    RatFun rename(const std::function<Var(Var)>& f) const;

    bool operator==(const RatFun& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const RatFun& o) const { return !(*this == o); }
    std::size_t hash() const { return num_.hash() * 31 + den_.hash(); }
    std::string str() const;

private:
    void normalize();
    Poly num_;
    Poly den_ = Poly(1);
};

// Canonical representative; throws std::domain_error for a zero denominator.
RatFun normal_form(const Poly& num, const Poly& den);
inline RatFun normal_form(const RatFun& f) { return f; }

inline bool is_zero(const RatFun& f) { return f.is_zero(); }
inline bool is_zero(const Rational& q) { return sgn(q) == 0; }

} // namespace cartan
