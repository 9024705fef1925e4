#include "cartan/ratfun.hpp"

#include <stdexcept>
#include <unordered_map>

namespace cartan {

RatFun::RatFun(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den))
{
    normalize();
}

void RatFun::normalize()
{
    if (den_.is_zero())
        throw std::domain_error("zero denominator");
    if (num_.is_zero()) {
        den_ = Poly(1);
        return;
    }
    if (!den_.is_constant()) {
        Poly g = poly_gcd(num_, den_);
        if (!g.is_constant()) {
            num_ = exact_divide(num_, g);
            den_ = exact_divide(den_, g);
        }
    }
    Rational c = integer_content(den_);
    if (c != 1) {
        den_ = den_.scaled(1 / c);
        num_ = num_.scaled(1 / c);
    }
}

RatFun normal_form(const Poly& num, const Poly& den)
{
    return RatFun(num, den);
}

Rational RatFun::constant_value() const
{
    return num_.constant_value() / den_.constant_value();
}

std::vector<Var> RatFun::variables() const
{
    auto a = num_.variables();
    auto b = den_.variables();
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

RatFun RatFun::operator-() const
{
    RatFun r = *this;
    r.num_ = -r.num_;
    return r;
}

RatFun RatFun::operator+(const RatFun& o) const
{
    if (is_zero())
        return o;
    if (o.is_zero())
        return *this;
    if (den_ == o.den_) {
        RatFun r;
        r.num_ = num_ + o.num_;
        r.den_ = den_;
        if (!den_.is_constant())
            r.normalize();
        else if (r.num_.is_zero())
            r.den_ = Poly(1);
        return r;
    }
    return RatFun(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

RatFun RatFun::operator-(const RatFun& o) const
{
    return *this + (-o);
}

RatFun RatFun::operator*(const RatFun& o) const
{
    if (is_zero() || o.is_zero())
        return RatFun();
    if (den_.is_constant() && o.den_.is_constant()) {
        RatFun r;
        r.num_ = num_ * o.num_;
        return r;
    }
    // cross-cancel before multiplying so the product stays reduced
    Poly a = num_, b = den_, c = o.num_, d = o.den_;
    if (!d.is_constant()) {
        Poly g = poly_gcd(a, d);
        if (!g.is_constant()) {
            a = exact_divide(a, g);
            d = exact_divide(d, g);
        }
    }
    if (!b.is_constant()) {
        Poly g = poly_gcd(c, b);
        if (!g.is_constant()) {
            c = exact_divide(c, g);
            b = exact_divide(b, g);
        }
    }
    RatFun r;
    r.num_ = a * c;
    r.den_ = b * d;
    Rational k = integer_content(r.den_);
    if (k != 1) {
        r.den_ = r.den_.scaled(1 / k);
        r.num_ = r.num_.scaled(1 / k);
    }
    return r;
}

RatFun RatFun::operator/(const RatFun& o) const
{
    if (o.is_zero())
        throw std::domain_error("division by zero rational function");
    RatFun inv;
    inv.num_ = o.den_;
    inv.den_ = o.num_;
    Rational k = integer_content(inv.den_);
    inv.den_ = inv.den_.scaled(1 / k);
    inv.num_ = inv.num_.scaled(1 / k);
    return *this * inv;
}

RatFun RatFun::scaled(const Rational& c) const
{
    RatFun r = *this;
    r.num_ = num_.scaled(c);
    if (r.num_.is_zero())
        r.den_ = Poly(1);
    return r;
}

RatFun RatFun::pow(int e) const
{
    if (e < 0)
        return RatFun(1) / pow(-e);
    RatFun r;
    r.num_ = num_.pow(static_cast<unsigned>(e));
    r.den_ = den_.pow(static_cast<unsigned>(e));
    return r;
}

RatFun RatFun::derivative(Var v) const
{
    if (den_.is_constant())
        return RatFun(num_.derivative(v));
    Poly dn = num_.derivative(v);
    Poly dd = den_.derivative(v);
    if (dd.is_zero())
        return RatFun(dn, den_);
    return RatFun(dn * den_ - num_ * dd, den_ * den_);
}

RatFun RatFun::substitute(const std::function<std::optional<RatFun>(Var)>& f) const
{
    // Evaluate monomial by monomial so rational values are allowed.
    std::unordered_map<Var, std::optional<RatFun>> cache;
    auto eval = [&](const Poly& p) {
        RatFun acc;
        Poly untouched;
        std::vector<Term> keep_terms;
        for (auto& t : p.terms()) {
            RatFun factor(t.coef);
            std::vector<Monomial::Factor> keep;
            bool changed = false;
            for (auto& [v, e] : t.mono.factors()) {
                auto it = cache.find(v);
                if (it == cache.end())
                    it = cache.emplace(v, f(v)).first;
                if (it->second) {
                    factor = factor * it->second->pow(static_cast<int>(e));
                    changed = true;
                } else
                    keep.emplace_back(v, e);
            }
            if (!changed)
                keep_terms.push_back(t);
            else if (!factor.is_zero())
                acc += factor * RatFun(Poly::term(1, Monomial::from_factors(std::move(keep))));
        }
        return acc + RatFun(Poly::from_terms(std::move(keep_terms)));
    };
    RatFun n = eval(num_);
    if (den_.is_constant())
        return n.scaled(1 / den_.constant_value());
    return n / eval(den_);
}

RatFun RatFun::substitute(Var v, const RatFun& value) const
{
    return substitute([&](Var w) -> std::optional<RatFun> {
        if (w == v)
            return value;
        return std::nullopt;
    });
}

RatFun RatFun::rename(const std::function<Var(Var)>& f) const
{
    return RatFun(num_.rename(f), den_.rename(f));
}

std::string RatFun::str() const
{
    if (den_.is_constant() && den_.constant_value() == 1)
        return num_.str();
    return "(" + num_.str() + ")/(" + den_.str() + ")";
}

} // namespace cartan
