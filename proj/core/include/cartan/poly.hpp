#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace cartan {

using Rational = mpq_class;
using Var = std::uint32_t;

// Global variable registry. Ids are assigned in first-use order and fix the
// canonical monomial order (smaller id = more significant variable).
Var intern(std::string_view name);
std::optional<Var> lookup_var(std::string_view name);
const std::string& var_name(Var v);

std::string rational_string(const Rational& q);

class Monomial {
public:
    using Factor = std::pair<Var, std::uint32_t>;

    Monomial() = default;
    explicit Monomial(Var v, std::uint32_t e = 1);
    static Monomial from_factors(std::vector<Factor> f);

    const std::vector<Factor>& factors() const { return f_; }
    std::uint32_t degree() const { return deg_; }
    std::uint32_t exponent(Var v) const;
    bool is_one() const { return f_.empty(); }
    bool divides(const Monomial& o) const;

    Monomial operator*(const Monomial& o) const;
    // Requires divides(o) in the other direction: returns this / o.
    Monomial operator/(const Monomial& o) const;
    Monomial without(Var v) const;
    static Monomial lcm(const Monomial& a, const Monomial& b);
    static Monomial gcd(const Monomial& a, const Monomial& b);

    bool operator==(const Monomial& o) const { return f_ == o.f_; }
    bool operator!=(const Monomial& o) const { return f_ != o.f_; }
    std::size_t hash() const;
    std::string str() const;

private:
    std::vector<Factor> f_;
    std::uint32_t deg_ = 0;
};

// Graded lexicographic comparison: returns <0, 0, >0.
int grlex_compare(const Monomial& a, const Monomial& b);

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

struct Term {
    Monomial mono;
    Rational coef;
};

// Sparse multivariate polynomial over Q; terms sorted by descending grlex.
class Poly {
public:
    Poly() = default;
    Poly(long c);
    Poly(const Rational& c);
    static Poly variable(Var v);
    static Poly variable(std::string_view name) { return variable(intern(name)); }
    static Poly term(const Rational& c, const Monomial& m);
    static Poly from_terms(std::vector<Term> t);

    const std::vector<Term>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    bool is_constant() const;
    Rational constant_value() const;
    Rational constant_term() const;
    const Term& leading() const { return t_.front(); }
    std::size_t size() const { return t_.size(); }
    std::uint32_t total_degree() const;
    std::uint32_t degree_in(Var v) const;
    bool contains(Var v) const;
    std::vector<Var> variables() const;
    std::optional<Monomial> as_monomial() const;

    Poly operator-() const;
    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(const Poly& o) const;
    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    Poly& operator*=(const Poly& o) { return *this = *this * o; }
    Poly scaled(const Rational& c) const;
    Poly times_monomial(const Monomial& m, const Rational& c) const;
    Poly pow(unsigned e) const;

    Poly derivative(Var v) const;
    Poly substitute(const std::function<std::optional<Poly>(Var)>& f) const;
    Poly substitute(Var v, const Poly& value) const;
    Poly rename(const std::function<Var(Var)>& f) const;

    // View as univariate in v: exponent -> coefficient free of v.
    std::map<std::uint32_t, Poly> coefficients_in(Var v) const;
    Poly coefficient_of(const Monomial& m) const;

    bool operator==(const Poly& o) const;
    bool operator!=(const Poly& o) const { return !(*this == o); }
    std::size_t hash() const;
    std::string str() const;

private:
    void canonicalize();
    std::vector<Term> t_;
};

// Exact division; throws std::domain_error when b does not divide a.
Poly exact_divide(const Poly& a, const Poly& b);
std::optional<Poly> try_divide(const Poly& a, const Poly& b);
// Gcd normalized to integer coprime coefficients with positive leading term.
Poly poly_gcd(const Poly& a, const Poly& b);
// Rational content c with p = c * primitive(p); primitive has coprime
// integer coefficients and positive leading coefficient.
Rational integer_content(const Poly& p);

} // namespace cartan
