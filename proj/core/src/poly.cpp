#include "cartan/poly.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace cartan {

namespace {

struct Registry {
    std::shared_mutex mu;
    std::deque<std::string> names;
    std::unordered_map<std::string, Var> ids;
};

Registry& registry()
{
    static Registry r;
    return r;
}

} // namespace

Var intern(std::string_view name)
{
    auto& r = registry();
    {
        std::shared_lock lk(r.mu);
        auto it = r.ids.find(std::string(name));
        if (it != r.ids.end())
            return it->second;
    }
    std::unique_lock lk(r.mu);
    auto [it, inserted] = r.ids.emplace(std::string(name), static_cast<Var>(r.names.size()));
    if (inserted)
        r.names.emplace_back(name);
    return it->second;
}

std::optional<Var> lookup_var(std::string_view name)
{
    auto& r = registry();
    std::shared_lock lk(r.mu);
    auto it = r.ids.find(std::string(name));
    if (it == r.ids.end())
        return std::nullopt;
    return it->second;
}

const std::string& var_name(Var v)
{
    auto& r = registry();
    std::shared_lock lk(r.mu);
    return r.names.at(v);
}

std::string rational_string(const Rational& q)
{
    return q.get_str();
}

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(Var v, std::uint32_t e)
{
    if (e > 0) {
        f_.emplace_back(v, e);
        deg_ = e;
    }
}

Monomial Monomial::from_factors(std::vector<Factor> f)
{
    std::sort(f.begin(), f.end());
    Monomial m;
    for (auto& [v, e] : f) {
        if (e == 0)
            continue;
        if (!m.f_.empty() && m.f_.back().first == v)
            m.f_.back().second += e;
        else
            m.f_.emplace_back(v, e);
        m.deg_ += e;
    }
    return m;
}

std::uint32_t Monomial::exponent(Var v) const
{
    auto it = std::lower_bound(f_.begin(), f_.end(), Factor{v, 0});
    return (it != f_.end() && it->first == v) ? it->second : 0;
}

bool Monomial::divides(const Monomial& o) const
{
    if (deg_ > o.deg_)
        return false;
    std::size_t j = 0;
    for (auto& [v, e] : f_) {
        while (j < o.f_.size() && o.f_[j].first < v)
            ++j;
        if (j == o.f_.size() || o.f_[j].first != v || o.f_[j].second < e)
            return false;
    }
    return true;
}

Monomial Monomial::operator*(const Monomial& o) const
{
    Monomial r;
    r.f_.reserve(f_.size() + o.f_.size());
    std::size_t i = 0, j = 0;
    while (i < f_.size() || j < o.f_.size()) {
        if (j == o.f_.size() || (i < f_.size() && f_[i].first < o.f_[j].first))
            r.f_.push_back(f_[i++]);
        else if (i == f_.size() || o.f_[j].first < f_[i].first)
            r.f_.push_back(o.f_[j++]);
        else {
            r.f_.emplace_back(f_[i].first, f_[i].second + o.f_[j].second);
            ++i;
            ++j;
        }
    }
    r.deg_ = deg_ + o.deg_;
    return r;
}

Monomial Monomial::operator/(const Monomial& o) const
{
    Monomial r;
    std::size_t j = 0;
    for (auto& [v, e] : f_) {
        std::uint32_t d = 0;
        while (j < o.f_.size() && o.f_[j].first < v)
            ++j;
        if (j < o.f_.size() && o.f_[j].first == v)
            d = o.f_[j].second;
        if (d > e)
            throw std::domain_error("monomial division not exact");
        if (e > d) {
            r.f_.emplace_back(v, e - d);
            r.deg_ += e - d;
        }
    }
    if (r.deg_ + o.deg_ != deg_)
        throw std::domain_error("monomial division not exact");
    return r;
}

Monomial Monomial::without(Var v) const
{
    Monomial r;
    for (auto& fe : f_)
        if (fe.first != v) {
            r.f_.push_back(fe);
            r.deg_ += fe.second;
        }
    return r;
}

Monomial Monomial::lcm(const Monomial& a, const Monomial& b)
{
    std::vector<Factor> f;
    std::size_t i = 0, j = 0;
    while (i < a.f_.size() || j < b.f_.size()) {
        if (j == b.f_.size() || (i < a.f_.size() && a.f_[i].first < b.f_[j].first))
            f.push_back(a.f_[i++]);
        else if (i == a.f_.size() || b.f_[j].first < a.f_[i].first)
            f.push_back(b.f_[j++]);
        else {
            f.emplace_back(a.f_[i].first, std::max(a.f_[i].second, b.f_[j].second));
            ++i;
            ++j;
        }
    }
    return from_factors(std::move(f));
}

Monomial Monomial::gcd(const Monomial& a, const Monomial& b)
{
    std::vector<Factor> f;
    for (auto& [v, e] : a.f_) {
        auto e2 = b.exponent(v);
        if (e2 > 0)
            f.emplace_back(v, std::min(e, e2));
    }
    return from_factors(std::move(f));
}

std::size_t Monomial::hash() const
{
    std::size_t h = 1469598103934665603ull;
    for (auto& [v, e] : f_) {
        h ^= (static_cast<std::size_t>(v) << 8) ^ e;
        h *= 1099511628211ull;
    }
    return h;
}

std::string Monomial::str() const
{
    std::string s;
    for (auto& [v, e] : f_) {
        if (!s.empty())
            s += "*";
        s += var_name(v);
        if (e > 1)
            s += "^" + std::to_string(e);
    }
    return s.empty() ? "1" : s;
}

int grlex_compare(const Monomial& a, const Monomial& b)
{
    if (a.degree() != b.degree())
        return a.degree() < b.degree() ? -1 : 1;
    const auto& fa = a.factors();
    const auto& fb = b.factors();
    std::size_t n = std::min(fa.size(), fb.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (fa[i].first != fb[i].first)
            return fa[i].first < fb[i].first ? 1 : -1;
        if (fa[i].second != fb[i].second)
            return fa[i].second > fb[i].second ? 1 : -1;
    }
    if (fa.size() != fb.size())
        return fa.size() > fb.size() ? 1 : -1;
    return 0;
}

// ---------------------------------------------------------------- Poly

namespace {

bool term_greater(const Term& a, const Term& b)
{
    return grlex_compare(a.mono, b.mono) > 0;
}

} // namespace

Poly::Poly(long c)
{
    if (c != 0)
        t_.push_back({Monomial(), Rational(c)});
}

Poly::Poly(const Rational& c)
{
    if (sgn(c) != 0)
        t_.push_back({Monomial(), c});
}

Poly Poly::variable(Var v)
{
    Poly p;
    p.t_.push_back({Monomial(v), Rational(1)});
    return p;
}

Poly Poly::term(const Rational& c, const Monomial& m)
{
    Poly p;
    if (sgn(c) != 0)
        p.t_.push_back({m, c});
    return p;
}

Poly Poly::from_terms(std::vector<Term> t)
{
    Poly p;
    p.t_ = std::move(t);
    p.canonicalize();
    return p;
}

void Poly::canonicalize()
{
    std::sort(t_.begin(), t_.end(), term_greater);
    std::vector<Term> out;
    out.reserve(t_.size());
    for (auto& t : t_) {
        if (!out.empty() && out.back().mono == t.mono)
            out.back().coef += t.coef;
        else
            out.push_back(std::move(t));
    }
    std::vector<Term> clean;
    clean.reserve(out.size());
    for (auto& t : out)
        if (sgn(t.coef) != 0)
            clean.push_back(std::move(t));
    t_ = std::move(clean);
}

bool Poly::is_constant() const
{
    return t_.empty() || (t_.size() == 1 && t_[0].mono.is_one());
}

Rational Poly::constant_value() const
{
    if (t_.empty())
        return 0;
    if (!is_constant())
        throw std::domain_error("polynomial is not constant");
    return t_[0].coef;
}

Rational Poly::constant_term() const
{
    if (!t_.empty() && t_.back().mono.is_one())
        return t_.back().coef;
    return 0;
}

std::uint32_t Poly::total_degree() const
{
    return t_.empty() ? 0 : t_.front().mono.degree();
}

std::uint32_t Poly::degree_in(Var v) const
{
    std::uint32_t d = 0;
    for (auto& t : t_)
        d = std::max(d, t.mono.exponent(v));
    return d;
}

bool Poly::contains(Var v) const
{
    for (auto& t : t_)
        if (t.mono.exponent(v) > 0)
            return true;
    return false;
}

std::vector<Var> Poly::variables() const
{
    std::vector<Var> vs;
    for (auto& t : t_)
        for (auto& f : t.mono.factors())
            vs.push_back(f.first);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
}

std::optional<Monomial> Poly::as_monomial() const
{
    if (t_.size() == 1)
        return t_[0].mono;
    return std::nullopt;
}

Poly Poly::operator-() const
{
    Poly r = *this;
    for (auto& t : r.t_)
        t.coef = -t.coef;
    return r;
}

namespace {

std::vector<Term> merge(const std::vector<Term>& a, const std::vector<Term>& b, bool subtract)
{
    std::vector<Term> r;
    r.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        int c;
        if (i == a.size())
            c = -1;
        else if (j == b.size())
            c = 1;
        else
            c = grlex_compare(a[i].mono, b[j].mono);
        if (c > 0)
            r.push_back(a[i++]);
        else if (c < 0) {
            r.push_back(b[j++]);
            if (subtract)
                r.back().coef = -r.back().coef;
        } else {
            Rational s = subtract ? Rational(a[i].coef - b[j].coef) : Rational(a[i].coef + b[j].coef);
            if (sgn(s) != 0)
                r.push_back({a[i].mono, s});
            ++i;
            ++j;
        }
    }
    return r;
}

} // namespace

Poly Poly::operator+(const Poly& o) const
{
    Poly r;
    r.t_ = merge(t_, o.t_, false);
    return r;
}

Poly Poly::operator-(const Poly& o) const
{
    Poly r;
    r.t_ = merge(t_, o.t_, true);
    return r;
}

Poly& Poly::operator+=(const Poly& o)
{
    t_ = merge(t_, o.t_, false);
    return *this;
}

Poly& Poly::operator-=(const Poly& o)
{
    t_ = merge(t_, o.t_, true);
    return *this;
}

Poly Poly::operator*(const Poly& o) const
{
    if (t_.empty() || o.t_.empty())
        return Poly();
    if (o.is_constant())
        return scaled(o.t_[0].coef);
    if (is_constant())
        return o.scaled(t_[0].coef);
    if (o.t_.size() == 1)
        return times_monomial(o.t_[0].mono, o.t_[0].coef);
    if (t_.size() == 1)
        return o.times_monomial(t_[0].mono, t_[0].coef);
    std::unordered_map<Monomial, Rational, MonomialHash> acc;
    acc.reserve(t_.size() * o.t_.size());
    for (auto& a : t_)
        for (auto& b : o.t_) {
            auto [it, ins] = acc.try_emplace(a.mono * b.mono, a.coef * b.coef);
            if (!ins)
                it->second += a.coef * b.coef;
        }
    Poly r;
    r.t_.reserve(acc.size());
    for (auto& [m, c] : acc)
        if (sgn(c) != 0)
            r.t_.push_back({m, c});
    std::sort(r.t_.begin(), r.t_.end(), term_greater);
    return r;
}

Poly Poly::scaled(const Rational& c) const
{
    if (sgn(c) == 0)
        return Poly();
    Poly r = *this;
    for (auto& t : r.t_)
        t.coef *= c;
    return r;
}

Poly Poly::times_monomial(const Monomial& m, const Rational& c) const
{
    if (sgn(c) == 0)
        return Poly();
    Poly r;
    r.t_.reserve(t_.size());
    for (auto& t : t_)
        r.t_.push_back({t.mono * m, t.coef * c});
    // multiplication by a monomial preserves grlex order
    return r;
}

Poly Poly::pow(unsigned e) const
{
    Poly r(1), b = *this;
    while (e) {
        if (e & 1u)
            r = r * b;
        e >>= 1u;
        if (e)
            b = b * b;
    }
    return r;
}

Poly Poly::derivative(Var v) const
{
    std::vector<Term> r;
    for (auto& t : t_) {
        auto e = t.mono.exponent(v);
        if (e == 0)
            continue;
        std::vector<Monomial::Factor> f = t.mono.factors();
        for (auto& fe : f)
            if (fe.first == v)
                fe.second -= 1;
        r.push_back({Monomial::from_factors(std::move(f)), t.coef * e});
    }
    return from_terms(std::move(r));
}

Poly Poly::substitute(const std::function<std::optional<Poly>(Var)>& f) const
{
    std::unordered_map<Var, std::optional<Poly>> cache;
    Poly out;
    std::vector<Term> untouched;
    for (auto& t : t_) {
        Poly factor(t.coef);
        std::vector<Monomial::Factor> keep;
        bool changed = false;
        for (auto& [v, e] : t.mono.factors()) {
            auto it = cache.find(v);
            if (it == cache.end())
                it = cache.emplace(v, f(v)).first;
            if (it->second) {
                factor = factor * it->second->pow(e);
                changed = true;
            } else
                keep.emplace_back(v, e);
        }
        if (!changed)
            untouched.push_back(t);
        else if (!factor.is_zero())
            out += factor.times_monomial(Monomial::from_factors(std::move(keep)), 1);
    }
    return out + from_terms(std::move(untouched));
}

Poly Poly::substitute(Var v, const Poly& value) const
{
    return substitute([&](Var w) -> std::optional<Poly> {
        if (w == v)
            return value;
        return std::nullopt;
    });
}

Poly Poly::rename(const std::function<Var(Var)>& f) const
{
    std::vector<Term> r;
    r.reserve(t_.size());
    for (auto& t : t_) {
        std::vector<Monomial::Factor> fs;
        for (auto& [v, e] : t.mono.factors())
            fs.emplace_back(f(v), e);
        r.push_back({Monomial::from_factors(std::move(fs)), t.coef});
    }
    return from_terms(std::move(r));
}

std::map<std::uint32_t, Poly> Poly::coefficients_in(Var v) const
{
    std::map<std::uint32_t, std::vector<Term>> parts;
    for (auto& t : t_)
        parts[t.mono.exponent(v)].push_back({t.mono.without(v), t.coef});
    std::map<std::uint32_t, Poly> r;
    for (auto& [e, ts] : parts)
        r.emplace(e, from_terms(std::move(ts)));
    return r;
}

Poly Poly::coefficient_of(const Monomial& m) const
{
    std::vector<Term> r;
    for (auto& t : t_)
        if (m.divides(t.mono)) {
            // keep only terms whose remaining factors avoid m's variables
            Monomial rest = t.mono / m;
            bool clean = true;
            for (auto& [v, e] : m.factors())
                if (rest.exponent(v) > 0)
                    clean = false;
            if (clean)
                r.push_back({rest, t.coef});
        }
    return from_terms(std::move(r));
}

bool Poly::operator==(const Poly& o) const
{
    if (t_.size() != o.t_.size())
        return false;
    for (std::size_t i = 0; i < t_.size(); ++i)
        if (t_[i].mono != o.t_[i].mono || t_[i].coef != o.t_[i].coef)
            return false;
    return true;
}

std::size_t Poly::hash() const
{
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (auto& t : t_) {
        h ^= t.mono.hash() + 0x9e3779b9 + (h << 6) + (h >> 2);
        h ^= std::hash<std::string>()(t.coef.get_str()) + (h << 6) + (h >> 2);
    }
    return h;
}

std::string Poly::str() const
{
    if (t_.empty())
        return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& t : t_) {
        Rational c = t.coef;
        bool neg = sgn(c) < 0;
        if (neg)
            c = -c;
        if (first)
            os << (neg ? "-" : "");
        else
            os << (neg ? " - " : " + ");
        first = false;
        if (t.mono.is_one())
            os << c.get_str();
        else if (c == 1)
            os << t.mono.str();
        else
            os << c.get_str() << "*" << t.mono.str();
    }
    return os.str();
}

// ---------------------------------------------------------------- division, gcd

std::optional<Poly> try_divide(const Poly& a, const Poly& b)
{
    if (b.is_zero())
        throw std::domain_error("division by zero polynomial");
    if (b.is_constant())
        return a.scaled(1 / b.constant_value());
    const Term& lb = b.leading();
    Poly r = a, q;
    while (!r.is_zero()) {
        const Term& lr = r.leading();
        if (!lb.mono.divides(lr.mono))
            return std::nullopt;
        Monomial m = lr.mono / lb.mono;
        Rational c = lr.coef / lb.coef;
        q += Poly::term(c, m);
        r -= b.times_monomial(m, c);
    }
    return q;
}

Poly exact_divide(const Poly& a, const Poly& b)
{
    auto q = try_divide(a, b);
    if (!q)
        throw std::domain_error("polynomial division not exact");
    return *q;
}

Rational integer_content(const Poly& p)
{
    if (p.is_zero())
        return 1;
    mpz_class num = 0, den = 1;
    for (auto& t : p.terms()) {
        mpz_gcd(num.get_mpz_t(), num.get_mpz_t(), t.coef.get_num_mpz_t());
        mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), t.coef.get_den_mpz_t());
    }
    Rational c(num, den);
    c.canonicalize();
    if (sgn(p.leading().coef) < 0)
        c = -c;
    return c;
}

namespace {

Poly primitive(const Poly& p)
{
    if (p.is_zero())
        return p;
    return p.scaled(1 / integer_content(p));
}

Poly gcd_rec(const Poly& a, const Poly& b);

Poly content_in(const Poly& p, Var v)
{
    Poly g;
    for (auto& [e, c] : p.coefficients_in(v)) {
        g = gcd_rec(g, c);
        if (g.is_constant() && !g.is_zero())
            return Poly(1);
    }
    return g;
}

// Pseudo-remainder of a by b viewed as univariate in v.
Poly pseudo_remainder(Poly r, const Poly& b, Var v)
{
    auto db = b.degree_in(v);
    auto cb = b.coefficients_in(v);
    Poly lcb = cb.rbegin()->second;
    while (!r.is_zero()) {
        auto dr = r.degree_in(v);
        if (dr < db)
            break;
        auto cr = r.coefficients_in(v);
        Poly lcr = cr.rbegin()->second;
        r = r * lcb - (lcr * b).times_monomial(Monomial(v, dr - db), 1);
        r = primitive(r);
    }
    return r;
}

Poly gcd_rec(const Poly& a, const Poly& b)
{
    if (a.is_zero())
        return primitive(b);
    if (b.is_zero())
        return primitive(a);
    if (a.is_constant() || b.is_constant())
        return Poly(1);
    if (a == b)
        return primitive(a);
    auto ma = a.as_monomial();
    auto mb = b.as_monomial();
    if (ma || mb) {
        // gcd with a monomial is the common variable power
        const Poly& other = ma ? b : a;
        Monomial g = ma ? *ma : *mb;
        for (auto& t : other.terms())
            g = Monomial::gcd(g, t.mono);
        return Poly::term(1, g);
    }
    auto va = a.variables();
    auto vb = b.variables();
    std::vector<Var> common;
    std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(common));
    // a common factor only involves shared variables
    if (common.empty())
        return Poly(1);
    Var v = common.front();
    // pick the common variable with smallest degree to keep PRS short
    std::uint32_t best = a.degree_in(v) + b.degree_in(v);
    for (Var w : common) {
        auto d = a.degree_in(w) + b.degree_in(w);
        if (d < best) {
            best = d;
            v = w;
        }
    }
    Poly ca = content_in(a, v);
    Poly cb = content_in(b, v);
    Poly g = gcd_rec(ca, cb);
    Poly A = exact_divide(a, ca);
    Poly B = exact_divide(b, cb);
    if (A.degree_in(v) < B.degree_in(v))
        std::swap(A, B);
    while (true) {
        Poly r = pseudo_remainder(A, B, v);
        if (r.is_zero())
            break;
        if (r.degree_in(v) == 0) {
            B = Poly(1);
            break;
        }
        A = B;
        B = exact_divide(r, content_in(r, v));
    }
    if (!B.is_constant())
        B = exact_divide(B, content_in(B, v));
    return primitive(g * B);
}

} // namespace

Poly poly_gcd(const Poly& a, const Poly& b)
{
    return gcd_rec(a, b);
}

} // namespace cartan
