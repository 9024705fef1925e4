#include "cartan/jet.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <stdexcept>
#include <numeric>

namespace cartan {

int MultiIndex::order() const
{
    return std::accumulate(c.begin(), c.end(), 0);
}

Rational MultiIndex::factorial() const
{
    mpz_class r = 1;
    for (int k : c) {
        mpz_class f;
        mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
        r *= f;
    }
    return Rational(r);
}

MultiIndex MultiIndex::plus(std::size_t i, int k) const
{
    MultiIndex r = *this;
    r.c[i] += k;
    return r;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const
{
    MultiIndex r = *this;
    for (std::size_t i = 0; i < c.size(); ++i)
        r.c[i] += o.c[i];
    return r;
}

MultiIndex MultiIndex::operator-(const MultiIndex& o) const
{
    MultiIndex r = *this;
    for (std::size_t i = 0; i < c.size(); ++i)
        r.c[i] -= o.c[i];
    return r;
}

bool MultiIndex::divides(const MultiIndex& o) const
{
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] > o.c[i])
            return false;
    return true;
}

bool MultiIndex::operator<(const MultiIndex& o) const
{
    int a = order(), b = o.order();
    if (a != b)
        return a < b;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] != o.c[i])
            return c[i] < o.c[i];
    return false;
}

std::size_t MultiIndex::hash() const
{
    std::size_t h = 0;
    for (int k : c)
        h = h * 131 + static_cast<std::size_t>(k);
    return h;
}

std::string MultiIndex::word(const std::vector<std::string>& names) const
{
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return names[a] < names[b]; });
    std::string s;
    for (auto i : order) {
        if (c[i] == 0)
            continue;
        s += names[i];
        if (c[i] > 1)
            s += std::to_string(c[i]);
    }
    return s;
}

std::vector<MultiIndex> multi_indices_of_order(std::size_t n, int order)
{
    std::vector<MultiIndex> out;
    MultiIndex cur(n);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i + 1 == n) {
            cur.c[i] = left;
            out.push_back(cur);
            return;
        }
        for (int k = left; k >= 0; --k) {
            cur.c[i] = k;
            rec(i + 1, left - k);
        }
    };
    if (n == 0) {
        if (order == 0)
            out.push_back(cur);
        return out;
    }
    rec(0, order);
    return out;
}

std::vector<MultiIndex> multi_indices_up_to(std::size_t n, int order)
{
    std::vector<MultiIndex> out;
    for (int k = 0; k <= order; ++k) {
        auto v = multi_indices_of_order(n, k);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

Rational binomial(const MultiIndex& b, const MultiIndex& c)
{
    return b.factorial() / (c.factorial() * (b - c).factorial());
}

bool parse_word(const std::string& w, const std::vector<std::string>& names, MultiIndex& out)
{
    out = MultiIndex(names.size());
    std::size_t pos = 0;
    while (pos < w.size()) {
        std::size_t best = names.size(), len = 0;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i].size() > len && w.compare(pos, names[i].size(), names[i]) == 0) {
                best = i;
                len = names[i].size();
            }
        if (best == names.size())
            return false;
        pos += len;
        int k = 0;
        while (pos < w.size() && std::isdigit(static_cast<unsigned char>(w[pos])))
            k = k * 10 + (w[pos++] - '0');
        out.c[best] += (k == 0 ? 1 : k);
    }
    return true;
}

// ---------------------------------------------------------------- JetSpec

JetSpec::JetSpec(std::vector<std::string> independents, std::vector<std::string> dependents)
    : indep_(std::move(independents)), dep_(std::move(dependents))
{
    base_ = indep_;
    base_.insert(base_.end(), dep_.begin(), dep_.end());
    for (std::size_t i = 0; i < indep_.size(); ++i)
        make(indep_[i], Info{Kind::Independent, static_cast<int>(i), MultiIndex()});
    for (std::size_t a = 0; a < dep_.size(); ++a)
        make(dep_[a], Info{Kind::Jet, static_cast<int>(a), MultiIndex(p())});
}

Var JetSpec::make(const std::string& name, Info inf) const
{
    Var v = intern(name);
    std::lock_guard lk(mu_);
    info_.try_emplace(v, std::move(inf));
    return v;
}

Var JetSpec::x(std::size_t i) const
{
    return intern(indep_.at(i));
}

std::string JetSpec::jet_name(std::size_t alpha, const MultiIndex& J) const
{
    if (J.is_zero())
        return dep_.at(alpha);
    return dep_.at(alpha) + "_" + J.word(indep_);
}

Var JetSpec::u(std::size_t alpha, const MultiIndex& J) const
{
    return make(jet_name(alpha, J), Info{Kind::Jet, static_cast<int>(alpha), J});
}

Var JetSpec::base_var(std::size_t a) const
{
    return a < p() ? x(a) : u(a - p());
}

std::size_t JetSpec::add_family(const std::string& name, std::vector<Var> args)
{
    std::vector<std::string> names;
    for (Var a : args)
        names.push_back(var_name(a));
    std::size_t n = args.size();
    fam_.push_back({name, std::move(args), std::move(names)});
    std::size_t f = fam_.size() - 1;
    family(f, MultiIndex(n));
    return f;
}

Var JetSpec::family(std::size_t f, const MultiIndex& B) const
{
    const auto& fam = fam_.at(f);
    std::string name = fam.name;
    if (!B.is_zero())
        name += "_" + B.word(fam.arg_names);
    return make(name, Info{Kind::Family, static_cast<int>(f), B});
}

JetSpec::Info JetSpec::info(Var v) const
{
    std::lock_guard lk(mu_);
    auto it = info_.find(v);
    return it == info_.end() ? Info{} : it->second;
}

int JetSpec::order(const RatFun& f) const
{
    int o = 0;
    for (Var v : f.variables()) {
        auto inf = info(v);
        if (inf.kind == Kind::Jet)
            o = std::max(o, inf.idx.order());
    }
    return o;
}

RatFun JetSpec::base_derivative(std::size_t i, std::size_t a) const
{
    if (a < p())
        return RatFun(a == i ? 1 : 0);
    return RatFun::variable(u(a - p(), MultiIndex::unit(p(), i)));
}

RatFun JetSpec::total_derivative(const RatFun& f, std::size_t i) const
{
    RatFun out;
    for (Var v : f.variables()) {
        auto inf = info(v);
        RatFun dv;
        switch (inf.kind) {
        case Kind::Independent:
            if (static_cast<std::size_t>(inf.index) != i)
                continue;
            dv = RatFun(1);
            break;
        case Kind::Jet:
            dv = RatFun::variable(u(static_cast<std::size_t>(inf.index), inf.idx.plus(i)));
            break;
        case Kind::Family: {
            auto fi = static_cast<std::size_t>(inf.index);
            const auto& args = fam_[fi].args;
            for (std::size_t k = 0; k < args.size(); ++k) {
                RatFun da = total_derivative(RatFun::variable(args[k]), i);
                if (!da.is_zero())
                    dv += RatFun::variable(family(fi, inf.idx.plus(k))) * da;
            }
            break;
        }
        case Kind::Other:
            continue;
        }
        if (dv.is_zero())
            continue;
        out += f.derivative(v) * dv;
    }
    return out;
}

RatFun JetSpec::iterated_derivative(const RatFun& f, const MultiIndex& J) const
{
    RatFun r = f;
    for (std::size_t i = 0; i < J.size(); ++i)
        for (int k = 0; k < J[i]; ++k)
            r = total_derivative(r, i);
    return r;
}

FMatrix invert(const FMatrix& m)
{
    const std::size_t n = m.rows();
    if (m.cols() != n)
        throw DegenerateMap("matrix is not square");
    FMatrix aug(n, 2 * n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c)
            aug(r, c) = m(r, c);
        aug(r, n + r) = RatFun(1);
    }
    auto piv = gauss_jordan(aug, n, [](const RatFun&) { return true; });
    if (piv.size() != n)
        throw DegenerateMap("singular matrix");
    FMatrix inv(n, n);
    for (auto [r, c] : piv)
        for (std::size_t k = 0; k < n; ++k)
            inv(c, k) = aug(r, n + k);
    return inv;
}

FMatrix lifted_total_derivative_matrix(const JetSpec& spec, const std::vector<RatFun>& targets)
{
    const std::size_t p = spec.p();
    if (targets.size() != p)
        throw std::invalid_argument("expected one target per independent variable");
    FMatrix m(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            m(i, j) = spec.total_derivative(targets[j], i);
    return invert(m);
}

} // namespace cartan
