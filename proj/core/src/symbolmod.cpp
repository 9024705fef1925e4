#include "cartan/symbolmod.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "cartan/expr.hpp"

namespace cartan {

namespace {

// Column index over the keys of a list of elements.
struct KeyIndex {
    std::vector<ModKey> keys;
    std::map<ModKey, std::size_t> index;

    std::size_t add(const ModKey& k)
    {
        auto [it, fresh] = index.emplace(k, keys.size());
        if (fresh)
            keys.push_back(k);
        return it->second;
    }
};

FMatrix to_matrix(const std::vector<ModElement>& V, KeyIndex& idx)
{
    for (const auto& v : V)
        for (const auto& [k, c] : v.terms())
            idx.add(k);
    FMatrix m(V.size(), idx.keys.size());
    for (std::size_t r = 0; r < V.size(); ++r)
        for (const auto& [k, c] : V[r].terms())
            m(r, idx.index.at(k)) = c;
    return m;
}

std::string coef_prefix(const RatFun& c, bool first, bool unit_term)
{
    std::string out;
    RatFun a = c;
    bool neg = false;
    if (c.is_constant() && sgn(c.constant_value()) < 0) {
        neg = true;
        a = -c;
    }
    if (neg)
        out += first ? "-" : " - ";
    else if (!first)
        out += " + ";
    if (a == RatFun(1))
        return unit_term ? out + "1" : out;
    std::string s = a.str();
    if (!a.is_constant() && (s.find('+') != std::string::npos || s.find(" - ") != std::string::npos))
        s = "(" + s + ")";
    return out + s + (unit_term ? "" : "*");
}

std::vector<std::vector<int>> permutations(int n)
{
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 1);
    std::vector<std::vector<int>> out;
    do
        out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

} // namespace

bool ModKey::operator<(const ModKey& o) const
{
    if (J.order() != o.J.order())
        return J.order() < o.J.order();
    if (pos != o.pos)
        return pos < o.pos;
    return J < o.J;
}

ModNames t_names(const std::vector<std::string>& coords) { return {"t_", "T^", coords, coords}; }

ModNames s_names(const std::vector<std::string>& independents, const std::vector<std::string>& dependents)
{
    return {"s_", "S^", independents, dependents};
}

// ------------------------------------------------------------- ModElement

ModElement ModElement::basis(std::size_t nvars, std::size_t rank, const ModKey& k, const RatFun& c)
{
    ModElement e(nvars, rank);
    e.add(k, c);
    return e;
}

int ModElement::degree() const
{
    int d = -1;
    for (const auto& [k, c] : t_)
        d = std::max(d, k.J.order());
    return d;
}

RatFun ModElement::coefficient(const ModKey& k) const
{
    auto it = t_.find(k);
    return it == t_.end() ? RatFun() : it->second;
}

void ModElement::add(const ModKey& k, const RatFun& c)
{
    if (k.J.size() != n_ || k.pos >= r_)
        throw std::invalid_argument("module key does not fit the module");
    if (c.is_zero())
        return;
    auto [it, fresh] = t_.emplace(k, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero())
            t_.erase(it);
    }
}

ModElement ModElement::homogeneous(int k) const
{
    ModElement out(n_, r_);
    for (const auto& [key, c] : t_)
        if (key.J.order() == k)
            out.t_.emplace(key, c);
    return out;
}

ModElement ModElement::times(const MultiIndex& K) const
{
    ModElement out(n_, r_);
    for (const auto& [key, c] : t_)
        out.t_.emplace(ModKey{key.J + K, key.pos}, c);
    return out;
}

ModElement ModElement::times_var(std::size_t i) const { return times(MultiIndex::unit(n_, i)); }

bool ModElement::constant_coefficients() const
{
    return std::all_of(t_.begin(), t_.end(), [](const auto& kv) { return kv.second.is_constant(); });
}

ModElement ModElement::operator+(const ModElement& o) const
{
    if (is_zero() && n_ == 0)
        return o;
    ModElement out = *this;
    for (const auto& [k, c] : o.t_)
        out.add(k, c);
    return out;
}

ModElement ModElement::operator-(const ModElement& o) const { return *this + (-o); }

ModElement ModElement::operator-() const
{
    ModElement out = *this;
    for (auto& [k, c] : out.t_)
        c = -c;
    return out;
}

ModElement ModElement::operator*(const RatFun& c) const
{
    ModElement out(n_, r_);
    if (c.is_zero())
        return out;
    for (const auto& [k, v] : t_)
        out.t_.emplace(k, v * c);
    return out;
}

ModElement ModElement::map_coefficients(const std::function<RatFun(const RatFun&)>& f) const
{
    ModElement out(n_, r_);
    for (const auto& [k, c] : t_)
        out.add(k, f(c));
    return out;
}

std::string ModElement::str(const ModNames& names) const
{
    if (t_.empty())
        return "0";
    std::string out;
    bool first = true;
    for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
        const auto& [k, c] = *it;
        out += coef_prefix(c, first, false);
        first = false;
        for (std::size_t i = 0; i < n_; ++i) {
            if (k.J[i] == 0)
                continue;
            out += names.var_prefix + names.vars[i];
            if (k.J[i] > 1)
                out += "^" + std::to_string(k.J[i]);
        }
        out += names.pos_prefix + names.positions[k.pos];
    }
    return out;
}

ModElement parse_module_element(const std::string& text, const ModNames& names)
{
    ModElement out(names.vars.size(), names.positions.size());
    std::size_t i = 0;
    auto skip = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
    };
    auto match_name = [&](const std::vector<std::string>& list) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        std::size_t len = 0;
        for (std::size_t k = 0; k < list.size(); ++k)
            if (list[k].size() > len && text.compare(i, list[k].size(), list[k]) == 0) {
                best = k;
                len = list[k].size();
            }
        if (best)
            i += len;
        return best;
    };
    skip();
    if (text.compare(i, std::string::npos, "0") == 0)
        return out;
    bool first = true;
    while (true) {
        skip();
        if (i >= text.size())
            break;
        RatFun sign(1);
        if (text[i] == '+' || text[i] == '-') {
            if (text[i] == '-')
                sign = RatFun(-1);
            ++i;
            skip();
        } else if (!first) {
            throw ParseError("expected '+' or '-'", i);
        }
        first = false;
        RatFun coef(1);
        if (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '(')) {
            std::size_t start = i;
            if (text[i] == '(') {
                int depth = 0;
                for (; i < text.size(); ++i) {
                    depth += text[i] == '(' ? 1 : text[i] == ')' ? -1 : 0;
                    if (depth == 0)
                        break;
                }
                if (i == text.size())
                    throw ParseError("unbalanced parenthesis", start);
                ++i;
            } else {
                while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '/'))
                    ++i;
            }
            coef = parse_ratfun(text.substr(start, i - start));
            skip();
            if (i < text.size() && text[i] == '*')
                ++i;
            skip();
        }
        MultiIndex J(names.vars.size());
        std::optional<std::size_t> pos;
        while (i < text.size()) {
            skip();
            if (text.compare(i, names.var_prefix.size(), names.var_prefix) == 0) {
                i += names.var_prefix.size();
                auto v = match_name(names.vars);
                if (!v)
                    throw ParseError("unknown variable", i);
                int e = 1;
                if (i < text.size() && text[i] == '^' && i + 1 < text.size() &&
                    std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                    std::size_t s = ++i;
                    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                        ++i;
                    e = std::stoi(text.substr(s, i - s));
                }
                J.c[*v] += e;
            } else if (text.compare(i, names.pos_prefix.size(), names.pos_prefix) == 0) {
                if (pos)
                    throw ParseError("two module generators in one term", i);
                i += names.pos_prefix.size();
                pos = match_name(names.positions);
                if (!pos)
                    throw ParseError("unknown module generator", i);
            } else if (text[i] == '*') {
                ++i;
            } else {
                break;
            }
        }
        if (!pos)
            throw ParseError("term without module generator", i);
        out.add(ModKey{J, *pos}, sign * coef);
    }
    return out;
}

// --------------------------------------------------------------- SElement

SElement SElement::from_poly(ModElement e)
{
    SElement s;
    s.tilde.assign(e.nvars(), RatFun());
    s.poly = std::move(e);
    return s;
}

bool SElement::tilde_zero() const
{
    return std::all_of(tilde.begin(), tilde.end(), [](const RatFun& c) { return c.is_zero(); });
}

SElement SElement::highest_term() const
{
    SElement out(tilde.size(), poly.rank());
    out.poly = poly.highest_term();
    if (out.poly.is_zero())
        out.poly = ModElement(poly.nvars(), poly.rank());
    return out;
}

SElement SElement::times_var(std::size_t i) const
{
    SElement out(tilde.size(), poly.rank());
    out.poly = poly.times_var(i);
    return out;
}

SElement SElement::operator+(const SElement& o) const
{
    SElement out = *this;
    for (std::size_t i = 0; i < tilde.size(); ++i)
        out.tilde[i] += o.tilde[i];
    out.poly = poly + o.poly;
    return out;
}

SElement SElement::operator*(const RatFun& c) const
{
    SElement out = *this;
    for (auto& t : out.tilde)
        t *= c;
    out.poly = poly * c;
    return out;
}

std::string SElement::str(const ModNames& names) const
{
    std::string out;
    bool first = true;
    for (std::size_t i = 0; i < tilde.size(); ++i) {
        if (tilde[i].is_zero())
            continue;
        out += coef_prefix(tilde[i], first, false) + "s~_" + names.vars[i];
        first = false;
    }
    if (!poly.is_zero()) {
        std::string p = poly.str(names);
        if (first)
            out += p;
        else if (p[0] == '-')
            out += " - " + p.substr(1);
        else
            out += " + " + p;
        first = false;
    }
    return first ? "0" : out;
}

// ------------------------------------------------------------ Cartan test

Priority natural_priority(std::size_t n)
{
    Priority p(n);
    std::iota(p.begin(), p.end(), 1);
    return p;
}

int multi_index_class(const MultiIndex& B, const Priority& pr)
{
    int cl = 0;
    for (std::size_t i = 0; i < B.size(); ++i)
        if (B[i] != 0 && (cl == 0 || pr[i] < cl))
            cl = pr[i];
    if (cl == 0)
        throw std::domain_error("the zero multi-index has no class");
    return cl;
}

SymbolMatrix symbol_matrix(const std::vector<ModElement>& gens, int n, const Priority& pr)
{
    SymbolMatrix out;
    if (gens.empty())
        return out;
    const std::size_t nv = gens.front().nvars(), rk = gens.front().rank();
    if (pr.size() != nv)
        throw std::invalid_argument("priority length must match the number of variables");
    std::vector<ModElement> rows;
    for (const auto& g : gens) {
        if (g.degree() != n)
            throw std::invalid_argument("symbol matrix generators must have degree " + std::to_string(n));
        rows.push_back(g.highest_term());
    }
    for (const auto& J : multi_indices_of_order(nv, n))
        for (std::size_t a = 0; a < rk; ++a)
            out.columns.push_back(ModKey{J, a});
    // within a class, descending graded lex under the priority order
    auto ranked = [&](const MultiIndex& J) {
        std::vector<int> v(nv);
        for (std::size_t i = 0; i < nv; ++i)
            v[static_cast<std::size_t>(pr[i] - 1)] = J[i];
        return v;
    };
    std::stable_sort(out.columns.begin(), out.columns.end(), [&](const ModKey& a, const ModKey& b) {
        int ca = multi_index_class(a.J, pr), cb = multi_index_class(b.J, pr);
        if (ca != cb)
            return ca > cb;
        auto ra = ranked(a.J), rb = ranked(b.J);
        if (ra != rb)
            return rb < ra;
        return a.pos > b.pos;
    });
    std::map<ModKey, std::size_t> idx;
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
        idx[out.columns[c]] = c;
        out.column_class.push_back(multi_index_class(out.columns[c].J, pr));
    }
    out.matrix = FMatrix(rows.size(), out.columns.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const auto& [k, c] : rows[r].terms())
            out.matrix(r, idx.at(k)) = c;
    return out;
}

std::vector<int> symbol_indices(const std::vector<ModElement>& gens, int n, const Priority& pr)
{
    std::vector<int> beta(pr.size(), 0);
    if (gens.empty())
        return beta;
    auto sm = symbol_matrix(gens, n, pr);
    auto ech = ordered_row_echelon(sm.matrix);
    for (auto c : ech.pivots)
        ++beta[static_cast<std::size_t>(sm.column_class[c] - 1)];
    return beta;
}

std::size_t span_rank(const std::vector<ModElement>& V)
{
    KeyIndex idx;
    auto m = to_matrix(V, idx);
    return ordered_row_echelon(m).pivots.size();
}

std::size_t symbol_rank(const std::vector<ModElement>& gens, int n)
{
    std::vector<ModElement> rows;
    for (const auto& g : gens)
        rows.push_back(g.homogeneous(n));
    return span_rank(rows);
}

std::vector<ModElement> prolong(const std::vector<ModElement>& gens)
{
    std::vector<ModElement> out;
    for (const auto& g : gens)
        for (std::size_t i = 0; i < g.nvars(); ++i)
            out.push_back(g.highest_term().times_var(i));
    return out;
}

namespace {

int weighted(const std::vector<int>& beta)
{
    int s = 0;
    for (std::size_t a = 0; a < beta.size(); ++a)
        s += static_cast<int>(a + 1) * beta[a];
    return s;
}

// Substitute x_i -> sum_j A(i,j) x_j in a homogeneous element.
ModElement linear_change(const ModElement& e, const std::vector<std::vector<long>>& A)
{
    const std::size_t n = e.nvars();
    ModElement out(n, e.rank());
    for (const auto& [k, c] : e.terms()) {
        std::map<MultiIndex, RatFun> acc{{MultiIndex(n), c}};
        for (std::size_t i = 0; i < n; ++i)
            for (int rep = 0; rep < k.J[i]; ++rep) {
                std::map<MultiIndex, RatFun> next;
                for (const auto& [J, v] : acc)
                    for (std::size_t j = 0; j < n; ++j)
                        if (A[i][j] != 0)
                            next[J.plus(j)] += v * RatFun(A[i][j]);
                acc = std::move(next);
            }
        for (const auto& [J, v] : acc)
            out.add(ModKey{J, k.pos}, v);
    }
    return out;
}

} // namespace

DeltaSearch delta_regular_search(const std::vector<ModElement>& gens, int n, unsigned seed)
{
    DeltaSearch out;
    if (gens.empty())
        return out;
    const std::size_t nv = gens.front().nvars();
    if (nv <= 6) {
        out.score = -1;
        for (const auto& pr : permutations(static_cast<int>(nv))) {
            int s = weighted(symbol_indices(gens, n, pr));
            if (s > out.score) {
                out.score = s;
                out.best = pr;
                out.optimal.clear();
            }
            if (s == out.score)
                out.optimal.push_back(pr);
        }
        return out;
    }
    out.exhaustive = false;
    out.best = natural_priority(nv);
    out.score = weighted(symbol_indices(gens, n, out.best));
    out.optimal = {out.best};
    std::mt19937 rng(seed);
    std::uniform_int_distribution<long> dist(-3, 3);
    for (int trial = 0; trial < 8; ++trial) {
        std::vector<std::vector<long>> A(nv, std::vector<long>(nv));
        for (auto& row : A)
            for (auto& x : row)
                x = dist(rng);
        std::vector<ModElement> g2;
        for (const auto& g : gens)
            g2.push_back(linear_change(g.highest_term(), A));
        out.score = std::max(out.score, weighted(symbol_indices(g2, n, out.best)));
    }
    return out;
}

Characters cartan_characters(const std::vector<int>& beta, int m, int n)
{
    auto binom = [](long a, long b) -> long {
        if (b == 0)
            return 1;
        if (b < 0 || a < b)
            return 0;
        long r = 1;
        for (long i = 1; i <= b; ++i)
            r = r * (a - b + i) / i;
        return r;
    };
    Characters out;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        long a = static_cast<long>(i + 1);
        long v = m * binom(n + m - a - 1, n - 1) - beta[i];
        out.negative = out.negative || v < 0;
        out.alpha.push_back(v);
    }
    return out;
}

Rational modified_stirling(int a, int b, int c)
{
    if (a < 0 || b < 0 || c < 0)
        throw std::domain_error("modified Stirling numbers take non-negative arguments");
    if (b > a)
        throw std::domain_error("modified Stirling number s^(a)_b requires a >= b");
    // coefficients of prod_{k=1..a} (y + c + k), index = power of y
    std::vector<Rational> poly{Rational(1)};
    for (int k = 1; k <= a; ++k) {
        std::vector<Rational> next(poly.size() + 1);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i] * (c + k);
            next[i + 1] += poly[i];
        }
        poly = std::move(next);
    }
    return poly[static_cast<std::size_t>(a - b)];
}

FunctionCounts arbitrary_function_counts(const std::vector<long>& alpha, int m, int n, StirlingVariant v)
{
    auto fact = [](int k) {
        Rational r = 1;
        for (int i = 2; i <= k; ++i)
            r *= i;
        return r;
    };
    FunctionCounts out;
    out.f.assign(static_cast<std::size_t>(m), Rational(0));
    auto al = [&](int a) { return Rational(a <= static_cast<int>(alpha.size()) ? alpha[a - 1] : 0); };
    out.f[m - 1] = al(m);
    for (int a = m - 1; a >= 1; --a) {
        Rational f = al(a);
        for (int b = a + 1; b <= m; ++b) {
            Rational factor = fact(a - 1) / (v == StirlingVariant::Printed ? fact(m - 1) : fact(b - 1));
            f += factor * (modified_stirling(b - 1, b - a, 0) * al(b) - modified_stirling(b - 1, b - a, n) * out.f[b - 1]);
        }
        out.f[a - 1] = f;
    }
    for (const auto& f : out.f)
        if (f.get_den() != 1 || sgn(f) < 0)
            out.applicable = false;
    return out;
}

CartanReport cartan_test(const std::vector<ModElement>& gens, int n, const Priority& pr,
                         const std::vector<ModElement>& extra, int m, StirlingVariant v)
{
    CartanReport rep;
    rep.priority = pr;
    rep.n = n;
    rep.m = m > 0 ? m : static_cast<int>(pr.size());
    rep.beta = symbol_indices(gens, n, pr);
    rep.rank_n = symbol_rank(gens, n);
    auto next = prolong(gens);
    for (const auto& e : extra)
        next.push_back(e.homogeneous(n + 1));
    rep.rank_next = symbol_rank(next, n + 1);
    rep.weighted = weighted(rep.beta);
    rep.involutive = static_cast<int>(rep.rank_next) == rep.weighted;
    rep.delta_failure = static_cast<int>(rep.rank_next) > rep.weighted;
    rep.characters = cartan_characters(rep.beta, rep.m, n);
    rep.counts = arbitrary_function_counts(rep.characters.alpha, static_cast<int>(rep.beta.size()), n, v);
    return rep;
}

// ----------------------------------------------------- beta map and preimage

BetaMap BetaMap::zero(std::size_t p, std::size_t q)
{
    BetaMap b;
    b.p = p;
    b.q = q;
    b.u.assign(q, std::vector<RatFun>(p));
    return b;
}

TElement BetaMap::pullback(const SElement& e) const
{
    if (!e.tilde_zero())
        throw std::invalid_argument("beta pullback is defined on the polynomial part only");
    const std::size_t m = p + q;
    TElement out(m, m);
    for (const auto& [k, c] : e.poly.terms()) {
        std::map<MultiIndex, RatFun> acc{{MultiIndex(m), c}};
        for (std::size_t i = 0; i < p; ++i)
            for (int rep = 0; rep < k.J[i]; ++rep) {
                std::map<MultiIndex, RatFun> next;
                for (const auto& [J, v] : acc) {
                    next[J.plus(i)] += v;
                    for (std::size_t al = 0; al < q; ++al)
                        if (!u[al][i].is_zero())
                            next[J.plus(p + al)] += v * u[al][i];
                }
                acc = std::move(next);
            }
        for (const auto& [J, v] : acc) {
            out.add(ModKey{J, p + k.pos}, v);
            for (std::size_t i = 0; i < p; ++i)
                if (!u[k.pos][i].is_zero())
                    out.add(ModKey{J, i}, -v * u[k.pos][i]);
        }
    }
    return out;
}

std::vector<std::vector<SElement>> prolonged_symbol_preimage(const std::vector<TElement>& gens, const BetaMap& b,
                                                             int d)
{
    const std::size_t m = b.p + b.q;
    std::vector<std::vector<SElement>> out;
    for (int k = 0; k <= d; ++k) {
        std::vector<ModKey> src;
        for (const auto& J : multi_indices_of_order(b.p, k))
            for (std::size_t a = 0; a < b.q; ++a)
                src.push_back(ModKey{J, a});
        std::vector<ModElement> cols;
        for (const auto& s : src)
            cols.push_back(b.pullback(SElement::from_poly(ModElement::basis(b.p, b.q, s))));
        for (const auto& g : gens) {
            auto h = g.highest_term();
            int dg = h.degree();
            if (dg < 0 || dg > k)
                continue;
            for (const auto& K : multi_indices_of_order(m, k - dg))
                cols.push_back(-h.times(K));
        }
        KeyIndex idx;
        auto rows = to_matrix(cols, idx);
        // columns of the linear system are the generators above
        FMatrix sys(idx.keys.size(), cols.size());
        for (std::size_t r = 0; r < rows.rows(); ++r)
            for (std::size_t c = 0; c < rows.cols(); ++c)
                sys(c, r) = rows(r, c);
        std::vector<ModElement> found;
        for (const auto& v : nullspace(sys)) {
            ModElement e(b.p, b.q);
            for (std::size_t j = 0; j < src.size(); ++j)
                e.add(src[j], v[j]);
            if (!e.is_zero())
                found.push_back(e);
        }
        std::vector<SElement> level;
        for (auto& e : linear_basis(found, {}))
            level.push_back(SElement::from_poly(std::move(e)));
        out.push_back(std::move(level));
    }
    return out;
}

std::vector<ModKey> monomial_complement(const std::vector<ModKey>& gens, std::size_t nvars, std::size_t rank, int d)
{
    std::vector<ModKey> out;
    for (const auto& J : multi_indices_up_to(nvars, d))
        for (std::size_t a = 0; a < rank; ++a) {
            bool divisible = std::any_of(gens.begin(), gens.end(),
                                         [&](const ModKey& g) { return g.pos == a && g.J.divides(J); });
            if (!divisible)
                out.push_back(ModKey{J, a});
        }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ModElement> linear_basis(const std::vector<ModElement>& V, const std::vector<ModKey>& M)
{
    if (V.empty())
        return {};
    KeyIndex idx;
    for (const auto& v : V)
        for (const auto& [k, c] : v.terms())
            idx.add(k);
    std::vector<ModKey> order = idx.keys;
    auto in_M = [&](const ModKey& k) {
        return std::any_of(M.begin(), M.end(), [&](const ModKey& g) { return g.pos == k.pos && g.J.divides(k.J); });
    };
    std::sort(order.begin(), order.end(), [&](const ModKey& a, const ModKey& b) {
        bool ma = in_M(a), mb = in_M(b);
        if (ma != mb)
            return ma;
        return b < a;
    });
    KeyIndex sorted;
    for (const auto& k : order)
        sorted.add(k);
    auto m = to_matrix(V, sorted);
    auto piv = reduced_row_echelon(m);
    std::vector<ModElement> out;
    for (std::size_t r = 0; r < piv.size(); ++r) {
        ModElement e(V.front().nvars(), V.front().rank());
        for (std::size_t c = 0; c < m.cols(); ++c)
            e.add(sorted.keys[c], m(r, c));
        out.push_back(std::move(e));
    }
    return out;
}

DimensionCheck annihilator_dimension_check(const std::vector<TElement>& pS, const std::vector<TElement>& L,
                                           const std::vector<TElement>& Ti, int n)
{
    DimensionCheck out;
    out.n = n;
    std::vector<TElement> sum = pS;
    sum.insert(sum.end(), L.begin(), L.end());
    out.sum_rank = span_rank(sum);
    out.target_rank = span_rank(Ti);
    sum.insert(sum.end(), Ti.begin(), Ti.end());
    out.union_rank = span_rank(sum);
    out.ok = out.sum_rank == out.target_rank && out.union_rank == out.target_rank;
    return out;
}

// ------------------------------------------------------------ Groebner bases

int module_compare(const ModKey& a, const ModKey& b, ModuleOrder o)
{
    int da = a.J.order(), db = b.J.order();
    auto by_pos = [&]() { return a.pos == b.pos ? 0 : (a.pos < b.pos ? 1 : -1); };
    if (o == ModuleOrder::PositionDegreeLex) {
        if (int c = by_pos())
            return c;
        if (da != db)
            return da < db ? -1 : 1;
    } else {
        if (da != db)
            return da < db ? -1 : 1;
        if (int c = by_pos())
            return c;
    }
    if (a.J == b.J)
        return 0;
    return a.J < b.J ? -1 : 1;
}

namespace {

struct QPoly {
    // descending in the module order
    std::vector<std::pair<ModKey, Rational>> t;
};

QPoly to_q(const ModElement& e, ModuleOrder o)
{
    QPoly q;
    for (const auto& [k, c] : e.terms()) {
        if (!c.is_constant())
            throw std::invalid_argument("Groebner bases require rational coefficients");
        q.t.emplace_back(k, c.constant_value());
    }
    std::sort(q.t.begin(), q.t.end(),
              [&](const auto& a, const auto& b) { return module_compare(a.first, b.first, o) > 0; });
    return q;
}

ModElement from_q(const QPoly& q, std::size_t n, std::size_t r)
{
    ModElement e(n, r);
    for (const auto& [k, c] : q.t)
        e.add(k, RatFun(c));
    return e;
}

// a - c * x^K * b, merged in order
QPoly sub_scaled(const QPoly& a, const Rational& c, const MultiIndex& K, const QPoly& b, ModuleOrder o)
{
    QPoly out;
    std::size_t i = 0, j = 0;
    while (i < a.t.size() || j < b.t.size()) {
        if (j == b.t.size()) {
            out.t.push_back(a.t[i++]);
            continue;
        }
        ModKey kb{b.t[j].first.J + K, b.t[j].first.pos};
        if (i == a.t.size()) {
            out.t.emplace_back(kb, -c * b.t[j++].second);
            continue;
        }
        int cmp = module_compare(a.t[i].first, kb, o);
        if (cmp > 0) {
            out.t.push_back(a.t[i++]);
        } else if (cmp < 0) {
            out.t.emplace_back(kb, -c * b.t[j++].second);
        } else {
            Rational v = a.t[i].second - c * b.t[j].second;
            if (sgn(v) != 0)
                out.t.emplace_back(kb, v);
            ++i;
            ++j;
        }
    }
    return out;
}

QPoly reduce_q(QPoly f, const std::vector<QPoly>& G, ModuleOrder o)
{
    QPoly rem;
    while (!f.t.empty()) {
        const auto& [k, c] = f.t.front();
        bool reduced = false;
        for (const auto& g : G) {
            const auto& [gk, gc] = g.t.front();
            if (gk.pos == k.pos && gk.J.divides(k.J)) {
                f = sub_scaled(f, c / gc, k.J - gk.J, g, o);
                reduced = true;
                break;
            }
        }
        if (!reduced) {
            rem.t.push_back(f.t.front());
            f.t.erase(f.t.begin());
        }
    }
    return rem;
}

void make_monic(QPoly& q)
{
    Rational lc = q.t.front().second;
    for (auto& [k, c] : q.t)
        c /= lc;
}

MultiIndex lcm(const MultiIndex& a, const MultiIndex& b)
{
    MultiIndex out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.c[i] = std::max(a[i], b[i]);
    return out;
}

} // namespace

ModKey leading_key(const ModElement& e, ModuleOrder o)
{
    if (e.is_zero())
        throw std::invalid_argument("zero element has no leading term");
    const ModKey* best = nullptr;
    for (const auto& [k, c] : e.terms())
        if (!best || module_compare(k, *best, o) > 0)
            best = &k;
    return *best;
}

std::vector<ModElement> groebner_module(const std::vector<ModElement>& gens, ModuleOrder o)
{
    if (gens.empty())
        return {};
    const std::size_t n = gens.front().nvars(), r = gens.front().rank();
    std::vector<QPoly> G;
    for (const auto& g : gens) {
        auto q = reduce_q(to_q(g, o), G, o);
        if (!q.t.empty()) {
            make_monic(q);
            G.push_back(std::move(q));
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 0; j < G.size(); ++j)
        for (std::size_t i = 0; i < j; ++i)
            pairs.emplace_back(i, j);
    while (!pairs.empty()) {
        auto [i, j] = pairs.back();
        pairs.pop_back();
        const auto& ki = G[i].t.front().first;
        const auto& kj = G[j].t.front().first;
        if (ki.pos != kj.pos)
            continue;
        MultiIndex L = lcm(ki.J, kj.J);
        QPoly s = sub_scaled(QPoly{}, Rational(-1) / G[i].t.front().second, L - ki.J, G[i], o);
        s = sub_scaled(s, Rational(1) / G[j].t.front().second, L - kj.J, G[j], o);
        s = reduce_q(s, G, o);
        if (s.t.empty())
            continue;
        make_monic(s);
        G.push_back(std::move(s));
        for (std::size_t k = 0; k + 1 < G.size(); ++k)
            pairs.emplace_back(k, G.size() - 1);
    }
    // minimal then reduced
    std::vector<QPoly> min;
    for (std::size_t i = 0; i < G.size(); ++i) {
        const auto& ki = G[i].t.front().first;
        bool redundant = false;
        for (std::size_t j = 0; j < G.size() && !redundant; ++j) {
            if (i == j)
                continue;
            const auto& kj = G[j].t.front().first;
            if (kj.pos == ki.pos && kj.J.divides(ki.J) && (kj.J != ki.J || j < i))
                redundant = true;
        }
        if (!redundant)
            min.push_back(G[i]);
    }
    std::vector<QPoly> red;
    for (std::size_t i = 0; i < min.size(); ++i) {
        std::vector<QPoly> others;
        for (std::size_t j = 0; j < min.size(); ++j)
            if (j != i)
                others.push_back(min[j]);
        QPoly head;
        head.t.push_back(min[i].t.front());
        QPoly tail;
        tail.t.assign(min[i].t.begin() + 1, min[i].t.end());
        tail = reduce_q(tail, others, o);
        head.t.insert(head.t.end(), tail.t.begin(), tail.t.end());
        red.push_back(std::move(head));
    }
    std::sort(red.begin(), red.end(), [&](const QPoly& a, const QPoly& b) {
        return module_compare(a.t.front().first, b.t.front().first, o) < 0;
    });
    std::vector<ModElement> out;
    for (const auto& q : red)
        out.push_back(from_q(q, n, r));
    return out;
}

ModElement reduce(const ModElement& e, const std::vector<ModElement>& basis, ModuleOrder o)
{
    std::vector<QPoly> G;
    for (const auto& g : basis)
        if (!g.is_zero())
            G.push_back(to_q(g, o));
    return from_q(reduce_q(to_q(e, o), G, o), e.nvars(), e.rank());
}

} // namespace cartan
