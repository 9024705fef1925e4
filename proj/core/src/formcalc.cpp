#include "cartan/formcalc.hpp"

#include <algorithm>
#include <sstream>

#include "cartan/expr.hpp"

namespace cartan {

bool FormSym::operator<(const FormSym& o) const
{
    if (kind != o.kind)
        return kind < o.kind;
    if (a != o.a)
        return a < o.a;
    if (B.c.size() != o.B.c.size())
        return B.c.size() < o.B.c.size();
    return B < o.B;
}

// ------------------------------------------------------------ ExteriorForm

ExteriorForm ExteriorForm::scalar(const RatFun& f)
{
    ExteriorForm r;
    r.add({}, f);
    return r;
}

ExteriorForm ExteriorForm::symbol(const FormSym& s, const RatFun& coef)
{
    ExteriorForm r;
    r.add({s}, coef);
    return r;
}

ExteriorForm ExteriorForm::from_comb(const GenComb& c)
{
    ExteriorForm r;
    for (const auto& [k, v] : c) {
        if (k.is_unit())
            throw std::invalid_argument("combination has a scalar part");
        r.add({FormSym::mu(k)}, v);
    }
    return r;
}

int ExteriorForm::degree() const
{
    if (t_.empty())
        return -1;
    std::size_t d = t_.begin()->first.size();
    for (const auto& kv : t_)
        if (kv.first.size() != d)
            throw std::logic_error("form of mixed degree");
    return static_cast<int>(d);
}

RatFun ExteriorForm::coefficient(const Word& w) const
{
    ExteriorForm probe;
    probe.add(w, RatFun(1));
    if (probe.is_zero())
        return RatFun();
    const auto& [key, sign] = *probe.t_.begin();
    auto it = t_.find(key);
    return it == t_.end() ? RatFun() : it->second * sign;
}

std::set<FormSym> ExteriorForm::symbols() const
{
    std::set<FormSym> s;
    for (const auto& kv : t_)
        s.insert(kv.first.begin(), kv.first.end());
    return s;
}

void ExteriorForm::add(Word w, const RatFun& coef)
{
    if (coef.is_zero())
        return;
    bool neg = false;
    for (std::size_t i = 1; i < w.size(); ++i)
        for (std::size_t j = i; j > 0 && w[j] < w[j - 1]; --j) {
            std::swap(w[j], w[j - 1]);
            neg = !neg;
        }
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] == w[i - 1])
            return;
    auto it = t_.find(w);
    RatFun c = neg ? -coef : coef;
    if (it == t_.end()) {
        t_.emplace(std::move(w), c);
        return;
    }
    it->second += c;
    if (it->second.is_zero())
        t_.erase(it);
}

ExteriorForm ExteriorForm::operator+(const ExteriorForm& o) const
{
    ExteriorForm r = *this;
    for (const auto& [w, c] : o.t_)
        r.add(w, c);
    return r;
}

ExteriorForm ExteriorForm::operator-(const ExteriorForm& o) const
{
    ExteriorForm r = *this;
    for (const auto& [w, c] : o.t_)
        r.add(w, -c);
    return r;
}

ExteriorForm ExteriorForm::operator-() const
{
    ExteriorForm r;
    for (const auto& [w, c] : t_)
        r.t_.emplace(w, -c);
    return r;
}

ExteriorForm ExteriorForm::operator*(const RatFun& f) const
{
    ExteriorForm r;
    if (f.is_zero())
        return r;
    for (const auto& [w, c] : t_)
        r.add(w, c * f);
    return r;
}

ExteriorForm ExteriorForm::map_coefficients(const std::function<RatFun(const RatFun&)>& f) const
{
    ExteriorForm r;
    for (const auto& [w, c] : t_)
        r.add(w, f(c));
    return r;
}

ExteriorForm ExteriorForm::substitute(const std::function<std::optional<ExteriorForm>(const FormSym&)>& f) const
{
    ExteriorForm r;
    for (const auto& [w, c] : t_) {
        ExteriorForm acc = scalar(c);
        for (const auto& s : w) {
            auto img = f(s);
            acc = wedge(acc, img ? *img : symbol(s));
            if (acc.is_zero())
                break;
        }
        r = r + acc;
    }
    return r;
}

ExteriorForm ExteriorForm::drop(const std::function<bool(const FormSym&)>& pred) const
{
    ExteriorForm r;
    for (const auto& [w, c] : t_)
        if (std::none_of(w.begin(), w.end(), pred))
            r.t_.emplace(w, c);
    return r;
}

namespace {

std::string coefficient_prefix(const RatFun& c, bool& neg)
{
    neg = false;
    if (c.is_constant()) {
        Rational q = c.constant_value();
        neg = sgn(q) < 0;
        Rational aq = neg ? Rational(-q) : q;
        return aq == 1 ? std::string() : rational_string(aq) + "*";
    }
    if (c.is_polynomial() && c.num().size() == 1) {
        const auto& t = *c.num().terms().begin();
        Rational q = t.coef / c.den().terms().begin()->coef;
        neg = sgn(q) < 0;
        Rational aq = neg ? Rational(-q) : q;
        std::string s = aq == 1 ? std::string() : rational_string(aq) + "*";
        return s + t.mono.str() + "*";
    }
    return "(" + c.str() + ")*";
}

} // namespace

std::string ExteriorForm::str(const SymbolNamer& name) const
{
    if (t_.empty())
        return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [w, c] : t_) {
        bool neg = false;
        std::string pre;
        if (w.empty()) {
            pre = c.str();
            if (!pre.empty() && pre[0] == '-' && c.is_constant()) {
                neg = true;
                pre = pre.substr(1);
            }
        } else {
            pre = coefficient_prefix(c, neg);
        }
        if (first)
            os << (neg ? "-" : "");
        else
            os << (neg ? " - " : " + ");
        first = false;
        os << pre;
        for (std::size_t i = 0; i < w.size(); ++i)
            os << (i ? "∧" : "") << name(w[i]);
    }
    return os.str();
}

ExteriorForm wedge(const ExteriorForm& a, const ExteriorForm& b)
{
    ExteriorForm r;
    for (const auto& [wa, ca] : a.terms())
        for (const auto& [wb, cb] : b.terms()) {
            ExteriorForm::Word w = wa;
            w.insert(w.end(), wb.begin(), wb.end());
            r.add(std::move(w), ca * cb);
        }
    return r;
}

// ---------------------------------------------------------------------- d

namespace {

ExteriorForm d_scalar(const RatFun& f, const StructureRules& rules)
{
    ExteriorForm r;
    for (Var v : f.variables()) {
        RatFun pd = f.derivative(v);
        if (pd.is_zero())
            continue;
        std::optional<ExteriorForm> dv;
        if (rules.d_var)
            dv = rules.d_var(v);
        if (!dv)
            throw IncompleteRules("no differential for " + var_name(v));
        r = r + (*dv) * pd;
    }
    return r;
}

ExteriorForm d_symbol(const FormSym& s, const StructureRules& rules, const SymbolNamer& name)
{
    auto it = rules.d_symbol.find(s);
    if (it != rules.d_symbol.end())
        return it->second;
    if (s.kind == FormKind::Coord)
        return {};
    std::string label;
    if (name)
        label = name(s);
    else
        label = "symbol of kind " + std::to_string(static_cast<int>(s.kind));
    throw IncompleteRules("no structure rule for " + label);
}

} // namespace

ExteriorForm exterior_derivative(const ExteriorForm& f, const StructureRules& rules, const SymbolNamer& name)
{
    ExteriorForm r;
    for (const auto& [w, c] : f.terms()) {
        ExteriorForm word;
        word.add(w, RatFun(1));
        r = r + wedge(d_scalar(c, rules), word);
        for (std::size_t i = 0; i < w.size(); ++i) {
            ExteriorForm left, right;
            left.add(ExteriorForm::Word(w.begin(), w.begin() + static_cast<long>(i)), (i % 2) ? RatFun(-1) * c : c);
            right.add(ExteriorForm::Word(w.begin() + static_cast<long>(i) + 1, w.end()), RatFun(1));
            r = r + wedge(wedge(left, d_symbol(w[i], rules, name)), right);
        }
    }
    return r;
}

void StructureEquations::refresh_open()
{
    open.clear();
    for (const auto& [lhs, rhs] : eqs)
        for (const auto& s : rhs.symbols())
            if (!eqs.count(s) && s.kind != FormKind::Coord)
                open.insert(s);
}

// ----------------------------------------------------------------- series

namespace {

Rational factorial_of(const std::vector<int>& B)
{
    Rational f = 1;
    for (int b : B)
        for (int k = 2; k <= b; ++k)
            f *= k;
    return f;
}

int total(const std::vector<int>& B)
{
    int s = 0;
    for (int b : B)
        s += b;
    return s;
}

} // namespace

MCSeries::MCSeries(int N, std::size_t m) : N_(N), m_(m), mu_(m)
{
    for (std::size_t a = 0; a < m; ++a)
        for (int k = 0; k <= N; ++k)
            for (const auto& B : multi_indices_of_order(m, k))
                mu_[a][B.c] = ExteriorForm::symbol(FormSym::mu(static_cast<int>(a), B),
                                                   RatFun(Rational(1) / factorial_of(B.c)));
}

MCSeries::Series MCSeries::gradient(const Series& s, std::size_t b) const
{
    Series r;
    for (const auto& [B, f] : s) {
        if (B[b] == 0)
            continue;
        auto C = B;
        C[b] -= 1;
        r[C] = f * RatFun(B[b]);
    }
    return r;
}

MCSeries::Series MCSeries::wedge(const Series& a, const Series& b, int max_degree) const
{
    Series r;
    for (const auto& [A, fa] : a)
        for (const auto& [B, fb] : b) {
            std::vector<int> C(A.size());
            for (std::size_t i = 0; i < A.size(); ++i)
                C[i] = A[i] + B[i];
            if (total(C) > max_degree)
                continue;
            ExteriorForm w = cartan::wedge(fa, fb);
            if (w.is_zero())
                continue;
            auto it = r.find(C);
            if (it == r.end())
                r.emplace(C, w);
            else
                it->second = it->second + w;
        }
    for (auto it = r.begin(); it != r.end();)
        it = it->second.is_zero() ? r.erase(it) : std::next(it);
    return r;
}

StructureEquations diffeo_structure_equations(int N, std::size_t m)
{
    if (N < 0)
        throw std::invalid_argument("negative truncation order");
    MCSeries mu(N, m);
    StructureEquations out;
    out.order = N;
    std::vector<int> zero(m, 0);
    // mu^b[[H]] - dZ^b = -sigma^b + sum_{#D>0} mu^b_D H^D / D!
    std::vector<MCSeries::Series> tail(m);
    for (std::size_t b = 0; b < m; ++b) {
        tail[b] = mu.component(b);
        tail[b][zero] = -ExteriorForm::symbol(FormSym::sigma(static_cast<int>(b)));
    }
    for (std::size_t a = 0; a < m; ++a) {
        ExteriorForm ds;
        for (std::size_t b = 0; b < m; ++b) {
            auto g = mu.gradient(mu.component(a), b);
            auto it = g.find(zero);
            if (it != g.end())
                ds = ds + wedge(it->second, ExteriorForm::symbol(FormSym::sigma(static_cast<int>(b))));
        }
        out.eqs[FormSym::sigma(static_cast<int>(a))] = ds;
        if (N == 0)
            continue;
        MCSeries::Series dmu;
        for (std::size_t b = 0; b < m; ++b) {
            auto prod = mu.wedge(mu.gradient(mu.component(a), b), tail[b], N - 1);
            for (auto& [B, f] : prod) {
                auto it = dmu.find(B);
                if (it == dmu.end())
                    dmu.emplace(B, f);
                else
                    it->second = it->second + f;
            }
        }
        for (int k = 0; k < N; ++k)
            for (const auto& B : multi_indices_of_order(m, k)) {
                auto it = dmu.find(B.c);
                ExteriorForm f = it == dmu.end() ? ExteriorForm() : it->second * RatFun(factorial_of(B.c));
                out.eqs[FormSym::mu(static_cast<int>(a), B)] = f;
            }
    }
    out.refresh_open();
    return out;
}

// ------------------------------------------------------------ restriction

StructureEquations restrict_to_pseudogroup(const StructureEquations& eqs, const MCRelationSet& rel)
{
    const auto& sys = rel.system();
    auto image = [&](const FormSym& s) -> std::optional<ExteriorForm> {
        if (s.kind != FormKind::Mu)
            return std::nullopt;
        return ExteriorForm::from_comb(rel.normal_form(s.jet()));
    };
    StructureEquations out;
    out.order = eqs.order;
    for (const auto& [lhs, rhs] : eqs.eqs) {
        if (lhs.kind == FormKind::Mu) {
            GenJet j = lhs.jet();
            if (!sys.admissible(j) || sys.is_principal(j))
                continue;
        }
        out.eqs[lhs] = rhs.substitute(image);
    }
    out.refresh_open();
    return out;
}

StructureEquations substitute_normalized(const StructureEquations& eqs, const NormalizedSubstitution& sub)
{
    auto image = [&](const FormSym& s) -> std::optional<ExteriorForm> {
        auto it = sub.forms.find(s);
        if (it != sub.forms.end())
            return it->second;
        if (s.kind == FormKind::Omega || s.kind == FormKind::Theta || s.kind == FormKind::Coord)
            return std::nullopt;
        throw IncompleteRules("no normalized expression for a " +
                              std::string(s.kind == FormKind::Mu ? "Maurer-Cartan" : "horizontal") + " form");
    };
    StructureEquations out;
    out.order = eqs.order;
    for (const auto& [from, to] : sub.lhs) {
        auto it = eqs.eqs.find(from);
        if (it == eqs.eqs.end())
            throw IncompleteRules("no structure equation to pull back");
        ExteriorForm f = it->second;
        if (sub.scalars)
            f = f.map_coefficients([&](const RatFun& c) { return c.substitute(sub.scalars); });
        f = f.substitute(image).drop(is_contact);
        out.eqs[to] = f;
    }
    out.refresh_open();
    return out;
}

// ----------------------------------------------------------------- audits

D2Audit audit_d2(const StructureEquations& eqs, const std::function<std::optional<ExteriorForm>(Var)>& d_var,
                 const std::function<ExteriorForm(const ExteriorForm&)>& reduce)
{
    StructureRules rules{eqs.eqs, d_var};
    D2Audit out;
    for (const auto& [lhs, rhs] : eqs.eqs) {
        ExteriorForm dd;
        try {
            dd = exterior_derivative(rhs, rules);
        } catch (const IncompleteRules&) {
            out.skipped.push_back(lhs);
            continue;
        }
        if (reduce)
            dd = reduce(dd);
        if (!dd.is_zero()) {
            out.ok = false;
            out.failures.emplace_back(lhs, dd);
        }
    }
    return out;
}

std::function<std::optional<ExteriorForm>(Var)> target_differentials(const MCRelationSet& rel)
{
    const MCRelationSet* r = &rel;
    return [r](Var v) -> std::optional<ExteriorForm> {
        const auto& t = r->target_vars();
        for (std::size_t a = 0; a < t.size(); ++a)
            if (t[a] == v)
                return ExteriorForm::symbol(FormSym::sigma(static_cast<int>(a))) +
                       ExteriorForm::from_comb(r->normal_form(GenJet{static_cast<int>(a), MultiIndex(t.size())}));
        return std::nullopt;
    };
}

bool is_contact(const FormSym& s) { return s.kind == FormKind::Theta; }

SymbolNamer make_namer(const DeterminingSystem& sys, std::vector<std::string> independent,
                       std::vector<std::string> dependent)
{
    const DeterminingSystem* S = &sys;
    return [S, independent, dependent](const FormSym& s) -> std::string {
        switch (s.kind) {
        case FormKind::Sigma:
            return "σ^" + S->ambient().at(static_cast<std::size_t>(s.a));
        case FormKind::Omega:
            if (static_cast<std::size_t>(s.a) < independent.size())
                return "ω^" + independent[static_cast<std::size_t>(s.a)];
            return "ω^" + std::to_string(s.a + 1);
        case FormKind::Mu:
            return S->lifted_name(s.jet());
        case FormKind::Theta: {
            std::string n = static_cast<std::size_t>(s.a) < dependent.size() ? dependent[static_cast<std::size_t>(s.a)]
                                                                              : std::to_string(s.a + 1);
            if (s.B.is_zero() || independent.size() != s.B.c.size())
                return "θ^" + n;
            return "θ^" + n + "_" + s.B.word(independent);
        }
        case FormKind::Coord:
            return "d" + var_name(static_cast<Var>(s.a));
        }
        return "?";
    };
}

std::string equation_str(const FormSym& lhs, const ExteriorForm& rhs, const SymbolNamer& name, const std::string& rel)
{
    return "d" + name(lhs) + " " + rel + " " + rhs.str(name);
}

// ------------------------------------------------------------- parsing

FormResolver make_form_resolver(const DeterminingSystem& sys, std::vector<std::string> independent)
{
    const DeterminingSystem* S = &sys;
    return [S, independent](const std::string& n) -> std::optional<FormSym> {
        auto strip = [&](const std::string& pre, std::string& rest) {
            if (n.rfind(pre, 0) != 0)
                return false;
            rest = n.substr(pre.size());
            return true;
        };
        std::string rest;
        if (strip("σ^", rest) || strip("sigma^", rest)) {
            for (std::size_t a = 0; a < S->m(); ++a)
                if (S->ambient()[a] == rest)
                    return FormSym::sigma(static_cast<int>(a));
            return std::nullopt;
        }
        if (strip("ω^", rest) || strip("omega^", rest)) {
            for (std::size_t i = 0; i < independent.size(); ++i)
                if (independent[i] == rest)
                    return FormSym::omega(static_cast<int>(i));
            return std::nullopt;
        }
        GenJet j;
        if (S->parse_lifted(n, j))
            return FormSym::mu(j);
        return std::nullopt;
    };
}

namespace {

std::vector<std::pair<bool, std::string>> split_terms(const std::string& s)
{
    std::vector<std::pair<bool, std::string>> out;
    int depth = 0;
    bool neg = false;
    std::string cur;
    auto flush = [&](std::size_t pos) {
        auto b = cur.find_first_not_of(' ');
        if (b == std::string::npos) {
            if (!out.empty() || neg)
                throw ParseError("empty term", pos);
            return;
        }
        out.emplace_back(neg, cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        bool at_start = cur.find_first_not_of(' ') == std::string::npos;
        if (depth == 0 && (c == '+' || c == '-') && !(i > 0 && s[i - 1] == '^')) {
            if (at_start && out.empty()) {
                if (c == '-')
                    neg = !neg;
                continue;
            }
            flush(i);
            neg = c == '-';
            continue;
        }
        cur += c;
    }
    flush(s.size());
    return out;
}

std::vector<std::string> split_factors(const std::string& s)
{
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    const std::string wedge = "∧";
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        if (depth == 0) {
            if (c == '*') {
                out.push_back(cur);
                cur.clear();
                continue;
            }
            if (s.compare(i, wedge.size(), wedge) == 0) {
                out.push_back(cur);
                cur.clear();
                i += wedge.size() - 1;
                continue;
            }
            if (c == '/' && i + 1 < s.size() && s[i + 1] == '\\') {
                out.push_back(cur);
                cur.clear();
                ++i;
                continue;
            }
        }
        cur += c;
    }
    out.push_back(cur);
    for (auto& f : out) {
        auto b = f.find_first_not_of(' ');
        auto e = f.find_last_not_of(' ');
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

} // namespace

ExteriorForm parse_form(const std::string& text, const FormResolver& resolve)
{
    ExteriorForm r;
    if (text.find_first_not_of(' ') == std::string::npos)
        throw ParseError("empty form", 0);
    if (text == "0")
        return r;
    for (const auto& [neg, term] : split_terms(text)) {
        RatFun coef(neg ? -1 : 1);
        ExteriorForm::Word w;
        for (const auto& f : split_factors(term)) {
            if (f.empty())
                throw ParseError("empty factor in '" + term + "'", 0);
            if (auto s = resolve(f))
                w.push_back(*s);
            else
                coef *= parse_ratfun(f);
        }
        ExteriorForm t;
        t.add(w, coef);
        r = r + t;
    }
    return r;
}

} // namespace cartan
