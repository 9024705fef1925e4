#include "cartan/framekit.hpp"

#include "cartan/expr.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace cartan {

namespace {

std::string upper(std::string s)
{
    for (auto& ch : s)
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

std::string lower(std::string s)
{
    for (auto& ch : s)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

} // namespace

bool CrossSectionRule::matches(const Subject& s) const
{
    if (s.coord != coord)
        return false;
    if (word.empty())
        return s.J.is_zero();
    if (word.size() != s.J.size())
        return false;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (!word[i].matches(s.J[i]))
            return false;
    return true;
}

const CrossSectionRule* CrossSection::lookup(const Subject& s) const
{
    for (const auto& r : rules_)
        if (r.matches(s))
            return &r;
    return nullptr;
}

// ------------------------------------------------------------ MovingFrame

MovingFrame::MovingFrame(std::vector<std::string> independents, std::vector<std::string> dependents,
                         std::shared_ptr<const DeterminingSystem> sys)
    : spec_(std::make_unique<JetSpec>(std::move(independents), std::move(dependents))), sys_(std::move(sys)),
      rel_(sys_)
{
    if (sys_->ambient() != spec_->base())
        throw std::invalid_argument("determining system ambient coordinates must be the independents then dependents");
    if (sys_->generators().size() != sys_->m())
        throw std::invalid_argument("one generator per ambient coordinate is required");
    for (std::size_t a = 0; a < sys_->m(); ++a)
        spec_->base_var(a);
}

Var MovingFrame::source(const Subject& s) const
{
    if (s.coord < p())
        return spec_->x(s.coord);
    return spec_->u(s.coord - p(), s.J);
}

Var MovingFrame::invariant(const Subject& s) const { return intern(upper(var_name(source(s)))); }

std::optional<Subject> MovingFrame::subject_of(Var v) const
{
    std::string n = lower(var_name(v));
    if (var_name(v) != upper(var_name(v)))
        return std::nullopt;
    auto us = n.find('_');
    std::string base = n.substr(0, us);
    for (std::size_t i = 0; i < p(); ++i)
        if (spec_->independents()[i] == base && us == std::string::npos)
            return Subject{i, MultiIndex(p())};
    for (std::size_t a = 0; a < spec_->q(); ++a)
        if (spec_->dependents()[a] == base) {
            MultiIndex J(p());
            if (us != std::string::npos && !parse_word(n.substr(us + 1), spec_->independents(), J))
                return std::nullopt;
            Subject s{p() + a, J};
            if (invariant(s) != v)
                return std::nullopt;
            return s;
        }
    return std::nullopt;
}

std::pair<InvariantStatus, Rational> MovingFrame::status(const Subject& s, const CrossSection& cs,
                                                         const std::map<Var, Rational>& ids) const
{
    auto it = ids.find(invariant(s));
    if (it != ids.end())
        return {InvariantStatus::Identically, it->second};
    if (const auto* r = cs.lookup(s))
        return {r->status, r->value};
    return {InvariantStatus::Free, Rational(0)};
}

RatFun MovingFrame::evaluate(const RatFun& f, const CrossSection& cs, const std::map<Var, Rational>& ids) const
{
    return f.substitute([&](Var v) -> std::optional<RatFun> {
        auto inf = spec_->info(v);
        Subject s;
        if (inf.kind == JetSpec::Kind::Independent)
            s = Subject{static_cast<std::size_t>(inf.index), MultiIndex(p())};
        else if (inf.kind == JetSpec::Kind::Jet)
            s = Subject{p() + static_cast<std::size_t>(inf.index), inf.idx};
        else
            return std::nullopt;
        auto [st, val] = status(s, cs, ids);
        if (st == InvariantStatus::Normalized || st == InvariantStatus::Identically)
            return RatFun(val);
        return RatFun::variable(invariant(s));
    });
}

std::set<Var> MovingFrame::zero_vars(const CrossSection& cs, int order) const
{
    std::set<Var> z;
    auto consider = [&](const Subject& s) {
        auto [st, val] = status(s, cs);
        if ((st == InvariantStatus::Normalized || st == InvariantStatus::Identically) && val == 0)
            z.insert(source(s));
    };
    for (std::size_t i = 0; i < p(); ++i)
        consider(Subject{i, MultiIndex(p())});
    for (std::size_t a = 0; a < spec_->q(); ++a)
        for (const auto& J : multi_indices_up_to(p(), order + 1))
            consider(Subject{p() + a, J});
    return z;
}

RecurrenceRelation MovingFrame::recurrence_with(const Subject& s, const CrossSection& cs,
                                                const std::map<Var, Rational>& ids,
                                                const GeneratorProlongation& pr) const
{
    RecurrenceRelation out;
    out.subject = s;
    out.invariant = invariant(s);
    GenComb group;
    if (s.coord < p()) {
        out.rhs = ExteriorForm::symbol(FormSym::omega(static_cast<int>(s.coord)));
        group = sys_->reduce(pr.xi(s.coord));
    } else {
        std::size_t alpha = s.coord - p();
        for (std::size_t j = 0; j < p(); ++j) {
            RatFun c = evaluate(RatFun::variable(spec_->u(alpha, s.J.plus(j))), cs, ids);
            out.rhs = out.rhs + ExteriorForm::symbol(FormSym::omega(static_cast<int>(j)), c);
        }
        group = pr.phi(alpha, s.J);
    }
    for (const auto& [k, v] : group) {
        if (k.is_unit())
            throw std::logic_error("symbolic generator has a scalar part");
        out.rhs = out.rhs + ExteriorForm::symbol(FormSym::mu(k), evaluate(v, cs, ids));
    }
    return out;
}

RecurrenceRelation MovingFrame::recurrence(const Subject& s, const CrossSection& cs, int target_order,
                                           const std::map<Var, Rational>& ids) const
{
    int order = std::max(target_order, s.J.order());
    GeneratorProlongation pr(*spec_, InfinitesimalGenerator::symbolic(*sys_), sys_.get(),
                             GeneratorProlongation::Pruning{zero_vars(cs, order), order});
    return recurrence_with(s, cs, ids, pr);
}

RecurrenceRelation MovingFrame::normalized_recurrence(const Subject& s, const CrossSection& cs,
                                                      const FrameState& st) const
{
    auto r = recurrence(s, cs, std::max(st.order, s.J.order()), st.identities);
    r.rhs = r.rhs.substitute([&](const FormSym& f) -> std::optional<ExteriorForm> {
        auto it = st.solved.find(f);
        if (it == st.solved.end())
            return std::nullopt;
        return it->second;
    });
    return r;
}

std::vector<FormSym> MovingFrame::column_order(const std::set<FormSym>& syms) const
{
    std::vector<FormSym> cols(syms.begin(), syms.end());
    std::sort(cols.begin(), cols.end(), [](const FormSym& a, const FormSym& b) {
        if (a.B.order() != b.B.order())
            return a.B.order() > b.B.order();
        if (a.a != b.a)
            return a.a < b.a;
        return b.B < a.B;
    });
    return cols;
}

namespace {

// c = a*V + b with a, b constants and V a single variable.
std::optional<std::pair<Var, Rational>> single_variable_root(const RatFun& c)
{
    if (!c.is_polynomial())
        return std::nullopt;
    auto vars = c.num().variables();
    if (vars.size() != 1 || c.num().degree_in(vars[0]) != 1)
        return std::nullopt;
    Var v = vars[0];
    Rational d = c.den().constant_value();
    Rational a = c.num().coefficient_of(Monomial(v)).constant_value() / d;
    Rational b = c.num().constant_term() / d;
    return std::make_pair(v, Rational(-b / a));
}

} // namespace

FrameState MovingFrame::normalize(const CrossSection& cs, const NormalizeOptions& opt) const
{
    const int n = opt.order;
    const int prune = opt.prune_order < 0 ? n : opt.prune_order;
    GeneratorProlongation pr(*spec_, InfinitesimalGenerator::symbolic(*sys_), sys_.get(),
                             GeneratorProlongation::Pruning{zero_vars(cs, prune), prune});
    std::vector<Subject> subjects;
    for (std::size_t i = 0; i < p(); ++i)
        subjects.push_back(Subject{i, MultiIndex(p())});
    for (std::size_t a = 0; a < spec_->q(); ++a)
        for (int k = 0; k <= n; ++k) {
            auto Js = multi_indices_of_order(p(), k);
            for (auto it = Js.rbegin(); it != Js.rend(); ++it)
                subjects.push_back(Subject{p() + a, *it});
        }

    auto invertible = [&](const RatFun& f) {
        auto ok = [&](const Poly& q) {
            auto m = q.as_monomial();
            if (!m)
                return false;
            for (const auto& [v, e] : m->factors()) {
                auto s = subject_of(v);
                if (!s || status(*s, cs).first != InvariantStatus::Nonvanishing)
                    return false;
            }
            return true;
        };
        return ok(f.num()) && ok(f.den());
    };

    FrameState st;
    st.order = n;
    st.residual_order = opt.residual_order < 0 ? n - 1 : opt.residual_order;
    const std::size_t P = p();
    for (;;) {
        std::vector<RecurrenceRelation> rows;
        for (const auto& s : subjects) {
            auto stt = status(s, cs, st.identities).first;
            if (stt == InvariantStatus::Normalized || stt == InvariantStatus::Identically)
                rows.push_back(recurrence_with(s, cs, st.identities, pr));
        }
        std::set<FormSym> syms;
        for (const auto& r : rows)
            for (const auto& s : r.rhs.symbols())
                if (s.kind == FormKind::Mu)
                    syms.insert(s);
        auto cols = column_order(syms);
        std::map<FormSym, std::size_t> colidx;
        for (std::size_t c = 0; c < cols.size(); ++c)
            colidx[cols[c]] = c;
        FMatrix M(rows.size(), cols.size() + P);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (const auto& [w, c] : rows[r].rhs.terms()) {
                const FormSym& s = w.at(0);
                if (s.kind == FormKind::Mu)
                    M(r, colidx.at(s)) = c;
                else if (s.kind == FormKind::Omega)
                    M(r, cols.size() + static_cast<std::size_t>(s.a)) = c;
                else
                    throw std::logic_error("unexpected form in a recurrence relation");
            }
        auto piv = gauss_jordan(M, cols.size(), invertible);
        std::vector<bool> prow(rows.size(), false), pcol(cols.size(), false);
        for (auto [r, c] : piv) {
            prow[r] = true;
            pcol[c] = true;
        }
        bool learned = false;
        std::vector<RatFun> syz;
        std::vector<BlockedPivot> blocked;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (prow[r])
                continue;
            bool mu_zero = true;
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (!M(r, c).is_zero())
                    mu_zero = false;
            if (!mu_zero) {
                BlockedPivot b;
                b.subject = rows[r].subject;
                std::set<Var> vs;
                for (std::size_t c = 0; c < cols.size(); ++c)
                    for (Var v : M(r, c).variables())
                        vs.insert(v);
                b.invariants.assign(vs.begin(), vs.end());
                std::ostringstream os;
                os << "pivot for d" << name(rows[r].subject) << " blocked; declare";
                for (Var v : b.invariants)
                    os << " " << var_name(v) << " != 0 or " << var_name(v) << " == 0;";
                b.message = os.str();
                blocked.push_back(std::move(b));
                continue;
            }
            for (std::size_t j = 0; j < P; ++j) {
                const RatFun& c = M(r, cols.size() + j);
                if (c.is_zero())
                    continue;
                if (c.is_constant())
                    throw InconsistentSystem("cross-section is incompatible: d" + name(rows[r].subject) +
                                             " forces 0 = " + c.str());
                if (auto root = single_variable_root(c)) {
                    auto s = subject_of(root->first);
                    if (s && !st.identities.count(root->first)) {
                        auto stt = status(*s, cs);
                        if (stt.first == InvariantStatus::Nonvanishing && root->second == 0)
                            throw InconsistentSystem(var_name(root->first) +
                                                     " is declared nonvanishing but vanishes identically");
                        st.identities[root->first] = root->second;
                        learned = true;
                        continue;
                    }
                }
                syz.push_back(c);
            }
        }
        if (learned)
            continue;

        st.syzygies = std::move(syz);
        st.blocked = std::move(blocked);
        st.phantom = rows;
        std::set<FormSym> unsolved;
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (!pcol[c])
                unsolved.insert(cols[c]);
        for (const auto& j : sys_->parametric_up_to(st.residual_order))
            if (!syms.count(FormSym::mu(j)))
                unsolved.insert(FormSym::mu(j));
        for (const auto& s : unsolved) {
            if (s.B.order() <= st.residual_order)
                st.residual.insert(s);
            else
                st.unresolved.insert(s);
        }
        for (auto [r, c] : piv) {
            ExteriorForm e;
            for (std::size_t k = 0; k < cols.size(); ++k)
                if (k != c && !M(r, k).is_zero())
                    e = e - ExteriorForm::symbol(cols[k], M(r, k));
            for (std::size_t j = 0; j < P; ++j)
                if (!M(r, cols.size() + j).is_zero())
                    e = e - ExteriorForm::symbol(FormSym::omega(static_cast<int>(j)), M(r, cols.size() + j));
            st.solved[cols[c]] = e;
        }
        return st;
    }
}

StructureEquations MovingFrame::coframe(const FrameState& st, const CrossSection& cs) const
{
    const std::size_t m = sys_->m();
    const std::size_t P = p();
    auto value = [&](const Subject& s) {
        auto [stt, val] = status(s, cs, st.identities);
        if (stt == InvariantStatus::Normalized || stt == InvariantStatus::Identically)
            return RatFun(val);
        return RatFun::variable(invariant(s));
    };
    NormalizedSubstitution sub;
    for (std::size_t a = 0; a < m; ++a) {
        FormSym sig = FormSym::sigma(static_cast<int>(a));
        if (a < P) {
            sub.forms[sig] = ExteriorForm::symbol(FormSym::omega(static_cast<int>(a)));
            sub.lhs[sig] = FormSym::omega(static_cast<int>(a));
        } else {
            ExteriorForm f;
            for (std::size_t j = 0; j < P; ++j)
                f = f + ExteriorForm::symbol(FormSym::omega(static_cast<int>(j)),
                                             value(Subject{a, MultiIndex::unit(P, j)}));
            sub.forms[sig] = f;
        }
    }
    for (const auto& [k, v] : st.solved)
        sub.forms[k] = v;
    for (const auto& r : st.residual) {
        sub.forms[r] = ExteriorForm::symbol(r);
        sub.lhs[r] = r;
    }
    for (const auto& r : st.unresolved)
        sub.forms[r] = ExteriorForm::symbol(r);
    sub.scalars = [&](Var v) -> std::optional<RatFun> {
        for (std::size_t a = 0; a < m; ++a)
            if (rel_.target_var(a) == v)
                return value(Subject{a, MultiIndex(P)});
        return std::nullopt;
    };

    StructureEquations restricted;
    int maxo = 0;
    for (const auto& r : st.residual)
        maxo = std::max(maxo, r.B.order());
    restricted.order = maxo + 1;
    auto image = [&](const FormSym& s) -> std::optional<ExteriorForm> {
        if (s.kind != FormKind::Mu)
            return std::nullopt;
        return ExteriorForm::from_comb(rel_.normal_form(s.jet()));
    };
    for (const auto& [from, to] : sub.lhs) {
        ExteriorForm d;
        if (from.kind == FormKind::Sigma) {
            for (std::size_t b = 0; b < m; ++b)
                d = d + wedge(ExteriorForm::symbol(FormSym::mu(from.a, MultiIndex::unit(m, b))),
                              ExteriorForm::symbol(FormSym::sigma(static_cast<int>(b))));
        } else {
            const MultiIndex& B = from.B;
            for (std::size_t b = 0; b < m; ++b) {
                d = d + wedge(ExteriorForm::symbol(FormSym::sigma(static_cast<int>(b))),
                              ExteriorForm::symbol(FormSym::mu(from.a, B.plus(b))));
                for (int k = 1; k <= B.order(); ++k)
                    for (const auto& D : multi_indices_of_order(m, k)) {
                        if (!D.divides(B))
                            continue;
                        d = d + wedge(ExteriorForm::symbol(FormSym::mu(from.a, (B - D).plus(b))),
                                      ExteriorForm::symbol(FormSym::mu(static_cast<int>(b), D),
                                                           RatFun(binomial(B, D))));
                    }
            }
        }
        restricted.eqs[from] = d.substitute(image);
    }
    for (const auto& [lhs, rhs] : restricted.eqs)
        for (const auto& s : rhs.symbols())
            if (s.kind == FormKind::Mu && !sub.forms.count(s))
                sub.forms[s] = ExteriorForm::symbol(s);
    auto out = substitute_normalized(restricted, sub);
    out.refresh_open();
    return out;
}

SymbolNamer MovingFrame::namer() const
{
    return make_namer(*sys_, spec_->independents(), spec_->dependents());
}

FormResolver MovingFrame::resolver() const { return make_form_resolver(*sys_, spec_->independents()); }

CrossSectionRule MovingFrame::parse_rule(const std::string& text) const
{
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    CrossSectionRule r;
    r.text = trim(text);
    std::string lhs, rhs;
    if (auto k = text.find("!="); k != std::string::npos) {
        r.status = InvariantStatus::Nonvanishing;
        lhs = text.substr(0, k);
        rhs = text.substr(k + 2);
    } else if (auto k2 = text.find("=="); k2 != std::string::npos) {
        r.status = InvariantStatus::Identically;
        lhs = text.substr(0, k2);
        rhs = text.substr(k2 + 2);
    } else if (auto k3 = text.find('='); k3 != std::string::npos) {
        lhs = text.substr(0, k3);
        rhs = text.substr(k3 + 1);
    } else {
        throw ParseError("expected '=', '==' or '!=' in cross-section rule: " + r.text, 0);
    }
    lhs = lower(trim(lhs));
    rhs = trim(rhs);
    try {
        r.value = Rational(rhs);
        r.value.canonicalize();
    } catch (const std::exception&) {
        throw ParseError("cross-section value must be a rational constant: " + rhs, 0);
    }
    if (r.status == InvariantStatus::Nonvanishing && r.value != 0)
        throw ParseError("nonvanishing declarations take the form I != 0", 0);
    auto us = lhs.find('_');
    std::string base = lhs.substr(0, us);
    const auto& ind = spec_->independents();
    for (std::size_t i = 0; i < p(); ++i)
        if (ind[i] == base) {
            if (us != std::string::npos)
                throw ParseError("independent invariant takes no subscript: " + r.text, 0);
            r.coord = i;
            return r;
        }
    std::size_t alpha = spec_->q();
    for (std::size_t a = 0; a < spec_->q(); ++a)
        if (spec_->dependents()[a] == base)
            alpha = a;
    if (alpha == spec_->q())
        throw ParseError("unknown lifted invariant: " + base, 0);
    r.coord = p() + alpha;
    r.word.assign(p(), CountPattern{0, 0});
    std::string w = us == std::string::npos ? std::string() : lhs.substr(us + 1);
    std::vector<bool> seen(p(), false);
    std::size_t pos = 0;
    while (pos < w.size()) {
        std::size_t best = p(), len = 0;
        for (std::size_t i = 0; i < p(); ++i)
            if (ind[i].size() > len && w.compare(pos, ind[i].size(), ind[i]) == 0) {
                best = i;
                len = ind[i].size();
            }
        if (best == p())
            throw ParseError("unknown letter in word '" + w + "'", us + 1 + pos);
        if (seen[best])
            throw ParseError("repeated letter in word '" + w + "'", 0);
        seen[best] = true;
        pos += len;
        CountPattern c{1, 1};
        if (pos < w.size() && w[pos] == '*') {
            c = {0, -1};
            ++pos;
        } else if (pos < w.size() && w[pos] == '+') {
            c = {1, -1};
            ++pos;
        } else if (pos < w.size() && std::isdigit(static_cast<unsigned char>(w[pos]))) {
            std::size_t e = pos;
            while (e < w.size() && std::isdigit(static_cast<unsigned char>(w[e])))
                ++e;
            int n = std::stoi(w.substr(pos, e - pos));
            c = {n, n};
            pos = e;
        }
        r.word[best] = c;
    }
    return r;
}

// ------------------------------------------------------------- commutators

Commutators commutators(const StructureEquations& coframe, std::size_t p)
{
    Commutators out;
    for (std::size_t k = 0; k < p; ++k) {
        auto it = coframe.eqs.find(FormSym::omega(static_cast<int>(k)));
        if (it == coframe.eqs.end())
            continue;
        for (const auto& [w, c] : it->second.terms()) {
            bool horizontal = std::all_of(w.begin(), w.end(), [](const FormSym& s) { return s.kind == FormKind::Omega; });
            if (!horizontal) {
                out.partial = true;
                for (const auto& s : w)
                    if (s.kind == FormKind::Mu)
                        out.residual_terms.insert(s);
                continue;
            }
            out.Y[{k, static_cast<std::size_t>(w[0].a), static_cast<std::size_t>(w[1].a)}] = -c;
        }
    }
    return out;
}

// ---------------------------------------------------------- d^2 syzygies

D2Syzygies syzygies_from_d2(const StructureEquations& eqs, const std::vector<Var>& invariants,
                            const std::vector<std::string>& independents, const SymbolNamer& namer)
{
    std::set<FormSym> mus;
    for (const auto& [lhs, rhs] : eqs.eqs) {
        if (lhs.kind == FormKind::Mu)
            mus.insert(lhs);
        for (const auto& s : rhs.symbols())
            if (s.kind == FormKind::Mu)
                mus.insert(s);
    }
    std::vector<Var> unknowns;
    std::vector<std::string> labels;
    std::map<Var, ExteriorForm> dvar;
    for (Var I : invariants) {
        ExteriorForm d;
        for (std::size_t i = 0; i < independents.size(); ++i) {
            std::string label = "D_" + independents[i] + "(" + var_name(I) + ")";
            Var u = intern(label);
            unknowns.push_back(u);
            labels.push_back(label);
            d = d + ExteriorForm::symbol(FormSym::omega(static_cast<int>(i)), RatFun::variable(u));
        }
        int k = 0;
        for (const auto& s : mus) {
            std::string label = (namer ? namer(s) : "c" + std::to_string(k)) + "(" + var_name(I) + ")";
            ++k;
            Var u = intern(label);
            unknowns.push_back(u);
            labels.push_back(label);
            d = d + ExteriorForm::symbol(s, RatFun::variable(u));
        }
        dvar[I] = d;
    }
    auto d_var = [&](Var v) -> std::optional<ExteriorForm> {
        auto it = dvar.find(v);
        if (it == dvar.end())
            return std::nullopt;
        return it->second;
    };
    StructureRules rules{eqs.eqs, d_var};
    std::vector<RatFun> conditions;
    for (const auto& [lhs, rhs] : eqs.eqs) {
        auto dd = exterior_derivative(rhs, rules);
        for (const auto& [w, c] : dd.terms())
            conditions.push_back(c);
    }

    FMatrix A(conditions.size(), unknowns.size());
    std::vector<RatFun> b(conditions.size());
    auto zero = [&](Var v) -> std::optional<RatFun> {
        if (std::find(unknowns.begin(), unknowns.end(), v) != unknowns.end())
            return RatFun(0);
        return std::nullopt;
    };
    for (std::size_t r = 0; r < conditions.size(); ++r) {
        for (std::size_t c = 0; c < unknowns.size(); ++c)
            A(r, c) = conditions[r].derivative(unknowns[c]);
        b[r] = -conditions[r].substitute(zero);
    }
    auto sol = solve_linear(A, b, [](const RatFun& f) { return !f.is_zero(); });
    D2Syzygies out;
    for (const auto& [c, e] : sol.solved) {
        RatFun v = e.constant;
        for (const auto& [k, coef] : e.terms)
            v += coef * RatFun::variable(unknowns[k]);
        out.solved[labels[c]] = v;
    }
    for (const auto& [row, rhs] : sol.residual)
        out.relations.push_back(rhs);
    return out;
}

// ------------------------------------------------------ symbol polynomials

namespace {

ModElement to_t(const GenComb& c, std::size_t m)
{
    ModElement e(m, m);
    for (const auto& [k, v] : c)
        if (!k.is_unit())
            e.add(ModKey{k.B, static_cast<std::size_t>(k.gen)}, v);
    return e;
}

} // namespace

ModElement MovingFrame::invariantize_polynomial(const ModElement& e, const CrossSection& cs,
                                                const std::map<Var, Rational>& ids) const
{
    return e.map_coefficients([&](const RatFun& c) { return evaluate(c, cs, ids); });
}

std::vector<ModElement> MovingFrame::annihilator(const CrossSection& cs, int n, const std::map<Var, Rational>& ids,
                                                 bool phantoms) const
{
    const std::size_t m = sys_->m();
    auto at_section = [&](const RatFun& c) { return evaluate(rel_.to_source(c), cs, ids); };
    std::vector<GenJet> syms;
    std::vector<GenComb> cols;
    for (std::size_t a = 0; a < m; ++a)
        for (const auto& B : multi_indices_up_to(m, n)) {
            GenJet j{static_cast<int>(a), B};
            syms.push_back(j);
            cols.push_back(map_coefficients(rel_.normal_form(j), at_section));
        }
    std::vector<Subject> subjects;
    if (phantoms) {
        for (std::size_t i = 0; i < p(); ++i)
            subjects.push_back(Subject{i, MultiIndex(p())});
        for (std::size_t al = 0; al < spec_->q(); ++al)
            for (const auto& J : multi_indices_up_to(p(), n - 1))
                subjects.push_back(Subject{p() + al, J});
    }
    for (const auto& s : subjects) {
        auto stt = status(s, cs, ids).first;
        if (stt != InvariantStatus::Normalized && stt != InvariantStatus::Identically)
            continue;
        GenComb g;
        auto rec = recurrence(s, cs, n - 1, ids);
        for (const auto& [w, c] : rec.rhs.terms())
            if (w.at(0).kind == FormKind::Mu)
                add_term(g, w.at(0).jet(), c);
        cols.push_back(std::move(g));
    }
    std::map<GenJet, std::size_t> rows;
    for (const auto& c : cols)
        for (const auto& [k, v] : c)
            rows.emplace(k, 0);
    std::size_t r = 0;
    for (auto& [k, i] : rows)
        i = r++;
    FMatrix M(rows.size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (const auto& [k, v] : cols[c])
            M(rows.at(k), c) = v;
    std::vector<ModElement> found;
    for (const auto& v : nullspace(M)) {
        ModElement e(m, m);
        for (std::size_t j = 0; j < syms.size(); ++j)
            e.add(ModKey{syms[j].B, static_cast<std::size_t>(syms[j].gen)}, v[j]);
        if (!e.is_zero())
            found.push_back(std::move(e));
    }
    return linear_basis(found, {});
}

std::vector<ModElement> MovingFrame::isotropy_annihilator(const CrossSection& cs, int n,
                                                          const std::map<Var, Rational>& ids) const
{
    if (n < 1)
        throw std::invalid_argument("isotropy annihilator order must be at least 1");
    return annihilator(cs, n, ids, true);
}

std::vector<ModElement> MovingFrame::relation_polynomials(const CrossSection& cs, int n,
                                                          const std::map<Var, Rational>& ids) const
{
    return annihilator(cs, n, ids, false);
}

ModElement MovingFrame::prolonged_polynomial(const SElement& e, const CrossSection& cs,
                                             const std::map<Var, Rational>& ids) const
{
    const std::size_t m = sys_->m();
    InfinitesimalGenerator v;
    for (std::size_t a = 0; a < m; ++a)
        v.coeff.push_back(single(GenJet{static_cast<int>(a), MultiIndex(m)}));
    GeneratorProlongation raw(*spec_, std::move(v));
    ModElement out(m, m);
    for (std::size_t i = 0; i < e.tilde.size(); ++i)
        if (!e.tilde[i].is_zero())
            out = out + to_t(raw.xi(i), m) * e.tilde[i];
    for (const auto& [k, c] : e.poly.terms())
        out = out + to_t(raw.phi(k.pos, k.J), m) * c;
    return invariantize_polynomial(out, cs, ids);
}

std::vector<SElement> MovingFrame::s_basis(int n) const
{
    std::vector<SElement> out;
    for (std::size_t i = 0; i < p(); ++i) {
        SElement e(p(), spec_->q());
        e.tilde[i] = RatFun(1);
        out.push_back(std::move(e));
    }
    for (std::size_t al = 0; al < spec_->q(); ++al)
        for (const auto& J : multi_indices_up_to(p(), n - 1))
            out.push_back(SElement::from_poly(ModElement::basis(p(), spec_->q(), ModKey{J, al})));
    return out;
}

// ------------------------------------------------------------- ODE branches

OdeClass classify_ode(const RatFun& F, Var x, Var u, Var p)
{
    auto d = [](const RatFun& f, Var v) { return f.derivative(v); };
    auto Dhat = [&](const RatFun& f) { return d(f, x) + RatFun::variable(p) * d(f, u) + F * d(f, p); };
    OdeClass out;
    out.q_p4 = d(d(d(d(F, p), p), p), p);
    RatFun qp = d(F, p), qu = d(F, u), qpp = d(qp, p), qup = d(qu, p), quu = d(qu, u);
    out.q_p2x2 = Dhat(Dhat(qpp)) - RatFun(4) * Dhat(qup) - qp * Dhat(qpp) + RatFun(6) * quu -
                 RatFun(3) * qu * qpp + RatFun(4) * qp * qup;
    bool a = !out.q_p4.is_zero(), b = !out.q_p2x2.is_zero();
    out.branch = a ? (b ? "I" : "III") : (b ? "II" : "IV");
    return out;
}

} // namespace cartan
