#include "cartan/groupjets.hpp"

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

} // namespace

bool rank_less(const GenJet& a, const GenJet& b)
{
    if (a.gen != b.gen)
        return a.gen < b.gen;
    return a.B < b.B;
}

void add_term(GenComb& c, const GenJet& k, const RatFun& coef)
{
    if (coef.is_zero())
        return;
    auto [it, fresh] = c.try_emplace(k, coef);
    if (fresh)
        return;
    it->second += coef;
    if (it->second.is_zero())
        c.erase(it);
}

GenComb operator+(const GenComb& a, const GenComb& b)
{
    GenComb r = a;
    for (const auto& [k, v] : b)
        add_term(r, k, v);
    return r;
}

GenComb operator-(const GenComb& a, const GenComb& b)
{
    GenComb r = a;
    for (const auto& [k, v] : b)
        add_term(r, k, -v);
    return r;
}

GenComb scale(const GenComb& a, const RatFun& f)
{
    GenComb r;
    if (f.is_zero())
        return r;
    for (const auto& [k, v] : a)
        add_term(r, k, v * f);
    return r;
}

GenComb single(const GenJet& k, const RatFun& coef)
{
    GenComb r;
    add_term(r, k, coef);
    return r;
}

GenComb map_coefficients(const GenComb& a, const std::function<RatFun(const RatFun&)>& f)
{
    GenComb r;
    for (const auto& [k, v] : a)
        add_term(r, k, f(v));
    return r;
}

int max_order(const GenComb& a)
{
    int o = -1;
    for (const auto& kv : a)
        o = std::max(o, kv.first.order());
    return o;
}

// ------------------------------------------------------- DeterminingSystem

DeterminingSystem::DeterminingSystem(std::vector<std::string> ambient, std::vector<Generator> gens)
    : ambient_(std::move(ambient)), gens_(std::move(gens))
{
    for (const auto& a : ambient_) {
        vars_.push_back(intern(a));
        upper_.push_back(upper(a));
    }
    for (auto& g : gens_) {
        if (g.depends.empty())
            g.depends.assign(ambient_.size(), true);
        if (g.depends.size() != ambient_.size())
            throw std::invalid_argument("generator dependency list has wrong length");
        if (g.lifted.empty())
            g.lifted = "mu_" + g.name;
    }
}

DeterminingSystem::DeterminingSystem(const DeterminingSystem& o)
    : ambient_(o.ambient_), vars_(o.vars_), upper_(o.upper_), gens_(o.gens_), input_(o.input_),
      solved_(o.solved_)
{
}

int DeterminingSystem::generator_index(const std::string& name) const
{
    for (std::size_t g = 0; g < gens_.size(); ++g)
        if (gens_[g].name == name)
            return static_cast<int>(g);
    return -1;
}

bool DeterminingSystem::admissible(const GenJet& j) const
{
    if (j.is_unit())
        return true;
    const auto& dep = gens_.at(static_cast<std::size_t>(j.gen)).depends;
    for (std::size_t a = 0; a < dep.size(); ++a)
        if (!dep[a] && j.B[a] > 0)
            return false;
    return true;
}

bool DeterminingSystem::is_principal(const GenJet& j) const
{
    for (const auto& kv : solved_)
        if (kv.first.gen == j.gen && kv.first.B.divides(j.B))
            return true;
    return false;
}

void DeterminingSystem::clear_cache() const
{
    std::lock_guard lk(mu_);
    cache_.clear();
}

GenComb DeterminingSystem::normal_form(const GenJet& j) const
{
    if (j.is_unit())
        return single(j);
    if (!admissible(j))
        return {};
    {
        std::lock_guard lk(mu_);
        auto it = cache_.find(j);
        if (it != cache_.end())
            return it->second;
    }
    GenComb r = nf_uncached(j);
    std::lock_guard lk(mu_);
    cache_.emplace(j, r);
    return r;
}

GenComb DeterminingSystem::nf_uncached(const GenJet& j) const
{
    auto it = solved_.find(j);
    if (it != solved_.end())
        return reduce(it->second);
    for (std::size_t e = 0; e < m(); ++e) {
        if (j.B[e] == 0)
            continue;
        GenJet lower{j.gen, j.B.plus(e, -1)};
        if (is_principal(lower))
            return reduce(derivative(normal_form(lower), e));
    }
    return single(j);
}

GenComb DeterminingSystem::reduce(const GenComb& c) const
{
    GenComb r;
    for (const auto& [k, v] : c) {
        if (k.is_unit()) {
            add_term(r, k, v);
            continue;
        }
        if (!admissible(k))
            continue;
        if (!is_principal(k)) {
            add_term(r, k, v);
            continue;
        }
        for (const auto& [k2, v2] : normal_form(k))
            add_term(r, k2, v * v2);
    }
    return r;
}

GenComb DeterminingSystem::derivative(const GenComb& c, std::size_t a) const
{
    GenComb r;
    for (const auto& [k, v] : c) {
        add_term(r, k, v.derivative(vars_[a]));
        if (k.is_unit())
            continue;
        GenJet up{k.gen, k.B.plus(a)};
        if (admissible(up))
            add_term(r, up, v);
    }
    return r;
}

void DeterminingSystem::add_relation(const GenComb& rel)
{
    for (const auto& kv : rel)
        if (kv.first.is_unit())
            throw std::invalid_argument("determining relations must be homogeneous in the generator jets");
    input_.push_back(rel);
    insert_solved(rel);
}

void DeterminingSystem::insert_solved(GenComb first)
{
    std::vector<GenComb> pending{std::move(first)};
    while (!pending.empty()) {
        GenComb r = reduce(pending.back());
        pending.pop_back();
        if (r.empty())
            continue;
        GenJet lead = r.begin()->first;
        for (const auto& kv : r)
            if (rank_less(lead, kv.first))
                lead = kv.first;
        RatFun inv = RatFun(1) / r.at(lead);
        GenComb nf;
        for (const auto& [k, v] : r)
            if (k != lead)
                add_term(nf, k, -(v * inv));
        for (auto it = solved_.begin(); it != solved_.end();) {
            if (it->first.gen == lead.gen && it->first != lead && lead.B.divides(it->first.B)) {
                pending.push_back(single(it->first) - it->second);
                it = solved_.erase(it);
            } else {
                ++it;
            }
        }
        solved_[lead] = std::move(nf);
        clear_cache();
        for (auto& [k, v] : solved_)
            v = reduce(v);
        clear_cache();
    }
}

std::vector<GenJet> DeterminingSystem::jets_of_order(int order) const
{
    std::vector<GenJet> out;
    for (std::size_t g = 0; g < gens_.size(); ++g)
        for (const auto& B : multi_indices_of_order(m(), order)) {
            GenJet j{static_cast<int>(g), B};
            if (admissible(j))
                out.push_back(j);
        }
    return out;
}

std::vector<GenJet> DeterminingSystem::parametric_up_to(int order) const
{
    std::vector<GenJet> out;
    for (int k = 0; k <= order; ++k)
        for (const auto& j : jets_of_order(k))
            if (!is_principal(j))
                out.push_back(j);
    return out;
}

std::vector<GenJet> DeterminingSystem::principal_up_to(int order) const
{
    std::vector<GenJet> out;
    for (int k = 0; k <= order; ++k)
        for (const auto& j : jets_of_order(k))
            if (is_principal(j))
                out.push_back(j);
    return out;
}

Integrability DeterminingSystem::check_integrability(int k) const
{
    Integrability res;
    auto walk = [&](const GenJet& from, const MultiIndex& to) {
        GenComb c = normal_form(from);
        for (std::size_t e = 0; e < m(); ++e)
            for (int s = from.B[e]; s < to[e]; ++s)
                c = reduce(derivative(c, e));
        return c;
    };
    for (const auto& [L, nf] : solved_) {
        const auto& dep = gens_[static_cast<std::size_t>(L.gen)].depends;
        for (std::size_t e = 0; e < m(); ++e) {
            if (dep[e] || L.order() + 1 > k)
                continue;
            GenComb d = reduce(derivative(nf, e));
            if (!d.empty()) {
                res.ok = false;
                res.findings.push_back("D_" + ambient_[e] + " of " + jet_name(L) +
                                       " gives a new condition: " + str(d) + " = 0");
            }
        }
    }
    for (auto a = solved_.begin(); a != solved_.end(); ++a)
        for (auto b = std::next(a); b != solved_.end(); ++b) {
            if (a->first.gen != b->first.gen)
                continue;
            MultiIndex M(m());
            for (std::size_t e = 0; e < m(); ++e)
                M.c[e] = std::max(a->first.B[e], b->first.B[e]);
            if (M.order() > k)
                continue;
            GenComb d = walk(a->first, M) - walk(b->first, M);
            if (!d.empty()) {
                res.ok = false;
                res.findings.push_back("cross-derivative of " + jet_name(a->first) + " and " +
                                       jet_name(b->first) + " gives " + str(d) + " = 0");
            }
        }
    return res;
}

std::string DeterminingSystem::jet_name(const GenJet& j) const
{
    if (j.is_unit())
        return "1";
    const auto& g = gens_.at(static_cast<std::size_t>(j.gen));
    if (j.B.is_zero())
        return g.name;
    return g.name + "_" + j.B.word(ambient_);
}

std::string DeterminingSystem::lifted_name(const GenJet& j) const
{
    if (j.is_unit())
        return "1";
    const auto& g = gens_.at(static_cast<std::size_t>(j.gen));
    if (j.B.is_zero())
        return g.lifted;
    return g.lifted + "_" + j.B.word(upper_);
}

std::string DeterminingSystem::str(const GenComb& c, bool lifted) const
{
    if (c.empty())
        return "0";
    std::ostringstream os;
    bool first = true;
    std::vector<GenJet> keys;
    for (const auto& kv : c)
        keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end(), [](const GenJet& a, const GenJet& b) { return rank_less(b, a); });
    for (const auto& k : keys) {
        const RatFun& v = c.at(k);
        std::string name = lifted ? lifted_name(k) : jet_name(k);
        std::string coef;
        bool neg = false;
        if (v.is_constant()) {
            Rational q = v.constant_value();
            neg = sgn(q) < 0;
            Rational aq = neg ? Rational(-q) : q;
            if (aq != 1 || k.is_unit())
                coef = rational_string(aq);
        } else {
            coef = "(" + v.str() + ")";
        }
        if (first)
            os << (neg ? "-" : "");
        else
            os << (neg ? " - " : " + ");
        first = false;
        if (k.is_unit())
            os << (coef.empty() ? "1" : coef);
        else if (coef.empty())
            os << name;
        else
            os << coef << "*" << name;
    }
    return os.str();
}

namespace {

bool parse_with(const std::string& name, const std::vector<DeterminingSystem::Generator>& gens,
                bool lifted, const std::vector<std::string>& words, GenJet& out)
{
    int best = -1;
    std::size_t best_len = 0;
    for (std::size_t g = 0; g < gens.size(); ++g) {
        const std::string& n = lifted ? gens[g].lifted : gens[g].name;
        if (name.compare(0, n.size(), n) != 0)
            continue;
        if (name.size() != n.size() && name[n.size()] != '_')
            continue;
        if (n.size() >= best_len) {
            best = static_cast<int>(g);
            best_len = n.size();
        }
    }
    if (best < 0)
        return false;
    MultiIndex B(words.size());
    if (name.size() > best_len && !parse_word(name.substr(best_len + 1), words, B))
        return false;
    out = GenJet{best, B};
    return true;
}

} // namespace

bool DeterminingSystem::parse_jet(const std::string& name, GenJet& out) const
{
    return parse_with(name, gens_, false, ambient_, out);
}

bool DeterminingSystem::parse_lifted(const std::string& name, GenJet& out) const
{
    return parse_with(name, gens_, true, upper_, out);
}

ProlongedSystem prolong_determining_system(const DeterminingSystem& sys, int k)
{
    ProlongedSystem out;
    out.order = k;
    for (const auto& j : sys.principal_up_to(k))
        out.relations.emplace_back(j, single(j) - sys.normal_form(j));
    out.integrability = sys.check_integrability(k);
    return out;
}

// ----------------------------------------------------------- MCRelationSet

MCRelationSet::MCRelationSet(std::shared_ptr<const DeterminingSystem> sys) : sys_(std::move(sys))
{
    for (const auto& a : sys_->ambient())
        targets_.push_back(intern(upper(a)));
    for (const auto& r : sys_->input_relations())
        lifted_.push_back(map_coefficients(r, [&](const RatFun& f) { return to_target(f); }));
}

RatFun MCRelationSet::to_target(const RatFun& f) const
{
    return f.rename([&](Var v) {
        for (std::size_t a = 0; a < targets_.size(); ++a)
            if (v == sys_->ambient_var(a))
                return targets_[a];
        return v;
    });
}

RatFun MCRelationSet::to_source(const RatFun& f) const
{
    return f.rename([&](Var v) {
        for (std::size_t a = 0; a < targets_.size(); ++a)
            if (v == targets_[a])
                return sys_->ambient_var(a);
        return v;
    });
}

GenComb MCRelationSet::normal_form(const GenJet& j) const
{
    return map_coefficients(sys_->normal_form(j), [&](const RatFun& f) { return to_target(f); });
}

GenComb MCRelationSet::reduce(const GenComb& c) const
{
    GenComb r;
    for (const auto& [k, v] : c) {
        if (k.is_unit()) {
            add_term(r, k, v);
            continue;
        }
        for (const auto& [k2, v2] : normal_form(k))
            add_term(r, k2, v * v2);
    }
    return r;
}

std::string MCRelationSet::str(const GenComb& c) const
{
    return sys_->str(c, true);
}

MCRelationSet lift_system(std::shared_ptr<const DeterminingSystem> sys)
{
    return MCRelationSet(std::move(sys));
}

// ------------------------------------------------------- prolonged action

GroupJetFrame GroupJetFrame::identity(const JetSpec& spec)
{
    GroupJetFrame f;
    for (std::size_t a = 0; a < spec.p() + spec.q(); ++a)
        f.targets.push_back(RatFun::variable(spec.base_var(a)));
    return f;
}

ProlongedAction prolonged_action(const GroupJetFrame& frame, const JetSpec& spec, int k)
{
    const std::size_t p = spec.p();
    if (frame.targets.size() != p + spec.q())
        throw std::invalid_argument("frame needs one target per base coordinate");
    std::vector<RatFun> X(frame.targets.begin(), frame.targets.begin() + static_cast<long>(p));
    FMatrix W = lifted_total_derivative_matrix(spec, X);
    ProlongedAction out;
    for (std::size_t alpha = 0; alpha < spec.q(); ++alpha) {
        for (int n = 0; n <= k; ++n)
            for (const auto& J : multi_indices_of_order(p, n)) {
                auto key = std::make_pair(alpha, J.c);
                auto ov = frame.overrides.find(key);
                if (ov != frame.overrides.end()) {
                    out[key] = ov->second;
                    continue;
                }
                if (n == 0) {
                    out[key] = frame.targets[p + alpha];
                    continue;
                }
                std::size_t i = 0;
                while (J[i] == 0)
                    ++i;
                const RatFun& prev = out.at({alpha, J.plus(i, -1).c});
                RatFun v;
                for (std::size_t j = 0; j < p; ++j)
                    if (!W(i, j).is_zero())
                        v += W(i, j) * spec.total_derivative(prev, j);
                out[key] = v;
            }
    }
    return out;
}

// ------------------------------------------------- generator prolongation

InfinitesimalGenerator InfinitesimalGenerator::symbolic(const DeterminingSystem& sys)
{
    InfinitesimalGenerator v;
    for (std::size_t a = 0; a < sys.m(); ++a)
        v.coeff.push_back(sys.normal_form(GenJet{static_cast<int>(a), MultiIndex(sys.m())}));
    return v;
}

InfinitesimalGenerator InfinitesimalGenerator::concrete(const std::vector<RatFun>& c)
{
    InfinitesimalGenerator v;
    for (const auto& f : c)
        v.coeff.push_back(single(GenJet::unit(), f));
    return v;
}

GeneratorProlongation::GeneratorProlongation(const JetSpec& spec, InfinitesimalGenerator v,
                                             const DeterminingSystem* sys)
    : GeneratorProlongation(spec, std::move(v), sys, Pruning{})
{
}

GeneratorProlongation::GeneratorProlongation(const JetSpec& spec, InfinitesimalGenerator v,
                                             const DeterminingSystem* sys, Pruning prune)
    : spec_(spec), v_(std::move(v)), sys_(sys), prune_(std::move(prune))
{
    if (v_.coeff.size() != spec.p() + spec.q())
        throw std::invalid_argument("generator needs one coefficient per base coordinate");
    if (sys_ && sys_->m() != spec.p() + spec.q())
        throw std::invalid_argument("determining system ambient space must match the jet base");
}

GenComb GeneratorProlongation::total_derivative(const GenComb& c, std::size_t i) const
{
    GenComb r;
    for (const auto& [k, v] : c) {
        add_term(r, k, spec_.total_derivative(v, i));
        if (k.is_unit())
            continue;
        for (std::size_t a = 0; a < spec_.p() + spec_.q(); ++a) {
            GenJet up{k.gen, k.B.plus(a)};
            if (sys_ && !sys_->admissible(up))
                continue;
            RatFun da = spec_.base_derivative(i, a);
            if (!da.is_zero())
                add_term(r, up, v * da);
        }
    }
    return sys_ ? sys_->reduce(r) : r;
}

GenComb GeneratorProlongation::prune(GenComb c, int order) const
{
    if (prune_.target_order < 0 || prune_.zero_vars.empty())
        return c;
    int budget = prune_.target_order - order;
    GenComb r;
    for (auto& [k, v] : c) {
        std::vector<Term> keep;
        for (const auto& t : v.num().terms()) {
            int z = 0;
            for (const auto& [var, e] : t.mono.factors())
                if (prune_.zero_vars.count(var))
                    z += static_cast<int>(e);
            if (z <= budget)
                keep.push_back(t);
        }
        if (keep.size() == v.num().size())
            add_term(r, k, v);
        else
            add_term(r, k, RatFun(Poly::from_terms(std::move(keep)), v.den()));
    }
    return r;
}

GenComb GeneratorProlongation::characteristic(std::size_t alpha) const
{
    const std::size_t p = spec_.p();
    GenComb Q = v_.coeff[p + alpha];
    for (std::size_t i = 0; i < p; ++i)
        Q = Q - scale(v_.coeff[i], RatFun::variable(spec_.u(alpha, MultiIndex::unit(p, i))));
    return Q;
}

GenComb GeneratorProlongation::phi(std::size_t alpha, const MultiIndex& J) const
{
    const std::size_t p = spec_.p();
    if (J.is_zero())
        return prune(sys_ ? sys_->reduce(v_.coeff[p + alpha]) : v_.coeff[p + alpha], 0);
    auto key = std::make_pair(alpha, J.c);
    {
        std::lock_guard lk(mu_);
        auto it = memo_.find(key);
        if (it != memo_.end())
            return it->second;
    }
    std::size_t i = 0;
    while (J[i] == 0)
        ++i;
    MultiIndex Jp = J.plus(i, -1);
    GenComb r = total_derivative(phi(alpha, Jp), i);
    for (std::size_t k = 0; k < p; ++k) {
        GenComb dxi = total_derivative(v_.coeff[k], i);
        if (dxi.empty())
            continue;
        r = r - scale(dxi, RatFun::variable(spec_.u(alpha, Jp.plus(k))));
    }
    r = prune(std::move(r), J.order());
    std::lock_guard lk(mu_);
    memo_.emplace(key, r);
    return r;
}

std::vector<GenComb> characteristic(const JetSpec& spec, const InfinitesimalGenerator& v)
{
    GeneratorProlongation pr(spec, v);
    std::vector<GenComb> out;
    for (std::size_t a = 0; a < spec.q(); ++a)
        out.push_back(pr.characteristic(a));
    return out;
}

} // namespace cartan
