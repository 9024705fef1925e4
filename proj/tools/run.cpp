#include "run.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "cartan/expr.hpp"
#include "cartan/formcalc.hpp"
#include "cartan/symbolmod.hpp"

namespace cartan::cli {

// ------------------------------------------------------------------ report

void Report::put(const std::string& key, const std::string& value)
{
    records_.push_back(Record{depth_, key, value, false});
}

void Report::open(const std::string& key)
{
    records_.push_back(Record{depth_, key, "", true});
    ++depth_;
}

void Report::close()
{
    if (depth_ > 0)
        --depth_;
}

std::vector<std::string> Report::values(const std::string& key) const
{
    std::vector<std::string> out;
    for (const auto& r : records_)
        if (!r.section && r.key == key)
            out.push_back(r.value);
    return out;
}

std::string Report::value(const std::string& key) const
{
    for (const auto& r : records_)
        if (!r.section && r.key == key)
            return r.value;
    return "";
}

std::string Report::body() const
{
    std::string out;
    for (const auto& r : records_) {
        out.append(static_cast<std::size_t>(2 * r.depth), ' ');
        out += r.key;
        out += ':';
        if (!r.section) {
            out += ' ';
            out += r.value;
        }
        out += '\n';
    }
    return out;
}

std::string Report::digest() const
{
    std::string b = body();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(b.data(), b.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string Report::text() const { return body() + "digest: sha256:" + digest() + "\n"; }

// ---------------------------------------------------------------- helpers

namespace {

template <class T>
std::string join(const std::vector<T>& v, const char* sep = " ")
{
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            os << sep;
        os << v[i];
    }
    return os.str();
}

std::string join_rationals(const std::vector<Rational>& v)
{
    std::vector<std::string> s;
    for (const auto& q : v)
        s.push_back(q.get_str());
    return join(s);
}

std::string yes(bool b) { return b ? "true" : "false"; }

std::string num(double d)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", d);
    return buf;
}

class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const MovingFrame& need_frame(const Model& m)
{
    if (!m.frame)
        throw CommandError("this command needs a split declaration");
    return *m.frame;
}

std::vector<std::string> names_of(const std::set<FormSym>& s, const SymbolNamer& namer)
{
    std::vector<std::string> out;
    for (const auto& f : s)
        out.push_back(namer(f));
    return out;
}

void put_equations(Report& r, const StructureEquations& eqs, const SymbolNamer& namer)
{
    for (const auto& [lhs, rhs] : eqs.eqs)
        r.put("equation", equation_str(lhs, rhs, namer));
    if (!eqs.open.empty())
        r.put("open", join(names_of(eqs.open, namer)));
}

int put_audit(Report& r, const D2Audit& a, const SymbolNamer& namer)
{
    r.open("d2_audit");
    r.put("ok", yes(a.ok));
    r.put("skipped", std::to_string(a.skipped.size()));
    for (const auto& [lhs, rest] : a.failures)
        r.put("failure", "d(d" + namer(lhs) + ") = " + rest.str(namer));
    r.close();
    return a.ok ? kOk : kInconsistent;
}

std::vector<Subject> subjects_up_to(const MovingFrame& mf, int n)
{
    std::vector<Subject> out;
    std::size_t p = mf.p(), q = mf.spec().q();
    for (std::size_t i = 0; i < p; ++i)
        out.push_back(Subject{i, MultiIndex(p)});
    for (std::size_t a = 0; a < q; ++a)
        for (const auto& J : multi_indices_up_to(p, n))
            out.push_back(Subject{p + a, J});
    return out;
}

// ---------------------------------------------------------------- commands

int cmd_lift(Report& r, const Problem& p, const Model& m, const Options& opt)
{
    const auto& sys = *m.system;
    r.open("system");
    r.put("ambient", join(sys.ambient()));
    std::vector<std::string> g;
    for (const auto& gen : sys.generators())
        g.push_back(gen.name + ":" + gen.lifted);
    r.put("generators", join(g));
    r.put("relations", std::to_string(p.det.size()));
    for (const auto& c : sys.input_relations())
        r.put("relation", sys.str(c) + " = 0");
    r.close();
    MCRelationSet rel(m.system);
    r.open("lifted");
    for (const auto& c : rel.relations())
        r.put("relation", rel.str(c) + " = 0");
    r.close();
    int n = opt.order < 0 ? 1 : opt.order;
    r.open("normal_forms");
    r.put("order", std::to_string(n));
    for (const auto& j : sys.principal_up_to(n))
        r.put("form", sys.lifted_name(j) + " = " + rel.str(rel.normal_form(j)));
    r.put("basis", [&] {
        std::vector<std::string> b;
        for (const auto& j : rel.basis(n))
            b.push_back(sys.lifted_name(j));
        return join(b);
    }());
    r.close();
    auto integ = sys.check_integrability(n);
    r.open("integrability");
    r.put("order", std::to_string(n));
    r.put("ok", yes(integ.ok));
    for (const auto& f : integ.findings)
        r.put("finding", f);
    r.close();
    return kOk;
}

int cmd_structure(Report& r, const Problem& p, const Model& m, const Options& opt)
{
    if (p.group.empty())
        throw CommandError("structure needs a group declaration");
    int n = opt.order < 0 ? 1 : opt.order;
    auto namer = make_namer(*m.system, p.independent, p.dependent);
    auto eqs = diffeo_structure_equations(n, p.base.size());
    bool restricted = !p.det.empty();
    MCRelationSet rel(m.system);
    if (restricted)
        eqs = restrict_to_pseudogroup(eqs, rel);
    r.put("order", std::to_string(n));
    r.put("restricted", yes(restricted));
    r.put("count", std::to_string(eqs.eqs.size()));
    put_equations(r, eqs, namer);
    return put_audit(r, audit_d2(eqs, target_differentials(rel)), namer);
}

int cmd_recurrence(Report& r, const Model& m, const Options& opt)
{
    const auto& mf = need_frame(m);
    int n = opt.order < 0 ? 1 : opt.order;
    r.put("order", std::to_string(n));
    for (const auto& s : subjects_up_to(mf, n)) {
        auto rec = mf.recurrence(s, m.section);
        r.put("relation", "d" + mf.name(s) + " = " + mf.str(rec.rhs));
    }
    return kOk;
}

void put_state(Report& r, const MovingFrame& mf, const FrameState& st)
{
    auto namer = mf.namer();
    r.put("order", std::to_string(st.order));
    r.open("solved");
    for (const auto& [s, f] : st.solved)
        r.put("form", namer(s) + " ≡ " + mf.str(f));
    r.close();
    r.put("residual", join(names_of(st.residual, namer)));
    r.put("residual_order", std::to_string(st.residual_order));
    r.put("unresolved", std::to_string(st.unresolved.size()));
    for (const auto& [v, c] : st.identities)
        r.put("identity", var_name(v) + " = " + c.get_str());
    for (const auto& z : st.syzygies)
        r.put("syzygy", z.str() + " = 0");
    for (const auto& b : st.blocked) {
        r.open("blocked");
        r.put("subject", mf.name(b.subject));
        std::vector<std::string> inv;
        for (Var v : b.invariants)
            inv.push_back(var_name(v));
        r.put("invariants", join(inv));
        r.put("message", b.message);
        r.close();
    }
    r.put("complete", yes(st.complete()));
    r.put("status", st.blocked.empty() ? "normalized" : "branching-required");
}

int cmd_normalize(Report& r, const Model& m, const Options& opt)
{
    const auto& mf = need_frame(m);
    auto st = mf.normalize(m.section, NormalizeOptions{opt.order < 0 ? 3 : opt.order});
    put_state(r, mf, st);
    return kOk;
}

int cmd_coframe(Report& r, const Model& m, const Options& opt)
{
    const auto& mf = need_frame(m);
    auto st = mf.normalize(m.section, NormalizeOptions{opt.order < 0 ? 3 : opt.order});
    r.open("frame");
    put_state(r, mf, st);
    r.close();
    if (!st.blocked.empty())
        throw CommandError("normalization is blocked; declare the branch in the xsec block");
    auto cf = mf.coframe(st, m.section);
    auto namer = mf.namer();
    r.open("coframe");
    put_equations(r, cf, namer);
    auto cm = commutators(cf, mf.p());
    r.put("partial", yes(cm.partial));
    r.close();

    std::set<Var> invs;
    for (const auto& [lhs, rhs] : cf.eqs)
        for (const auto& [w, c] : rhs.terms())
            for (Var v : c.variables())
                if (mf.subject_of(v))
                    invs.insert(v);
    r.open("syzygies");
    if (cf.open.empty()) {
        auto sy = syzygies_from_d2(cf, std::vector<Var>(invs.begin(), invs.end()), mf.spec().independents(), namer);
        for (const auto& [k, v] : sy.solved)
            r.put("derived", k + " = " + v.str());
        for (const auto& z : sy.relations)
            r.put("relation", z.str() + " = 0");
    } else {
        r.put("skipped", "open forms in the coframe");
    }
    r.close();

    auto d_var = [&](Var v) -> std::optional<ExteriorForm> {
        auto s = mf.subject_of(v);
        if (!s)
            return std::nullopt;
        return mf.normalized_recurrence(*s, m.section, st).rhs;
    };
    return put_audit(r, audit_d2(cf, d_var), namer);
}

Priority parse_priority(const std::string& text, const std::vector<std::string>& vars)
{
    std::vector<std::string> order;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, ','))
        order.push_back(cur);
    if (order.size() != vars.size())
        throw CommandError("--priority must list each of " + join(vars, ",") + " once");
    Priority pr(vars.size(), 0);
    for (std::size_t c = 0; c < order.size(); ++c) {
        auto it = std::find(vars.begin(), vars.end(), order[c]);
        if (it == vars.end() || pr[static_cast<std::size_t>(it - vars.begin())] != 0)
            throw CommandError("--priority must list each of " + join(vars, ",") + " once");
        pr[static_cast<std::size_t>(it - vars.begin())] = static_cast<int>(c + 1);
    }
    return pr;
}

std::vector<ModElement> module_generators(Report& r, const Problem& p, const Model& m, int n)
{
    auto names = t_names(p.base);
    std::vector<ModElement> gens;
    if (!p.symbol.empty()) {
        r.put("source", "symbol");
        for (const auto& s : p.symbol) {
            try {
                gens.push_back(parse_module_element(s.text, names));
            } catch (const ParseError& e) {
                std::string msg = e.what();
                auto cut = msg.rfind(" at offset ");
                auto [l, c] = location(p.source, s.offset + e.position());
                throw Diagnostic(cut == std::string::npos ? msg : msg.substr(0, cut), l, c);
            }
        }
    } else {
        r.put("source", "isotropy-annihilator");
        gens = need_frame(m).isotropy_annihilator(m.section, n);
    }
    return gens;
}

int cmd_cartan_test(Report& r, const Problem& p, const Model& m, const Options& opt)
{
    int n = opt.order < 0 ? 1 : opt.order;
    if (n < 1)
        throw CommandError("--order must be at least 1");
    auto names = t_names(p.base);
    auto all = module_generators(r, p, m, n);
    std::vector<ModElement> gens;
    for (const auto& g : all)
        if (g.highest_term().degree() == n)
            gens.push_back(g.highest_term());
    if (gens.empty())
        throw CommandError("no generators of degree " + std::to_string(n));
    StirlingVariant v;
    if (opt.stirling == "printed")
        v = StirlingVariant::Printed;
    else if (opt.stirling == "alternate")
        v = StirlingVariant::Alternate;
    else
        throw CommandError("--stirling-variant is printed or alternate");

    Priority pr;
    if (!opt.priority.empty()) {
        pr = parse_priority(opt.priority, p.base);
        r.put("priority_source", "given");
    } else {
        auto d = delta_regular_search(gens, n);
        pr = d.best;
        r.put("priority_source", std::string("delta-search") + (d.optimal.size() > 1 ? " (tie)" : ""));
    }
    std::vector<std::string> by_class(p.base.size());
    for (std::size_t i = 0; i < pr.size(); ++i)
        by_class[static_cast<std::size_t>(pr[i] - 1)] = p.base[i];
    r.put("priority", join(by_class, ","));

    r.open("generators");
    for (const auto& g : gens)
        r.put("poly", g.str(names));
    r.close();

    auto rep = cartan_test(gens, n, pr, {}, opt.m, v);
    r.open("cartan");
    r.put("n", std::to_string(rep.n));
    r.put("beta", join(rep.beta));
    std::vector<int> desc(rep.beta.rbegin(), rep.beta.rend());
    r.put("beta_descending", join(desc));
    r.put("rank_n", std::to_string(rep.rank_n));
    r.put("rank_next", std::to_string(rep.rank_next));
    r.put("weighted", std::to_string(rep.weighted));
    r.put("involutive", yes(rep.involutive));
    r.put("delta_failure", yes(rep.delta_failure));
    r.put("m", std::to_string(rep.m));
    r.put("alpha", join(rep.characters.alpha));
    r.put("alpha_negative", yes(rep.characters.negative));
    r.put("stirling_variant", opt.stirling);
    r.put("f", join_rationals(rep.counts.f));
    r.put("f_applicable", yes(rep.counts.applicable));
    r.close();
    return kOk;
}

int cmd_groebner(Report& r, const Problem& p, const Model& m, const Options& opt)
{
    int n = opt.order < 0 ? 1 : opt.order;
    auto names = t_names(p.base);
    auto gens = module_generators(r, p, m, n);
    for (const auto& g : gens)
        if (!g.constant_coefficients())
            throw CommandError("Groebner bases need constant coefficients: " + g.str(names));
    auto basis = groebner_module(gens);
    r.put("order", "degree-position-lex");
    r.put("count", std::to_string(basis.size()));
    for (const auto& b : basis)
        r.put("poly", b.str(names));
    return kOk;
}

int cmd_classify_ode(Report& r, const Problem& p)
{
    if (!p.ode)
        throw CommandError("classify-ode needs an ode declaration");
    if (p.base.size() < 3)
        throw CommandError("classify-ode needs base coordinates x u p");
    RatFun F;
    try {
        F = parse_ratfun(p.ode->text);
    } catch (const ParseError& e) {
        std::string msg = e.what();
        auto cut = msg.rfind(" at offset ");
        auto [l, c] = location(p.source, p.ode->offset + e.position());
        throw Diagnostic(cut == std::string::npos ? msg : msg.substr(0, cut), l, c);
    }
    Var x = intern(p.base[0]), u = intern(p.base[1]), pv = intern(p.base[2]);
    for (Var v : F.variables())
        if (v != x && v != u && v != pv) {
            auto [l, c] = location(p.source, p.ode->offset);
            throw Diagnostic("unknown symbol '" + var_name(v) + "' in the ode right side", l, c);
        }
    auto cls = classify_ode(F, x, u, pv);
    r.put("F", F.str());
    r.put("q_p4", cls.q_p4.str());
    r.put("q_p2x2", cls.q_p2x2.str());
    r.put("branch", cls.branch);
    return kOk;
}

SignatureData signature_data(const Problem& p, const SurfaceDecl& s)
{
    SignatureData d;
    auto parse = [&](const Located& e) {
        try {
            auto f = parse_ratfun(e.text);
            for (Var v : f.variables())
                if (std::find(s.params.begin(), s.params.end(), var_name(v)) == s.params.end()) {
                    auto [l, c] = location(p.source, e.offset);
                    throw Diagnostic("unknown symbol '" + var_name(v) + "' in surface " + s.name, l, c);
                }
            return f;
        } catch (const ParseError& err) {
            std::string msg = err.what();
            auto cut = msg.rfind(" at offset ");
            auto [l, c] = location(p.source, e.offset + err.position());
            throw Diagnostic(cut == std::string::npos ? msg : msg.substr(0, cut), l, c);
        }
    };
    for (const auto& v : s.params)
        d.params.push_back(intern(v));
    for (const auto& e : s.invariants)
        d.invariants.push_back(parse(e));
    for (const auto& row : s.derive) {
        std::vector<RatFun> D;
        for (const auto& e : row)
            D.push_back(parse(e));
        d.derive.push_back(std::move(D));
    }
    std::vector<std::vector<double>> axes(s.params.size());
    for (std::size_t j = 0; j < s.params.size(); ++j) {
        auto it = std::find_if(s.grid.begin(), s.grid.end(), [&](const GridAxis& g) { return g.var == s.params[j]; });
        if (it == s.grid.end())
            throw CommandError("surface " + s.name + " has no grid for " + s.params[j]);
        for (int k = 0; k <= it->steps; ++k) {
            Rational t = it->steps == 0 ? it->lo : it->lo + (it->hi - it->lo) * Rational(k, it->steps);
            axes[j].push_back(t.get_d());
        }
    }
    std::vector<std::vector<double>> pts{{}};
    for (const auto& ax : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& pt : pts)
            for (double t : ax) {
                auto q = pt;
                q.push_back(t);
                next.push_back(std::move(q));
            }
        pts = std::move(next);
    }
    d.grid = std::move(pts);
    return d;
}

int cmd_signature(Report& r, const Problem& p, const Options& opt)
{
    if (p.surfaces.size() != 2)
        throw CommandError("signature-compare needs exactly two surface blocks");
    auto a = signature_data(p, p.surfaces[0]);
    auto b = signature_data(p, p.surfaces[1]);
    int n = opt.order < 0 ? 2 : opt.order;
    auto rep = signature_compare(a, b, n, opt.tol);
    r.put("surfaces", p.surfaces[0].name + " " + p.surfaces[1].name);
    r.put("order", std::to_string(n));
    r.put("tol", num(opt.tol));
    r.put("ranks_" + p.surfaces[0].name, join(rep.ranks_a));
    r.put("ranks_" + p.surfaces[1].name, join(rep.ranks_b));
    r.put("regular", yes(rep.regular));
    r.put("s", std::to_string(rep.s));
    r.put("same_order", yes(rep.same_order));
    r.put("distance_ab", num(rep.distance_ab));
    r.put("distance_ba", num(rep.distance_ba));
    r.put("threshold", num(rep.threshold));
    r.put("overlap", yes(rep.overlap));
    r.put("message", rep.message);
    return kOk;
}

} // namespace

const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c{"lift",        "structure", "recurrence",   "normalize",        "coframe",
                                            "cartan-test", "groebner",  "classify-ode", "signature-compare"};
    return c;
}

Outcome run(const Problem& p, const std::string& command, const Options& opt)
{
    Outcome out;
    auto& r = out.report;
    r.put("command", command);
    r.open("result");
    try {
        if (std::find(commands().begin(), commands().end(), command) == commands().end())
            throw CommandError("unknown command '" + command + "'");
        if (command == "classify-ode") {
            out.exit_code = cmd_classify_ode(r, p);
        } else if (command == "signature-compare") {
            out.exit_code = cmd_signature(r, p, opt);
        } else {
            auto m = build_model(p);
            if (command == "lift")
                out.exit_code = cmd_lift(r, p, m, opt);
            else if (command == "structure")
                out.exit_code = cmd_structure(r, p, m, opt);
            else if (command == "recurrence")
                out.exit_code = cmd_recurrence(r, m, opt);
            else if (command == "normalize")
                out.exit_code = cmd_normalize(r, m, opt);
            else if (command == "coframe")
                out.exit_code = cmd_coframe(r, m, opt);
            else if (command == "cartan-test")
                out.exit_code = cmd_cartan_test(r, p, m, opt);
            else
                out.exit_code = cmd_groebner(r, p, m, opt);
        }
    } catch (const Diagnostic& d) {
        r.put("error", d.what());
        out.exit_code = kDiagnostic;
    } catch (const InconsistentSystem& e) {
        r.put("error", command + ": " + e.what());
        out.exit_code = kInconsistent;
    } catch (const std::exception& e) {
        r.put("error", command + ": " + e.what());
        out.exit_code = kDiagnostic;
    }
    r.close();
    r.put("exit", std::to_string(out.exit_code));
    return out;
}

Outcome run_text(const std::string& text, const std::string& command, const Options& opt)
{
    try {
        return run(parse_problem(text), command, opt);
    } catch (const Diagnostic& d) {
        Outcome out;
        out.report.put("command", command);
        out.report.open("result");
        out.report.put("error", d.what());
        out.report.close();
        out.report.put("exit", std::to_string(kDiagnostic));
        out.exit_code = kDiagnostic;
        return out;
    }
}

} // namespace cartan::cli
