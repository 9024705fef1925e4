#include "problem.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cartan/expr.hpp"

namespace cartan::cli {

std::pair<std::size_t, std::size_t> location(const std::string& text, std::size_t offset)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

namespace {

Diagnostic diag(const std::string& text, std::size_t offset, const std::string& msg)
{
    auto [l, c] = location(text, offset);
    return Diagnostic(msg, l, c);
}

class Scanner {
public:
    explicit Scanner(const std::string& s) : s_(s) {}

    void skip()
    {
        while (i_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
                ++i_;
            } else if (s_[i_] == '#') {
                while (i_ < s_.size() && s_[i_] != '\n')
                    ++i_;
            } else {
                break;
            }
        }
    }
    bool done()
    {
        skip();
        return i_ >= s_.size();
    }
    std::size_t pos() const { return i_; }
    char peek()
    {
        skip();
        return i_ < s_.size() ? s_[i_] : '\0';
    }
    void expect(char c)
    {
        if (peek() != c)
            throw diag(s_, i_, std::string("expected '") + c + "'");
        ++i_;
    }
    std::string word()
    {
        skip();
        std::size_t st = i_;
        while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
            ++i_;
        if (st == i_)
            throw diag(s_, st, "expected a name");
        return s_.substr(st, i_ - st);
    }
    // Body up to ';' (consumed) or '}' (not consumed); trimmed.
    Located statement()
    {
        skip();
        std::size_t st = i_;
        std::string out;
        while (i_ < s_.size() && s_[i_] != ';' && s_[i_] != '}' && s_[i_] != '{') {
            if (s_[i_] == '#') {
                while (i_ < s_.size() && s_[i_] != '\n')
                    ++i_;
                continue;
            }
            out += s_[i_++];
        }
        if (i_ >= s_.size() || s_[i_] != ';')
            throw diag(s_, i_, "expected ';'");
        ++i_;
        while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
            out.pop_back();
        return Located{out, st};
    }

private:
    const std::string& s_;
    std::size_t i_ = 0;
};

std::vector<std::string> split_words(const std::string& s)
{
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;)
        out.push_back(w);
    return out;
}

std::string trim(const std::string& s)
{
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void check_identifier(const std::string& text, std::size_t offset, const std::string& w)
{
    if (!is_identifier(w))
        throw diag(text, offset, "invalid name '" + w + "'");
}

GeneratorDecl parse_generator(const std::string& text, std::size_t offset, const std::string& g,
                              const std::vector<std::string>& base)
{
    GeneratorDecl d;
    std::string rest = g;
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
        d.lifted = rest.substr(colon + 1);
        rest = rest.substr(0, colon);
        check_identifier(text, offset, d.lifted);
    }
    auto paren = rest.find('(');
    if (paren != std::string::npos) {
        if (rest.back() != ')')
            throw diag(text, offset, "malformed argument list in '" + g + "'");
        std::string args = rest.substr(paren + 1, rest.size() - paren - 2);
        rest = rest.substr(0, paren);
        std::replace(args.begin(), args.end(), ',', ' ');
        d.args = split_words(args);
        for (const auto& a : d.args)
            if (std::find(base.begin(), base.end(), a) == base.end())
                throw diag(text, offset, "argument '" + a + "' of " + rest + " is not a base coordinate");
    }
    check_identifier(text, offset, rest);
    d.name = rest;
    return d;
}

std::vector<std::string> split_generators(const std::string& s)
{
    // spaces inside parentheses do not separate
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        if (std::isspace(static_cast<unsigned char>(c)) && depth == 0) {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

Rational parse_rational(const std::string& text, std::size_t offset, const std::string& s)
{
    try {
        Rational q(trim(s));
        q.canonicalize();
        return q;
    } catch (const std::exception&) {
        throw diag(text, offset, "expected an exact rational, found '" + trim(s) + "'");
    }
}

void parse_block(Scanner& sc, const std::string& text, std::vector<Located>& out, std::vector<Located>* assume)
{
    sc.expect('{');
    while (sc.peek() != '}') {
        if (sc.done())
            throw diag(text, sc.pos(), "unterminated block");
        auto st = sc.statement();
        if (assume && st.text.rfind("assume", 0) == 0 && st.text.size() > 6 &&
            std::isspace(static_cast<unsigned char>(st.text[6]))) {
            std::size_t k = 6;
            while (std::isspace(static_cast<unsigned char>(st.text[k])))
                ++k;
            assume->push_back(Located{st.text.substr(k), st.offset + k});
        } else {
            out.push_back(st);
        }
    }
    sc.expect('}');
}

SurfaceDecl parse_surface(Scanner& sc, const std::string& text)
{
    SurfaceDecl s;
    s.name = sc.word();
    check_identifier(text, sc.pos(), s.name);
    sc.expect('{');
    while (sc.peek() != '}') {
        if (sc.done())
            throw diag(text, sc.pos(), "unterminated surface block");
        std::size_t kw_at = sc.pos();
        std::string kw = sc.word();
        auto st = sc.statement();
        if (kw == "params") {
            s.params = split_words(st.text);
            for (const auto& w : s.params)
                check_identifier(text, st.offset, w);
        } else if (kw == "invariant") {
            s.invariants.push_back(st);
        } else if (kw == "derive") {
            std::vector<Located> row;
            std::size_t start = 0;
            for (;;) {
                auto comma = st.text.find(',', start);
                std::string piece = st.text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                std::size_t lead = piece.find_first_not_of(' ');
                row.push_back(Located{trim(piece), st.offset + start + (lead == std::string::npos ? 0 : lead)});
                if (comma == std::string::npos)
                    break;
                start = comma + 1;
            }
            s.derive.push_back(std::move(row));
        } else if (kw == "grid") {
            GridAxis g;
            auto eq = st.text.find('=');
            auto dots = st.text.find("..");
            auto colon = st.text.find(':');
            if (eq == std::string::npos || dots == std::string::npos || colon == std::string::npos || dots < eq ||
                colon < dots)
                throw diag(text, st.offset, "grid expects 'var = lo .. hi : steps'");
            g.var = trim(st.text.substr(0, eq));
            g.lo = parse_rational(text, st.offset, st.text.substr(eq + 1, dots - eq - 1));
            g.hi = parse_rational(text, st.offset, st.text.substr(dots + 2, colon - dots - 2));
            try {
                g.steps = std::stoi(trim(st.text.substr(colon + 1)));
            } catch (const std::exception&) {
                throw diag(text, st.offset, "grid steps must be an integer");
            }
            if (g.steps < 0)
                throw diag(text, st.offset, "grid steps must be non-negative");
            s.grid.push_back(g);
        } else {
            throw diag(text, kw_at, "unknown surface statement '" + kw + "'");
        }
    }
    sc.expect('}');
    for (const auto& row : s.derive)
        if (row.size() != s.params.size())
            throw diag(text, row.front().offset, "derive expects one coefficient per parameter");
    for (const auto& g : s.grid)
        if (std::find(s.params.begin(), s.params.end(), g.var) == s.params.end())
            throw diag(text, 0, "grid variable '" + g.var + "' is not a parameter of " + s.name);
    return s;
}

} // namespace

Problem parse_problem(const std::string& text)
{
    Problem p;
    p.source = text;
    Scanner sc(text);
    bool have_base = false, have_split = false;
    while (!sc.done()) {
        std::size_t at = sc.pos();
        std::string kw = sc.word();
        if (kw == "base") {
            auto st = sc.statement();
            p.base = split_words(st.text);
            if (p.base.empty())
                throw diag(text, st.offset, "empty base");
            for (const auto& w : p.base)
                check_identifier(text, st.offset, w);
            have_base = true;
        } else if (kw == "group") {
            if (!have_base)
                throw diag(text, at, "group before base");
            auto st = sc.statement();
            for (const auto& g : split_generators(st.text))
                p.group.push_back(parse_generator(text, st.offset, g, p.base));
        } else if (kw == "det") {
            parse_block(sc, text, p.det, nullptr);
        } else if (kw == "split") {
            auto st = sc.statement();
            auto w = split_words(st.text);
            std::vector<std::string>* dst = nullptr;
            for (const auto& x : w) {
                if (x == "independent")
                    dst = &p.independent;
                else if (x == "dependent")
                    dst = &p.dependent;
                else if (!dst)
                    throw diag(text, st.offset, "split expects 'independent ... dependent ...'");
                else
                    dst->push_back(x);
            }
            have_split = true;
        } else if (kw == "xsec") {
            parse_block(sc, text, p.xsec, &p.assume);
        } else if (kw == "symbol") {
            parse_block(sc, text, p.symbol, nullptr);
        } else if (kw == "ode") {
            auto st = sc.statement();
            auto eq = st.text.find('=');
            if (eq != std::string::npos) {
                std::size_t k = eq + 1;
                while (k < st.text.size() && std::isspace(static_cast<unsigned char>(st.text[k])))
                    ++k;
                st = Located{st.text.substr(k), st.offset + k};
            }
            p.ode = st;
        } else if (kw == "surface") {
            p.surfaces.push_back(parse_surface(sc, text));
        } else {
            throw diag(text, at, "unknown statement '" + kw + "'");
        }
    }
    if (!have_base && (!p.group.empty() || !p.det.empty() || have_split || !p.xsec.empty() || !p.assume.empty() ||
                       !p.symbol.empty() || p.ode))
        throw diag(text, 0, "missing base declaration");
    if (have_split) {
        std::vector<std::string> all = p.independent;
        all.insert(all.end(), p.dependent.begin(), p.dependent.end());
        if (all != p.base)
            throw diag(text, 0, "split must list the base coordinates in order");
    }
    return p;
}

std::string unparse(const Problem& p)
{
    std::ostringstream os;
    auto join = [](const std::vector<std::string>& v, const char* sep) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? sep : "") + v[i];
        return s;
    };
    if (!p.base.empty())
        os << "base " << join(p.base, " ") << ";\n";
    if (!p.group.empty()) {
        os << "group";
        for (const auto& g : p.group) {
            os << " " << g.name;
            if (!g.args.empty())
                os << "(" << join(g.args, ", ") << ")";
            if (!g.lifted.empty())
                os << ":" << g.lifted;
        }
        os << ";\n";
    }
    auto block = [&](const char* name, const std::vector<Located>& v, const std::vector<Located>* assume) {
        if (v.empty() && (!assume || assume->empty()))
            return;
        os << name << " {\n";
        for (const auto& s : v)
            os << "  " << s.text << ";\n";
        if (assume)
            for (const auto& s : *assume)
                os << "  assume " << s.text << ";\n";
        os << "}\n";
    };
    if (!p.det.empty())
        block("det", p.det, nullptr);
    else if (!p.group.empty())
        os << "det {\n}\n";
    if (!p.independent.empty() || !p.dependent.empty())
        os << "split independent " << join(p.independent, " ") << " dependent " << join(p.dependent, " ") << ";\n";
    block("xsec", p.xsec, &p.assume);
    block("symbol", p.symbol, nullptr);
    if (p.ode)
        os << "ode " << p.ode->text << ";\n";
    for (const auto& s : p.surfaces) {
        os << "surface " << s.name << " {\n";
        os << "  params " << join(s.params, " ") << ";\n";
        for (const auto& i : s.invariants)
            os << "  invariant " << i.text << ";\n";
        for (const auto& row : s.derive) {
            std::vector<std::string> t;
            for (const auto& c : row)
                t.push_back(c.text);
            os << "  derive " << join(t, ", ") << ";\n";
        }
        for (const auto& g : s.grid)
            os << "  grid " << g.var << " = " << g.lo.get_str() << " .. " << g.hi.get_str() << " : " << g.steps
               << ";\n";
        os << "}\n";
    }
    return os.str();
}

std::shared_ptr<DeterminingSystem> build_system(const Problem& p)
{
    std::vector<DeterminingSystem::Generator> gens;
    for (const auto& g : p.group) {
        DeterminingSystem::Generator d;
        d.name = g.name;
        d.lifted = g.lifted;
        if (!g.args.empty())
            for (const auto& b : p.base)
                d.depends.push_back(std::find(g.args.begin(), g.args.end(), b) != g.args.end());
        gens.push_back(std::move(d));
    }
    auto sys = std::make_shared<DeterminingSystem>(p.base, std::move(gens));
    for (const auto& r : p.det) {
        auto eq = r.text.find('=');
        if (eq == std::string::npos || r.text.find('=', eq + 1) != std::string::npos)
            throw diag(p.source, r.offset, "a relation needs exactly one '='");
        std::size_t shift = 0;
        KeyResolver keys = [&](const std::string& name, std::size_t pos) -> std::optional<GenJet> {
            GenJet j;
            if (sys->parse_jet(name, j)) {
                if (!sys->admissible(j))
                    throw ParseError("'" + name + "' differentiates " + sys->generators()[j.gen].name +
                                         " in a variable it does not depend on",
                                     pos);
                return j;
            }
            if (std::find(p.base.begin(), p.base.end(), name) != p.base.end())
                return std::nullopt;
            throw ParseError("unknown symbol '" + name + "'", pos);
        };
        try {
            shift = 0;
            auto lhs = parse_linear(r.text.substr(0, eq), keys);
            shift = eq + 1;
            auto rhs = parse_linear(r.text.substr(eq + 1), keys);
            sys->add_relation(lhs - rhs);
        } catch (const ParseError& e) {
            std::string msg = e.what();
            auto cut = msg.rfind(" at offset ");
            throw diag(p.source, r.offset + shift + e.position(), cut == std::string::npos ? msg : msg.substr(0, cut));
        } catch (const std::invalid_argument& e) {
            throw diag(p.source, r.offset, e.what());
        }
    }
    return sys;
}

Model build_model(const Problem& p)
{
    Model m;
    m.system = build_system(p);
    if (p.independent.empty() && p.dependent.empty()) {
        if (!p.xsec.empty() || !p.assume.empty())
            throw diag(p.source, p.xsec.empty() ? p.assume.front().offset : p.xsec.front().offset,
                       "a cross-section needs a split declaration");
        return m;
    }
    try {
        m.frame = std::make_unique<MovingFrame>(p.independent, p.dependent, m.system);
    } catch (const std::invalid_argument& e) {
        throw diag(p.source, 0, e.what());
    }
    auto add = [&](const Located& r) {
        try {
            m.section.add(m.frame->parse_rule(r.text));
        } catch (const ParseError& e) {
            std::string msg = e.what();
            auto cut = msg.rfind(" at offset ");
            throw diag(p.source, r.offset + e.position(), cut == std::string::npos ? msg : msg.substr(0, cut));
        }
    };
    for (const auto& r : p.assume) {
        if (r.text.find("!=") == std::string::npos && r.text.find("==") == std::string::npos)
            throw diag(p.source, r.offset, "an assumption is 'I != 0' or 'I == c'");
        add(r);
    }
    for (const auto& r : p.xsec)
        add(r);
    return m;
}

} // namespace cartan::cli
