#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan/groupjets.hpp"

namespace cartan {

enum class FormKind : std::uint8_t { Sigma, Omega, Mu, Theta, Coord };

// Basis one-form. Sigma: a = ambient index. Omega: a = independent index.
// Mu: a = generator index, B over the ambient coordinates. Theta: a = alpha,
// B = J. Coord: a = variable id.
struct FormSym {
    FormKind kind = FormKind::Sigma;
    int a = 0;
    MultiIndex B;

    static FormSym sigma(int a) { return {FormKind::Sigma, a, {}}; }
    static FormSym omega(int i) { return {FormKind::Omega, i, {}}; }
    static FormSym mu(int a, MultiIndex B) { return {FormKind::Mu, a, std::move(B)}; }
    static FormSym mu(const GenJet& j) { return {FormKind::Mu, j.gen, j.B}; }
    static FormSym theta(int alpha, MultiIndex J) { return {FormKind::Theta, alpha, std::move(J)}; }
    static FormSym coord(Var v) { return {FormKind::Coord, static_cast<int>(v), {}}; }

    GenJet jet() const { return GenJet{a, B}; }
    bool operator==(const FormSym& o) const { return kind == o.kind && a == o.a && B == o.B; }
    bool operator!=(const FormSym& o) const { return !(*this == o); }
    bool operator<(const FormSym& o) const;
};

using SymbolNamer = std::function<std::string(const FormSym&)>;

class ExteriorForm {
public:
    using Word = std::vector<FormSym>;

    ExteriorForm() = default;
    static ExteriorForm scalar(const RatFun& f);
    static ExteriorForm symbol(const FormSym& s, const RatFun& coef = RatFun(1));
    static ExteriorForm from_comb(const GenComb& c);

    const std::map<Word, RatFun>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    // Degree of the terms; -1 for zero. Throws on mixed degrees.
    int degree() const;
    RatFun coefficient(const Word& w) const;
    std::set<FormSym> symbols() const;

    // Add coef * (s_1 ^ ... ^ s_k) for an arbitrary word.
    void add(Word w, const RatFun& coef);

    ExteriorForm operator+(const ExteriorForm& o) const;
    ExteriorForm operator-(const ExteriorForm& o) const;
    ExteriorForm operator-() const;
    ExteriorForm operator*(const RatFun& f) const;
    bool operator==(const ExteriorForm& o) const { return t_ == o.t_; }
    bool operator!=(const ExteriorForm& o) const { return t_ != o.t_; }

    ExteriorForm map_coefficients(const std::function<RatFun(const RatFun&)>& f) const;
    // Replace one-form symbols; unmapped symbols are kept.
    ExteriorForm substitute(const std::function<std::optional<ExteriorForm>(const FormSym&)>& f) const;
    // Drop every term containing a symbol satisfying pred.
    ExteriorForm drop(const std::function<bool(const FormSym&)>& pred) const;

    std::string str(const SymbolNamer& name) const;

private:
    std::map<Word, RatFun> t_;
};

ExteriorForm wedge(const ExteriorForm& a, const ExteriorForm& b);

class IncompleteRules : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// d on basis symbols (two-forms) and on scalar variables (one-forms).
// Coordinate differentials are closed unless listed.
struct StructureRules {
    std::map<FormSym, ExteriorForm> d_symbol;
    std::function<std::optional<ExteriorForm>(Var)> d_var;
};

ExteriorForm exterior_derivative(const ExteriorForm& f, const StructureRules& rules,
                                 const SymbolNamer& name = {});

struct StructureEquations {
    int order = 0;
    std::map<FormSym, ExteriorForm> eqs;
    // Symbols occurring without an equation (truncation or residual forms).
    std::set<FormSym> open;

    void refresh_open();
};

// Truncated Maurer-Cartan series mu^a[[H]] = sum_{#B<=N} mu^a_B H^B / B!.
class MCSeries {
public:
    using Series = std::map<std::vector<int>, ExteriorForm>;

    MCSeries(int N, std::size_t m);
    int order() const { return N_; }
    std::size_t dim() const { return m_; }
    const Series& component(std::size_t a) const { return mu_[a]; }
    // d/dH^b of a series.
    Series gradient(const Series& s, std::size_t b) const;
    // Truncated product of series with wedge.
    Series wedge(const Series& a, const Series& b, int max_degree) const;

private:
    int N_;
    std::size_t m_;
    std::vector<Series> mu_;
};

// d sigma^a and d mu^a_B (#B <= N-1) of the diffeomorphism pseudo-group in
// dimension m, read off dmu[[H]] = grad mu[[H]] ^ (mu[[H]] - dZ), dZ = sigma + mu[[0]].
StructureEquations diffeo_structure_equations(int N, std::size_t m);

// Replace non-basis mu symbols by their basis expressions; keep equations
// for sigma and basis symbols only.
StructureEquations restrict_to_pseudogroup(const StructureEquations& eqs, const MCRelationSet& rel);

// Pull back by a (partial) moving frame.
struct NormalizedSubstitution {
    // sigma and mu symbols -> one-forms in omega and residual mu (residual
    // symbols map to themselves)
    std::map<FormSym, ExteriorForm> forms;
    // scalar substitution, e.g. Z -> normalized values
    std::function<std::optional<RatFun>(Var)> scalars;
    // left sides kept in the output: sigma^i -> omega^i, residual mu -> itself
    std::map<FormSym, FormSym> lhs;
};

StructureEquations substitute_normalized(const StructureEquations& eqs, const NormalizedSubstitution& sub);

struct D2Audit {
    bool ok = true;
    std::vector<std::pair<FormSym, ExteriorForm>> failures;
    std::vector<FormSym> skipped; // d of the right side needs a missing rule
};

// d(rhs) reduced by the equation set itself must vanish. reduce, when given,
// is applied to the three-form (e.g. dropping contact terms or syzygies).
D2Audit audit_d2(const StructureEquations& eqs, const std::function<std::optional<ExteriorForm>(Var)>& d_var,
                 const std::function<ExteriorForm(const ExteriorForm&)>& reduce = {});

// dZ^a = sigma^a + mu^a, with mu^a restricted when rel is given.
std::function<std::optional<ExteriorForm>(Var)> target_differentials(const MCRelationSet& rel);

bool is_contact(const FormSym& s);

// Names: sigma^z, omega^x, lifted names from the system, theta^u_J, dz.
SymbolNamer make_namer(const DeterminingSystem& sys, std::vector<std::string> independent = {},
                       std::vector<std::string> dependent = {});
std::string equation_str(const FormSym& lhs, const ExteriorForm& rhs, const SymbolNamer& name,
                         const std::string& rel = "=");


using FormResolver = std::function<std::optional<FormSym>(const std::string&)>;

// Resolves σ^z / sigma^z, ω^x / omega^x and lifted Maurer-Cartan names.
FormResolver make_form_resolver(const DeterminingSystem& sys, std::vector<std::string> independent = {});

// Parse a sum of terms c*s_1∧...∧s_k (wedge written ∧ or /\). Coefficients
// are rational functions in scalar indeterminates.
ExteriorForm parse_form(const std::string& text, const FormResolver& resolve);

} // namespace cartan
