#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan/jet.hpp"

namespace cartan {

// Basis element x_J E^pos of a free module over Q[x_1, ..., x_n].
struct ModKey {
    MultiIndex J;
    std::size_t pos = 0;

    // storage order: degree, then position, then graded lex on J
    bool operator<(const ModKey& o) const;
    bool operator==(const ModKey& o) const { return pos == o.pos && J == o.J; }
    bool operator!=(const ModKey& o) const { return !(*this == o); }
};

struct ModNames {
    std::string var_prefix;  // "t_" or "s_"
    std::string pos_prefix;  // "T^" or "S^"
    std::vector<std::string> vars, positions;
};

// t_x, T^x over the same coordinate list.
ModNames t_names(const std::vector<std::string>& coords);
// s_x over the independents, S^u over the dependents.
ModNames s_names(const std::vector<std::string>& independents, const std::vector<std::string>& dependents);

// Element of a free module of finite rank over a polynomial ring with
// rational-function coefficients in auxiliary symbols.
class ModElement {
public:
    ModElement() = default;
    ModElement(std::size_t nvars, std::size_t rank) : n_(nvars), r_(rank) {}
    static ModElement basis(std::size_t nvars, std::size_t rank, const ModKey& k, const RatFun& c = RatFun(1));

    std::size_t nvars() const { return n_; }
    std::size_t rank() const { return r_; }
    const std::map<ModKey, RatFun>& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }
    // Highest total degree in x; -1 for zero.
    int degree() const;
    RatFun coefficient(const ModKey& k) const;
    void add(const ModKey& k, const RatFun& c);

    ModElement homogeneous(int k) const;
    ModElement highest_term() const { return homogeneous(degree()); }
    ModElement times(const MultiIndex& K) const;
    ModElement times_var(std::size_t i) const;
    bool constant_coefficients() const;

    ModElement operator+(const ModElement& o) const;
    ModElement operator-(const ModElement& o) const;
    ModElement operator-() const;
    ModElement operator*(const RatFun& c) const;
    bool operator==(const ModElement& o) const { return n_ == o.n_ && r_ == o.r_ && t_ == o.t_; }
    bool operator!=(const ModElement& o) const { return !(*this == o); }

    ModElement map_coefficients(const std::function<RatFun(const RatFun&)>& f) const;
    std::string str(const ModNames& names) const;

private:
    std::size_t n_ = 0, r_ = 0;
    std::map<ModKey, RatFun> t_;
};

using TElement = ModElement;

// Parse "t_qT^q - t_pT^p + 1/2*t_x^2T^x"; juxtaposition or '*' multiplies.
ModElement parse_module_element(const std::string& text, const ModNames& names);

// Element c . s~ + sum h s_J S^alpha of the submanifold jet module. The
// polynomial ring acts on s~ through its constant term.
struct SElement {
    std::vector<RatFun> tilde;  // one per independent
    ModElement poly;            // nvars = p, rank = q

    SElement() = default;
    SElement(std::size_t p, std::size_t q) : tilde(p), poly(p, q) {}
    static SElement from_poly(ModElement e);

    bool tilde_zero() const;
    bool is_zero() const { return tilde_zero() && poly.is_zero(); }
    // s~ lies in degree -1 and has zero highest term.
    SElement highest_term() const;
    SElement times_var(std::size_t i) const;
    SElement operator+(const SElement& o) const;
    SElement operator*(const RatFun& c) const;
    bool operator==(const SElement& o) const { return tilde == o.tilde && poly == o.poly; }
    std::string str(const ModNames& names) const;
};

// ------------------------------------------------------------ Cartan test

// priority[i] in 1..n: class position of variable i (a permutation).
using Priority = std::vector<int>;

Priority natural_priority(std::size_t n);
int multi_index_class(const MultiIndex& B, const Priority& pr);

struct SymbolMatrix {
    FMatrix matrix;
    std::vector<ModKey> columns;
    std::vector<int> column_class;
};

// Rows: the degree-n highest terms of gens. Columns by descending class;
// ties by descending graded lex on J, then descending position.
SymbolMatrix symbol_matrix(const std::vector<ModElement>& gens, int n, const Priority& pr);

// beta[a-1] = number of pivots of class a after ordered row echelon.
std::vector<int> symbol_indices(const std::vector<ModElement>& gens, int n, const Priority& pr);
std::size_t symbol_rank(const std::vector<ModElement>& gens, int n);

// Highest terms of all x_i * g.
std::vector<ModElement> prolong(const std::vector<ModElement>& gens);

struct DeltaSearch {
    Priority best;
    int score = 0;  // sum a * beta^(a)
    std::vector<Priority> optimal;
    bool exhaustive = true;
};

// Exhaustive over priorities for n <= 6 variables, otherwise random linear
// changes of coordinates (seeded) scored under the natural priority.
DeltaSearch delta_regular_search(const std::vector<ModElement>& gens, int n, unsigned seed = 1);

struct Characters {
    std::vector<long> alpha;  // alpha[a-1]
    bool negative = false;
};

Characters cartan_characters(const std::vector<int>& beta, int m, int n);

// s^(a)_b(c): (c+y+1)...(c+y+a) = sum_b s^(a)_{a-b}(c) y^b.
Rational modified_stirling(int a, int b, int c);

enum class StirlingVariant { Printed, Alternate };

struct FunctionCounts {
    std::vector<Rational> f;  // f[a-1]
    bool applicable = true;   // all f non-negative integers
};

// Printed factor (a-1)!/(m-1)!; alternate factor (a-1)!/(b-1)!.
FunctionCounts arbitrary_function_counts(const std::vector<long>& alpha, int m, int n,
                                         StirlingVariant v = StirlingVariant::Printed);

struct CartanReport {
    Priority priority;
    int n = 1;
    std::vector<int> beta;
    std::size_t rank_n = 0;
    std::size_t rank_next = 0;
    int weighted = 0;  // sum a * beta^(a)
    bool involutive = false;
    bool delta_failure = false;  // rank_next > weighted
    int m = 0;
    Characters characters;
    FunctionCounts counts;
};

// Degree n+1 component: span of x_i * gens plus extra. m = 0 uses the
// number of variables.
CartanReport cartan_test(const std::vector<ModElement>& gens, int n, const Priority& pr,
                         const std::vector<ModElement>& extra = {}, int m = 0,
                         StirlingVariant v = StirlingVariant::Printed);

// ----------------------------------------------------- beta map and preimage

struct BetaMap {
    std::size_t p = 0, q = 0;
    std::vector<std::vector<RatFun>> u;  // u[alpha][i] = u^alpha_i

    static BetaMap zero(std::size_t p, std::size_t q);
    // s_i -> t_i + sum u^alpha_i t_{p+alpha}, S^alpha -> T^{p+alpha} - sum u^alpha_i T^i
    TElement pullback(const SElement& e) const;
};

// Degree-by-degree basis of (beta*)^{-1}(I) with I generated by the highest
// terms of the given elements; index k holds degree k.
std::vector<std::vector<SElement>> prolonged_symbol_preimage(const std::vector<TElement>& gens, const BetaMap& b,
                                                             int d);

// All x_J E^pos of degree <= d divisible by no generator.
std::vector<ModKey> monomial_complement(const std::vector<ModKey>& gens, std::size_t nvars, std::size_t rank, int d);

// Reduced basis of span(V): leaders divisible by a generator of M come first
// in the elimination order, so the remaining terms lie in the complement.
std::vector<ModElement> linear_basis(const std::vector<ModElement>& V, const std::vector<ModKey>& M);

// Dimension of a span of module elements over the coefficient field.
std::size_t span_rank(const std::vector<ModElement>& V);

// p*(S^{<=n}) + L^{<=n} = T_i^{<=n}, compared by exact ranks.
struct DimensionCheck {
    int n = 0;
    std::size_t sum_rank = 0;     // rank of p*(S) + L
    std::size_t target_rank = 0;  // rank of T_i
    std::size_t union_rank = 0;   // rank of all three together
    bool ok = false;
};

DimensionCheck annihilator_dimension_check(const std::vector<TElement>& pS, const std::vector<TElement>& L,
                                           const std::vector<TElement>& Ti, int n);

// ------------------------------------------------------------ Groebner bases

enum class ModuleOrder {
    DegreePositionLex,  // total degree, then position, then lex
    PositionDegreeLex,  // position, then degree, then lex
};

int module_compare(const ModKey& a, const ModKey& b, ModuleOrder o);
ModKey leading_key(const ModElement& e, ModuleOrder o);

// Reduced Groebner basis (monic); coefficients must be rational constants.
std::vector<ModElement> groebner_module(const std::vector<ModElement>& gens,
                                        ModuleOrder o = ModuleOrder::DegreePositionLex);
ModElement reduce(const ModElement& e, const std::vector<ModElement>& basis,
                  ModuleOrder o = ModuleOrder::DegreePositionLex);

} // namespace cartan
