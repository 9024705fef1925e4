#pragma once

#include <memory>
#include <stdexcept>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "cartan/matrix.hpp"

namespace cartan {

// Symmetric multi-index stored as counts over an ordered variable list.
struct MultiIndex {
    std::vector<int> c;

    MultiIndex() = default;
    explicit MultiIndex(std::size_t n) : c(n, 0) {}
    explicit MultiIndex(std::vector<int> counts) : c(std::move(counts)) {}
    MultiIndex(std::initializer_list<int> counts) : c(counts) {}
    static MultiIndex unit(std::size_t n, std::size_t i)
    {
        MultiIndex m(n);
        m.c[i] = 1;
        return m;
    }

    std::size_t size() const { return c.size(); }
    int order() const;
    Rational factorial() const;
    int operator[](std::size_t i) const { return c[i]; }
    MultiIndex plus(std::size_t i, int k = 1) const;
    MultiIndex operator+(const MultiIndex& o) const;
    MultiIndex operator-(const MultiIndex& o) const;
    bool divides(const MultiIndex& o) const; // componentwise <=
    bool is_zero() const { return order() == 0; }
    bool operator==(const MultiIndex& o) const { return c == o.c; }
    bool operator!=(const MultiIndex& o) const { return c != o.c; }
    bool operator<(const MultiIndex& o) const; // graded lex, first variable most significant
    std::size_t hash() const;

    // Suffix word such as "p2x" with letters sorted alphabetically by name.
    std::string word(const std::vector<std::string>& names) const;
};

// All multi-indices of exactly the given order over n variables, in
// descending graded-lex order.
std::vector<MultiIndex> multi_indices_of_order(std::size_t n, int order);
std::vector<MultiIndex> multi_indices_up_to(std::size_t n, int order);

// Binomial coefficient C(B, C) = B!/(C!(B-C)!).
Rational binomial(const MultiIndex& b, const MultiIndex& c);

// Parse a suffix word ("p2x", "xxu") over the given names into counts.
// Returns false when a token matches no name.
bool parse_word(const std::string& w, const std::vector<std::string>& names, MultiIndex& out);

// Jet coordinates x^i, u^alpha_J plus optional function families such as
// group-jet parameters chi(x,u) whose derivative symbols chi_B follow the
// chain rule. Symbol tables grow lazily; lookups are internally
// synchronized so a spec can be shared across threads.
class JetSpec {
public:
    enum class Kind { Independent, Jet, Family, Other };
    struct Info {
        Kind kind = Kind::Other;
        int index = -1;  // independent index, dependent index, or family index
        MultiIndex idx;  // J over independents, or B over family arguments
    };

    JetSpec(std::vector<std::string> independents, std::vector<std::string> dependents);

    std::size_t p() const { return indep_.size(); }
    std::size_t q() const { return dep_.size(); }
    const std::vector<std::string>& independents() const { return indep_; }
    const std::vector<std::string>& dependents() const { return dep_; }
    // Base variables = independents followed by dependents.
    const std::vector<std::string>& base() const { return base_; }

    Var x(std::size_t i) const;
    Var u(std::size_t alpha, const MultiIndex& J) const;
    Var u(std::size_t alpha) const { return u(alpha, MultiIndex(p())); }
    // Variable for base coordinate a (x^i or u^alpha).
    Var base_var(std::size_t a) const;

    // Declare a function family F(a_1,...,a_k); the arguments may be any
    // jet coordinates. Derivative symbols F_B use B over the argument list.
    std::size_t add_family(const std::string& name, std::vector<Var> args);
    Var family(std::size_t f, const MultiIndex& B) const;
    const std::vector<Var>& family_args(std::size_t f) const { return fam_[f].args; }
    const std::string& family_name(std::size_t f) const { return fam_[f].name; }
    std::size_t family_count() const { return fam_.size(); }

    Info info(Var v) const;
    int order(const RatFun& f) const;

    // D_{x^i} applied to the base coordinate a.
    RatFun base_derivative(std::size_t i, std::size_t a) const;
    RatFun total_derivative(const RatFun& f, std::size_t i) const;
    RatFun iterated_derivative(const RatFun& f, const MultiIndex& J) const;

    // Jet name for u^alpha_J.
    std::string jet_name(std::size_t alpha, const MultiIndex& J) const;

private:
    struct Family {
        std::string name;
        std::vector<Var> args;
        std::vector<std::string> arg_names;
    };
    Var make(const std::string& name, Info info) const;

    std::vector<std::string> indep_, dep_, base_;
    std::vector<Family> fam_;
    mutable std::mutex mu_;
    mutable std::unordered_map<Var, Info> info_;
};

// W with D_{X^i} = sum_j W(i,j) D_{x^j}, the inverse of (D_{x^i} X^j).
FMatrix lifted_total_derivative_matrix(const JetSpec& spec, const std::vector<RatFun>& targets);

class DegenerateMap : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inverse of a square rational-function matrix; throws DegenerateMap.
FMatrix invert(const FMatrix& m);

} // namespace cartan
