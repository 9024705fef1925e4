#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cartan/jet.hpp"

namespace cartan {

// Jet zeta^a_B of a vector-field coefficient (or, after the lift, the
// Maurer-Cartan symbol mu^a_B). gen == -1 is the constant key.
struct GenJet {
    int gen = -1;
    MultiIndex B;

    static GenJet unit() { return GenJet{}; }
    bool is_unit() const { return gen < 0; }
    int order() const { return is_unit() ? -1 : B.order(); }
    bool operator==(const GenJet& o) const { return gen == o.gen && B == o.B; }
    bool operator!=(const GenJet& o) const { return !(*this == o); }
    bool operator<(const GenJet& o) const
    {
        if (gen != o.gen)
            return gen < o.gen;
        return B.c < o.B.c;
    }
};

struct GenJetHash {
    std::size_t operator()(const GenJet& j) const { return j.B.hash() * 17 + static_cast<std::size_t>(j.gen + 1); }
};

// Ranking used for leading jets: generator index, then order, then graded lex.
bool rank_less(const GenJet& a, const GenJet& b);

// Linear combination of jets with rational-function coefficients.
using GenComb = std::map<GenJet, RatFun>;

void add_term(GenComb& c, const GenJet& k, const RatFun& coef);
GenComb operator+(const GenComb& a, const GenComb& b);
GenComb operator-(const GenComb& a, const GenComb& b);
GenComb scale(const GenComb& a, const RatFun& f);
GenComb single(const GenJet& k, const RatFun& coef = RatFun(1));
GenComb map_coefficients(const GenComb& a, const std::function<RatFun(const RatFun&)>& f);
int max_order(const GenComb& a);

class DeterminingSystem;

struct Integrability {
    bool ok = true;
    std::vector<std::string> findings;
};

// Linear homogeneous system in the jets of the generators zeta^a over the
// ambient coordinates z. Relations are kept in solved triangular form: each
// principal lead has a normal form in parametric jets.
class DeterminingSystem {
public:
    struct Generator {
        std::string name;
        std::vector<bool> depends; // per ambient coordinate
        std::string lifted;        // Maurer-Cartan name, e.g. "mu"
    };

    DeterminingSystem(std::vector<std::string> ambient, std::vector<Generator> gens);

    std::size_t m() const { return ambient_.size(); }
    const std::vector<std::string>& ambient() const { return ambient_; }
    Var ambient_var(std::size_t a) const { return vars_[a]; }
    const std::vector<Generator>& generators() const { return gens_; }
    int generator_index(const std::string& name) const;

    void add_relation(const GenComb& r);
    const std::vector<GenComb>& input_relations() const { return input_; }
    // lead -> normal form of the lead (in parametric jets)
    const std::map<GenJet, GenComb>& solved() const { return solved_; }

    bool admissible(const GenJet& j) const;
    bool is_principal(const GenJet& j) const;
    GenComb normal_form(const GenJet& j) const;
    GenComb reduce(const GenComb& c) const;
    // D_{z^a} of a combination (coefficients are functions of z).
    GenComb derivative(const GenComb& c, std::size_t a) const;

    std::vector<GenJet> jets_of_order(int order) const;
    std::vector<GenJet> parametric_up_to(int order) const;
    std::vector<GenJet> principal_up_to(int order) const;

    // Cross-derivative compatibility of the solved form up to order k.
    Integrability check_integrability(int k) const;

    std::string jet_name(const GenJet& j) const;
    std::string lifted_name(const GenJet& j) const;
    std::string str(const GenComb& c, bool lifted = false) const;
    bool parse_jet(const std::string& name, GenJet& out) const;
    bool parse_lifted(const std::string& name, GenJet& out) const;

    DeterminingSystem(const DeterminingSystem& o);
    DeterminingSystem& operator=(const DeterminingSystem&) = delete;

private:
    void insert_solved(GenComb r);
    GenComb nf_uncached(const GenJet& j) const;
    void clear_cache() const;

    std::vector<std::string> ambient_;
    std::vector<Var> vars_;
    std::vector<std::string> upper_;
    std::vector<Generator> gens_;
    std::vector<GenComb> input_;
    std::map<GenJet, GenComb> solved_;
    mutable std::mutex mu_;
    mutable std::unordered_map<GenJet, GenComb, GenJetHash> cache_;
};

struct ProlongedSystem {
    int order = 0;
    // principal jet -> jet minus its normal form, for each principal jet of
    // order <= order
    std::vector<std::pair<GenJet, GenComb>> relations;
    Integrability integrability;
};

ProlongedSystem prolong_determining_system(const DeterminingSystem& sys, int k);

// Lifted relations: z -> Z (upper-case names), zeta^a_B -> mu^a_B.
class MCRelationSet {
public:
    explicit MCRelationSet(std::shared_ptr<const DeterminingSystem> sys);

    const DeterminingSystem& system() const { return *sys_; }
    Var target_var(std::size_t a) const { return targets_[a]; }
    const std::vector<Var>& target_vars() const { return targets_; }
    // Input relations with coefficients in Z.
    const std::vector<GenComb>& relations() const { return lifted_; }
    std::vector<GenJet> basis(int order) const { return sys_->parametric_up_to(order); }

    RatFun to_target(const RatFun& f) const;
    RatFun to_source(const RatFun& f) const;
    // Express a combination of mu symbols (coefficients in Z and anything
    // else) in basis symbols.
    GenComb reduce(const GenComb& c) const;
    GenComb normal_form(const GenJet& j) const;
    std::string str(const GenComb& c) const;

private:
    std::shared_ptr<const DeterminingSystem> sys_;
    std::vector<Var> targets_;
    std::vector<GenComb> lifted_;
};

MCRelationSet lift_system(std::shared_ptr<const DeterminingSystem> sys);

// Group-jet frame on a submanifold jet space: target expressions for every
// base coordinate, optionally overriding prolonged coordinates (contact
// transformations prescribe P directly).
struct GroupJetFrame {
    std::vector<RatFun> targets; // size p + q
    std::map<std::pair<std::size_t, std::vector<int>>, RatFun> overrides;

    static GroupJetFrame identity(const JetSpec& spec);
};

using ProlongedAction = std::map<std::pair<std::size_t, std::vector<int>>, RatFun>;

// U^alpha_J for #J <= k.
ProlongedAction prolonged_action(const GroupJetFrame& frame, const JetSpec& spec, int k);

// Vector field coefficients, one per base coordinate of the jet space.
// Keys with gen >= 0 are symbolic generator jets; the unit key carries
// concrete coefficients.
struct InfinitesimalGenerator {
    std::vector<GenComb> coeff;

    static InfinitesimalGenerator symbolic(const DeterminingSystem& sys);
    static InfinitesimalGenerator concrete(const std::vector<RatFun>& c);
};

// Prolongation of an infinitesimal generator. When a determining system is
// supplied every intermediate result is reduced to parametric jets.
// Optional pruning keeps only terms that can survive evaluation on a
// cross-section: a numerator monomial with more factors from `zero_vars`
// than the derivatives still to be taken (target order minus #J) is dropped.
class GeneratorProlongation {
public:
    struct Pruning {
        std::set<Var> zero_vars;
        int target_order = -1;
    };

    GeneratorProlongation(const JetSpec& spec, InfinitesimalGenerator v,
                          const DeterminingSystem* sys = nullptr);
    GeneratorProlongation(const JetSpec& spec, InfinitesimalGenerator v, const DeterminingSystem* sys,
                          Pruning prune);

    GenComb characteristic(std::size_t alpha) const;
    GenComb phi(std::size_t alpha, const MultiIndex& J) const;
    // Coefficient of d/dx^i.
    const GenComb& xi(std::size_t i) const { return v_.coeff[i]; }
    GenComb total_derivative(const GenComb& c, std::size_t i) const;

private:
    GenComb prune(GenComb c, int order) const;

    const JetSpec& spec_;
    InfinitesimalGenerator v_;
    const DeterminingSystem* sys_;
    Pruning prune_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<std::size_t, std::vector<int>>, GenComb> memo_;
};

std::vector<GenComb> characteristic(const JetSpec& spec, const InfinitesimalGenerator& v);

} // namespace cartan
