#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cartan/formcalc.hpp"
#include "cartan/groupjets.hpp"
#include "cartan/symbolmod.hpp"

namespace cartan {

// Count constraint for one letter of a cross-section word: exact n, '*'
// (any) or '+' (at least one).
struct CountPattern {
    int lo = 0;
    int hi = 0; // -1: unbounded
    bool matches(int n) const { return n >= lo && (hi < 0 || n <= hi); }
};

enum class InvariantStatus { Free, Normalized, Nonvanishing, Identically };

// Lifted invariant X^i (coord < p, J = 0) or U^alpha_J (coord = p + alpha).
struct Subject {
    std::size_t coord = 0;
    MultiIndex J;
    bool operator<(const Subject& o) const
    {
        if (coord != o.coord)
            return coord < o.coord;
        if (J.order() != o.J.order())
            return J.order() < o.J.order();
        return o.J < J;
    }
    bool operator==(const Subject& o) const { return coord == o.coord && J == o.J; }
};

struct CrossSectionRule {
    std::size_t coord = 0;
    std::vector<CountPattern> word; // one per independent; empty for X^i
    InvariantStatus status = InvariantStatus::Normalized;
    Rational value = 0;
    std::string text;

    bool matches(const Subject& s) const;
};

class CrossSection {
public:
    void add(CrossSectionRule r) { rules_.push_back(std::move(r)); }
    const std::vector<CrossSectionRule>& rules() const { return rules_; }
    // First matching rule.
    const CrossSectionRule* lookup(const Subject& s) const;

private:
    std::vector<CrossSectionRule> rules_;
};

struct RecurrenceRelation {
    Subject subject;
    Var invariant = 0;
    ExteriorForm rhs; // omega part plus group part
};

// Linear relation sum c_r mu_r + omega part = 0 that no allowed pivot can solve.
struct BlockedPivot {
    Subject subject;
    std::vector<Var> invariants; // candidates for "!= 0" or "== 0"
    std::string message;
};

struct FrameState {
    int order = 0;
    // normalized Maurer-Cartan forms
    std::map<FormSym, ExteriorForm> solved;
    // unsolved basis forms of order <= residual_order (isotropy directions)
    std::set<FormSym> residual;
    int residual_order = 0;
    // unsolved basis forms above residual_order
    std::set<FormSym> unresolved;
    // invariants found identically constant while normalizing
    std::map<Var, Rational> identities;
    // omega-only relations: each expression vanishes
    std::vector<RatFun> syzygies;
    std::vector<BlockedPivot> blocked;
    std::vector<RecurrenceRelation> phantom;

    bool complete() const { return residual.empty(); }
};

struct NormalizeOptions {
    int order = 3;            // highest #J of phantom subjects
    int residual_order = -1;  // default order - 1
    int prune_order = -1;     // default order
};

// Moving-frame engine for a pseudo-group acting on J^n(M, p) with
// M = independents x dependents; the determining system lives on M.
class MovingFrame {
public:
    MovingFrame(std::vector<std::string> independents, std::vector<std::string> dependents,
                std::shared_ptr<const DeterminingSystem> sys);

    const JetSpec& spec() const { return *spec_; }
    const DeterminingSystem& system() const { return *sys_; }
    const MCRelationSet& relations() const { return rel_; }
    std::size_t p() const { return spec_->p(); }

    Var invariant(const Subject& s) const;
    std::optional<Subject> subject_of(Var v) const;
    Var source(const Subject& s) const;
    std::string name(const Subject& s) const { return var_name(invariant(s)); }

    // Status of a lifted invariant under the cross-section plus identities.
    std::pair<InvariantStatus, Rational> status(const Subject& s, const CrossSection& cs,
                                               const std::map<Var, Rational>& identities = {}) const;

    RecurrenceRelation recurrence(const Subject& s, const CrossSection& cs, int target_order = -1,
                                  const std::map<Var, Rational>& identities = {}) const;

    FrameState normalize(const CrossSection& cs, const NormalizeOptions& opt) const;

    // Recurrence relation with the normalized forms of st substituted.
    RecurrenceRelation normalized_recurrence(const Subject& s, const CrossSection& cs, const FrameState& st) const;

    // Structure equations of the invariant (pro-)coframe {omega, residual}.
    StructureEquations coframe(const FrameState& st, const CrossSection& cs) const;

    SymbolNamer namer() const;
    FormResolver resolver() const;
    // Express a normalized form with residual symbols and omegas.
    std::string str(const ExteriorForm& f) const { return f.str(namer()); }

    std::vector<FormSym> column_order(const std::set<FormSym>& syms) const;

    // "X = 0", "Q_p4 = 1", "Q_u*x* = 0" (normalization), "Q_p4 != 0"
    // (nonvanishing), "Q_p2x2 == 0" (identity). Word counts: digits, '*'
    // (any), '+' (at least one); absent letters count 0. Throws ParseError.
    CrossSectionRule parse_rule(const std::string& text) const;

    // Replace coordinates by lifted invariants; normalized ones by their values.
    RatFun invariantize(const RatFun& f, const CrossSection& cs, const std::map<Var, Rational>& ids = {}) const
    {
        return evaluate(f, cs, ids);
    }
    ModElement invariantize_polynomial(const ModElement& e, const CrossSection& cs,
                                       const std::map<Var, Rational>& ids = {}) const;

    // T-module over the base coordinates: t_z, T^z with mu^a_B <-> t_B T^a.
    ModNames t_module_names() const { return t_names(sys_->ambient()); }

    // Linear relations among the mu^a_B with #B <= n on the cross-section:
    // the lifted determining relations together with the group parts of the
    // normalized recurrences of order <= n - 1. Reduced basis, n >= 1.
    std::vector<ModElement> isotropy_annihilator(const CrossSection& cs, int n,
                                                 const std::map<Var, Rational>& ids = {}) const;
    // L: combinations of the mu^a_B with #B <= n vanishing by the lifted
    // determining relations, on the cross-section.
    std::vector<ModElement> relation_polynomials(const CrossSection& cs, int n,
                                                 const std::map<Var, Rational>& ids = {}) const;
    // p*: s~_i -> xi^i, s_J S^alpha -> phi^J_alpha of the relation-free
    // prolongation, on the cross-section.
    ModElement prolonged_polynomial(const SElement& e, const CrossSection& cs,
                                    const std::map<Var, Rational>& ids = {}) const;
    // Basis of S^{<=n}: s~_i and s_J S^alpha with #J <= n - 1.
    std::vector<SElement> s_basis(int n) const;

private:
    RatFun evaluate(const RatFun& f, const CrossSection& cs, const std::map<Var, Rational>& ids) const;
    RecurrenceRelation recurrence_with(const Subject& s, const CrossSection& cs, const std::map<Var, Rational>& ids,
                                       const GeneratorProlongation& pr) const;
    std::set<Var> zero_vars(const CrossSection& cs, int order) const;
    std::vector<ModElement> annihilator(const CrossSection& cs, int n, const std::map<Var, Rational>& ids,
                                        bool phantoms) const;

    std::unique_ptr<JetSpec> spec_;
    std::shared_ptr<const DeterminingSystem> sys_;
    MCRelationSet rel_;
};

// Y^k_ij from d omega^k = -sum_{i<j} Y^k_ij omega^i ^ omega^j.
struct Commutators {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, RatFun> Y; // (k, i, j), i < j
    bool partial = false; // residual Maurer-Cartan terms present
    std::set<FormSym> residual_terms;
};

Commutators commutators(const StructureEquations& coframe, std::size_t p);

// Differential relations forced by d^2 = 0: the differentials of the listed
// invariants are replaced by unknown symbols (D_i I for omega^i, and one
// unknown per residual form, labelled by namer); returns the solved unknowns.
struct D2Syzygies {
    std::map<std::string, RatFun> solved; // "D_x(Q_P4)" -> expression
    std::vector<RatFun> relations;        // leftover conditions
};

D2Syzygies syzygies_from_d2(const StructureEquations& eqs, const std::vector<Var>& invariants,
                            const std::vector<std::string>& independents, const SymbolNamer& namer = {});

// Relative invariants of u_xx = F(x, u, p) under point transformations:
// q_pppp and the numerator of Q_{P^2X^2}.
struct OdeClass {
    std::string branch; // "I", "II", "III", "IV"
    RatFun q_p4;
    RatFun q_p2x2;
};

OdeClass classify_ode(const RatFun& F, Var x, Var u, Var p);

// Parametrized submanifold: invariants and invariant derivative operators as
// functions of the parameters, sampled on a grid.
struct SignatureData {
    std::vector<Var> params;
    std::vector<RatFun> invariants;
    std::vector<std::vector<RatFun>> derive; // D_i = sum_j derive[i][j] d/dt_j
    std::vector<std::vector<double>> grid;
};

struct SignatureReport {
    std::vector<int> ranks_a, ranks_b; // rank of the order-k signature map, k = 0..n
    bool regular = true;               // rank constant across the samples
    int s = -1;                        // stabilization order, -1 if not reached
    bool same_order = false;
    bool overlap = false;
    double distance_ab = 0, distance_ba = 0, threshold = 0;
    std::string message;
};

// Singular values below tol * largest count as zero. Overlap: both directed
// point-to-set distances of the order s+1 clouds within tol plus twice the
// sampling spacing.
SignatureReport signature_compare(const SignatureData& a, const SignatureData& b, int n, double tol = 1e-9);

} // namespace cartan
