#include "cartan/framekit.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace cartan {

namespace {

double to_double(const Rational& q) { return q.get_d(); }

// Exact rational evaluation of a rational function at a sample point.
double eval_at(const RatFun& f, const std::vector<Var>& params, const std::vector<double>& t)
{
    RatFun g = f.substitute([&](Var v) -> std::optional<RatFun> {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i] == v)
                return RatFun(Rational(t[i]));
        return std::nullopt;
    });
    if (!g.is_constant())
        throw std::invalid_argument("signature data depends on symbols other than the parameters: " + g.str());
    return to_double(g.constant_value());
}

// Signature coordinates of order <= n: I, D_i I, D_j D_i I, ... by level.
std::vector<std::vector<RatFun>> signature_levels(const SignatureData& d, int n)
{
    std::vector<std::vector<RatFun>> levels{d.invariants};
    for (int k = 1; k <= n; ++k) {
        std::vector<RatFun> next;
        for (const auto& f : levels.back())
            for (const auto& D : d.derive) {
                RatFun g;
                for (std::size_t j = 0; j < d.params.size(); ++j)
                    if (!D[j].is_zero())
                        g = g + D[j] * f.derivative(d.params[j]);
                next.push_back(g);
            }
        levels.push_back(std::move(next));
    }
    return levels;
}

int numeric_rank(const Eigen::MatrixXd& J, double tol)
{
    if (J.size() == 0)
        return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0)
        return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * sv(0))
            ++r;
    return r;
}

struct Evaluated {
    std::vector<int> ranks;
    bool regular = true;
    std::vector<std::vector<std::vector<double>>> points; // [k][sample] -> order-k coordinates
};

Evaluated evaluate_signature(const SignatureData& d, int n, double tol)
{
    if (d.derive.size() != d.params.size() && !d.derive.empty())
        for (const auto& D : d.derive)
            if (D.size() != d.params.size())
                throw std::invalid_argument("derivative operator length must match the parameters");
    if (d.grid.empty())
        throw std::invalid_argument("empty sample grid");
    auto levels = signature_levels(d, n);
    Evaluated out;
    out.points.assign(static_cast<std::size_t>(n + 1), {});
    std::vector<RatFun> coords;
    for (int k = 0; k <= n; ++k) {
        coords.insert(coords.end(), levels[static_cast<std::size_t>(k)].begin(),
                      levels[static_cast<std::size_t>(k)].end());
        std::vector<std::vector<RatFun>> grad(coords.size(), std::vector<RatFun>(d.params.size()));
        for (std::size_t c = 0; c < coords.size(); ++c)
            for (std::size_t j = 0; j < d.params.size(); ++j)
                grad[c][j] = coords[c].derivative(d.params[j]);
        int rk = -1;
        for (const auto& t : d.grid) {
            Eigen::MatrixXd J(static_cast<Eigen::Index>(coords.size()), static_cast<Eigen::Index>(d.params.size()));
            std::vector<double> pt;
            for (std::size_t c = 0; c < coords.size(); ++c) {
                pt.push_back(eval_at(coords[c], d.params, t));
                for (std::size_t j = 0; j < d.params.size(); ++j)
                    J(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = eval_at(grad[c][j], d.params, t);
            }
            out.points[static_cast<std::size_t>(k)].push_back(std::move(pt));
            int r = numeric_rank(J, tol);
            if (rk >= 0 && r != rk)
                out.regular = false;
            rk = std::max(rk, r);
        }
        out.ranks.push_back(rk);
    }
    return out;
}

double dist(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double directed(const std::vector<std::vector<double>>& A, const std::vector<std::vector<double>>& B)
{
    double worst = 0;
    for (const auto& a : A) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : B)
            best = std::min(best, dist(a, b));
        worst = std::max(worst, best);
    }
    return worst;
}

// Largest nearest-neighbour distance within a cloud; coincident samples are
// skipped.
double spacing(const std::vector<std::vector<double>>& A, double tol)
{
    double worst = 0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < A.size(); ++j)
            if (double e = dist(A[i], A[j]); i != j && e > tol)
                best = std::min(best, e);
        if (std::isfinite(best))
            worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

SignatureReport signature_compare(const SignatureData& a, const SignatureData& b, int n, double tol)
{
    if (a.invariants.size() != b.invariants.size() || a.derive.size() != b.derive.size())
        throw std::invalid_argument("signature data must list the same invariants and derivatives");
    SignatureReport rep;
    auto ea = evaluate_signature(a, n + 1, tol);
    auto eb = evaluate_signature(b, n + 1, tol);
    rep.ranks_a.assign(ea.ranks.begin(), ea.ranks.end() - 1);
    rep.ranks_b.assign(eb.ranks.begin(), eb.ranks.end() - 1);
    rep.regular = ea.regular && eb.regular;
    auto stab = [&](const std::vector<int>& r) {
        for (std::size_t k = 0; k + 1 < r.size(); ++k)
            if (r[k] == r[k + 1])
                return static_cast<int>(k);
        return -1;
    };
    int sa = stab(ea.ranks), sb = stab(eb.ranks);
    rep.same_order = sa == sb && sa >= 0;
    rep.s = rep.same_order ? sa : -1;
    if (!rep.regular) {
        rep.message = "signature map rank is not constant across the samples";
        return rep;
    }
    if (!rep.same_order) {
        rep.message = sa < 0 || sb < 0 ? "signature ranks do not stabilize by the requested order"
                                       : "signature orders differ";
        return rep;
    }
    const auto& A = ea.points[static_cast<std::size_t>(rep.s + 1)];
    const auto& B = eb.points[static_cast<std::size_t>(rep.s + 1)];
    rep.distance_ab = directed(A, B);
    rep.distance_ba = directed(B, A);
    rep.threshold = tol + 2 * std::max(spacing(A, tol), spacing(B, tol));
    rep.overlap = rep.distance_ab <= rep.threshold && rep.distance_ba <= rep.threshold;
    rep.message = rep.overlap ? "signatures overlap" : "signatures are disjoint";
    return rep;
}

} // namespace cartan
