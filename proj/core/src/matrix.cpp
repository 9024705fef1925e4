#include "cartan/matrix.hpp"

namespace cartan {

bool pivot_allowed(const RatFun& f, const InvertiblePredicate& inv)
{
    if (f.is_zero())
        return false;
    if (f.num().is_constant())
        return true;
    return inv && inv(f);
}

std::vector<std::pair<std::size_t, std::size_t>>
gauss_jordan(FMatrix& m, std::size_t pivot_cols, const InvertiblePredicate& inv)
{
    std::vector<std::pair<std::size_t, std::size_t>> piv;
    std::vector<bool> used(m.rows(), false);
    for (std::size_t c = 0; c < pivot_cols; ++c) {
        std::size_t p = m.rows();
        for (std::size_t r = 0; r < m.rows(); ++r)
            if (!used[r] && pivot_allowed(m(r, c), inv)) {
                p = r;
                break;
            }
        if (p == m.rows())
            continue;
        used[p] = true;
        RatFun scale = RatFun(1) / m(p, c);
        for (std::size_t k = 0; k < m.cols(); ++k)
            if (!m(p, k).is_zero())
                m(p, k) = m(p, k) * scale;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (r == p || m(r, c).is_zero())
                continue;
            RatFun f = m(r, c);
            for (std::size_t k = 0; k < m.cols(); ++k)
                if (!m(p, k).is_zero())
                    m(r, k) = m(r, k) - f * m(p, k);
        }
        piv.emplace_back(p, c);
    }
    return piv;
}

LinearSolution solve_linear(const FMatrix& system, const std::vector<RatFun>& rhs,
                            const InvertiblePredicate& inv)
{
    if (rhs.size() != system.rows())
        throw std::invalid_argument("rhs length mismatch");
    const std::size_t n = system.cols();
    FMatrix aug(system.rows(), n + 1);
    for (std::size_t r = 0; r < system.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c)
            aug(r, c) = system(r, c);
        aug(r, n) = rhs[r];
    }
    auto piv = gauss_jordan(aug, n, inv);
    LinearSolution sol;
    std::vector<bool> pivot_row(aug.rows(), false), pivot_col(n, false);
    for (auto [r, c] : piv) {
        pivot_row[r] = true;
        pivot_col[c] = true;
    }
    for (std::size_t c = 0; c < n; ++c)
        if (!pivot_col[c])
            sol.unsolved.push_back(c);
    for (auto [r, c] : piv) {
        AffineExpr e;
        e.constant = aug(r, n);
        for (std::size_t k = 0; k < n; ++k)
            if (k != c && !aug(r, k).is_zero())
                e.terms[k] = -aug(r, k);
        sol.solved[c] = std::move(e);
    }
    for (std::size_t r = 0; r < aug.rows(); ++r) {
        if (pivot_row[r])
            continue;
        bool zero_row = true;
        for (std::size_t c = 0; c < n; ++c)
            if (!aug(r, c).is_zero())
                zero_row = false;
        if (zero_row) {
            if (aug(r, n).is_zero())
                continue;
            if (aug(r, n).is_constant())
                throw InconsistentSystem("inconsistent linear system: 0 = " + aug(r, n).str());
        }
        std::vector<RatFun> row(n);
        for (std::size_t c = 0; c < n; ++c)
            row[c] = aug(r, c);
        sol.residual.emplace_back(std::move(row), aug(r, n));
    }
    return sol;
}

} // namespace cartan
