#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan/ratfun.hpp"

namespace cartan {

// Dense matrix over Rational or RatFun. Column labels record the caller's
// column order; echelon routines never permute columns.
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    std::vector<std::string>& labels() { return labels_; }
    const std::vector<std::string>& labels() const { return labels_; }

    void append_row(const std::vector<T>& row)
    {
        if (rows_ == 0 && cols_ == 0)
            cols_ = row.size();
        if (row.size() != cols_)
            throw std::invalid_argument("row length mismatch");
        a_.insert(a_.end(), row.begin(), row.end());
        ++rows_;
    }
    std::vector<T> row(std::size_t r) const
    {
        return std::vector<T>(a_.begin() + static_cast<long>(r * cols_),
                              a_.begin() + static_cast<long>((r + 1) * cols_));
    }
    bool row_is_zero(std::size_t r) const
    {
        for (std::size_t c = 0; c < cols_; ++c)
            if (!is_zero((*this)(r, c)))
                return false;
        return true;
    }
    void swap_rows(std::size_t i, std::size_t j)
    {
        if (i == j)
            return;
        for (std::size_t c = 0; c < cols_; ++c)
            std::swap((*this)(i, c), (*this)(j, c));
    }
    bool operator==(const Matrix& o) const
    {
        return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = T(1);
        return m;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> a_;
    std::vector<std::string> labels_;
};

using QMatrix = Matrix<Rational>;
using FMatrix = Matrix<RatFun>;

template <class T>
struct Echelon {
    Matrix<T> matrix;
    std::vector<std::size_t> pivots;
};

// Row echelon form by row operations only. The pivot of each step is the
// leftmost column holding a nonzero entry below the current row, taken from
// the topmost such row.
template <class T>
Echelon<T> ordered_row_echelon(Matrix<T> m)
{
    Echelon<T> out;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
        std::size_t p = r;
        while (p < m.rows() && is_zero(m(p, c)))
            ++p;
        if (p == m.rows())
            continue;
        m.swap_rows(r, p);
        T inv = T(1) / m(r, c);
        for (std::size_t k = c; k < m.cols(); ++k)
            m(r, k) = m(r, k) * inv;
        for (std::size_t i = r + 1; i < m.rows(); ++i) {
            if (is_zero(m(i, c)))
                continue;
            T f = m(i, c);
            for (std::size_t k = c; k < m.cols(); ++k)
                if (!is_zero(m(r, k)))
                    m(i, k) = m(i, k) - f * m(r, k);
        }
        out.pivots.push_back(c);
        ++r;
    }
    out.matrix = std::move(m);
    return out;
}

template <class T>
std::size_t rank(const Matrix<T>& m)
{
    return ordered_row_echelon(m).pivots.size();
}

// Reduced row echelon form in place, no column permutations; returns the
// pivot columns.
template <class T>
std::vector<std::size_t> reduced_row_echelon(Matrix<T>& m)
{
    auto e = ordered_row_echelon(m);
    m = std::move(e.matrix);
    for (std::size_t r = e.pivots.size(); r-- > 0;) {
        std::size_t c = e.pivots[r];
        for (std::size_t i = 0; i < r; ++i) {
            if (is_zero(m(i, c)))
                continue;
            T f = m(i, c);
            for (std::size_t k = c; k < m.cols(); ++k)
                if (!is_zero(m(r, k)))
                    m(i, k) = m(i, k) - f * m(r, k);
        }
    }
    return e.pivots;
}

// Basis of {v : m v = 0}, one vector per non-pivot column.
template <class T>
std::vector<std::vector<T>> nullspace(Matrix<T> m)
{
    auto piv = reduced_row_echelon(m);
    std::vector<bool> is_piv(m.cols(), false);
    for (auto c : piv)
        is_piv[c] = true;
    std::vector<std::vector<T>> out;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        if (is_piv[f])
            continue;
        std::vector<T> v(m.cols());
        v[f] = T(1);
        for (std::size_t r = 0; r < piv.size(); ++r)
            v[piv[r]] = -m(r, f);
        out.push_back(std::move(v));
    }
    return out;
}

// Affine expression c + sum coef_j * x_j over unsolved variables.
struct AffineExpr {
    RatFun constant;
    std::map<std::size_t, RatFun> terms;
};

struct LinearSolution {
    std::map<std::size_t, AffineExpr> solved;
    std::vector<std::size_t> unsolved;
    // Residual relations sum_j row[j] x_j = rhs that could not be used.
    std::vector<std::pair<std::vector<RatFun>, RatFun>> residual;
};

class InconsistentSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using InvertiblePredicate = std::function<bool(const RatFun&)>;

// A nonzero constant is always an allowed pivot; other entries only when the
// predicate accepts them.
bool pivot_allowed(const RatFun& f, const InvertiblePredicate& inv);

// Gauss-Jordan on the first `pivot_cols` columns; the remaining columns are
// carried along as parameters. Returns pivot (row, col) pairs in order.
std::vector<std::pair<std::size_t, std::size_t>>
gauss_jordan(FMatrix& m, std::size_t pivot_cols, const InvertiblePredicate& inv);

LinearSolution solve_linear(const FMatrix& system, const std::vector<RatFun>& rhs,
                            const InvertiblePredicate& inv);

} // namespace cartan
