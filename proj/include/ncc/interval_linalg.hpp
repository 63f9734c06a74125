#ifndef NCC_INTERVAL_LINALG_HPP
#define NCC_INTERVAL_LINALG_HPP

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "interval.hpp"

namespace ncc
{

// The point inverse of a midpoint matrix could not be formed.
class SingularMidpoint : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IntervalVector
{
public:
    IntervalVector() = default;
    explicit IntervalVector(std::size_t n, Interval v = Interval(0.0)) : data_(n, v) {}
    IntervalVector(std::initializer_list<Interval> init) : data_(init) {}
    explicit IntervalVector(std::vector<Interval> v) : data_(std::move(v)) {}

    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    Interval &operator[](std::size_t i) { return data_[i]; }
    const Interval &operator[](std::size_t i) const { return data_[i]; }
    Interval &at(std::size_t i) { return data_.at(i); }
    [[nodiscard]] const Interval &at(std::size_t i) const { return data_.at(i); }

    [[nodiscard]] auto begin() const noexcept { return data_.begin(); }
    [[nodiscard]] auto end() const noexcept { return data_.end(); }
    [[nodiscard]] const std::vector<Interval> &values() const noexcept { return data_; }

    [[nodiscard]] Eigen::VectorXd mid() const
    {
        Eigen::VectorXd m(static_cast<Eigen::Index>(data_.size()));
        for (std::size_t i = 0; i < data_.size(); ++i) {
            m[static_cast<Eigen::Index>(i)] = data_[i].mid();
        }
        return m;
    }

    [[nodiscard]] double max_width() const noexcept
    {
        double w = 0.0;
        for (const auto &x : data_) {
            w = std::max(w, x.width());
        }
        return w;
    }

    [[nodiscard]] double max_rad() const noexcept
    {
        double w = 0.0;
        for (const auto &x : data_) {
            w = std::max(w, x.rad());
        }
        return w;
    }

    [[nodiscard]] bool contains(const IntervalVector &o) const
    {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!data_[i].contains(o.data_[i])) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] bool contains_interior(const IntervalVector &o) const
    {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!data_[i].contains_interior(o.data_[i])) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] bool intersects(const IntervalVector &o) const
    {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!data_[i].intersects(o.data_[i])) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] bool contains_point(const Eigen::VectorXd &p) const
    {
        if (static_cast<std::size_t>(p.size()) != data_.size()) {
            return false;
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!data_[i].contains(p[static_cast<Eigen::Index>(i)])) {
                return false;
            }
        }
        return true;
    }

    static IntervalVector from_point(const Eigen::VectorXd &p)
    {
        IntervalVector v(static_cast<std::size_t>(p.size()));
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            v[static_cast<std::size_t>(i)] = Interval(p[i]);
        }
        return v;
    }

    friend bool operator==(const IntervalVector &a, const IntervalVector &b) { return a.data_ == b.data_; }

private:
    void check_same(const IntervalVector &o) const
    {
        if (o.size() != size()) {
            throw PreconditionError("interval vector dimension mismatch");
        }
    }

    std::vector<Interval> data_;
};

class IntervalMatrix
{
public:
    IntervalMatrix() = default;
    IntervalMatrix(std::size_t rows, std::size_t cols, Interval v = Interval(0.0))
        : rows_(rows), cols_(cols), data_(rows * cols, v)
    {
    }

    static IntervalMatrix identity(std::size_t n)
    {
        IntervalMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = Interval(1.0);
        }
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    Interval &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Interval &operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    Interval &at(std::size_t i, std::size_t j)
    {
        check(i, j);
        return data_[i * cols_ + j];
    }
    [[nodiscard]] const Interval &at(std::size_t i, std::size_t j) const
    {
        check(i, j);
        return data_[i * cols_ + j];
    }

    [[nodiscard]] Eigen::MatrixXd mid() const
    {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).mid();
            }
        }
        return m;
    }

    static IntervalMatrix from_point(const Eigen::MatrixXd &p)
    {
        IntervalMatrix m(static_cast<std::size_t>(p.rows()), static_cast<std::size_t>(p.cols()));
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            for (Eigen::Index j = 0; j < p.cols(); ++j) {
                m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = Interval(p(i, j));
            }
        }
        return m;
    }

private:
    void check(std::size_t i, std::size_t j) const
    {
        if (i >= rows_ || j >= cols_) {
            throw std::out_of_range("interval matrix index out of range");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Interval> data_;
};

// C * v with C a point matrix.
inline IntervalVector mul(const Eigen::MatrixXd &c, const IntervalVector &v)
{
    if (static_cast<std::size_t>(c.cols()) != v.size()) {
        throw PreconditionError("mul: dimension mismatch");
    }
    IntervalVector r(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        Interval s(0.0);
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            const double cij = c(i, j);
            if (cij != 0.0) {
                s += Interval(cij) * v[static_cast<std::size_t>(j)];
            }
        }
        r[static_cast<std::size_t>(i)] = s;
    }
    return r;
}

// C * A with C a point matrix.
inline IntervalMatrix mul(const Eigen::MatrixXd &c, const IntervalMatrix &a)
{
    if (static_cast<std::size_t>(c.cols()) != a.rows()) {
        throw PreconditionError("mul: dimension mismatch");
    }
    IntervalMatrix r(static_cast<std::size_t>(c.rows()), a.cols());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            Interval s(0.0);
            for (Eigen::Index k = 0; k < c.cols(); ++k) {
                const double cik = c(i, k);
                if (cik != 0.0) {
                    s += Interval(cik) * a(static_cast<std::size_t>(k), j);
                }
            }
            r(static_cast<std::size_t>(i), j) = s;
        }
    }
    return r;
}

inline IntervalVector mul(const IntervalMatrix &a, const IntervalVector &v)
{
    if (a.cols() != v.size()) {
        throw PreconditionError("mul: dimension mismatch");
    }
    IntervalVector r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Interval s(0.0);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            s += a(i, j) * v[j];
        }
        r[i] = s;
    }
    return r;
}

// Point inverse of a midpoint matrix; throws SingularMidpoint when the LU
// factorization is rank deficient or badly conditioned.
inline Eigen::MatrixXd point_inverse(const Eigen::MatrixXd &m, double min_rcond = 1e-14)
{
    if (m.rows() != m.cols()) {
        throw PreconditionError("point_inverse: matrix not square");
    }
    if (!m.allFinite()) {
        throw SingularMidpoint("point_inverse: non-finite midpoint");
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const double rc = lu.rcond();
    if (!(rc > min_rcond)) {
        throw SingularMidpoint("point_inverse: midpoint matrix numerically singular");
    }
    Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) {
        throw SingularMidpoint("point_inverse: non-finite inverse");
    }
    return inv;
}

struct PreconditionedSystem
{
    IntervalVector cb;  // enclosure of C*b
    IntervalMatrix ca;  // enclosure of C*A
    Eigen::MatrixXd c;  // point inverse of mid(A)
};

inline PreconditionedSystem precond_solve(const IntervalMatrix &a, const IntervalVector &b)
{
    if (a.rows() != a.cols()) {
        throw PreconditionError("precond_solve: matrix not square");
    }
    if (a.rows() != b.size()) {
        throw PreconditionError("precond_solve: dimension mismatch");
    }
    Eigen::MatrixXd c = point_inverse(a.mid());
    return PreconditionedSystem{mul(c, b), mul(c, a), std::move(c)};
}

} // namespace ncc

#endif
