#include "parnn/matrix.hpp"

#include <cmath>

#include "parnn/error.hpp"

namespace parnn {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        fail("Matrix: data length ", data_.size(), " does not match shape ",
             rows_, "x", cols_);
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        fail("matmul: inner dimensions differ, ", a.rows(), "x", a.cols(),
             " vs ", b.rows(), "x", b.cols());
    }
    Matrix c(a.rows(), b.cols());
    // i-k-j order: accumulate into the result row, streaming b's rows.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        fail("matmul_tn: row counts differ, ", a.rows(), "x", a.cols(),
             " vs ", b.rows(), "x", b.cols());
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* arow = a.row_ptr(k);
        const double* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double* crow = c.row_ptr(i);
            const double aki = arow[i];
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        fail("matmul_nt: column counts differ, ", a.rows(), "x", a.cols(),
             " vs ", b.rows(), "x", b.cols());
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

namespace {

// Lower-triangular Cholesky factor, throwing on a non-positive pivot.
Matrix cholesky_factor(const Matrix& s) {
    const std::size_t n = s.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = s(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (acc <= 0.0 || !std::isfinite(acc)) {
                    fail("cholesky_solve: non-positive-definite pivot ", acc,
                         " at index ", i);
                }
                l(i, j) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    return l;
}

} // namespace

Matrix cholesky_solve(const Matrix& s, const Matrix& rhs) {
    if (s.rows() != s.cols()) {
        fail("cholesky_solve: matrix not square, ", s.rows(), "x", s.cols());
    }
    if (s.rows() != rhs.rows()) {
        fail("cholesky_solve: rhs rows ", rhs.rows(), " do not match system size ",
             s.rows());
    }
    const std::size_t n = s.rows();
    const Matrix l = cholesky_factor(s);
    Matrix x = rhs;
    // Forward substitution L*Y = rhs, then back substitution L^T*X = Y,
    // all right-hand-side columns at once.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            for (std::size_t j = 0; j < rhs.cols(); ++j) x(i, j) -= lik * x(k, j);
        }
        const double inv = 1.0 / l(i, i);
        for (std::size_t j = 0; j < rhs.cols(); ++j) x(i, j) *= inv;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = l(k, ii);
            for (std::size_t j = 0; j < rhs.cols(); ++j) x(ii, j) -= lki * x(k, j);
        }
        const double inv = 1.0 / l(ii, ii);
        for (std::size_t j = 0; j < rhs.cols(); ++j) x(ii, j) *= inv;
    }
    return x;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x * x;
    return std::sqrt(acc);
}

double frobenius_norm(const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double trace(const Matrix& m) {
    double acc = 0.0;
    const std::size_t n = m.rows() < m.cols() ? m.rows() : m.cols();
    for (std::size_t i = 0; i < n; ++i) acc += m(i, i);
    return acc;
}

Matrix add_scaled(const Matrix& a, const Matrix& b, double alpha) {
    if (!a.same_shape(b)) {
        fail("add_scaled: shapes differ, ", a.rows(), "x", a.cols(), " vs ",
             b.rows(), "x", b.cols());
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += alpha * b.data()[i];
    return c;
}

void scale_in_place(Matrix& m, double alpha) {
    for (double& x : m.data()) x *= alpha;
}

} // namespace parnn
