#ifndef PARNN_MATRIX_HPP
#define PARNN_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace parnn {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Row-major layout is the single
/// storage convention used everywhere, including serialization.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const Vector& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard product a*b. Shapes must agree.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Transposed variants, so callers never materialize a transpose:
/// matmul_tn(a, b) = a^T * b, matmul_nt(a, b) = a * b^T.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Solves s*X = rhs for symmetric positive definite s via Cholesky.
/// Throws on a non-positive pivot, naming the pivot index.
Matrix cholesky_solve(const Matrix& s, const Matrix& rhs);

double frobenius_norm(const Matrix& m);
double frobenius_norm(const Vector& v);

double trace(const Matrix& m);

/// a + alpha*b, elementwise.
Matrix add_scaled(const Matrix& a, const Matrix& b, double alpha);

void scale_in_place(Matrix& m, double alpha);

} // namespace parnn

#endif
