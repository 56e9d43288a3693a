#pragma once

#include <cstddef>
#include <vector>

namespace nlsq::numkit {

using Vector = std::vector<double>;

// Dense row-major matrix. Small problems only; no sparse storage anywhere in
// this library (rank-L sketches live as vectors + permutations in optim).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    static Matrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

// Element-wise kernels. Binary ops require equal lengths; violations throw
// DimensionError. Inputs are never modified.
Vector ewise_mul(const Vector& a, const Vector& b);
// Denominator entries must satisfy |b_i| >= floor, else DegenerateInputError.
Vector ewise_div(const Vector& a, const Vector& b, double floor);
// Operands must be >= 0, else DegenerateInputError.
Vector ewise_sqrt(const Vector& a);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm_inf(const Vector& a);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(double c, const Vector& a);
void axpy_inplace(Vector& y, double c, const Vector& x); // y += c*x

bool all_finite(const Vector& a);

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);        // A x
Vector matvec_t(const Matrix& a, const Vector& x);      // A^T x

// Solves A x = b by Gaussian elimination with partial pivoting. A must be
// square and b conforming. A pivot below 1e-14 in magnitude throws
// SingularMatrixError.
Vector dense_solve(const Matrix& a, const Vector& b);

} // namespace nlsq::numkit
