#include "nlsq/numkit.hpp"

#include <cmath>
#include <string>

#include "nlsq/errors.hpp"

namespace nlsq::numkit {
namespace {

void require_same_length(const Vector& a, const Vector& b, const char* op) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(op) + ": length mismatch (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

} // namespace

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector ewise_mul(const Vector& a, const Vector& b) {
    require_same_length(a, b, "ewise_mul");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Vector ewise_div(const Vector& a, const Vector& b, double floor) {
    require_same_length(a, b, "ewise_div");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(b[i]) < floor) {
            throw DegenerateInputError("ewise_div: denominator entry " + std::to_string(i) +
                                       " below floor");
        }
        out[i] = a[i] / b[i];
    }
    return out;
}

Vector ewise_sqrt(const Vector& a) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0.0) {
            throw DegenerateInputError("ewise_sqrt: negative operand at entry " +
                                       std::to_string(i));
        }
        out[i] = std::sqrt(a[i]);
    }
    return out;
}

double dot(const Vector& a, const Vector& b) {
    require_same_length(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

Vector add(const Vector& a, const Vector& b) {
    require_same_length(a, b, "add");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vector sub(const Vector& a, const Vector& b) {
    require_same_length(a, b, "sub");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vector scale(double c, const Vector& a) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
    return out;
}

void axpy_inplace(Vector& y, double c, const Vector& x) {
    require_same_length(y, x, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

bool all_finite(const Vector& a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw DimensionError("matvec: dimension mismatch");
    Vector out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        out[i] = s;
    }
    return out;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
    if (a.rows() != x.size()) throw DimensionError("matvec_t: dimension mismatch");
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * xi;
    }
    return out;
}

Vector dense_solve(const Matrix& a, const Vector& b) {
    constexpr double kPivotFloor = 1e-14;
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("dense_solve: matrix not square");
    if (b.size() != n) throw DimensionError("dense_solve: rhs length mismatch");

    Matrix m = a;
    Vector x = b;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(m(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double cand = std::abs(m(r, col));
            if (cand > best) {
                best = cand;
                pivot = r;
            }
        }
        if (best < kPivotFloor) {
            throw SingularMatrixError("dense_solve: pivot below 1e-14 at column " +
                                      std::to_string(col));
        }
        if (pivot != col) {
            for (std::size_t j = col; j < n; ++j) std::swap(m(col, j), m(pivot, j));
            std::swap(x[col], x[pivot]);
        }
        const double inv = 1.0 / m(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = m(r, col) * inv;
            if (factor == 0.0) continue;
            m(r, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) m(r, j) -= factor * m(col, j);
            x[r] -= factor * x[col];
        }
    }

    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
        x[i] = s / m(i, i);
    }
    return x;
}

} // namespace nlsq::numkit
