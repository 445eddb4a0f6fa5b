#pragma once

// Minimal dense linear algebra for the form matrices: symmetric storage,
// Cholesky factorization, triangular solves and matrix-vector products.
// Sizes stay at desk scale (M up to a few thousand), so plain loops suffice.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace fhardy {

/// Dense symmetric matrix, full row-major storage.
struct SymMatrix {
    int n = 0;
    std::vector<double> a;

    SymMatrix() = default;
    explicit SymMatrix(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}

    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

namespace detail {

inline void matvec(const SymMatrix& m, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < m.n; ++i) {
        const double* row = &m.a[static_cast<std::size_t>(i) * m.n];
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

inline double quad_form(const SymMatrix& m, std::span<const double> x) {
    double s = 0.0;
    for (int i = 0; i < m.n; ++i) {
        const double* row = &m.a[static_cast<std::size_t>(i) * m.n];
        double ri = 0.0;
        for (int j = 0; j < m.n; ++j) ri += row[j] * x[j];
        s += x[i] * ri;
    }
    return s;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

/// In-place lower Cholesky factor of an SPD matrix (upper triangle ignored).
struct Cholesky {
    int n = 0;
    std::vector<double> l;  // row-major lower triangle (full square storage)

    explicit Cholesky(const SymMatrix& m) : n(m.n), l(m.a) {
        for (int j = 0; j < n; ++j) {
            double d = l[static_cast<std::size_t>(j) * n + j];
            for (int k = 0; k < j; ++k) {
                const double v = l[static_cast<std::size_t>(j) * n + k];
                d -= v * v;
            }
            if (!(d > 0.0)) throw std::runtime_error("cholesky: matrix is not positive definite");
            const double dj = std::sqrt(d);
            l[static_cast<std::size_t>(j) * n + j] = dj;
            for (int i = j + 1; i < n; ++i) {
                double s = l[static_cast<std::size_t>(i) * n + j];
                const double* ri = &l[static_cast<std::size_t>(i) * n];
                const double* rj = &l[static_cast<std::size_t>(j) * n];
                for (int k = 0; k < j; ++k) s -= ri[k] * rj[k];
                l[static_cast<std::size_t>(i) * n + j] = s / dj;
            }
        }
    }

    /// Solves A x = b via the stored factor.
    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> x(b.begin(), b.end());
        for (int i = 0; i < n; ++i) {  // forward: L y = b
            const double* ri = &l[static_cast<std::size_t>(i) * n];
            double s = x[i];
            for (int k = 0; k < i; ++k) s -= ri[k] * x[k];
            x[i] = s / ri[i];
        }
        for (int i = n - 1; i >= 0; --i) {  // backward: L^T x = y
            double s = x[i];
            for (int k = i + 1; k < n; ++k) s -= l[static_cast<std::size_t>(k) * n + i] * x[k];
            x[i] = s / l[static_cast<std::size_t>(i) * n + i];
        }
        return x;
    }
};

/// Dense LU with partial pivoting; solves one general system in place.
inline std::vector<double> lu_solve(SymMatrix a, std::vector<double> b) {
    const int n = a.n;
    std::vector<int> piv(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a.at(i, k)) > std::abs(a.at(p, k))) p = i;
        piv[k] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(a.at(k, j), a.at(p, j));
            std::swap(b[k], b[p]);
        }
        const double d = a.at(k, k);
        if (d == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        for (int i = k + 1; i < n; ++i) {
            const double f = a.at(i, k) / d;
            a.at(i, k) = f;
            if (f != 0.0)
                for (int j = k + 1; j < n; ++j) a.at(i, j) -= f * a.at(k, j);
            b[i] -= f * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a.at(i, j) * b[j];
        b[i] = s / a.at(i, i);
    }
    return b;
}

}  // namespace detail
}  // namespace fhardy
