#pragma once

// Dense tensors over a runtime dimension n (the manifold dimension 2m).
// Storage is row-major [i][j][k]..., no symmetry compression.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace qklab {

template <std::size_t Rank>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(int n) : n_(n), data_(size_for(n), 0.0) {}

    int dim() const { return n_; }
    std::size_t size() const { return data_.size(); }

    template <class... I>
        requires(sizeof...(I) == Rank)
    double& operator()(I... idx) {
        return data_[offset(static_cast<std::size_t>(idx)...)];
    }

    template <class... I>
        requires(sizeof...(I) == Rank)
    double operator()(I... idx) const {
        return data_[offset(static_cast<std::size_t>(idx)...)];
    }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    double inf_norm() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    Tensor& operator+=(const Tensor& o) {
        assert(o.n_ == n_);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        assert(o.n_ == n_);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }

private:
    static std::size_t size_for(int n) {
        std::size_t s = 1;
        for (std::size_t r = 0; r < Rank; ++r) s *= static_cast<std::size_t>(n);
        return s;
    }

    template <class... I>
    std::size_t offset(I... idx) const {
        std::size_t off = 0;
        ((assert(idx < static_cast<std::size_t>(n_)), off = off * static_cast<std::size_t>(n_) + idx), ...);
        return off;
    }

    int n_ = 0;
    std::vector<double> data_;
};

using Vector = Tensor<1>;
using Matrix = Tensor<2>;
using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;
using Tensor5 = Tensor<5>;

template <std::size_t Rank>
double max_abs_diff(const Tensor<Rank>& a, const Tensor<Rank>& b) {
    assert(a.dim() == b.dim());
    double m = 0.0;
    auto fa = a.flat();
    auto fb = b.flat();
    for (std::size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

inline Vector make_vector(std::span<const double> v) {
    Vector out(static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), out.flat().begin());
    return out;
}

inline Matrix identity_matrix(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    const int n = a.dim();
    Matrix c(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    const int n = a.dim();
    Matrix t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = a(j, i);
    return t;
}

/// (A v)^i = sum_j A(i,j) v^j
inline Vector apply(const Matrix& a, const Vector& v) {
    const int n = a.dim();
    Vector out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i) += a(i, j) * v(j);
    return out;
}

/// Bilinear form b(u, v) = u^i b_ij v^j.
inline double bilinear(const Matrix& b, const Vector& u, const Vector& v) {
    const int n = b.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += u(i) * b(i, j) * v(j);
    return s;
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
/// Returns false when a pivot underflows `singular_tol`.
inline bool invert(const Matrix& a, Matrix& inv, double singular_tol = 1e-300) {
    const int n = a.dim();
    Matrix w = a;
    inv = identity_matrix(n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(w(r, col)) > std::abs(w(piv, col))) piv = r;
        if (std::abs(w(piv, col)) <= singular_tol) return false;
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(w(piv, j), w(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        const double d = w(col, col);
        for (int j = 0; j < n; ++j) {
            w(col, j) /= d;
            inv(col, j) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = w(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                w(r, j) -= f * w(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return true;
}

}  // namespace qklab
