#pragma once

#include <complex>
#include <random>
#include <utility>
#include <vector>

#include "tnmetro/errors.hpp"

namespace tnmetro {

using cplx = std::complex<double>;

/// Dense complex tensor with row-major element order. The element at
/// multi-index (i0, i1, ..., ik) lives at flat offset
/// ((i0 * n1 + i1) * n2 + i2) * ... — the convention shared by every module.
/// Rank 0 is permitted and holds a single scalar.
class Tensor {
public:
    Tensor() : shape_(), data_(1, cplx(0.0, 0.0)) {}
    explicit Tensor(std::vector<long> shape);
    static Tensor scalar(cplx value);
    static Tensor from_data(std::vector<long> shape, std::vector<cplx> data);
    static Tensor random(const std::vector<long>& shape, std::mt19937_64& rng, double scale = 1.0);

    long rank() const { return static_cast<long>(shape_.size()); }
    const std::vector<long>& shape() const { return shape_; }
    long extent(long axis) const;
    long size() const { return static_cast<long>(data_.size()); }
    std::vector<long> strides() const;

    cplx* data() { return data_.data(); }
    const cplx* data() const { return data_.data(); }
    cplx& operator[](long flat) { return data_[static_cast<size_t>(flat)]; }
    const cplx& operator[](long flat) const { return data_[static_cast<size_t>(flat)]; }

    template <class... Ix>
    cplx& operator()(Ix... ix) {
        return data_[flat_index({static_cast<long>(ix)...})];
    }
    template <class... Ix>
    const cplx& operator()(Ix... ix) const {
        return data_[flat_index({static_cast<long>(ix)...})];
    }
    size_t flat_index(std::initializer_list<long> idx) const;

    Tensor reshape(std::vector<long> new_shape) const;
    Tensor transpose(const std::vector<long>& perm) const;
    Tensor conjugate() const;
    cplx to_scalar() const;

    double norm() const;
    double max_abs() const;

    Tensor& operator*=(cplx factor);
    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    friend Tensor operator*(cplx factor, Tensor t) { t *= factor; return t; }
    friend Tensor operator*(Tensor t, cplx factor) { t *= factor; return t; }
    friend Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
    friend Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }

private:
    std::vector<long> shape_;
    std::vector<cplx> data_;
};

struct SvdResult {
    Tensor u;                 // left isometry, shape [left axes..., rank]
    std::vector<double> s;    // singular values, descending, >= 0
    Tensor vh;                // right isometry, shape [rank, right axes...]
    double discarded_weight;  // sum of squared dropped singular values
};

/// Pairwise tensor contraction. `pairs` lists (axis of a, axis of b) to sum
/// over; uncontracted axes of `a` precede those of `b` in the result, each
/// group keeping its original order.
Tensor contract(const Tensor& a, const Tensor& b, const std::vector<std::pair<long, long>>& pairs);

/// SVD factorization t = u * diag(s) * vh with the axes in `left_axes`
/// grouped as rows. Singular values below cutoff * s[0] are dropped, as is
/// anything beyond max_rank (max_rank <= 0 means unbounded).
SvdResult svd_split(const Tensor& t, const std::vector<long>& left_axes, long max_rank = 0,
                    double cutoff = 1e-14);

/// argmax_x 2 Re(b^dag x) - x^dag a x for Hermitian PSD a, computed as the
/// pseudo-solution of a x = b. Eigenvalues below max(regularization,
/// 1e-10 * lambda_max) are treated as absent.
Tensor solve_hermitian(const Tensor& a, const Tensor& b, double regularization = 0.0);

/// Largest eigenpair of a x = lambda b x (b defaults to the identity).
/// The eigenvector is normalized to x^dag b x = 1 with a deterministic phase.
std::pair<double, Tensor> eig_max(const Tensor& a, const Tensor* b = nullptr);

// Matrix helpers shared by the channel and oracle modules. All operate on
// rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor kron(const Tensor& a, const Tensor& b);
Tensor identity_matrix(long n);
cplx matrix_trace(const Tensor& a);
Tensor adjoint_matrix(const Tensor& a);
bool is_hermitian(const Tensor& a, double tol);
Tensor hermitian_part(const Tensor& a);
/// V exp(prefactor * lambda) V^dag for Hermitian a = V diag(lambda) V^dag.
Tensor expm_hermitian(const Tensor& a, cplx prefactor);

} // namespace tnmetro
