#pragma once

#include <random>
#include <vector>

#include "tnmetro/tensor.hpp"

namespace tnmetro {

enum class BoundaryCondition { OBC, PBC };

inline long default_dense_cap() { return 1L << 14; }

/// Matrix product state. OBC keeps a heterogeneous per-site sequence of
/// rank-3 tensors with axes (left-virtual, right-virtual, physical) and
/// unit boundary bonds. PBC keeps one homogeneous rank-4 block with axes
/// (left-virtual, right-virtual, physical, site) and uniform bond dimension.
class Mps {
public:
    static Mps from_sites(BoundaryCondition bc, std::vector<Tensor> sites);
    static Mps from_block(Tensor block);

    BoundaryCondition bc() const { return bc_; }
    long n_sites() const { return n_; }
    long phys_dim() const { return d_; }

    Tensor site(long n) const;
    void set_site(long n, const Tensor& t);
    const Tensor& block() const;

    /// Virtual extents along the chain: N+1 entries for OBC (first and last
    /// are 1), N entries for PBC (entry n is the bond left of site n).
    std::vector<long> bond_dims() const;
    long max_bond() const;

private:
    BoundaryCondition bc_ = BoundaryCondition::OBC;
    long n_ = 0;
    long d_ = 0;
    std::vector<Tensor> sites_;  // OBC storage
    Tensor block_;               // PBC storage [D, D, d, N]
};

/// Matrix product operator; site tensors have axes
/// (left-virtual, right-virtual, physical-out, physical-in).
class Mpo {
public:
    static Mpo from_sites(BoundaryCondition bc, std::vector<Tensor> sites);
    static Mpo from_block(Tensor block);

    BoundaryCondition bc() const { return bc_; }
    long n_sites() const { return n_; }
    long phys_dim_out() const { return d_out_; }
    long phys_dim_in() const { return d_in_; }

    Tensor site(long n) const;
    void set_site(long n, const Tensor& t);
    const Tensor& block() const;

    std::vector<long> bond_dims() const;
    long max_bond() const;

private:
    BoundaryCondition bc_ = BoundaryCondition::OBC;
    long n_ = 0;
    long d_out_ = 0;
    long d_in_ = 0;
    std::vector<Tensor> sites_;
    Tensor block_;  // PBC storage [D, D, d_out, d_in, N]
};

// ---- constructors and state operations ----

/// Bond-1 product state |local>^(x)N with the local vector taken as given.
Mps product_mps(const std::vector<cplx>& local_state, long n_sites, BoundaryCondition bc);

cplx overlap(const Mps& bra, const Mps& ket);

Mps apply_mpo(const Mpo& op, const Mps& psi);

cplx expectation(const Mps& psi, const Mpo& op);

/// Gauge the chain so sites left of `center` are left-isometries and sites
/// right of it are right-isometries. OBC only.
Mps canonicalize(const Mps& psi, long center);

/// Pad every virtual extent up to new_dim (OBC links are capped by the exact
/// Schmidt-rank ceiling), embedding the original tensors in the top-left
/// block and filling the padding with uniform noise of magnitude
/// noise_scale * max|element|.
Mps grow_bond(const Mps& x, long new_dim, double noise_scale, std::mt19937_64& rng);
Mpo grow_bond(const Mpo& x, long new_dim, double noise_scale, std::mt19937_64& rng);

/// Full coefficient vector (MPS, length d^N) or matrix (MPO, d_out^N x d_in^N).
Tensor to_dense(const Mps& x, long cap = default_dense_cap());
Tensor to_dense(const Mpo& x, long cap = default_dense_cap());

// ---- operator algebra ----

Mpo identity_mpo(long n_sites, long d, BoundaryCondition bc);

/// Operator product a * b (a applied after b); bond dimensions multiply.
Mpo mpo_product(const Mpo& a, const Mpo& b);

/// coeffs[0] * terms[0] + coeffs[1] * terms[1] + ...; bonds add.
Mpo mpo_sum(const std::vector<Mpo>& terms, const std::vector<cplx>& coeffs);

Mpo mpo_adjoint(const Mpo& a);

Mpo scale_mpo(const Mpo& a, cplx factor);

/// |psi><psi| as an MPO with bond D^2.
Mpo outer_mpo(const Mps& psi);

cplx mpo_trace(const Mpo& a);

/// Row-major vectorization: the MPO site (a,b,j,k) becomes the MPS site
/// (a,b,j*d_in+k), so an operator X maps to |X>> with <<A|B>> = Tr(A^dag B).
Mps mpo_to_vec_mps(const Mpo& a);
Mpo vec_mps_to_mpo(const Mps& v, long d_out, long d_in);

/// Exact chain factorizations of dense inputs (OBC), via successive SVDs.
Mps mps_from_dense(const Tensor& amplitudes, long n_sites, long d, double cutoff = 1e-14);
Mpo mpo_from_dense(const Tensor& matrix, long n_sites, long d, double cutoff = 1e-14);

} // namespace tnmetro
