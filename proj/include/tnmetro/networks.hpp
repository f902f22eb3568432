#pragma once

#include <vector>

#include "tnmetro/mps.hpp"

namespace tnmetro {

/// Partial trace over two equal-extent axes of one tensor.
Tensor trace_pair(const Tensor& t, long ax1, long ax2);

/// Site tensors of a chain in effective-OBC form. OBC chains pass through;
/// PBC chains get the seam folded into the virtual bonds (interior bond
/// becomes seam * bond), which preserves every ring value below.
std::vector<Tensor> chain_from_mpo(const Mpo& o);
std::vector<Tensor> ket_chain_from_mps(const Mps& p);  // [a, b, phys, 1]
std::vector<Tensor> bra_chain_from_mps(const Mps& p);  // [a, b, 1, phys], conjugated

/// Closed one-dimensional network of stacked chains: the value is
/// Tr(C_0 C_1 ... C_{k-1}), realized by wiring in(C_i) to out(C_{i+1 mod k}).
/// Every chain is a list of rank-4 site tensors (left, right, out, in) with
/// unit boundary bonds. Left/right environment stacks support DMRG-style
/// sweeps: `hole` exposes the derivative of the value with respect to one
/// site tensor.
class RingNetwork {
public:
    explicit RingNetwork(std::vector<std::vector<Tensor>> chains);

    long n_sites() const { return n_; }
    long n_chains() const { return k_; }
    const Tensor& chain_site(long c, long site) const { return chains_[static_cast<size_t>(c)][static_cast<size_t>(site)]; }

    /// Rebuild both environment stacks from the current chain tensors.
    void prepare();

    /// H with value = sum over indices of H .* S where S is the site tensor
    /// of chain c at `site` in its own (a, b, out, in) layout.
    Tensor hole(long site, long c) const;

    void set_site(long site, long c, const Tensor& t);
    void absorb_left(long site);   // refresh E_left[site+1] from E_left[site]
    void absorb_right(long site);  // refresh E_right[site-1] ... E stored as env of sites >= index

    cplx value() const;

    /// Total complex elements currently held by the two environment stacks.
    long env_elements() const;

private:
    Tensor absorb(const Tensor& env, long site, bool from_left) const;

    long n_ = 0;
    long k_ = 0;
    std::vector<std::vector<Tensor>> chains_;
    std::vector<Tensor> eleft_;   // eleft_[s]  = env of sites < s, s in [0, n]
    std::vector<Tensor> eright_;  // eright_[s] = env of sites > s-1 (i.e. >= s), s in [0, n]
};

/// Tr(C_0 C_1 ... C_{k-1}) for MPO chains sharing N and boundary.
cplx ring_trace(const std::vector<const Mpo*>& chains);

/// Transfer matrix of one uniform column: rows are the fused left bonds,
/// columns the fused right bonds, physical wires closed in ring order.
Tensor column_transfer(const std::vector<Tensor>& site_tensors);

/// (T/s)^n computed by repeated squaring with per-step rescaling;
/// returns the mantissa matrix and log(scale) so that T^n = mantissa * exp(log_scale).
std::pair<Tensor, double> scaled_matrix_power(const Tensor& t, long n);

} // namespace tnmetro
