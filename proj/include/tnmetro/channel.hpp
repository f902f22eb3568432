#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tnmetro/mps.hpp"

namespace tnmetro {

/// One translationally invariant operation layer acting on `arity`
/// neighboring sites, stored as a matrix on vectorized density matrices.
/// Vectorization is row-major per site: vec(rho)[(j,k)] = rho[j,k], so the
/// conjugation rho -> A rho B^dag has matrix A (x) conj(B), and a multi-site
/// matrix indexes the per-site (j,k) pairs in site order.
struct LocalSuperoperator {
    Tensor matrix;  // (d^(2s), d^(2s))
    long arity = 1;
    long d = 2;
    std::string label;
};

/// Layered channel: pre-layers, then the unitary encoding generated by h
/// (exactly one encoding layer), then post-layers.
struct ChannelSpec {
    long d = 2;
    std::vector<LocalSuperoperator> layers_before;
    Tensor h;  // d x d Hermitian generator
    std::vector<LocalSuperoperator> layers_after;
};

enum class DerivativeMode { Analytic, FiniteDifference };

struct ChannelMpoPair {
    Mpo lambda;
    std::optional<Mpo> lambda_dot;      // analytic mode
    std::optional<Mpo> lambda_shifted;  // finite-difference mode: channel at phi + eps
    double phi = 0.0;
    DerivativeMode mode = DerivativeMode::Analytic;
    double eps = 0.0;
    std::vector<std::string> warnings;
};

/// sum_K K (x) conj(K); requires sum K^dag K = 1 within 1e-10. Multi-site
/// Kraus blocks pass arity so the result uses per-site index pairs.
LocalSuperoperator kraus_to_superoperator(const std::vector<Tensor>& kraus, long arity = 1);

/// exp(-c1/2 * aux^2) with aux = h (x) I - I (x) conj(h); diagonal in the
/// eigenbasis of h with entries exp(-c1 (h_j - h_k)^2 / 2).
LocalSuperoperator dephasing_superop_1site(double c1, const Tensor& h);

/// exp(-c2 * aux (x) aux) on two neighboring sites.
LocalSuperoperator dephasing_superop_2site(double c2, const Tensor& h);

/// U (x) conj(U) with U = exp(-i h phi), and its phi derivative.
LocalSuperoperator encoding_superop(const Tensor& h, double phi);
LocalSuperoperator encoding_derivative_superop(const Tensor& h, double phi);

bool is_trace_preserving(const LocalSuperoperator& sop, double tol = 1e-10);

/// Tile one layer over the chain (bricks over every run of `arity`
/// neighboring sites; OBC drops wrap-around bricks, PBC keeps them). The
/// layer is factored by successive SVDs; overlapping bricks must commute.
/// factor_ranks, when given, receives the bond dimensions of the factors.
Mpo layer_to_mpo(const LocalSuperoperator& sop, long n_sites, BoundaryCondition bc,
                 std::vector<long>* factor_ranks = nullptr);

/// Full channel superoperator MPOs: lambda = (post) o (encoding) o (pre),
/// and either the analytic derivative (bond doubled by the product rule) or
/// the channel at phi + eps. eps < 0 selects the default step.
ChannelMpoPair build_channel_mpos(const ChannelSpec& spec, long n_sites, double phi,
                                  BoundaryCondition bc, DerivativeMode mode, double eps = -1.0);

/// Lambda[rho] in MPO form: vectorize rho, apply the superoperator chain,
/// unvectorize. Bond dimensions multiply.
Mpo channel_apply_to_mpo(const Mpo& channel, const Mpo& rho);

double default_fd_step();

/// Relative norm of <<I| Phi - <<I|, evaluated by transfer contraction
/// (O(N) cost, no dense conversion).
double tp_residual(const Mpo& channel);

} // namespace tnmetro
