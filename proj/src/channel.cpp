#include "tnmetro/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tnmetro/networks.hpp"

namespace tnmetro {

namespace {

Tensor aux_generator(const Tensor& h) {
    const long d = h.extent(0);
    return kron(h, identity_matrix(d)) - kron(identity_matrix(d), h.conjugate());
}

void require_hermitian_generator(const Tensor& h) {
    if (h.rank() != 2 || h.extent(0) != h.extent(1)) throw ValidationError("generator h must be a square matrix");
    if (!is_hermitian(h, 1e-12)) throw ValidationError("generator h is not Hermitian within 1e-12");
}

Tensor vec_identity(long d, long arity) {
    long dim = 1;
    for (long i = 0; i < arity; ++i) dim *= d * d;
    Tensor v({dim});
    // per-site (j,k) pairs: entry 1 where j == k at every site
    std::vector<long> digits(static_cast<size_t>(arity), 0);
    for (long idx = 0; idx < dim; ++idx) {
        long rem = idx;
        bool diag = true;
        for (long s = arity - 1; s >= 0; --s) {
            long pair = rem % (d * d);
            rem /= d * d;
            if (pair % d != pair / d) diag = false;
        }
        if (diag) v[idx] = 1.0;
    }
    return v;
}

// Sequential SVD factors of an arity-s superoperator: rank-4 tensors
// [alpha_{f}, alpha_{f+1}, out_f, in_f] with unit outer bonds.
std::vector<Tensor> layer_factors(const LocalSuperoperator& sop, std::vector<long>* ranks) {
    const long dd = sop.d * sop.d;
    Mpo chain = mpo_from_dense(sop.matrix, sop.arity, dd, 1e-12);
    std::vector<Tensor> factors;
    for (long f = 0; f < sop.arity; ++f) factors.push_back(chain.site(f));
    if (ranks != nullptr) {
        ranks->clear();
        for (long f = 0; f + 1 < sop.arity; ++f) ranks->push_back(factors[static_cast<size_t>(f)].extent(1));
    }
    return factors;
}

void check_self_commuting(const LocalSuperoperator& sop) {
    if (sop.arity < 2) return;
    const long dd = sop.d * sop.d;
    long pad = 1;
    for (long i = 0; i + 1 < sop.arity; ++i) pad *= dd;
    Tensor a = kron(sop.matrix, identity_matrix(pad));
    Tensor b = kron(identity_matrix(pad), sop.matrix);
    Tensor comm = matmul(a, b) - matmul(b, a);
    const double scale = std::max(1.0, a.max_abs() * b.max_abs());
    if (comm.max_abs() > 1e-9 * scale) {
        throw ValidationError("layer '" + sop.label + "' does not commute with its own translate; overlapping bricks need a defined order");
    }
}

} // namespace

double default_fd_step() { return 1e-4 * 2.0 * std::numbers::pi; }

LocalSuperoperator kraus_to_superoperator(const std::vector<Tensor>& kraus, long arity) {
    if (kraus.empty()) throw ValidationError("empty Kraus set");
    const long dim = kraus[0].extent(0);
    Tensor sum({dim, dim});
    for (const Tensor& k : kraus) {
        if (k.rank() != 2 || k.extent(0) != dim || k.extent(1) != dim) {
            throw DimensionError("Kraus operators must be square matrices of one size");
        }
        sum += matmul(adjoint_matrix(k), k);
    }
    Tensor residual = sum - identity_matrix(dim);
    if (residual.max_abs() > 1e-10) {
        throw ValidationError("Kraus completeness violated, residual norm " + std::to_string(residual.norm()));
    }

    long d = dim;
    if (arity > 1) {
        d = std::lround(std::pow(static_cast<double>(dim), 1.0 / static_cast<double>(arity)));
        long check = 1;
        for (long i = 0; i < arity; ++i) check *= d;
        if (check != dim) throw DimensionError("Kraus extent is not a perfect arity power");
    }

    LocalSuperoperator sop;
    sop.d = d;
    sop.arity = arity;
    sop.label = "kraus";
    Tensor m({dim * dim, dim * dim});
    for (const Tensor& k : kraus) m += kron(k, k.conjugate());
    if (arity > 1) {
        // regroup (rows..., cols...) into per-site (row, col) pairs
        std::vector<long> shape(static_cast<size_t>(4 * arity), d);
        Tensor t = m.reshape(shape);
        std::vector<long> perm;
        for (long s = 0; s < arity; ++s) {
            perm.push_back(s);
            perm.push_back(arity + s);
        }
        for (long s = 0; s < arity; ++s) {
            perm.push_back(2 * arity + s);
            perm.push_back(3 * arity + s);
        }
        m = t.transpose(perm).reshape({dim * dim, dim * dim});
    }
    sop.matrix = m;
    return sop;
}

LocalSuperoperator dephasing_superop_1site(double c1, const Tensor& h) {
    if (c1 < 0.0) throw DomainError("dephasing strength must be >= 0");
    require_hermitian_generator(h);
    Tensor aux = aux_generator(h);
    LocalSuperoperator sop;
    sop.d = h.extent(0);
    sop.arity = 1;
    sop.label = "dephasing1";
    sop.matrix = expm_hermitian(matmul(aux, aux), cplx(-c1 / 2.0, 0.0));
    return sop;
}

LocalSuperoperator dephasing_superop_2site(double c2, const Tensor& h) {
    require_hermitian_generator(h);
    Tensor aux = aux_generator(h);
    LocalSuperoperator sop;
    sop.d = h.extent(0);
    sop.arity = 2;
    sop.label = "dephasing2";
    sop.matrix = expm_hermitian(kron(aux, aux), cplx(-c2, 0.0));
    return sop;
}

LocalSuperoperator encoding_superop(const Tensor& h, double phi) {
    require_hermitian_generator(h);
    Tensor u = expm_hermitian(h, cplx(0.0, -phi));
    LocalSuperoperator sop;
    sop.d = h.extent(0);
    sop.arity = 1;
    sop.label = "encoding";
    sop.matrix = kron(u, u.conjugate());
    return sop;
}

LocalSuperoperator encoding_derivative_superop(const Tensor& h, double phi) {
    require_hermitian_generator(h);
    LocalSuperoperator enc = encoding_superop(h, phi);
    Tensor deriv = matmul(aux_generator(h), enc.matrix);
    deriv *= cplx(0.0, -1.0);
    LocalSuperoperator sop;
    sop.d = h.extent(0);
    sop.arity = 1;
    sop.label = "encoding-derivative";
    sop.matrix = deriv;
    return sop;
}

bool is_trace_preserving(const LocalSuperoperator& sop, double tol) {
    Tensor v = vec_identity(sop.d, sop.arity);
    Tensor r = contract(v, sop.matrix, {{0, 0}});  // (vec I)^T M; vec I is real
    return (r - v).max_abs() <= tol * std::max(1.0, v.max_abs());
}

Mpo layer_to_mpo(const LocalSuperoperator& sop, long n_sites, BoundaryCondition bc,
                 std::vector<long>* factor_ranks) {
    const long s = sop.arity;
    const long dd = sop.d * sop.d;
    if (s > n_sites) throw UnsupportedError("layer arity exceeds the chain length");
    if (s > 3) throw UnsupportedError("layer arity " + std::to_string(s) + " not supported (max 3)");
    if (sop.matrix.rank() != 2) throw DimensionError("superoperator must be a matrix");
    long dim = 1;
    for (long i = 0; i < s; ++i) dim *= dd;
    if (sop.matrix.extent(0) != dim || sop.matrix.extent(1) != dim) {
        throw DimensionError("superoperator matrix extent does not match d^(2 arity)");
    }
    if (s == 1) {
        Tensor site = sop.matrix.reshape({1, 1, dd, dd});
        if (factor_ranks != nullptr) factor_ranks->clear();
        return Mpo::from_sites(bc, std::vector<Tensor>(static_cast<size_t>(n_sites), site));
    }
    check_self_commuting(sop);
    std::vector<Tensor> g = layer_factors(sop, factor_ranks);

    const long pmax = (bc == BoundaryCondition::OBC) ? n_sites - s : n_sites - 1;
    auto brick_valid = [&](long p) { return bc == BoundaryCondition::PBC || (p >= 0 && p <= pmax); };

    std::vector<Tensor> sites;
    for (long m = 0; m < n_sites; ++m) {
        Tensor w = identity_matrix(dd).reshape({dd, dd});
        long nl = 0, nr = 0;  // accumulated left/right tuple axes
        for (long f = 0; f < s; ++f) {
            if (!brick_valid(m - f)) continue;
            const Tensor& gf = g[static_cast<size_t>(f)];
            // w[l..., r..., o, i] x gf[bl, br, mid, i'] over (i, mid)
            Tensor t = contract(w, gf, {{nl + nr + 1, 2}});  // [l..,r..,o,bl,br,i]
            std::vector<long> perm;
            for (long i = 0; i < nl; ++i) perm.push_back(i);
            perm.push_back(nl + nr + 1);                      // bl
            for (long i = 0; i < nr; ++i) perm.push_back(nl + i);
            perm.push_back(nl + nr + 2);                      // br
            perm.push_back(nl + nr);                          // o
            perm.push_back(nl + nr + 3);                      // i
            w = t.transpose(perm);
            ++nl;
            ++nr;
        }
        long dl = 1, dr = 1;
        for (long i = 0; i < nl; ++i) dl *= w.extent(i);
        for (long i = 0; i < nr; ++i) dr *= w.extent(nl + i);
        sites.push_back(w.reshape({dl, dr, dd, dd}));
    }
    return Mpo::from_sites(bc, std::move(sites));
}

namespace {

// Encoding layer with the product-rule derivative: block upper-triangular
// transfer [[e, e'], [0, e]] selecting exactly one derivative insertion.
Mpo derivative_encoding_mpo(const Tensor& h, double phi, long n_sites, BoundaryCondition bc) {
    const long d = h.extent(0);
    const long dd = d * d;
    Tensor e = encoding_superop(h, phi).matrix;
    Tensor ep = encoding_derivative_superop(h, phi).matrix;
    auto block_site = [&](long dl, long dr, bool fold_seam) {
        Tensor w({dl, dr, dd, dd});
        auto put = [&](long a, long b, const Tensor& op) {
            for (long j = 0; j < dd; ++j)
                for (long k = 0; k < dd; ++k) w(a, b, j, k) += op(j, k);
        };
        if (dl == 1 && dr == 2) {           // first site, open left boundary (1 0)
            put(0, 0, e);
            put(0, 1, ep);
        } else if (dl == 2 && dr == 1) {    // last site, boundary (0 1)^T
            put(0, 0, ep);
            put(1, 0, e);
        } else if (fold_seam) {             // periodic seam: B = [[0,0],[1,0]] folded in
            put(1, 0, e);
            put(1, 1, ep);
        } else {
            put(0, 0, e);
            put(0, 1, ep);
            put(1, 1, e);
        }
        return w;
    };

    std::vector<Tensor> sites;
    if (bc == BoundaryCondition::OBC) {
        if (n_sites == 1) {
            sites.push_back(ep.reshape({1, 1, dd, dd}));
        } else {
            sites.push_back(block_site(1, 2, false));
            for (long m = 1; m + 1 < n_sites; ++m) sites.push_back(block_site(2, 2, false));
            sites.push_back(block_site(2, 1, false));
        }
    } else {
        sites.push_back(block_site(2, 2, true));
        for (long m = 1; m < n_sites; ++m) sites.push_back(block_site(2, 2, false));
    }
    return Mpo::from_sites(bc, std::move(sites));
}

} // namespace

ChannelMpoPair build_channel_mpos(const ChannelSpec& spec, long n_sites, double phi,
                                  BoundaryCondition bc, DerivativeMode mode, double eps) {
    require_hermitian_generator(spec.h);
    if (spec.h.extent(0) != spec.d) throw DimensionError("generator extent does not match the local dimension");

    ChannelMpoPair out;
    out.phi = phi;
    out.mode = mode;

    auto build_lambda = [&](double at_phi, const Mpo& enc_layer) {
        std::optional<Mpo> acc;
        auto push_layer = [&](const LocalSuperoperator& sop) {
            if (sop.d != spec.d) throw DimensionError("layer local dimension does not match the channel");
            if (!is_trace_preserving(sop, 1e-10)) {
                out.warnings.push_back("layer '" + sop.label + "' is not trace preserving");
            }
            Mpo layer = layer_to_mpo(sop, n_sites, bc);
            acc = acc ? mpo_product(layer, *acc) : layer;
        };
        for (const auto& sop : spec.layers_before) push_layer(sop);
        acc = acc ? mpo_product(enc_layer, *acc) : enc_layer;
        for (const auto& sop : spec.layers_after) {
            if (sop.d != spec.d) throw DimensionError("layer local dimension does not match the channel");
            if (!is_trace_preserving(sop, 1e-10)) {
                out.warnings.push_back("layer '" + sop.label + "' is not trace preserving");
            }
            Mpo layer = layer_to_mpo(sop, n_sites, bc);
            acc = mpo_product(layer, *acc);
        }
        (void)at_phi;
        return *acc;
    };

    Mpo enc = layer_to_mpo(encoding_superop(spec.h, phi), n_sites, bc);
    out.lambda = build_lambda(phi, enc);

    if (mode == DerivativeMode::Analytic) {
        Mpo enc_dot = derivative_encoding_mpo(spec.h, phi, n_sites, bc);
        out.lambda_dot = build_lambda(phi, enc_dot);
    } else {
        out.eps = (eps > 0.0) ? eps : default_fd_step();
        Mpo enc_shift = layer_to_mpo(encoding_superop(spec.h, phi + out.eps), n_sites, bc);
        out.lambda_shifted = build_lambda(phi + out.eps, enc_shift);
    }
    std::sort(out.warnings.begin(), out.warnings.end());
    out.warnings.erase(std::unique(out.warnings.begin(), out.warnings.end()), out.warnings.end());
    return out;
}

double tp_residual(const Mpo& channel) {
    const long dd = channel.phys_dim_out();
    if (dd != channel.phys_dim_in()) throw DimensionError("trace-preservation check needs a square superoperator");
    const long d = std::lround(std::sqrt(static_cast<double>(dd)));
    if (d * d != dd) throw DimensionError("superoperator physical extent is not a squared local dimension");
    const long n = channel.n_sites();

    Tensor vi({1, 1, 1, dd});
    for (long j = 0; j < d; ++j) vi(0, 0, 0, j * d + j) = 1.0;
    Mpo bra = Mpo::from_sites(channel.bc(), std::vector<Tensor>(static_cast<size_t>(n), vi));
    Mpo ket = mpo_adjoint(bra);  // [1,1,dd,1] with the same entries
    Mpo chan_dag = mpo_adjoint(channel);

    // || <I| Phi - <I| ||^2 = <I|Phi Phi^dag|I> - 2 Re <I|Phi|I> + <I|I>
    cplx a = ring_trace({&bra, &channel, &chan_dag, &ket});
    cplx b = ring_trace({&bra, &channel, &ket});
    cplx c = ring_trace({&bra, &ket});
    double norm2 = std::max(0.0, a.real() - 2.0 * b.real() + c.real());
    return std::sqrt(norm2 / std::max(1e-300, c.real()));
}

Mpo channel_apply_to_mpo(const Mpo& channel, const Mpo& rho) {
    if (channel.phys_dim_in() != rho.phys_dim_out() * rho.phys_dim_in()) {
        throw DimensionError("channel input extent " + std::to_string(channel.phys_dim_in()) +
                             " does not match the fused physical pair " +
                             std::to_string(rho.phys_dim_out() * rho.phys_dim_in()));
    }
    Mps vec = mpo_to_vec_mps(rho);
    Mps mapped = apply_mpo(channel, vec);
    const long d = rho.phys_dim_out();
    return vec_mps_to_mpo(mapped, d, d);
}

} // namespace tnmetro
