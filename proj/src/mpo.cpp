#include "tnmetro/mps.hpp"

#include <algorithm>

namespace tnmetro {

namespace {

void copy_block_site(const Tensor& block, long n, long n_total, Tensor& out) {
    const long chunk = out.size();
    const cplx* src = block.data();
    for (long i = 0; i < chunk; ++i) out[i] = src[i * n_total + n];
}

void write_block_site(Tensor& block, long n, long n_total, const Tensor& t) {
    cplx* dst = block.data();
    for (long i = 0; i < t.size(); ++i) dst[i * n_total + n] = t[i];
}

} // namespace

Mpo Mpo::from_sites(BoundaryCondition bc, std::vector<Tensor> sites) {
    if (sites.empty()) throw DomainError("MPO needs at least one site");
    Mpo m;
    m.bc_ = bc;
    m.n_ = static_cast<long>(sites.size());
    for (const Tensor& t : sites) {
        if (t.rank() != 4) throw DimensionError("MPO site tensors must have rank 4");
    }
    m.d_out_ = sites[0].extent(2);
    m.d_in_ = sites[0].extent(3);
    for (const Tensor& t : sites) {
        if (t.extent(2) != m.d_out_ || t.extent(3) != m.d_in_) throw DimensionError("inconsistent physical dimensions");
    }
    if (bc == BoundaryCondition::OBC) {
        if (sites[0].extent(0) != 1 || sites.back().extent(1) != 1) {
            throw DimensionError("OBC chain must start and end with bond dimension 1");
        }
        for (long n = 0; n + 1 < m.n_; ++n) {
            if (sites[static_cast<size_t>(n)].extent(1) != sites[static_cast<size_t>(n + 1)].extent(0)) {
                throw DimensionError("bond mismatch between sites " + std::to_string(n) + " and " + std::to_string(n + 1));
            }
        }
        m.sites_ = std::move(sites);
    } else {
        const long dim = sites[0].extent(0);
        for (const Tensor& t : sites) {
            if (t.extent(0) != dim || t.extent(1) != dim) throw DimensionError("PBC chain requires one uniform bond dimension");
        }
        Tensor block({dim, dim, m.d_out_, m.d_in_, m.n_});
        for (long n = 0; n < m.n_; ++n) write_block_site(block, n, m.n_, sites[static_cast<size_t>(n)]);
        m.block_ = block;
    }
    return m;
}

Mpo Mpo::from_block(Tensor block) {
    if (block.rank() != 5) throw DimensionError("PBC MPO block must have rank 5 (left, right, out, in, site)");
    if (block.extent(0) != block.extent(1)) throw DimensionError("PBC block must have equal virtual extents");
    Mpo m;
    m.bc_ = BoundaryCondition::PBC;
    m.n_ = block.extent(4);
    m.d_out_ = block.extent(2);
    m.d_in_ = block.extent(3);
    m.block_ = std::move(block);
    return m;
}

Tensor Mpo::site(long n) const {
    if (n < 0 || n >= n_) throw DomainError("site index out of range");
    if (bc_ == BoundaryCondition::OBC) return sites_[static_cast<size_t>(n)];
    Tensor out({block_.extent(0), block_.extent(1), d_out_, d_in_});
    copy_block_site(block_, n, n_, out);
    return out;
}

void Mpo::set_site(long n, const Tensor& t) {
    if (n < 0 || n >= n_) throw DomainError("site index out of range");
    if (t.rank() != 4) throw DimensionError("MPO site tensors must have rank 4");
    if (bc_ == BoundaryCondition::OBC) {
        if (t.extent(2) != d_out_ || t.extent(3) != d_in_) throw DimensionError("physical dimension mismatch");
        if (n > 0 && sites_[static_cast<size_t>(n - 1)].extent(1) != t.extent(0)) {
            throw DimensionError("left bond mismatch in set_site");
        }
        if (n + 1 < n_ && sites_[static_cast<size_t>(n + 1)].extent(0) != t.extent(1)) {
            throw DimensionError("right bond mismatch in set_site");
        }
        sites_[static_cast<size_t>(n)] = t;
    } else {
        if (t.extent(0) != block_.extent(0) || t.extent(1) != block_.extent(1) || t.extent(2) != d_out_ ||
            t.extent(3) != d_in_) {
            throw DimensionError("PBC site update must preserve the uniform block shape");
        }
        write_block_site(block_, n, n_, t);
    }
}

const Tensor& Mpo::block() const {
    if (bc_ != BoundaryCondition::PBC) throw UnsupportedError("block storage exists only for PBC");
    return block_;
}

std::vector<long> Mpo::bond_dims() const {
    std::vector<long> b;
    if (bc_ == BoundaryCondition::OBC) {
        b.push_back(1);
        for (const Tensor& t : sites_) b.push_back(t.extent(1));
    } else {
        b.assign(static_cast<size_t>(n_), block_.extent(0));
    }
    return b;
}

long Mpo::max_bond() const {
    long m = 1;
    for (long b : bond_dims()) m = std::max(m, b);
    return m;
}

Mpo identity_mpo(long n_sites, long d, BoundaryCondition bc) {
    Tensor site({1, 1, d, d});
    for (long j = 0; j < d; ++j) site(0, 0, j, j) = 1.0;
    std::vector<Tensor> sites(static_cast<size_t>(n_sites), site);
    return Mpo::from_sites(bc, std::move(sites));
}

Mpo mpo_product(const Mpo& a, const Mpo& b) {
    if (a.phys_dim_in() != b.phys_dim_out()) {
        throw DimensionError("mpo_product: inner physical dimensions do not match");
    }
    if (a.n_sites() != b.n_sites() || a.bc() != b.bc()) {
        throw DimensionError("mpo_product requires matching site count and boundary");
    }
    std::vector<Tensor> sites;
    for (long m = 0; m < a.n_sites(); ++m) {
        Tensor wa = a.site(m);
        Tensor wb = b.site(m);
        Tensor t = contract(wa, wb, {{3, 2}});      // [aA,bA,j,aB,bB,k]
        t = t.transpose({0, 3, 1, 4, 2, 5});        // [aA,aB,bA,bB,j,k]
        sites.push_back(t.reshape({wa.extent(0) * wb.extent(0), wa.extent(1) * wb.extent(1),
                                   a.phys_dim_out(), b.phys_dim_in()}));
    }
    return Mpo::from_sites(a.bc(), std::move(sites));
}

Mpo mpo_sum(const std::vector<Mpo>& terms, const std::vector<cplx>& coeffs) {
    if (terms.empty() || terms.size() != coeffs.size()) throw DomainError("mpo_sum needs matching terms and coefficients");
    const long n = terms[0].n_sites();
    const long dj = terms[0].phys_dim_out(), dk = terms[0].phys_dim_in();
    const BoundaryCondition bc = terms[0].bc();
    for (const Mpo& t : terms) {
        if (t.n_sites() != n || t.phys_dim_out() != dj || t.phys_dim_in() != dk || t.bc() != bc) {
            throw DimensionError("mpo_sum requires structurally identical terms");
        }
    }
    if (terms.size() == 1) return scale_mpo(terms[0], coeffs[0]);

    if (bc == BoundaryCondition::OBC && n == 1) {
        Tensor acc({1, 1, dj, dk});
        for (size_t t = 0; t < terms.size(); ++t) {
            Tensor s = terms[t].site(0);
            s *= coeffs[t];
            acc += s;
        }
        return Mpo::from_sites(bc, {acc});
    }

    std::vector<Tensor> sites;
    for (long m = 0; m < n; ++m) {
        long dl = 0, dr = 0;
        std::vector<Tensor> blocks;
        for (const Mpo& t : terms) blocks.push_back(t.site(m));
        const bool first = (bc == BoundaryCondition::OBC && m == 0);
        const bool last = (bc == BoundaryCondition::OBC && m == n - 1);
        for (const Tensor& blk : blocks) {
            dl += blk.extent(0);
            dr += blk.extent(1);
        }
        if (first) dl = 1;
        if (last) dr = 1;
        Tensor site({dl, dr, dj, dk});
        long offl = 0, offr = 0;
        for (size_t t = 0; t < blocks.size(); ++t) {
            const Tensor& blk = blocks[t];
            const cplx w = (m == 0) ? coeffs[t] : cplx(1.0, 0.0);
            for (long a = 0; a < blk.extent(0); ++a)
                for (long b = 0; b < blk.extent(1); ++b)
                    for (long j = 0; j < dj; ++j)
                        for (long k = 0; k < dk; ++k)
                            site(first ? 0 : offl + a, last ? 0 : offr + b, j, k) += w * blk(a, b, j, k);
            offl += blk.extent(0);
            offr += blk.extent(1);
        }
        sites.push_back(site);
    }
    return Mpo::from_sites(bc, std::move(sites));
}

Mpo mpo_adjoint(const Mpo& a) {
    std::vector<Tensor> sites;
    for (long m = 0; m < a.n_sites(); ++m) {
        sites.push_back(a.site(m).transpose({0, 1, 3, 2}).conjugate());
    }
    return Mpo::from_sites(a.bc(), std::move(sites));
}

Mpo scale_mpo(const Mpo& a, cplx factor) {
    std::vector<Tensor> sites;
    for (long m = 0; m < a.n_sites(); ++m) {
        Tensor s = a.site(m);
        if (m == 0) s *= factor;
        sites.push_back(s);
    }
    return Mpo::from_sites(a.bc(), std::move(sites));
}

Mpo outer_mpo(const Mps& psi) {
    std::vector<Tensor> sites;
    for (long m = 0; m < psi.n_sites(); ++m) {
        Tensor p = psi.site(m);
        Tensor t = contract(p, p.conjugate(), {});  // [a,b,j,a',b',k]
        t = t.transpose({0, 3, 1, 4, 2, 5});        // [a,a',b,b',j,k]
        sites.push_back(t.reshape({p.extent(0) * p.extent(0), p.extent(1) * p.extent(1),
                                   psi.phys_dim(), psi.phys_dim()}));
    }
    return Mpo::from_sites(psi.bc(), std::move(sites));
}

cplx mpo_trace(const Mpo& a) {
    if (a.phys_dim_out() != a.phys_dim_in()) throw DimensionError("trace of a non-square operator");
    const long n = a.n_sites();
    Tensor acc;
    for (long m = 0; m < n; ++m) {
        Tensor w = a.site(m);
        Tensor t({w.extent(0), w.extent(1)});
        for (long x = 0; x < w.extent(0); ++x)
            for (long y = 0; y < w.extent(1); ++y) {
                cplx v = 0.0;
                for (long j = 0; j < a.phys_dim_out(); ++j) v += w(x, y, j, j);
                t(x, y) = v;
            }
        acc = (m == 0) ? t : matmul(acc, t);
    }
    if (a.bc() == BoundaryCondition::OBC) return acc.to_scalar();
    return matrix_trace(acc);
}

Mps mpo_to_vec_mps(const Mpo& a) {
    std::vector<Tensor> sites;
    for (long m = 0; m < a.n_sites(); ++m) {
        Tensor w = a.site(m);
        sites.push_back(w.reshape({w.extent(0), w.extent(1), a.phys_dim_out() * a.phys_dim_in()}));
    }
    return Mps::from_sites(a.bc(), std::move(sites));
}

Mpo vec_mps_to_mpo(const Mps& v, long d_out, long d_in) {
    if (v.phys_dim() != d_out * d_in) throw DimensionError("vectorized physical dimension does not factor as requested");
    std::vector<Tensor> sites;
    for (long m = 0; m < v.n_sites(); ++m) {
        Tensor w = v.site(m);
        sites.push_back(w.reshape({w.extent(0), w.extent(1), d_out, d_in}));
    }
    return Mpo::from_sites(v.bc(), std::move(sites));
}

Mps mps_from_dense(const Tensor& amplitudes, long n_sites, long d, double cutoff) {
    long expect = 1;
    for (long i = 0; i < n_sites; ++i) expect *= d;
    if (amplitudes.size() != expect) throw DimensionError("amplitude count does not equal d^N");
    std::vector<Tensor> sites;
    Tensor rem = amplitudes.reshape({1, expect});
    long rest = expect;
    for (long m = 0; m + 1 < n_sites; ++m) {
        rest /= d;
        Tensor t = rem.reshape({rem.extent(0), d, rest});
        SvdResult svd = svd_split(t, {0, 1}, 0, cutoff);
        sites.push_back(svd.u.transpose({0, 2, 1}));  // [Dl, r, d]
        Tensor sv = svd.vh;
        for (long r = 0; r < static_cast<long>(svd.s.size()); ++r) {
            for (long c = 0; c < sv.extent(1); ++c) sv(r, c) *= svd.s[static_cast<size_t>(r)];
        }
        rem = sv;
    }
    sites.push_back(rem.reshape({rem.extent(0), d, 1}).transpose({0, 2, 1}));
    return Mps::from_sites(BoundaryCondition::OBC, std::move(sites));
}

Mpo mpo_from_dense(const Tensor& matrix, long n_sites, long d, double cutoff) {
    long expect = 1;
    for (long i = 0; i < n_sites; ++i) expect *= d;
    if (matrix.rank() != 2 || matrix.extent(0) != expect || matrix.extent(1) != expect) {
        throw DimensionError("matrix extents do not equal d^N");
    }
    // interleave row and column indices site by site, then factor as a chain
    std::vector<long> shape(static_cast<size_t>(2 * n_sites), d);
    Tensor t = matrix.reshape(shape);
    std::vector<long> perm;
    for (long m = 0; m < n_sites; ++m) {
        perm.push_back(m);
        perm.push_back(n_sites + m);
    }
    Tensor v = t.transpose(perm).reshape({expect * expect});
    Mps chain = mps_from_dense(v, n_sites, d * d, cutoff);
    return vec_mps_to_mpo(chain, d, d);
}

} // namespace tnmetro
