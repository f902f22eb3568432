#include "tnmetro/mps.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace tnmetro {

namespace {

using MatrixC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using MapRowConst = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MapRow = Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Saturating product guard for dense-size checks.
bool product_exceeds(long base, long count, long cap) {
    long acc = 1;
    for (long i = 0; i < count; ++i) {
        acc *= base;
        if (acc > cap) return true;
    }
    return false;
}

// Thin QR with the diagonal of R made real and non-negative, so repeated
// gauge sweeps are deterministic.
std::pair<Tensor, Tensor> thin_qr(const Tensor& m) {
    const long rows = m.extent(0), cols = m.extent(1);
    const long k = std::min(rows, cols);
    MatrixC mm = MapRowConst(m.data(), rows, cols);
    Eigen::HouseholderQR<MatrixC> qr(mm);
    MatrixC q = qr.householderQ() * MatrixC::Identity(rows, k);
    MatrixC r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (long i = 0; i < k; ++i) {
        cplx d = r(i, i);
        if (std::abs(d) > 1e-300) {
            cplx ph = d / std::abs(d);
            q.col(i) *= ph;
            r.row(i) *= std::conj(ph);
        }
    }
    Tensor qt({rows, k}), rt({k, cols});
    MapRow(qt.data(), rows, k) = q;
    MapRow(rt.data(), k, cols) = r;
    return {qt, rt};
}

void copy_block_site(const Tensor& block, long n, long n_total, Tensor& out) {
    // block axes (..., site); out gets the slice at site n.
    const long chunk = out.size();
    const cplx* src = block.data();
    for (long i = 0; i < chunk; ++i) out[i] = src[i * n_total + n];
}

void write_block_site(Tensor& block, long n, long n_total, const Tensor& t) {
    cplx* dst = block.data();
    for (long i = 0; i < t.size(); ++i) dst[i * n_total + n] = t[i];
}

} // namespace

// ---- Mps ----

Mps Mps::from_sites(BoundaryCondition bc, std::vector<Tensor> sites) {
    if (sites.empty()) throw DomainError("MPS needs at least one site");
    Mps m;
    m.bc_ = bc;
    m.n_ = static_cast<long>(sites.size());
    for (long n = 0; n < m.n_; ++n) {
        if (sites[static_cast<size_t>(n)].rank() != 3) throw DimensionError("MPS site tensors must have rank 3");
    }
    m.d_ = sites[0].extent(2);
    for (long n = 0; n < m.n_; ++n) {
        const Tensor& t = sites[static_cast<size_t>(n)];
        if (t.extent(2) != m.d_) throw DimensionError("inconsistent physical dimension at site " + std::to_string(n));
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
            if (t.extent(0) != dim || t.extent(1) != dim) {
                throw DimensionError("PBC chain requires one uniform bond dimension");
            }
        }
        Tensor block({dim, dim, m.d_, m.n_});
        for (long n = 0; n < m.n_; ++n) write_block_site(block, n, m.n_, sites[static_cast<size_t>(n)]);
        m.block_ = block;
    }
    return m;
}

Mps Mps::from_block(Tensor block) {
    if (block.rank() != 4) throw DimensionError("PBC MPS block must have rank 4 (left, right, phys, site)");
    if (block.extent(0) != block.extent(1)) throw DimensionError("PBC block must have equal virtual extents");
    Mps m;
    m.bc_ = BoundaryCondition::PBC;
    m.n_ = block.extent(3);
    m.d_ = block.extent(2);
    m.block_ = std::move(block);
    return m;
}

Tensor Mps::site(long n) const {
    if (n < 0 || n >= n_) throw DomainError("site index out of range");
    if (bc_ == BoundaryCondition::OBC) return sites_[static_cast<size_t>(n)];
    Tensor out({block_.extent(0), block_.extent(1), d_});
    copy_block_site(block_, n, n_, out);
    return out;
}

void Mps::set_site(long n, const Tensor& t) {
    if (n < 0 || n >= n_) throw DomainError("site index out of range");
    if (t.rank() != 3) throw DimensionError("MPS site tensors must have rank 3");
    if (bc_ == BoundaryCondition::OBC) {
        if (t.extent(2) != d_) throw DimensionError("physical dimension mismatch");
        if (n > 0 && sites_[static_cast<size_t>(n - 1)].extent(1) != t.extent(0)) {
            throw DimensionError("left bond mismatch in set_site");
        }
        if (n + 1 < n_ && sites_[static_cast<size_t>(n + 1)].extent(0) != t.extent(1)) {
            throw DimensionError("right bond mismatch in set_site");
        }
        sites_[static_cast<size_t>(n)] = t;
    } else {
        if (t.extent(0) != block_.extent(0) || t.extent(1) != block_.extent(1) || t.extent(2) != d_) {
            throw DimensionError("PBC site update must preserve the uniform block shape");
        }
        write_block_site(block_, n, n_, t);
    }
}

const Tensor& Mps::block() const {
    if (bc_ != BoundaryCondition::PBC) throw UnsupportedError("block storage exists only for PBC");
    return block_;
}

std::vector<long> Mps::bond_dims() const {
    std::vector<long> b;
    if (bc_ == BoundaryCondition::OBC) {
        b.push_back(1);
        for (const Tensor& t : sites_) b.push_back(t.extent(1));
    } else {
        b.assign(static_cast<size_t>(n_), block_.extent(0));
    }
    return b;
}

long Mps::max_bond() const {
    long m = 1;
    for (long b : bond_dims()) m = std::max(m, b);
    return m;
}

// ---- state operations ----

Mps product_mps(const std::vector<cplx>& local_state, long n_sites, BoundaryCondition bc) {
    if (n_sites <= 0) throw DomainError("product_mps requires at least one site");
    const long d = static_cast<long>(local_state.size());
    if (d <= 0) throw DomainError("empty local state");
    double nrm = 0.0;
    for (cplx v : local_state) nrm += std::norm(v);
    if (nrm == 0.0) throw DomainError("local state must be nonzero");

    Tensor site({1, 1, d});
    for (long j = 0; j < d; ++j) site(0, 0, j) = local_state[static_cast<size_t>(j)];
    std::vector<Tensor> sites(static_cast<size_t>(n_sites), site);
    return Mps::from_sites(bc, std::move(sites));
}

cplx overlap(const Mps& bra, const Mps& ket) {
    if (bra.n_sites() != ket.n_sites() || bra.phys_dim() != ket.phys_dim() || bra.bc() != ket.bc()) {
        throw DimensionError("overlap requires matching site count, physical dimension and boundary");
    }
    const long n = bra.n_sites();
    if (bra.bc() == BoundaryCondition::OBC) {
        Tensor e({1, 1});
        e(0, 0) = 1.0;
        for (long m = 0; m < n; ++m) {
            Tensor t = contract(e, bra.site(m).conjugate(), {{0, 0}});   // [ak, rb, j]
            e = contract(t, ket.site(m), {{0, 0}, {2, 2}});              // [rb, rk]
        }
        return e.to_scalar();
    }
    Tensor acc;
    for (long m = 0; m < n; ++m) {
        Tensor t = contract(bra.site(m).conjugate(), ket.site(m), {{2, 2}});  // [ab,bb,ak,bk]
        const long db = bra.site(m).extent(0), dk = ket.site(m).extent(0);
        Tensor tm = t.transpose({0, 2, 1, 3}).reshape({db * dk, db * dk});
        acc = (m == 0) ? tm : matmul(acc, tm);
    }
    return matrix_trace(acc);
}

Mps apply_mpo(const Mpo& op, const Mps& psi) {
    if (op.phys_dim_in() != psi.phys_dim()) {
        throw DimensionError("operator input dimension " + std::to_string(op.phys_dim_in()) +
                             " does not match state dimension " + std::to_string(psi.phys_dim()));
    }
    if (op.n_sites() != psi.n_sites() || op.bc() != psi.bc()) {
        throw DimensionError("apply_mpo requires matching site count and boundary");
    }
    std::vector<Tensor> out;
    for (long m = 0; m < psi.n_sites(); ++m) {
        Tensor w = op.site(m);
        Tensor p = psi.site(m);
        Tensor t = contract(w, p, {{3, 2}});        // [ao,bo,j,ap,bp]
        t = t.transpose({0, 3, 1, 4, 2});           // [ao,ap,bo,bp,j]
        out.push_back(t.reshape({w.extent(0) * p.extent(0), w.extent(1) * p.extent(1), op.phys_dim_out()}));
    }
    return Mps::from_sites(psi.bc(), std::move(out));
}

cplx expectation(const Mps& psi, const Mpo& op) {
    if (op.phys_dim_in() != psi.phys_dim() || op.phys_dim_out() != psi.phys_dim()) {
        throw DimensionError("expectation requires a square operator matching the state dimension");
    }
    if (op.n_sites() != psi.n_sites() || op.bc() != psi.bc()) {
        throw DimensionError("expectation requires matching site count and boundary");
    }
    const long n = psi.n_sites();
    if (psi.bc() == BoundaryCondition::OBC) {
        Tensor e({1, 1, 1});
        e(0, 0, 0) = 1.0;
        for (long m = 0; m < n; ++m) {
            Tensor t = contract(e, psi.site(m).conjugate(), {{0, 0}});  // [ao,ak,rb,j]
            t = contract(t, op.site(m), {{0, 0}, {3, 2}});              // [ak,rb,ro,k]
            e = contract(t, psi.site(m), {{0, 0}, {3, 2}});             // [rb,ro,rk]
        }
        return e.to_scalar();
    }
    Tensor acc;
    for (long m = 0; m < n; ++m) {
        Tensor b = psi.site(m).conjugate();
        Tensor t = contract(b, op.site(m), {{2, 2}});                    // [ab,bb,ao,bo,k]
        t = contract(t, psi.site(m), {{4, 2}});                          // [ab,bb,ao,bo,ak,bk]
        const long db = b.extent(0), dop = op.site(m).extent(0), dk = psi.site(m).extent(0);
        Tensor tm = t.transpose({0, 2, 4, 1, 3, 5}).reshape({db * dop * dk, db * dop * dk});
        acc = (m == 0) ? tm : matmul(acc, tm);
    }
    return matrix_trace(acc);
}

Mps canonicalize(const Mps& psi, long center) {
    if (psi.bc() != BoundaryCondition::OBC) {
        throw UnsupportedError("canonicalize is defined for OBC chains only");
    }
    const long n = psi.n_sites();
    if (center < 0 || center >= n) throw DomainError("canonical center out of range");
    std::vector<Tensor> sites;
    for (long m = 0; m < n; ++m) sites.push_back(psi.site(m));

    for (long m = 0; m < center; ++m) {
        Tensor t = sites[static_cast<size_t>(m)];
        const long dl = t.extent(0), dr = t.extent(1), d = t.extent(2);
        Tensor mat = t.transpose({0, 2, 1}).reshape({dl * d, dr});
        auto [q, r] = thin_qr(mat);
        const long k = q.extent(1);
        sites[static_cast<size_t>(m)] = q.reshape({dl, d, k}).transpose({0, 2, 1});
        sites[static_cast<size_t>(m + 1)] = contract(r, sites[static_cast<size_t>(m + 1)], {{1, 0}});
    }
    for (long m = n - 1; m > center; --m) {
        Tensor t = sites[static_cast<size_t>(m)];
        const long dl = t.extent(0), dr = t.extent(1), d = t.extent(2);
        Tensor mat = t.transpose({0, 2, 1}).reshape({dl, d * dr});
        Tensor matd = mat.transpose({1, 0}).conjugate();
        auto [q, r] = thin_qr(matd);
        const long k = q.extent(1);
        Tensor qd = q.transpose({1, 0}).conjugate();  // [k, d*dr], right-isometric rows
        sites[static_cast<size_t>(m)] = qd.reshape({k, d, dr}).transpose({0, 2, 1});
        Tensor l = r.transpose({1, 0}).conjugate();   // [dl, k]
        Tensor prv = contract(sites[static_cast<size_t>(m - 1)], l, {{1, 0}});  // [dl', j, k]
        sites[static_cast<size_t>(m - 1)] = prv.transpose({0, 2, 1});
    }
    return Mps::from_sites(BoundaryCondition::OBC, std::move(sites));
}

namespace {

long schmidt_ceiling(long d, long left_sites, long right_sites, long cap) {
    long lo = 1;
    for (long i = 0; i < left_sites; ++i) {
        lo *= d;
        if (lo >= cap) { lo = cap; break; }
    }
    long hi = 1;
    for (long i = 0; i < right_sites; ++i) {
        hi *= d;
        if (hi >= cap) { hi = cap; break; }
    }
    return std::min({lo, hi, cap});
}

Tensor pad_tensor(const Tensor& t, const std::vector<long>& new_shape, double amplitude, std::mt19937_64& rng) {
    Tensor out(new_shape);
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    if (amplitude > 0.0) {
        for (long i = 0; i < out.size(); ++i) out[i] = cplx(dist(rng), dist(rng));
    }
    // embed the original block at the origin
    std::vector<long> idx(static_cast<size_t>(t.rank()), 0);
    const auto out_strides = out.strides();
    for (long flat = 0; flat < t.size(); ++flat) {
        long dst = 0;
        for (long ax = 0; ax < t.rank(); ++ax) dst += idx[static_cast<size_t>(ax)] * out_strides[static_cast<size_t>(ax)];
        out[dst] = t[flat];
        for (long ax = t.rank() - 1; ax >= 0; --ax) {
            if (++idx[static_cast<size_t>(ax)] < t.extent(ax)) break;
            idx[static_cast<size_t>(ax)] = 0;
        }
    }
    return out;
}

} // namespace

Mps grow_bond(const Mps& x, long new_dim, double noise_scale, std::mt19937_64& rng) {
    if (new_dim < x.max_bond()) throw DomainError("grow_bond cannot shrink the bond dimension");
    const long n = x.n_sites(), d = x.phys_dim();
    double scale = 0.0;
    for (long m = 0; m < n; ++m) scale = std::max(scale, x.site(m).max_abs());
    const double amp = noise_scale * scale;

    std::vector<Tensor> sites;
    if (x.bc() == BoundaryCondition::OBC) {
        std::vector<long> link(static_cast<size_t>(n + 1), 1);
        for (long l = 1; l < n; ++l) link[static_cast<size_t>(l)] = schmidt_ceiling(d, l, n - l, new_dim);
        for (long m = 0; m < n; ++m) {
            Tensor t = x.site(m);
            sites.push_back(pad_tensor(t, {link[static_cast<size_t>(m)], link[static_cast<size_t>(m + 1)], d}, amp, rng));
        }
    } else {
        for (long m = 0; m < n; ++m) sites.push_back(pad_tensor(x.site(m), {new_dim, new_dim, d}, amp, rng));
    }
    return Mps::from_sites(x.bc(), std::move(sites));
}

Mpo grow_bond(const Mpo& x, long new_dim, double noise_scale, std::mt19937_64& rng) {
    if (new_dim < x.max_bond()) throw DomainError("grow_bond cannot shrink the bond dimension");
    const long n = x.n_sites();
    const long dd = x.phys_dim_out() * x.phys_dim_in();
    double scale = 0.0;
    for (long m = 0; m < n; ++m) scale = std::max(scale, x.site(m).max_abs());
    const double amp = noise_scale * scale;

    std::vector<Tensor> sites;
    if (x.bc() == BoundaryCondition::OBC) {
        std::vector<long> link(static_cast<size_t>(n + 1), 1);
        for (long l = 1; l < n; ++l) link[static_cast<size_t>(l)] = schmidt_ceiling(dd, l, n - l, new_dim);
        for (long m = 0; m < n; ++m) {
            sites.push_back(pad_tensor(x.site(m), {link[static_cast<size_t>(m)], link[static_cast<size_t>(m + 1)],
                                                   x.phys_dim_out(), x.phys_dim_in()},
                                       amp, rng));
        }
    } else {
        for (long m = 0; m < n; ++m) {
            sites.push_back(pad_tensor(x.site(m), {new_dim, new_dim, x.phys_dim_out(), x.phys_dim_in()}, amp, rng));
        }
    }
    return Mpo::from_sites(x.bc(), std::move(sites));
}

Tensor to_dense(const Mps& x, long cap) {
    if (product_exceeds(x.phys_dim(), x.n_sites(), cap)) {
        throw ResourceError("dense conversion exceeds the configured amplitude cap");
    }
    const long n = x.n_sites(), d = x.phys_dim();
    if (x.bc() == BoundaryCondition::OBC) {
        Tensor acc = x.site(0).transpose({0, 2, 1}).reshape({d, x.site(0).extent(1)});  // [J, b]
        for (long m = 1; m < n; ++m) {
            Tensor t = contract(acc, x.site(m), {{1, 0}});  // [J, b', j]
            acc = t.transpose({0, 2, 1}).reshape({t.extent(0) * d, t.extent(1)});
        }
        return acc.reshape({acc.extent(0)});
    }
    const long dim = x.block().extent(0);
    Tensor acc = x.site(0).transpose({2, 0, 1}).reshape({d, dim, dim});  // [J, seam, b]
    for (long m = 1; m < n; ++m) {
        Tensor t = contract(acc, x.site(m), {{2, 0}});  // [J, seam, b', j]
        acc = t.transpose({0, 3, 1, 2}).reshape({t.extent(0) * d, dim, dim});
    }
    Tensor out({acc.extent(0)});
    for (long i = 0; i < out.size(); ++i) {
        cplx v = 0.0;
        for (long a = 0; a < dim; ++a) v += acc(i, a, a);
        out[i] = v;
    }
    return out;
}

Tensor to_dense(const Mpo& x, long cap) {
    if (product_exceeds(x.phys_dim_out(), x.n_sites(), cap) || product_exceeds(x.phys_dim_in(), x.n_sites(), cap)) {
        throw ResourceError("dense conversion exceeds the configured amplitude cap");
    }
    const long n = x.n_sites(), dj = x.phys_dim_out(), dk = x.phys_dim_in();
    if (x.bc() == BoundaryCondition::OBC) {
        Tensor acc = x.site(0).transpose({2, 3, 1, 0}).reshape({dj, dk, x.site(0).extent(1)});  // [J, K, b]
        for (long m = 1; m < n; ++m) {
            Tensor t = contract(acc, x.site(m), {{2, 0}});  // [J, K, b', j, k]
            acc = t.transpose({0, 3, 1, 4, 2}).reshape({t.extent(0) * dj, t.extent(1) * dk, t.extent(2)});
        }
        return acc.reshape({acc.extent(0), acc.extent(1)});
    }
    const long dim = x.block().extent(0);
    Tensor acc = x.site(0).transpose({2, 3, 0, 1}).reshape({dj, dk, dim, dim});  // [J, K, seam, b]
    for (long m = 1; m < n; ++m) {
        Tensor t = contract(acc, x.site(m), {{3, 0}});  // [J, K, seam, b', j, k]
        acc = t.transpose({0, 4, 1, 5, 2, 3}).reshape({t.extent(0) * dj, t.extent(1) * dk, dim, dim});
    }
    Tensor out({acc.extent(0), acc.extent(1)});
    for (long i = 0; i < acc.extent(0); ++i) {
        for (long j = 0; j < acc.extent(1); ++j) {
            cplx v = 0.0;
            for (long a = 0; a < dim; ++a) v += acc(i, j, a, a);
            out(i, j) = v;
        }
    }
    return out;
}

} // namespace tnmetro
