#include "tnmetro/networks.hpp"

#include <algorithm>
#include <cmath>

namespace tnmetro {

Tensor trace_pair(const Tensor& t, long ax1, long ax2) {
    if (ax1 > ax2) std::swap(ax1, ax2);
    if (ax1 == ax2 || ax2 >= t.rank()) throw DomainError("trace_pair needs two distinct axes");
    if (t.extent(ax1) != t.extent(ax2)) throw DimensionError("trace_pair axes have different extents");
    std::vector<long> perm;
    std::vector<long> out_shape;
    for (long i = 0; i < t.rank(); ++i) {
        if (i != ax1 && i != ax2) {
            perm.push_back(i);
            out_shape.push_back(t.extent(i));
        }
    }
    perm.push_back(ax1);
    perm.push_back(ax2);
    Tensor tt = t.transpose(perm);
    const long m = t.extent(ax1);
    Tensor out = out_shape.empty() ? Tensor() : Tensor(out_shape);
    const long blocks = out.size();
    for (long b = 0; b < blocks; ++b) {
        cplx acc = 0.0;
        const cplx* base = tt.data() + b * m * m;
        for (long i = 0; i < m; ++i) acc += base[i * m + i];
        out[b] = acc;
    }
    return out;
}

namespace {

// Fold the PBC seam into the virtual bonds so the chain contracts like OBC.
std::vector<Tensor> seam_expand(const std::vector<Tensor>& sites) {
    const long n = static_cast<long>(sites.size());
    const long s = sites[0].extent(0);
    std::vector<Tensor> out;
    for (long m = 0; m < n; ++m) {
        const Tensor& t = sites[static_cast<size_t>(m)];
        std::vector<long> rest(t.shape().begin() + 2, t.shape().end());
        long phys = 1;
        for (long e : rest) phys *= e;
        Tensor flat = t.reshape({s, s, phys});
        Tensor site;
        if (n == 1) {
            Tensor tr({1, 1, phys});
            for (long p = 0; p < phys; ++p) {
                cplx acc = 0.0;
                for (long a = 0; a < s; ++a) acc += flat(a, a, p);
                tr(0, 0, p) = acc;
            }
            site = tr;
        } else if (m == 0) {
            site = flat.transpose({0, 1, 2}).reshape({1, s * s, phys});
            // element [(seam=a), b] layout must be (seam, b): flat[a,b,p] -> [1,(a,b),p]
        } else if (m == n - 1) {
            // [(seam, a), 1, p] with element = flat[a, seam, p]
            site = flat.transpose({1, 0, 2}).reshape({s * s, 1, phys});
        } else {
            Tensor big({s * s, s * s, phys});
            for (long seam = 0; seam < s; ++seam)
                for (long a = 0; a < s; ++a)
                    for (long b = 0; b < s; ++b)
                        for (long p = 0; p < phys; ++p) big(seam * s + a, seam * s + b, p) = flat(a, b, p);
            site = big;
        }
        std::vector<long> shape = {site.extent(0), site.extent(1)};
        shape.insert(shape.end(), rest.begin(), rest.end());
        out.push_back(site.reshape(shape));
    }
    return out;
}

std::vector<Tensor> collect_sites(const Mpo& o) {
    std::vector<Tensor> s;
    for (long m = 0; m < o.n_sites(); ++m) s.push_back(o.site(m));
    return s;
}

std::vector<Tensor> collect_sites(const Mps& p) {
    std::vector<Tensor> s;
    for (long m = 0; m < p.n_sites(); ++m) s.push_back(p.site(m));
    return s;
}

} // namespace

std::vector<Tensor> chain_from_mpo(const Mpo& o) {
    std::vector<Tensor> s = collect_sites(o);
    if (o.bc() == BoundaryCondition::PBC) s = seam_expand(s);
    return s;
}

std::vector<Tensor> ket_chain_from_mps(const Mps& p) {
    std::vector<Tensor> s = collect_sites(p);
    if (p.bc() == BoundaryCondition::PBC) s = seam_expand(s);
    for (Tensor& t : s) t = t.reshape({t.extent(0), t.extent(1), t.extent(2), 1});
    return s;
}

std::vector<Tensor> bra_chain_from_mps(const Mps& p) {
    std::vector<Tensor> s = collect_sites(p);
    if (p.bc() == BoundaryCondition::PBC) s = seam_expand(s);
    for (Tensor& t : s) t = t.conjugate().reshape({t.extent(0), t.extent(1), 1, t.extent(2)});
    return s;
}

// ---- RingNetwork ----

RingNetwork::RingNetwork(std::vector<std::vector<Tensor>> chains) : chains_(std::move(chains)) {
    if (chains_.empty()) throw DomainError("ring network needs at least one chain");
    k_ = static_cast<long>(chains_.size());
    n_ = static_cast<long>(chains_[0].size());
    for (const auto& c : chains_) {
        if (static_cast<long>(c.size()) != n_) throw DimensionError("ring chains must share the site count");
        for (const Tensor& t : c) {
            if (t.rank() != 4) throw DimensionError("ring chain tensors must have rank 4");
        }
    }
    for (long c = 0; c < k_; ++c) {
        const long nx = (c + 1) % k_;
        for (long m = 0; m < n_; ++m) {
            if (chains_[static_cast<size_t>(c)][static_cast<size_t>(m)].extent(3) !=
                chains_[static_cast<size_t>(nx)][static_cast<size_t>(m)].extent(2)) {
                throw DimensionError("ring wiring mismatch between chains " + std::to_string(c) + " and " + std::to_string(nx));
            }
        }
    }
}

Tensor RingNetwork::absorb(const Tensor& env, long site, bool from_left) const {
    Tensor x = env;
    for (long c = 0; c < k_; ++c) {
        Tensor s = chains_[static_cast<size_t>(c)][static_cast<size_t>(site)];
        if (!from_left) s = s.transpose({1, 0, 2, 3});
        if (c == 0) {
            x = contract(x, s, {{0, 0}});
        } else {
            x = contract(x, s, {{0, 0}, {x.rank() - 1, 2}});
        }
    }
    // axes now [y_0, o_0, y_1, ..., y_{k-1}, i_{k-1}]; close the ring wire
    x = trace_pair(x, 1, x.rank() - 1);
    return x;
}

void RingNetwork::prepare() {
    std::vector<long> ones(static_cast<size_t>(k_), 1);
    Tensor unit(ones);
    unit[0] = 1.0;
    eleft_.assign(static_cast<size_t>(n_ + 1), Tensor());
    eright_.assign(static_cast<size_t>(n_ + 1), Tensor());
    eleft_[0] = unit;
    eright_[static_cast<size_t>(n_)] = unit;
    for (long s = 0; s < n_; ++s) eleft_[static_cast<size_t>(s + 1)] = absorb(eleft_[static_cast<size_t>(s)], s, true);
    for (long s = n_ - 1; s >= 0; --s) eright_[static_cast<size_t>(s)] = absorb(eright_[static_cast<size_t>(s + 1)], s, false);
}

void RingNetwork::set_site(long site, long c, const Tensor& t) {
    if (t.rank() != 4) throw DimensionError("ring chain tensors must have rank 4");
    chains_[static_cast<size_t>(c)][static_cast<size_t>(site)] = t;
}

void RingNetwork::absorb_left(long site) {
    eleft_[static_cast<size_t>(site + 1)] = absorb(eleft_[static_cast<size_t>(site)], site, true);
}

void RingNetwork::absorb_right(long site) {
    eright_[static_cast<size_t>(site)] = absorb(eright_[static_cast<size_t>(site + 1)], site, false);
}

cplx RingNetwork::value() const {
    std::vector<long> ones(static_cast<size_t>(k_), 1);
    Tensor e(ones);
    e[0] = 1.0;
    for (long s = 0; s < n_; ++s) e = absorb(e, s, true);
    return e[0];
}

namespace {

struct AxisLabel {
    char kind;  // 'a', 'b', 'o', 'i'
    long chain;
};

long find_label(const std::vector<AxisLabel>& labels, char kind, long chain) {
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].kind == kind && labels[i].chain == chain) return static_cast<long>(i);
    }
    return -1;
}

void erase_labels(std::vector<AxisLabel>& labels, std::vector<long> positions) {
    std::sort(positions.begin(), positions.end(), std::greater<long>());
    for (long p : positions) labels.erase(labels.begin() + p);
}

} // namespace

Tensor RingNetwork::hole(long site, long c) const {
    const Tensor& el = eleft_[static_cast<size_t>(site)];
    const Tensor& er = eright_[static_cast<size_t>(site + 1)];
    const Tensor& sc = chains_[static_cast<size_t>(c)][static_cast<size_t>(site)];

    if (k_ == 1) {
        // value = sum_w E_L[a] S[a,b,w,w] E_R[b]
        if (sc.extent(2) != sc.extent(3)) throw DimensionError("single-chain ring needs square physical wires");
        const long d = sc.extent(2);
        Tensor h({el.extent(0), er.extent(0), d, d});
        for (long a = 0; a < el.extent(0); ++a)
            for (long b = 0; b < er.extent(0); ++b)
                for (long w = 0; w < d; ++w) h(a, b, w, w) = el[a] * er[b];
        return h;
    }

    Tensor x = el;
    std::vector<AxisLabel> labels;
    for (long i = 0; i < k_; ++i) labels.push_back({'a', i});

    for (long step = 1; step < k_; ++step) {
        const long c2 = (c + step) % k_;
        const Tensor& s = chains_[static_cast<size_t>(c2)][static_cast<size_t>(site)];
        std::vector<std::pair<long, long>> pairs;
        const long apos = find_label(labels, 'a', c2);
        pairs.push_back({apos, 0});
        std::vector<long> consumed = {apos};
        const long prev = (c2 + k_ - 1) % k_;
        if (prev != c) {
            const long dang = find_label(labels, 'i', prev);
            if (dang < 0) throw NumericalError("ring hole bookkeeping failed");
            pairs.push_back({dang, 2});
            consumed.push_back(dang);
        }
        x = contract(x, s, pairs);
        erase_labels(labels, consumed);
        // contract() appends the free axes of s in order: [b, o?, i]
        labels.push_back({'b', c2});
        if (prev == c) labels.push_back({'o', c2});
        labels.push_back({'i', c2});
    }

    // close with E_R over every b label except the hole chain's
    std::vector<std::pair<long, long>> pairs;
    std::vector<long> consumed;
    for (long i = 0; i < k_; ++i) {
        if (i == c) continue;
        const long bpos = find_label(labels, 'b', i);
        pairs.push_back({bpos, i});
        consumed.push_back(bpos);
    }
    // E_R keeps axis c free
    Tensor er_keep = er;
    x = contract(x, er_keep, pairs);
    erase_labels(labels, consumed);
    labels.push_back({'b', c});

    // remaining labels: a_c, o_(c+1), i_(c-1), b_c  ->  [a_c, b_c, i_(c-1), o_(c+1)]
    const long a_pos = find_label(labels, 'a', c);
    const long b_pos = find_label(labels, 'b', c);
    const long out_pos = find_label(labels, 'i', (c + k_ - 1) % k_);
    const long in_pos = find_label(labels, 'o', (c + 1) % k_);
    if (a_pos < 0 || b_pos < 0 || out_pos < 0 || in_pos < 0) throw NumericalError("ring hole bookkeeping failed");
    return x.transpose({a_pos, b_pos, out_pos, in_pos});
}

long RingNetwork::env_elements() const {
    long total = 0;
    for (const Tensor& t : eleft_) total += t.size();
    for (const Tensor& t : eright_) total += t.size();
    return total;
}

cplx ring_trace(const std::vector<const Mpo*>& chains) {
    if (chains.empty()) throw DomainError("ring_trace needs at least one chain");
    std::vector<std::vector<Tensor>> cs;
    for (const Mpo* o : chains) cs.push_back(chain_from_mpo(*o));
    RingNetwork net(std::move(cs));
    return net.value();
}

Tensor column_transfer(const std::vector<Tensor>& site_tensors) {
    const long k = static_cast<long>(site_tensors.size());
    Tensor x = site_tensors[0];  // [a0,b0,o0,i0]
    for (long c = 1; c < k; ++c) {
        x = contract(x, site_tensors[static_cast<size_t>(c)], {{x.rank() - 1, 2}});
    }
    // axes: [a0,b0,o0,a1,b1,a2,b2,...,i_{k-1}] -> close o0 with i_{k-1}
    if (k == 1) {
        x = trace_pair(x, 2, 3);  // [a0, b0]
        return x;
    }
    x = trace_pair(x, 2, x.rank() - 1);
    // axes: [a0,b0,a1,b1,...]
    std::vector<long> perm;
    long va = 1, vb = 1;
    for (long c = 0; c < k; ++c) perm.push_back(2 * c);
    for (long c = 0; c < k; ++c) perm.push_back(2 * c + 1);
    x = x.transpose(perm);
    for (long c = 0; c < k; ++c) {
        va *= x.extent(c);
        vb *= x.extent(k + c);
    }
    return x.reshape({va, vb});
}

std::pair<Tensor, double> scaled_matrix_power(const Tensor& t, long n) {
    if (t.rank() != 2 || t.extent(0) != t.extent(1)) throw DomainError("matrix power needs a square matrix");
    if (n < 1) throw DomainError("matrix power needs n >= 1");
    double log_scale = 0.0;
    Tensor base = t;
    double m = base.max_abs();
    if (m > 0) {
        base *= cplx(1.0 / m, 0.0);
        log_scale += std::log(m);
    }
    Tensor result = identity_matrix(t.extent(0));
    double result_log = 0.0;
    long e = n;
    double base_log = log_scale;
    while (e > 0) {
        if (e & 1) {
            result = matmul(result, base);
            result_log += base_log;
            double rm = result.max_abs();
            if (rm > 0) {
                result *= cplx(1.0 / rm, 0.0);
                result_log += std::log(rm);
            }
        }
        e >>= 1;
        if (e > 0) {
            base = matmul(base, base);
            base_log *= 2.0;
            double bm = base.max_abs();
            if (bm > 0) {
                base *= cplx(1.0 / bm, 0.0);
                base_log += std::log(bm);
            }
        }
    }
    return {result, result_log};
}

} // namespace tnmetro
