#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "tnmetro/mps.hpp"

using namespace tnmetro;

namespace {

// Independent oracle: evaluate the chain coefficient for every basis string
// by explicit matrix products.
Tensor dense_from_mps_naive(const Mps& psi) {
    const long n = psi.n_sites(), d = psi.phys_dim();
    long total = 1;
    for (long i = 0; i < n; ++i) total *= d;
    Tensor out({total});
    std::vector<long> digits(static_cast<size_t>(n), 0);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (long m = n - 1; m >= 0; --m) {
            digits[static_cast<size_t>(m)] = rem % d;
            rem /= d;
        }
        Tensor acc;
        for (long m = 0; m < n; ++m) {
            Tensor site = psi.site(m);
            Tensor slice({site.extent(0), site.extent(1)});
            for (long a = 0; a < site.extent(0); ++a)
                for (long b = 0; b < site.extent(1); ++b) slice(a, b) = site(a, b, digits[static_cast<size_t>(m)]);
            acc = (m == 0) ? slice : matmul(acc, slice);
        }
        out[idx] = (psi.bc() == BoundaryCondition::OBC) ? acc(0, 0) : matrix_trace(acc);
    }
    return out;
}

cplx dense_inner(const Tensor& a, const Tensor& b) {
    return contract(a.conjugate(), b, {{0, 0}}).to_scalar();
}

Mps random_obc_mps(long n, long d, long bond, std::mt19937_64& rng) {
    std::vector<Tensor> sites;
    for (long m = 0; m < n; ++m) {
        const long dl = (m == 0) ? 1 : bond;
        const long dr = (m == n - 1) ? 1 : bond;
        sites.push_back(Tensor::random({dl, dr, d}, rng, 0.7));
    }
    return Mps::from_sites(BoundaryCondition::OBC, std::move(sites));
}

Mpo random_obc_mpo(long n, long d, long bond, std::mt19937_64& rng) {
    std::vector<Tensor> sites;
    for (long m = 0; m < n; ++m) {
        const long dl = (m == 0) ? 1 : bond;
        const long dr = (m == n - 1) ? 1 : bond;
        sites.push_back(Tensor::random({dl, dr, d, d}, rng, 0.7));
    }
    return Mpo::from_sites(BoundaryCondition::OBC, std::move(sites));
}

// Sum_n |1><1|_n as a bond-2 chain.
Mpo number_mpo(long n) {
    Tensor proj({2, 2});
    proj(1, 1) = 1.0;
    std::vector<Tensor> sites;
    for (long m = 0; m < n; ++m) {
        const long dl = (m == 0) ? 1 : 2;
        const long dr = (m == n - 1) ? 1 : 2;
        Tensor w({dl, dr, 2, 2});
        auto put = [&](long a, long b, const Tensor& op) {
            for (long j = 0; j < 2; ++j)
                for (long k = 0; k < 2; ++k) w(a, b, j, k) += op(j, k);
        };
        Tensor id = identity_matrix(2);
        if (m == 0) {
            put(0, 0, id);
            put(0, dr - 1, proj);
        } else if (m == n - 1) {
            put(0, 0, proj);
            put(dl - 1, 0, id);
        } else {
            put(0, 0, id);
            put(0, 1, proj);
            put(1, 1, id);
        }
        sites.push_back(w);
    }
    return Mpo::from_sites(BoundaryCondition::OBC, std::move(sites));
}

} // namespace

TEST_CASE("product_mps: equatorial state matches the tensor power") {
    const double s = 1.0 / std::sqrt(2.0);
    const cplx up = std::exp(cplx(0.0, M_PI / 2.0)) * s;
    Mps psi = product_mps({cplx(s, 0.0), up}, 3, BoundaryCondition::OBC);
    Tensor dense = to_dense(psi);
    std::vector<cplx> local = {cplx(s, 0.0), up};
    for (long idx = 0; idx < 8; ++idx) {
        cplx want = local[(idx >> 2) & 1] * local[(idx >> 1) & 1] * local[idx & 1];
        CHECK(std::abs(dense[idx] - want) < 1e-14);
    }
}

TEST_CASE("product_mps: basis state") {
    Mps psi = product_mps({1.0, 0.0}, 5, BoundaryCondition::OBC);
    Tensor dense = to_dense(psi);
    CHECK(std::abs(dense[0] - cplx(1.0)) < 1e-15);
    for (long i = 1; i < dense.size(); ++i) CHECK(std::abs(dense[i]) < 1e-15);
}

TEST_CASE("product_mps: PBC dense vector") {
    Mps psi = product_mps({1.0, 1.0}, 2, BoundaryCondition::PBC);
    Tensor dense = to_dense(psi);
    for (long i = 0; i < 4; ++i) CHECK(std::abs(dense[i] - cplx(1.0)) < 1e-14);
}

TEST_CASE("product_mps: degenerate inputs rejected") {
    CHECK_THROWS_AS(product_mps({1.0, 0.0}, 0, BoundaryCondition::OBC), DomainError);
    CHECK_THROWS_AS(product_mps({0.0, 0.0}, 2, BoundaryCondition::OBC), DomainError);
}

TEST_CASE("product_mps: PBC and OBC dense vectors agree") {
    const double s = 1.0 / std::sqrt(2.0);
    Mps a = product_mps({cplx(s, 0.0), cplx(0.0, s)}, 4, BoundaryCondition::OBC);
    Mps b = product_mps({cplx(s, 0.0), cplx(0.0, s)}, 4, BoundaryCondition::PBC);
    CHECK((to_dense(a) - to_dense(b)).max_abs() < 1e-14);
}

TEST_CASE("overlap: normalized product state with itself") {
    const double s = 1.0 / std::sqrt(2.0);
    Mps psi = product_mps({cplx(s, 0.0), cplx(0.0, s)}, 6, BoundaryCondition::OBC);
    CHECK(std::abs(overlap(psi, psi) - cplx(1.0)) < 1e-12);
}

TEST_CASE("overlap: orthogonal basis states") {
    Mps a = product_mps({1.0, 0.0}, 4, BoundaryCondition::OBC);
    Mps b = product_mps({0.0, 1.0}, 4, BoundaryCondition::OBC);
    CHECK(std::abs(overlap(a, b)) < 1e-14);
}

TEST_CASE("overlap: random chains match the dense inner product") {
    std::mt19937_64 rng(101);
    Mps a = random_obc_mps(4, 2, 2, rng);
    Mps b = random_obc_mps(4, 2, 2, rng);
    cplx got = overlap(a, b);
    cplx want = dense_inner(to_dense(a), to_dense(b));
    CHECK(std::abs(got - want) < 1e-10);
}

TEST_CASE("overlap: self overlap is real and non-negative") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 10; ++trial) {
        Mps a = random_obc_mps(3, 2, 3, rng);
        cplx v = overlap(a, a);
        CHECK(std::abs(v.imag()) < 1e-12 * std::max(1.0, std::abs(v.real())));
        CHECK(v.real() >= -1e-12);
    }
}

TEST_CASE("apply_mpo: identity leaves the dense vector unchanged") {
    std::mt19937_64 rng(107);
    Mps psi = random_obc_mps(3, 2, 2, rng);
    Mps out = apply_mpo(identity_mpo(3, 2, BoundaryCondition::OBC), psi);
    CHECK((to_dense(out) - to_dense(psi)).max_abs() < 1e-12);
}

TEST_CASE("apply_mpo: bit flip chain") {
    Tensor sx({1, 1, 2, 2});
    sx(0, 0, 0, 1) = 1.0;
    sx(0, 0, 1, 0) = 1.0;
    Mpo flip = Mpo::from_sites(BoundaryCondition::OBC, std::vector<Tensor>(4, sx));
    Mps zeros = product_mps({1.0, 0.0}, 4, BoundaryCondition::OBC);
    Tensor dense = to_dense(apply_mpo(flip, zeros));
    CHECK(std::abs(dense[dense.size() - 1] - cplx(1.0)) < 1e-14);
    for (long i = 0; i + 1 < dense.size(); ++i) CHECK(std::abs(dense[i]) < 1e-14);
}

TEST_CASE("apply_mpo: random instance matches the dense matrix-vector oracle") {
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 5; ++trial) {
        Mpo op = random_obc_mpo(3, 2, 2, rng);
        Mps psi = random_obc_mps(3, 2, 2, rng);
        Tensor got = to_dense(apply_mpo(op, psi));
        Tensor want = contract(to_dense(op), to_dense(psi), {{1, 0}});
        CHECK((got - want).max_abs() < 1e-10);
    }
}

TEST_CASE("apply_mpo: dimension mismatch is rejected") {
    Mps psi = product_mps({1.0, 0.0}, 3, BoundaryCondition::OBC);
    CHECK_THROWS_AS(apply_mpo(identity_mpo(3, 3, BoundaryCondition::OBC), psi), DimensionError);
    CHECK_THROWS_AS(apply_mpo(identity_mpo(4, 2, BoundaryCondition::OBC), psi), DimensionError);
}

TEST_CASE("expectation: identity on a normalized state") {
    const double s = 1.0 / std::sqrt(2.0);
    Mps psi = product_mps({cplx(s, 0.0), cplx(s, 0.0)}, 5, BoundaryCondition::OBC);
    CHECK(std::abs(expectation(psi, identity_mpo(5, 2, BoundaryCondition::OBC)) - cplx(1.0)) < 1e-12);
}

TEST_CASE("expectation: number operator on the filled state") {
    Mps ones = product_mps({0.0, 1.0}, 4, BoundaryCondition::OBC);
    cplx v = expectation(ones, number_mpo(4));
    CHECK(std::abs(v - cplx(4.0)) < 1e-12);
}

TEST_CASE("expectation: random instance matches the dense oracle and the two-step route") {
    std::mt19937_64 rng(113);
    Mpo op = random_obc_mpo(3, 2, 2, rng);
    Mps psi = random_obc_mps(3, 2, 2, rng);
    cplx got = expectation(psi, op);
    Tensor dp = to_dense(psi);
    cplx want = dense_inner(dp, contract(to_dense(op), dp, {{1, 0}}));
    CHECK(std::abs(got - want) < 1e-10);
    cplx two_step = overlap(psi, apply_mpo(op, psi));
    CHECK(std::abs(got - two_step) < 1e-10);
}

TEST_CASE("canonicalize: product state is unchanged up to phases") {
    const double s = 1.0 / std::sqrt(2.0);
    Mps psi = product_mps({cplx(s, 0.0), cplx(0.0, s)}, 4, BoundaryCondition::OBC);
    Mps can = canonicalize(psi, 2);
    cplx ov = overlap(can, psi);
    cplx nn = overlap(psi, psi);
    CHECK(std::abs(std::abs(ov) - std::abs(nn)) < 1e-12);
    CHECK((to_dense(can) - to_dense(psi)).max_abs() < 1e-10);
}

TEST_CASE("canonicalize: isometry conditions and preserved vector") {
    std::mt19937_64 rng(127);
    Mps psi = random_obc_mps(5, 2, 3, rng);
    const long center = 2;
    Mps can = canonicalize(psi, center);
    CHECK((to_dense(can) - to_dense(psi)).max_abs() < 1e-10);
    for (long m = 0; m < 5; ++m) {
        Tensor t = can.site(m);
        if (m < center) {
            Tensor g = contract(t.conjugate(), t, {{0, 0}, {2, 2}});  // [b,b']
            CHECK((g - identity_matrix(g.extent(0))).max_abs() < 1e-10);
        } else if (m > center) {
            Tensor g = contract(t, t.conjugate(), {{1, 1}, {2, 2}});  // [a,a']
            CHECK((g - identity_matrix(g.extent(0))).max_abs() < 1e-10);
        }
    }
}

TEST_CASE("canonicalize: round trip preserves the overlap") {
    std::mt19937_64 rng(131);
    Mps psi = random_obc_mps(5, 2, 3, rng);
    Mps a = canonicalize(psi, 0);
    Mps b = canonicalize(a, 4);
    cplx ov = overlap(b, psi);
    cplx nn = overlap(psi, psi);
    CHECK(std::abs(ov - nn) < 1e-10 * std::max(1.0, std::abs(nn)));
}

TEST_CASE("canonicalize: PBC is rejected") {
    Mps psi = product_mps({1.0, 0.0}, 3, BoundaryCondition::PBC);
    CHECK_THROWS_AS(canonicalize(psi, 0), UnsupportedError);
}

TEST_CASE("grow_bond: zero noise preserves the dense vector") {
    std::mt19937_64 rng(137);
    Mps psi = random_obc_mps(4, 2, 2, rng);
    Mps grown = grow_bond(psi, 4, 0.0, rng);
    CHECK((to_dense(grown) - to_dense(psi)).max_abs() < 1e-14);
    CHECK(grown.max_bond() == 4);
}

TEST_CASE("grow_bond: product state overlap is preserved exactly at zero noise") {
    std::mt19937_64 rng(139);
    const double s = 1.0 / std::sqrt(2.0);
    Mps psi = product_mps({cplx(s, 0.0), cplx(s, 0.0)}, 4, BoundaryCondition::OBC);
    Mps grown = grow_bond(psi, 2, 0.0, rng);
    CHECK(std::abs(overlap(grown, psi) - overlap(psi, psi)) < 1e-14);
}

TEST_CASE("grow_bond: small noise stays within the documented distance") {
    std::mt19937_64 rng(149);
    const double s = 1.0 / std::sqrt(2.0);
    Mps psi = product_mps({cplx(s, 0.0), cplx(s, 0.0)}, 4, BoundaryCondition::OBC);
    Mps grown = grow_bond(psi, 2, 1e-2, rng);
    Tensor diff = to_dense(grown) - to_dense(psi);
    CHECK(diff.norm() <= 1e-1);
}

TEST_CASE("grow_bond: shrinking is rejected") {
    std::mt19937_64 rng(151);
    Mps psi = random_obc_mps(4, 2, 3, rng);
    CHECK_THROWS_AS(grow_bond(psi, 2, 0.0, rng), DomainError);
}

TEST_CASE("grow_bond: OBC links are capped by the Schmidt ceiling") {
    std::mt19937_64 rng(157);
    Mps psi = product_mps({1.0, 0.0}, 4, BoundaryCondition::OBC);
    Mps grown = grow_bond(psi, 16, 0.0, rng);
    auto bonds = grown.bond_dims();
    CHECK(bonds[1] == 2);
    CHECK(bonds[2] == 4);
    CHECK(bonds[3] == 2);
}

TEST_CASE("to_dense: identity MPO gives the identity matrix") {
    Tensor dense = to_dense(identity_mpo(3, 2, BoundaryCondition::OBC));
    CHECK((dense - identity_matrix(8)).max_abs() < 1e-14);
}

TEST_CASE("to_dense: matches the naive per-basis-string oracle") {
    std::mt19937_64 rng(163);
    Mps psi = random_obc_mps(4, 2, 3, rng);
    CHECK((to_dense(psi) - dense_from_mps_naive(psi)).max_abs() < 1e-11);

    std::vector<Tensor> pbc_sites(3, Tensor::random({2, 2, 2}, rng, 0.8));
    Mps pbc = Mps::from_sites(BoundaryCondition::PBC, pbc_sites);
    CHECK((to_dense(pbc) - dense_from_mps_naive(pbc)).max_abs() < 1e-11);
}

TEST_CASE("to_dense: cap is enforced") {
    Mps psi = product_mps({1.0, 0.0}, 20, BoundaryCondition::OBC);
    CHECK_THROWS_AS(to_dense(psi), ResourceError);
}

TEST_CASE("mpo_product: dense oracle") {
    std::mt19937_64 rng(167);
    Mpo a = random_obc_mpo(3, 2, 2, rng);
    Mpo b = random_obc_mpo(3, 2, 2, rng);
    Tensor got = to_dense(mpo_product(a, b));
    Tensor want = matmul(to_dense(a), to_dense(b));
    CHECK((got - want).max_abs() < 1e-10);
}

TEST_CASE("mpo_sum: dense oracle with complex coefficients") {
    std::mt19937_64 rng(173);
    Mpo a = random_obc_mpo(3, 2, 2, rng);
    Mpo b = random_obc_mpo(3, 2, 3, rng);
    cplx ca(0.5, 1.0), cb(-2.0, 0.25);
    Tensor got = to_dense(mpo_sum({a, b}, {ca, cb}));
    Tensor want = to_dense(a) * ca + to_dense(b) * cb;
    CHECK((got - want).max_abs() < 1e-10);
    CHECK(mpo_sum({a, b}, {ca, cb}).max_bond() == 5);
}

TEST_CASE("mpo_adjoint and mpo_trace: dense oracles") {
    std::mt19937_64 rng(179);
    Mpo a = random_obc_mpo(3, 2, 2, rng);
    CHECK((to_dense(mpo_adjoint(a)) - adjoint_matrix(to_dense(a))).max_abs() < 1e-12);
    CHECK(std::abs(mpo_trace(a) - matrix_trace(to_dense(a))) < 1e-10);
}

TEST_CASE("outer_mpo: dense projector oracle") {
    std::mt19937_64 rng(181);
    Mps psi = random_obc_mps(3, 2, 2, rng);
    Tensor v = to_dense(psi);
    Tensor want = contract(v, v.conjugate(), {});
    CHECK((to_dense(outer_mpo(psi)) - want).max_abs() < 1e-10);
}

TEST_CASE("vectorization round trip preserves the Hilbert-Schmidt pairing") {
    std::mt19937_64 rng(191);
    Mpo a = random_obc_mpo(3, 2, 2, rng);
    Mpo b = random_obc_mpo(3, 2, 2, rng);
    Mps va = mpo_to_vec_mps(a);
    Mps vb = mpo_to_vec_mps(b);
    cplx hs = overlap(va, vb);  // <<a|b>> = Tr(a^dag b)
    cplx want = matrix_trace(matmul(adjoint_matrix(to_dense(a)), to_dense(b)));
    CHECK(std::abs(hs - want) < 1e-10);
    Mpo back = vec_mps_to_mpo(va, 2, 2);
    CHECK((to_dense(back) - to_dense(a)).max_abs() < 1e-12);
}

TEST_CASE("mps_from_dense and mpo_from_dense reconstruct their input") {
    std::mt19937_64 rng(193);
    Tensor v = Tensor::random({16}, rng);
    Mps psi = mps_from_dense(v, 4, 2);
    CHECK((to_dense(psi) - v).max_abs() < 1e-11);

    Tensor m = Tensor::random({8, 8}, rng);
    Mpo op = mpo_from_dense(m, 3, 2);
    CHECK((to_dense(op) - m).max_abs() < 1e-11);
}
