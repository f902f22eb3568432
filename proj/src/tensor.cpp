#include "tnmetro/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace tnmetro {

namespace {

using MatrixC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using RowMatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMatC>;
using MapRowConst = Eigen::Map<const RowMatC>;

long shape_product(const std::vector<long>& shape) {
    long n = 1;
    for (long e : shape) n *= e;
    return n;
}

std::string shape_string(const std::vector<long>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

// Column-major Eigen copy of a row-major matrix tensor.
MatrixC to_eigen(const Tensor& t) {
    if (t.rank() != 2) throw DomainError("expected a rank-2 tensor, got rank " + std::to_string(t.rank()));
    return MapRowConst(t.data(), t.extent(0), t.extent(1));
}

Tensor from_eigen(const MatrixC& m) {
    Tensor out({m.rows(), m.cols()});
    MapRow(out.data(), m.rows(), m.cols()) = m;
    return out;
}

} // namespace

Tensor::Tensor(std::vector<long> shape) : shape_(std::move(shape)) {
    for (long e : shape_) {
        if (e <= 0) throw DomainError("tensor extents must be positive, got shape " + shape_string(shape_));
    }
    data_.assign(static_cast<size_t>(shape_product(shape_)), cplx(0.0, 0.0));
}

Tensor Tensor::scalar(cplx value) {
    Tensor t;
    t.data_[0] = value;
    return t;
}

Tensor Tensor::from_data(std::vector<long> shape, std::vector<cplx> data) {
    Tensor t(std::move(shape));
    if (static_cast<long>(data.size()) != t.size()) {
        throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                             shape_string(t.shape_));
    }
    t.data_ = std::move(data);
    return t;
}

Tensor Tensor::random(const std::vector<long>& shape, std::mt19937_64& rng, double scale) {
    Tensor t(shape);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (long i = 0; i < t.size(); ++i) t[i] = cplx(dist(rng), dist(rng));
    return t;
}

long Tensor::extent(long axis) const {
    if (axis < 0 || axis >= rank()) throw DomainError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank()));
    return shape_[static_cast<size_t>(axis)];
}

std::vector<long> Tensor::strides() const {
    std::vector<long> s(shape_.size(), 1);
    for (long i = rank() - 2; i >= 0; --i) s[i] = s[i + 1] * shape_[i + 1];
    return s;
}

size_t Tensor::flat_index(std::initializer_list<long> idx) const {
    if (static_cast<long>(idx.size()) != rank()) {
        throw DomainError("index of length " + std::to_string(idx.size()) + " for rank " + std::to_string(rank()));
    }
    size_t flat = 0;
    long axis = 0;
    for (long i : idx) {
        flat = flat * static_cast<size_t>(shape_[axis]) + static_cast<size_t>(i);
        ++axis;
    }
    return flat;
}

Tensor Tensor::reshape(std::vector<long> new_shape) const {
    if (shape_product(new_shape) != size()) {
        throw DimensionError("reshape from " + shape_string(shape_) + " to " + shape_string(new_shape));
    }
    Tensor t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
}

Tensor Tensor::transpose(const std::vector<long>& perm) const {
    if (static_cast<long>(perm.size()) != rank()) throw DomainError("permutation length mismatch");
    std::vector<bool> seen(perm.size(), false);
    for (long p : perm) {
        if (p < 0 || p >= rank() || seen[static_cast<size_t>(p)]) throw DomainError("invalid axis permutation");
        seen[static_cast<size_t>(p)] = true;
    }
    if (std::is_sorted(perm.begin(), perm.end())) return *this;

    std::vector<long> new_shape(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) new_shape[i] = shape_[static_cast<size_t>(perm[i])];
    Tensor out;
    out.shape_ = new_shape;
    out.data_.resize(data_.size());

    const std::vector<long> in_strides = strides();
    std::vector<long> step(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) step[i] = in_strides[static_cast<size_t>(perm[i])];

    const long r = rank();
    std::vector<long> counter(static_cast<size_t>(r), 0);
    long src = 0;
    const size_t total = data_.size();
    for (size_t dst = 0; dst < total; ++dst) {
        out.data_[dst] = data_[static_cast<size_t>(src)];
        for (long axis = r - 1; axis >= 0; --axis) {
            src += step[static_cast<size_t>(axis)];
            if (++counter[static_cast<size_t>(axis)] < new_shape[static_cast<size_t>(axis)]) break;
            src -= step[static_cast<size_t>(axis)] * new_shape[static_cast<size_t>(axis)];
            counter[static_cast<size_t>(axis)] = 0;
        }
    }
    return out;
}

Tensor Tensor::conjugate() const {
    Tensor t = *this;
    for (auto& v : t.data_) v = std::conj(v);
    return t;
}

cplx Tensor::to_scalar() const {
    if (size() != 1) throw DimensionError("to_scalar on tensor of size " + std::to_string(size()));
    return data_[0];
}

double Tensor::norm() const {
    double acc = 0.0;
    for (const auto& v : data_) acc += std::norm(v);
    return std::sqrt(acc);
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
}

Tensor& Tensor::operator*=(cplx factor) {
    for (auto& v : data_) v *= factor;
    return *this;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (shape_ != other.shape_) throw DimensionError("adding tensors of shapes " + shape_string(shape_) + " and " + shape_string(other.shape_));
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (shape_ != other.shape_) throw DimensionError("subtracting tensors of shapes " + shape_string(shape_) + " and " + shape_string(other.shape_));
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor contract(const Tensor& a, const Tensor& b, const std::vector<std::pair<long, long>>& pairs) {
    std::vector<bool> a_contracted(static_cast<size_t>(a.rank()), false);
    std::vector<bool> b_contracted(static_cast<size_t>(b.rank()), false);
    for (const auto& [ax, bx] : pairs) {
        if (ax < 0 || ax >= a.rank() || bx < 0 || bx >= b.rank()) {
            throw DomainError("contraction axis out of range");
        }
        if (a_contracted[static_cast<size_t>(ax)] || b_contracted[static_cast<size_t>(bx)]) {
            throw DomainError("axis contracted twice");
        }
        if (a.extent(ax) != b.extent(bx)) {
            throw DimensionError("axis " + std::to_string(ax) + " of a (extent " + std::to_string(a.extent(ax)) +
                                 ") vs axis " + std::to_string(bx) + " of b (extent " + std::to_string(b.extent(bx)) + ")");
        }
        a_contracted[static_cast<size_t>(ax)] = true;
        b_contracted[static_cast<size_t>(bx)] = true;
    }

    std::vector<long> a_free, b_free, a_perm, b_perm;
    for (long i = 0; i < a.rank(); ++i) {
        if (!a_contracted[static_cast<size_t>(i)]) { a_free.push_back(i); a_perm.push_back(i); }
    }
    for (const auto& p : pairs) a_perm.push_back(p.first);
    for (const auto& p : pairs) b_perm.push_back(p.second);
    for (long i = 0; i < b.rank(); ++i) {
        if (!b_contracted[static_cast<size_t>(i)]) { b_free.push_back(i); b_perm.push_back(i); }
    }

    Tensor at = a.transpose(a_perm);
    Tensor bt = b.transpose(b_perm);

    long m = 1, k = 1, n = 1;
    std::vector<long> out_shape;
    for (long ax : a_free) { m *= a.extent(ax); out_shape.push_back(a.extent(ax)); }
    for (const auto& p : pairs) k *= a.extent(p.first);
    for (long bx : b_free) { n *= b.extent(bx); out_shape.push_back(b.extent(bx)); }

    Tensor out = out_shape.empty() ? Tensor() : Tensor(out_shape);
    MapRow(out.data(), m, n).noalias() = MapRowConst(at.data(), m, k) * MapRowConst(bt.data(), k, n);
    return out;
}

SvdResult svd_split(const Tensor& t, const std::vector<long>& left_axes, long max_rank, double cutoff) {
    if (t.size() == 0 || t.rank() == 0) throw DomainError("svd_split on empty tensor");
    if (left_axes.empty() || static_cast<long>(left_axes.size()) >= t.rank()) {
        throw DomainError("left_axes must be a nonempty proper subset of the axes");
    }
    std::vector<bool> is_left(static_cast<size_t>(t.rank()), false);
    for (long ax : left_axes) {
        if (ax < 0 || ax >= t.rank() || is_left[static_cast<size_t>(ax)]) throw DomainError("invalid left axis set");
        is_left[static_cast<size_t>(ax)] = true;
    }
    std::vector<long> perm = left_axes;
    std::vector<long> right_axes;
    for (long i = 0; i < t.rank(); ++i) {
        if (!is_left[static_cast<size_t>(i)]) { perm.push_back(i); right_axes.push_back(i); }
    }
    Tensor tt = t.transpose(perm);
    long rows = 1, cols = 1;
    std::vector<long> left_shape, right_shape;
    for (long ax : left_axes) { rows *= t.extent(ax); left_shape.push_back(t.extent(ax)); }
    for (long ax : right_axes) { cols *= t.extent(ax); right_shape.push_back(t.extent(ax)); }

    MatrixC m = MapRowConst(tt.data(), rows, cols);
    Eigen::JacobiSVD<MatrixC> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();

    long full = static_cast<long>(sv.size());
    long keep = 0;
    const double floor = cutoff * (full > 0 ? sv(0) : 0.0);
    for (long i = 0; i < full; ++i) {
        if (max_rank > 0 && keep >= max_rank) break;
        if (i > 0 && sv(i) < floor) break;
        ++keep;
    }
    if (keep == 0) keep = 1;

    double discarded = 0.0;
    for (long i = keep; i < full; ++i) discarded += sv(i) * sv(i);

    SvdResult res;
    res.s.assign(sv.data(), sv.data() + keep);
    res.discarded_weight = discarded;

    MatrixC u = svd.matrixU().leftCols(keep);
    MatrixC vh = svd.matrixV().leftCols(keep).adjoint();
    left_shape.push_back(keep);
    Tensor ut({rows, keep});
    MapRow(ut.data(), rows, keep) = u;
    res.u = ut.reshape(left_shape);
    std::vector<long> vh_shape = {keep};
    vh_shape.insert(vh_shape.end(), right_shape.begin(), right_shape.end());
    Tensor vt({keep, cols});
    MapRow(vt.data(), keep, cols) = vh;
    res.vh = vt.reshape(vh_shape);
    return res;
}

Tensor solve_hermitian(const Tensor& a, const Tensor& b, double regularization) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) throw DomainError("solve_hermitian expects a square matrix");
    const long n = a.extent(0);
    if (b.size() != n) throw DimensionError("solve_hermitian rhs of size " + std::to_string(b.size()) + " for matrix of size " + std::to_string(n));
    if (regularization < 0.0) throw DomainError("regularization must be >= 0");

    MatrixC am = to_eigen(a);
    const double scale = std::max(1.0, am.cwiseAbs().maxCoeff());
    if ((am - am.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw ValidationError("solve_hermitian: matrix is not Hermitian within 1e-8");
    }
    Eigen::SelfAdjointEigenSolver<MatrixC> es((am + am.adjoint()) / 2.0);
    const auto& ev = es.eigenvalues();
    const double lmax = ev(n - 1);
    if (ev(0) < -1e-10 * std::max(1.0, lmax)) {
        throw NumericalError("solve_hermitian: matrix has negative eigenvalue " + std::to_string(ev(0)));
    }
    const double floor = std::max(regularization, 1e-10 * std::max(lmax, 0.0));

    Eigen::Map<const Eigen::VectorXcd> bv(b.data(), n);
    Eigen::VectorXcd proj = es.eigenvectors().adjoint() * bv;
    for (long i = 0; i < n; ++i) {
        proj(i) = (ev(i) > floor && ev(i) > 0.0) ? proj(i) / ev(i) : cplx(0.0, 0.0);
    }
    Eigen::VectorXcd x = es.eigenvectors() * proj;
    Tensor out({n});
    Eigen::Map<Eigen::VectorXcd>(out.data(), n) = x;
    return out.reshape(b.shape());
}

std::pair<double, Tensor> eig_max(const Tensor& a, const Tensor* b) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) throw DomainError("eig_max expects a square matrix");
    const long n = a.extent(0);
    MatrixC am = to_eigen(a);
    const double scale = std::max(1.0, am.cwiseAbs().maxCoeff());
    if ((am - am.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw ValidationError("eig_max: matrix is not Hermitian within 1e-8");
    }
    am = (am + am.adjoint()) / 2.0;

    MatrixC vectors;
    Eigen::VectorXd values;
    if (b == nullptr) {
        Eigen::SelfAdjointEigenSolver<MatrixC> es(am);
        values = es.eigenvalues();
        vectors = es.eigenvectors();
    } else {
        MatrixC bm = to_eigen(*b);
        if (bm.rows() != n) throw DimensionError("metric size does not match matrix");
        bm = (bm + bm.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<MatrixC> bes(bm);
        const double bmax = bes.eigenvalues()(n - 1);
        if (bes.eigenvalues()(0) < 1e-12 * std::max(bmax, 0.0) || bmax <= 0.0) {
            throw MetricError("eig_max: metric is singular beyond the 1e-12 condition floor");
        }
        Eigen::GeneralizedSelfAdjointEigenSolver<MatrixC> es(am, bm);
        values = es.eigenvalues();
        vectors = es.eigenvectors();  // already b-orthonormal
    }

    // Deterministic choice among (near-)degenerate top eigenpairs: the
    // candidate whose |components| are lexicographically largest.
    long best = n - 1;
    const double lmax = values(n - 1);
    const double tol = 1e-12 * std::max(1.0, std::abs(lmax));
    for (long i = n - 2; i >= 0 && values(i) >= lmax - tol; --i) {
        for (long r = 0; r < n; ++r) {
            const double di = std::abs(vectors(r, i)), db = std::abs(vectors(r, best));
            if (std::abs(di - db) > 1e-12) {
                if (di > db) best = i;
                break;
            }
        }
    }

    Eigen::VectorXcd v = vectors.col(best);
    for (long r = 0; r < n; ++r) {
        if (std::abs(v(r)) > 1e-12) {
            v *= std::conj(v(r)) / std::abs(v(r));
            break;
        }
    }
    Tensor out({n});
    Eigen::Map<Eigen::VectorXcd>(out.data(), n) = v;
    return {values(best), out};
}

Tensor matmul(const Tensor& a, const Tensor& b) { return contract(a, b, {{1, 0}}); }

Tensor kron(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw DomainError("kron expects rank-2 tensors");
    Tensor t = contract(a, b, {});  // [ra, ca, rb, cb]
    t = t.transpose({0, 2, 1, 3});
    return t.reshape({a.extent(0) * b.extent(0), a.extent(1) * b.extent(1)});
}

Tensor identity_matrix(long n) {
    Tensor t({n, n});
    for (long i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

cplx matrix_trace(const Tensor& a) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) throw DomainError("trace of non-square matrix");
    cplx acc = 0.0;
    for (long i = 0; i < a.extent(0); ++i) acc += a(i, i);
    return acc;
}

Tensor adjoint_matrix(const Tensor& a) {
    if (a.rank() != 2) throw DomainError("adjoint of non-matrix");
    return a.transpose({1, 0}).conjugate();
}

bool is_hermitian(const Tensor& a, double tol) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) return false;
    Tensor d = a - adjoint_matrix(a);
    return d.max_abs() <= tol * std::max(1.0, a.max_abs());
}

Tensor hermitian_part(const Tensor& a) {
    Tensor h = a + adjoint_matrix(a);
    h *= 0.5;
    return h;
}

Tensor expm_hermitian(const Tensor& a, cplx prefactor) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) throw DomainError("expm_hermitian expects a square matrix");
    MatrixC am = to_eigen(a);
    if ((am - am.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, am.cwiseAbs().maxCoeff())) {
        throw ValidationError("expm_hermitian: matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<MatrixC> es((am + am.adjoint()) / 2.0);
    Eigen::VectorXcd expv(a.extent(0));
    for (long i = 0; i < a.extent(0); ++i) expv(i) = std::exp(prefactor * es.eigenvalues()(i));
    MatrixC r = es.eigenvectors() * expv.asDiagonal() * es.eigenvectors().adjoint();
    return from_eigen(r);
}

} // namespace tnmetro
