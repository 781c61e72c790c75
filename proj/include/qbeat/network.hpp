#pragma once

// Passive linear mode transforms. Matrices map input-mode coefficients
// (columns) to output modes (rows).

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qbeat/error.hpp"

namespace qbeat {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct UnitarityCheck {
    bool unitary = false;
    double deviation = 0.0;  // max |(M^dagger M - I)_ij|
};

inline UnitarityCheck is_unitary(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) throw ParameterError("unitarity check needs a square matrix");
    const CMatrix gram = m.adjoint() * m - CMatrix::Identity(m.rows(), m.cols());
    const double dev = m.size() == 0 ? 0.0 : gram.cwiseAbs().maxCoeff();
    return {dev <= tol, dev};
}

/// Square complex matrix that passed a unitarity check on construction.
class UnitaryMatrix {
public:
    static constexpr double kDefaultTolerance = 1e-12;

    explicit UnitaryMatrix(CMatrix m, double tol = kDefaultTolerance) : m_(std::move(m)), tol_(tol) {
        if (m_.rows() == 0) throw ParameterError("unitary matrix must have positive dimension");
        const auto check = is_unitary(m_, tol_);
        if (!check.unitary) {
            throw ValidationError("matrix is not unitary: max deviation " +
                                  std::to_string(check.deviation) + " exceeds " +
                                  std::to_string(tol_));
        }
        deviation_ = check.deviation;
    }

    static UnitaryMatrix identity(std::size_t dim) {
        return UnitaryMatrix(CMatrix::Identity(static_cast<Eigen::Index>(dim),
                                               static_cast<Eigen::Index>(dim)));
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const CMatrix& matrix() const { return m_; }
    std::complex<double> operator()(std::size_t row, std::size_t col) const {
        return m_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
    double tolerance() const { return tol_; }
    double deviation() const { return deviation_; }

private:
    CMatrix m_;
    double tol_;
    double deviation_ = 0.0;
};

/// The 50:50 splitter used throughout the device models:
///   out1 = (-in1 + in2) / sqrt2,   out2 = (in1 + in2) / sqrt2.
/// The minus sign sits on the first input's contribution to the first output.
inline UnitaryMatrix symmetric_beam_splitter() {
    const double h = 1.0 / std::numbers::sqrt2;
    CMatrix m(2, 2);
    m << -h, h, h, h;
    return UnitaryMatrix(m);
}

inline CVector apply_transform(const UnitaryMatrix& u, const CVector& amps) {
    if (static_cast<std::size_t>(amps.size()) != u.dim()) {
        throw ParameterError("amplitude vector has length " + std::to_string(amps.size()) +
                             ", transform has dimension " + std::to_string(u.dim()));
    }
    return u.matrix() * amps;
}

/// One two-mode element of a triangular mesh. Acting on modes (i, j) it is
///   [ e^{i phase} cos(theta)   -sin(theta) ]
///   [ e^{i phase} sin(theta)    cos(theta) ]
/// i.e. an input phase on mode i followed by a real rotation.
struct MeshStage {
    std::size_t mode_i = 0;
    std::size_t mode_j = 1;
    double mixing_angle = 0.0;
    double phase = 0.0;
};

/// Stages in the order light meets them, then a diagonal output phase screen.
struct MeshPlan {
    std::size_t dim = 0;
    std::vector<MeshStage> stages;
    std::vector<double> output_phases;
};

namespace detail {

inline Eigen::Matrix2cd stage_block(const MeshStage& s) {
    const std::complex<double> e = std::polar(1.0, s.phase);
    const double c = std::cos(s.mixing_angle);
    const double sn = std::sin(s.mixing_angle);
    Eigen::Matrix2cd b;
    b << e * c, -sn, e * sn, c;
    return b;
}

// Left-multiplies rows (i, j) of m by the 2x2 block.
inline void apply_rows(CMatrix& m, std::size_t i, std::size_t j, const Eigen::Matrix2cd& b) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const auto x = m(ii, c);
        const auto y = m(jj, c);
        m(ii, c) = b(0, 0) * x + b(0, 1) * y;
        m(jj, c) = b(1, 0) * x + b(1, 1) * y;
    }
}

// Right-multiplies columns (i, j) of m by the 2x2 block.
inline void apply_cols(CMatrix& m, std::size_t i, std::size_t j, const Eigen::Matrix2cd& b) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto x = m(r, ii);
        const auto y = m(r, jj);
        m(r, ii) = x * b(0, 0) + y * b(1, 0);
        m(r, jj) = x * b(0, 1) + y * b(1, 1);
    }
}

}  // namespace detail

inline UnitaryMatrix reck_reconstruct(const MeshPlan& plan) {
    if (plan.dim == 0) throw ParameterError("mesh plan dimension must be positive");
    if (!plan.output_phases.empty() && plan.output_phases.size() != plan.dim) {
        throw ParameterError("mesh plan has " + std::to_string(plan.output_phases.size()) +
                             " output phases for dimension " + std::to_string(plan.dim));
    }
    const auto n = static_cast<Eigen::Index>(plan.dim);
    CMatrix u = CMatrix::Identity(n, n);
    for (const auto& s : plan.stages) {
        if (s.mode_i >= plan.dim || s.mode_j >= plan.dim || s.mode_i == s.mode_j) {
            throw ParameterError("mesh stage references modes (" + std::to_string(s.mode_i) + ", " +
                                 std::to_string(s.mode_j) + ") in dimension " +
                                 std::to_string(plan.dim));
        }
        detail::apply_rows(u, s.mode_i, s.mode_j, detail::stage_block(s));
    }
    for (std::size_t k = 0; k < plan.output_phases.size(); ++k) {
        u.row(static_cast<Eigen::Index>(k)) *= std::polar(1.0, plan.output_phases[k]);
    }
    return UnitaryMatrix(u, 1e-10);
}

/// Triangular factorization U = D * T_K ... T_1. Rows are cleared from the
/// bottom up; within row r the sub-diagonal entries are nulled left to right
/// by rotating neighbouring columns (c, c+1).
inline MeshPlan reck_decompose(const UnitaryMatrix& u) {
    const auto check = is_unitary(u.matrix(), 1e-10);
    if (!check.unitary) {
        throw ValidationError("reck_decompose needs a unitary input (deviation " +
                              std::to_string(check.deviation) + ")");
    }
    const std::size_t n = u.dim();
    CMatrix work = u.matrix();
    std::vector<MeshStage> nulling;
    nulling.reserve(n * (n - 1) / 2);

    for (std::size_t row = n; row-- > 1;) {
        const auto r = static_cast<Eigen::Index>(row);
        for (std::size_t col = 0; col < row; ++col) {
            const auto c = static_cast<Eigen::Index>(col);
            const auto a = work(r, c);
            const auto b = work(r, c + 1);
            MeshStage s{col, col + 1, 0.0, 0.0};
            if (std::abs(a) > 0.0) {
                s.mixing_angle = std::atan2(std::abs(a), std::abs(b));
                s.phase = std::arg(a) - (std::abs(b) > 0.0 ? std::arg(b) : 0.0);
            }
            // work <- work * T^dagger zeroes work(r, c).
            detail::apply_cols(work, col, col + 1, detail::stage_block(s).adjoint());
            work(r, c) = 0.0;
            nulling.push_back(s);
        }
    }

    MeshPlan plan;
    plan.dim = n;
    plan.stages = std::move(nulling);
    plan.output_phases.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        plan.output_phases[k] = std::arg(work(kk, kk));
    }
    return plan;
}

/// Haar-distributed unitary from QR of a complex Gaussian matrix, with the
/// R-diagonal phases folded back into Q. Deterministic for a given seed.
inline UnitaryMatrix random_unitary(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ParameterError("random_unitary needs a positive dimension");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(dim);
    CMatrix z(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z(r, c) = {re, im};
        }
    }
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
    const CMatrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto d = rmat(k, k);
        if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
    }
    return UnitaryMatrix(q);
}

}  // namespace qbeat
