#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qbeat/network.hpp"

using namespace qbeat;
using Complex = std::complex<double>;

TEST(Network, SymmetricSplitterEntries) {
    const auto bs = symmetric_beam_splitter();
    const double h = 1.0 / std::sqrt(2.0);
    EXPECT_DOUBLE_EQ(bs(0, 0).real(), -h);
    EXPECT_DOUBLE_EQ(bs(0, 1).real(), h);
    EXPECT_DOUBLE_EQ(bs(1, 0).real(), h);
    EXPECT_DOUBLE_EQ(bs(1, 1).real(), h);
    EXPECT_LT(bs.deviation(), 1e-15);
}

TEST(Network, RejectsNonUnitary) {
    CMatrix m(2, 2);
    m << 1, 1, 0, 1;
    EXPECT_THROW(UnitaryMatrix{m}, ValidationError);
    EXPECT_THROW(UnitaryMatrix{CMatrix(0, 0)}, ParameterError);
}

TEST(Network, ApplyTransformPreservesNorm) {
    const auto u = random_unitary(5, 7);
    CVector v(5);
    v << Complex(1, 2), Complex(-0.5, 0), Complex(0, 0.3), Complex(2, -1), Complex(0.1, 0.1);
    const auto w = apply_transform(u, v);
    EXPECT_NEAR(w.norm() / v.norm(), 1.0, 1e-12);
    EXPECT_THROW(apply_transform(u, CVector(3)), ParameterError);
}

TEST(Network, SplitterPlanHasOneStage) {
    const auto plan = reck_decompose(symmetric_beam_splitter());
    ASSERT_EQ(plan.stages.size(), 1u);
    EXPECT_NEAR(plan.stages[0].mixing_angle, std::numbers::pi / 4.0, 1e-15);
    EXPECT_NEAR(plan.stages[0].phase, 0.0, 1e-15);
    ASSERT_EQ(plan.output_phases.size(), 2u);
    EXPECT_NEAR(std::abs(plan.output_phases[0]), std::numbers::pi, 1e-15);
    EXPECT_NEAR(plan.output_phases[1], 0.0, 1e-15);
}

TEST(Network, StageCountIsTriangular) {
    for (std::size_t n = 1; n <= 6; ++n) {
        EXPECT_EQ(reck_decompose(random_unitary(n, n)).stages.size(), n * (n - 1) / 2);
    }
}

TEST(Network, RoundTripRandomUnitaries) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto u = random_unitary(2 + seed % 7, seed);
        const auto back = reck_reconstruct(reck_decompose(u));
        EXPECT_LT((back.matrix() - u.matrix()).cwiseAbs().maxCoeff(), 1e-12) << seed;
    }
}

TEST(Network, RoundTripPermutationAndIdentity) {
    CMatrix p = CMatrix::Zero(4, 4);
    p(0, 2) = p(1, 0) = p(2, 3) = p(3, 1) = 1.0;
    const UnitaryMatrix perm(p);
    EXPECT_LT((reck_reconstruct(reck_decompose(perm)).matrix() - p).cwiseAbs().maxCoeff(), 1e-14);
    const auto id = UnitaryMatrix::identity(3);
    EXPECT_LT((reck_reconstruct(reck_decompose(id)).matrix() - id.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Network, RandomUnitaryIsDeterministic) {
    EXPECT_EQ(random_unitary(4, 99).matrix(), random_unitary(4, 99).matrix());
    EXPECT_NE(random_unitary(4, 99).matrix(), random_unitary(4, 100).matrix());
}

TEST(Network, ReconstructRejectsBadPlans) {
    MeshPlan bad;
    bad.dim = 2;
    bad.stages.push_back({0, 2, 0.1, 0.0});
    EXPECT_THROW(reck_reconstruct(bad), ParameterError);
    MeshPlan phases;
    phases.dim = 3;
    phases.output_phases = {0.0};
    EXPECT_THROW(reck_reconstruct(phases), ParameterError);
}
