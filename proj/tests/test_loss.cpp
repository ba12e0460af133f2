#include "oracles.hpp"
#include "pinn_ntk/loss.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pinn_ntk;

namespace {

BVPSpec homogeneous_poisson() {
    BVPSpec s;
    s.forcing = [](double) { return 0.0; };
    return s;
}

double rel(const Vector& a, const Vector& b) {
    return (a - b).norm() / b.norm();
}

}  // namespace

TEST(PinnLoss, ZeroWeightNetworkLeavesBoundaryTerm) {
    MLPArchitecture arch{{5, 5}};
    ParameterSet p = zero_parameters(arch);
    const double beta = 0.7;
    p.biases.back()(0) = beta;
    const BVPSpec spec = homogeneous_poisson();
    const LossConfig cfg{3.0, make_grid(spec, 16)};
    EXPECT_NEAR(pinn_loss(spec, p, arch, cfg), 3.0 / 2.0 * beta * beta, 1e-15);
}

TEST(PinnLoss, EqualsDirectResidualSum) {
    MLPArchitecture arch{{6, 6}};
    const ParameterSet p = oracle::random_params(arch, 1);
    const BVPSpec spec = two_scale_darcy_problem(0.1);
    const LossConfig cfg{2.5, make_grid(spec, 20)};
    double interior = 0.0;
    for (double x : cfg.grid.interior) interior += 0.5 * std::pow(residual_pde(spec, p, arch, x), 2);
    double boundary = 0.0;
    for (double s : cfg.grid.boundary) boundary += 0.5 * std::pow(residual_boundary(spec, p, arch, s), 2);
    const double expect = interior / 20.0 + 2.5 / 2.0 * boundary;
    EXPECT_DOUBLE_EQ(pinn_loss(spec, p, arch, cfg), expect);
}

TEST(PinnLoss, AffineInLambda) {
    MLPArchitecture arch{{6}};
    const ParameterSet p = oracle::random_params(arch, 2);
    const BVPSpec spec = freq_principle_problem();
    LossConfig cfg{0.0, make_grid(spec, 32)};
    const double l0 = pinn_loss(spec, p, arch, cfg);
    const LossTerms terms = pinn_loss_terms(spec, p, arch, cfg);
    EXPECT_NEAR(terms.interior, l0, 1e-14 * l0);
    for (double lambda : {0.5, 7.0, 100.0}) {
        cfg.lambda_b = lambda;
        const double l = pinn_loss(spec, p, arch, cfg);
        EXPECT_NEAR(l, l0 + lambda * terms.boundary, 1e-12 * l);
    }
}

TEST(PinnLoss, DuplicatedPointsLeaveInteriorTermUnchanged) {
    MLPArchitecture arch{{4}};
    const ParameterSet p = oracle::random_params(arch, 3);
    const BVPSpec spec = freq_principle_problem();
    LossConfig once{1.0, make_grid(spec, 10)};
    LossConfig twice = once;
    twice.grid.interior.insert(twice.grid.interior.end(), once.grid.interior.begin(), once.grid.interior.end());
    EXPECT_NEAR(pinn_loss_terms(spec, p, arch, twice).interior, pinn_loss_terms(spec, p, arch, once).interior, 1e-14);
}

TEST(PinnLoss, NegativeLambdaRejected) {
    const BVPSpec spec = freq_principle_problem();
    LossConfig cfg{-1.0, make_grid(spec, 4)};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(PinnLossGrad, MatchesFiniteDifferences) {
    for (const BVPSpec& spec : {two_scale_darcy_problem(0.2), freq_principle_problem()}) {
        MLPArchitecture arch{{5, 4}};
        const ParameterSet p = oracle::random_params(arch, 6);
        const LossConfig cfg{10.0, make_grid(spec, 12)};
        const Vector theta = flatten(p);
        const Vector fd = oracle::fd_gradient(
            [&](const Vector& t) { return pinn_loss(spec, unflatten(arch, t), arch, cfg); }, theta, 1e-4);
        EXPECT_LT(rel(pinn_loss_grad(spec, p, arch, cfg), fd), 1e-5);
        Vector g;
        const double l = pinn_loss_and_grad(spec, p, arch, cfg, &g);
        EXPECT_NEAR(l, pinn_loss(spec, p, arch, cfg), 1e-12 * l);
        EXPECT_LT(rel(g, fd), 1e-5);
    }
}

TEST(PinnLossGrad, DirectionalDerivativeConsistency) {
    MLPArchitecture arch{{8, 8}};
    const ParameterSet p = oracle::random_params(arch, 7);
    const BVPSpec spec = two_scale_darcy_problem(0.1);
    const LossConfig cfg{1.0, make_grid(spec, 30)};
    const Vector theta = flatten(p);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    Vector v(theta.size());
    for (auto& e : v) e = n(rng);
    v.normalize();
    const double dir = pinn_loss_grad(spec, p, arch, cfg).dot(v);
    auto along = [&](double h) {
        return pinn_loss(spec, unflatten(arch, Vector(theta + h * v)), arch, cfg);
    };
    const double e1 = std::abs((along(1e-3) - along(-1e-3)) / 2e-3 - dir);
    const double e2 = std::abs((along(5e-4) - along(-5e-4)) / 1e-3 - dir);
    // Second-order: halving h cuts the error about fourfold.
    EXPECT_LT(e2, e1 / 3.0);
}

TEST(PinnLossGrad, ZeroResidualsGiveZeroGradient) {
    MLPArchitecture arch{{3}};
    const ParameterSet p = zero_parameters(arch);
    const BVPSpec spec = homogeneous_poisson();
    const LossConfig cfg{1.0, make_grid(spec, 8)};
    EXPECT_EQ(pinn_loss_grad(spec, p, arch, cfg).norm(), 0.0);
}

TEST(PinnLossGrad, ZeroLambdaDropsBoundaryContribution) {
    MLPArchitecture arch{{5}};
    const ParameterSet p = oracle::random_params(arch, 8);
    const BVPSpec spec = freq_principle_problem();
    BVPSpec shifted = spec;
    shifted.u_lo = 5.0;
    shifted.u_hi = -2.0;
    const LossConfig cfg{0.0, make_grid(spec, 10)};
    EXPECT_EQ(pinn_loss_grad(spec, p, arch, cfg), pinn_loss_grad(shifted, p, arch, cfg));
    const LossConfig weighted{1.0, cfg.grid};
    EXPECT_GT((pinn_loss_grad(spec, p, arch, weighted) - pinn_loss_grad(shifted, p, arch, weighted)).norm(), 1e-3);
}

TEST(RegressionLoss, ClosedFormsAndGradient) {
    MLPArchitecture arch{{4}};
    ParameterSet p = zero_parameters(arch);
    p.biases.back()(0) = 1.5;
    const std::vector<Sample> flat = {{-1.0, 0.5}, {0.0, 0.5}, {2.0, 0.5}};
    EXPECT_DOUBLE_EQ(regression_loss(p, arch, flat), 1.0);

    const ParameterSet q = oracle::random_params(arch, 9);
    std::vector<Sample> exact;
    for (double x : {-1.0, 0.0, 1.0}) exact.push_back({x, forward_value(q, arch, x)});
    EXPECT_EQ(regression_loss(q, arch, exact), 0.0);

    std::vector<Sample> samples;
    for (int i = 0; i < 15; ++i) samples.push_back({-3.0 + 0.4 * i, std::sin(i)});
    const Vector theta = flatten(q);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& t) { return regression_loss(unflatten(arch, t), arch, samples); }, theta, 1e-4);
    Vector g;
    const double l = regression_loss_and_grad(q, arch, samples, &g);
    EXPECT_NEAR(l, regression_loss(q, arch, samples), 1e-13);
    EXPECT_LT(rel(g, fd), 1e-5);
    EXPECT_THROW(regression_loss(q, arch, {}), std::invalid_argument);
}
