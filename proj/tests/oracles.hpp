#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. None of them go through the jet engine's own
// derivative rules except where stated.

#include "pinn_ntk/network.hpp"
#include "pinn_ntk/ntk.hpp"
#include "pinn_ntk/pde.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using pinn_ntk::Matrix;
using pinn_ntk::Vector;

// Sixth-order central differences.
inline double d1(const std::function<double(double)>& f, double x, double h) {
    return (-f(x - 3 * h) + 9 * f(x - 2 * h) - 45 * f(x - h) + 45 * f(x + h) - 9 * f(x + 2 * h) + f(x + 3 * h)) /
           (60 * h);
}

inline double d2(const std::function<double(double)>& f, double x, double h) {
    return (2 * f(x - 3 * h) - 27 * f(x - 2 * h) + 270 * f(x - h) - 490 * f(x) + 270 * f(x + h) -
            27 * f(x + 2 * h) + 2 * f(x + 3 * h)) /
           (180 * h * h);
}

/// Gradient of a scalar function of the flat parameters, one coordinate at a time.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& theta, double h) {
    Vector g(theta.size());
    Vector t = theta;
    for (Eigen::Index l = 0; l < theta.size(); ++l) {
        auto along = [&](double s) {
            t(l) = theta(l) + s;
            const double v = f(t);
            t(l) = theta(l);
            return v;
        };
        g(l) = d1(along, 0.0, h);
    }
    return g;
}

/// Network value evaluated with scalar loops only.
inline double loop_forward(const pinn_ntk::ParameterSet& p, pinn_ntk::Activation act, double x,
                           std::vector<std::vector<double>>* preacts = nullptr) {
    std::vector<double> h = {x};
    for (std::size_t l = 0; l + 1 < p.weights.size(); ++l) {
        const Matrix& w = p.weights[l];
        std::vector<double> z(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            double s = p.biases[l](i);
            for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * h[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(i)] = s;
        }
        if (preacts) preacts->push_back(z);
        for (auto& v : z) v = act == pinn_ntk::Activation::Tanh ? std::tanh(v) : 1.0 / (1.0 + std::exp(-v));
        h = std::move(z);
    }
    const Matrix& w = p.weights.back();
    double out = p.biases.back()(0);
    for (Eigen::Index j = 0; j < w.cols(); ++j) out += w(0, j) * h[static_cast<std::size_t>(j)];
    return out;
}

inline double sigma_prime(pinn_ntk::Activation act, double z) {
    if (act == pinn_ntk::Activation::Tanh) {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 - s);
}

/// du/dx of a three-hidden-layer network as the explicit sum over index
/// paths k3, k2, k1 of
///   W4_{k3} s'(z3_{k3}) W3_{k3 k2} s'(z2_{k2}) W2_{k2 k1} s'(z1_{k1}) W1_{k1}.
inline double chain_rule_path_sum(const pinn_ntk::ParameterSet& p, pinn_ntk::Activation act, double x) {
    std::vector<std::vector<double>> z;
    loop_forward(p, act, x, &z);
    const Matrix &w1 = p.weights[0], &w2 = p.weights[1], &w3 = p.weights[2], &w4 = p.weights[3];
    double total = 0.0;
    for (Eigen::Index k3 = 0; k3 < w3.rows(); ++k3) {
        const double a3 = w4(0, k3) * sigma_prime(act, z[2][static_cast<std::size_t>(k3)]);
        for (Eigen::Index k2 = 0; k2 < w2.rows(); ++k2) {
            const double a2 = a3 * w3(k3, k2) * sigma_prime(act, z[1][static_cast<std::size_t>(k2)]);
            for (Eigen::Index k1 = 0; k1 < w1.rows(); ++k1)
                total += a2 * w2(k2, k1) * sigma_prime(act, z[0][static_cast<std::size_t>(k1)]) * w1(k1, 0);
        }
    }
    return total;
}

/// Glorot weights with small random biases, so every layer is exercised.
inline pinn_ntk::ParameterSet random_params(const pinn_ntk::MLPArchitecture& arch, std::uint64_t seed,
                                            double bias_scale = 0.3) {
    pinn_ntk::ParameterSet p = pinn_ntk::init_glorot(arch, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> n(0.0, bias_scale);
    for (auto& b : p.biases)
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = n(rng);
    return p;
}

/// Jacobians of L u at the interior points and of u at the boundary points,
/// by central differences in each parameter. The spatial derivatives of u
/// come from forward_jet.
inline pinn_ntk::ResidualJacobian fd_residual_jacobian(const pinn_ntk::BVPSpec& spec,
                                                       const pinn_ntk::ParameterSet& params,
                                                       const pinn_ntk::MLPArchitecture& arch,
                                                       const pinn_ntk::CollocationGrid& grid, double h) {
    const Vector theta = pinn_ntk::flatten(params);
    const auto nc = static_cast<Eigen::Index>(grid.interior.size());
    const auto nb = static_cast<Eigen::Index>(grid.boundary.size());
    pinn_ntk::ResidualJacobian j{Matrix(nc, theta.size()), Matrix(nb, theta.size())};
    for (Eigen::Index i = 0; i < nc; ++i) {
        const double x = grid.interior[static_cast<std::size_t>(i)];
        j.pde.row(i) = fd_gradient(
                           [&](const Vector& t) {
                               return pinn_ntk::apply_operator(
                                   spec, pinn_ntk::forward_jet(pinn_ntk::unflatten(arch, t), arch, x), x);
                           },
                           theta, h)
                           .transpose();
    }
    for (Eigen::Index i = 0; i < nb; ++i) {
        const double s = grid.boundary[static_cast<std::size_t>(i)];
        j.boundary.row(i) =
            fd_gradient([&](const Vector& t) { return loop_forward(pinn_ntk::unflatten(arch, t), arch.activation, s); },
                        theta, h)
                .transpose();
    }
    return j;
}

inline double rel_frobenius(const Matrix& a, const Matrix& ref) {
    const double d = ref.norm();
    return d == 0.0 ? (a - ref).norm() : (a - ref).norm() / d;
}

/// L^eps u for the Darcy operator -(a^eps u')' by the product rule, with u'
/// and u'' from central differences and a, a' evaluated analytically.
inline double fd_darcy_operator(const pinn_ntk::BVPSpec& spec, const std::function<double(double)>& u, double x,
                                double h) {
    const auto& c = *spec.coeff;
    const double k = c.nu / spec.epsilon;
    const double a = c.a(k * x);
    const double ax = k * c.a_prime(k * x);
    return -(a * d2(u, x, h) + ax * d1(u, x, h));
}

}  // namespace oracle
