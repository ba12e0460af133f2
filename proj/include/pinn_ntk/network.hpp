#pragma once

// Fully connected scalar networks u: R -> R with exact propagation of the
// first two spatial derivatives and reverse accumulation of parameter
// gradients through those derivatives.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pinn_ntk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { Tanh, Logistic };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// sigma and its first three derivatives at one argument.
struct ActivationDerivs {
    double s0, s1, s2, s3;
};
ActivationDerivs activation_derivs(Activation act, double z);

/// Input and output dimension are fixed to 1.
struct MLPArchitecture {
    std::vector<int> hidden_widths;
    Activation activation = Activation::Tanh;

    void validate() const;
    int depth() const { return static_cast<int>(hidden_widths.size()); }
    /// Total number of trainable entries N_p.
    std::size_t parameter_count() const;
};

/// Weights W^(1..L+1) and biases b^(1..L+1). W^(1) is d_1 x 1, W^(L+1) is
/// 1 x d_L and b^(L+1) is a length-1 vector.
struct ParameterSet {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    std::size_t size() const;
    /// Throws std::invalid_argument when shapes disagree with arch.
    void check_shapes(const MLPArchitecture& arch) const;
    double output_bias() const { return biases.back()(0); }
};

/// Flattening order: layer by layer from the input side; within a layer the
/// weight matrix (row-major) precedes the bias vector.
Vector flatten(const ParameterSet& params);
ParameterSet unflatten(const MLPArchitecture& arch, std::span<const double> flat);
inline ParameterSet unflatten(const MLPArchitecture& arch, const Vector& flat) {
    return unflatten(arch, std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
}

ParameterSet zero_parameters(const MLPArchitecture& arch);

/// Every entry an independent N(0,1) draw from std::mt19937_64(seed).
ParameterSet init_normal(const MLPArchitecture& arch, std::uint64_t seed);

/// Weights uniform on +-sqrt(6/(fan_in+fan_out)), biases zero.
ParameterSet init_glorot(const MLPArchitecture& arch, std::uint64_t seed);

/// (u, du/dx, d2u/dx2) at one point.
struct Jet2 {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    static Jet2 seed(double x) { return {x, 1.0, 0.0}; }
};

/// Parameter gradients of the three jet components, flatten order.
struct ParamGradJet {
    Vector dv;
    Vector dd1;
    Vector dd2;
};

double forward_value(const ParameterSet& params, const MLPArchitecture& arch, double x);
Jet2 forward_jet(const ParameterSet& params, const MLPArchitecture& arch, double x);
ParamGradJet param_grad_jet(const ParameterSet& params, const MLPArchitecture& arch, double x);

/// Batched jets over many inputs. Row 0 of each output is one point.
struct JetBatch {
    Vector v;
    Vector d1;
    Vector d2;
};

/// Intermediate values kept from a batched forward pass for reverse sweeps.
class JetTape {
public:
    JetTape(const ParameterSet& params, const MLPArchitecture& arch, std::span<const double> xs);

    const JetBatch& output() const { return out_; }
    std::size_t batch_size() const { return static_cast<std::size_t>(x_.size()); }

    /// Gradient of sum_i (sv_i * v_i + s1_i * d1_i + s2_i * d2_i) with
    /// respect to the flattened parameters. Any seed span may be empty,
    /// meaning all-zero.
    Vector vjp(std::span<const double> seed_v, std::span<const double> seed_d1,
               std::span<const double> seed_d2) const;

private:
    ParameterSet params_;
    Activation act_;
    Eigen::RowVectorXd x_;
    // Per hidden layer, each width x batch: pre-activation derivative jets,
    // activation derivatives at the pre-activation, post-activation jets.
    std::vector<Matrix> z1_, z2_;
    std::vector<Matrix> s1_, s2_, s3_;
    std::vector<Matrix> h0_, h1_, h2_;
    JetBatch out_;
};

}  // namespace pinn_ntk
