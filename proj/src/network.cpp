#include "pinn_ntk/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pinn_ntk {

std::string to_string(Activation act) {
    switch (act) {
        case Activation::Tanh: return "tanh";
        case Activation::Logistic: return "logistic";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic") return Activation::Logistic;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

ActivationDerivs activation_derivs(Activation act, double z) {
    if (act == Activation::Tanh) {
        const double t = std::tanh(z);
        const double s1 = 1.0 - t * t;
        return {t, s1, -2.0 * t * s1, -2.0 * s1 * (1.0 - 3.0 * t * t)};
    }
    const double s = 1.0 / (1.0 + std::exp(-z));
    const double s1 = s * (1.0 - s);
    return {s, s1, s1 * (1.0 - 2.0 * s), s1 * (1.0 - 6.0 * s + 6.0 * s * s)};
}

void MLPArchitecture::validate() const {
    if (hidden_widths.empty()) throw std::invalid_argument("architecture needs at least one hidden layer");
    for (int w : hidden_widths)
        if (w < 1) throw std::invalid_argument("hidden widths must be positive");
}

std::size_t MLPArchitecture::parameter_count() const {
    std::size_t n = 0;
    int prev = 1;
    for (int w : hidden_widths) {
        n += static_cast<std::size_t>(w) * static_cast<std::size_t>(prev + 1);
        prev = w;
    }
    return n + static_cast<std::size_t>(prev) + 1;
}

std::size_t ParameterSet::size() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
    for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
    return n;
}

void ParameterSet::check_shapes(const MLPArchitecture& arch) const {
    const std::size_t layers = arch.hidden_widths.size() + 1;
    if (weights.size() != layers || biases.size() != layers)
        throw std::invalid_argument("parameter set has wrong number of layers");
    int prev = 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int rows = l + 1 < layers ? arch.hidden_widths[l] : 1;
        if (weights[l].rows() != rows || weights[l].cols() != prev || biases[l].size() != rows)
            throw std::invalid_argument("parameter shape mismatch at layer " + std::to_string(l + 1));
        prev = rows;
    }
}

ParameterSet zero_parameters(const MLPArchitecture& arch) {
    arch.validate();
    ParameterSet p;
    int prev = 1;
    for (std::size_t l = 0; l <= arch.hidden_widths.size(); ++l) {
        const int rows = l < arch.hidden_widths.size() ? arch.hidden_widths[l] : 1;
        p.weights.push_back(Matrix::Zero(rows, prev));
        p.biases.push_back(Vector::Zero(rows));
        prev = rows;
    }
    return p;
}

Vector flatten(const ParameterSet& params) {
    Vector flat(static_cast<Eigen::Index>(params.size()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const Matrix& w = params.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) flat(k++) = w(i, j);
        for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) flat(k++) = params.biases[l](i);
    }
    return flat;
}

ParameterSet unflatten(const MLPArchitecture& arch, std::span<const double> flat) {
    if (flat.size() != arch.parameter_count())
        throw std::invalid_argument("flat parameter vector has length " + std::to_string(flat.size()) +
                                    ", expected " + std::to_string(arch.parameter_count()));
    ParameterSet p = zero_parameters(arch);
    std::size_t k = 0;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        Matrix& w = p.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat[k++];
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = flat[k++];
    }
    return p;
}

ParameterSet init_normal(const MLPArchitecture& arch, std::uint64_t seed) {
    ParameterSet p = zero_parameters(arch);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    // Draw order is the flatten order.
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) p.weights[l](i, j) = dist(rng);
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = dist(rng);
    }
    return p;
}

ParameterSet init_glorot(const MLPArchitecture& arch, std::uint64_t seed) {
    ParameterSet p = zero_parameters(arch);
    std::mt19937_64 rng(seed);
    for (auto& w : p.weights) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
    return p;
}

double forward_value(const ParameterSet& params, const MLPArchitecture& arch, double x) {
    params.check_shapes(arch);
    Vector h = Vector::Constant(1, x);
    const std::size_t hidden = arch.hidden_widths.size();
    for (std::size_t l = 0; l < hidden; ++l) {
        Vector z = params.weights[l] * h + params.biases[l];
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activation_derivs(arch.activation, z(i)).s0;
        h = std::move(z);
    }
    return (params.weights[hidden] * h)(0) + params.biases[hidden](0);
}

Jet2 forward_jet(const ParameterSet& params, const MLPArchitecture& arch, double x) {
    const JetTape tape(params, arch, std::span<const double>(&x, 1));
    return {tape.output().v(0), tape.output().d1(0), tape.output().d2(0)};
}

ParamGradJet param_grad_jet(const ParameterSet& params, const MLPArchitecture& arch, double x) {
    const JetTape tape(params, arch, std::span<const double>(&x, 1));
    const double one = 1.0;
    const std::span<const double> unit(&one, 1);
    return {tape.vjp(unit, {}, {}), tape.vjp({}, unit, {}), tape.vjp({}, {}, unit)};
}

namespace {

void fill_activation(Activation act, const Matrix& z, Matrix& h0, Matrix& s1, Matrix& s2, Matrix& s3) {
    if (act == Activation::Tanh) {
        h0 = z.array().tanh().matrix();
        s1 = (1.0 - h0.array().square()).matrix();
        s2 = (-2.0 * h0.array() * s1.array()).matrix();
        s3 = (-2.0 * s1.array() * (1.0 - 3.0 * h0.array().square())).matrix();
    } else {
        h0 = (1.0 / (1.0 + (-z.array()).exp())).matrix();
        s1 = (h0.array() * (1.0 - h0.array())).matrix();
        s2 = (s1.array() * (1.0 - 2.0 * h0.array())).matrix();
        s3 = (s1.array() * (1.0 - 6.0 * h0.array() + 6.0 * h0.array().square())).matrix();
    }
}

}  // namespace

JetTape::JetTape(const ParameterSet& params, const MLPArchitecture& arch, std::span<const double> xs)
    : params_(params), act_(arch.activation) {
    params.check_shapes(arch);
    const auto batch = static_cast<Eigen::Index>(xs.size());
    x_ = Eigen::Map<const Eigen::RowVectorXd>(xs.data(), batch);
    const std::size_t hidden = arch.hidden_widths.size();
    z1_.resize(hidden);
    z2_.resize(hidden);
    s1_.resize(hidden);
    s2_.resize(hidden);
    s3_.resize(hidden);
    h0_.resize(hidden);
    h1_.resize(hidden);
    h2_.resize(hidden);

    for (std::size_t l = 0; l < hidden; ++l) {
        const Matrix& w = params.weights[l];
        Matrix z0;
        if (l == 0) {
            // Seed jet (x, 1, 0).
            z0 = w * x_;
            z0.colwise() += params.biases[0];
            z1_[0] = w.col(0).replicate(1, batch);
            z2_[0] = Matrix::Zero(w.rows(), batch);
        } else {
            z0.noalias() = w * h0_[l - 1];
            z0.colwise() += params.biases[l];
            z1_[l].noalias() = w * h1_[l - 1];
            z2_[l].noalias() = w * h2_[l - 1];
        }
        fill_activation(act_, z0, h0_[l], s1_[l], s2_[l], s3_[l]);
        h1_[l] = (s1_[l].array() * z1_[l].array()).matrix();
        h2_[l] = (s2_[l].array() * z1_[l].array().square() + s1_[l].array() * z2_[l].array()).matrix();
    }

    const Matrix& w_out = params.weights[hidden];
    const double b_out = params.biases[hidden](0);
    out_.v = (w_out * h0_[hidden - 1]).transpose();
    out_.v.array() += b_out;
    out_.d1 = (w_out * h1_[hidden - 1]).transpose();
    out_.d2 = (w_out * h2_[hidden - 1]).transpose();
}

Vector JetTape::vjp(std::span<const double> seed_v, std::span<const double> seed_d1,
                    std::span<const double> seed_d2) const {
    const Eigen::Index batch = x_.size();
    auto seed_row = [batch](std::span<const double> s) -> Eigen::RowVectorXd {
        if (s.empty()) return Eigen::RowVectorXd::Zero(batch);
        if (static_cast<Eigen::Index>(s.size()) != batch) throw std::invalid_argument("seed length mismatch");
        return Eigen::Map<const Eigen::RowVectorXd>(s.data(), batch);
    };
    const Eigen::RowVectorXd sv = seed_row(seed_v);
    const Eigen::RowVectorXd sd1 = seed_row(seed_d1);
    const Eigen::RowVectorXd sd2 = seed_row(seed_d2);

    const std::size_t hidden = h0_.size();
    std::vector<Matrix> w_grad(hidden + 1);
    std::vector<Vector> b_grad(hidden + 1);

    // Output layer.
    const Matrix& w_out = params_.weights[hidden];
    w_grad[hidden] = sv * h0_[hidden - 1].transpose() + sd1 * h1_[hidden - 1].transpose() +
                     sd2 * h2_[hidden - 1].transpose();
    b_grad[hidden] = Vector::Constant(1, sv.sum());
    Matrix a0 = w_out.transpose() * sv;
    Matrix a1 = w_out.transpose() * sd1;
    Matrix a2 = w_out.transpose() * sd2;

    for (std::size_t l = hidden; l-- > 0;) {
        const auto s1 = s1_[l].array();
        const auto s2 = s2_[l].array();
        const auto s3 = s3_[l].array();
        const auto z1 = z1_[l].array();
        const auto z2 = z2_[l].array();
        const Matrix g0 =
            (a0.array() * s1 + a1.array() * s2 * z1 + a2.array() * (s3 * z1.square() + s2 * z2)).matrix();
        const Matrix g1 = (a1.array() * s1 + 2.0 * a2.array() * s2 * z1).matrix();
        const Matrix g2 = (a2.array() * s1).matrix();

        b_grad[l] = g0.rowwise().sum();
        if (l == 0) {
            w_grad[0] = g0 * x_.transpose() + g1.rowwise().sum();
        } else {
            w_grad[l].noalias() = g0 * h0_[l - 1].transpose();
            w_grad[l].noalias() += g1 * h1_[l - 1].transpose();
            w_grad[l].noalias() += g2 * h2_[l - 1].transpose();
            const Matrix& w = params_.weights[l];
            a0.noalias() = w.transpose() * g0;
            a1.noalias() = w.transpose() * g1;
            a2.noalias() = w.transpose() * g2;
        }
    }

    Vector flat(static_cast<Eigen::Index>(params_.size()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l <= hidden; ++l) {
        const Matrix& w = w_grad[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) flat(k++) = w(i, j);
        for (Eigen::Index i = 0; i < b_grad[l].size(); ++i) flat(k++) = b_grad[l](i);
    }
    return flat;
}

}  // namespace pinn_ntk
