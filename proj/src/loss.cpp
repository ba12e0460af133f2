#include "pinn_ntk/loss.hpp"

#include <stdexcept>

namespace pinn_ntk {

void LossConfig::validate() const {
    if (!(lambda_b >= 0.0)) throw std::invalid_argument("lambda_b must be nonnegative");
    if (grid.interior.empty()) throw std::invalid_argument("collocation grid has no interior points");
    if (grid.boundary.empty()) throw std::invalid_argument("collocation grid has no boundary points");
}

LossTerms pinn_loss_terms(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                          const LossConfig& cfg) {
    cfg.validate();
    double interior = 0.0;
    for (double x : cfg.grid.interior) {
        const double r = residual_pde(spec, params, arch, x);
        interior += 0.5 * r * r;
    }
    double boundary = 0.0;
    for (double s : cfg.grid.boundary) {
        const double r = residual_boundary(spec, params, arch, s);
        boundary += 0.5 * r * r;
    }
    return {interior / static_cast<double>(cfg.grid.interior.size()),
            boundary / static_cast<double>(cfg.grid.boundary.size())};
}

double pinn_loss(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, const LossConfig& cfg) {
    const LossTerms t = pinn_loss_terms(spec, params, arch, cfg);
    return t.interior + cfg.lambda_b * t.boundary;
}

double pinn_loss_and_grad(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                          const LossConfig& cfg, Vector* grad) {
    cfg.validate();
    const auto& xs = cfg.grid.interior;
    const auto& ss = cfg.grid.boundary;
    const double inv_nc = 1.0 / static_cast<double>(xs.size());
    const double w_b = cfg.lambda_b / static_cast<double>(ss.size());

    const JetTape interior(params, arch, xs);
    const JetTape boundary(params, arch, ss);

    std::vector<double> seed1(xs.size()), seed2(xs.size());
    double interior_sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto [c2, c1] = operator_coefficients(spec, xs[i]);
        const auto k = static_cast<Eigen::Index>(i);
        const double r = c2 * interior.output().d2(k) + c1 * interior.output().d1(k) - spec.forcing(xs[i]);
        interior_sum += 0.5 * r * r;
        seed1[i] = inv_nc * r * c1;
        seed2[i] = inv_nc * r * c2;
    }
    std::vector<double> seed_b(ss.size());
    double boundary_sum = 0.0;
    for (std::size_t i = 0; i < ss.size(); ++i) {
        const double r = boundary.output().v(static_cast<Eigen::Index>(i)) - boundary_value(spec, ss[i]);
        boundary_sum += 0.5 * r * r;
        seed_b[i] = w_b * r;
    }
    if (grad) {
        *grad = interior.vjp({}, seed1, seed2);
        *grad += boundary.vjp(seed_b, {}, {});
    }
    return inv_nc * interior_sum + w_b * boundary_sum;
}

Vector pinn_loss_grad(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                      const LossConfig& cfg) {
    Vector g;
    pinn_loss_and_grad(spec, params, arch, cfg, &g);
    return g;
}

double regression_loss(const ParameterSet& params, const MLPArchitecture& arch, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("regression needs at least one sample");
    double sum = 0.0;
    for (const auto& s : samples) {
        const double r = forward_value(params, arch, s.x) - s.y;
        sum += r * r;
    }
    return sum / static_cast<double>(samples.size());
}

double regression_loss_and_grad(const ParameterSet& params, const MLPArchitecture& arch,
                                const std::vector<Sample>& samples, Vector* grad) {
    if (samples.empty()) throw std::invalid_argument("regression needs at least one sample");
    std::vector<double> xs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) xs[i] = samples[i].x;
    const JetTape tape(params, arch, xs);
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    std::vector<double> seed(samples.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double r = tape.output().v(static_cast<Eigen::Index>(i)) - samples[i].y;
        sum += r * r;
        seed[i] = 2.0 * inv_n * r;
    }
    if (grad) *grad = tape.vjp(seed, {}, {});
    return sum * inv_n;
}

}  // namespace pinn_ntk
