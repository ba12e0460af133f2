#pragma once

#include "pinn_ntk/network.hpp"
#include "pinn_ntk/pde.hpp"

#include <utility>
#include <vector>

namespace pinn_ntk {

struct LossConfig {
    double lambda_b = 1.0;
    CollocationGrid grid;

    void validate() const;
};

/// (1/N_c) sum 1/2 r_pde^2 + (lambda/N_b) sum 1/2 r_b^2, evaluated point by
/// point through residual_pde / residual_boundary.
double pinn_loss(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, const LossConfig& cfg);

/// Interior and boundary parts of pinn_loss, the boundary part at lambda = 1.
struct LossTerms {
    double interior;
    double boundary;
};
LossTerms pinn_loss_terms(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                          const LossConfig& cfg);

Vector pinn_loss_grad(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                      const LossConfig& cfg);

/// Batched loss and gradient in one pass; the training path.
double pinn_loss_and_grad(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                          const LossConfig& cfg, Vector* grad);

struct Sample {
    double x;
    double y;
};

/// Mean squared error (1/N) sum (u(x_i) - y_i)^2. No factor 1/2, unlike the
/// PINN loss.
double regression_loss(const ParameterSet& params, const MLPArchitecture& arch, const std::vector<Sample>& samples);
double regression_loss_and_grad(const ParameterSet& params, const MLPArchitecture& arch,
                                const std::vector<Sample>& samples, Vector* grad);

}  // namespace pinn_ntk
