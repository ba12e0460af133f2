#pragma once

// Residual vector y(theta) and the neural tangent kernel K governing
// dy/dt = -K y under the gradient flow dtheta/dt = -grad L.

#include "pinn_ntk/loss.hpp"
#include "pinn_ntk/network.hpp"
#include "pinn_ntk/pde.hpp"

#include <string>

namespace pinn_ntk {

struct ResidualVector {
    Vector pde;       // r_pde at the interior points, grid order
    Vector boundary;  // r_b at the boundary points

    /// Interior entries first, then boundary entries.
    Vector stacked() const;
};

ResidualVector residual_vector(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                               const CollocationGrid& grid);

/// With J_pde (N_c x N_p) the parameter Jacobian of L u at the interior
/// points and J_b (N_b x N_p) that of u at the boundary points:
///   k_uu = J_pde J_pde^T / N_c        k_ub = (lambda/N_b) J_pde J_b^T
///   k_bu = J_b J_pde^T / N_c          k_bb = (lambda/N_b) J_b J_b^T
/// so that dy/dt = -K y holds exactly for the loss gradient.
struct NTKMatrix {
    Matrix k_uu;
    Matrix k_ub;
    Matrix k_bu;
    Matrix k_bb;
    int n_c = 0;
    int n_b = 0;
    double lambda_b = 1.0;

    Matrix full() const;
    /// K y for y stacked interior-first.
    Vector apply(const Vector& y) const;
};

/// Rows of J_pde and J_b, built from param_grad_jet.
struct ResidualJacobian {
    Matrix pde;
    Matrix boundary;
};
ResidualJacobian residual_jacobian(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                                   const CollocationGrid& grid);

NTKMatrix assemble_ntk(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                       const LossConfig& cfg);

double frobenius_norm(const Matrix& m);
double frobenius_norm(const NTKMatrix& k);

/// All eigenvalues of a symmetric matrix, descending, by cyclic Jacobi
/// rotations. The input is symmetrized by averaging with its transpose.
/// Throws std::invalid_argument on non-finite entries or asymmetry beyond
/// 1e-8 relative.
Vector sym_eigenvalues(const Matrix& a);

struct JacobiStats {
    int sweeps = 0;
    double off_norm = 0.0;
};
Vector sym_eigenvalues(const Matrix& a, JacobiStats* stats);

/// lambda_max / (smallest eigenvalue above rel_floor * lambda_max).
double stiffness_ratio(const Vector& eigenvalues_desc, double rel_floor = 1e-10);

struct FlowCheckReport {
    bool inconclusive = false;
    double eta = 0.0;
    double ratio = 0.0;     // |(y(theta+) - y(theta))/eta + K y| / |K y|
    double ky_norm = 0.0;
    std::string note;
};

/// One explicit Euler step theta+ = theta - eta grad L, compared against the
/// kernel prediction -K y.
FlowCheckReport flow_consistency_check(const BVPSpec& spec, const ParameterSet& params,
                                       const MLPArchitecture& arch, const LossConfig& cfg, double eta);

/// 1e-6 / |grad L|.
double default_flow_eta(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                        const LossConfig& cfg);

}  // namespace pinn_ntk
