#include "pinn_ntk/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pinn_ntk {

Vector ResidualVector::stacked() const {
    Vector y(pde.size() + boundary.size());
    y << pde, boundary;
    return y;
}

ResidualVector residual_vector(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                               const CollocationGrid& grid) {
    ResidualVector r;
    r.pde.resize(static_cast<Eigen::Index>(grid.interior.size()));
    r.boundary.resize(static_cast<Eigen::Index>(grid.boundary.size()));
    for (std::size_t i = 0; i < grid.interior.size(); ++i)
        r.pde(static_cast<Eigen::Index>(i)) = residual_pde(spec, params, arch, grid.interior[i]);
    for (std::size_t i = 0; i < grid.boundary.size(); ++i)
        r.boundary(static_cast<Eigen::Index>(i)) = residual_boundary(spec, params, arch, grid.boundary[i]);
    return r;
}

Matrix NTKMatrix::full() const {
    Matrix k(n_c + n_b, n_c + n_b);
    k << k_uu, k_ub, k_bu, k_bb;
    return k;
}

Vector NTKMatrix::apply(const Vector& y) const {
    if (y.size() != n_c + n_b) throw std::invalid_argument("residual vector length does not match kernel");
    const auto yu = y.head(n_c);
    const auto yb = y.tail(n_b);
    Vector out(n_c + n_b);
    out.head(n_c) = k_uu * yu + k_ub * yb;
    out.tail(n_b) = k_bu * yu + k_bb * yb;
    return out;
}

ResidualJacobian residual_jacobian(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                                   const CollocationGrid& grid) {
    const auto n_p = static_cast<Eigen::Index>(arch.parameter_count());
    ResidualJacobian jac;
    jac.pde.resize(static_cast<Eigen::Index>(grid.interior.size()), n_p);
    jac.boundary.resize(static_cast<Eigen::Index>(grid.boundary.size()), n_p);
    for (std::size_t i = 0; i < grid.interior.size(); ++i) {
        const double x = grid.interior[i];
        const ParamGradJet g = param_grad_jet(params, arch, x);
        const auto [c2, c1] = operator_coefficients(spec, x);
        // L is linear in the jet, so d(L u)/dtheta = c2 du''/dtheta + c1 du'/dtheta.
        jac.pde.row(static_cast<Eigen::Index>(i)) = (c2 * g.dd2 + c1 * g.dd1).transpose();
    }
    for (std::size_t i = 0; i < grid.boundary.size(); ++i)
        jac.boundary.row(static_cast<Eigen::Index>(i)) = param_grad_jet(params, arch, grid.boundary[i]).dv.transpose();
    return jac;
}

namespace {

// alpha * A A^T with bit-exact symmetry.
Matrix gram(const Matrix& a, double alpha) {
    Matrix g = Matrix::Zero(a.rows(), a.rows());
    g.selfadjointView<Eigen::Lower>().rankUpdate(a, alpha);
    return g.selfadjointView<Eigen::Lower>();
}

}  // namespace

NTKMatrix assemble_ntk(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                       const LossConfig& cfg) {
    cfg.validate();
    const ResidualJacobian jac = residual_jacobian(spec, params, arch, cfg.grid);
    NTKMatrix k;
    k.n_c = static_cast<int>(cfg.grid.interior.size());
    k.n_b = static_cast<int>(cfg.grid.boundary.size());
    k.lambda_b = cfg.lambda_b;
    const double inv_nc = 1.0 / static_cast<double>(k.n_c);
    const double w_b = cfg.lambda_b / static_cast<double>(k.n_b);
    k.k_uu = gram(jac.pde, inv_nc);
    k.k_bb = gram(jac.boundary, w_b);
    const Matrix cross = jac.pde * jac.boundary.transpose();
    k.k_ub = w_b * cross;
    k.k_bu = inv_nc * cross.transpose();
    return k;
}

double frobenius_norm(const Matrix& m) {
    return m.norm();
}

double frobenius_norm(const NTKMatrix& k) {
    return std::sqrt(k.k_uu.squaredNorm() + k.k_ub.squaredNorm() + k.k_bu.squaredNorm() + k.k_bb.squaredNorm());
}

double stiffness_ratio(const Vector& eigenvalues_desc, double rel_floor) {
    if (eigenvalues_desc.size() == 0) throw std::invalid_argument("empty spectrum");
    const double lmax = eigenvalues_desc(0);
    if (!(lmax > 0.0)) throw std::invalid_argument("spectrum has no positive eigenvalue");
    double lmin = lmax;
    for (Eigen::Index i = 0; i < eigenvalues_desc.size(); ++i)
        if (eigenvalues_desc(i) > rel_floor * lmax) lmin = std::min(lmin, eigenvalues_desc(i));
    return lmax / lmin;
}

double default_flow_eta(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch,
                        const LossConfig& cfg) {
    const double gnorm = pinn_loss_grad(spec, params, arch, cfg).norm();
    return gnorm > 0.0 ? 1e-6 / gnorm : 1e-6;
}

FlowCheckReport flow_consistency_check(const BVPSpec& spec, const ParameterSet& params,
                                       const MLPArchitecture& arch, const LossConfig& cfg, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    FlowCheckReport report;
    report.eta = eta;

    const Vector y0 = residual_vector(spec, params, arch, cfg.grid).stacked();
    const NTKMatrix k = assemble_ntk(spec, params, arch, cfg);
    const Vector ky = k.apply(y0);
    report.ky_norm = ky.norm();
    if (report.ky_norm < 1e-14) {
        report.inconclusive = true;
        report.note = "|K y| below 1e-14";
        return report;
    }

    const Vector theta = flatten(params);
    const Vector grad = pinn_loss_grad(spec, params, arch, cfg);
    const ParameterSet stepped = unflatten(arch, Vector(theta - eta * grad));
    const Vector y1 = residual_vector(spec, stepped, arch, cfg.grid).stacked();

    report.ratio = ((y1 - y0) / eta + ky).norm() / report.ky_norm;
    return report;
}

}  // namespace pinn_ntk
