#include "pinn_ntk/pde.hpp"

#include <cmath>
#include <numbers>

namespace pinn_ntk {

namespace {
constexpr double kPi = std::numbers::pi;
}

CoefficientField coefficient_sin_2pi() {
    CoefficientField c;
    c.a = [](double y) { return 1.0 / (2.1 + 2.0 * std::sin(2.0 * kPi * y)); };
    c.a_prime = [](double y) {
        const double den = 2.1 + 2.0 * std::sin(2.0 * kPi * y);
        return -4.0 * kPi * std::cos(2.0 * kPi * y) / (den * den);
    };
    c.nu = 1.0;
    c.a_min = 1.0 / 4.1;
    c.a_max = 1.0 / 0.1;
    c.descriptor = "1/(2.1+2sin(2pi*y)),nu=1";
    return c;
}

CoefficientField coefficient_sin_raw() {
    CoefficientField c = coefficient_sin_2pi();
    c.nu = 1.0 / (2.0 * kPi);
    c.descriptor = "1/(2.1+2sin(2pi*y)),nu=1/(2pi)";
    return c;
}

void BVPSpec::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("domain must satisfy lo < hi");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (kind == ProblemKind::Darcy && !coeff) throw std::invalid_argument("Darcy problem requires a coefficient field");
    if (!forcing) throw std::invalid_argument("forcing function is not set");
}

CollocationGrid make_grid(const BVPSpec& spec, int n_c, GridScheme scheme) {
    if (n_c < 1) throw std::invalid_argument("need at least one collocation point");
    if (scheme != GridScheme::Equispaced) throw std::invalid_argument("unsupported grid scheme");
    CollocationGrid grid;
    grid.interior.reserve(static_cast<std::size_t>(n_c));
    const double h = (spec.hi - spec.lo) / static_cast<double>(n_c + 1);
    for (int i = 1; i <= n_c; ++i) grid.interior.push_back(spec.lo + static_cast<double>(i) * h);
    grid.boundary = {spec.lo, spec.hi};
    return grid;
}

OperatorCoefficients operator_coefficients(const BVPSpec& spec, double x) {
    if (!(spec.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (spec.kind == ProblemKind::Poisson || !spec.coeff) return {-1.0, 0.0};
    const CoefficientField& c = *spec.coeff;
    const double y = c.nu * x / spec.epsilon;
    return {-c.a(y), -(c.nu / spec.epsilon) * c.a_prime(y)};
}

double apply_operator(const BVPSpec& spec, const Jet2& jet, double x) {
    const auto [c2, c1] = operator_coefficients(spec, x);
    return c2 * jet.d2 + c1 * jet.d1;
}

double forcing_poisson_freq(double x) {
    return std::sin(x) + std::sin(5.0 * x) + std::sin(15.0 * x) + std::sin(55.0 * x);
}

double exact_poisson_freq(double x) {
    return std::sin(x) + std::sin(5.0 * x) / 25.0 + std::sin(15.0 * x) / 225.0 + std::sin(55.0 * x) / 3025.0;
}

double forcing_poisson_twoscale(double eps, double x) {
    return 4.0 * std::sin(2.0 * x) + std::sin(x / eps) / eps;
}

double forcing_darcy(double eps, double x) {
    const double sx = std::sin(x);
    const double cx = std::cos(x);
    const double se = std::sin(x / eps);
    const double ce = std::cos(x / eps);
    const double g = 10.0 * (20.0 * kPi + 168.0 * kPi * eps * cx * sx -
                             20.0 * (2.0 * kPi - 4.0 * kPi * cx * cx + eps * std::sin(kPi / eps)) * ce +
                             (21.0 * kPi + 160.0 * kPi * eps * cx * sx) * se);
    const double h = 400.0 * kPi * eps * se * se + 840.0 * kPi * eps * se + 441.0 * kPi * eps;
    if (std::abs(h) < 1e-14) throw SingularEvaluation("Darcy forcing denominator vanishes");
    return g / h;
}

double exact_two_scale(double eps, double x) {
    return std::sin(2.0 * x) + eps * std::sin(x / eps) - (eps / kPi) * std::sin(kPi / eps) * x;
}

BVPSpec freq_principle_problem() {
    BVPSpec s;
    s.forcing = forcing_poisson_freq;
    s.kind = ProblemKind::Poisson;
    return s;
}

BVPSpec two_scale_poisson_problem(double eps) {
    BVPSpec s;
    s.epsilon = eps;
    s.forcing = [eps](double x) { return forcing_poisson_twoscale(eps, x); };
    s.kind = ProblemKind::Poisson;
    s.validate();
    return s;
}

BVPSpec two_scale_darcy_problem(double eps) {
    BVPSpec s;
    s.epsilon = eps;
    s.coeff = coefficient_sin_raw();
    s.forcing = [eps](double x) { return forcing_darcy(eps, x); };
    s.kind = ProblemKind::Darcy;
    s.validate();
    return s;
}

BVPSpec ntk_darcy_problem(double eps, double forcing_constant) {
    BVPSpec s;
    s.epsilon = eps;
    s.coeff = coefficient_sin_2pi();
    s.forcing = [forcing_constant](double) { return forcing_constant; };
    s.kind = ProblemKind::Darcy;
    s.validate();
    return s;
}

double residual_pde(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, double x) {
    return apply_operator(spec, forward_jet(params, arch, x), x) - spec.forcing(x);
}

double boundary_value(const BVPSpec& spec, double s) {
    if (s == spec.lo) return spec.u_lo;
    if (s == spec.hi) return spec.u_hi;
    throw std::invalid_argument("boundary residual requested at a non-endpoint");
}

double residual_boundary(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, double s) {
    const double g = boundary_value(spec, s);
    return forward_jet(params, arch, s).v - g;
}

}  // namespace pinn_ntk
