#pragma once

// One-dimensional elliptic boundary value problems
//     -(a(nu x / eps) u'(x))' = f(x) on (lo, hi),  u(lo) = u_lo, u(hi) = u_hi,
// their forcings and exact solutions, and the PINN residuals.

#include "pinn_ntk/network.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinn_ntk {

/// Raised when a forcing is evaluated where its denominator vanishes.
class SingularEvaluation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A one-periodic coefficient a(y) with its exact derivative.
///
/// The multiscale coefficient is a^eps(x) = a(nu * x / eps); nu is the number
/// of periods per length eps in the raw argument. Coefficients written with a
/// 2*pi-periodic profile such as 1/(2.1 + 2 sin(x/eps)) are stored as the
/// one-periodic profile 1/(2.1 + 2 sin(2 pi y)) with nu = 1/(2 pi).
struct CoefficientField {
    std::function<double(double)> a;
    std::function<double(double)> a_prime;
    double nu = 1.0;
    double a_min = 0.0;
    double a_max = 0.0;
    std::string descriptor;
};

/// y -> 1/(2.1 + 2 sin(2 pi y)), nu = 1: a^eps(x) = 1/(2.1 + 2 sin(2 pi x / eps)).
CoefficientField coefficient_sin_2pi();
/// Same profile with nu = 1/(2 pi): a^eps(x) = 1/(2.1 + 2 sin(x / eps)).
CoefficientField coefficient_sin_raw();

enum class ProblemKind { Poisson, Darcy };

struct BVPSpec {
    double lo = -3.141592653589793;
    double hi = 3.141592653589793;
    double epsilon = 1.0;
    std::optional<CoefficientField> coeff;  // empty for Poisson (a = 1)
    std::function<double(double)> forcing;
    double u_lo = 0.0;
    double u_hi = 0.0;
    ProblemKind kind = ProblemKind::Poisson;

    void validate() const;
};

struct CollocationGrid {
    std::vector<double> interior;
    std::vector<double> boundary;
};

enum class GridScheme { Equispaced };

/// n_c equispaced interior points, endpoints excluded; boundary = {lo, hi}.
CollocationGrid make_grid(const BVPSpec& spec, int n_c, GridScheme scheme = GridScheme::Equispaced);

/// L u at x given the jet of u at x.
double apply_operator(const BVPSpec& spec, const Jet2& jet, double x);

/// Coefficients (c2, c1) such that L u(x) = c2 * u''(x) + c1 * u'(x).
struct OperatorCoefficients {
    double c2;
    double c1;
};
OperatorCoefficients operator_coefficients(const BVPSpec& spec, double x);

double forcing_poisson_freq(double x);
double exact_poisson_freq(double x);
double forcing_poisson_twoscale(double eps, double x);
double forcing_darcy(double eps, double x);
double exact_two_scale(double eps, double x);

/// The benchmark problems on [-pi, pi] with homogeneous Dirichlet data.
BVPSpec freq_principle_problem();
BVPSpec two_scale_poisson_problem(double eps);
BVPSpec two_scale_darcy_problem(double eps);
/// Darcy problem with the 2*pi/eps coefficient and constant forcing.
BVPSpec ntk_darcy_problem(double eps, double forcing_constant);

double residual_pde(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, double x);
double residual_boundary(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, double s);

/// Boundary datum g(s); throws if s is not an endpoint.
double boundary_value(const BVPSpec& spec, double s);

}  // namespace pinn_ntk
