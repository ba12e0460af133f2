#include "pinn_ntk/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace pinn_ntk {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffTolerance = 1e-12;

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

// Zeroes a(p, q) with one plane rotation, keeping both triangles in sync.
void rotate(Matrix& a, Eigen::Index p, Eigen::Index q) {
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const double tau = s / (1.0 + c);

    a(p, p) -= t * apq;
    a(q, q) += t * apq;
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (r == p || r == q) continue;
        const double g = a(r, p);
        const double h = a(r, q);
        const double gp = g - s * (h + g * tau);
        const double hq = h + s * (g - h * tau);
        a(r, p) = gp;
        a(p, r) = gp;
        a(r, q) = hq;
        a(q, r) = hq;
    }
}

}  // namespace

Vector sym_eigenvalues(const Matrix& input, JacobiStats* stats) {
    if (input.rows() != input.cols()) throw std::invalid_argument("eigenvalue input must be square");
    if (!input.allFinite()) throw std::invalid_argument("eigenvalue input has non-finite entries");
    const double norm = input.norm();
    if (norm > 0.0 && (input - input.transpose()).norm() > 1e-8 * norm)
        throw std::invalid_argument("eigenvalue input is not symmetric");

    Matrix a = 0.5 * (input + input.transpose());
    const Eigen::Index n = a.rows();
    JacobiStats local;
    double off = off_diagonal_norm(a);
    while (off > kOffTolerance * norm && local.sweeps < kMaxSweeps) {
        for (Eigen::Index p = 0; p + 1 < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                if (a(p, q) != 0.0) rotate(a, p, q);
        ++local.sweeps;
        off = off_diagonal_norm(a);
    }
    local.off_norm = off;
    if (off > kOffTolerance * norm) throw std::runtime_error("Jacobi eigensolver did not converge");
    if (stats) *stats = local;

    Vector eig = a.diagonal();
    std::sort(eig.data(), eig.data() + eig.size(), std::greater<>());
    return eig;
}

Vector sym_eigenvalues(const Matrix& a) {
    return sym_eigenvalues(a, nullptr);
}

}  // namespace pinn_ntk
