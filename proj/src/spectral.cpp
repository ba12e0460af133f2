#include "pinn_ntk/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace pinn_ntk {

double ErrorSpectrum::weighted_energy() const {
    double e = 0.0;
    for (std::size_t i = 0; i < magnitudes.size(); ++i) {
        const int k = bin_freqs[i];
        const bool edge = k == 0 || (n_samples % 2 == 0 && 2 * k == n_samples);
        e += edge ? magnitudes[i] * magnitudes[i] : 0.5 * magnitudes[i] * magnitudes[i];
    }
    return e;
}

ErrorSpectrum dft_magnitude(const std::vector<double>& samples, long iteration) {
    const int n = static_cast<int>(samples.size());
    if (n < 2) throw std::invalid_argument("spectrum needs at least two samples");
    // Twiddles by exact index reduction mod n.
    std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        twiddle[static_cast<std::size_t>(j)] = {std::cos(angle), std::sin(angle)};
    }
    ErrorSpectrum spec;
    spec.n_samples = n;
    spec.iteration = iteration;
    const int bins = n / 2 + 1;
    spec.bin_freqs.resize(static_cast<std::size_t>(bins));
    spec.magnitudes.resize(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const auto idx = static_cast<std::size_t>((static_cast<long>(k) * j) % n);
            acc += samples[static_cast<std::size_t>(j)] * twiddle[idx];
        }
        const bool edge = k == 0 || (n % 2 == 0 && 2 * k == n);
        const double scale = (edge ? 1.0 : 2.0) / static_cast<double>(n);
        spec.bin_freqs[static_cast<std::size_t>(k)] = k;
        spec.magnitudes[static_cast<std::size_t>(k)] = scale * std::abs(acc);
    }
    return spec;
}

std::vector<double> periodic_grid(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("grid needs at least one point");
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double h = (hi - lo) / static_cast<double>(n);
    for (int j = 0; j < n; ++j) xs[static_cast<std::size_t>(j)] = lo + static_cast<double>(j) * h;
    return xs;
}

std::vector<ErrorSpectrum> error_spectrum_over_training(const std::vector<SpectrumSnapshot>& snapshots,
                                                        const MLPArchitecture& arch,
                                                        const std::function<double(double)>& exact,
                                                        const std::vector<double>& eval_grid,
                                                        bool remove_boundary_trend) {
    if (eval_grid.size() < 2) throw std::invalid_argument("evaluation grid needs at least two points");
    const double lo = eval_grid.front();
    const double hi = lo + static_cast<double>(eval_grid.size()) * (eval_grid[1] - eval_grid[0]);
    std::vector<ErrorSpectrum> out;
    out.reserve(snapshots.size());
    std::vector<double> err(eval_grid.size());
    for (const auto& snap : snapshots) {
        const ParameterSet p = unflatten(arch, snap.params);
        for (std::size_t j = 0; j < eval_grid.size(); ++j)
            err[j] = forward_value(p, arch, eval_grid[j]) - exact(eval_grid[j]);
        if (remove_boundary_trend) {
            const double e_lo = err.front();
            const double e_hi = forward_value(p, arch, hi) - exact(hi);
            for (std::size_t j = 0; j < eval_grid.size(); ++j)
                err[j] -= e_lo + (e_hi - e_lo) * (eval_grid[j] - lo) / (hi - lo);
        }
        out.push_back(dft_magnitude(err, snap.iteration));
    }
    return out;
}

long half_decay_iteration(const std::vector<ErrorSpectrum>& spectra, int k, double fraction) {
    if (spectra.empty()) throw std::invalid_argument("no spectra");
    const auto bin = static_cast<std::size_t>(k);
    if (bin >= spectra.front().magnitudes.size()) throw std::invalid_argument("bin out of range");
    const double threshold = fraction * spectra.front().magnitudes[bin];
    for (const auto& s : spectra)
        if (s.magnitudes[bin] < threshold) return s.iteration;
    return kNeverDecayed;
}

int count_inversions(const std::vector<long>& seq) {
    int n = 0;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] > seq[j]) ++n;
    return n;
}

}  // namespace pinn_ntk
