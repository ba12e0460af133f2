#pragma once

// Discrete Fourier magnitudes of sampled error signals.

#include "pinn_ntk/network.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace pinn_ntk {

/// Magnitudes |c_k|, k = 0..n/2, of a real signal sampled at n equispaced
/// points of one period (right endpoint excluded). Normalized so that a
/// unit-amplitude sinusoid at integer frequency k has magnitude 1 at bin k:
/// c_0 and c_{n/2} (n even) are the plain mean coefficients, the others are
/// doubled.
struct ErrorSpectrum {
    std::vector<int> bin_freqs;
    std::vector<double> magnitudes;
    int n_samples = 0;
    long iteration = 0;

    /// sum of |c_k|^2 with half-spectrum weights; equals the signal's mean square.
    double weighted_energy() const;
};

ErrorSpectrum dft_magnitude(const std::vector<double>& samples, long iteration = 0);

/// n points of [lo, hi), right endpoint excluded.
std::vector<double> periodic_grid(double lo, double hi, int n);

/// One spectrum of (u_net - u_exact) per parameter snapshot. The grid must
/// be equispaced with the right end of the period excluded. With
/// remove_boundary_trend, the straight line through the error at the two ends
/// of the period is subtracted first, so a mismatch between the end values
/// does not leak into every bin as a periodic jump.
struct SpectrumSnapshot {
    long iteration;
    Vector params;
};
std::vector<ErrorSpectrum> error_spectrum_over_training(const std::vector<SpectrumSnapshot>& snapshots,
                                                        const MLPArchitecture& arch,
                                                        const std::function<double(double)>& exact,
                                                        const std::vector<double>& eval_grid,
                                                        bool remove_boundary_trend = false);

constexpr long kNeverDecayed = std::numeric_limits<long>::max();

/// First recorded iteration at which bin k's magnitude is below
/// fraction * (its magnitude in the first spectrum); kNeverDecayed if never.
long half_decay_iteration(const std::vector<ErrorSpectrum>& spectra, int k, double fraction = 0.5);

/// Number of pairs i < j with seq[i] > seq[j].
int count_inversions(const std::vector<long>& seq);

}  // namespace pinn_ntk
