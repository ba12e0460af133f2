#pragma once

// Experiment drivers. Each run_* function computes its result from a resolved
// config and, when config.out_dir is non-empty, writes its CSV/JSON outputs
// there. Output files start with a "# key=value" header echoing the config.

#include "pinn_ntk/config.hpp"
#include "pinn_ntk/ntk.hpp"
#include "pinn_ntk/optim.hpp"
#include "pinn_ntk/spectral.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pinn_ntk {

/// Runs task(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& task);

/// Keeps the large per-evaluation network buffers on the heap rather than in
/// fresh page mappings, which otherwise dominate training time. Call once at
/// program start; a no-op outside glibc.
void tune_allocator();

/// Least-squares slope of log(y) against log(x); empty with fewer than two
/// distinct x values.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

std::vector<std::string> output_header(const ExperimentConfig& cfg);

struct FreqPrincipleResult {
    std::vector<ErrorSpectrum> spectra;
    TrainHistory history;
    std::map<int, long> half_decay;  // bins 1, 5, 15, 55
};
FreqPrincipleResult run_freq_principle(const ExperimentConfig& cfg);

struct ScanRow {
    std::string phase;  // "init" or "trained"
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double frob_kuu = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
};

struct NtkScanResult {
    std::vector<ScanRow> runs;      // one per (phase, epsilon, seed)
    std::vector<ScanRow> averaged;  // seed-averaged, one per (phase, epsilon)
    std::map<std::string, std::optional<double>> slopes;
};
NtkScanResult run_ntk_scan(const ExperimentConfig& cfg);

/// Seed used for replicate s at epsilon index i.
std::uint64_t scan_seed(std::uint64_t base, int replicate, int eps_index);

struct SpectrumPhase {
    std::string phase;
    Vector eigenvalues;  // descending
    double stiffness = 0.0;
    double median = 0.0;
};
struct NtkSpectrumResult {
    std::vector<SpectrumPhase> phases;
};
NtkSpectrumResult run_ntk_spectrum(const ExperimentConfig& cfg);

struct MethodSummary {
    std::string method;  // regression, poisson, darcy
    double max_abs_error = 0.0;
    double mean_variance = 0.0;
    int completed = 0;
    int trials = 0;
};
struct TrialRecord {
    std::string method;
    int trial = 0;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    long iterations = 0;
    bool aborted = false;
    double max_abs_error = 0.0;
};
struct TwoScaleResult {
    std::vector<double> x;
    std::vector<double> u_exact;
    std::map<std::string, std::vector<double>> mean_prediction;
    std::vector<MethodSummary> summaries;
    std::vector<TrialRecord> trials;
};
TwoScaleResult run_two_scale(const ExperimentConfig& cfg);

/// n points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int n);

struct FlowRow {
    double eta = 0.0;
    double ratio = 0.0;
    bool inconclusive = false;
};
/// Flow consistency at eta0, eta0/2, ..., eta0/2^halvings.
std::vector<FlowRow> flow_check_sequence(const BVPSpec& spec, const ParameterSet& params,
                                         const MLPArchitecture& arch, const LossConfig& loss, double eta0,
                                         int halvings);
struct FlowCheckResult {
    std::vector<FlowRow> rows;
};
FlowCheckResult run_flow_check(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment; returns a short human-readable summary.
std::string run_experiment(const ExperimentConfig& cfg);

}  // namespace pinn_ntk
