#pragma once

// Experiment configuration, flat key=value serialization and named presets.

#include "pinn_ntk/network.hpp"
#include "pinn_ntk/optim.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pinn_ntk {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class ExperimentKind { FreqPrinciple, NtkScan, NtkSpectrum, TwoScale, FlowCheck };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& name);

enum class InitScheme { Normal, Glorot };

std::string to_string(InitScheme s);
InitScheme init_from_string(const std::string& name);
ParameterSet initialize(const MLPArchitecture& arch, InitScheme scheme, std::uint64_t seed);

/// Stage list syntax: "adam:10000:1e-3;lbfgs:3600;gd:10:1e-8".
std::string format_schedule(const std::vector<TrainStage>& schedule);
std::vector<TrainStage> parse_schedule(const std::string& text);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::FreqPrinciple;
    std::string preset = "custom";
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";

    std::vector<int> hidden_widths = {60, 60, 60, 60};
    Activation activation = Activation::Tanh;
    InitScheme init = InitScheme::Glorot;

    int n_collocation = 512;
    double lambda_b = 100.0;
    std::vector<double> epsilons = {1.0};

    // ntk-scan / ntk-spectrum / flow-check problem: coefficient
    // 1/(2.1 + 2 sin(2 pi x/eps)), constant forcing.
    double forcing_constant = 1.0;
    int n_seeds = 1;
    bool train_phase = false;
    InitScheme train_init = InitScheme::Glorot;

    std::vector<TrainStage> schedule;  // freq-principle and trained NTK phases
    std::vector<TrainStage> schedule_regression;
    std::vector<TrainStage> schedule_poisson;
    std::vector<TrainStage> schedule_darcy;
    int record_stride = 100;
    // Optimizer constants applied to every stage.
    AdamOptions adam;
    LbfgsOptions lbfgs;

    int n_eval = 512;
    // Subtract the line through the end-point errors before the error DFT.
    bool spectrum_detrend = false;
    int n_regression = 403;
    int trials = 1;

    double eta = 1e-8;
    int eta_halvings = 4;

    MLPArchitecture architecture() const { return {hidden_widths, activation}; }
    /// Copy of a schedule with the configured optimizer constants filled in.
    std::vector<TrainStage> resolve(const std::vector<TrainStage>& stages) const;
    void validate() const;

    /// Ordered key=value lines, one per field.
    std::vector<std::pair<std::string, std::string>> to_pairs() const;
    std::string serialize() const;
    /// Applies one key=value assignment; unknown keys throw.
    void set(const std::string& key, const std::string& value);
};

/// Parses key=value lines over a base config. Blank lines and lines starting
/// with '#' are skipped; unknown keys and malformed lines throw.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Named presets: fig1, fig2a, fig2b, fig3, fig4, flow. The fast variants
/// shrink iteration budgets and trial counts.
ExperimentConfig preset(const std::string& name, bool fast = false);
std::vector<std::string> preset_names();
std::string default_preset_for(ExperimentKind kind);

}  // namespace pinn_ntk
