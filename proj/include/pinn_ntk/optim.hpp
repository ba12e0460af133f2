#pragma once

// Full-batch training: explicit Euler gradient descent, Adam and L-BFGS,
// run as ordered stages over a flat parameter vector.

#include "pinn_ntk/loss.hpp"
#include "pinn_ntk/network.hpp"
#include "pinn_ntk/pde.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pinn_ntk {

/// A differentiable scalar objective over flat parameters. eval returns the
/// loss and writes the gradient when grad is non-null.
struct Objective {
    std::function<double(const Vector& theta, Vector* grad)> eval;
    /// Optional residual snapshot for recording.
    std::function<Vector(const Vector& theta)> residuals;
};

Objective pinn_objective(const BVPSpec& spec, const MLPArchitecture& arch, const LossConfig& cfg);
Objective regression_objective(const MLPArchitecture& arch, std::vector<Sample> samples);

enum class OptimizerKind { GD, Adam, LBFGS };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& name);

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct LbfgsOptions {
    int history = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search = 20;
    double grad_tol = 1e-9;
    double rel_decrease_tol = 1e-12;
};

struct TrainStage {
    OptimizerKind optimizer = OptimizerKind::Adam;
    int iterations = 0;
    double learning_rate = 1e-3;  // unused by L-BFGS
    AdamOptions adam;
    LbfgsOptions lbfgs;
};

/// Throws std::invalid_argument on a non-finite gradient entry.
Vector gd_step(const Vector& params, const Vector& grad, double eta);

struct AdamState {
    Vector m;
    Vector v;
    long step = 0;
};

/// Bias-corrected Adam update; initializes the moments on first use.
void adam_step(AdamState& state, Vector& params, const Vector& grad, double eta, const AdamOptions& opt = {});

enum class LbfgsStop { GradientTolerance, RelativeDecrease, LineSearchFailure, MaxIterations };
std::string to_string(LbfgsStop s);

struct LbfgsResult {
    Vector params;
    int iterations = 0;
    LbfgsStop stop = LbfgsStop::MaxIterations;
    std::vector<double> losses;  // loss after each accepted iteration, starting with the input loss
};

/// Two-loop recursion with a strong Wolfe line search. The returned loss is
/// never above the loss at the input.
LbfgsResult lbfgs_run(const Objective& obj, const Vector& params, int max_iters, const LbfgsOptions& opt = {});

struct RecordOptions {
    int stride = 100;
    bool keep_params = false;
    bool keep_residuals = false;
};

struct HistoryRecord {
    long iteration = 0;
    double loss = 0.0;
    int stage = 0;
    std::optional<Vector> params;
    std::optional<Vector> residuals;
};

struct TrainHistory {
    std::vector<HistoryRecord> records;
    bool aborted = false;
    std::string abort_reason;
    long iterations_run = 0;
};

struct TrainResult {
    Vector params;
    TrainHistory history;
};

/// Runs the stages in order. Records iteration 0, every stride-th
/// iteration and the final iterate. A non-finite loss or gradient stops the
/// run and returns the last finite iterate.
TrainResult train(const Objective& obj, const Vector& params, const std::vector<TrainStage>& schedule,
                  const RecordOptions& rec = {});

/// Convenience overload for PINN problems.
TrainResult train(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, const LossConfig& cfg,
                  const std::vector<TrainStage>& schedule, const RecordOptions& rec = {});

}  // namespace pinn_ntk
