#include "pinn_ntk/experiments.hpp"

#include "pinn_ntk/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pinn_ntk {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

void parallel_for(int n, int workers, const std::function<void(int)>& task) {
    if (n <= 0) return;
    const int threads = std::max(1, std::min(workers, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("slope fit needs matching x and y");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

std::vector<std::string> output_header(const ExperimentConfig& cfg) {
    std::vector<std::string> h;
    h.push_back(std::string("artifact=pinn-ntk ") + kArtifactVersion);
    for (const auto& [k, v] : cfg.to_pairs()) h.push_back(k + "=" + v);
    return h;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("linspace needs at least two points");
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return xs;
}

std::uint64_t scan_seed(std::uint64_t base, int replicate, int eps_index) {
    return base + 1000u * static_cast<std::uint64_t>(replicate) + static_cast<std::uint64_t>(eps_index);
}

namespace {

bool writes_output(const ExperimentConfig& cfg) {
    return !cfg.out_dir.empty();
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void prepare_output(const ExperimentConfig& cfg) {
    if (!writes_output(cfg)) return;
    fs::create_directories(cfg.out_dir);
    write_text_file(out_path(cfg, "config.txt"), cfg.serialize());
}

void write_status(const ExperimentConfig& cfg, bool ok, const std::string& reason) {
    if (!writes_output(cfg)) return;
    std::string text = std::string("status=") + (ok ? "ok" : "partial") + "\n";
    if (!reason.empty()) text += "reason=" + reason + "\n";
    write_text_file(out_path(cfg, "status.txt"), text);
}

void write_summary(const ExperimentConfig& cfg, json summary) {
    if (!writes_output(cfg)) return;
    json doc;
    doc["artifact"] = std::string("pinn-ntk ") + kArtifactVersion;
    json conf;
    for (const auto& [k, v] : cfg.to_pairs()) conf[k] = v;
    doc["config"] = conf;
    doc["summary"] = std::move(summary);
    write_text_file(out_path(cfg, "summary.json"), doc.dump(2) + "\n");
}

json optional_number(std::optional<double> v) {
    return v ? json(*v) : json(nullptr);
}

void write_history(const ExperimentConfig& cfg, const TrainHistory& hist, const std::string& name) {
    CsvWriter csv(output_header(cfg));
    csv.columns({"iteration", "loss"});
    for (const auto& r : hist.records) csv.row({std::to_string(r.iteration), format_real(r.loss)});
    csv.write(out_path(cfg, name));
}

LossConfig loss_config(const BVPSpec& spec, const ExperimentConfig& cfg) {
    return {cfg.lambda_b, make_grid(spec, cfg.n_collocation)};
}

double median_of(const Vector& v) {
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

}  // namespace

FreqPrincipleResult run_freq_principle(const ExperimentConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    const MLPArchitecture arch = cfg.architecture();
    const BVPSpec spec = freq_principle_problem();
    const LossConfig loss = loss_config(spec, cfg);
    const ParameterSet init = initialize(arch, cfg.init, cfg.seed);

    RecordOptions rec;
    rec.stride = cfg.record_stride;
    rec.keep_params = true;
    FreqPrincipleResult result;
    TrainResult tr = train(pinn_objective(spec, arch, loss), flatten(init), cfg.resolve(cfg.schedule), rec);

    std::vector<SpectrumSnapshot> snaps;
    for (auto& r : tr.history.records) {
        snaps.push_back({r.iteration, std::move(*r.params)});
        r.params.reset();
    }
    result.history = std::move(tr.history);
    const std::vector<double> grid = periodic_grid(spec.lo, spec.hi, cfg.n_eval);
    result.spectra = error_spectrum_over_training(snaps, arch, exact_poisson_freq, grid, cfg.spectrum_detrend);
    for (int k : {1, 5, 15, 55})
        if (static_cast<std::size_t>(k) < result.spectra.front().magnitudes.size())
            result.half_decay[k] = half_decay_iteration(result.spectra, k);

    if (writes_output(cfg)) {
        CsvWriter csv(output_header(cfg));
        csv.columns({"iteration", "k", "magnitude"});
        for (const auto& s : result.spectra)
            for (std::size_t i = 0; i < s.magnitudes.size(); ++i)
                csv.row({std::to_string(s.iteration), std::to_string(s.bin_freqs[i]), format_real(s.magnitudes[i])});
        csv.write(out_path(cfg, "spectra.csv"));
        write_history(cfg, result.history, "history.csv");
        json hd;
        for (const auto& [k, it] : result.half_decay)
            hd[std::to_string(k)] = it == kNeverDecayed ? json(nullptr) : json(it);
        json summary;
        summary["half_decay_iteration"] = hd;
        summary["final_loss"] = result.history.records.back().loss;
        summary["iterations"] = result.history.iterations_run;
        write_summary(cfg, summary);
    }
    write_status(cfg, !result.history.aborted, result.history.abort_reason);
    return result;
}

NtkScanResult run_ntk_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    const MLPArchitecture arch = cfg.architecture();
    const int n_eps = static_cast<int>(cfg.epsilons.size());
    std::vector<std::string> phases = {"init"};
    if (cfg.train_phase) phases.push_back("trained");

    struct Task {
        int phase, replicate, eps_index;
    };
    std::vector<Task> tasks;
    for (int p = 0; p < static_cast<int>(phases.size()); ++p)
        for (int i = 0; i < n_eps; ++i)
            for (int s = 0; s < cfg.n_seeds; ++s) tasks.push_back({p, s, i});

    std::vector<ScanRow> rows(tasks.size());
    std::vector<std::string> aborts(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), cfg.workers, [&](int t) {
        const Task& task = tasks[static_cast<std::size_t>(t)];
        const double eps = cfg.epsilons[static_cast<std::size_t>(task.eps_index)];
        const BVPSpec spec = ntk_darcy_problem(eps, cfg.forcing_constant);
        const LossConfig loss = loss_config(spec, cfg);
        const std::uint64_t seed = scan_seed(cfg.seed, task.replicate, task.eps_index);
        ParameterSet params;
        if (phases[static_cast<std::size_t>(task.phase)] == "init") {
            params = initialize(arch, cfg.init, seed);
        } else {
            RecordOptions rec;
            rec.stride = cfg.record_stride;
            const TrainResult tr = train(pinn_objective(spec, arch, loss), flatten(initialize(arch, cfg.train_init, seed)),
                                         cfg.resolve(cfg.schedule), rec);
            if (tr.history.aborted) aborts[static_cast<std::size_t>(t)] = tr.history.abort_reason;
            params = unflatten(arch, tr.params);
        }
        const NTKMatrix k = assemble_ntk(spec, params, arch, loss);
        const Vector eig = sym_eigenvalues(k.k_uu);
        ScanRow& row = rows[static_cast<std::size_t>(t)];
        row.phase = phases[static_cast<std::size_t>(task.phase)];
        row.epsilon = eps;
        row.seed = seed;
        row.frob_kuu = frobenius_norm(k.k_uu);
        row.lambda1 = eig(0);
        row.lambda2 = eig.size() > 1 ? eig(1) : 0.0;
        row.lambda3 = eig.size() > 2 ? eig(2) : 0.0;
    });

    NtkScanResult result;
    result.runs = rows;
    for (const auto& phase : phases) {
        std::vector<double> xs, ys;
        for (int i = 0; i < n_eps; ++i) {
            ScanRow avg;
            avg.phase = phase;
            avg.epsilon = cfg.epsilons[static_cast<std::size_t>(i)];
            int count = 0;
            for (const auto& r : rows) {
                if (r.phase != phase || r.epsilon != avg.epsilon) continue;
                avg.frob_kuu += r.frob_kuu;
                avg.lambda1 += r.lambda1;
                avg.lambda2 += r.lambda2;
                avg.lambda3 += r.lambda3;
                ++count;
            }
            avg.frob_kuu /= count;
            avg.lambda1 /= count;
            avg.lambda2 /= count;
            avg.lambda3 /= count;
            result.averaged.push_back(avg);
            xs.push_back(avg.epsilon);
            ys.push_back(avg.frob_kuu);
        }
        result.slopes[phase] = loglog_slope(xs, ys);
    }

    std::string abort_reason;
    for (std::size_t t = 0; t < aborts.size(); ++t)
        if (!aborts[t].empty()) abort_reason += "seed " + std::to_string(rows[t].seed) + ": " + aborts[t] + "; ";

    if (writes_output(cfg)) {
        CsvWriter scan(output_header(cfg));
        scan.columns({"epsilon", "frob_kuu", "lambda1", "lambda2", "lambda3", "phase"});
        for (const auto& r : result.averaged)
            scan.row({format_real(r.epsilon), format_real(r.frob_kuu), format_real(r.lambda1), format_real(r.lambda2),
                      format_real(r.lambda3), r.phase});
        scan.write(out_path(cfg, "scan.csv"));

        CsvWriter runs(output_header(cfg));
        runs.columns({"phase", "epsilon", "seed", "frob_kuu", "lambda1", "lambda2", "lambda3"});
        for (const auto& r : result.runs)
            runs.row({r.phase, format_real(r.epsilon), std::to_string(r.seed), format_real(r.frob_kuu),
                      format_real(r.lambda1), format_real(r.lambda2), format_real(r.lambda3)});
        runs.write(out_path(cfg, "scan_runs.csv"));

        CsvWriter slopes(output_header(cfg));
        slopes.columns({"phase", "slope"});
        for (const auto& [phase, s] : result.slopes) slopes.row({phase, s ? format_real(*s) : std::string()});
        slopes.write(out_path(cfg, "slopes.csv"));

        json js;
        for (const auto& [phase, s] : result.slopes) js[phase] = optional_number(s);
        json summary;
        summary["loglog_slope_frob_kuu"] = js;
        write_summary(cfg, summary);
    }
    write_status(cfg, abort_reason.empty(), abort_reason);
    return result;
}

NtkSpectrumResult run_ntk_spectrum(const ExperimentConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    const MLPArchitecture arch = cfg.architecture();
    const double eps = cfg.epsilons.front();
    const BVPSpec spec = ntk_darcy_problem(eps, cfg.forcing_constant);
    const LossConfig loss = loss_config(spec, cfg);

    NtkSpectrumResult result;
    std::string abort_reason;
    auto analyze = [&](const std::string& phase, const ParameterSet& params) {
        SpectrumPhase sp;
        sp.phase = phase;
        sp.eigenvalues = sym_eigenvalues(assemble_ntk(spec, params, arch, loss).k_uu);
        sp.stiffness = stiffness_ratio(sp.eigenvalues);
        sp.median = median_of(sp.eigenvalues);
        result.phases.push_back(std::move(sp));
    };
    analyze("init", initialize(arch, cfg.init, cfg.seed));
    if (cfg.train_phase) {
        RecordOptions rec;
        rec.stride = cfg.record_stride;
        const TrainResult tr = train(pinn_objective(spec, arch, loss), flatten(initialize(arch, cfg.train_init, cfg.seed)),
                                     cfg.resolve(cfg.schedule), rec);
        abort_reason = tr.history.abort_reason;
        analyze("trained", unflatten(arch, tr.params));
    }

    if (writes_output(cfg)) {
        CsvWriter csv(output_header(cfg));
        csv.columns({"phase", "index", "eigenvalue"});
        for (const auto& sp : result.phases)
            for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
                csv.row({sp.phase, std::to_string(i + 1), format_real(sp.eigenvalues(i))});
        csv.write(out_path(cfg, "spectrum.csv"));
        json summary;
        for (const auto& sp : result.phases) {
            json p;
            p["lambda_max"] = sp.eigenvalues(0);
            p["lambda_max_over_lambda_min_positive"] = sp.stiffness;
            p["median_eigenvalue"] = sp.median;
            p["eigenvalue_count"] = sp.eigenvalues.size();
            summary[sp.phase] = p;
        }
        write_summary(cfg, summary);
    }
    write_status(cfg, abort_reason.empty(), abort_reason);
    return result;
}

TwoScaleResult run_two_scale(const ExperimentConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    const MLPArchitecture arch = cfg.architecture();
    const double eps = cfg.epsilons.front();
    const double pi = std::numbers::pi;
    const BVPSpec poisson = two_scale_poisson_problem(eps);
    const BVPSpec darcy = two_scale_darcy_problem(eps);

    std::vector<Sample> samples;
    for (double x : linspace(-pi, pi, cfg.n_regression)) samples.push_back({x, exact_two_scale(eps, x)});

    TwoScaleResult result;
    result.x = linspace(-pi, pi, cfg.n_eval);
    for (double x : result.x) result.u_exact.push_back(exact_two_scale(eps, x));

    const std::vector<std::string> methods = {"regression", "poisson", "darcy"};
    const int n_tasks = 3 * cfg.trials;
    std::vector<TrialRecord> records(static_cast<std::size_t>(n_tasks));
    std::vector<std::vector<double>> preds(static_cast<std::size_t>(n_tasks));

    parallel_for(n_tasks, cfg.workers, [&](int t) {
        const int m = t / cfg.trials;
        const int trial = t % cfg.trials;
        TrialRecord& rec = records[static_cast<std::size_t>(t)];
        rec.method = methods[static_cast<std::size_t>(m)];
        rec.trial = trial;
        rec.seed = cfg.seed + 1000u * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(trial);
        const ParameterSet init = initialize(arch, cfg.init, rec.seed);

        Objective obj;
        std::vector<TrainStage> schedule;
        if (m == 0) {
            obj = regression_objective(arch, samples);
            schedule = cfg.resolve(cfg.schedule_regression);
        } else {
            const BVPSpec& spec = m == 1 ? poisson : darcy;
            obj = pinn_objective(spec, arch, loss_config(spec, cfg));
            schedule = cfg.resolve(m == 1 ? cfg.schedule_poisson : cfg.schedule_darcy);
        }
        RecordOptions ro;
        ro.stride = cfg.record_stride;
        const TrainResult tr = train(obj, flatten(init), schedule, ro);
        rec.final_loss = tr.history.records.back().loss;
        rec.iterations = tr.history.iterations_run;
        rec.aborted = tr.history.aborted;

        const ParameterSet p = unflatten(arch, tr.params);
        auto& pred = preds[static_cast<std::size_t>(t)];
        pred.resize(result.x.size());
        for (std::size_t j = 0; j < result.x.size(); ++j) {
            pred[j] = forward_value(p, arch, result.x[j]);
            rec.max_abs_error = std::max(rec.max_abs_error, std::abs(pred[j] - result.u_exact[j]));
        }
    });
    result.trials = records;

    std::string abort_reason;
    for (int m = 0; m < 3; ++m) {
        MethodSummary ms;
        ms.method = methods[static_cast<std::size_t>(m)];
        ms.trials = cfg.trials;
        std::vector<const std::vector<double>*> done;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const auto t = static_cast<std::size_t>(m * cfg.trials + trial);
            if (records[t].aborted) {
                abort_reason += ms.method + " trial " + std::to_string(trial) + " aborted; ";
                continue;
            }
            done.push_back(&preds[t]);
        }
        ms.completed = static_cast<int>(done.size());
        std::vector<double> mean(result.x.size(), 0.0);
        double var_sum = 0.0;
        if (!done.empty()) {
            for (std::size_t j = 0; j < mean.size(); ++j) {
                double s = 0.0;
                for (const auto* p : done) s += (*p)[j];
                mean[j] = s / static_cast<double>(done.size());
                double v = 0.0;
                for (const auto* p : done) v += ((*p)[j] - mean[j]) * ((*p)[j] - mean[j]);
                var_sum += v / static_cast<double>(done.size());
                ms.max_abs_error = std::max(ms.max_abs_error, std::abs(mean[j] - result.u_exact[j]));
            }
            ms.mean_variance = var_sum / static_cast<double>(mean.size());
        } else {
            ms.max_abs_error = std::numeric_limits<double>::quiet_NaN();
            ms.mean_variance = std::numeric_limits<double>::quiet_NaN();
        }
        result.mean_prediction[ms.method] = std::move(mean);
        result.summaries.push_back(ms);
    }

    if (writes_output(cfg)) {
        CsvWriter pred(output_header(cfg));
        pred.columns({"x", "u_exact", "u_R", "u_P", "u_D"});
        for (std::size_t j = 0; j < result.x.size(); ++j)
            pred.row({format_real(result.x[j]), format_real(result.u_exact[j]),
                      format_real(result.mean_prediction["regression"][j]),
                      format_real(result.mean_prediction["poisson"][j]), format_real(result.mean_prediction["darcy"][j])});
        pred.write(out_path(cfg, "predictions.csv"));

        CsvWriter err(output_header(cfg));
        err.columns({"method", "max_abs_error", "mean_variance", "trials_completed", "trials"});
        for (const auto& ms : result.summaries)
            err.row({ms.method, format_real(ms.max_abs_error), format_real(ms.mean_variance),
                     std::to_string(ms.completed), std::to_string(ms.trials)});
        err.write(out_path(cfg, "errors.csv"));

        CsvWriter tri(output_header(cfg));
        tri.columns({"method", "trial", "seed", "final_loss", "iterations", "status", "max_abs_error"});
        for (const auto& r : result.trials)
            tri.row({r.method, std::to_string(r.trial), std::to_string(r.seed), format_real(r.final_loss),
                     std::to_string(r.iterations), r.aborted ? "aborted" : "ok", format_real(r.max_abs_error)});
        tri.write(out_path(cfg, "trials.csv"));

        json summary;
        for (const auto& ms : result.summaries) {
            json j;
            j["max_abs_error"] = ms.max_abs_error;
            j["mean_variance"] = ms.mean_variance;
            j["trials_completed"] = ms.completed;
            summary[ms.method] = j;
        }
        write_summary(cfg, summary);
    }
    write_status(cfg, abort_reason.empty(), abort_reason);
    return result;
}

std::vector<FlowRow> flow_check_sequence(const BVPSpec& spec, const ParameterSet& params,
                                         const MLPArchitecture& arch, const LossConfig& loss, double eta0,
                                         int halvings) {
    std::vector<FlowRow> rows;
    double eta = eta0;
    for (int k = 0; k <= halvings; ++k) {
        const FlowCheckReport rep = flow_consistency_check(spec, params, arch, loss, eta);
        rows.push_back({eta, rep.ratio, rep.inconclusive});
        eta *= 0.5;
    }
    return rows;
}

FlowCheckResult run_flow_check(const ExperimentConfig& cfg) {
    cfg.validate();
    prepare_output(cfg);
    const MLPArchitecture arch = cfg.architecture();
    const BVPSpec spec = ntk_darcy_problem(cfg.epsilons.front(), cfg.forcing_constant);
    const LossConfig loss = loss_config(spec, cfg);
    FlowCheckResult result;
    result.rows = flow_check_sequence(spec, initialize(arch, cfg.init, cfg.seed), arch, loss, cfg.eta, cfg.eta_halvings);

    if (writes_output(cfg)) {
        CsvWriter csv(output_header(cfg));
        csv.columns({"eta", "ratio", "status"});
        for (const auto& r : result.rows)
            csv.row({format_real(r.eta), r.inconclusive ? std::string() : format_real(r.ratio),
                     r.inconclusive ? "inconclusive" : "ok"});
        csv.write(out_path(cfg, "flow_check.csv"));
        json halvings = json::array();
        for (std::size_t i = 1; i < result.rows.size(); ++i) {
            const auto& a = result.rows[i - 1];
            const auto& b = result.rows[i];
            halvings.push_back(a.inconclusive || b.inconclusive || a.ratio == 0.0 ? json(nullptr)
                                                                                   : json(b.ratio / a.ratio));
        }
        json summary;
        summary["successive_ratio_quotients"] = halvings;
        write_summary(cfg, summary);
    }
    write_status(cfg, true, "");
    return result;
}

std::string run_experiment(const ExperimentConfig& cfg) {
    std::ostringstream out;
    switch (cfg.experiment) {
        case ExperimentKind::FreqPrinciple: {
            const auto r = run_freq_principle(cfg);
            out << "iterations: " << r.history.iterations_run << ", final loss " << r.history.records.back().loss << "\n";
            for (const auto& [k, it] : r.half_decay)
                out << "  bin " << k << " half-decay iteration: "
                    << (it == kNeverDecayed ? std::string("never") : std::to_string(it)) << "\n";
            break;
        }
        case ExperimentKind::NtkScan: {
            const auto r = run_ntk_scan(cfg);
            for (const auto& [phase, s] : r.slopes)
                out << phase << " log-log slope of |K_uu|_F: " << (s ? format_real(*s) : std::string("undefined")) << "\n";
            break;
        }
        case ExperimentKind::NtkSpectrum: {
            const auto r = run_ntk_spectrum(cfg);
            for (const auto& p : r.phases)
                out << p.phase << ": lambda_max " << p.eigenvalues(0) << ", lambda_max/lambda_min+ " << p.stiffness
                    << "\n";
            break;
        }
        case ExperimentKind::TwoScale: {
            const auto r = run_two_scale(cfg);
            for (const auto& ms : r.summaries)
                out << ms.method << ": max abs error " << ms.max_abs_error << " (" << ms.completed << "/" << ms.trials
                    << " trials)\n";
            break;
        }
        case ExperimentKind::FlowCheck: {
            const auto r = run_flow_check(cfg);
            for (const auto& row : r.rows)
                out << "eta " << row.eta << ": "
                    << (row.inconclusive ? std::string("inconclusive") : format_real(row.ratio)) << "\n";
            break;
        }
    }
    return out.str();
}

}  // namespace pinn_ntk
