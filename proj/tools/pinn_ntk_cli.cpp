#include "pinn_ntk/config.hpp"
#include "pinn_ntk/experiments.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct RunOptions {
    std::string preset;
    std::string config_file;
    std::uint64_t seed = 0;
    std::string out_dir;
    int workers = 0;
    bool fast = false;
    bool print_only = false;
    std::vector<std::string> overrides;
};

void add_run_options(CLI::App* sub, RunOptions& opt) {
    sub->add_option("--preset", opt.preset, "Named preset (fig1, fig2a, fig2b, fig3, fig4, flow)");
    sub->add_option("--config", opt.config_file, "key=value config file applied over the preset")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Base random seed");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--workers", opt.workers, "Concurrent independent runs")->check(CLI::PositiveNumber);
    sub->add_flag("--fast", opt.fast, "Use the reduced-budget variant of the preset");
    sub->add_option("--set", opt.overrides, "Extra key=value override (repeatable)");
    sub->add_flag("--print-config", opt.print_only, "Print the resolved config and exit");
}

pinn_ntk::ExperimentConfig resolve_config(pinn_ntk::ExperimentKind kind, const RunOptions& opt, const CLI::App* sub) {
    using namespace pinn_ntk;
    const std::string name = opt.preset.empty() ? default_preset_for(kind) : opt.preset;
    ExperimentConfig cfg = preset(name, opt.fast);
    if (!opt.config_file.empty()) cfg = load_config_file(opt.config_file, cfg);
    for (const auto& kv : opt.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (sub->count("--seed")) cfg.seed = opt.seed;
    if (sub->count("--out")) cfg.out_dir = opt.out_dir;
    if (sub->count("--workers")) cfg.workers = opt.workers;
    if (cfg.experiment != kind)
        throw std::invalid_argument("preset '" + name + "' is a " + to_string(cfg.experiment) + " experiment");
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace pinn_ntk;
    tune_allocator();
    CLI::App app{"PINN / neural tangent kernel experiments for 1-D multiscale elliptic problems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kArtifactVersion));

    const std::vector<ExperimentKind> kinds = {ExperimentKind::FreqPrinciple, ExperimentKind::NtkScan,
                                               ExperimentKind::NtkSpectrum, ExperimentKind::TwoScale,
                                               ExperimentKind::FlowCheck};
    const std::vector<std::string> descriptions = {
        "Error spectrum during PINN training on a four-frequency Poisson problem",
        "Frobenius norm and top eigenvalues of K_uu across an epsilon sweep",
        "Full K_uu spectrum at one epsilon, at initialization and after training",
        "Regression vs Poisson PINN vs Darcy PINN on a two-scale solution",
        "Numerical check of the residual flow dy/dt = -K y",
    };
    std::vector<RunOptions> options(kinds.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        CLI::App* sub = app.add_subcommand(to_string(kinds[i]), descriptions[i]);
        add_run_options(sub, options[i]);
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const ExperimentConfig cfg = resolve_config(kinds[i], options[i], subs[i]);
            if (options[i].print_only) {
                std::cout << cfg.serialize();
                return 0;
            }
            std::cout << run_experiment(cfg);
            if (!cfg.out_dir.empty()) std::cout << "outputs written to " << cfg.out_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
