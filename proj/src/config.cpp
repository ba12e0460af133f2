#include "pinn_ntk/config.hpp"

#include "pinn_ntk/csv.hpp"

#include <functional>
#include <sstream>
#include <stdexcept>

namespace pinn_ntk {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::FreqPrinciple: return "freq-principle";
        case ExperimentKind::NtkScan: return "ntk-scan";
        case ExperimentKind::NtkSpectrum: return "ntk-spectrum";
        case ExperimentKind::TwoScale: return "two-scale";
        case ExperimentKind::FlowCheck: return "flow-check";
    }
    return "unknown";
}

ExperimentKind experiment_from_string(const std::string& name) {
    for (auto k : {ExperimentKind::FreqPrinciple, ExperimentKind::NtkScan, ExperimentKind::NtkSpectrum,
                   ExperimentKind::TwoScale, ExperimentKind::FlowCheck})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::string to_string(InitScheme s) {
    return s == InitScheme::Normal ? "normal" : "glorot";
}

InitScheme init_from_string(const std::string& name) {
    if (name == "normal") return InitScheme::Normal;
    if (name == "glorot") return InitScheme::Glorot;
    throw std::invalid_argument("unknown init scheme '" + name + "'");
}

ParameterSet initialize(const MLPArchitecture& arch, InitScheme scheme, std::uint64_t seed) {
    return scheme == InitScheme::Normal ? init_normal(arch, seed) : init_glorot(arch, seed);
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    if (text.empty()) return out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& s) {
    return static_cast<int>(parse_integer(s));
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt(v[i]);
    }
    return out;
}

struct Field {
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
    using C = ExperimentConfig;
    static const std::vector<Field> table = {
        {"experiment", [](const C& c) { return to_string(c.experiment); },
         [](C& c, const std::string& v) { c.experiment = experiment_from_string(v); }},
        {"preset", [](const C& c) { return c.preset; }, [](C& c, const std::string& v) { c.preset = v; }},
        {"seed", [](const C& c) { return std::to_string(c.seed); },
         [](C& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_integer(v)); }},
        {"workers", [](const C& c) { return std::to_string(c.workers); },
         [](C& c, const std::string& v) { c.workers = parse_int(v); }},
        {"out_dir", [](const C& c) { return c.out_dir; }, [](C& c, const std::string& v) { c.out_dir = v; }},
        {"hidden_widths", [](const C& c) { return join(c.hidden_widths, [](int w) { return std::to_string(w); }); },
         [](C& c, const std::string& v) {
             c.hidden_widths.clear();
             for (const auto& s : split(v, ',')) c.hidden_widths.push_back(parse_int(trim(s)));
         }},
        {"activation", [](const C& c) { return to_string(c.activation); },
         [](C& c, const std::string& v) { c.activation = activation_from_string(v); }},
        {"init", [](const C& c) { return to_string(c.init); },
         [](C& c, const std::string& v) { c.init = init_from_string(v); }},
        {"n_collocation", [](const C& c) { return std::to_string(c.n_collocation); },
         [](C& c, const std::string& v) { c.n_collocation = parse_int(v); }},
        {"lambda_b", [](const C& c) { return format_real_shortest(c.lambda_b); },
         [](C& c, const std::string& v) { c.lambda_b = parse_real(v); }},
        {"epsilons", [](const C& c) { return join(c.epsilons, format_real_shortest); },
         [](C& c, const std::string& v) {
             c.epsilons.clear();
             for (const auto& s : split(v, ',')) c.epsilons.push_back(parse_real(trim(s)));
         }},
        {"forcing_constant", [](const C& c) { return format_real_shortest(c.forcing_constant); },
         [](C& c, const std::string& v) { c.forcing_constant = parse_real(v); }},
        {"n_seeds", [](const C& c) { return std::to_string(c.n_seeds); },
         [](C& c, const std::string& v) { c.n_seeds = parse_int(v); }},
        {"train_phase", [](const C& c) { return std::string(c.train_phase ? "true" : "false"); },
         [](C& c, const std::string& v) { c.train_phase = parse_bool(v); }},
        {"train_init", [](const C& c) { return to_string(c.train_init); },
         [](C& c, const std::string& v) { c.train_init = init_from_string(v); }},
        {"schedule", [](const C& c) { return format_schedule(c.schedule); },
         [](C& c, const std::string& v) { c.schedule = parse_schedule(v); }},
        {"schedule_regression", [](const C& c) { return format_schedule(c.schedule_regression); },
         [](C& c, const std::string& v) { c.schedule_regression = parse_schedule(v); }},
        {"schedule_poisson", [](const C& c) { return format_schedule(c.schedule_poisson); },
         [](C& c, const std::string& v) { c.schedule_poisson = parse_schedule(v); }},
        {"schedule_darcy", [](const C& c) { return format_schedule(c.schedule_darcy); },
         [](C& c, const std::string& v) { c.schedule_darcy = parse_schedule(v); }},
        {"record_stride", [](const C& c) { return std::to_string(c.record_stride); },
         [](C& c, const std::string& v) { c.record_stride = parse_int(v); }},
        {"adam_beta1", [](const C& c) { return format_real_shortest(c.adam.beta1); },
         [](C& c, const std::string& v) { c.adam.beta1 = parse_real(v); }},
        {"adam_beta2", [](const C& c) { return format_real_shortest(c.adam.beta2); },
         [](C& c, const std::string& v) { c.adam.beta2 = parse_real(v); }},
        {"adam_eps", [](const C& c) { return format_real_shortest(c.adam.eps); },
         [](C& c, const std::string& v) { c.adam.eps = parse_real(v); }},
        {"lbfgs_history", [](const C& c) { return std::to_string(c.lbfgs.history); },
         [](C& c, const std::string& v) { c.lbfgs.history = parse_int(v); }},
        {"lbfgs_c1", [](const C& c) { return format_real_shortest(c.lbfgs.c1); },
         [](C& c, const std::string& v) { c.lbfgs.c1 = parse_real(v); }},
        {"lbfgs_c2", [](const C& c) { return format_real_shortest(c.lbfgs.c2); },
         [](C& c, const std::string& v) { c.lbfgs.c2 = parse_real(v); }},
        {"lbfgs_max_line_search", [](const C& c) { return std::to_string(c.lbfgs.max_line_search); },
         [](C& c, const std::string& v) { c.lbfgs.max_line_search = parse_int(v); }},
        {"lbfgs_grad_tol", [](const C& c) { return format_real_shortest(c.lbfgs.grad_tol); },
         [](C& c, const std::string& v) { c.lbfgs.grad_tol = parse_real(v); }},
        {"lbfgs_rel_decrease_tol", [](const C& c) { return format_real_shortest(c.lbfgs.rel_decrease_tol); },
         [](C& c, const std::string& v) { c.lbfgs.rel_decrease_tol = parse_real(v); }},
        {"n_eval", [](const C& c) { return std::to_string(c.n_eval); },
         [](C& c, const std::string& v) { c.n_eval = parse_int(v); }},
        {"spectrum_detrend", [](const C& c) { return std::string(c.spectrum_detrend ? "true" : "false"); },
         [](C& c, const std::string& v) { c.spectrum_detrend = parse_bool(v); }},
        {"n_regression", [](const C& c) { return std::to_string(c.n_regression); },
         [](C& c, const std::string& v) { c.n_regression = parse_int(v); }},
        {"trials", [](const C& c) { return std::to_string(c.trials); },
         [](C& c, const std::string& v) { c.trials = parse_int(v); }},
        {"eta", [](const C& c) { return format_real_shortest(c.eta); }, [](C& c, const std::string& v) { c.eta = parse_real(v); }},
        {"eta_halvings", [](const C& c) { return std::to_string(c.eta_halvings); },
         [](C& c, const std::string& v) { c.eta_halvings = parse_int(v); }},
    };
    return table;
}

}  // namespace

std::string format_schedule(const std::vector<TrainStage>& schedule) {
    std::string out;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const TrainStage& st = schedule[i];
        if (i) out += ';';
        out += to_string(st.optimizer) + ':' + std::to_string(st.iterations);
        if (st.optimizer != OptimizerKind::LBFGS) out += ':' + format_real_shortest(st.learning_rate);
    }
    return out;
}

std::vector<TrainStage> parse_schedule(const std::string& text) {
    std::vector<TrainStage> out;
    for (const auto& item : split(trim(text), ';')) {
        const auto parts = split(trim(item), ':');
        if (parts.empty()) throw std::invalid_argument("empty schedule stage");
        TrainStage st;
        st.optimizer = optimizer_from_string(trim(parts[0]));
        const std::size_t expected = st.optimizer == OptimizerKind::LBFGS ? 2 : 3;
        if (parts.size() != expected) throw std::invalid_argument("malformed schedule stage '" + item + "'");
        st.iterations = parse_int(trim(parts[1]));
        if (st.iterations < 0) throw std::invalid_argument("negative stage iteration count");
        if (expected == 3) st.learning_rate = parse_real(trim(parts[2]));
        out.push_back(st);
    }
    return out;
}

std::vector<TrainStage> ExperimentConfig::resolve(const std::vector<TrainStage>& stages) const {
    std::vector<TrainStage> out = stages;
    for (auto& st : out) {
        st.adam = adam;
        st.lbfgs = lbfgs;
    }
    return out;
}

void ExperimentConfig::validate() const {
    architecture().validate();
    if (n_collocation < 1) throw std::invalid_argument("n_collocation must be positive");
    if (!(lambda_b >= 0.0)) throw std::invalid_argument("lambda_b must be nonnegative");
    if (epsilons.empty()) throw std::invalid_argument("epsilon list is empty");
    for (double e : epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("epsilons must be positive");
    if (n_seeds < 1 || trials < 1) throw std::invalid_argument("n_seeds and trials must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be positive");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be positive");
    if (n_eval < 2 || n_regression < 1) throw std::invalid_argument("evaluation and regression point counts too small");
    if (!(eta > 0.0) || eta_halvings < 0) throw std::invalid_argument("invalid flow-check step settings");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_pairs() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
    return out;
}

std::string ExperimentConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : to_pairs()) out += k + "=" + v + "\n";
    return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(*this, value);
            return;
        }
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + " has no '='");
        base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
    return parse_config(read_text_file(path), std::move(base));
}

namespace {

std::vector<double> fig2_epsilons() {
    std::vector<double> eps;
    for (int k = 1; k <= 10; ++k) eps.push_back(1.0 / (10.0 * k));
    return eps;
}

void halve_budgets(std::vector<TrainStage>& stages) {
    for (auto& st : stages) st.iterations /= 2;
}

}  // namespace

ExperimentConfig preset(const std::string& name, bool fast) {
    ExperimentConfig c;
    c.preset = fast ? name + "-fast" : name;
    if (name == "fig1") {
        c.experiment = ExperimentKind::FreqPrinciple;
        c.hidden_widths = {60, 60, 60, 60};
        c.init = InitScheme::Glorot;
        c.n_collocation = 512;
        c.lambda_b = 100.0;
        c.schedule = parse_schedule(fast ? "adam:20000:1e-3" : "adam:40000:1e-3");
        c.record_stride = 100;
        c.n_eval = 512;
        c.spectrum_detrend = true;
    } else if (name == "fig2a" || name == "fig2b") {
        c.experiment = ExperimentKind::NtkScan;
        c.hidden_widths = {50};
        c.init = InitScheme::Normal;
        c.n_collocation = 256;
        c.lambda_b = 1.0;
        c.epsilons = fig2_epsilons();
        c.n_seeds = name == "fig2a" ? 5 : 1;
        c.train_phase = name == "fig2b";
        c.train_init = InitScheme::Glorot;
        c.schedule = parse_schedule(fast ? "adam:2000:1e-5" : "adam:10000:1e-5");
        c.record_stride = 1000;
    } else if (name == "fig3") {
        c.experiment = ExperimentKind::NtkSpectrum;
        c.hidden_widths = {50};
        c.init = InitScheme::Normal;
        c.n_collocation = 256;
        c.lambda_b = 1.0;
        c.epsilons = {1.0 / 80.0};
        c.train_phase = true;
        c.train_init = InitScheme::Glorot;
        c.schedule = parse_schedule(fast ? "adam:2000:1e-5" : "adam:10000:1e-5");
        c.record_stride = 1000;
    } else if (name == "fig4") {
        c.experiment = ExperimentKind::TwoScale;
        c.hidden_widths = {40, 40, 40, 40};
        c.init = InitScheme::Glorot;
        c.n_collocation = 1024;
        // The two-scale PINN losses weight the boundary as 1/2 (u(-pi)^2 + u(pi)^2),
        // i.e. lambda / N_b = 1 with N_b = 2.
        c.lambda_b = 2.0;
        c.epsilons = {1.0 / 32.0};
        c.n_regression = 403;
        c.n_eval = 1000;
        c.trials = fast ? 3 : 10;
        c.schedule_regression = parse_schedule("adam:20000:1e-2;adam:10000:1e-3;lbfgs:3600");
        c.schedule_poisson = parse_schedule("adam:10000:1e-4;adam:10000:1e-5;adam:20000:1e-6;adam:20000:1e-7;lbfgs:3000");
        c.schedule_darcy = parse_schedule("adam:10000:1e-3;adam:10000:1e-4;adam:20000:1e-5;adam:20000:1e-6;lbfgs:3000");
        if (fast) {
            halve_budgets(c.schedule_regression);
            halve_budgets(c.schedule_poisson);
            halve_budgets(c.schedule_darcy);
        }
        c.record_stride = 1000;
    } else if (name == "flow") {
        c.experiment = ExperimentKind::FlowCheck;
        c.hidden_widths = {50};
        c.init = InitScheme::Normal;
        c.n_collocation = 256;
        c.lambda_b = 1.0;
        c.epsilons = {0.1};
        c.eta = 1e-8;
        c.eta_halvings = 4;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return c;
}

std::vector<std::string> preset_names() {
    return {"fig1", "fig2a", "fig2b", "fig3", "fig4", "flow"};
}

std::string default_preset_for(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::FreqPrinciple: return "fig1";
        case ExperimentKind::NtkScan: return "fig2a";
        case ExperimentKind::NtkSpectrum: return "fig3";
        case ExperimentKind::TwoScale: return "fig4";
        case ExperimentKind::FlowCheck: return "flow";
    }
    return "fig1";
}

}  // namespace pinn_ntk
