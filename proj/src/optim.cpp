#include "pinn_ntk/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace pinn_ntk {

Objective pinn_objective(const BVPSpec& spec, const MLPArchitecture& arch, const LossConfig& cfg) {
    Objective obj;
    obj.eval = [spec, arch, cfg](const Vector& theta, Vector* grad) {
        return pinn_loss_and_grad(spec, unflatten(arch, theta), arch, cfg, grad);
    };
    obj.residuals = [spec, arch, cfg](const Vector& theta) {
        const ParameterSet p = unflatten(arch, theta);
        Vector r(static_cast<Eigen::Index>(cfg.grid.interior.size() + cfg.grid.boundary.size()));
        Eigen::Index k = 0;
        for (double x : cfg.grid.interior) r(k++) = residual_pde(spec, p, arch, x);
        for (double s : cfg.grid.boundary) r(k++) = residual_boundary(spec, p, arch, s);
        return r;
    };
    return obj;
}

Objective regression_objective(const MLPArchitecture& arch, std::vector<Sample> samples) {
    Objective obj;
    obj.eval = [arch, samples = std::move(samples)](const Vector& theta, Vector* grad) {
        return regression_loss_and_grad(unflatten(arch, theta), arch, samples, grad);
    };
    return obj;
}

std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::GD: return "gd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::LBFGS: return "lbfgs";
    }
    return "unknown";
}

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "gd") return OptimizerKind::GD;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "lbfgs") return OptimizerKind::LBFGS;
    throw std::invalid_argument("unknown optimizer '" + name + "'");
}

std::string to_string(LbfgsStop s) {
    switch (s) {
        case LbfgsStop::GradientTolerance: return "gradient-tolerance";
        case LbfgsStop::RelativeDecrease: return "relative-decrease";
        case LbfgsStop::LineSearchFailure: return "line-search-failure";
        case LbfgsStop::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

Vector gd_step(const Vector& params, const Vector& grad, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!grad.allFinite()) throw std::invalid_argument("non-finite gradient in gradient descent step");
    return params - eta * grad;
}

void adam_step(AdamState& state, Vector& params, const Vector& grad, double eta, const AdamOptions& opt) {
    if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!grad.allFinite()) throw std::invalid_argument("non-finite gradient in Adam step");
    if (state.step == 0) {
        state.m = Vector::Zero(params.size());
        state.v = Vector::Zero(params.size());
    }
    ++state.step;
    state.m = opt.beta1 * state.m + (1.0 - opt.beta1) * grad;
    state.v = opt.beta2 * state.v + (1.0 - opt.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    params.array() -= eta * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + opt.eps);
}

namespace {

struct Point {
    double alpha;
    double f;
    double dphi;
    Vector x;
    Vector g;
};

// Strong Wolfe line search (bracketing + zoom with safeguarded cubic
// interpolation). Returns nullopt when no point with sufficient decrease
// was found.
class LineSearch {
public:
    LineSearch(const Objective& obj, const Vector& x0, double f0, const Vector& g0, const Vector& dir,
               const LbfgsOptions& opt)
        : obj_(obj), x0_(x0), dir_(dir), f0_(f0), dphi0_(g0.dot(dir)), opt_(opt) {}

    std::optional<Point> run(double alpha0) {
        Point prev{0.0, f0_, dphi0_, x0_, Vector()};
        double alpha = alpha0;
        for (int i = 0; i < opt_.max_line_search; ++i) {
            Point cur = eval(alpha);
            if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * alpha * dphi0_ || (i > 0 && cur.f >= prev.f))
                return zoom(prev, cur);
            if (std::abs(cur.dphi) <= -opt_.c2 * dphi0_) return cur;
            if (cur.dphi >= 0.0) return zoom(cur, prev);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return armijo_fallback(prev);
    }

private:
    Point eval(double alpha) {
        Point p;
        p.alpha = alpha;
        p.x = x0_ + alpha * dir_;
        p.f = obj_.eval(p.x, &p.g);
        p.dphi = std::isfinite(p.f) && p.g.allFinite() ? p.g.dot(dir_) : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(p.dphi)) p.f = std::numeric_limits<double>::infinity();
        return p;
    }

    std::optional<Point> armijo_fallback(const Point& p) const {
        if (p.alpha > 0.0 && p.f <= f0_ + opt_.c1 * p.alpha * dphi0_ && p.f < f0_) return p;
        return std::nullopt;
    }

    static double interpolate(const Point& lo, const Point& hi) {
        const double a = lo.alpha;
        const double b = hi.alpha;
        double trial = 0.5 * (a + b);
        if (std::isfinite(hi.f) && std::isfinite(hi.dphi)) {
            const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
            const double disc = d1 * d1 - lo.dphi * hi.dphi;
            if (disc >= 0.0) {
                const double d2 = (b > a ? 1.0 : -1.0) * std::sqrt(disc);
                const double c = b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
                if (std::isfinite(c)) trial = c;
            }
        }
        const double lo_b = std::min(a, b);
        const double hi_b = std::max(a, b);
        const double margin = 0.1 * (hi_b - lo_b);
        if (trial < lo_b + margin || trial > hi_b - margin) trial = 0.5 * (a + b);
        return trial;
    }

    std::optional<Point> zoom(Point lo, Point hi) {
        for (int j = 0; j < opt_.max_line_search; ++j) {
            const double alpha = interpolate(lo, hi);
            Point cur = eval(alpha);
            if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * alpha * dphi0_ || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.dphi) <= -opt_.c2 * dphi0_) return cur;
                if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
        }
        return armijo_fallback(lo);
    }

    const Objective& obj_;
    const Vector& x0_;
    const Vector& dir_;
    double f0_;
    double dphi0_;
    const LbfgsOptions& opt_;
};

// Incremental L-BFGS so that train() can record per iteration.
class LbfgsSolver {
public:
    LbfgsSolver(const Objective& obj, Vector x, const LbfgsOptions& opt) : obj_(obj), opt_(opt), x_(std::move(x)) {
        f_ = obj_.eval(x_, &g_);
        if (!std::isfinite(f_)) throw std::invalid_argument("L-BFGS needs a finite initial loss");
    }

    double loss() const { return f_; }
    const Vector& params() const { return x_; }
    bool converged() const { return g_.norm() < opt_.grad_tol; }

    /// One iteration; returns a stop reason when the run should end.
    std::optional<LbfgsStop> step() {
        if (converged()) return LbfgsStop::GradientTolerance;
        Vector dir = direction();
        if (!(g_.dot(dir) < 0.0)) {
            s_.clear();
            y_.clear();
            dir = -g_;
        }
        const double alpha0 = s_.empty() ? std::min(1.0, 1.0 / g_.norm()) : 1.0;
        LineSearch ls(obj_, x_, f_, g_, dir, opt_);
        std::optional<Point> p = ls.run(alpha0);
        if (!p) return LbfgsStop::LineSearchFailure;

        Vector s = p->x - x_;
        Vector y = p->g - g_;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            s_.push_back(std::move(s));
            y_.push_back(std::move(y));
            if (static_cast<int>(s_.size()) > opt_.history) {
                s_.pop_front();
                y_.pop_front();
            }
        }
        const double f_old = f_;
        x_ = std::move(p->x);
        g_ = std::move(p->g);
        f_ = p->f;
        if (converged()) return LbfgsStop::GradientTolerance;
        if ((f_old - f_) <= opt_.rel_decrease_tol * std::abs(f_old)) return LbfgsStop::RelativeDecrease;
        return std::nullopt;
    }

private:
    Vector direction() const {
        Vector q = -g_;
        const std::size_t m = s_.size();
        std::vector<double> alpha(m), rho(m);
        for (std::size_t i = m; i-- > 0;) {
            rho[i] = 1.0 / y_[i].dot(s_[i]);
            alpha[i] = rho[i] * s_[i].dot(q);
            q -= alpha[i] * y_[i];
        }
        if (m > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
        for (std::size_t i = 0; i < m; ++i) {
            const double beta = rho[i] * y_[i].dot(q);
            q += (alpha[i] - beta) * s_[i];
        }
        return q;
    }

    const Objective& obj_;
    LbfgsOptions opt_;
    Vector x_;
    Vector g_;
    double f_ = 0.0;
    std::deque<Vector> s_;
    std::deque<Vector> y_;
};

}  // namespace

LbfgsResult lbfgs_run(const Objective& obj, const Vector& params, int max_iters, const LbfgsOptions& opt) {
    LbfgsSolver solver(obj, params, opt);
    LbfgsResult result;
    result.losses.push_back(solver.loss());
    if (solver.converged()) {
        result.stop = LbfgsStop::GradientTolerance;
        result.params = solver.params();
        return result;
    }
    result.stop = LbfgsStop::MaxIterations;
    while (result.iterations < max_iters) {
        const double before = solver.loss();
        const auto stop = solver.step();
        if (solver.loss() < before) {
            ++result.iterations;
            result.losses.push_back(solver.loss());
        }
        if (stop) {
            result.stop = *stop;
            break;
        }
    }
    result.params = solver.params();
    return result;
}

namespace {

class Recorder {
public:
    Recorder(const Objective& obj, const RecordOptions& rec, TrainHistory& hist) : obj_(obj), rec_(rec), hist_(hist) {}

    void maybe_record(long it, double loss, int stage, const Vector& theta, bool force = false) {
        if (!hist_.records.empty() && hist_.records.back().iteration >= it) return;
        if (!force && (rec_.stride <= 0 || it % rec_.stride != 0)) return;
        HistoryRecord r;
        r.iteration = it;
        r.loss = loss;
        r.stage = stage;
        if (rec_.keep_params) r.params = theta;
        if (rec_.keep_residuals && obj_.residuals) r.residuals = obj_.residuals(theta);
        hist_.records.push_back(std::move(r));
    }

private:
    const Objective& obj_;
    const RecordOptions& rec_;
    TrainHistory& hist_;
};

}  // namespace

TrainResult train(const Objective& obj, const Vector& params, const std::vector<TrainStage>& schedule,
                  const RecordOptions& rec) {
    for (const auto& st : schedule) {
        if (st.iterations < 0) throw std::invalid_argument("stage iteration count must be nonnegative");
        if (st.optimizer != OptimizerKind::LBFGS && !(st.learning_rate > 0.0))
            throw std::invalid_argument("stage learning rate must be positive");
    }
    TrainResult result;
    TrainHistory& hist = result.history;
    Recorder recorder(obj, rec, hist);

    Vector theta = params;
    Vector grad;
    double loss = obj.eval(theta, &grad);
    long it = 0;
    int stage_index = 0;
    auto finite = [&] { return std::isfinite(loss) && grad.allFinite(); };
    if (!finite()) {
        hist.aborted = true;
        hist.abort_reason = "non-finite loss at the initial parameters";
        result.params = theta;
        return result;
    }
    recorder.maybe_record(it, loss, 0, theta, true);

    for (const auto& st : schedule) {
        if (hist.aborted) break;
        if (st.optimizer == OptimizerKind::LBFGS) {
            if (st.iterations == 0) {
                ++stage_index;
                continue;
            }
            LbfgsSolver solver(obj, theta, st.lbfgs);
            for (int k = 0; k < st.iterations; ++k) {
                const auto stop = solver.step();
                if (solver.loss() < loss) {
                    theta = solver.params();
                    loss = solver.loss();
                    ++it;
                    recorder.maybe_record(it, loss, stage_index, theta);
                }
                if (stop) break;
            }
            grad.resize(0);
            loss = obj.eval(theta, &grad);
        } else {
            AdamState adam;
            for (int k = 0; k < st.iterations; ++k) {
                Vector next = theta;
                if (st.optimizer == OptimizerKind::GD)
                    next = gd_step(theta, grad, st.learning_rate);
                else
                    adam_step(adam, next, grad, st.learning_rate, st.adam);
                Vector next_grad;
                const double next_loss = obj.eval(next, &next_grad);
                if (!std::isfinite(next_loss) || !next_grad.allFinite()) {
                    hist.aborted = true;
                    hist.abort_reason = "non-finite loss at iteration " + std::to_string(it + 1);
                    break;
                }
                theta = std::move(next);
                grad = std::move(next_grad);
                loss = next_loss;
                ++it;
                recorder.maybe_record(it, loss, stage_index, theta);
            }
        }
        ++stage_index;
    }
    recorder.maybe_record(it, loss, std::max(0, stage_index - 1), theta, true);
    hist.iterations_run = it;
    result.params = std::move(theta);
    return result;
}

TrainResult train(const BVPSpec& spec, const ParameterSet& params, const MLPArchitecture& arch, const LossConfig& cfg,
                  const std::vector<TrainStage>& schedule, const RecordOptions& rec) {
    return train(pinn_objective(spec, arch, cfg), flatten(params), schedule, rec);
}

}  // namespace pinn_ntk
