#include "zeroloss/descent.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "zeroloss/errors.hpp"

namespace zeroloss {

namespace {

struct Evaluation {
    double cost = 0.0;
    Vector grad;
    double min_sigma_prime = 1.0;
    double log_min_sigma_prime = 0.0;
};

Vector grad_from_trace(const NetworkSpec& spec, const NetworkParams& params, const ForwardTrace& trace,
                       const Matrix& y_omega) {
    const double n = static_cast<double>(y_omega.cols());
    NetworkParams grad = NetworkParams::zeros(spec);
    Matrix delta = (trace.output() - y_omega) / n;
    for (std::size_t l = spec.layers(); l-- > 0;) {
        grad.weights[l] = delta * trace.layer_outputs[l].transpose();
        if (spec.has_bias(l)) grad.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = (params.weights[l].transpose() * delta).cwiseProduct(
                spec.activation.apply_deriv(trace.pre_activations[l - 1]));
        }
    }
    return flatten(spec, grad);
}

Evaluation evaluate(const NetworkSpec& spec, const Vector& theta, const TrainingSet& ts) {
    const NetworkParams params = unflatten(spec, theta);
    const ForwardTrace trace = forward(spec, params, ts.x0);
    Evaluation ev;
    ev.cost = cost_of_output(trace.output(), ts.y_omega);
    ev.grad = grad_from_trace(spec, params, trace, ts.y_omega);
    for (std::size_t l = 0; l < spec.hidden_layers(); ++l) {
        for (double z : trace.pre_activations[l].reshaped()) {
            ev.min_sigma_prime = std::min(ev.min_sigma_prime, std::abs(spec.activation.deriv(z)));
            ev.log_min_sigma_prime = std::min(ev.log_min_sigma_prime, spec.activation.log_deriv(z));
        }
    }
    return ev;
}

double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Vector grad_cost(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts) {
    const ForwardTrace trace = forward(spec, params, ts.x0);
    return grad_from_trace(spec, params, trace, ts.y_omega);
}

void validate(const DescentConfig& cfg) {
    if (!(cfg.step_size > 0.0) || !std::isfinite(cfg.step_size)) {
        throw Error(ErrorKind::ValidationError, "descent step_size must be positive");
    }
    if (!(cfg.cost_threshold > 0.0)) {
        throw Error(ErrorKind::ValidationError, "descent cost_threshold must be positive");
    }
    if (!(cfg.relative_threshold >= 0.0)) {
        throw Error(ErrorKind::ValidationError, "descent relative_threshold must be non-negative");
    }
    if (cfg.rank_check_every == 0) {
        throw Error(ErrorKind::ValidationError, "descent rank_check_every must be >= 1");
    }
    if (!(cfg.init.scale >= 0.0) || !std::isfinite(cfg.init.scale)) {
        throw Error(ErrorKind::ValidationError, "descent init scale must be finite and non-negative");
    }
}

const char* to_string(DescentStatus status) {
    switch (status) {
        case DescentStatus::Converged: return "converged";
        case DescentStatus::BudgetExhausted: return "budget_exhausted";
        case DescentStatus::Diverged: return "diverged";
    }
    return "unknown";
}

NetworkParams initial_params(const NetworkSpec& spec, const GaussianInit& init, std::uint64_t seed) {
    NetworkParams p = NetworkParams::zeros(spec);
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const double fan_in = static_cast<double>(spec.dims[l]);
        p.weights[l] = gaussian_matrix(spec.dims[l + 1], spec.dims[l], seed * 7919ULL + l,
                                       init.scale / std::sqrt(fan_in));
    }
    return p;
}

TrajectoryRecord run_descent(const NetworkSpec& spec, const TrainingSet& ts, const DescentConfig& cfg,
                             std::uint64_t seed) {
    validate(cfg);
    Vector theta = cfg.initial_theta ? *cfg.initial_theta : flatten(spec, initial_params(spec, cfg.init, seed));
    if (static_cast<std::size_t>(theta.size()) != spec.parameter_count()) {
        throw Error(ErrorKind::ShapeError, "initial theta has wrong length");
    }

    TrajectoryRecord traj;
    double step_size = cfg.step_size;
    Evaluation ev = evaluate(spec, theta, ts);
    traj.threshold = std::max(cfg.cost_threshold, cfg.relative_threshold * ev.cost);

    constexpr int kMaxHalvings = 50;
    std::size_t k = 0;
    for (;;) {
        StepRecord rec;
        rec.step = k;
        rec.cost = ev.cost;
        rec.grad_norm = sup_norm(ev.grad);
        rec.min_sigma_prime = ev.min_sigma_prime;
        rec.log_min_sigma_prime = ev.log_min_sigma_prime;

        const bool finite = std::isfinite(ev.cost) && ev.grad.allFinite();
        if (!finite) traj.status = DescentStatus::Diverged;
        else if (ev.cost <= traj.threshold) traj.status = DescentStatus::Converged;
        else if (k == cfg.max_steps) traj.status = DescentStatus::BudgetExhausted;
        const bool last = !finite || ev.cost <= traj.threshold || k == cfg.max_steps;

        if (finite && (k % cfg.rank_check_every == 0 || last)) {
            const Matrix d = jacobian_matrix(spec, unflatten(spec, theta), ts.x0);
            rec.rank = numerical_rank(d, cfg.rank_tolerance).numerical_rank;
            if (cfg.keep_snapshots) traj.snapshots.push_back({k, theta});
        }
        traj.steps.push_back(rec);
        if (last) break;

        Vector trial = theta - step_size * ev.grad;
        Evaluation next = evaluate(spec, trial, ts);
        int halvings = 0;
        while (cfg.monotone_guard && !(next.cost <= ev.cost) && halvings < kMaxHalvings) {
            step_size *= 0.5;
            ++halvings;
            std::ostringstream msg;
            msg.precision(17);
            msg << "step " << k << ": cost increased, step size halved to " << step_size;
            traj.warnings.push_back(msg.str());
            trial = theta - step_size * ev.grad;
            next = evaluate(spec, trial, ts);
        }
        if (cfg.monotone_guard && halvings == kMaxHalvings && !(next.cost <= ev.cost)) {
            traj.warnings.push_back("step " + std::to_string(k) + ": no descent after repeated halving, stopping");
            traj.status = DescentStatus::BudgetExhausted;
            break;
        }
        theta = std::move(trial);
        ev = std::move(next);
        ++k;
    }
    traj.updates = k;
    traj.final_step_size = step_size;
    traj.final_theta = theta;
    return traj;
}

std::vector<RankEvent> rank_event_scan(const TrajectoryRecord& trajectory, const NetworkSpec& spec,
                                       const TrainingSet& ts, std::optional<double> rank_tolerance) {
    std::vector<RankEvent> events;
    for (const Snapshot& snap : trajectory.snapshots) {
        const NetworkParams params = unflatten(spec, snap.theta);
        const RankDiagnosis diag = rank_along_condition(spec, params, ts.x0, rank_tolerance);
        const std::size_t expected = spec.output_dim() * ts.samples();
        if (diag.jacobian_rank.numerical_rank >= expected) continue;

        RankEvent ev;
        ev.step = snap.step;
        ev.rank = diag.jacobian_rank.numerical_rank;
        ev.expected_rank = expected;
        const auto& sv = diag.jacobian_rank.singular_values;
        for (auto it = sv.rbegin(); it != sv.rend() && ev.smallest_singular_values.size() < 3; ++it) {
            ev.smallest_singular_values.push_back(*it);
        }
        ev.violated = diag.violated;
        events.push_back(std::move(ev));
    }
    return events;
}

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

DepthSweepConfig default_depth_sweep() {
    DepthSweepConfig cfg;
    cfg.m = 8;
    cfg.n = 5;
    cfg.q = 1;
    cfg.depths = {1, 2, 3, 4};
    cfg.eps = 0.01;
    for (std::uint64_t s = 1; s <= 15; ++s) cfg.seeds.push_back(s);
    cfg.data_seed = 1;
    cfg.descent.step_size = 0.1;
    cfg.descent.max_steps = 10000;
    cfg.descent.cost_threshold = 1e-12;
    cfg.descent.relative_threshold = 1e-6;
    cfg.descent.rank_check_every = 100;
    cfg.descent.init.scale = 0.6;
    cfg.threads = 1;
    return cfg;
}

DepthSweepResult depth_slowdown_experiment(const DepthSweepConfig& cfg) {
    validate(cfg.descent);
    if (cfg.seeds.empty() || cfg.depths.empty()) {
        throw Error(ErrorKind::ValidationError, "depth sweep needs at least one depth and one seed");
    }
    const TrainingSet ts = generate_generic_data(cfg.m, cfg.n, cfg.q, cfg.data_seed);
    const Activation act = Activation::mollified_relu(cfg.eps);

    struct Task {
        std::size_t depth;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t depth : cfg.depths) {
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({depth, seed});
    }

    DepthSweepResult result;
    result.rows.resize(tasks.size());
    auto run_task = [&](std::size_t i) {
        const Task& t = tasks[i];
        std::vector<std::size_t> dims(t.depth + 1, cfg.m);
        dims.push_back(cfg.q);
        const NetworkSpec spec(dims, act);
        DescentConfig dc = cfg.descent;
        dc.keep_snapshots = false;
        const TrajectoryRecord traj = run_descent(spec, ts, dc, t.seed);

        DepthSweepRow row;
        row.depth = t.depth;
        row.seed = t.seed;
        row.converged = traj.status == DescentStatus::Converged;
        row.steps_to_threshold = row.converged ? traj.updates : cfg.descent.max_steps;
        row.final_cost = traj.steps.back().cost;
        row.min_grad_norm = std::numeric_limits<double>::infinity();
        double min_log = 0.0;
        for (const StepRecord& s : traj.steps) {
            row.min_grad_norm = std::min(row.min_grad_norm, s.grad_norm);
            row.min_sigma_prime = std::min(row.min_sigma_prime, s.min_sigma_prime);
            min_log = std::min(min_log, s.log_min_sigma_prime);
        }
        row.log_sigma_prime_power = static_cast<double>(t.depth) * min_log;
        result.rows[i] = row;
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, tasks.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> failures(tasks.size());
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < tasks.size(); i = next++) {
                        try {
                            run_task(i);
                        } catch (...) {
                            failures[i] = std::current_exception();
                        }
                    }
                });
            }
        }
        for (const auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    for (std::size_t depth : cfg.depths) {
        std::vector<double> steps;
        std::vector<double> grads;
        std::vector<double> logs;
        DepthSummary s;
        s.depth = depth;
        for (const DepthSweepRow& row : result.rows) {
            if (row.depth != depth) continue;
            steps.push_back(static_cast<double>(row.steps_to_threshold));
            grads.push_back(row.min_grad_norm);
            logs.push_back(row.log_sigma_prime_power);
            if (row.converged) ++s.converged;
        }
        s.median_steps = median(steps);
        s.median_min_grad_norm = median(grads);
        s.median_log_sigma_prime_power = median(logs);
        result.summary.push_back(s);
    }
    return result;
}

}  // namespace zeroloss
