#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zeroloss/jacobian.hpp"
#include "zeroloss/network.hpp"

namespace zeroloss {

// Exact reverse-mode gradient of the L2 cost with respect to theta
// (canonical flatten order). Equals D^T r / N with r the stacked residuals.
Vector grad_cost(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts);

struct GaussianInit {
    // Weights ~ N(0, scale^2 / fan_in), biases zero.
    double scale = 1.0;
};

struct DescentConfig {
    double step_size = 1e-2;
    std::size_t max_steps = 10000;
    // Converged once cost <= max(cost_threshold, relative_threshold * C_0).
    double cost_threshold = 1e-12;
    double relative_threshold = 1e-6;
    std::size_t rank_check_every = 10;
    GaussianInit init;
    std::optional<Vector> initial_theta;  // overrides init when set
    // Reject a step that raises the cost, halve the step size, and warn.
    bool monotone_guard = true;
    bool keep_snapshots = false;
    std::optional<double> rank_tolerance;
};

void validate(const DescentConfig& cfg);

enum class DescentStatus { Converged, BudgetExhausted, Diverged };

const char* to_string(DescentStatus status);

struct StepRecord {
    std::size_t step = 0;
    double cost = 0.0;
    double grad_norm = 0.0;           // sup norm
    std::optional<std::size_t> rank;  // only at the rank-check cadence
    double min_sigma_prime = 1.0;     // over all hidden pre-activations
    double log_min_sigma_prime = 0.0;
};

struct Snapshot {
    std::size_t step = 0;
    Vector theta;
};

struct TrajectoryRecord {
    // One record per visited parameter point, step 0 being the initial point.
    std::vector<StepRecord> steps;
    DescentStatus status = DescentStatus::BudgetExhausted;
    std::size_t updates = 0;
    double threshold = 0.0;
    double final_step_size = 0.0;
    std::vector<std::string> warnings;
    std::vector<Snapshot> snapshots;  // at rank-check cadence when requested
    Vector final_theta;
};

// Seeded initial parameters (weights N(0, scale^2 / fan_in), zero biases).
NetworkParams initial_params(const NetworkSpec& spec, const GaussianInit& init, std::uint64_t seed);

// Forward Euler: theta <- theta - step_size * grad C. Deterministic in
// (spec, ts, cfg, seed). Non-finite cost ends the run with Diverged.
TrajectoryRecord run_descent(const NetworkSpec& spec, const TrainingSet& ts, const DescentConfig& cfg,
                             std::uint64_t seed);

struct RankEvent {
    std::size_t step = 0;
    std::size_t rank = 0;
    std::size_t expected_rank = 0;
    std::vector<double> smallest_singular_values;  // ascending, at most 3
    std::vector<std::string> violated;
};

// Scans the snapshots of a trajectory for points where rank D < QN.
std::vector<RankEvent> rank_event_scan(const TrajectoryRecord& trajectory, const NetworkSpec& spec,
                                       const TrainingSet& ts, std::optional<double> rank_tolerance = std::nullopt);

struct DepthSweepConfig {
    std::size_t m = 8;
    std::size_t n = 5;
    std::size_t q = 1;
    std::vector<std::size_t> depths{1, 2, 3, 4};
    double eps = 0.01;
    std::vector<std::uint64_t> seeds;
    std::uint64_t data_seed = 1;
    DescentConfig descent;
    std::size_t threads = 1;
};

// Shipped defaults for the depth-slowdown experiment.
DepthSweepConfig default_depth_sweep();

struct DepthSweepRow {
    std::size_t depth = 0;
    std::uint64_t seed = 0;
    std::size_t steps_to_threshold = 0;  // max_steps when not reached
    bool converged = false;
    double final_cost = 0.0;
    double min_grad_norm = 0.0;
    double min_sigma_prime = 1.0;
    // L * log(min over trajectory of min |sigma'|), the log of the proxy.
    double log_sigma_prime_power = 0.0;
};

struct DepthSummary {
    std::size_t depth = 0;
    double median_steps = 0.0;
    double median_min_grad_norm = 0.0;
    double median_log_sigma_prime_power = 0.0;
    std::size_t converged = 0;
};

struct DepthSweepResult {
    std::vector<DepthSweepRow> rows;  // ordered by (depth, seed) as configured
    std::vector<DepthSummary> summary;
};

// Identical data across depths; one descent per (depth, seed), run across
// `threads` workers with results collected in order.
DepthSweepResult depth_slowdown_experiment(const DepthSweepConfig& cfg);

double median(std::vector<double> values);

}  // namespace zeroloss
