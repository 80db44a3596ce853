#include "zeroloss/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "zeroloss/errors.hpp"

namespace zeroloss {

namespace {

Error invalid(const std::string& msg) { return Error(ErrorKind::ValidationError, msg); }

}  // namespace

Mode mode_from_string(const std::string& s) {
    if (s == "construct") return Mode::Construct;
    if (s == "jacobian-rank") return Mode::JacobianRank;
    if (s == "descend") return Mode::Descend;
    if (s == "lemma-check") return Mode::LemmaCheck;
    if (s == "depth-sweep") return Mode::DepthSweep;
    throw invalid("unknown mode '" + s + "'");
}

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::Construct: return "construct";
        case Mode::JacobianRank: return "jacobian-rank";
        case Mode::Descend: return "descend";
        case Mode::LemmaCheck: return "lemma-check";
        case Mode::DepthSweep: return "depth-sweep";
    }
    return "unknown";
}

Json default_config(Mode mode) {
    const bool sweep = mode == Mode::DepthSweep;
    const DepthSweepConfig sweep_defaults = default_depth_sweep();

    Json cfg;
    cfg["mode"] = to_string(mode);
    cfg["dims"] = {{"M", 8}, {"N", 5}, {"Q", sweep ? 1 : 2}, {"L", 3}, {"L_list", sweep_defaults.depths}};
    cfg["activation"] = {{"name", sweep ? "mollified_relu" : "softplus"}, {"eps", sweep_defaults.eps}};
    cfg["seed"] = 1;
    cfg["seeds"] = sweep_defaults.seeds;
    cfg["rank_tol"] = nullptr;
    cfg["lambda_margin"] = 1.0;
    cfg["fd_step"] = 1e-5;
    cfg["output_scale"] = 1.0;
    cfg["construction"] = "auto";
    cfg["params"] = "constructed";
    cfg["init_scale"] = sweep_defaults.descent.init.scale;
    cfg["dump_jacobian"] = false;
    cfg["trials"] = 1000;
    cfg["zero_row_trials"] = 100;
    cfg["max_rows"] = 6;
    cfg["max_cols"] = 10;
    cfg["threads"] = 1;

    const DescentConfig d = sweep ? sweep_defaults.descent : DescentConfig{};
    cfg["descent"] = {
        {"init", "gaussian"},
        {"step_size", d.step_size},
        {"max_steps", d.max_steps},
        {"cost_threshold", d.cost_threshold},
        {"relative_threshold", d.relative_threshold},
        {"rank_check_every", d.rank_check_every},
        {"monotone_guard", d.monotone_guard},
    };
    cfg["output_dir"] = "out";
    return cfg;
}

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw invalid("override '" + assignment + "' is not of the form key=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;

    if (!doc.is_object()) doc = Json::object();
    Json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw invalid("override key '" + path + "' has an empty component");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        Json& child = (*node)[key];
        if (!child.is_object()) child = Json::object();
        node = &child;
        start = dot + 1;
    }
}

namespace {

bool same_kind(const Json& def, const Json& val) {
    if (def.is_null()) return val.is_null() || val.is_number();  // optional numbers
    if (def.is_number_float()) return val.is_number();
    if (def.is_number_integer()) return val.is_number_integer() || val.is_number_unsigned();
    if (def.is_boolean()) return val.is_boolean();
    if (def.is_string()) return val.is_string();
    if (def.is_array()) return val.is_array();
    if (def.is_object()) return val.is_object();
    return false;
}

void merge(Json& target, const Json& user, const std::string& prefix) {
    if (!user.is_object()) throw invalid("configuration" + (prefix.empty() ? "" : " field '" + prefix + "'") + " must be an object");
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!target.contains(key)) throw invalid("unknown field '" + path + "'");
        Json& slot = target[key];
        if (!same_kind(slot, value)) throw invalid("field '" + path + "' has the wrong type");
        if (slot.is_object()) {
            merge(slot, value, path);
        } else if (slot.is_number_float() && value.is_number()) {
            slot = value.get<double>();
        } else {
            slot = value;
        }
    }
}

std::size_t count_field(const Json& cfg, const char* key, std::size_t min_value) {
    const Json& v = cfg.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
        throw invalid(std::string("field '") + key + "' must be an integer >= " + std::to_string(min_value));
    }
    return v.get<std::size_t>();
}

std::vector<std::size_t> count_list(const Json& arr, const char* key) {
    std::vector<std::size_t> out;
    for (const Json& v : arr) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            throw invalid(std::string("field '") + key + "' must hold non-negative integers");
        }
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

double positive(const Json& cfg, const char* key) {
    const double v = cfg.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw invalid(std::string("field '") + key + "' must be positive");
    return v;
}

DescentConfig descent_from(const Json& cfg) {
    const Json& d = cfg.at("descent");
    DescentConfig dc;
    dc.step_size = d.at("step_size").get<double>();
    dc.max_steps = count_field(d, "max_steps", 0);
    dc.cost_threshold = d.at("cost_threshold").get<double>();
    dc.relative_threshold = d.at("relative_threshold").get<double>();
    dc.rank_check_every = count_field(d, "rank_check_every", 1);
    dc.monotone_guard = d.at("monotone_guard").get<bool>();
    dc.init.scale = cfg.at("init_scale").get<double>();
    if (!cfg.at("rank_tol").is_null()) dc.rank_tolerance = cfg.at("rank_tol").get<double>();
    validate(dc);
    return dc;
}

struct Dims {
    std::size_t m, n, q, l;
};

Dims dims_from(const Json& cfg) {
    const Json& d = cfg.at("dims");
    return {count_field(d, "M", 1), count_field(d, "N", 1), count_field(d, "Q", 1), count_field(d, "L", 0)};
}

Activation activation_from(const Json& cfg) {
    const Json& a = cfg.at("activation");
    return Activation::from_name(a.at("name").get<std::string>(), a.at("eps").get<double>());
}

std::optional<double> rank_tol_from(const Json& cfg) {
    if (cfg.at("rank_tol").is_null()) return std::nullopt;
    return positive(cfg, "rank_tol");
}

ConstructionMethod method_for(const Json& cfg, const NetworkSpec& spec) {
    const std::string m = cfg.at("construction").get<std::string>();
    if (spec.hidden_layers() == 0) return ConstructionMethod::Linear;
    if (m == "linear") throw invalid("construction 'linear' requires L = 0");
    if (m == "general") return ConstructionMethod::GeneralPullback;
    if (m == "positive_sector") return ConstructionMethod::PositiveSector;
    if (m == "auto") {
        return spec.activation.flags().is_diffeo_to_positive ? ConstructionMethod::PositiveSector
                                                             : ConstructionMethod::GeneralPullback;
    }
    throw invalid("unknown construction method '" + m + "'");
}

NetworkSpec network_from(const Json& cfg, const Dims& d) {
    std::vector<std::size_t> dims(d.l + 1, d.m);
    dims.push_back(d.q);
    return NetworkSpec(dims, activation_from(cfg));
}

void validate_resolved(Mode mode, const Json& cfg) {
    activation_from(cfg);
    rank_tol_from(cfg);
    positive(cfg, "fd_step");
    positive(cfg, "init_scale");
    count_field(cfg, "threads", 1);
    if (!std::isfinite(cfg.at("lambda_margin").get<double>())) throw invalid("field 'lambda_margin' must be finite");
    const double scale = cfg.at("output_scale").get<double>();
    if (!std::isfinite(scale) || scale == 0.0) throw invalid("field 'output_scale' must be finite and nonzero");
    descent_from(cfg);
    const std::string params = cfg.at("params").get<std::string>();
    if (params != "constructed" && params != "random") throw invalid("field 'params' must be 'constructed' or 'random'");
    const std::string init = cfg.at("descent").at("init").get<std::string>();
    if (init != "gaussian" && init != "constructed") {
        throw invalid("field 'descent.init' must be 'gaussian' or 'constructed'");
    }
    for (const Json& s : cfg.at("seeds")) {
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0) throw invalid("field 'seeds' must hold non-negative integers");
    }
    if (!cfg.at("seed").is_number_integer() || cfg.at("seed").get<std::int64_t>() < 0) {
        throw invalid("field 'seed' must be a non-negative integer");
    }

    const Dims d = dims_from(cfg);
    switch (mode) {
        case Mode::Construct:
        case Mode::JacobianRank:
        case Mode::Descend: {
            if (d.n >= d.m) throw invalid("dims: N < M is required (strongly overparameterized data)");
            if (d.q > d.m) throw invalid("dims: Q <= M is required");
            const NetworkSpec spec = network_from(cfg, d);
            // jacobian-rank reads `params`; descend reads `descent.init`.
            const bool needs_construction = mode == Mode::Construct ||
                                            (mode == Mode::JacobianRank && params == "constructed") ||
                                            (mode == Mode::Descend && init == "constructed");
            if (needs_construction) {
                const ConstructionMethod method = method_for(cfg, spec);
                if (method == ConstructionMethod::PositiveSector && !spec.activation.flags().is_diffeo_to_positive) {
                    throw invalid("positive_sector construction needs softplus or mollified_relu");
                }
                if (method == ConstructionMethod::GeneralPullback && !spec.activation.flags().is_local_diffeo) {
                    throw invalid("general construction needs a locally invertible activation (not relu)");
                }
            }
            break;
        }
        case Mode::LemmaCheck: {
            count_field(cfg, "trials", 0);
            count_field(cfg, "zero_row_trials", 0);
            const std::size_t rows = count_field(cfg, "max_rows", 1);
            if (count_field(cfg, "max_cols", 1) < rows) throw invalid("max_cols must be >= max_rows");
            break;
        }
        case Mode::DepthSweep: {
            if (cfg.at("activation").at("name").get<std::string>() != "mollified_relu") {
                throw invalid("depth-sweep uses the mollified_relu activation");
            }
            if (d.n >= d.m) throw invalid("dims: N < M is required (strongly overparameterized data)");
            if (d.q > d.m) throw invalid("dims: Q <= M is required");
            if (cfg.at("dims").at("L_list").empty()) throw invalid("dims.L_list must not be empty");
            count_list(cfg.at("dims").at("L_list"), "dims.L_list");
            if (cfg.at("seeds").empty()) throw invalid("field 'seeds' must not be empty");
            break;
        }
    }
}

}  // namespace

Json resolve_config(Mode mode, const Json& user) {
    Json cfg = default_config(mode);
    try {
        merge(cfg, user, "");
        if (cfg.at("mode").get<std::string>() != to_string(mode)) {
            throw invalid("config mode '" + cfg.at("mode").get<std::string>() + "' differs from requested mode '" +
                          to_string(mode) + "'");
        }
        validate_resolved(mode, cfg);
    } catch (const Error& e) {
        throw Error(ErrorKind::ValidationError, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw invalid(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

LemmaCheckResult lemma_check(std::size_t trials, std::size_t zero_row_trials, std::uint64_t seed,
                             std::size_t max_rows, std::size_t max_cols) {
    std::mt19937_64 rng(seed);
    LemmaCheckResult result;
    const std::size_t total = trials + zero_row_trials;
    for (std::size_t i = 0; i < total; ++i) {
        LemmaTrial trial;
        trial.index = i;
        trial.zero_row = i >= trials;
        trial.n = std::uniform_int_distribution<std::size_t>(1, max_rows)(rng);
        std::uniform_int_distribution<std::size_t> width(trial.n, max_cols);
        trial.s = width(rng);
        trial.t = width(rng);

        Matrix a = gaussian_matrix(trial.n, trial.s, rng());
        while (!numerical_rank(a).full_rank()) a = gaussian_matrix(trial.n, trial.s, rng());
        Matrix b = gaussian_matrix(trial.n, trial.t, rng());
        if (trial.zero_row) {
            const auto row = static_cast<Eigen::Index>(
                std::uniform_int_distribution<std::size_t>(0, trial.n - 1)(rng));
            if (std::bernoulli_distribution(0.5)(rng)) {
                a.row(row).setZero();
            } else {
                b.row(row).setZero();
            }
        }
        const RankResult r = numerical_rank(bvtp(a, b));
        trial.rank = r.numerical_rank;
        trial.full_rank = r.full_rank();
        if (trial.zero_row) {
            ++result.zero_row_trials;
            if (!trial.full_rank) ++result.zero_row_rank_deficient;
        } else {
            ++result.full_rank_trials;
            if (trial.full_rank) ++result.full_rank_confirmed;
        }
        result.trials.push_back(trial);
    }
    return result;
}

namespace {

Json without_output_dir(const Json& cfg) {
    Json p = cfg;
    p.erase("output_dir");
    return p;
}

TrainingSet training_from(const Json& cfg, const Dims& d) {
    return generate_generic_data(d.m, d.n, d.q, cfg.at("seed").get<std::uint64_t>(),
                                 cfg.at("output_scale").get<double>());
}

ConstructionRecord construct_from(const Json& cfg, const NetworkSpec& spec, const TrainingSet& ts) {
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    switch (method_for(cfg, spec)) {
        case ConstructionMethod::Linear: return construct_linear(ts);
        case ConstructionMethod::GeneralPullback: return construct_general(spec, ts);
        case ConstructionMethod::PositiveSector: {
            PositiveSectorOptions opts;
            opts.interior_seed = seed;
            opts.output_weight_seed = seed;
            opts.lambda_margin = cfg.at("lambda_margin").get<double>();
            return construct_positive_sector(spec, ts, opts);
        }
    }
    throw invalid("unreachable construction method");
}

Json dims_json(const NetworkSpec& spec, const TrainingSet& ts) {
    return {{"K", spec.parameter_count()}, {"QN", spec.output_dim() * ts.samples()}};
}

ExperimentOutput run_construct(const Json& cfg) {
    const Dims d = dims_from(cfg);
    const NetworkSpec spec = network_from(cfg, d);
    const TrainingSet ts = training_from(cfg, d);
    const ConstructionRecord rec = construct_from(cfg, spec, ts);
    const ZeroLossCheck check = verify_zero_loss(rec.spec, rec.params, ts);

    ExperimentOutput out;
    out.report["dimensions"] = dims_json(rec.spec, ts);
    out.report["data_seed_used"] = ts.seed_used;
    Json c = to_json(rec);
    c["max_abs_residual"] = check.max_abs_residual;
    out.report["construction"] = std::move(c);
    out.report["rank_diagnosis"] = to_json(rank_along_condition(rec.spec, rec.params, ts.x0, rank_tol_from(cfg)));

    const ForwardTrace trace = forward(rec.spec, rec.params, ts.x0);
    std::string layers = "layer,rows,cols,weight_rank,min_singular_value,lambda,min_output,max_output\n";
    for (std::size_t l = 1; l <= rec.spec.layers(); ++l) {
        const Matrix& w = rec.params.weights[l - 1];
        const RankResult wr = numerical_rank(w);
        // lambda_values run from the output layer downwards.
        const std::size_t from_top = rec.spec.layers() - l;
        const Matrix& xl = trace.layer_outputs[l];
        layers += std::to_string(l) + "," + std::to_string(w.rows()) + "," + std::to_string(w.cols()) + "," +
                  std::to_string(wr.numerical_rank) + "," + format_double(wr.singular_values.back()) + ",";
        if (from_top < rec.lambda_values.size()) layers += format_double(rec.lambda_values[from_top]);
        layers += "," + format_double(xl.minCoeff()) + "," + format_double(xl.maxCoeff()) + "\n";
    }
    out.files.emplace_back("construction_layers.csv", layers);
    out.files.emplace_back("model.json", dump_json(model_document(rec.spec, rec.params, ts)));
    return out;
}

ExperimentOutput run_jacobian_rank(const Json& cfg) {
    const Dims d = dims_from(cfg);
    NetworkSpec spec = network_from(cfg, d);
    const TrainingSet ts = training_from(cfg, d);
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

    ExperimentOutput out;
    NetworkParams params;
    if (cfg.at("params").get<std::string>() == "constructed") {
        const ConstructionRecord rec = construct_from(cfg, spec, ts);
        spec = rec.spec;
        params = rec.params;
        out.report["construction"] = {{"method", to_string(rec.method)}, {"achieved_cost", rec.achieved_cost}};
    } else {
        params = initial_params(spec, GaussianInit{cfg.at("init_scale").get<double>()}, seed);
    }

    const std::optional<double> tol = rank_tol_from(cfg);
    const JacobianReport jac = jacobian_analytic(spec, params, ts.x0, tol);
    const double h = cfg.at("fd_step").get<double>();
    const FdJacobian fd = jacobian_fd(spec, params, ts.x0, h);

    out.report["dimensions"] = dims_json(spec, ts);
    out.report["jacobian"] = to_json(jac);
    out.report["rank_diagnosis"] = to_json(rank_along_condition(spec, params, ts.x0, tol));
    out.report["finite_difference"] = {{"step", h},
                                       {"max_abs_difference", (jac.d - fd.d).cwiseAbs().maxCoeff()},
                                       {"near_kink", fd.near_kink}};

    std::string sv = "index,singular_value\n";
    for (std::size_t i = 0; i < jac.rank.singular_values.size(); ++i) {
        sv += std::to_string(i) + "," + format_double(jac.rank.singular_values[i]) + "\n";
    }
    out.files.emplace_back("singular_values.csv", sv);
    if (cfg.at("dump_jacobian").get<bool>()) out.files.emplace_back("jacobian.csv", matrix_csv(jac.d));
    return out;
}

ExperimentOutput run_descend(const Json& cfg) {
    const Dims d = dims_from(cfg);
    NetworkSpec spec = network_from(cfg, d);
    const TrainingSet ts = training_from(cfg, d);
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    DescentConfig dc = descent_from(cfg);
    dc.keep_snapshots = true;

    ExperimentOutput out;
    if (cfg.at("descent").at("init").get<std::string>() == "constructed") {
        const ConstructionRecord rec = construct_from(cfg, spec, ts);
        spec = rec.spec;
        dc.initial_theta = flatten(rec.spec, rec.params);
        out.report["construction"] = {{"method", to_string(rec.method)}, {"achieved_cost", rec.achieved_cost}};
    }
    const TrajectoryRecord traj = run_descent(spec, ts, dc, seed);
    const std::vector<RankEvent> events = rank_event_scan(traj, spec, ts, dc.rank_tolerance);

    out.report["dimensions"] = dims_json(spec, ts);
    Json t;
    t["status"] = to_string(traj.status);
    t["updates"] = traj.updates;
    t["initial_cost"] = traj.steps.front().cost;
    t["final_cost"] = traj.steps.back().cost;
    t["threshold"] = traj.threshold;
    t["final_step_size"] = traj.final_step_size;
    t["warnings"] = traj.warnings;
    Json ev = Json::array();
    for (const RankEvent& e : events) ev.push_back(to_json(e));
    t["rank_events"] = std::move(ev);
    t["final_theta"] = vector_to_json(traj.final_theta);
    out.report["trajectory"] = std::move(t);
    out.files.emplace_back("trajectory.csv", trajectory_csv(traj));
    return out;
}

ExperimentOutput run_lemma_check(const Json& cfg) {
    const LemmaCheckResult r =
        lemma_check(cfg.at("trials").get<std::size_t>(), cfg.at("zero_row_trials").get<std::size_t>(),
                    cfg.at("seed").get<std::uint64_t>(), cfg.at("max_rows").get<std::size_t>(),
                    cfg.at("max_cols").get<std::size_t>());
    ExperimentOutput out;
    out.report["lemma"] = {{"full_rank_trials", r.full_rank_trials},
                           {"full_rank_confirmed", r.full_rank_confirmed},
                           {"zero_row_trials", r.zero_row_trials},
                           {"zero_row_rank_deficient", r.zero_row_rank_deficient},
                           {"all_confirmed", r.full_rank_confirmed == r.full_rank_trials &&
                                                 r.zero_row_rank_deficient == r.zero_row_trials}};
    std::string csv = "trial,n,s,t,zero_row,rank,full_rank\n";
    for (const LemmaTrial& t : r.trials) {
        csv += std::to_string(t.index) + "," + std::to_string(t.n) + "," + std::to_string(t.s) + "," +
               std::to_string(t.t) + "," + (t.zero_row ? "1" : "0") + "," + std::to_string(t.rank) + "," +
               (t.full_rank ? "1" : "0") + "\n";
    }
    out.files.emplace_back("lemma_trials.csv", csv);
    return out;
}

ExperimentOutput run_depth_sweep(const Json& cfg) {
    const Dims d = dims_from(cfg);
    DepthSweepConfig sc;
    sc.m = d.m;
    sc.n = d.n;
    sc.q = d.q;
    sc.depths = count_list(cfg.at("dims").at("L_list"), "dims.L_list");
    sc.eps = cfg.at("activation").at("eps").get<double>();
    sc.seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    sc.data_seed = cfg.at("seed").get<std::uint64_t>();
    sc.descent = descent_from(cfg);
    sc.threads = cfg.at("threads").get<std::size_t>();
    const DepthSweepResult r = depth_slowdown_experiment(sc);

    ExperimentOutput out;
    Json summary = Json::array();
    for (const DepthSummary& s : r.summary) {
        summary.push_back({{"L", s.depth},
                           {"median_steps_to_threshold", s.median_steps},
                           {"median_min_grad_norm", s.median_min_grad_norm},
                           {"median_log_sigma_prime_power", s.median_log_sigma_prime_power},
                           {"converged_runs", s.converged}});
    }
    bool steps_nondecreasing = true;
    bool proxy_decreasing = true;
    for (std::size_t i = 1; i < r.summary.size(); ++i) {
        steps_nondecreasing = steps_nondecreasing && r.summary[i].median_steps >= r.summary[i - 1].median_steps;
        proxy_decreasing = proxy_decreasing && r.summary[i].median_log_sigma_prime_power <
                                                   r.summary[i - 1].median_log_sigma_prime_power;
    }
    out.report["summary"] = std::move(summary);
    out.report["median_steps_nondecreasing"] = steps_nondecreasing;
    out.report["sigma_prime_proxy_strictly_decreasing"] = proxy_decreasing;
    out.files.emplace_back("depth_sweep.csv", depth_sweep_csv(r));
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

Json error_json(const Error& e) {
    Json j;
    j["kind"] = to_string(e.kind());
    j["message"] = e.what();
    if (const auto* de = dynamic_cast<const DomainError*>(&e)) {
        j["row"] = de->row();
        j["col"] = de->col();
        j["value"] = de->value();
    }
    return j;
}

Json framed_report(const Json& cfg, const char* status, const Json& body) {
    Json report;
    report["mode"] = cfg.at("mode");
    report["status"] = status;
    report[kTimestampField] = utc_timestamp();
    report["parameters"] = without_output_dir(cfg);
    for (const auto& [key, value] : body.items()) report[key] = value;
    return report;
}

}  // namespace

ExperimentOutput execute(const Json& resolved) {
    switch (mode_from_string(resolved.at("mode").get<std::string>())) {
        case Mode::Construct: return run_construct(resolved);
        case Mode::JacobianRank: return run_jacobian_rank(resolved);
        case Mode::Descend: return run_descend(resolved);
        case Mode::LemmaCheck: return run_lemma_check(resolved);
        case Mode::DepthSweep: return run_depth_sweep(resolved);
    }
    throw invalid("unreachable mode");
}

int run_experiment(const RunRequest& request, std::ostream& err) {
    Json cfg;
    try {
        const Mode mode = mode_from_string(request.mode);
        Json user = Json::parse(read_text_file(request.config_path));
        if (request.seed) user["seed"] = *request.seed;
        if (request.out_dir) user["output_dir"] = request.out_dir->string();
        for (const std::string& o : request.overrides) apply_override(user, o);
        cfg = resolve_config(mode, user);
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error [ValidationError]: malformed configuration: " << e.what() << "\n";
        return kExitValidation;
    }

    const std::filesystem::path dir = cfg.at("output_dir").get<std::string>();
    const auto write_all = [&](const Json& report, const ExperimentOutput* out) {
        std::filesystem::create_directories(dir);
        write_text_file(dir / "config.resolved.json", dump_json(cfg));
        write_text_file(dir / "report.json", dump_json(report));
        if (out) {
            for (const auto& [name, content] : out->files) write_text_file(dir / name, content);
        }
    };

    try {
        const ExperimentOutput out = execute(cfg);
        write_all(framed_report(cfg, "ok", out.report), &out);
        return kExitOk;
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        if (e.is_validation()) return kExitValidation;
        if (e.kind() == ErrorKind::IoError) return kExitNumerical;
        try {
            write_all(framed_report(cfg, "error", {{"error", error_json(e)}}), nullptr);
        } catch (const std::exception& io) {
            err << "error [IoError]: " << io.what() << "\n";
        }
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error [IoError]: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace zeroloss
