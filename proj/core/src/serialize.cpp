#include "zeroloss/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "zeroloss/errors.hpp"

namespace zeroloss {

Json matrix_to_json(const Matrix& a) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty()) {
        throw Error(ErrorKind::ValidationError, "matrix must be a non-empty array of non-empty rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorKind::ValidationError, "ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) a(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return a;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw Error(ErrorKind::ValidationError, "vector must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

Json to_json(const NetworkSpec& spec) {
    Json j;
    j["dims"] = spec.dims;
    j["activation"] = {{"name", spec.activation.name()}, {"eps", spec.activation.eps()}};
    j["output_bias"] = spec.output_bias;
    j["K"] = spec.parameter_count();
    return j;
}

NetworkSpec spec_from_json(const Json& j) {
    const auto& act = j.at("activation");
    return NetworkSpec(j.at("dims").get<std::vector<std::size_t>>(),
                       Activation::from_name(act.at("name").get<std::string>(), act.value("eps", 0.01)),
                       j.value("output_bias", true));
}

Json to_json(const RankResult& rank) {
    Json j;
    j["rows"] = rank.rows;
    j["cols"] = rank.cols;
    j["numerical_rank"] = rank.numerical_rank;
    j["full_rank"] = rank.full_rank();
    j["tolerance"] = rank.tolerance;
    j["singular_values"] = rank.singular_values;
    return j;
}

Json to_json(const JacobianReport& report, bool include_matrix) {
    Json j;
    j["samples"] = report.samples;
    j["outputs"] = report.outputs;
    j["parameters"] = report.parameters;
    j["layout"] = kJacobianLayout;
    j["rank"] = to_json(report.rank);
    if (include_matrix) j["D"] = matrix_to_json(report.d);
    return j;
}

Json to_json(const RankDiagnosis& diag) {
    Json j;
    j["sufficient_condition_met"] = diag.sufficient_condition_met;
    j["x0_full_rank"] = diag.x0_full_rank;
    j["weights_full_rank"] = diag.weights_full_rank;
    j["derivative_nonvanishing"] = diag.derivative_nonvanishing;
    j["min_abs_sigma_prime"] = diag.min_abs_sigma_prime;
    j["violated"] = diag.violated;
    j["jacobian_rank"] = diag.jacobian_rank.numerical_rank;
    j["expected_rank"] = diag.expected_rank;
    j["d_full_rank"] = diag.d_full_rank;
    j["consistent"] = diag.consistent;
    return j;
}

Json to_json(const ConstructionRecord& rec) {
    Json j;
    j["method"] = to_string(rec.method);
    j["spec"] = to_json(rec.spec);
    j["lambda_values"] = rec.lambda_values;
    j["achieved_cost"] = rec.achieved_cost;
    j["output_weight_seed"] = rec.output_weight_seed;
    j["theta"] = vector_to_json(flatten(rec.spec, rec.params));
    return j;
}

Json to_json(const RankEvent& event) {
    Json j;
    j["step"] = event.step;
    j["rank"] = event.rank;
    j["expected_rank"] = event.expected_rank;
    j["smallest_singular_values"] = event.smallest_singular_values;
    j["violated"] = event.violated;
    return j;
}

Json model_document(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts) {
    Json j;
    j["spec"] = to_json(spec);
    j["theta"] = vector_to_json(flatten(spec, params));
    j["x0"] = matrix_to_json(ts.x0);
    j["outputs"] = matrix_to_json(ts.outputs);
    j["omega"] = ts.omega;
    j["y_omega"] = matrix_to_json(ts.y_omega);
    return j;
}

ModelDocument read_model_document(const Json& j) {
    ModelDocument doc;
    doc.spec = spec_from_json(j.at("spec"));
    doc.params = unflatten(doc.spec, vector_from_json(j.at("theta")));
    doc.training = make_training_set(matrix_from_json(j.at("x0")), matrix_from_json(j.at("outputs")),
                                     j.at("omega").get<std::vector<std::size_t>>());
    if (j.contains("y_omega") && matrix_from_json(j.at("y_omega")) != doc.training.y_omega) {
        throw Error(ErrorKind::ValidationError, "y_omega is inconsistent with outputs and omega");
    }
    return doc;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

namespace {

bool is_scalar_array(const Json& j) {
    for (const auto& e : j) {
        if (e.is_structured()) return false;
    }
    return true;
}

void write_json(std::string& out, const Json& j, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
    const std::string inner(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += inner + Json(key).dump() + ": ";
                write_json(out, value, depth + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            if (is_scalar_array(j)) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i > 0) out += ", ";
                    write_json(out, j[i], depth + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) out += ",\n";
                out += inner;
                write_json(out, j[i], depth + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case Json::value_t::number_float: out += format_double(j.get<double>()); return;
        default: out += j.dump(); return;
    }
}

}  // namespace

std::string dump_json(const Json& j) {
    std::string out;
    write_json(out, j, 0);
    out += "\n";
    return out;
}

std::string trajectory_csv(const TrajectoryRecord& traj) {
    std::string out = "step,cost,grad_norm,rank,min_sigma_prime\n";
    for (const StepRecord& s : traj.steps) {
        out += std::to_string(s.step) + "," + format_double(s.cost) + "," + format_double(s.grad_norm) + ",";
        if (s.rank) out += std::to_string(*s.rank);
        out += "," + format_double(s.min_sigma_prime) + "\n";
    }
    return out;
}

std::string matrix_csv(const Matrix& a) {
    std::string out;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j > 0) out += ",";
            out += format_double(a(i, j));
        }
        out += "\n";
    }
    return out;
}

std::string depth_sweep_csv(const DepthSweepResult& result) {
    std::string out =
        "kind,L,seed,steps_to_threshold,converged,final_cost,min_grad_norm,min_sigma_prime,log_sigma_prime_power\n";
    for (const DepthSweepRow& r : result.rows) {
        out += "run," + std::to_string(r.depth) + "," + std::to_string(r.seed) + "," +
               std::to_string(r.steps_to_threshold) + "," + (r.converged ? "1" : "0") + "," +
               format_double(r.final_cost) + "," + format_double(r.min_grad_norm) + "," +
               format_double(r.min_sigma_prime) + "," + format_double(r.log_sigma_prime_power) + "\n";
    }
    for (const DepthSummary& s : result.summary) {
        out += "median," + std::to_string(s.depth) + ",," + format_double(s.median_steps) + "," +
               std::to_string(s.converged) + ",," + format_double(s.median_min_grad_norm) + ",," +
               format_double(s.median_log_sigma_prime_power) + "\n";
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    f << content;
    f.close();
    if (!f) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace zeroloss
