#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeroloss/constructor.hpp"
#include "zeroloss/descent.hpp"
#include "zeroloss/jacobian.hpp"
#include "zeroloss/linalg.hpp"
#include "zeroloss/network.hpp"

namespace zeroloss {

// Insertion-ordered so that emitted documents have a stable field order.
using Json = nlohmann::ordered_json;

// Matrices are nested arrays, one inner array per row.
Json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const Json& j);

Json to_json(const RankResult& rank);
Json to_json(const JacobianReport& report, bool include_matrix = false);
Json to_json(const RankDiagnosis& diag);
Json to_json(const ConstructionRecord& rec);
Json to_json(const RankEvent& event);

// Self-contained experiment record: architecture, flattened theta, training
// inputs and assembled labels.
struct ModelDocument {
    NetworkSpec spec;
    NetworkParams params;
    TrainingSet training;
};

Json model_document(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts);
ModelDocument read_model_document(const Json& j);

// Pretty printer with 2-space indentation, numeric arrays kept on one line,
// and doubles written with 17 significant digits so that a reparse recovers
// them bit for bit. Non-finite doubles become null.
std::string dump_json(const Json& j);
std::string format_double(double v);

// CSV columns: step,cost,grad_norm,rank,min_sigma_prime (rank empty when not
// checked at that step).
std::string trajectory_csv(const TrajectoryRecord& traj);
std::string matrix_csv(const Matrix& a);
// One row per (L, seed) followed by one median row per L.
std::string depth_sweep_csv(const DepthSweepResult& result);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace zeroloss
