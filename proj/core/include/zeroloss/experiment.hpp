#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zeroloss/serialize.hpp"

namespace zeroloss {

enum class Mode { Construct, JacobianRank, Descend, LemmaCheck, DepthSweep };

Mode mode_from_string(const std::string& s);  // throws ValidationError
const char* to_string(Mode mode);

// Fully resolved default configuration for a mode. Every key a user config may
// contain appears here; anything else is rejected.
Json default_config(Mode mode);

// Applies "a.b.c=value" to a config document. The value is parsed as JSON when
// possible and taken as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

// Merges a user document over the defaults, rejecting unknown fields and
// type mismatches, then validates cross-field constraints for the mode.
Json resolve_config(Mode mode, const Json& user);

// Random bvtp rank trials: A (n x s) full rank, B (n x t) Gaussian, plus
// trials where a random row of A or B is zeroed.
struct LemmaTrial {
    std::size_t index = 0;
    std::size_t n = 0;
    std::size_t s = 0;
    std::size_t t = 0;
    bool zero_row = false;
    std::size_t rank = 0;
    bool full_rank = false;
};

struct LemmaCheckResult {
    std::vector<LemmaTrial> trials;
    std::size_t full_rank_trials = 0;
    std::size_t full_rank_confirmed = 0;
    std::size_t zero_row_trials = 0;
    std::size_t zero_row_rank_deficient = 0;
};

LemmaCheckResult lemma_check(std::size_t trials, std::size_t zero_row_trials, std::uint64_t seed,
                             std::size_t max_rows = 6, std::size_t max_cols = 10);

struct RunRequest {
    std::string mode;
    std::filesystem::path config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    std::vector<std::string> overrides;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Runs one experiment end to end and writes config.resolved.json, report.json
// and the mode's CSV tables into the output directory. Validation failures
// return 2 before anything is written; numerical failures return 3 with the
// error recorded in report.json. Diagnostics go to `err`.
int run_experiment(const RunRequest& request, std::ostream& err);

// Runs an already-resolved configuration and returns the report document
// (without writing anything). Throws zeroloss::Error.
struct ExperimentOutput {
    Json report;
    std::vector<std::pair<std::string, std::string>> files;  // name, content
};

ExperimentOutput execute(const Json& resolved);

// Name of the report field holding the wall-clock timestamp. It is the only
// field that differs between identical runs and is emitted on its own line.
inline constexpr const char* kTimestampField = "generated_at";

}  // namespace zeroloss
