#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gsa/design.hpp"
#include "gsa/model.hpp"
#include "gsa/sobol.hpp"
#include "gsa/surrogate.hpp"

namespace gsa {

inline constexpr const char* kToolVersion = "1.0.0";

/// Where responses come from: a builtin analytic model or external CSV files.
struct ModelSelection {
    std::string builtin = "pressure_bin";
    BuiltinOptions options;

    bool ingest = false;
    std::filesystem::path design_csv;
    std::filesystem::path responses_csv;
    ColumnMapping columns;
};

struct RunConfig {
    std::optional<ParameterSpace> space;  // defaults to the builtin model's space
    ModelSelection model;
    std::size_t n_design = 100;
    std::uint64_t seed = 1;
    FitConfig fit;
    SobolOptions sobol;
    std::filesystem::path out = "gsa_run";
    unsigned threads = 0;  // 0: hardware concurrency; never changes results

    /// Space the run operates on, resolving the model default.
    ParameterSpace resolved_space() const;
};

/// Parses the JSON config format. Relative ingest paths resolve against
/// `base_dir`. Throws ConfigError on unknown keys or malformed values.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Effective configuration as JSON (threads excluded: they never affect results).
std::string config_to_json(const RunConfig& config);
/// Throws ConfigError when counts are zero, files are missing, or the model
/// and space disagree.
void validate_config(const RunConfig& config);

/// Builtin model instance on the configured space.
std::unique_ptr<EvaluableModel> make_model(const RunConfig& config);

/// Seeds handed to each stage, derived from the run seed.
struct StageSeeds {
    std::uint64_t design;
    std::uint64_t fit;
    std::uint64_t sobol;
};
StageSeeds stage_seeds(std::uint64_t seed);

/// Artifact file names inside the output directory.
namespace artifacts {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kDesign = "design.csv";
inline constexpr const char* kDesignUnit = "design_unit.csv";
inline constexpr const char* kResponses = "responses.csv";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kSobolJson = "sobol.json";
inline constexpr const char* kSobolCsv = "sobol.csv";
inline constexpr const char* kSobolBars = "sobol_bars.csv";
}  // namespace artifacts

enum class Stage { Design, Evaluate, Fit, Sobol };
const char* stage_name(Stage stage);

/// Per-stage record kept in the run manifest.
struct StageRecord {
    bool completed = false;
    double seconds = 0.0;
    std::map<std::string, std::string> inputs;   // path -> sha256
    std::map<std::string, std::string> outputs;  // path -> sha256
    std::map<std::string, std::string> notes;
};

/// Reproducibility record written next to the stage artifacts.
class RunManifest {
public:
    explicit RunManifest(const RunConfig& config);

    /// Loads `<out>/manifest.json`. When the stored configuration differs from
    /// `config`, stage records are discarded so every stage re-runs.
    static RunManifest load_or_create(const RunConfig& config);

    const std::string& config_json() const { return config_json_; }
    std::map<std::string, StageRecord>& stages() { return stages_; }
    const std::map<std::string, StageRecord>& stages() const { return stages_; }
    bool completed(Stage stage) const;

    /// Drops the records of `stage` and every later stage.
    void invalidate_from(Stage stage);
    void record(Stage stage, StageRecord record);

    /// Throws StaleArtifactError when a recorded output of a completed stage
    /// is missing or its digest changed.
    void verify(Stage stage) const;

    void set_config_file(const std::filesystem::path& path, const std::string& digest);
    void save() const;
    std::string to_json() const;

private:
    RunConfig config_;
    std::string config_json_;
    std::map<std::string, StageRecord> stages_;
    std::optional<std::pair<std::string, std::string>> config_file_;
};

/// Stage runners; each writes its artifacts under config.out and records
/// itself in the manifest.
void run_design(const RunConfig& config, RunManifest& manifest);
void run_evaluate(const RunConfig& config, RunManifest& manifest);
GprModel run_fit(const RunConfig& config, RunManifest& manifest);
SobolResult run_sobol(const RunConfig& config, RunManifest& manifest);

/// Runs all stages in order, skipping stages the manifest marks completed
/// whose artifacts still match their digests.
struct PipelineReport {
    std::vector<std::string> executed;
    std::vector<std::string> skipped;
};
PipelineReport run_pipeline(const RunConfig& config, RunManifest& manifest);

/// Loads the paired design (unit frame when available) and responses from a
/// run directory.
SampleSet load_run_samples(const RunConfig& config, DesignMatrix* unit_design = nullptr);

}  // namespace gsa
