#pragma once

#include "eoli/benchmark.hpp"
#include "eoli/error.hpp"
#include "eoli/imputation.hpp"
#include "eoli/index.hpp"
#include "eoli/panel.hpp"
#include "eoli/reduction.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eoli {

enum class DataFormat { Long, Wide };
enum class ImputerMethod { Mean, Mice, Forest };

std::string_view to_string(ImputerMethod method) noexcept;
ImputerMethod parse_imputer_method(std::string_view text);

struct DataSource {
    std::filesystem::path path;
    DataFormat format = DataFormat::Long;
};

struct ImputerSettings {
    ImputerMethod method = ImputerMethod::Forest;
    MiceConfig mice{BoostConfig{}, 10, 0};
    ForestImputeConfig forest;
};

struct BenchmarkSettings {
    double fraction = 0.4;
    int runs = 30;
    /// Evaluation targets per pillar: the indicators with the lowest missingness.
    int columns_per_pillar = 3;
    std::vector<std::string> methods = {"mean", "mice-linear", "mice-boost", "forest"};
};

struct ExternalRanks {
    std::filesystem::path path;
    int year = 2021;
};

/// Everything a run needs; see README for the JSON key set. Relative paths are
/// resolved against the configuration file's directory.
struct PipelineConfig {
    std::vector<DataSource> data;
    std::optional<std::filesystem::path> schema;
    std::map<std::string, Polarity> polarity_overrides;
    std::vector<UnitRule> unit_rules;
    MergePrecedence merge_precedence = MergePrecedence::KeepBase;
    std::optional<std::vector<std::string>> countries;
    std::optional<std::pair<int, int>> years;
    ImputerSettings imputer;
    std::array<std::vector<std::string>, 4> pillars; ///< empty = every schema indicator of that pillar
    std::array<int, 4> n_factors{1, 1, 1, 1};
    FactorExtraction extraction = FactorExtraction::PrincipalComponent;
    CompositeWeights weights;
    Normalization normalization = Normalization::Pooled;
    BenchmarkSettings benchmark;
    std::optional<ExternalRanks> external_ranks;
    std::pair<int, int> average_years{2012, 2021};
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "eoli_out";

    /// Throws InvalidValue when an invariant does not hold.
    void validate() const;
};

PipelineConfig parse_config(const std::filesystem::path &path);
PipelineConfig parse_config_text(std::string_view text, const std::filesystem::path &base_dir = {});
/// Canonical JSON form (all defaults spelled out); hashed into the manifest.
std::string config_to_json(const PipelineConfig &config);

/// Emitted CSV artifacts, in emission order.
enum class Artifact {
    MissingnessReport,
    Imputed,
    PcaReport,
    FactorReport,
    KmoReport,
    SubIndex,
    Rankings,
    Categories,
    AverageRanks,
    Comparison,
    BenchmarkReport,
    Kde,
    Panel,
};

std::string_view file_name(Artifact artifact) noexcept;

/// Artifacts emitted by the full `run` subcommand (Comparison is added when
/// external ranks are configured).
std::vector<Artifact> run_artifacts(const PipelineConfig &config);

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

struct ArtifactRecord {
    std::string file;
    std::string sha256;
};

struct RunManifest {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<StageTiming> timings;
    std::vector<std::string> warnings;
    std::vector<ArtifactRecord> artifacts;

    std::string to_json() const;
};

/// Error raised by run_pipeline, tagged with the failing stage.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const Error &cause);
    const std::string &stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Receives every warning as it is raised.
using WarningSink = void (*)(const std::string &);

/// Executes the stages needed for `artifacts`, writes them plus manifest.json
/// into config.output_dir, and returns the manifest. On failure every file
/// written by this call is removed and a PipelineError is thrown.
RunManifest run_pipeline(const PipelineConfig &config, const std::vector<Artifact> &artifacts,
                         WarningSink sink = nullptr);
RunManifest run_pipeline(const PipelineConfig &config);

std::string sha256_hex(std::string_view data);

} // namespace eoli
