// eoli: command-line front end for the index pipeline.
#include "eoli/error.hpp"
#include "eoli/pipeline.hpp"
#include "eoli/synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> method;
};

void print_warning(const std::string &message) { std::cerr << "warning: " << message << '\n'; }

int execute(const Overrides &opts, const std::string &command) {
    using eoli::Artifact;
    static const std::map<std::string, std::vector<Artifact>> subsets = {
        {"ingest", {Artifact::Panel}},
        {"report-missingness", {Artifact::MissingnessReport}},
        {"impute", {Artifact::Imputed, Artifact::Kde}},
        {"benchmark", {Artifact::BenchmarkReport}},
        {"reduce", {Artifact::PcaReport, Artifact::FactorReport, Artifact::KmoReport}},
        {"build-index", {Artifact::SubIndex}},
        {"rank", {Artifact::Rankings, Artifact::AverageRanks}},
        {"categorize", {Artifact::Categories}},
        {"compare", {Artifact::Comparison}},
    };
    try {
        eoli::PipelineConfig config = eoli::parse_config(opts.config);
        if (opts.seed) {
            config.seed = *opts.seed;
        }
        if (opts.out) {
            config.output_dir = *opts.out;
        }
        if (opts.method) {
            config.imputer.method = eoli::parse_imputer_method(*opts.method);
        }
        std::vector<Artifact> artifacts;
        if (command == "run") {
            artifacts = eoli::run_artifacts(config);
        } else {
            artifacts = subsets.at(command);
        }
        if (command == "compare" && !config.external_ranks) {
            std::cerr << "error: 'compare' needs external_ranks in the configuration\n";
            return 1;
        }
        const auto manifest = eoli::run_pipeline(config, artifacts, print_warning);
        for (const auto &a : manifest.artifacts) {
            std::cerr << "wrote " << (config.output_dir / a.file).string() << '\n';
        }
        std::cerr << "wrote " << (config.output_dir / "manifest.json").string() << '\n';
        return 0;
    } catch (const eoli::PipelineError &e) {
        std::cerr << "error: " << e.what() << '\n';
    } catch (const eoli::Error &e) {
        std::cerr << "error: config '" << opts.config << "': " << e.what() << '\n';
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
}

int generate_toy(const std::string &out, std::uint64_t seed) {
    try {
        eoli::ToyPanelOptions options;
        options.seed = seed;
        const std::filesystem::path dir(out);
        std::filesystem::create_directories(dir);
        eoli::write_long_csv(eoli::generate_toy_panel(options), dir / "toy_panel.csv");
        std::ofstream config(dir / "config.json", std::ios::binary);
        config << "{\n  \"data\": [\"toy_panel.csv\"],\n  \"output_dir\": \"out\",\n  \"seed\": 42\n}\n";
        if (!config) {
            throw eoli::Error(eoli::ErrorKind::Io, "cannot write config.json");
        }
        std::cerr << "wrote " << (dir / "toy_panel.csv").string() << " and " << (dir / "config.json").string()
                  << '\n';
        return 0;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"eoli - composite Ease of Living Index from sparse country-year panels"};
    app.require_subcommand(1);

    Overrides opts;
    std::uint64_t seed = 0;
    std::string out;
    std::string method;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ingest", "Load and merge data sources, apply unit rules, write panel.csv"},
        {"report-missingness", "Write per-indicator missingness (missingness_report.csv)"},
        {"impute", "Impute every pillar block (imputed.csv, kde.csv)"},
        {"benchmark", "Mask-and-score imputation benchmark (benchmark_report.csv)"},
        {"reduce", "PCA, KMO and varimax factor analysis per pillar"},
        {"build-index", "Sub-index and EoLI scores (subindex.csv)"},
        {"rank", "Per-year rankings and decade average ranks"},
        {"categorize", "Quartile levels per year (categories.csv)"},
        {"compare", "Spearman comparison against external ranks (comparison.csv)"},
        {"run", "Full pipeline: every core artifact plus manifest.json"},
    };
    std::string chosen;
    for (const auto &[name, help] : commands) {
        CLI::App *sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Master seed (overrides the configuration)");
        sub->add_option("--out", out, "Output directory (overrides the configuration)");
        sub->add_option("--method", method, "Imputation method")
            ->check(CLI::IsMember({"mean", "mice", "forest"}));
        sub->callback([&chosen, n = name] { chosen = n; });
    }

    std::string toy_out = "toy";
    std::uint64_t toy_seed = eoli::ToyPanelOptions{}.seed;
    CLI::App *toy = app.add_subcommand("generate-toy", "Write the synthetic toy panel and a matching config.json");
    toy->add_option("--out", toy_out, "Destination directory");
    toy->add_option("--seed", toy_seed, "Generator seed");
    toy->callback([&chosen] { chosen = "generate-toy"; });

    app.footer("Flags for every pipeline subcommand:\n"
               "  --config FILE      JSON configuration file (required)\n"
               "  --seed N           master seed, overrides the configuration\n"
               "  --out DIR          output directory, overrides the configuration\n"
               "  --method NAME      imputation method: mean | mice | forest\n"
               "Flags for generate-toy:\n"
               "  --out DIR          destination directory (default: toy)\n"
               "  --seed N           generator seed\n"
               "Exit status is 0 when every requested file was written, 1 otherwise.");

    CLI11_PARSE(app, argc, argv);

    if (chosen == "generate-toy") {
        return generate_toy(toy_out, toy_seed);
    }
    for (CLI::App *sub : app.get_subcommands()) {
        if (sub->count("--seed") > 0) {
            opts.seed = seed;
        }
        if (sub->count("--out") > 0) {
            opts.out = out;
        }
        if (sub->count("--method") > 0) {
            opts.method = method;
        }
    }
    return execute(opts, chosen);
}
