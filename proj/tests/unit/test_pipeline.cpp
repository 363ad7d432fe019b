#include "eoli/pipeline.hpp"
#include "eoli/synthetic.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

using namespace eoli;
namespace fs = std::filesystem;

namespace {

std::string first_line(const std::string &text) { return text.substr(0, text.find('\n')); }

// Toy panel on disk plus a config that keeps the run short.
fs::path toy_workspace(const std::string &name, const std::string &extra = "") {
    const auto dir = test::temp_dir(name);
    write_long_csv(generate_toy_panel(), dir / "toy.csv");
    test::write_file(dir / "config.json", R"({"data": ["toy.csv"], "years": [1995, 2021],
        "imputer": {"method": "forest", "forest": {"n_trees": 25, "max_iter": 4}},
        "output_dir": "out", "seed": 7)" + extra + "}");
    return dir;
}

std::vector<std::string> collected;
void collect(const std::string &w) { collected.push_back(w); }

} // namespace

TEST(Config, MinimalGetsDefaults) {
    const auto cfg = parse_config_text(R"({"data": ["panel.csv"]})", "/data");
    ASSERT_EQ(cfg.data.size(), 1u);
    EXPECT_EQ(cfg.data[0].path, fs::path("/data/panel.csv"));
    EXPECT_EQ(cfg.weights.economic, 0.25);
    EXPECT_EQ(cfg.weights.institutional, 0.25);
    EXPECT_EQ(cfg.weights.quality_of_life, 0.35);
    EXPECT_EQ(cfg.weights.sustainability, 0.15);
    EXPECT_EQ(cfg.imputer.method, ImputerMethod::Forest);
    EXPECT_EQ(cfg.extraction, FactorExtraction::PrincipalComponent);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.output_dir, fs::path("/data/eoli_out"));
}

TEST(Config, Errors) {
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": ["a.csv"], "wieghts": {}})"), ErrorKind::UnknownKey);
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": ["a.csv"], "imputer": {"forset": {}}})"), ErrorKind::UnknownKey);
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": ["a.csv"], "weights": {"economic": 0.3,
        "institutional": 0.3, "quality_of_life": 0.3, "sustainability": 0.3}})"),
                      ErrorKind::InvalidValue);
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": ["a.csv"], "seed": "x"})"), ErrorKind::InvalidValue);
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": ["a.csv"], "imputer": {"method": "knn"}})"),
                      ErrorKind::InvalidValue);
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": ["a.csv"],)"), ErrorKind::ParseError);
    EXPECT_ERROR_KIND(parse_config_text(R"({"data": []})"), ErrorKind::InvalidValue);
}

TEST(Config, CanonicalJsonRoundTrips) {
    const auto cfg = parse_config_text(R"({"data": [{"path": "w.csv", "format": "wide"}], "seed": 9,
        "extraction": "principal_axis", "normalization": "per_year", "average_ranks": {"from": 2000, "to": 2009}})",
                                       "/base");
    const auto text = config_to_json(cfg);
    const auto again = parse_config_text(text, "/elsewhere");
    EXPECT_EQ(config_to_json(again), text);
    EXPECT_EQ(again.data[0].format, DataFormat::Wide);
    EXPECT_EQ(again.extraction, FactorExtraction::PrincipalAxis);
    EXPECT_EQ(again.normalization, Normalization::PerYear);
    EXPECT_EQ(again.average_years, (std::pair<int, int>{2000, 2009}));
}

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, ToyRunEmitsArtifactsDeterministically) {
    const auto dir = toy_workspace("pipeline_toy");
    const auto cfg = parse_config(dir / "config.json");
    collected.clear();
    const auto manifest = run_pipeline(cfg, run_artifacts(cfg), collect);
    ASSERT_EQ(manifest.artifacts.size(), 8u);
    EXPECT_EQ(manifest.seed, 7u);
    const std::map<std::string, std::string> headers = {
        {"missingness_report.csv", "sub_index,indicator,observed,missing,pct_missing"},
        {"imputed.csv", "country,year,indicator,value"},
        {"pca_report.csv", "block,component,eigenvalue,explained_pct"},
        {"factor_report.csv", "block,variable,factor,loading,communality"},
        {"kmo_report.csv", "block,kmo,verdict"},
        {"subindex.csv", "country,year,economic,institutional,quality_of_life,sustainability,eoli"},
        {"rankings.csv", "year,rank,country,eoli"},
        {"categories.csv", "year,country,level"},
    };
    std::map<std::string, std::string> digests;
    for (const auto &rec : manifest.artifacts) {
        const auto text = test::read_file(cfg.output_dir / rec.file);
        ASSERT_TRUE(headers.count(rec.file)) << rec.file;
        EXPECT_EQ(first_line(text), headers.at(rec.file));
        EXPECT_EQ(text.find('\r'), std::string::npos);
        EXPECT_EQ(sha256_hex(text), rec.sha256);
        digests[rec.file] = rec.sha256;
    }
    ASSERT_TRUE(fs::exists(cfg.output_dir / "manifest.json"));
    const auto json = nlohmann::json::parse(test::read_file(cfg.output_dir / "manifest.json"));
    EXPECT_EQ(json.at("config_digest"), sha256_hex(config_to_json(cfg)));
    EXPECT_EQ(json.at("warnings").size(), manifest.warnings.size());
    EXPECT_EQ(collected, manifest.warnings);

    // six decimals in the sub-index table
    std::istringstream sub(test::read_file(cfg.output_dir / "subindex.csv"));
    std::string line;
    std::getline(sub, line);
    std::getline(sub, line);
    const auto last = line.substr(line.rfind(',') + 1);
    EXPECT_EQ(last.size() - last.find('.') - 1, 6u) << line;

    const auto second = run_pipeline(cfg);
    for (const auto &rec : second.artifacts) {
        EXPECT_EQ(rec.sha256, digests.at(rec.file)) << rec.file;
    }
}

TEST(Pipeline, SeedChangesImputation) {
    const auto dir = toy_workspace("pipeline_seed");
    auto cfg = parse_config(dir / "config.json");
    const auto a = run_pipeline(cfg, {Artifact::Imputed});
    cfg.seed = 8;
    const auto b = run_pipeline(cfg, {Artifact::Imputed});
    EXPECT_NE(a.artifacts[0].sha256, b.artifacts[0].sha256);
}

TEST(Pipeline, IngestFailureCleansUp) {
    const auto dir = test::temp_dir("pipeline_fail");
    test::write_file(dir / "config.json", R"({"data": ["missing.csv"], "output_dir": "out"})");
    const auto cfg = parse_config(dir / "config.json");
    try {
        run_pipeline(cfg);
        FAIL() << "expected failure";
    } catch (const PipelineError &e) {
        EXPECT_EQ(e.stage(), "ingest");
        EXPECT_NE(std::string(e.what()).find("ingest"), std::string::npos);
    }
    EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(Pipeline, LateFailureRemovesPartialOutputs) {
    // external ranks file is unreadable, so the compare stage fails after earlier stages succeeded
    const auto dir = toy_workspace("pipeline_late", R"(, "external_ranks": {"path": "nope.csv", "year": 2021})");
    const auto cfg = parse_config(dir / "config.json");
    try {
        run_pipeline(cfg);
        FAIL() << "expected failure";
    } catch (const PipelineError &e) {
        EXPECT_EQ(e.stage(), "compare");
    }
    if (fs::exists(cfg.output_dir)) {
        EXPECT_TRUE(fs::is_empty(cfg.output_dir));
    }
}

TEST(Pipeline, ExternalComparisonAndAverages) {
    const auto dir = toy_workspace("pipeline_compare", R"(, "external_ranks": {"path": "ext.csv", "year": 2021})");
    test::write_file(dir / "ext.csv", "country,rank\nAUS,10\nBRA,80\nCHN,50\nDEU,15\nGBR,20\nIND,139\nUSA,5\n");
    const auto cfg = parse_config(dir / "config.json");
    const auto manifest = run_pipeline(cfg, {Artifact::Comparison, Artifact::AverageRanks});
    const auto cmp = test::read_file(cfg.output_dir / "comparison.csv");
    EXPECT_EQ(first_line(cmp), "country,our_rank,external_rank,gap");
    EXPECT_NE(cmp.find("# spearman="), std::string::npos);
    const auto avg = test::read_file(cfg.output_dir / "average_ranks.csv");
    EXPECT_EQ(first_line(avg), "country,years,eoli,economic,institutional,quality_of_life,sustainability");
}
