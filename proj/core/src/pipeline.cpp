#include "eoli/pipeline.hpp"

#include "eoli/error.hpp"
#include "eoli/random.hpp"

#include "csv_util.hpp"

#include <fmt/core.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <set>

namespace eoli {

using nlohmann::json;

std::string_view to_string(ImputerMethod method) noexcept {
    switch (method) {
    case ImputerMethod::Mean: return "mean";
    case ImputerMethod::Mice: return "mice";
    case ImputerMethod::Forest: return "forest";
    }
    return "forest";
}

ImputerMethod parse_imputer_method(std::string_view text) {
    if (text == "mean") {
        return ImputerMethod::Mean;
    }
    if (text == "mice") {
        return ImputerMethod::Mice;
    }
    if (text == "forest") {
        return ImputerMethod::Forest;
    }
    throw Error(ErrorKind::InvalidValue, fmt::format("unknown imputation method '{}'", text));
}

std::string_view file_name(Artifact artifact) noexcept {
    switch (artifact) {
    case Artifact::MissingnessReport: return "missingness_report.csv";
    case Artifact::Imputed: return "imputed.csv";
    case Artifact::PcaReport: return "pca_report.csv";
    case Artifact::FactorReport: return "factor_report.csv";
    case Artifact::KmoReport: return "kmo_report.csv";
    case Artifact::SubIndex: return "subindex.csv";
    case Artifact::Rankings: return "rankings.csv";
    case Artifact::Categories: return "categories.csv";
    case Artifact::AverageRanks: return "average_ranks.csv";
    case Artifact::Comparison: return "comparison.csv";
    case Artifact::BenchmarkReport: return "benchmark_report.csv";
    case Artifact::Kde: return "kde.csv";
    case Artifact::Panel: return "panel.csv";
    }
    return "unknown.csv";
}

std::vector<Artifact> run_artifacts(const PipelineConfig &config) {
    std::vector<Artifact> out = {Artifact::MissingnessReport, Artifact::Imputed,   Artifact::PcaReport,
                                 Artifact::FactorReport,      Artifact::KmoReport, Artifact::SubIndex,
                                 Artifact::Rankings,          Artifact::Categories};
    if (config.external_ranks) {
        out.push_back(Artifact::Comparison);
    }
    return out;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

const json *find(const json &obj, std::string_view key) {
    auto it = obj.find(std::string(key));
    return it == obj.end() ? nullptr : &*it;
}

// Like find, but an explicit null means "not set".
const json *find_set(const json &obj, std::string_view key) {
    const json *v = find(obj, key);
    return v != nullptr && v->is_null() ? nullptr : v;
}

void check_keys(const json &obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) {
        throw Error(ErrorKind::InvalidValue, fmt::format("'{}' must be an object", where));
    }
    for (const auto &item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw Error(ErrorKind::UnknownKey, fmt::format("unknown key '{}' in {}", item.key(), where));
        }
    }
}

[[noreturn]] void bad_value(std::string_view where, std::string_view expected) {
    throw Error(ErrorKind::InvalidValue, fmt::format("'{}' must be {}", where, expected));
}

double read_number(const json &v, std::string_view where) {
    if (!v.is_number()) {
        bad_value(where, "a number");
    }
    return v.get<double>();
}

int read_int(const json &v, std::string_view where) {
    if (!v.is_number_integer()) {
        bad_value(where, "an integer");
    }
    return v.get<int>();
}

bool read_bool(const json &v, std::string_view where) {
    if (!v.is_boolean()) {
        bad_value(where, "a boolean");
    }
    return v.get<bool>();
}

std::string read_string(const json &v, std::string_view where) {
    if (!v.is_string()) {
        bad_value(where, "a string");
    }
    return v.get<std::string>();
}

std::vector<std::string> read_strings(const json &v, std::string_view where) {
    if (!v.is_array()) {
        bad_value(where, "an array of strings");
    }
    std::vector<std::string> out;
    for (const auto &item : v) {
        out.push_back(read_string(item, where));
    }
    return out;
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void read_tree(const json &obj, TreeConfig &tree, std::string_view where) {
    if (auto *v = find(obj, "max_depth")) {
        tree.max_depth = v->is_null() ? std::nullopt : std::optional<int>(read_int(*v, where));
    }
    if (auto *v = find(obj, "min_samples_split")) {
        tree.min_samples_split = read_int(*v, where);
    }
    if (auto *v = find(obj, "min_samples_leaf")) {
        tree.min_samples_leaf = read_int(*v, where);
    }
}

BoostConfig read_boost(const json &obj) {
    check_keys(obj, {"n_rounds", "learning_rate", "max_depth", "min_samples_split", "min_samples_leaf"},
               "imputer.mice.boost");
    BoostConfig boost;
    if (auto *v = find(obj, "n_rounds")) {
        boost.n_rounds = read_int(*v, "imputer.mice.boost.n_rounds");
    }
    if (auto *v = find(obj, "learning_rate")) {
        boost.learning_rate = read_number(*v, "imputer.mice.boost.learning_rate");
    }
    read_tree(obj, boost.tree, "imputer.mice.boost");
    return boost;
}

void read_imputer(const json &obj, ImputerSettings &settings) {
    check_keys(obj, {"method", "mice", "forest"}, "imputer");
    if (auto *v = find(obj, "method")) {
        settings.method = parse_imputer_method(read_string(*v, "imputer.method"));
    }
    if (auto *mice = find(obj, "mice")) {
        check_keys(*mice, {"base_learner", "n_cycles", "boost", "ridge_fallback"}, "imputer.mice");
        std::string learner = "boost";
        if (auto *v = find(*mice, "base_learner")) {
            learner = read_string(*v, "imputer.mice.base_learner");
        }
        if (learner == "linear") {
            LinearLearner linear;
            if (auto *v = find(*mice, "ridge_fallback")) {
                linear.ridge_fallback = read_bool(*v, "imputer.mice.ridge_fallback");
            }
            settings.mice.base_learner = linear;
        } else if (learner == "boost") {
            settings.mice.base_learner = find(*mice, "boost") ? read_boost(*find(*mice, "boost")) : BoostConfig{};
        } else {
            bad_value("imputer.mice.base_learner", "\"linear\" or \"boost\"");
        }
        if (auto *v = find(*mice, "n_cycles")) {
            settings.mice.n_cycles = read_int(*v, "imputer.mice.n_cycles");
        }
    }
    if (auto *forest = find(obj, "forest")) {
        check_keys(*forest,
                   {"n_trees", "max_depth", "min_samples_split", "min_samples_leaf", "mtry", "bootstrap",
                    "max_iter", "stop_on_increase"},
                   "imputer.forest");
        auto &f = settings.forest;
        if (auto *v = find(*forest, "n_trees")) {
            f.forest.n_trees = read_int(*v, "imputer.forest.n_trees");
        }
        read_tree(*forest, f.forest.tree, "imputer.forest");
        if (auto *v = find(*forest, "mtry")) {
            f.forest.mtry = v->is_null() ? std::nullopt : std::optional<int>(read_int(*v, "imputer.forest.mtry"));
        }
        if (auto *v = find(*forest, "bootstrap")) {
            f.forest.bootstrap = read_bool(*v, "imputer.forest.bootstrap");
        }
        if (auto *v = find(*forest, "max_iter")) {
            f.max_iter = read_int(*v, "imputer.forest.max_iter");
        }
        if (auto *v = find(*forest, "stop_on_increase")) {
            f.stop_on_increase = read_bool(*v, "imputer.forest.stop_on_increase");
        }
    }
}

template <typename Fn>
void read_pillar_map(const json &obj, std::string_view where, Fn &&assign) {
    check_keys(obj, {"economic", "institutional", "quality_of_life", "sustainability"}, where);
    for (std::size_t k = 0; k < 4; ++k) {
        if (auto *v = find(obj, column_name(all_sub_indices[k]))) {
            assign(k, *v, fmt::format("{}.{}", where, column_name(all_sub_indices[k])));
        }
    }
}

json tree_json(const TreeConfig &tree) {
    return {{"max_depth", tree.max_depth ? json(*tree.max_depth) : json(nullptr)},
            {"min_samples_split", tree.min_samples_split},
            {"min_samples_leaf", tree.min_samples_leaf}};
}

} // namespace

void PipelineConfig::validate() const {
    if (data.empty()) {
        throw Error(ErrorKind::InvalidValue, "at least one data source is required");
    }
    try {
        weights.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::InvalidValue, e.what());
    }
    if (!(benchmark.fraction >= 0.0 && benchmark.fraction <= 1.0)) {
        throw Error(ErrorKind::InvalidValue, "benchmark.fraction must lie in [0, 1]");
    }
    if (benchmark.runs < 1) {
        throw Error(ErrorKind::InvalidValue, "benchmark.runs must be at least 1");
    }
    if (benchmark.columns_per_pillar < 1) {
        throw Error(ErrorKind::InvalidValue, "benchmark.columns_per_pillar must be at least 1");
    }
    for (const auto &m : benchmark.methods) {
        if (m != "mean" && m != "mice-linear" && m != "mice-boost" && m != "forest") {
            throw Error(ErrorKind::InvalidValue, fmt::format("unknown benchmark method '{}'", m));
        }
    }
    for (int k : n_factors) {
        if (k < 1) {
            throw Error(ErrorKind::InvalidValue, "n_factors must be at least 1");
        }
    }
    if (years && years->first > years->second) {
        throw Error(ErrorKind::InvalidValue, "years must be an increasing [from, to] pair");
    }
    if (average_years.first > average_years.second) {
        throw Error(ErrorKind::InvalidValue, "average_ranks.from must not exceed average_ranks.to");
    }
    if (imputer.mice.n_cycles < 0) {
        throw Error(ErrorKind::InvalidValue, "imputer.mice.n_cycles must be nonnegative");
    }
    if (imputer.forest.max_iter < 1 || imputer.forest.forest.n_trees < 1) {
        throw Error(ErrorKind::InvalidValue, "imputer.forest needs max_iter >= 1 and n_trees >= 1");
    }
}

PipelineConfig parse_config_text(std::string_view text, const std::filesystem::path &base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ParseError, fmt::format("byte {}: {}", e.byte, e.what()));
    }
    if (!doc.is_object()) {
        throw Error(ErrorKind::ParseError, "top level must be a JSON object");
    }
    check_keys(doc,
               {"data", "schema", "polarity", "unit_rules", "merge_precedence", "countries", "years", "imputer",
                "pillars", "n_factors", "extraction", "weights", "normalization", "benchmark", "external_ranks",
                "average_ranks", "seed", "output_dir"},
               "config");

    PipelineConfig config;
    const json *data = find(doc, "data");
    if (data == nullptr || !data->is_array()) {
        bad_value("data", "an array of data sources");
    }
    for (const auto &item : *data) {
        DataSource source;
        if (item.is_string()) {
            source.path = resolve(base_dir, item.get<std::string>());
        } else {
            check_keys(item, {"path", "format"}, "data[]");
            const json *path = find(item, "path");
            if (path == nullptr) {
                bad_value("data[].path", "present");
            }
            source.path = resolve(base_dir, read_string(*path, "data[].path"));
            if (auto *v = find(item, "format")) {
                const auto format = read_string(*v, "data[].format");
                if (format == "long") {
                    source.format = DataFormat::Long;
                } else if (format == "wide") {
                    source.format = DataFormat::Wide;
                } else {
                    bad_value("data[].format", "\"long\" or \"wide\"");
                }
            }
        }
        config.data.push_back(std::move(source));
    }

    if (auto *v = find_set(doc, "schema")) {
        config.schema = resolve(base_dir, read_string(*v, "schema"));
    }
    if (auto *v = find(doc, "polarity")) {
        if (!v->is_object()) {
            bad_value("polarity", "an object of indicator -> \"Beneficial\"|\"Adverse\"");
        }
        for (const auto &item : v->items()) {
            config.polarity_overrides[item.key()] = parse_polarity(read_string(item.value(), "polarity"));
        }
    }
    if (auto *v = find(doc, "unit_rules")) {
        if (!v->is_array()) {
            bad_value("unit_rules", "an array");
        }
        for (const auto &item : *v) {
            check_keys(item, {"indicator", "scale", "offset", "target_unit"}, "unit_rules[]");
            UnitRule rule;
            const json *indicator = find(item, "indicator");
            const json *scale = find(item, "scale");
            if (indicator == nullptr || scale == nullptr) {
                bad_value("unit_rules[]", "an object with 'indicator' and 'scale'");
            }
            rule.indicator = read_string(*indicator, "unit_rules[].indicator");
            rule.scale = read_number(*scale, "unit_rules[].scale");
            if (rule.scale == 0.0) {
                bad_value("unit_rules[].scale", "nonzero");
            }
            if (auto *o = find(item, "offset")) {
                rule.offset = read_number(*o, "unit_rules[].offset");
            }
            if (auto *u = find(item, "target_unit")) {
                rule.target_unit = read_string(*u, "unit_rules[].target_unit");
            }
            config.unit_rules.push_back(std::move(rule));
        }
    }
    if (auto *v = find(doc, "merge_precedence")) {
        const auto p = read_string(*v, "merge_precedence");
        if (p == "keep_base") {
            config.merge_precedence = MergePrecedence::KeepBase;
        } else if (p == "keep_other") {
            config.merge_precedence = MergePrecedence::KeepOther;
        } else {
            bad_value("merge_precedence", "\"keep_base\" or \"keep_other\"");
        }
    }
    if (auto *v = find_set(doc, "countries")) {
        config.countries = read_strings(*v, "countries");
    }
    if (auto *v = find_set(doc, "years")) {
        if (!v->is_array() || v->size() != 2) {
            bad_value("years", "a [from, to] pair");
        }
        config.years = std::pair{read_int((*v)[0], "years[0]"), read_int((*v)[1], "years[1]")};
    }
    if (auto *v = find(doc, "imputer")) {
        read_imputer(*v, config.imputer);
    }
    if (auto *v = find(doc, "pillars")) {
        read_pillar_map(*v, "pillars", [&](std::size_t k, const json &value, const std::string &where) {
            config.pillars[k] = read_strings(value, where);
        });
    }
    if (auto *v = find(doc, "n_factors")) {
        read_pillar_map(*v, "n_factors", [&](std::size_t k, const json &value, const std::string &where) {
            config.n_factors[k] = read_int(value, where);
        });
    }
    if (auto *v = find(doc, "extraction")) {
        const auto e = read_string(*v, "extraction");
        if (e == "principal_component") {
            config.extraction = FactorExtraction::PrincipalComponent;
        } else if (e == "principal_axis") {
            config.extraction = FactorExtraction::PrincipalAxis;
        } else {
            bad_value("extraction", "\"principal_component\" or \"principal_axis\"");
        }
    }
    if (auto *v = find(doc, "weights")) {
        std::array<double, 4> w = config.weights.as_array();
        read_pillar_map(*v, "weights", [&](std::size_t k, const json &value, const std::string &where) {
            w[k] = read_number(value, where);
        });
        config.weights = {w[0], w[1], w[2], w[3]};
    }
    if (auto *v = find(doc, "normalization")) {
        const auto n = read_string(*v, "normalization");
        if (n == "pooled") {
            config.normalization = Normalization::Pooled;
        } else if (n == "per_year") {
            config.normalization = Normalization::PerYear;
        } else {
            bad_value("normalization", "\"pooled\" or \"per_year\"");
        }
    }
    if (auto *v = find(doc, "benchmark")) {
        check_keys(*v, {"fraction", "runs", "columns_per_pillar", "methods"}, "benchmark");
        if (auto *f = find(*v, "fraction")) {
            config.benchmark.fraction = read_number(*f, "benchmark.fraction");
        }
        if (auto *r = find(*v, "runs")) {
            config.benchmark.runs = read_int(*r, "benchmark.runs");
        }
        if (auto *c = find(*v, "columns_per_pillar")) {
            config.benchmark.columns_per_pillar = read_int(*c, "benchmark.columns_per_pillar");
        }
        if (auto *m = find(*v, "methods")) {
            config.benchmark.methods = read_strings(*m, "benchmark.methods");
        }
    }
    if (auto *v = find_set(doc, "external_ranks")) {
        check_keys(*v, {"path", "year"}, "external_ranks");
        const json *path = find(*v, "path");
        if (path == nullptr) {
            bad_value("external_ranks.path", "present");
        }
        ExternalRanks ext;
        ext.path = resolve(base_dir, read_string(*path, "external_ranks.path"));
        if (auto *y = find(*v, "year")) {
            ext.year = read_int(*y, "external_ranks.year");
        }
        config.external_ranks = std::move(ext);
    }
    if (auto *v = find(doc, "average_ranks")) {
        check_keys(*v, {"from", "to"}, "average_ranks");
        if (auto *f = find(*v, "from")) {
            config.average_years.first = read_int(*f, "average_ranks.from");
        }
        if (auto *t = find(*v, "to")) {
            config.average_years.second = read_int(*t, "average_ranks.to");
        }
    }
    if (auto *v = find(doc, "seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
            bad_value("seed", "a nonnegative integer");
        }
        config.seed = v->get<std::uint64_t>();
    }
    if (auto *v = find(doc, "output_dir")) {
        config.output_dir = resolve(base_dir, read_string(*v, "output_dir"));
    } else {
        config.output_dir = resolve(base_dir, "eoli_out");
    }
    config.validate();
    return config;
}

PipelineConfig parse_config(const std::filesystem::path &path) {
    return parse_config_text(detail::read_text_file(path), path.parent_path());
}

std::string config_to_json(const PipelineConfig &config) {
    json doc;
    json data = json::array();
    for (const auto &source : config.data) {
        data.push_back({{"path", source.path.generic_string()},
                        {"format", source.format == DataFormat::Long ? "long" : "wide"}});
    }
    doc["data"] = data;
    doc["schema"] = config.schema ? json(config.schema->generic_string()) : json(nullptr);
    json polarity = json::object();
    for (const auto &[name, p] : config.polarity_overrides) {
        polarity[name] = to_string(p);
    }
    doc["polarity"] = polarity;
    json rules = json::array();
    for (const auto &rule : config.unit_rules) {
        rules.push_back({{"indicator", rule.indicator},
                         {"scale", rule.scale},
                         {"offset", rule.offset},
                         {"target_unit", rule.target_unit}});
    }
    doc["unit_rules"] = rules;
    doc["merge_precedence"] = config.merge_precedence == MergePrecedence::KeepBase ? "keep_base" : "keep_other";
    doc["countries"] = config.countries ? json(*config.countries) : json(nullptr);
    doc["years"] = config.years ? json::array({config.years->first, config.years->second}) : json(nullptr);

    json mice;
    if (const auto *boost = std::get_if<BoostConfig>(&config.imputer.mice.base_learner)) {
        json b = tree_json(boost->tree);
        b["n_rounds"] = boost->n_rounds;
        b["learning_rate"] = boost->learning_rate;
        mice = {{"base_learner", "boost"}, {"boost", b}};
    } else {
        mice = {{"base_learner", "linear"},
                {"ridge_fallback", std::get<LinearLearner>(config.imputer.mice.base_learner).ridge_fallback}};
    }
    mice["n_cycles"] = config.imputer.mice.n_cycles;
    const auto &f = config.imputer.forest;
    json forest = tree_json(f.forest.tree);
    forest["n_trees"] = f.forest.n_trees;
    forest["mtry"] = f.forest.mtry ? json(*f.forest.mtry) : json(nullptr);
    forest["bootstrap"] = f.forest.bootstrap;
    forest["max_iter"] = f.max_iter;
    forest["stop_on_increase"] = f.stop_on_increase;
    doc["imputer"] = {{"method", to_string(config.imputer.method)}, {"mice", mice}, {"forest", forest}};

    json pillars = json::object();
    json n_factors = json::object();
    json weights = json::object();
    const auto w = config.weights.as_array();
    for (std::size_t k = 0; k < 4; ++k) {
        const std::string key(column_name(all_sub_indices[k]));
        pillars[key] = config.pillars[k];
        n_factors[key] = config.n_factors[k];
        weights[key] = w[k];
    }
    doc["pillars"] = pillars;
    doc["n_factors"] = n_factors;
    doc["extraction"] =
        config.extraction == FactorExtraction::PrincipalAxis ? "principal_axis" : "principal_component";
    doc["weights"] = weights;
    doc["normalization"] = config.normalization == Normalization::Pooled ? "pooled" : "per_year";
    doc["benchmark"] = {{"fraction", config.benchmark.fraction},
                        {"runs", config.benchmark.runs},
                        {"columns_per_pillar", config.benchmark.columns_per_pillar},
                        {"methods", config.benchmark.methods}};
    doc["external_ranks"] = config.external_ranks
                                ? json{{"path", config.external_ranks->path.generic_string()},
                                       {"year", config.external_ranks->year}}
                                : json(nullptr);
    doc["average_ranks"] = {{"from", config.average_years.first}, {"to", config.average_years.second}};
    doc["seed"] = config.seed;
    doc["output_dir"] = config.output_dir.generic_string();
    return doc.dump(2);
}

// ---------------------------------------------------------------------------
// manifest

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Io, "SHA-256 computation failed");
    }
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += fmt::format("{:02x}", digest[i]);
    }
    return out;
}

std::string RunManifest::to_json() const {
    json timings_json = json::array();
    for (const auto &t : timings) {
        timings_json.push_back({{"stage", t.stage}, {"ms", std::round(t.milliseconds * 1000.0) / 1000.0}});
    }
    json artifacts_json = json::array();
    for (const auto &a : artifacts) {
        artifacts_json.push_back({{"file", a.file}, {"sha256", a.sha256}});
    }
    json doc = {{"config_digest", config_digest}, {"seed", seed},       {"timings", timings_json},
                {"warnings", warnings},           {"artifacts", artifacts_json}};
    return doc.dump(2) + "\n";
}

PipelineError::PipelineError(std::string stage, const Error &cause)
    : Error(cause.kind(), fmt::format("stage '{}': {}", stage, cause.what())), stage_{std::move(stage)} {}

// ---------------------------------------------------------------------------
// execution

namespace {

struct PillarResult {
    SubIndex pillar = SubIndex::Economic;
    FeatureMatrix raw;
    ImputationResult imputed;
    ZscoreResult standardized;
    std::optional<AdequacyReport> adequacy;
    PcaResult pca;
    FactorModel factors;
    FactorScores scores;
};

class Runner {
public:
    Runner(const PipelineConfig &config, WarningSink sink) : config_{config}, sink_{sink} {}

    RunManifest run(const std::vector<Artifact> &requested) {
        const std::set<Artifact> wanted(requested.begin(), requested.end());
        auto needs = [&](std::initializer_list<Artifact> any) {
            return std::any_of(any.begin(), any.end(), [&](Artifact a) { return wanted.contains(a); });
        };
        manifest_.config_digest = sha256_hex(config_to_json(config_));
        manifest_.seed = config_.seed;
        try {
            std::filesystem::create_directories(config_.output_dir);
        } catch (const std::filesystem::filesystem_error &e) {
            throw PipelineError("emit", Error(ErrorKind::Io, e.what()));
        }

        try {
            stage("ingest", [&] { ingest(); });
            if (wanted.contains(Artifact::Panel)) {
                emit(Artifact::Panel, format_long_csv(panel_));
            }
            if (wanted.contains(Artifact::MissingnessReport)) {
                stage("missingness", [&] {
                    emit(Artifact::MissingnessReport, format_missingness_csv(missingness_report(panel_)));
                });
            }
            const bool need_index = needs({Artifact::SubIndex, Artifact::Rankings, Artifact::Categories,
                                           Artifact::AverageRanks, Artifact::Comparison});
            const bool need_reduce =
                need_index || needs({Artifact::PcaReport, Artifact::FactorReport, Artifact::KmoReport});
            if (need_reduce || needs({Artifact::Imputed, Artifact::Kde})) {
                stage("impute", [&] { impute(); });
            }
            if (wanted.contains(Artifact::Imputed)) {
                emit(Artifact::Imputed, imputed_csv());
            }
            if (need_reduce) {
                stage("reduce", [&] { reduce(); });
                if (wanted.contains(Artifact::PcaReport)) {
                    emit(Artifact::PcaReport, pca_csv());
                }
                if (wanted.contains(Artifact::FactorReport)) {
                    emit(Artifact::FactorReport, factor_csv());
                }
                if (wanted.contains(Artifact::KmoReport)) {
                    emit(Artifact::KmoReport, kmo_csv());
                }
            }
            if (need_index) {
                stage("compose", [&] { compose(); });
                if (wanted.contains(Artifact::SubIndex)) {
                    emit(Artifact::SubIndex, format_subindex_csv(subs_, index_));
                }
                if (wanted.contains(Artifact::Rankings)) {
                    stage("rank", [&] { emit(Artifact::Rankings, rankings_csv()); });
                }
                if (wanted.contains(Artifact::AverageRanks)) {
                    stage("average_ranks", [&] { emit(Artifact::AverageRanks, average_csv()); });
                }
                if (wanted.contains(Artifact::Categories)) {
                    stage("categorize", [&] { emit(Artifact::Categories, categories_csv()); });
                }
                if (wanted.contains(Artifact::Comparison)) {
                    stage("compare", [&] { emit(Artifact::Comparison, comparison_csv()); });
                }
            }
            if (wanted.contains(Artifact::BenchmarkReport)) {
                stage("benchmark", [&] { emit(Artifact::BenchmarkReport, benchmark_csv()); });
            }
            if (wanted.contains(Artifact::Kde)) {
                stage("kde", [&] { emit(Artifact::Kde, kde_csv()); });
            }
            stage("emit", [&] {
                detail::write_text_file(config_.output_dir / "manifest.json", manifest_.to_json());
            });
        } catch (...) {
            cleanup();
            throw;
        }
        return manifest_;
    }

private:
    template <typename Fn>
    void stage(const std::string &name, Fn &&fn) {
        const auto start = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const PipelineError &) {
            throw;
        } catch (const Error &e) {
            throw PipelineError(name, e);
        } catch (const std::filesystem::filesystem_error &e) {
            throw PipelineError(name, Error(ErrorKind::Io, e.what()));
        }
        const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
        manifest_.timings.push_back({name, elapsed.count()});
    }

    void warn(std::string message) {
        if (sink_ != nullptr) {
            sink_(message);
        }
        manifest_.warnings.push_back(std::move(message));
    }

    void emit(Artifact artifact, const std::string &content) {
        const std::string name(file_name(artifact));
        const auto path = config_.output_dir / name;
        written_.push_back(path);
        detail::write_text_file(path, content);
        manifest_.artifacts.push_back({name, sha256_hex(content)});
    }

    void cleanup() noexcept {
        std::error_code ec;
        for (const auto &path : written_) {
            std::filesystem::remove(path, ec);
        }
        std::filesystem::remove(config_.output_dir / "manifest.json", ec);
    }

    void ingest() {
        std::vector<IndicatorSpec> schema = config_.schema ? load_schema_csv(*config_.schema) : default_schema();
        for (const auto &[name, polarity] : config_.polarity_overrides) {
            auto it = std::find_if(schema.begin(), schema.end(), [&](const IndicatorSpec &s) { return s.name == name; });
            if (it == schema.end()) {
                throw Error(ErrorKind::UnknownIndicator, fmt::format("polarity override for unknown indicator '{}'", name));
            }
            it->polarity = polarity;
        }
        bool first = true;
        for (const auto &source : config_.data) {
            PanelDataset loaded;
            try {
                loaded = source.format == DataFormat::Long ? load_long_csv(source.path, schema)
                                                           : load_wide_csv(source.path, schema);
            } catch (const Error &e) {
                throw Error(e.kind(), fmt::format("{}: {}", source.path.string(), e.what()));
            }
            if (first) {
                panel_ = std::move(loaded);
                first = false;
                continue;
            }
            MergeResult merged = merge(panel_, loaded, config_.merge_precedence);
            if (merged.conflicts > 0) {
                warn(fmt::format("merge of '{}': {} conflicting cells resolved by precedence", source.path.string(),
                                 merged.conflicts));
            }
            panel_ = std::move(merged.dataset);
        }
        if (!config_.unit_rules.empty()) {
            panel_ = standardize_units(panel_, config_.unit_rules);
        }
    }

    std::vector<std::string> pillar_indicators(std::size_t k) const {
        if (!config_.pillars[k].empty()) {
            return config_.pillars[k];
        }
        std::vector<std::string> names;
        for (const auto &spec : panel_.indicators()) {
            if (spec.sub_index == all_sub_indices[k]) {
                names.push_back(spec.name);
            }
        }
        return names;
    }

    ImputerConfig imputer_config() const {
        switch (config_.imputer.method) {
        case ImputerMethod::Mean: return std::monostate{};
        case ImputerMethod::Mice: return config_.imputer.mice;
        case ImputerMethod::Forest: return config_.imputer.forest;
        }
        return std::monostate{};
    }

    void impute() {
        if (!pillars_.empty()) {
            return;
        }
        for (std::size_t k = 0; k < 4; ++k) {
            const auto names = pillar_indicators(k);
            if (names.empty()) {
                throw Error(ErrorKind::EmptySelection,
                            fmt::format("pillar '{}' has no indicators", column_name(all_sub_indices[k])));
            }
            PillarResult pillar;
            pillar.pillar = all_sub_indices[k];
            pillar.raw = to_matrix(panel_, names, config_.countries, config_.years);
            const std::uint64_t seed = derive_seed(config_.seed, {static_cast<std::uint64_t>(k)});
            pillar.imputed = run_imputer(pillar.raw, imputer_config(), seed);
            for (const auto &w : pillar.imputed.warnings) {
                warn(fmt::format("{}: {}", column_name(pillar.pillar), w));
            }
            pillars_.push_back(std::move(pillar));
        }
    }

    void reduce() {
        for (auto &pillar : pillars_) {
            const auto block = column_name(pillar.pillar);
            pillar.standardized = zscore(pillar.imputed.completed, true);
            for (const auto &name : pillar.standardized.dropped) {
                warn(fmt::format("{}: constant column '{}' dropped before reduction", block, name));
            }
            const FeatureMatrix &z = pillar.standardized.matrix;
            const int p = static_cast<int>(z.cols());
            const int k = pillar_factors(pillar.pillar);
            if (k > p) {
                throw Error(ErrorKind::InvalidValue,
                            fmt::format("{}: n_factors {} exceeds {} usable indicators", block, k, p));
            }
            pillar.pca = pca(z, p);
            pillar.factors = factor_analysis(z, k, config_.extraction);
            pillar.adequacy = pillar.factors.adequacy;
            if (p < 2) {
                warn(fmt::format("{}: KMO needs two indicators; skipped", block));
            }
            for (const auto &w : pillar.factors.warnings) {
                warn(fmt::format("{}: {}", block, w));
            }
            pillar.scores = factor_scores(z, pillar.factors);
            if (pillar.scores.ridge_applied) {
                warn(fmt::format("{}: ridge 1e-8 applied to correlation matrix for factor scores", block));
            }
        }
    }

    int pillar_factors(SubIndex pillar) const { return config_.n_factors[static_cast<std::size_t>(pillar)]; }

    void compose() {
        for (std::size_t k = 0; k < 4; ++k) {
            const auto &pillar = pillars_[k];
            const FeatureMatrix &z = pillar.standardized.matrix;
            ScoreMap scores;
            for (std::size_t i = 0; i < z.rows(); ++i) {
                scores.emplace(z.row_keys()[i], pillar.scores.scores(static_cast<Eigen::Index>(i), 0));
            }
            std::vector<Polarity> polarities;
            for (const auto &name : z.column_keys()) {
                polarities.push_back(panel_.find_indicator(name)->polarity);
            }
            subs_[k] = build_sub_index(pillar.pillar, scores, pillar.factors, polarities, config_.normalization);
        }
        index_ = compose_eoli(subs_, config_.weights);
        if (!index_.incomplete_keys.empty()) {
            warn(fmt::format("{} (country, year) keys lack at least one sub-index and have no EoLI",
                             index_.incomplete_keys.size()));
        }
    }

    std::string imputed_csv() const {
        std::vector<RowKey> rows = pillars_.front().imputed.completed.row_keys();
        std::vector<std::string> columns;
        for (const auto &pillar : pillars_) {
            for (const auto &c : pillar.imputed.completed.column_keys()) {
                columns.push_back(c);
            }
        }
        Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
        Eigen::Index offset = 0;
        for (const auto &pillar : pillars_) {
            const Matrix &v = pillar.imputed.completed.values();
            values.middleCols(offset, v.cols()) = v;
            offset += v.cols();
        }
        return format_long_csv(
            from_matrix(FeatureMatrix::from_values(std::move(rows), std::move(columns), values), panel_.indicators()));
    }

    std::string pca_csv() const {
        std::string out = "block,component,eigenvalue,explained_pct\n";
        for (const auto &pillar : pillars_) {
            for (Eigen::Index c = 0; c < pillar.pca.eigenvalues.size(); ++c) {
                out += fmt::format("{},{},{},{}\n", column_name(pillar.pillar), c + 1,
                                   detail::format_fixed(pillar.pca.eigenvalues(c), 6),
                                   detail::format_fixed(100.0 * pillar.pca.explained_ratio(c), 6));
            }
        }
        return out;
    }

    std::string factor_csv() const {
        std::string out = "block,variable,factor,loading,communality\n";
        for (const auto &pillar : pillars_) {
            const auto &model = pillar.factors;
            for (std::size_t i = 0; i < model.variables.size(); ++i) {
                for (int j = 0; j < model.n_factors; ++j) {
                    out += fmt::format("{},{},{},{},{}\n", column_name(pillar.pillar), model.variables[i], j + 1,
                                       detail::format_fixed(model.loadings(static_cast<Eigen::Index>(i), j), 6),
                                       detail::format_fixed(model.communalities(static_cast<Eigen::Index>(i)), 6));
                }
            }
        }
        return out;
    }

    std::string kmo_csv() const {
        std::string out = "block,kmo,verdict\n";
        for (const auto &pillar : pillars_) {
            if (pillar.adequacy) {
                out += fmt::format("{},{},{}\n", column_name(pillar.pillar),
                                   detail::format_fixed(pillar.adequacy->kmo_overall, 6),
                                   to_string(pillar.adequacy->verdict));
            }
        }
        return out;
    }

    std::string rankings_csv() const {
        std::vector<RankTable> tables;
        for (int year : index_years(index_)) {
            tables.push_back(rank_year(index_, year));
        }
        return format_rankings_csv(tables);
    }

    std::string categories_csv() {
        std::vector<std::pair<int, std::map<std::string, Level>>> levels;
        for (int year : index_years(index_)) {
            try {
                levels.emplace_back(year, categorize_levels(index_, year));
            } catch (const Error &e) {
                if (e.kind() != ErrorKind::TooFewCountries) {
                    throw;
                }
                warn(fmt::format("categories: year {} skipped ({})", year, e.what()));
            }
        }
        return format_categories_csv(levels);
    }

    std::string average_csv() {
        const auto years = index_years(index_);
        const int from = std::max(config_.average_years.first, years.front());
        const int to = std::min(config_.average_years.second, years.back());
        if (from > to) {
            throw Error(ErrorKind::UnknownYear,
                        fmt::format("average_ranks range {}-{} has no indexed years", config_.average_years.first,
                                    config_.average_years.second));
        }
        if (from != config_.average_years.first || to != config_.average_years.second) {
            warn(fmt::format("average ranks clamped to {}-{}", from, to));
        }
        return format_average_ranks_csv(average_ranks(index_, {from, to}, subs_));
    }

    std::string comparison_csv() const {
        const auto &ext = *config_.external_ranks;
        return format_comparison_csv(compare_external_ranks(rank_year(index_, ext.year), load_external_ranks(ext.path)));
    }

    std::vector<NamedImputer> benchmark_methods() const {
        std::vector<NamedImputer> methods;
        for (const auto &name : config_.benchmark.methods) {
            if (name == "mean") {
                methods.push_back({name, std::monostate{}});
            } else if (name == "mice-linear") {
                MiceConfig mice = config_.imputer.mice;
                mice.base_learner = LinearLearner{};
                methods.push_back({name, mice});
            } else if (name == "mice-boost") {
                MiceConfig mice = config_.imputer.mice;
                if (!std::holds_alternative<BoostConfig>(mice.base_learner)) {
                    mice.base_learner = BoostConfig{};
                }
                methods.push_back({name, mice});
            } else {
                methods.push_back({name, config_.imputer.forest});
            }
        }
        return methods;
    }

    std::string benchmark_csv() {
        const auto methods = benchmark_methods();
        EvaluationReport combined;
        combined.n_runs = config_.benchmark.runs;
        combined.master_seed = config_.seed;
        for (std::size_t k = 0; k < 4; ++k) {
            const auto names = pillar_indicators(k);
            const FeatureMatrix matrix = to_matrix(panel_, names, config_.countries, config_.years);
            // evaluation targets: the least-missing indicators of the pillar
            std::vector<std::size_t> order(matrix.cols());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return matrix.missing_count(a) < matrix.missing_count(b);
            });
            order.resize(std::min(order.size(), static_cast<std::size_t>(config_.benchmark.columns_per_pillar)));
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < matrix.rows(); ++i) {
                if (std::none_of(order.begin(), order.end(), [&](std::size_t c) { return matrix.is_missing(i, c); })) {
                    rows.push_back(i);
                }
            }
            if (rows.size() < 2) {
                warn(fmt::format("benchmark: pillar '{}' has too few complete rows; skipped",
                                 column_name(all_sub_indices[k])));
                continue;
            }
            std::vector<std::string> targets;
            for (std::size_t c : order) {
                targets.push_back(matrix.column_keys()[c]);
            }
            const auto report = run_benchmark(matrix.select_rows(rows), methods, config_.benchmark.fraction, targets,
                                              config_.benchmark.runs, config_.seed);
            combined.rows.insert(combined.rows.end(), report.rows.begin(), report.rows.end());
        }
        // method-major across pillars
        std::stable_sort(combined.rows.begin(), combined.rows.end(),
                         [&](const MethodAttributeStats &a, const MethodAttributeStats &b) {
                             auto rank = [&](const std::string &m) {
                                 return std::find(config_.benchmark.methods.begin(), config_.benchmark.methods.end(), m) -
                                        config_.benchmark.methods.begin();
                             };
                             return rank(a.method) < rank(b.method);
                         });
        return format_benchmark_csv(combined);
    }

    std::string kde_csv() const {
        std::vector<DensityCurve> curves;
        for (const auto &pillar : pillars_) {
            const FeatureMatrix &raw = pillar.raw;
            const FeatureMatrix &done = pillar.imputed.completed;
            for (std::size_t j = 0; j < raw.cols(); ++j) {
                std::vector<double> original;
                std::vector<double> imputed;
                for (std::size_t i = 0; i < raw.rows(); ++i) {
                    if (!raw.is_missing(i, j)) {
                        original.push_back(raw.value(i, j));
                    }
                    imputed.push_back(done.value(i, j));
                }
                if (original.empty()) {
                    continue;
                }
                const double h_original = silverman_bandwidth(original);
                const double h_imputed = silverman_bandwidth(imputed);
                std::vector<double> both = original;
                both.insert(both.end(), imputed.begin(), imputed.end());
                const auto grid = default_kde_grid(both, std::max(h_original, h_imputed));
                DensityCurve a = gaussian_kde(original, grid, h_original);
                a.variable = raw.column_keys()[j];
                a.label = DensityLabel::Original;
                DensityCurve b = gaussian_kde(imputed, grid, h_imputed);
                b.variable = raw.column_keys()[j];
                b.label = DensityLabel::Imputed;
                curves.push_back(std::move(a));
                curves.push_back(std::move(b));
            }
        }
        return format_kde_csv(curves);
    }

    const PipelineConfig &config_;
    WarningSink sink_;
    RunManifest manifest_;
    std::vector<std::filesystem::path> written_;
    PanelDataset panel_;
    std::vector<PillarResult> pillars_;
    std::array<SubIndexSeries, 4> subs_;
    CompositeIndex index_;
};

} // namespace

RunManifest run_pipeline(const PipelineConfig &config, const std::vector<Artifact> &artifacts, WarningSink sink) {
    config.validate();
    Runner runner(config, sink);
    return runner.run(artifacts);
}

RunManifest run_pipeline(const PipelineConfig &config) { return run_pipeline(config, run_artifacts(config)); }

} // namespace eoli
