#include "gsa/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gsa/csv.hpp"
#include "gsa/digest.hpp"
#include "gsa/error.hpp"
#include "gsa/rng.hpp"

namespace gsa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// config parsing helpers

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

const json& require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    return j;
}

template <class T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for " + where);
    }
}

std::size_t get_count(const json& j, const std::string& where) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(where + " must be an integer");
    auto v = j.get<long long>();
    if (v < 0) throw ConfigError(where + " must be non-negative");
    return static_cast<std::size_t>(v);
}

std::pair<double, double> get_bounds(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be a [lower, upper] pair");
    return {get_as<double>(j[0], where), get_as<double>(j[1], where)};
}

fs::path resolve_path(const std::string& p, const fs::path& base) {
    fs::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path.lexically_normal();
}

// ---------------------------------------------------------------------------
// file helpers

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// write-then-rename, so an interrupted stage never leaves a half-written
// artifact behind
void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        out.flush();
        if (!out) throw IoError("write failed for " + path.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

fs::path artifact(const RunConfig& config, const char* name) { return config.out / name; }

std::map<std::string, std::string> digests_of(const RunConfig& config, std::initializer_list<const char*> names) {
    std::map<std::string, std::string> out;
    for (const char* n : names) out[n] = sha256_file(artifact(config, n));
    return out;
}

// Keys of a stage record are artifact names relative to the output directory,
// or absolute paths for files living elsewhere.
fs::path record_path(const RunConfig& config, const std::string& key) {
    fs::path p(key);
    return p.is_absolute() ? p : config.out / p;
}

std::string key_for(const fs::path& external) { return fs::absolute(external).lexically_normal().string(); }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

constexpr Stage kStages[] = {Stage::Design, Stage::Evaluate, Stage::Fit, Stage::Sobol};

json space_to_json(const ParameterSpace& space) {
    json arr = json::array();
    for (const auto& p : space.params()) {
        arr.push_back({{"name", p.name}, {"lower", p.lower}, {"upper", p.upper}, {"unit", p.unit}});
    }
    return arr;
}

json config_object(const RunConfig& c) {
    json j;
    if (c.space) j["space"] = space_to_json(*c.space);
    json m;
    if (c.model.ingest) {
        json cols = json::object();
        if (!c.model.columns.sample_id.empty()) cols["sample_id"] = c.model.columns.sample_id;
        if (!c.model.columns.response.empty()) cols["response"] = c.model.columns.response;
        if (!c.model.columns.parameters.empty()) cols["parameters"] = c.model.columns.parameters;
        m["ingest"] = {{"design", key_for(c.model.design_csv)},
                       {"responses", key_for(c.model.responses_csv)},
                       {"columns", cols}};
    } else {
        m["builtin"] = c.model.builtin;
        if (!c.model.options.scalars.empty()) m["params"] = c.model.options.scalars;
        if (!c.model.options.coefficients.empty()) m["coefficients"] = c.model.options.coefficients;
    }
    j["model"] = m;
    j["n_design"] = c.n_design;
    j["seed"] = c.seed;
    j["fit"] = {{"restarts", c.fit.restarts},
                {"log_length_bounds", {c.fit.log_length_lower, c.fit.log_length_upper}},
                {"log_sigma2_bounds", {c.fit.log_sigma2_lower, c.fit.log_sigma2_upper}},
                {"max_iterations", c.fit.max_iterations}};
    j["sobol"] = {{"n_base", c.sobol.n_base},
                  {"bootstrap", c.sobol.bootstrap},
                  {"posterior_draws", c.sobol.posterior_draws},
                  {"joint_draw_size", c.sobol.joint_draw_size}};
    j["out"] = c.out.string();
    return j;
}

// what must match for stored stage records to be reusable
json identity_object(const RunConfig& c) {
    json j = config_object(c);
    j.erase("out");
    return j;
}

json record_to_json(const StageRecord& r) {
    return {{"completed", r.completed}, {"seconds", r.seconds}, {"inputs", r.inputs},
            {"outputs", r.outputs},     {"notes", r.notes}};
}

StageRecord record_from_json(const json& j) {
    StageRecord r;
    r.completed = j.at("completed").get<bool>();
    r.seconds = j.at("seconds").get<double>();
    r.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    r.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    r.notes = j.at("notes").get<std::map<std::string, std::string>>();
    return r;
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

// ---------------------------------------------------------------------------
// config

ParameterSpace RunConfig::resolved_space() const {
    if (space) return *space;
    if (model.ingest) return ParameterSpace::pressure_bin();
    return make_builtin_model(model.builtin, model.options)->space();
}

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_object(root, "config");
    reject_unknown(root, {"space", "model", "n_design", "seed", "fit", "sobol", "out", "threads"}, "config");

    RunConfig c;
    if (root.contains("space")) {
        const json& s = root["space"];
        if (!s.is_array()) throw ConfigError("space must be an array of parameters");
        std::vector<ParameterDef> defs;
        for (const json& p : s) {
            require_object(p, "space entry");
            reject_unknown(p, {"name", "lower", "upper", "unit"}, "space entry");
            if (!p.contains("name") || !p.contains("lower") || !p.contains("upper")) {
                throw ConfigError("space entries need name, lower and upper");
            }
            ParameterDef d;
            d.name = get_as<std::string>(p["name"], "space.name");
            d.lower = get_as<double>(p["lower"], "space.lower");
            d.upper = get_as<double>(p["upper"], "space.upper");
            if (p.contains("unit")) d.unit = get_as<std::string>(p["unit"], "space.unit");
            defs.push_back(std::move(d));
        }
        try {
            c.space = ParameterSpace(std::move(defs));
        } catch (const InvalidDesignError& e) {
            throw ConfigError(std::string("invalid space: ") + e.what());
        }
    }
    if (root.contains("model")) {
        const json& m = require_object(root["model"], "model");
        reject_unknown(m, {"builtin", "params", "coefficients", "ingest"}, "model");
        if (m.contains("ingest")) {
            if (m.contains("builtin")) throw ConfigError("model selects both a builtin and ingest files");
            const json& ing = require_object(m["ingest"], "model.ingest");
            reject_unknown(ing, {"design", "responses", "columns"}, "model.ingest");
            if (!ing.contains("design") || !ing.contains("responses")) {
                throw ConfigError("model.ingest needs design and responses paths");
            }
            c.model.ingest = true;
            c.model.design_csv = resolve_path(get_as<std::string>(ing["design"], "model.ingest.design"), base_dir);
            c.model.responses_csv =
                resolve_path(get_as<std::string>(ing["responses"], "model.ingest.responses"), base_dir);
            if (ing.contains("columns")) {
                const json& cols = require_object(ing["columns"], "model.ingest.columns");
                reject_unknown(cols, {"sample_id", "response", "parameters"}, "model.ingest.columns");
                if (cols.contains("sample_id")) c.model.columns.sample_id = get_as<std::string>(cols["sample_id"], "columns.sample_id");
                if (cols.contains("response")) c.model.columns.response = get_as<std::string>(cols["response"], "columns.response");
                if (cols.contains("parameters")) {
                    c.model.columns.parameters =
                        get_as<std::map<std::string, std::string>>(cols["parameters"], "columns.parameters");
                }
            }
        } else {
            if (m.contains("builtin")) c.model.builtin = get_as<std::string>(m["builtin"], "model.builtin");
            if (m.contains("params")) {
                c.model.options.scalars = get_as<std::map<std::string, double>>(m["params"], "model.params");
            }
            if (m.contains("coefficients")) {
                c.model.options.coefficients = get_as<std::vector<double>>(m["coefficients"], "model.coefficients");
            }
        }
    }
    if (root.contains("n_design")) c.n_design = get_count(root["n_design"], "n_design");
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer()) {
            throw ConfigError("seed must be a non-negative integer");
        }
        if (root["seed"].is_number_integer() && root["seed"].get<long long>() < 0) {
            throw ConfigError("seed must be a non-negative integer");
        }
        c.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("fit")) {
        const json& f = require_object(root["fit"], "fit");
        reject_unknown(f, {"restarts", "log_length_bounds", "log_sigma2_bounds", "max_iterations"}, "fit");
        if (f.contains("restarts")) c.fit.restarts = get_count(f["restarts"], "fit.restarts");
        if (f.contains("max_iterations")) c.fit.max_iterations = get_count(f["max_iterations"], "fit.max_iterations");
        if (f.contains("log_length_bounds")) {
            std::tie(c.fit.log_length_lower, c.fit.log_length_upper) =
                get_bounds(f["log_length_bounds"], "fit.log_length_bounds");
        }
        if (f.contains("log_sigma2_bounds")) {
            std::tie(c.fit.log_sigma2_lower, c.fit.log_sigma2_upper) =
                get_bounds(f["log_sigma2_bounds"], "fit.log_sigma2_bounds");
        }
    }
    if (root.contains("sobol")) {
        const json& s = require_object(root["sobol"], "sobol");
        reject_unknown(s, {"n_base", "bootstrap", "posterior_draws", "joint_draw_size"}, "sobol");
        if (s.contains("n_base")) c.sobol.n_base = get_count(s["n_base"], "sobol.n_base");
        if (s.contains("bootstrap")) c.sobol.bootstrap = get_count(s["bootstrap"], "sobol.bootstrap");
        if (s.contains("posterior_draws")) c.sobol.posterior_draws = get_count(s["posterior_draws"], "sobol.posterior_draws");
        if (s.contains("joint_draw_size")) c.sobol.joint_draw_size = get_count(s["joint_draw_size"], "sobol.joint_draw_size");
    }
    if (root.contains("out")) c.out = resolve_path(get_as<std::string>(root["out"], "out"), base_dir);
    if (root.contains("threads")) c.threads = static_cast<unsigned>(get_count(root["threads"], "threads"));
    return c;
}

RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse_config(read_text(path), path.parent_path());
}

std::string config_to_json(const RunConfig& config) { return config_object(config).dump(2) + "\n"; }

void validate_config(const RunConfig& c) {
    if (c.n_design < 1) throw ConfigError("n_design must be at least 1");
    if (c.fit.restarts < 1) throw ConfigError("fit.restarts must be at least 1");
    if (c.fit.max_iterations < 1) throw ConfigError("fit.max_iterations must be at least 1");
    if (!(c.fit.log_length_lower < c.fit.log_length_upper)) throw ConfigError("fit.log_length_bounds must be increasing");
    if (!(c.fit.log_sigma2_lower < c.fit.log_sigma2_upper)) throw ConfigError("fit.log_sigma2_bounds must be increasing");
    if (c.sobol.n_base < 2) throw ConfigError("sobol.n_base must be at least 2");
    if (c.sobol.bootstrap < 1) throw ConfigError("sobol.bootstrap must be at least 1");
    if (c.sobol.joint_draw_size < 1) throw ConfigError("sobol.joint_draw_size must be at least 1");
    // posterior_draws = 0 is allowed: it switches the surrogate interval off

    if (c.model.ingest) {
        for (const fs::path& p : {c.model.design_csv, c.model.responses_csv}) {
            if (!fs::is_regular_file(p)) throw ConfigError("ingest file not found: " + p.string());
        }
        return;
    }
    try {
        make_model(c);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

std::unique_ptr<EvaluableModel> make_model(const RunConfig& config) {
    if (config.model.ingest) throw ConfigError("ingest runs have no builtin model");
    auto model = make_builtin_model(config.model.builtin, config.model.options);
    if (!config.space || *config.space == model->space()) return model;
    if (config.model.builtin == "pressure_bin") {
        if (config.space->dim() != 2) throw ConfigError("pressure_bin needs a two-parameter space");
        auto& pb = static_cast<PressureBinModel&>(*model);
        return std::make_unique<PressureBinModel>(pb.params(), *config.space);
    }
    throw ConfigError("configured space does not match model '" + config.model.builtin + "'");
}

StageSeeds stage_seeds(std::uint64_t seed) {
    return {seed, mix_seed(seed, 101), mix_seed(seed, 202)};
}

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::Design: return "design";
        case Stage::Evaluate: return "evaluate";
        case Stage::Fit: return "fit";
        case Stage::Sobol: return "sobol";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// manifest

RunManifest::RunManifest(const RunConfig& config)
    : config_(config), config_json_(identity_object(config).dump()) {}

RunManifest RunManifest::load_or_create(const RunConfig& config) {
    RunManifest m(config);
    fs::path path = artifact(config, artifacts::kManifest);
    if (!fs::exists(path)) return m;
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw StaleArtifactError("manifest " + path.string() + " is unreadable: " + e.what());
    }
    if (!j.contains("config") || !j.contains("stages")) {
        throw StaleArtifactError("manifest " + path.string() + " is incomplete");
    }
    json stored = j["config"];
    stored.erase("out");
    if (stored.dump() != m.config_json_) return m;  // different run: start over
    try {
        for (auto it = j["stages"].begin(); it != j["stages"].end(); ++it) {
            m.stages_[it.key()] = record_from_json(it.value());
        }
    } catch (const json::exception& e) {
        throw StaleArtifactError("manifest " + path.string() + " has a malformed stage record: " + e.what());
    }
    return m;
}

bool RunManifest::completed(Stage stage) const {
    auto it = stages_.find(stage_name(stage));
    return it != stages_.end() && it->second.completed;
}

void RunManifest::invalidate_from(Stage stage) {
    bool drop = false;
    for (Stage s : kStages) {
        drop = drop || s == stage;
        if (drop) stages_.erase(stage_name(s));
    }
}

void RunManifest::record(Stage stage, StageRecord record) {
    invalidate_from(stage);
    record.completed = true;
    stages_[stage_name(stage)] = std::move(record);
}

void RunManifest::verify(Stage stage) const {
    auto it = stages_.find(stage_name(stage));
    if (it == stages_.end() || !it->second.completed) return;
    auto check = [&](const std::map<std::string, std::string>& files, const char* role) {
        for (const auto& [key, digest] : files) {
            fs::path p = record_path(config_, key);
            if (!fs::exists(p)) {
                throw StaleArtifactError(std::string(role) + " " + p.string() + " of completed stage '" +
                                         stage_name(stage) + "' is missing; rerun with --fresh");
            }
            if (sha256_file(p) != digest) {
                throw StaleArtifactError(std::string(role) + " " + p.string() + " changed since stage '" +
                                         stage_name(stage) + "' completed; rerun with --fresh");
            }
        }
    };
    check(it->second.inputs, "input");
    check(it->second.outputs, "output");
}

void RunManifest::set_config_file(const fs::path& path, const std::string& digest) {
    config_file_ = std::make_pair(key_for(path), digest);
}

std::string RunManifest::to_json() const {
    json j;
    j["tool"] = "gsa";
    j["version"] = kToolVersion;
    j["config"] = config_object(config_);
    if (config_file_) j["config_file"] = {{"path", config_file_->first}, {"sha256", config_file_->second}};
    StageSeeds seeds = stage_seeds(config_.seed);
    j["seeds"] = {{"run", config_.seed},
                  {"design", seeds.design},
                  {"fit", seeds.fit},
                  {"fit_restart_streams", "mix_seed(fit, r) for restart r >= 1"},
                  {"sobol", seeds.sobol},
                  {"sobol_streams", "A: mix_seed(sobol, 0), B: mix_seed(sobol, 1), bootstrap: mix_seed(sobol, 2), "
                                    "posterior chunk c: mix_seed(sobol, 1000 + c)"}};
    j["rng"] = Rng::kAlgorithm;
    FitProvenance fp;
    j["methods"] = {{"design", "Latin hypercube, random position within cell"},
                    {"fit_frame", "unit design -> Gaussian (inverse normal CDF), responses standardized"},
                    {"kernel", "squared exponential, constant mean, noiseless with jitter escalation"},
                    {"optimizer", fp.optimizer},
                    {"mean_treatment", fp.mean_treatment},
                    {"pick_freeze_base", "independent Latin hypercubes"},
                    {"first_order_estimator", kFirstOrderEstimator},
                    {"total_order_estimator", kTotalOrderEstimator},
                    {"mc_interval", "95% percentile bootstrap over base-sample rows"},
                    {"surrogate_interval", "95% percentile over joint posterior draws"}};
    if (config_.model.ingest) {
        j["model"] = {{"source", "ingested"}};
    } else {
        try {
            auto model = make_model(config_);
            json params = json::object();
            for (const auto& [k, v] : model->parameters()) params[k] = v;
            j["model"] = {{"source", "builtin"}, {"name", model->name()}, {"parameters", params}};
        } catch (const Error&) {
            j["model"] = {{"source", "builtin"}, {"name", config_.model.builtin}};
        }
    }
    json stages = json::object();
    for (const auto& [name, rec] : stages_) stages[name] = record_to_json(rec);
    j["stages"] = stages;
    json files = json::object();
    for (const auto& [name, rec] : stages_) {
        for (const auto& [k, v] : rec.inputs) files[k] = v;
        for (const auto& [k, v] : rec.outputs) files[k] = v;
    }
    if (config_file_) files[config_file_->first] = config_file_->second;
    j["files"] = files;
    j["runtime"] = {{"threads", config_.threads == 0 ? "auto" : std::to_string(config_.threads)}};
    return j.dump(2) + "\n";
}

void RunManifest::save() const { write_text(artifact(config_, artifacts::kManifest), to_json()); }

// ---------------------------------------------------------------------------
// stages

namespace {

std::string unit_design_csv_text(const DesignMatrix& unit, const std::vector<std::string>& ids) {
    csv::Table t;
    t.header.push_back("sample_id");
    for (const auto& n : unit.space().names()) t.header.push_back(n);
    for (std::size_t i = 0; i < unit.rows(); ++i) {
        std::vector<std::string> row{ids[i]};
        for (std::size_t j = 0; j < unit.cols(); ++j) row.push_back(csv::format_double(unit(i, j)));
        t.rows.push_back(std::move(row));
    }
    return csv::format(t);
}

void require_file(const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw IoError(std::string(what) + " not found: " + p.string() + " (run the earlier stages first)");
}

}  // namespace

void run_design(const RunConfig& config, RunManifest& manifest) {
    auto start = std::chrono::steady_clock::now();
    StageRecord rec;
    if (config.model.ingest) {
        // the design comes with the ingested files; the evaluate stage
        // writes the canonical copies
        rec.notes["source"] = "ingested";
        rec.seconds = seconds_since(start);
        manifest.record(Stage::Design, std::move(rec));
        manifest.save();
        return;
    }
    ParameterSpace space = config.resolved_space();
    DesignMatrix unit = lhs_sample(space, config.n_design, stage_seeds(config.seed).design);
    DesignMatrix physical = to_physical(unit);
    auto ids = sequential_ids(config.n_design);
    write_text(artifact(config, artifacts::kDesign), design_csv_text(physical, ids));
    write_text(artifact(config, artifacts::kDesignUnit), unit_design_csv_text(unit, ids));
    rec.outputs = digests_of(config, {artifacts::kDesign, artifacts::kDesignUnit});
    rec.notes["source"] = "latin hypercube";
    rec.notes[std::string(artifacts::kDesign) + ".frame"] = "physical";
    rec.notes[std::string(artifacts::kDesignUnit) + ".frame"] = "unit";
    rec.notes["rows"] = std::to_string(config.n_design);
    rec.seconds = seconds_since(start);
    manifest.record(Stage::Design, std::move(rec));
    manifest.save();
}

void run_evaluate(const RunConfig& config, RunManifest& manifest) {
    auto start = std::chrono::steady_clock::now();
    manifest.verify(Stage::Design);
    ParameterSpace space = config.resolved_space();
    StageRecord rec;
    if (config.model.ingest) {
        SampleSet samples = ingest(config.model.design_csv, config.model.responses_csv, space, config.model.columns);
        write_text(artifact(config, artifacts::kDesign), design_csv_text(samples.design(), samples.ids()));
        write_text(artifact(config, artifacts::kDesignUnit),
                   unit_design_csv_text(to_unit(samples.design()), samples.ids()));
        write_text(artifact(config, artifacts::kResponses), responses_csv_text(samples.responses(), samples.ids()));
        rec.inputs[key_for(config.model.design_csv)] = sha256_file(config.model.design_csv);
        rec.inputs[key_for(config.model.responses_csv)] = sha256_file(config.model.responses_csv);
        rec.outputs = digests_of(config, {artifacts::kDesign, artifacts::kDesignUnit, artifacts::kResponses});
        rec.notes["source"] = "ingested";
        rec.notes["rows"] = std::to_string(samples.size());
    } else {
        auto model = make_model(config);
        fs::path design_path = artifact(config, artifacts::kDesign);
        require_file(design_path, "design");
        csv::Table table = csv::read(design_path);
        // the design file must carry exactly the model's parameters
        for (const auto& name : model->space().names()) {
            if (table.column(name) == table.header.size()) {
                throw ValidationError("design " + design_path.string() + " has no column '" + name +
                                      "' required by model '" + model->name() + "'");
            }
        }
        if (table.header.size() != model->space().dim() + 1) {
            throw ValidationError("design " + design_path.string() + " does not match the parameters of model '" +
                                  model->name() + "'");
        }
        std::size_t id_col = table.column("sample_id");
        if (id_col == table.header.size()) throw ValidationError("design has no sample_id column");
        Eigen::MatrixXd values(static_cast<Eigen::Index>(table.rows.size()),
                               static_cast<Eigen::Index>(model->space().dim()));
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            ids.push_back(table.rows[i][id_col]);
            for (std::size_t j = 0; j < model->space().dim(); ++j) {
                double v;
                if (!csv::parse_double(table.rows[i][table.column(model->space()[j].name)], v)) {
                    throw ValidationError("design line " + std::to_string(table.line_numbers[i]) +
                                          ": malformed number");
                }
                values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            }
        }
        DesignMatrix design(std::move(values), Frame::Physical, model->space());
        SampleSet samples = generate_sample_set(*model, design, config.threads, config.seed);
        write_text(artifact(config, artifacts::kResponses), responses_csv_text(samples.responses(), ids));
        rec.inputs = digests_of(config, {artifacts::kDesign});
        rec.outputs = digests_of(config, {artifacts::kResponses});
        rec.notes["source"] = "builtin:" + model->name();
        rec.notes["rows"] = std::to_string(samples.size());
    }
    rec.seconds = seconds_since(start);
    manifest.record(Stage::Evaluate, std::move(rec));
    manifest.save();
}

SampleSet load_run_samples(const RunConfig& config, DesignMatrix* unit_design) {
    ParameterSpace space = config.resolved_space();
    fs::path design_path = artifact(config, artifacts::kDesign);
    fs::path responses_path = artifact(config, artifacts::kResponses);
    require_file(design_path, "design");
    require_file(responses_path, "responses");
    SampleSet samples = ingest(design_path, responses_path, space);
    if (unit_design) {
        fs::path unit_path = artifact(config, artifacts::kDesignUnit);
        require_file(unit_path, "unit design");
        csv::Table t = csv::read(unit_path);
        std::size_t id_col = t.column("sample_id");
        if (id_col == t.header.size() || t.rows.size() != samples.size()) {
            throw ValidationError("unit design " + unit_path.string() + " does not match " + design_path.string());
        }
        Eigen::MatrixXd u(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(space.dim()));
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (t.rows[i][id_col] != samples.ids()[i]) {
                throw ValidationError("unit design row order differs from " + design_path.string());
            }
            for (std::size_t j = 0; j < space.dim(); ++j) {
                std::size_t col = t.column(space[j].name);
                double v;
                if (col == t.header.size() || !csv::parse_double(t.rows[i][col], v)) {
                    throw ValidationError("unit design line " + std::to_string(t.line_numbers[i]) +
                                          ": missing or malformed '" + space[j].name + "'");
                }
                u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            }
        }
        *unit_design = DesignMatrix(std::move(u), Frame::Unit, space);
    }
    return samples;
}

GprModel run_fit(const RunConfig& config, RunManifest& manifest) {
    auto start = std::chrono::steady_clock::now();
    manifest.verify(Stage::Design);
    manifest.verify(Stage::Evaluate);
    DesignMatrix unit(Eigen::MatrixXd(0, config.resolved_space().dim()), Frame::Unit, config.resolved_space());
    SampleSet samples = load_run_samples(config, &unit);

    TrainingSet training(to_gaussian(unit), standardize(samples.responses()));
    FitConfig fit = config.fit;
    fit.seed = stage_seeds(config.seed).fit;
    fit.threads = config.threads;
    GprModel model = fit_gpr(training, fit);
    save_model(artifact(config, artifacts::kModel), model);

    StageRecord rec;
    rec.inputs = digests_of(config, {artifacts::kDesign, artifacts::kDesignUnit, artifacts::kResponses});
    rec.outputs = digests_of(config, {artifacts::kModel});
    rec.notes["log_ml"] = fmt(model.log_ml());
    rec.notes["best_restart"] = std::to_string(model.provenance().best_restart);
    rec.notes["restarts"] = std::to_string(model.provenance().restarts);
    rec.notes["nugget"] = fmt(model.hyper().nugget);
    rec.notes["mu0"] = fmt(model.hyper().mu0);
    rec.notes["sigma0_sq"] = fmt(model.hyper().sigma0_sq);
    for (std::size_t j = 0; j < model.dim(); ++j) {
        rec.notes["length_scale." + unit.space()[j].name] = fmt(model.hyper().length_scales(static_cast<Eigen::Index>(j)));
    }
    rec.notes["response_mean"] = fmt(model.training().responses().mean);
    rec.notes["response_sd"] = fmt(model.training().responses().sd);
    rec.seconds = seconds_since(start);
    manifest.record(Stage::Fit, std::move(rec));
    manifest.save();
    return model;
}

SobolResult run_sobol(const RunConfig& config, RunManifest& manifest) {
    auto start = std::chrono::steady_clock::now();
    for (Stage s : {Stage::Design, Stage::Evaluate, Stage::Fit}) manifest.verify(s);
    fs::path model_path = artifact(config, artifacts::kModel);
    require_file(model_path, "model");
    GprModel model = load_model(model_path);
    SobolOptions options = config.sobol;
    options.threads = config.threads;
    std::uint64_t seed = stage_seeds(config.seed).sobol;
    SobolResult result = sobol_on_surrogate(model, config.resolved_space(), options, seed);

    std::vector<std::pair<std::string, std::string>> prov{
        {"tool_version", kToolVersion},
        {"run_seed", std::to_string(config.seed)},
        {"model_sha256", sha256_file(model_path)},
        {"pick_freeze_base", "independent Latin hypercubes"},
    };
    write_text(artifact(config, artifacts::kSobolJson), sobol_result_to_json(result, prov));
    write_text(artifact(config, artifacts::kSobolCsv), sobol_summary_csv(result));
    write_text(artifact(config, artifacts::kSobolBars), sobol_bars_csv(result));

    StageRecord rec;
    rec.inputs = digests_of(config, {artifacts::kModel});
    rec.outputs = digests_of(config, {artifacts::kSobolJson, artifacts::kSobolCsv, artifacts::kSobolBars});
    rec.notes["evaluations"] = std::to_string(result.n_base * (result.dim() + 2));
    rec.notes["joint_draw_chunks"] = std::to_string(result.joint_draw_chunks);
    if (result.joint_draw_chunks > 1) {
        rec.notes["chunking"] = "posterior draws are joint within chunks and independent across chunks (approximation)";
    }
    rec.notes["degenerate"] = result.degenerate ? "true" : "false";
    rec.seconds = seconds_since(start);
    manifest.record(Stage::Sobol, std::move(rec));
    manifest.save();
    return result;
}

PipelineReport run_pipeline(const RunConfig& config, RunManifest& manifest) {
    PipelineReport report;
    bool rerun = false;
    for (Stage s : kStages) {
        if (!rerun && manifest.completed(s)) {
            manifest.verify(s);
            report.skipped.push_back(stage_name(s));
            continue;
        }
        rerun = true;
        switch (s) {
            case Stage::Design: run_design(config, manifest); break;
            case Stage::Evaluate: run_evaluate(config, manifest); break;
            case Stage::Fit: run_fit(config, manifest); break;
            case Stage::Sobol: run_sobol(config, manifest); break;
        }
        report.executed.push_back(stage_name(s));
    }
    manifest.save();
    return report;
}

}  // namespace gsa
