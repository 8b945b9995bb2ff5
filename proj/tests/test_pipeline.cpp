#include <gtest/gtest.h>

#include <json.hpp>

#include "gsa/csv.hpp"
#include "gsa/digest.hpp"
#include "gsa/error.hpp"
#include "gsa/pipeline.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using gsa::RunConfig;
using gsa::RunManifest;

namespace {

// small and fast: the pipeline contract does not depend on the sizes
RunConfig small_config(const fs::path& out) {
    RunConfig c;
    c.out = out;
    c.n_design = 30;
    c.fit.restarts = 2;
    c.sobol.n_base = 512;
    c.sobol.bootstrap = 50;
    c.sobol.posterior_draws = 4;
    c.threads = 1;
    return c;
}

std::map<std::string, std::string> digests(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename() == "manifest.json") continue;
        out[e.path().filename().string()] = gsa::sha256_file(e.path());
    }
    return out;
}

}  // namespace

TEST(Config, ParsesEveryField) {
    TempDir tmp;
    write_file(tmp / "d.csv", "x");
    write_file(tmp / "r.csv", "x");
    auto c = gsa::parse_config(R"({
        "space": [{"name": "angle_of_attack_deg", "lower": 0, "upper": 0.2, "unit": "deg"},
                  {"name": "additional_indentation_mm", "lower": 0, "upper": 1}],
        "model": {"ingest": {"design": "d.csv", "responses": "r.csv",
                             "columns": {"sample_id": "Run", "parameters": {"angle_of_attack_deg": "phi"}}}},
        "n_design": 12, "seed": 99,
        "fit": {"restarts": 3, "log_length_bounds": [-1, 1], "log_sigma2_bounds": [-2, 2], "max_iterations": 50},
        "sobol": {"n_base": 64, "bootstrap": 10, "posterior_draws": 0, "joint_draw_size": 100},
        "out": "run", "threads": 2})", tmp.path());
    ASSERT_TRUE(c.space.has_value());
    EXPECT_EQ((*c.space)[0].upper, 0.2);
    EXPECT_TRUE(c.model.ingest);
    EXPECT_EQ(c.model.design_csv, (tmp / "d.csv").lexically_normal());
    EXPECT_EQ(c.model.columns.sample_id, "Run");
    EXPECT_EQ(c.model.columns.parameters.at("angle_of_attack_deg"), "phi");
    EXPECT_EQ(c.n_design, 12u);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.fit.restarts, 3u);
    EXPECT_EQ(c.fit.log_sigma2_upper, 2.0);
    EXPECT_EQ(c.sobol.posterior_draws, 0u);
    EXPECT_EQ(c.out, tmp / "run");
    EXPECT_EQ(c.threads, 2u);
    EXPECT_NO_THROW(gsa::validate_config(c));

    // the echoed config parses back to the same thing
    auto again = gsa::parse_config(gsa::config_to_json(c));
    EXPECT_EQ(gsa::config_to_json(again), gsa::config_to_json(c));
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(gsa::parse_config("{"), gsa::ConfigError);
    EXPECT_THROW(gsa::parse_config(R"({"n_desing": 3})"), gsa::ConfigError);
    EXPECT_THROW(gsa::parse_config(R"({"seed": -1})"), gsa::ConfigError);
    EXPECT_THROW(gsa::parse_config(R"({"fit": {"restarts": "many"}})"), gsa::ConfigError);
    EXPECT_THROW(gsa::parse_config(R"({"space": [{"name": "a", "lower": 1, "upper": 0}]})"), gsa::ConfigError);
    EXPECT_THROW(gsa::parse_config(R"({"model": {"builtin": "ishigami", "ingest": {}}})"), gsa::ConfigError);

    auto zero = gsa::parse_config(R"({"n_design": 0})");
    EXPECT_THROW(gsa::validate_config(zero), gsa::ConfigError);
    auto missing = gsa::parse_config(R"({"model": {"ingest": {"design": "/nonexistent/d.csv", "responses": "/nonexistent/r.csv"}}})");
    EXPECT_THROW(gsa::validate_config(missing), gsa::ConfigError);
    auto unknown = gsa::parse_config(R"({"model": {"builtin": "rosenbrock"}})");
    EXPECT_THROW(gsa::validate_config(unknown), gsa::ConfigError);
    auto mismatch = gsa::parse_config(R"({"model": {"builtin": "ishigami"},
        "space": [{"name": "a", "lower": 0, "upper": 1}]})");
    EXPECT_THROW(gsa::validate_config(mismatch), gsa::ConfigError);
    EXPECT_THROW(gsa::load_config("/nonexistent/config.json"), gsa::ConfigError);
}

TEST(Stages, DesignWritesPhysicalAndUnitCopies) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    c.n_design = 100;
    RunManifest m(c);
    gsa::run_design(c, m);
    auto t = gsa::csv::read(tmp / "run" / "design.csv");
    ASSERT_EQ(t.rows.size(), 100u);
    ASSERT_EQ(t.header.size(), 3u);
    EXPECT_EQ(t.header[0], "sample_id");
    for (const auto& row : t.rows) {
        double phi, h;
        ASSERT_TRUE(gsa::csv::parse_double(row[1], phi));
        ASSERT_TRUE(gsa::csv::parse_double(row[2], h));
        EXPECT_GE(phi, 0.0);
        EXPECT_LE(phi, 0.25);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, 1.0);
    }
    EXPECT_TRUE(fs::exists(tmp / "run" / "design_unit.csv"));
    EXPECT_TRUE(m.completed(gsa::Stage::Design));
    EXPECT_EQ(m.stages().at("design").notes.at("design.csv.frame"), "physical");
}

TEST(Stages, SingleRowDesign) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    c.n_design = 1;
    RunManifest m(c);
    gsa::run_design(c, m);
    EXPECT_EQ(gsa::csv::read(tmp / "run" / "design.csv").rows.size(), 1u);
}

TEST(Stages, EvaluateMatchesModel) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    RunManifest m(c);
    gsa::run_design(c, m);
    gsa::run_evaluate(c, m);
    auto samples = gsa::load_run_samples(c);
    ASSERT_EQ(samples.size(), 30u);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        EXPECT_EQ(samples.responses().values(static_cast<Eigen::Index>(i)),
                  gsa::pressure_bin_standin(samples.design()(i, 0), samples.design()(i, 1)));
    }
}

TEST(Stages, EvaluateRejectsModelSpaceMismatch) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    RunManifest m(c);
    gsa::run_design(c, m);
    auto other = c;
    other.model.builtin = "ishigami";
    RunManifest m2(other);
    EXPECT_THROW(gsa::run_evaluate(other, m2), gsa::ValidationError);
}

TEST(Stages, FitRejectsConstantResponses) {
    TempDir tmp;
    std::string d = "sample_id,angle_of_attack_deg,additional_indentation_mm\n";
    std::string r = "sample_id,response\n";
    for (int i = 1; i <= 10; ++i) {
        d += std::to_string(i) + "," + gsa::csv::format_double(0.02 * i) + ",0.5\n";
        r += std::to_string(i) + ",500\n";
    }
    write_file(tmp / "d.csv", d);
    write_file(tmp / "r.csv", r);
    auto c = small_config(tmp / "run");
    c.model.ingest = true;
    c.model.design_csv = tmp / "d.csv";
    c.model.responses_csv = tmp / "r.csv";
    RunManifest m(c);
    gsa::run_design(c, m);
    gsa::run_evaluate(c, m);
    EXPECT_THROW(gsa::run_fit(c, m), gsa::DegenerateResponseError);
}

TEST(Stages, IngestWithMissingResponseNamesId) {
    TempDir tmp;
    std::string d = "sample_id,angle_of_attack_deg,additional_indentation_mm\n";
    std::string r = "sample_id,response\n";
    for (int i = 1; i <= 100; ++i) {
        d += "run" + std::to_string(i) + "," + gsa::csv::format_double(0.0025 * i) + ",0.5\n";
        if (i != 64) r += "run" + std::to_string(i) + "," + std::to_string(480 + i) + "\n";
    }
    write_file(tmp / "d.csv", d);
    write_file(tmp / "r.csv", r);
    auto c = small_config(tmp / "run");
    c.model.ingest = true;
    c.model.design_csv = tmp / "d.csv";
    c.model.responses_csv = tmp / "r.csv";
    RunManifest m(c);
    try {
        gsa::run_pipeline(c, m);
        FAIL();
    } catch (const gsa::IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("run64"), std::string::npos);
    }
}

TEST(Pipeline, IngestRunEndToEnd) {
    TempDir tmp;
    std::string d = "Run,phi,h\n";
    std::string r = "Run,sigma\n";
    for (int i = 1; i <= 40; ++i) {
        double phi = 0.25 * ((i * 7) % 40) / 39.0, h = ((i * 13) % 40) / 39.0;
        d += std::to_string(i) + "," + gsa::csv::format_double(phi) + "," + gsa::csv::format_double(h) + "\n";
        r += std::to_string(i) + "," + gsa::csv::format_double(gsa::pressure_bin_standin(phi, h)) + "\n";
    }
    write_file(tmp / "d.csv", d);
    write_file(tmp / "r.csv", r);
    auto c = small_config(tmp / "run");
    c.model.ingest = true;
    c.model.design_csv = tmp / "d.csv";
    c.model.responses_csv = tmp / "r.csv";
    c.model.columns.sample_id = "Run";
    c.model.columns.response = "sigma";
    c.model.columns.parameters = {{"angle_of_attack_deg", "phi"}, {"additional_indentation_mm", "h"}};
    RunManifest m(c);
    gsa::run_pipeline(c, m);
    auto j = nlohmann::json::parse(read_file(tmp / "run" / "sobol.json"));
    EXPECT_GT(j["first_order"][0].get<double>(), j["first_order"][1].get<double>());
    auto manifest = nlohmann::json::parse(read_file(tmp / "run" / "manifest.json"));
    EXPECT_TRUE(manifest["files"].contains(fs::absolute(tmp / "d.csv").lexically_normal().string()));
}

TEST(Pipeline, DeterministicDigestsAndThreadIndependence) {
    TempDir tmp;
    auto a = small_config(tmp / "a");
    auto b = small_config(tmp / "b");
    b.threads = 4;
    RunManifest ma(a), mb(b);
    gsa::run_pipeline(a, ma);
    gsa::run_pipeline(b, mb);
    EXPECT_EQ(digests(tmp / "a"), digests(tmp / "b"));
    EXPECT_EQ(digests(tmp / "a").size(), 7u);

    auto c = small_config(tmp / "c");
    c.seed = 2;
    RunManifest mc(c);
    gsa::run_pipeline(c, mc);
    EXPECT_NE(digests(tmp / "a").at("design.csv"), digests(tmp / "c").at("design.csv"));
}

TEST(Pipeline, ManifestListsEveryFile) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    RunManifest m(c);
    gsa::run_pipeline(c, m);
    auto j = nlohmann::json::parse(read_file(tmp / "run" / "manifest.json"));
    for (const auto& [name, digest] : digests(tmp / "run")) {
        ASSERT_TRUE(j["files"].contains(name)) << name;
        EXPECT_EQ(j["files"][name], digest);
    }
    EXPECT_EQ(j["version"], gsa::kToolVersion);
    EXPECT_EQ(j["methods"]["first_order_estimator"], "saltelli2010");
    EXPECT_TRUE(j["seeds"].contains("sobol"));
    EXPECT_TRUE(j["stages"]["fit"]["notes"].contains("log_ml"));
    for (const char* s : {"design", "evaluate", "fit", "sobol"}) EXPECT_TRUE(j["stages"][s]["completed"].get<bool>());
}

TEST(Pipeline, ResumesAfterInterruption) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    {
        RunManifest m(c);
        gsa::run_design(c, m);
        gsa::run_evaluate(c, m);
    }  // "interrupted" before fit
    auto before = gsa::sha256_file(tmp / "run" / "responses.csv");
    auto m = RunManifest::load_or_create(c);
    auto report = gsa::run_pipeline(c, m);
    EXPECT_EQ(report.skipped, (std::vector<std::string>{"design", "evaluate"}));
    EXPECT_EQ(report.executed, (std::vector<std::string>{"fit", "sobol"}));
    EXPECT_EQ(gsa::sha256_file(tmp / "run" / "responses.csv"), before);

    // same digests as an uninterrupted run
    auto fresh = small_config(tmp / "fresh");
    RunManifest mf(fresh);
    gsa::run_pipeline(fresh, mf);
    EXPECT_EQ(digests(tmp / "run"), digests(tmp / "fresh"));

    auto again = RunManifest::load_or_create(c);
    EXPECT_EQ(gsa::run_pipeline(c, again).executed.size(), 0u);
}

TEST(Pipeline, StaleArtifactDetected) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    RunManifest m(c);
    gsa::run_pipeline(c, m);
    write_file(tmp / "run" / "responses.csv", read_file(tmp / "run" / "responses.csv") + "31,1\n");
    auto reloaded = RunManifest::load_or_create(c);
    EXPECT_THROW(gsa::run_pipeline(c, reloaded), gsa::StaleArtifactError);
    EXPECT_THROW(gsa::run_fit(c, reloaded), gsa::StaleArtifactError);
}

TEST(Pipeline, ChangedConfigStartsOver) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    RunManifest m(c);
    gsa::run_pipeline(c, m);
    c.sobol.bootstrap = 60;
    auto m2 = RunManifest::load_or_create(c);
    EXPECT_EQ(gsa::run_pipeline(c, m2).executed.size(), 4u);
    // thread count is not part of the run identity
    c.threads = 3;
    auto m3 = RunManifest::load_or_create(c);
    EXPECT_EQ(gsa::run_pipeline(c, m3).executed.size(), 0u);
}

TEST(Pipeline, DrawsOffDropsSurrogateColumns) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    c.sobol.posterior_draws = 0;
    RunManifest m(c);
    gsa::run_pipeline(c, m);
    auto t = gsa::csv::read(tmp / "run" / "sobol.csv");
    EXPECT_EQ(t.header.size(), 5u);
    auto j = nlohmann::json::parse(read_file(tmp / "run" / "sobol.json"));
    EXPECT_FALSE(j.contains("surrogate_ci_first"));
}

TEST(Pipeline, MissingInputsAreIoErrors) {
    TempDir tmp;
    auto c = small_config(tmp / "run");
    RunManifest m(c);
    EXPECT_THROW(gsa::run_evaluate(c, m), gsa::IoError);
    EXPECT_THROW(gsa::run_fit(c, m), gsa::IoError);
    EXPECT_THROW(gsa::run_sobol(c, m), gsa::IoError);
}
