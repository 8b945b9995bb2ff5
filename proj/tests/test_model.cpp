#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gsa/csv.hpp"
#include "gsa/error.hpp"
#include "gsa/model.hpp"
#include "test_util.hpp"

using gsa::ParameterSpace;

namespace {

// Lame hoop stress at the bore of a thick cylinder, written out from scratch
double lame_oracle(double phi_deg, double h_mm) {
    const double a = 11.6, t0 = 1.3, depth = 70.0, p = 50.0, beta = 0.02;
    double t = t0 - depth * std::tan(phi_deg * std::numbers::pi / 180.0);
    double b = a + t;
    return p * (b * b + a * a) / (b * b - a * a) * (1.0 + beta * h_mm);
}

std::string design_text(int n, double phi_step = 0.002) {
    std::string s = "sample_id,angle_of_attack_deg,additional_indentation_mm\n";
    for (int i = 1; i <= n; ++i) {
        s += "s" + std::to_string(i) + "," + gsa::csv::format_double(phi_step * i) + "," +
             gsa::csv::format_double(0.009 * i) + "\n";
    }
    return s;
}

std::string responses_text(int n, int skip = -1) {
    std::string s = "sample_id,response\n";
    for (int i = n; i >= 1; --i) {  // deliberately out of order
        if (i == skip) continue;
        s += "s" + std::to_string(i) + "," + gsa::csv::format_double(500.0 + i) + "\n";
    }
    return s;
}

}  // namespace

TEST(Ishigami, KnownPoints) {
    const double pi = std::numbers::pi;
    EXPECT_EQ(gsa::ishigami(Eigen::Vector3d(0, 0, 0)), 0.0);
    EXPECT_NEAR(gsa::ishigami(Eigen::Vector3d(pi / 2, pi / 2, 0)), 8.0, 1e-14);
    EXPECT_NEAR(gsa::ishigami(Eigen::Vector3d(pi / 2, 0, 2)), 1.0 + 0.1 * 16, 1e-14);
    EXPECT_NEAR(gsa::ishigami(Eigen::Vector3d(-pi / 2, 0, 1), 2.0, 0.5), -1.5, 1e-14);
    EXPECT_THROW(gsa::ishigami(Eigen::Vector2d(0, 0)), gsa::ShapeError);
}

TEST(GFunction, KnownPoints) {
    Eigen::Vector2d a(0.0, 1.0);
    EXPECT_NEAR(gsa::g_function(Eigen::Vector2d(0.0, 1.0), a), 2.0 * 1.5, 1e-15);
    EXPECT_NEAR(gsa::g_function(Eigen::Vector2d(0.5, 0.5), a), 0.0, 1e-15);
    EXPECT_NEAR(gsa::g_function(Eigen::Vector2d(0.25, 0.75), a), 1.0 * 1.0, 1e-15);
    EXPECT_THROW(gsa::g_function(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(-1.0, 0.0)), gsa::ParameterError);
    EXPECT_THROW(gsa::g_function(Eigen::Vector3d(0.5, 0.5, 0.5), a), gsa::ShapeError);
}

TEST(BuiltinModels, Factory) {
    EXPECT_EQ(gsa::builtin_model_names().size(), 3u);
    auto ish = gsa::make_builtin_model("ishigami");
    EXPECT_EQ(ish->space().dim(), 3u);
    EXPECT_NEAR(ish->space()[0].lower, -std::numbers::pi, 0);
    auto g = gsa::make_builtin_model("g_function", {{}, {0.0, 2.0}});
    EXPECT_EQ(g->space().dim(), 2u);
    EXPECT_THROW(gsa::make_builtin_model("nope"), gsa::ParameterError);
    EXPECT_THROW(gsa::make_builtin_model("ishigami", {{{"c", 1.0}}, {}}), gsa::ParameterError);
    auto pb = gsa::make_builtin_model("pressure_bin", {{{"indentation_factor", 0.05}}, {}});
    EXPECT_NEAR(pb->evaluate(Eigen::Vector2d(0.0, 1.0)) / pb->evaluate(Eigen::Vector2d(0.0, 0.0)), 1.05, 1e-12);
}

TEST(PressureBin, MatchesLameOracle) {
    for (double phi : {0.0, 0.05, 0.125, 0.25})
        for (double h : {0.0, 0.3, 1.0})
            EXPECT_NEAR(gsa::pressure_bin_standin(phi, h), lame_oracle(phi, h), 1e-10 * lame_oracle(phi, h));
    EXPECT_NEAR(gsa::pressure_bin_standin(0.0, 0.0), 472.48, 0.01);
}

TEST(PressureBin, MonotoneOnGrid) {
    gsa::PressureBinModel model;
    const int n = 50;
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = model.evaluate(Eigen::Vector2d(0.25 * i / (n - 1), 1.0 * j / (n - 1)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j + 1 < n; ++j) {
            EXPECT_GT(r(i, j + 1), r(i, j));
            EXPECT_GT(r(j + 1, i), r(j, i));
        }
    }
    double ratio = r.maxCoeff() / r.minCoeff();
    EXPECT_GT(ratio, 1.15);
    EXPECT_LT(ratio, 1.35);
}

TEST(PressureBin, InfeasibleGeometry) {
    EXPECT_THROW(gsa::pressure_bin_standin(1.1, 0.0), gsa::GeometryInfeasibleError);
    ParameterSpace wide({{"angle_of_attack_deg", 0.0, 2.0, "deg"}, {"additional_indentation_mm", 0.0, 1.0, "mm"}});
    EXPECT_THROW(gsa::PressureBinModel({}, wide), gsa::ParameterError);
}

TEST(SampleSets, GenerateAndExportRoundTrip) {
    TempDir tmp;
    gsa::PressureBinModel model;
    auto design = gsa::to_physical(gsa::lhs_sample(model.space(), 25, 4));
    auto samples = gsa::generate_sample_set(model, design, 3, 4);
    ASSERT_EQ(samples.size(), 25u);
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_EQ(samples.responses().values(static_cast<Eigen::Index>(i)),
                  gsa::pressure_bin_standin(design(i, 0), design(i, 1)));
    }
    gsa::export_sample_set(samples, tmp / "d.csv", tmp / "r.csv");
    auto back = gsa::ingest(tmp / "d.csv", tmp / "r.csv", model.space());
    EXPECT_EQ(back.ids(), samples.ids());
    EXPECT_EQ(back.design().values(), design.values());
    EXPECT_EQ(back.responses().values, samples.responses().values);
}

TEST(SampleSets, GenerateRejectsMismatchedSpace) {
    gsa::IshigamiModel model;
    auto design = gsa::to_physical(gsa::lhs_sample(ParameterSpace::pressure_bin(), 5, 1));
    EXPECT_THROW(gsa::generate_sample_set(model, design), gsa::ValidationError);
}

TEST(Ingest, ConsistentFilesPassThrough) {
    TempDir tmp;
    write_file(tmp / "d.csv", design_text(100));
    write_file(tmp / "r.csv", responses_text(100));
    auto s = gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin());
    ASSERT_EQ(s.size(), 100u);
    EXPECT_EQ(s.ids().front(), "s1");
    EXPECT_EQ(s.responses().values(0), 501.0);
    EXPECT_EQ(s.responses().values(99), 600.0);
    EXPECT_EQ(s.source().kind, gsa::SampleSource::Kind::Ingested);
}

TEST(Ingest, MissingResponseNamesTheId) {
    TempDir tmp;
    write_file(tmp / "d.csv", design_text(100));
    write_file(tmp / "r.csv", responses_text(100, 37));
    try {
        gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin());
        FAIL() << "expected IngestionError";
    } catch (const gsa::IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("s37"), std::string::npos) << e.what();
    }
}

TEST(Ingest, OutOfBoundsListsRows) {
    TempDir tmp;
    std::string d = design_text(3);
    d += "s4,0.3,0.5\ns5,0.1,nan\n";
    write_file(tmp / "d.csv", d);
    write_file(tmp / "r.csv", responses_text(5));
    try {
        gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin());
        FAIL() << "expected ValidationError";
    } catch (const gsa::ValidationError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("row 4 (line 5, sample_id s4)"), std::string::npos) << msg;
        EXPECT_NE(msg.find("sample_id s5"), std::string::npos) << msg;
    }
}

TEST(Ingest, BadResponsesAndStructure) {
    TempDir tmp;
    write_file(tmp / "d.csv", design_text(3));
    write_file(tmp / "r.csv", "sample_id,response\ns1,1\ns2,abc\ns3,3\n");
    EXPECT_THROW(gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin()), gsa::ValidationError);

    write_file(tmp / "r.csv", "sample_id,response\ns1,1\ns2,2\ns3,3\ns9,9\n");
    EXPECT_THROW(gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin()), gsa::IngestionError);

    write_file(tmp / "r.csv", "sample_id,response\ns1,1\ns1,2\n");
    EXPECT_THROW(gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin()), gsa::IngestionError);

    write_file(tmp / "r.csv", "id,response\ns1,1\n");
    EXPECT_THROW(gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin()), gsa::IngestionError);

    EXPECT_THROW(gsa::ingest(tmp / "missing.csv", tmp / "r.csv", ParameterSpace::pressure_bin()), gsa::IoError);
}

TEST(Ingest, ColumnMapping) {
    TempDir tmp;
    write_file(tmp / "d.csv", "Run,phi [deg],h [mm]\n1,0.1,0.2\n2,0.2,0.9\n");
    write_file(tmp / "r.csv", "Run,sigma_max\n2,640.5\n1,520.25\n");
    gsa::ColumnMapping m;
    m.sample_id = "Run";
    m.response = "sigma_max";
    m.parameters = {{"angle_of_attack_deg", "phi [deg]"}, {"additional_indentation_mm", "h [mm]"}};
    auto s = gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin(), m);
    EXPECT_EQ(s.design()(1, 0), 0.2);
    EXPECT_EQ(s.responses().values(0), 520.25);
    EXPECT_THROW(gsa::ingest(tmp / "d.csv", tmp / "r.csv", ParameterSpace::pressure_bin()), gsa::IngestionError);
}

TEST(Csv, ParsingDetails) {
    auto t = gsa::csv::parse("\xEF\xBB\xBF" "a, b ,\"c,d\"\n\n1, 2 ,\"x \"\"q\"\"\"\n");
    ASSERT_EQ(t.header.size(), 3u);
    EXPECT_EQ(t.header[1], "b");
    EXPECT_EQ(t.header[2], "c,d");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][2], "x \"q\"");
    EXPECT_EQ(t.line_numbers[0], 3u);
    EXPECT_THROW(gsa::csv::parse("a,b\n1\n"), gsa::IngestionError);
    auto again = gsa::csv::parse(gsa::csv::format(t));
    EXPECT_EQ(again.rows, t.rows);
}

TEST(Csv, DoubleRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 472.4812345678901}) {
        double back = 0;
        ASSERT_TRUE(gsa::csv::parse_double(gsa::csv::format_double(v), back));
        EXPECT_EQ(back, v);
    }
    double x;
    EXPECT_TRUE(gsa::csv::parse_double("+1.5e2", x));
    EXPECT_EQ(x, 150.0);
    EXPECT_FALSE(gsa::csv::parse_double("1.5x", x));
    EXPECT_FALSE(gsa::csv::parse_double("", x));
}
