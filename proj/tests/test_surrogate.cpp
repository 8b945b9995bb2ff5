#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gsa/error.hpp"
#include "gsa/model.hpp"
#include "gsa/rng.hpp"
#include "gsa/surrogate.hpp"
#include "test_util.hpp"

using gsa::DesignMatrix;
using gsa::Frame;
using gsa::GprHyperparams;
using gsa::ParameterSpace;
using gsa::TrainingSet;

namespace {

ParameterSpace cube(std::size_t d) {
    std::vector<gsa::ParameterDef> defs;
    for (std::size_t j = 0; j < d; ++j) defs.push_back({"x" + std::to_string(j + 1), 0.0, 1.0, ""});
    return ParameterSpace(defs);
}

TrainingSet make_training(std::size_t n, std::size_t d, std::uint64_t seed,
                          double (*f)(const Eigen::VectorXd&)) {
    auto u = gsa::lhs_sample(cube(d), n, seed);
    gsa::ResponseVector r;
    r.values.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) r.values(static_cast<Eigen::Index>(i)) = f(u.row(i));
    return TrainingSet(gsa::to_gaussian(u), gsa::standardize(r));
}

double smooth2(const Eigen::VectorXd& x) { return std::sin(3.0 * x(0)) + x(1) * x(1) + 0.5 * x(0) * x(1); }
double smooth1(const Eigen::VectorXd& x) { return std::cos(4.0 * x(0)) + x(0); }

// log N(y; mu0, K + nugget I) through an explicit inverse and determinant
double dense_oracle(const TrainingSet& t, const GprHyperparams& h) {
    const auto& x = t.inputs().values();
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double s = 0;
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                double dlt = (x(i, c) - x(j, c)) / h.length_scales(c);
                s += dlt * dlt;
            }
            k(i, j) = h.sigma0_sq * std::exp(-0.5 * s) + (i == j ? h.nugget : 0.0);
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    Eigen::VectorXd y = t.responses().values.array() - h.mu0;
    double quad = y.dot(lu.inverse() * y);
    double logdet = std::log(std::fabs(lu.determinant()));
    return -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GprHyperparams hyper(double s2, std::initializer_list<double> ls, double mu0 = 0.0, double nugget = 1e-8) {
    GprHyperparams h;
    h.sigma0_sq = s2;
    h.length_scales = Eigen::VectorXd(static_cast<Eigen::Index>(ls.size()));
    Eigen::Index i = 0;
    for (double l : ls) h.length_scales(i++) = l;
    h.mu0 = mu0;
    h.nugget = nugget;
    return h;
}

}  // namespace

TEST(Kernel, SquaredExponentialByHand) {
    auto h = hyper(2.0, {0.5, 2.0});
    Eigen::Vector2d a(0.1, -0.3), b(0.4, 0.7);
    double expect = 2.0 * std::exp(-0.5 * (0.09 / 0.25 + 1.0 / 4.0));
    EXPECT_NEAR(gsa::kernel_se(a, b, h), expect, 1e-15);
    EXPECT_DOUBLE_EQ(gsa::kernel_se(a, a, h), 2.0);
    EXPECT_THROW(gsa::kernel_se(Eigen::Vector3d::Zero(), b, h), gsa::ShapeError);
}

TEST(Kernel, MatrixSymmetricAndPsd) {
    auto t = make_training(30, 2, 3, smooth2);
    auto k = gsa::kernel_matrix(t.inputs().values(), t.inputs().values(), hyper(1.3, {0.7, 1.1}));
    EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Likelihood, MatchesDenseInverseOracle) {
    for (std::size_t n : {3, 8, 15, 20}) {
        auto t = make_training(n, 2, n, smooth2);
        for (auto h : {hyper(1.0, {1.0, 1.0}), hyper(0.4, {0.3, 2.5}, 0.2, 1e-6), hyper(3.0, {1.7, 0.6}, -0.5, 1e-5)}) {
            double ours = gsa::log_marginal_likelihood(t, h);
            EXPECT_NEAR(ours, dense_oracle(t, h), 1e-8) << n;
        }
    }
}

TEST(Likelihood, ProfiledMeanIsGlsEstimate) {
    auto t = make_training(20, 2, 5, smooth2);
    Eigen::VectorXd theta(3);
    theta << std::log(0.8), std::log(0.9), std::log(1.4);
    auto p = gsa::profiled_log_likelihood(t, theta, false);
    auto h = hyper(0.8, {0.9, 1.4}, p.mu0, p.nugget);
    EXPECT_NEAR(p.value, dense_oracle(t, h), 1e-8);
    // the profiled mean maximizes the likelihood over mu0
    for (double d : {-1e-3, 1e-3}) {
        h.mu0 = p.mu0 + d;
        EXPECT_LT(dense_oracle(t, h), p.value);
    }
}

TEST(Likelihood, GradientMatchesCentralDifferences) {
    auto t = make_training(25, 2, 11, smooth2);
    for (auto base : {Eigen::Vector3d(0.0, 0.0, 0.0), Eigen::Vector3d(-0.7, -0.4, 0.6), Eigen::Vector3d(1.2, 0.9, -1.1)}) {
        Eigen::VectorXd theta = base;
        auto p = gsa::profiled_log_likelihood(t, theta, true);
        ASSERT_EQ(p.gradient.size(), 3);
        for (Eigen::Index k = 0; k < 3; ++k) {
            const double step = 1e-6;
            Eigen::VectorXd hi = theta, lo = theta;
            hi(k) += step;
            lo(k) -= step;
            double fd = (gsa::profiled_log_likelihood(t, hi, false).value -
                         gsa::profiled_log_likelihood(t, lo, false).value) / (2 * step);
            EXPECT_LE(std::fabs(p.gradient(k) - fd), 1e-4 * std::max(1.0, std::fabs(fd))) << k;
        }
    }
}

TEST(Jitter, EscalatesThenGivesUp) {
    Eigen::MatrixXd dup = Eigen::MatrixXd::Ones(3, 3);  // rank one
    auto c = gsa::cholesky_with_jitter(dup, GprHyperparams::kNuggetStart);
    EXPECT_GE(c.nugget, GprHyperparams::kNuggetStart);
    EXPECT_LE(c.nugget, GprHyperparams::kNuggetMax);
    Eigen::MatrixXd rebuilt = c.lower * c.lower.transpose();
    EXPECT_LT((rebuilt - dup - c.nugget * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);

    Eigen::Matrix2d indefinite;
    indefinite << 1, 2, 2, 1;
    EXPECT_THROW(gsa::cholesky_with_jitter(indefinite, GprHyperparams::kNuggetStart), gsa::IllConditionedKernelError);
}

TEST(Training, PreconditionsEnforced) {
    auto u = gsa::lhs_sample(cube(2), 5, 1);
    gsa::ResponseVector raw;
    raw.values = Eigen::VectorXd::LinSpaced(5, 0, 1);
    EXPECT_THROW(TrainingSet(u, gsa::standardize(raw)), gsa::FrameMismatchError);
    EXPECT_THROW(TrainingSet(gsa::to_gaussian(u), raw), gsa::ValidationError);
    gsa::ResponseVector short_r;
    short_r.values = Eigen::VectorXd::LinSpaced(4, 0, 1);
    EXPECT_THROW(TrainingSet(gsa::to_gaussian(u), gsa::standardize(short_r)), gsa::ShapeError);
}

TEST(Posterior, InterpolatesAndRevertsToPrior) {
    auto t = make_training(20, 2, 7, smooth2);
    auto h = hyper(1.5, {0.8, 1.2}, 0.1, 1e-8);
    gsa::GprModel m(t, h);
    const double nug = m.hyper().nugget;
    auto mean = m.mean_at(t.inputs().values());
    EXPECT_LT((mean - t.responses().values).cwiseAbs().maxCoeff(), 10 * std::sqrt(nug));
    auto cov = m.cov_at(t.inputs().values());
    EXPECT_LT(cov.diagonal().maxCoeff(), 10 * nug);

    Eigen::MatrixXd far(2, 2);
    far << 40.0, 40.0, -35.0, 50.0;
    auto far_cov = m.cov_at(far);
    EXPECT_NEAR(far_cov(0, 0), 1.5, 1e-6);
    EXPECT_NEAR(far_cov(1, 1), 1.5, 1e-6);
    EXPECT_NEAR(m.mean_at(far)(0), 0.1, 1e-6);
}

TEST(Posterior, FactorReproducesCovariance) {
    auto t = make_training(40, 2, 2, smooth2);
    gsa::GprModel m(t, hyper(1.0, {0.9, 1.3}));
    for (std::size_t q : {50, 400}) {
        auto pts = gsa::to_gaussian(gsa::lhs_sample(cube(2), q, 77)).values();
        auto f = m.posterior_factor(pts);
        Eigen::MatrixXd approx = f.factor * f.factor.transpose();
        approx.diagonal() += f.residual_sd.array().square().matrix();
        Eigen::MatrixXd exact = m.cov_at(pts);
        EXPECT_LT((approx - exact).cwiseAbs().maxCoeff(), 1e-8) << q;
        EXPECT_LT((f.mean - m.mean_at(pts)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Posterior, DrawMomentsMatch) {
    auto t = make_training(12, 1, 4, smooth1);
    gsa::GprModel m(t, hyper(1.0, {0.6}));
    DesignMatrix q(Eigen::MatrixXd(Eigen::Vector3d(-1.7, 0.05, 2.2)), Frame::Gaussian, cube(1));
    const std::size_t k = 20000;
    auto draws = gsa::sample_posterior(m, q, k, 5);
    ASSERT_EQ(draws.rows(), static_cast<Eigen::Index>(k));
    Eigen::RowVectorXd mu = draws.colwise().mean();
    Eigen::MatrixXd centered = draws.rowwise() - mu;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(k - 1);
    auto exact_cov = gsa::predict_cov(m, q);
    auto exact_mean = gsa::predict_mean(m, q).values;
    for (Eigen::Index i = 0; i < 3; ++i) {
        double sd = std::sqrt(exact_cov(i, i));
        EXPECT_NEAR(mu(i), exact_mean(i), 5 * sd / std::sqrt(double(k)) + 1e-12);
        EXPECT_NEAR(cov(i, i), exact_cov(i, i), 0.05 * exact_cov(i, i) + 1e-12);
    }
    EXPECT_EQ(gsa::sample_posterior(m, q, 3, 9), gsa::sample_posterior(m, q, 3, 9));
    EXPECT_THROW(gsa::sample_posterior(m, q, 0, 9), gsa::Error);
}

TEST(Fit, RecoversGoodLikelihoodAndStaysInBox) {
    auto t = make_training(40, 2, 21, smooth2);
    gsa::FitConfig cfg;
    cfg.seed = 3;
    auto m = gsa::fit_gpr(t, cfg);
    for (Eigen::Index j = 0; j < 2; ++j) {
        EXPECT_GE(std::log(m.hyper().length_scales(j)), cfg.log_length_lower - 1e-12);
        EXPECT_LE(std::log(m.hyper().length_scales(j)), cfg.log_length_upper + 1e-12);
    }
    EXPECT_EQ(m.provenance().restarts, 8u);
    EXPECT_EQ(m.provenance().restart_log_ml.size(), 8u);
    // any point in the box is no better than the optimum
    gsa::Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd theta(3);
        theta(0) = -6 + 12 * rng.uniform();
        for (int j = 1; j < 3; ++j) theta(j) = cfg.log_length_lower + (cfg.log_length_upper - cfg.log_length_lower) * rng.uniform();
        EXPECT_LE(gsa::profiled_log_likelihood(t, theta, false).value, m.log_ml() + 1e-6);
    }
}

TEST(Fit, MoreRestartsNeverWorse) {
    auto t = make_training(30, 2, 8, smooth2);
    gsa::FitConfig four, sixteen;
    four.restarts = 4;
    sixteen.restarts = 16;
    four.seed = sixteen.seed = 12;
    EXPECT_GE(gsa::fit_gpr(t, sixteen).log_ml(), gsa::fit_gpr(t, four).log_ml());
}

TEST(Fit, ThreadCountDoesNotChangeResult) {
    auto t = make_training(30, 2, 8, smooth2);
    gsa::FitConfig a, b;
    a.threads = 1;
    b.threads = 6;
    a.seed = b.seed = 4;
    EXPECT_EQ(gsa::model_to_json(gsa::fit_gpr(t, a)), gsa::model_to_json(gsa::fit_gpr(t, b)));
}

TEST(Persistence, RoundTripReproducesPredictions) {
    TempDir tmp;
    auto t = make_training(30, 2, 6, smooth2);
    gsa::FitConfig cfg;
    cfg.restarts = 3;
    auto m = gsa::fit_gpr(t, cfg);
    gsa::save_model(tmp / "m.json", m);
    auto back = gsa::load_model(tmp / "m.json");
    auto q = gsa::to_gaussian(gsa::lhs_sample(cube(2), 64, 1));
    EXPECT_EQ(gsa::predict_mean(m, q).values, gsa::predict_mean(back, q).values);
    EXPECT_EQ(gsa::predict_cov(m, q), gsa::predict_cov(back, q));
    EXPECT_EQ(back.log_ml(), m.log_ml());
    EXPECT_EQ(gsa::model_to_json(back), gsa::model_to_json(m));
}

TEST(Persistence, CorruptionDetected) {
    TempDir tmp;
    auto t = make_training(10, 2, 6, smooth2);
    gsa::GprModel m(t, hyper(1.0, {1.0, 1.0}));
    std::string text = gsa::model_to_json(m);

    std::string tampered = text;
    auto pos = tampered.find("\"sigma0_sq\"");
    ASSERT_NE(pos, std::string::npos);
    pos = tampered.find_first_of("0123456789", pos + 12);
    tampered[pos] = tampered[pos] == '1' ? '2' : '1';
    EXPECT_THROW(gsa::model_from_json(tampered), gsa::IntegrityError);
    EXPECT_THROW(gsa::model_from_json(text.substr(0, text.size() / 2)), gsa::IntegrityError);
    EXPECT_THROW(gsa::model_from_json("{\"format\": \"other\"}"), gsa::IntegrityError);
    EXPECT_THROW(gsa::load_model(tmp / "absent.json"), gsa::IoError);
}

TEST(Predict, ChecksFrameAndDimension) {
    auto t = make_training(10, 2, 6, smooth2);
    gsa::GprModel m(t, hyper(1.0, {1.0, 1.0}));
    auto u = gsa::lhs_sample(cube(2), 4, 1);
    EXPECT_THROW(gsa::predict_mean(m, u), gsa::FrameMismatchError);
    EXPECT_THROW(gsa::predict_mean(m, gsa::to_gaussian(gsa::lhs_sample(cube(3), 4, 1))), gsa::ShapeError);
    auto r = gsa::predict_mean(m, gsa::to_gaussian(u));
    EXPECT_TRUE(r.standardized);
    EXPECT_EQ(r.mean, t.responses().mean);
}
