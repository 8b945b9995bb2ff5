#include "gsa/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "gsa/digest.hpp"
#include "gsa/error.hpp"
#include "gsa/parallel.hpp"
#include "gsa/rng.hpp"

namespace gsa {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_point_dims(Eigen::Index a, Eigen::Index b, const GprHyperparams& hyper) {
    if (a != hyper.length_scales.size() || b != hyper.length_scales.size()) {
        throw ShapeError("kernel: point dimension " + std::to_string(a) + "/" + std::to_string(b) +
                         " does not match " + std::to_string(hyper.length_scales.size()) + " length scales");
    }
}

struct Conditioned {
    JitteredCholesky factor;
    Eigen::VectorXd alpha;
    double log_ml = 0.0;
};

Conditioned condition(const Eigen::MatrixXd& x, const Eigen::VectorXd& r, const GprHyperparams& hyper) {
    Conditioned c;
    c.factor = cholesky_with_jitter(kernel_matrix(x, x, hyper), hyper.nugget);
    const Eigen::VectorXd y = r.array() - hyper.mu0;
    const auto lower = c.factor.lower.triangularView<Eigen::Lower>();
    c.alpha = lower.solve(y);
    const double quad = c.alpha.squaredNorm();
    c.factor.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(c.alpha);
    const double half_log_det = c.factor.lower.diagonal().array().log().sum();
    c.log_ml = -0.5 * quad - half_log_det - static_cast<double>(r.size()) * kHalfLog2Pi;
    return c;
}

}  // namespace

void GprHyperparams::validate() const {
    if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) {
        throw ParameterError("GP prior variance must be positive and finite");
    }
    if (length_scales.size() == 0) {
        throw ParameterError("GP needs at least one length scale");
    }
    for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
        if (!(length_scales[i] > 0.0) || !std::isfinite(length_scales[i])) {
            throw ParameterError("GP length scales must be positive and finite");
        }
    }
    if (!(nugget >= 0.0) || !std::isfinite(mu0)) {
        throw ParameterError("GP nugget must be non-negative and the mean finite");
    }
}

TrainingSet::TrainingSet(DesignMatrix inputs, ResponseVector responses)
    : inputs_(std::move(inputs)), responses_(std::move(responses)) {
    if (inputs_.frame() != Frame::Gaussian) {
        throw FrameMismatchError("training inputs must be in the gaussian frame");
    }
    if (!responses_.standardized) {
        throw ValidationError("training responses must be standardized");
    }
    if (inputs_.rows() != responses_.size()) {
        throw ShapeError("training set has " + std::to_string(inputs_.rows()) + " inputs but " +
                         std::to_string(responses_.size()) + " responses");
    }
    if (inputs_.rows() < 2) {
        throw ValidationError("training set needs at least two samples");
    }
}

double kernel_se(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                 const GprHyperparams& hyper) {
    check_point_dims(a.size(), b.size(), hyper);
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double t = (a[i] - b[i]) / hyper.length_scales[i];
        s += t * t;
    }
    return hyper.sigma0_sq * std::exp(-0.5 * s);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const GprHyperparams& hyper) {
    check_point_dims(x1.cols(), x2.cols(), hyper);
    const Eigen::ArrayXd inv_l = hyper.length_scales.array().inverse();
    const Eigen::MatrixXd s1 = x1 * inv_l.matrix().asDiagonal();
    const Eigen::MatrixXd s2 = x2 * inv_l.matrix().asDiagonal();
    Eigen::MatrixXd k(x1.rows(), x2.rows());
    const Eigen::Index d = x1.cols();
    for (Eigen::Index j = 0; j < s2.rows(); ++j) {
        for (Eigen::Index i = 0; i < s1.rows(); ++i) {
            double s = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                const double t = s1(i, c) - s2(j, c);
                s += t * t;
            }
            k(i, j) = hyper.sigma0_sq * std::exp(-0.5 * s);
        }
    }
    return k;
}

JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& matrix, double start_nugget) {
    double nugget = std::max(start_nugget, 0.0);
    while (true) {
        Eigen::MatrixXd a = matrix;
        a.diagonal().array() += nugget;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
            return {llt.matrixL(), nugget};
        }
        if (nugget >= GprHyperparams::kNuggetMax) break;
        nugget = nugget > 0.0 ? std::min(nugget * 10.0, GprHyperparams::kNuggetMax) : GprHyperparams::kNuggetStart;
    }
    throw IllConditionedKernelError("Cholesky factorization failed with nugget up to " +
                                    std::to_string(GprHyperparams::kNuggetMax));
}

double log_marginal_likelihood(const TrainingSet& training, const GprHyperparams& hyper) {
    hyper.validate();
    return condition(training.inputs().values(), training.responses().values, hyper).log_ml;
}

ProfiledLikelihood profiled_log_likelihood(const TrainingSet& training, const Eigen::VectorXd& log_params,
                                           bool with_gradient) {
    const Eigen::MatrixXd& x = training.inputs().values();
    const Eigen::VectorXd& r = training.responses().values;
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (log_params.size() != d + 1) {
        throw ShapeError("profiled likelihood expects " + std::to_string(d + 1) + " log-parameters");
    }

    GprHyperparams hyper;
    hyper.sigma0_sq = std::exp(log_params[0]);
    hyper.length_scales = log_params.tail(d).array().exp();

    const Eigen::MatrixXd k = kernel_matrix(x, x, hyper);
    const JitteredCholesky factor = cholesky_with_jitter(k, GprHyperparams::kNuggetStart);
    const auto lower = factor.lower.triangularView<Eigen::Lower>();

    auto solve = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out = lower.solve(v);
        factor.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(out);
        return out;
    };
    const Eigen::VectorXd kinv_one = solve(Eigen::VectorXd::Ones(n));
    const Eigen::VectorXd kinv_r = solve(r);

    ProfiledLikelihood out;
    out.nugget = factor.nugget;
    out.mu0 = kinv_r.sum() / kinv_one.sum();
    const Eigen::VectorXd alpha = kinv_r - out.mu0 * kinv_one;
    const Eigen::VectorXd y = r.array() - out.mu0;
    out.value = -0.5 * y.dot(alpha) - factor.lower.diagonal().array().log().sum() -
                static_cast<double>(n) * kHalfLog2Pi;
    if (!std::isfinite(out.value)) {
        throw IllConditionedKernelError("non-finite log marginal likelihood");
    }
    if (!with_gradient) return out;

    Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
    lower.solveInPlace(kinv);
    factor.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
    // dL/dtheta = 1/2 tr((alpha alpha^T - K~^-1) dK/dtheta)
    const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
    const Eigen::MatrixXd wk = w.cwiseProduct(k);

    out.gradient.resize(d + 1);
    out.gradient[0] = 0.5 * wk.sum();
    for (Eigen::Index c = 0; c < d; ++c) {
        const double inv_l2 = 1.0 / (hyper.length_scales[c] * hyper.length_scales[c]);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double t = x(i, c) - x(j, c);
                acc += wk(i, j) * t * t;
            }
        }
        out.gradient[c + 1] = 0.5 * acc * inv_l2;
    }
    return out;
}

GprModel::GprModel(TrainingSet training, GprHyperparams hyper, FitProvenance provenance)
    : training_(std::move(training)), hyper_(std::move(hyper)), provenance_(std::move(provenance)) {
    hyper_.validate();
    if (static_cast<std::size_t>(hyper_.length_scales.size()) != training_.dim()) {
        throw ShapeError("hyperparameters have " + std::to_string(hyper_.length_scales.size()) +
                         " length scales for a " + std::to_string(training_.dim()) + "-dimensional training set");
    }
    Conditioned c = condition(training_.inputs().values(), training_.responses().values, hyper_);
    chol_ = std::move(c.factor.lower);
    hyper_.nugget = c.factor.nugget;
    alpha_ = std::move(c.alpha);
    log_ml_ = c.log_ml;
}

Eigen::VectorXd GprModel::mean_at(const Eigen::MatrixXd& points) const {
    if (static_cast<std::size_t>(points.cols()) != dim()) {
        throw ShapeError("query has " + std::to_string(points.cols()) + " columns, model expects " +
                         std::to_string(dim()));
    }
    const Eigen::MatrixXd ks = kernel_matrix(points, training_.inputs().values(), hyper_);
    return (ks * alpha_).array() + hyper_.mu0;
}

Eigen::MatrixXd GprModel::cov_at(const Eigen::MatrixXd& points) const {
    if (static_cast<std::size_t>(points.cols()) != dim()) {
        throw ShapeError("query has " + std::to_string(points.cols()) + " columns, model expects " +
                         std::to_string(dim()));
    }
    Eigen::MatrixXd v = kernel_matrix(training_.inputs().values(), points, hyper_);
    chol_.triangularView<Eigen::Lower>().solveInPlace(v);
    Eigen::MatrixXd cov = kernel_matrix(points, points, hyper_);
    cov.noalias() -= v.transpose() * v;
    return 0.5 * (cov + cov.transpose());
}

GprModel::PosteriorFactor GprModel::posterior_factor(const Eigen::MatrixXd& points) const {
    if (static_cast<std::size_t>(points.cols()) != dim()) {
        throw ShapeError("query has " + std::to_string(points.cols()) + " columns, model expects " +
                         std::to_string(dim()));
    }
    const Eigen::Index m = points.rows();
    PosteriorFactor out;
    out.mean = mean_at(points);

    Eigen::MatrixXd v = kernel_matrix(training_.inputs().values(), points, hyper_);
    chol_.triangularView<Eigen::Lower>().solveInPlace(v);

    // Pivoted Cholesky on columns of K** - V^T V built on demand.
    const Eigen::Index max_rank = m <= 256 ? m : m / 8;
    Eigen::VectorXd diag = (hyper_.sigma0_sq - v.colwise().squaredNorm().array()).matrix();
    Eigen::MatrixXd lr(m, max_rank);
    Eigen::Index rank = 0;
    bool converged = false;
    while (true) {
        Eigen::Index p = 0;
        const double pivot = m > 0 ? diag.maxCoeff(&p) : 0.0;
        if (pivot <= GprHyperparams::kNuggetStart) {
            converged = true;
            break;
        }
        if (rank == max_rank) break;
        Eigen::VectorXd col = kernel_matrix(points, points.row(p), hyper_).col(0);
        col.noalias() -= v.transpose() * v.col(p);
        if (rank > 0) col.noalias() -= lr.leftCols(rank) * lr.row(p).head(rank).transpose();
        col /= std::sqrt(pivot);
        diag -= col.cwiseAbs2();
        diag[p] = 0.0;
        lr.col(rank++) = col;
    }

    if (converged) {
        out.low_rank = true;
        out.factor = lr.leftCols(rank);
        out.residual_sd = diag.cwiseMax(0.0).cwiseSqrt();
        return out;
    }

    Eigen::MatrixXd cov = kernel_matrix(points, points, hyper_);
    cov.noalias() -= v.transpose() * v;
    cov = 0.5 * (cov + cov.transpose());
    JitteredCholesky dense = cholesky_with_jitter(cov, GprHyperparams::kNuggetStart);
    out.factor = std::move(dense.lower);
    out.jitter = dense.nugget;
    out.residual_sd = Eigen::VectorXd::Zero(m);
    return out;
}

Eigen::MatrixXd GprModel::PosteriorFactor::draw(std::size_t k, Rng& rng) const {
    const Eigen::Index m = mean.size();
    const Eigen::Index r = factor.cols();
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd z(r, kk);
    Eigen::MatrixXd e(low_rank ? m : 0, kk);
    for (Eigen::Index j = 0; j < kk; ++j) {
        for (Eigen::Index i = 0; i < r; ++i) z(i, j) = rng.standard_normal();
        for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = rng.standard_normal();
    }
    Eigen::MatrixXd draws = low_rank ? Eigen::MatrixXd(factor * z)
                                     : Eigen::MatrixXd(factor.triangularView<Eigen::Lower>() * z);
    if (low_rank) draws += residual_sd.asDiagonal() * e;
    draws.colwise() += mean;
    return draws.transpose();
}

namespace {

struct RestartResult {
    bool ok = false;
    double value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd x;
    double mu0 = 0.0;
};

// Maximizes the profiled likelihood over a box with a projected quasi-Newton
// iteration: BFGS inverse-Hessian on the free variables, Armijo backtracking
// along the projected path.
RestartResult optimize_from(const TrainingSet& training, Eigen::VectorXd x, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi, std::size_t max_iterations) {
    const Eigen::Index m = x.size();
    auto project = [&](Eigen::VectorXd v) { return v.cwiseMax(lo).cwiseMin(hi); };
    auto eval = [&](const Eigen::VectorXd& p) -> std::optional<ProfiledLikelihood> {
        try {
            return profiled_log_likelihood(training, p, true);
        } catch (const IllConditionedKernelError&) {
            return std::nullopt;
        }
    };

    RestartResult result;
    x = project(std::move(x));
    auto cur = eval(x);
    if (!cur) return result;

    // Minimize f = -log L.
    double f = -cur->value;
    Eigen::VectorXd g = -cur->gradient;
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m);

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        std::vector<bool> free(static_cast<std::size_t>(m));
        double pg_norm = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const bool pinned = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
            free[static_cast<std::size_t>(i)] = !pinned;
            if (!pinned) pg_norm = std::max(pg_norm, std::abs(g[i]));
        }
        if (pg_norm < 1e-6) break;

        Eigen::VectorXd gf = g;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!free[static_cast<std::size_t>(i)]) gf[i] = 0.0;
        }
        Eigen::VectorXd dir = -(h * gf);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!free[static_cast<std::size_t>(i)]) dir[i] = 0.0;
        }
        if (gf.dot(dir) >= 0.0) {
            h.setIdentity();
            dir = -gf;
        }
        const double max_step = dir.cwiseAbs().maxCoeff();
        double t = max_step > 2.0 ? 2.0 / max_step : 1.0;

        bool accepted = false;
        Eigen::VectorXd x_new;
        std::optional<ProfiledLikelihood> next;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            x_new = project(x + t * dir);
            const Eigen::VectorXd step = x_new - x;
            if (step.cwiseAbs().maxCoeff() < 1e-12) break;
            next = eval(x_new);
            if (next && -next->value <= f + 1e-4 * g.dot(step)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const double f_new = -next->value;
        const Eigen::VectorXd g_new = -next->gradient;
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            const Eigen::VectorXd hy = h * yv;
            const double rho = 1.0 / sy;
            h += (rho * rho * yv.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
        }
        const double df = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        cur = std::move(next);
        if (df < 1e-10 * (1.0 + std::abs(f))) break;
    }

    result.ok = true;
    result.value = -f;
    result.x = x;
    result.mu0 = cur->mu0;
    return result;
}

}  // namespace

GprModel fit_gpr(const TrainingSet& training, const FitConfig& config) {
    if (config.restarts == 0) {
        throw ParameterError("fit needs at least one restart");
    }
    const auto d = static_cast<Eigen::Index>(training.dim());
    Eigen::VectorXd lo(d + 1), hi(d + 1);
    lo[0] = config.log_sigma2_lower;
    hi[0] = config.log_sigma2_upper;
    lo.tail(d).setConstant(config.log_length_lower);
    hi.tail(d).setConstant(config.log_length_upper);
    if ((lo.array() >= hi.array()).any()) {
        throw ParameterError("fit bounds must satisfy lower < upper");
    }

    std::vector<RestartResult> results(config.restarts);
    parallel_for(config.restarts, config.threads, [&](std::size_t r) {
        Eigen::VectorXd start = Eigen::VectorXd::Zero(d + 1);
        if (r > 0) {
            Rng rng(mix_seed(config.seed, r));
            for (Eigen::Index i = 0; i <= d; ++i) start[i] = lo[i] + rng.uniform() * (hi[i] - lo[i]);
        }
        results[r] = optimize_from(training, start, lo, hi, config.max_iterations);
    });

    FitProvenance prov;
    prov.restarts = config.restarts;
    prov.seed = config.seed;
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < results.size(); ++r) {
        prov.restart_log_ml.push_back(results[r].ok ? results[r].value : std::numeric_limits<double>::quiet_NaN());
        if (results[r].ok && (!best || results[r].value > results[*best].value)) best = r;
    }
    if (!best) {
        throw FitFailureError("all " + std::to_string(config.restarts) +
                              " likelihood restarts failed to produce a finite objective (n_d = " +
                              std::to_string(training.size()) + ")");
    }
    prov.best_restart = *best;

    const RestartResult& winner = results[*best];
    GprHyperparams hyper;
    hyper.mu0 = winner.mu0;
    hyper.sigma0_sq = std::exp(winner.x[0]);
    hyper.length_scales = winner.x.tail(d).array().exp();
    hyper.nugget = GprHyperparams::kNuggetStart;
    return GprModel(training, std::move(hyper), std::move(prov));
}

namespace {

void check_query(const GprModel& model, const DesignMatrix& query) {
    if (query.frame() != Frame::Gaussian) {
        throw FrameMismatchError("surrogate queries must be in the gaussian frame");
    }
    if (query.cols() != model.dim()) {
        throw ShapeError("query has " + std::to_string(query.cols()) + " columns, model expects " +
                         std::to_string(model.dim()));
    }
}

}  // namespace

ResponseVector predict_mean(const GprModel& model, const DesignMatrix& query) {
    check_query(model, query);
    ResponseVector out;
    out.values = model.mean_at(query.values());
    out.standardized = true;
    out.mean = model.training().responses().mean;
    out.sd = model.training().responses().sd;
    return out;
}

Eigen::MatrixXd predict_cov(const GprModel& model, const DesignMatrix& query) {
    check_query(model, query);
    return model.cov_at(query.values());
}

Eigen::MatrixXd sample_posterior(const GprModel& model, const DesignMatrix& query, std::size_t k,
                                 std::uint64_t seed) {
    check_query(model, query);
    if (k == 0) {
        throw ParameterError("sample_posterior needs k >= 1");
    }
    Rng rng(seed);
    return model.posterior_factor(query.values()).draw(k, rng);
}

namespace {

using nlohmann::json;

json space_to_json(const ParameterSpace& space) {
    json arr = json::array();
    for (const auto& p : space.params()) {
        arr.push_back({{"name", p.name}, {"lower", p.lower}, {"upper", p.upper}, {"unit", p.unit}});
    }
    return arr;
}

ParameterSpace space_from_json(const json& arr) {
    std::vector<ParameterDef> params;
    for (const auto& p : arr) {
        params.push_back({p.at("name").get<std::string>(), p.at("lower").get<double>(), p.at("upper").get<double>(),
                          p.value("unit", std::string())});
    }
    return ParameterSpace(std::move(params));
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string model_to_json(const GprModel& model) {
    const auto& training = model.training();
    const auto& x = training.inputs().values();
    json inputs = json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) inputs.push_back(to_vector(x.row(i).transpose()));

    const auto& prov = model.provenance();
    json restart_ll = json::array();
    for (double v : prov.restart_log_ml) {
        if (std::isfinite(v)) {
            restart_ll.push_back(v);
        } else {
            restart_ll.push_back(nullptr);
        }
    }

    json j;
    j["format"] = "gsa.gpr_model";
    j["version"] = 1;
    j["space"] = space_to_json(training.inputs().space());
    j["frame"] = std::string(to_string(Frame::Gaussian));
    j["kernel"] = "squared_exponential";
    j["hyper"] = {{"mu0", model.hyper().mu0},
                  {"sigma0_sq", model.hyper().sigma0_sq},
                  {"length_scales", to_vector(model.hyper().length_scales)},
                  {"nugget", model.hyper().nugget}};
    j["training"] = {{"inputs", inputs},
                     {"responses", to_vector(training.responses().values)},
                     {"response_mean", training.responses().mean},
                     {"response_sd", training.responses().sd}};
    j["log_ml"] = model.log_ml();
    j["provenance"] = {{"optimizer", prov.optimizer},
                       {"mean_treatment", prov.mean_treatment},
                       {"restarts", prov.restarts},
                       {"best_restart", prov.best_restart},
                       {"restart_log_ml", restart_ll},
                       {"seed", prov.seed}};
    j["checksum"] = sha256_hex(j.dump());
    return j.dump(2) + "\n";
}

GprModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", "") != "gsa.gpr_model") {
            throw IntegrityError("not a gsa GPR model file");
        }
        const std::string stored = j.at("checksum").get<std::string>();
        j.erase("checksum");
        if (sha256_hex(j.dump()) != stored) {
            throw IntegrityError("model file checksum mismatch (file modified or corrupted)");
        }

        ParameterSpace space = space_from_json(j.at("space"));
        const auto& t = j.at("training");
        const auto& rows = t.at("inputs");
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd x(n, static_cast<Eigen::Index>(space.dim()));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
            if (row.size() != space.dim()) throw IntegrityError("training input row has wrong width");
            for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = row[static_cast<std::size_t>(c)];
        }
        const auto resp = t.at("responses").get<std::vector<double>>();
        ResponseVector r;
        r.values = Eigen::Map<const Eigen::VectorXd>(resp.data(), static_cast<Eigen::Index>(resp.size()));
        r.standardized = true;
        r.mean = t.at("response_mean").get<double>();
        r.sd = t.at("response_sd").get<double>();

        const auto& h = j.at("hyper");
        GprHyperparams hyper;
        hyper.mu0 = h.at("mu0").get<double>();
        hyper.sigma0_sq = h.at("sigma0_sq").get<double>();
        const auto ls = h.at("length_scales").get<std::vector<double>>();
        hyper.length_scales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
        hyper.nugget = h.at("nugget").get<double>();

        FitProvenance prov;
        if (j.contains("provenance")) {
            const auto& p = j.at("provenance");
            prov.optimizer = p.value("optimizer", prov.optimizer);
            prov.mean_treatment = p.value("mean_treatment", prov.mean_treatment);
            prov.restarts = p.value("restarts", std::size_t{0});
            prov.best_restart = p.value("best_restart", std::size_t{0});
            prov.seed = p.value("seed", std::uint64_t{0});
            for (const auto& v : p.value("restart_log_ml", json::array())) {
                prov.restart_log_ml.push_back(v.is_number() ? v.get<double>()
                                                            : std::numeric_limits<double>::quiet_NaN());
            }
        }
        return GprModel(TrainingSet(DesignMatrix(std::move(x), Frame::Gaussian, std::move(space)), std::move(r)),
                        std::move(hyper), std::move(prov));
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("model file is missing fields: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const GprModel& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << model_to_json(model);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

GprModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace gsa
