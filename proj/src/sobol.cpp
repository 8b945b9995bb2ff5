#include "gsa/sobol.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "gsa/csv.hpp"
#include "gsa/error.hpp"
#include "gsa/parallel.hpp"
#include "gsa/rng.hpp"

namespace gsa {

namespace {

// Sub-stream identifiers derived from the user seed.
constexpr std::uint64_t kStreamA = 0;
constexpr std::uint64_t kStreamB = 1;
constexpr std::uint64_t kStreamBootstrap = 2;
constexpr std::uint64_t kStreamDrawBase = 1000;

struct Estimates {
    Eigen::VectorXd first;
    Eigen::VectorXd total;
    bool degenerate = false;
};

// Sequential sums in index order so the result is independent of threading.
Estimates estimate(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb, const std::vector<Eigen::VectorXd>& fab,
                   const std::vector<std::size_t>* resample) {
    const auto n = static_cast<std::size_t>(fa.size());
    const auto d = static_cast<Eigen::Index>(fab.size());
    auto at = [&](std::size_t k) { return static_cast<Eigen::Index>(resample ? (*resample)[k] : k); };

    double sum = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = at(k);
        sum += fa[i] + fb[i];
        scale = std::max({scale, std::abs(fa[i]), std::abs(fb[i])});
    }
    const double mean = sum / static_cast<double>(2 * n);
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = at(k);
        ss += (fa[i] - mean) * (fa[i] - mean) + (fb[i] - mean) * (fb[i] - mean);
    }
    const double var = ss / static_cast<double>(2 * n - 1);

    Estimates out;
    out.first = Eigen::VectorXd::Zero(d);
    out.total = Eigen::VectorXd::Zero(d);
    if (!(var >= 1e-12 * scale * scale) || scale == 0.0) {
        out.degenerate = true;
        return out;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::VectorXd& g = fab[static_cast<std::size_t>(j)];
        double s1 = 0.0;
        double st = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto i = at(k);
            s1 += fb[i] * (g[i] - fa[i]);
            st += (fa[i] - g[i]) * (fa[i] - g[i]);
        }
        out.first[j] = s1 / static_cast<double>(n) / var;
        out.total[j] = st / static_cast<double>(2 * n) / var;
    }
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// 95% half-width, (q97.5 - q2.5) / 2, per column of `samples` (rows are replicates).
Eigen::VectorXd half_widths(const Eigen::MatrixXd& samples) {
    Eigen::VectorXd out(samples.cols());
    std::vector<double> col(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        for (Eigen::Index r = 0; r < samples.rows(); ++r) col[static_cast<std::size_t>(r)] = samples(r, j);
        std::sort(col.begin(), col.end());
        out[j] = 0.5 * (quantile_sorted(col, 0.975) - quantile_sorted(col, 0.025));
    }
    return out;
}

struct Split {
    Eigen::VectorXd fa;
    Eigen::VectorXd fb;
    std::vector<Eigen::VectorXd> fab;
};

Split split_stacked(const Eigen::VectorXd& values, std::size_t n, std::size_t d) {
    const auto nn = static_cast<Eigen::Index>(n);
    Split s;
    s.fa = values.segment(0, nn);
    s.fb = values.segment(nn, nn);
    for (std::size_t j = 0; j < d; ++j) s.fab.push_back(values.segment(static_cast<Eigen::Index>(2 + j) * nn, nn));
    return s;
}

void bootstrap_into(SobolResult& result, const Split& s, std::size_t replicates, std::uint64_t seed) {
    const std::size_t d = s.fab.size();
    result.mc_ci_first = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    result.mc_ci_total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    result.bootstrap = replicates;
    if (replicates == 0 || result.degenerate) return;

    const auto n = static_cast<std::size_t>(s.fa.size());
    Rng rng(mix_seed(seed, kStreamBootstrap));
    Eigen::MatrixXd first(static_cast<Eigen::Index>(replicates), static_cast<Eigen::Index>(d));
    Eigen::MatrixXd total(static_cast<Eigen::Index>(replicates), static_cast<Eigen::Index>(d));
    std::vector<std::size_t> idx(n);
    for (std::size_t b = 0; b < replicates; ++b) {
        for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
        const Estimates e = estimate(s.fa, s.fb, s.fab, &idx);
        first.row(static_cast<Eigen::Index>(b)) = e.first.transpose();
        total.row(static_cast<Eigen::Index>(b)) = e.total.transpose();
    }
    result.mc_ci_first = half_widths(first);
    result.mc_ci_total = half_widths(total);
}

Eigen::VectorXd evaluate_rows(const PointFunction& f, const Eigen::MatrixXd& points, unsigned threads) {
    Eigen::VectorXd out(points.rows());
    parallel_for(static_cast<std::size_t>(points.rows()), threads, [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        double v = 0.0;
        try {
            v = f(points.row(r).transpose());
        } catch (const std::exception& e) {
            throw EvaluationError("function evaluation failed at sample " + std::to_string(i) + ": " + e.what());
        }
        if (!std::isfinite(v)) {
            throw EvaluationError("function returned a non-finite value at sample " + std::to_string(i));
        }
        out[r] = v;
    });
    return out;
}

Eigen::MatrixXd unit_to_physical(const Eigen::MatrixXd& u, const ParameterSpace& space) {
    Eigen::MatrixXd x = u;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto& p = space[static_cast<std::size_t>(j)];
        x.col(j) = (p.lower + x.col(j).array() * p.width()).min(p.upper).matrix();
    }
    return x;
}

}  // namespace

Eigen::MatrixXd PickFreezeDesign::stacked() const {
    const auto nn = a.rows();
    const auto d = a.cols();
    Eigen::MatrixXd out(nn * (d + 2), d);
    out.topRows(nn) = a;
    out.middleRows(nn, nn) = b;
    for (Eigen::Index j = 0; j < d; ++j) out.middleRows((2 + j) * nn, nn) = ab[static_cast<std::size_t>(j)];
    return out;
}

PickFreezeDesign build_pick_freeze(const ParameterSpace& space, std::size_t n, std::uint64_t seed) {
    if (n < 2) {
        throw InvalidDesignError("pick-freeze design needs at least two base samples");
    }
    PickFreezeDesign pf;
    pf.space = space;
    pf.frame = Frame::Unit;
    pf.a = lhs_sample(space, n, mix_seed(seed, kStreamA)).values();
    pf.b = lhs_sample(space, n, mix_seed(seed, kStreamB)).values();
    for (Eigen::Index j = 0; j < pf.a.cols(); ++j) {
        Eigen::MatrixXd m = pf.a;
        m.col(j) = pf.b.col(j);
        pf.ab.push_back(std::move(m));
    }
    return pf;
}

Moments estimate_moments(const PointFunction& f, const ParameterSpace& space, std::size_t n, std::uint64_t seed,
                         unsigned threads) {
    if (n < 2) {
        throw InvalidDesignError("moment estimation needs at least two samples");
    }
    Rng rng(seed);
    Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.dim()));
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = rng.uniform();
    }
    const Eigen::VectorXd y = evaluate_rows(f, unit_to_physical(u, space), threads);
    Moments m;
    m.mean = y.mean();
    m.variance = (y.array() - m.mean).square().sum() / static_cast<double>(n - 1);
    return m;
}

bool is_degenerate(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b) {
    return estimate(f_a, f_b, {}, nullptr).degenerate;
}

namespace {

void check_lengths(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b, const Eigen::VectorXd& f_ab) {
    if (f_a.size() != f_b.size() || f_a.size() != f_ab.size()) {
        throw ShapeError("estimator inputs must have equal lengths");
    }
    if (f_a.size() < 2) {
        throw InvalidDesignError("estimators need at least two base samples");
    }
}

}  // namespace

double first_order(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b, const Eigen::VectorXd& f_ab) {
    check_lengths(f_a, f_b, f_ab);
    return estimate(f_a, f_b, {f_ab}, nullptr).first[0];
}

double total_order(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b, const Eigen::VectorXd& f_ab) {
    check_lengths(f_a, f_b, f_ab);
    return estimate(f_a, f_b, {f_ab}, nullptr).total[0];
}

SobolResult sobol_on_function(const PointFunction& f, const ParameterSpace& space, const SobolOptions& options,
                              std::uint64_t seed) {
    const PickFreezeDesign pf = build_pick_freeze(space, options.n_base, seed);
    const std::size_t d = space.dim();
    const Eigen::VectorXd values = evaluate_rows(f, unit_to_physical(pf.stacked(), space), options.threads);
    const Split s = split_stacked(values, options.n_base, d);

    const Estimates e = estimate(s.fa, s.fb, s.fab, nullptr);
    SobolResult result;
    result.names = space.names();
    result.first_order = e.first;
    result.total_order = e.total;
    result.degenerate = e.degenerate;
    result.n_base = options.n_base;
    result.seed = seed;
    result.method = "pick-freeze";

    Eigen::VectorXd pooled(2 * s.fa.size());
    pooled << s.fa, s.fb;
    result.mean = pooled.mean();
    result.variance = (pooled.array() - result.mean).square().sum() / static_cast<double>(pooled.size() - 1);

    bootstrap_into(result, s, options.bootstrap, seed);
    return result;
}

SobolResult sobol_on_function(const EvaluableModel& model, const SobolOptions& options, std::uint64_t seed) {
    return sobol_on_function([&model](const Eigen::Ref<const Eigen::VectorXd>& x) { return model.evaluate(x); },
                             model.space(), options, seed);
}

SobolResult sobol_on_surrogate(const GprModel& model, const ParameterSpace& space, const SobolOptions& options,
                               std::uint64_t seed) {
    if (model.dim() != space.dim() || model.training().inputs().space().names() != space.names()) {
        throw ValidationError("surrogate was fitted on a different parameter space");
    }
    if (options.joint_draw_size == 0) {
        throw ParameterError("joint draw size must be positive");
    }
    const std::size_t d = space.dim();
    const PickFreezeDesign pf = build_pick_freeze(space, options.n_base, seed);
    const Eigen::MatrixXd z = to_gaussian(DesignMatrix(pf.stacked(), Frame::Unit, space)).values();
    const auto total = static_cast<std::size_t>(z.rows());

    const std::size_t chunk = options.joint_draw_size;
    const std::size_t n_chunks = (total + chunk - 1) / chunk;
    auto chunk_rows = [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        return std::pair{static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(std::min(chunk, total - begin))};
    };

    Eigen::VectorXd mean(static_cast<Eigen::Index>(total));
    const std::size_t k = options.posterior_draws;
    Eigen::MatrixXd draws(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k ? total : 0));
    parallel_for(n_chunks, options.threads, [&](std::size_t c) {
        const auto [begin, len] = chunk_rows(c);
        const Eigen::MatrixXd pts = z.middleRows(begin, len);
        if (k == 0) {
            mean.segment(begin, len) = model.mean_at(pts);
            return;
        }
        const GprModel::PosteriorFactor factor = model.posterior_factor(pts);
        mean.segment(begin, len) = factor.mean;
        Rng rng(mix_seed(seed, kStreamDrawBase + c));
        draws.middleCols(begin, len) = factor.draw(k, rng);
    });

    const Split s = split_stacked(mean, options.n_base, d);
    const Estimates e = estimate(s.fa, s.fb, s.fab, nullptr);

    SobolResult result;
    result.names = space.names();
    result.first_order = e.first;
    result.total_order = e.total;
    result.degenerate = e.degenerate;
    result.n_base = options.n_base;
    result.seed = seed;
    result.method = "pick-freeze";
    result.posterior_draws = k;
    result.joint_draw_chunks = k ? n_chunks : 0;

    const auto& resp = model.training().responses();
    Eigen::VectorXd pooled(2 * s.fa.size());
    pooled << s.fa, s.fb;
    const double m_std = pooled.mean();
    const double v_std = (pooled.array() - m_std).square().sum() / static_cast<double>(pooled.size() - 1);
    result.mean = resp.mean + resp.sd * m_std;
    result.variance = resp.sd * resp.sd * v_std;

    bootstrap_into(result, s, options.bootstrap, seed);

    if (k > 0) {
        Eigen::MatrixXd first(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
        Eigen::MatrixXd tot(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
        for (std::size_t r = 0; r < k; ++r) {
            const Split sr = split_stacked(draws.row(static_cast<Eigen::Index>(r)).transpose(), options.n_base, d);
            const Estimates er = estimate(sr.fa, sr.fb, sr.fab, nullptr);
            first.row(static_cast<Eigen::Index>(r)) = er.first.transpose();
            tot.row(static_cast<Eigen::Index>(r)) = er.total.transpose();
        }
        result.surrogate_ci_first = half_widths(first);
        result.surrogate_ci_total = half_widths(tot);
    }
    return result;
}

SobolResult brute_force_sobol(const PointFunction& f, const ParameterSpace& space, std::size_t grid) {
    const std::size_t d = space.dim();
    if (d > 3) {
        throw UnsupportedDimensionError("brute-force quadrature supports at most 3 inputs, got " + std::to_string(d));
    }
    if (grid < 32) {
        throw ParameterError("brute-force quadrature needs at least 32 nodes per dimension");
    }

    // Row-major tensor: the last parameter varies fastest.
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= grid;
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t j = d; j-- > 1;) stride[j - 1] = stride[j] * grid;

    std::vector<std::vector<double>> nodes(d, std::vector<double>(grid));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t g = 0; g < grid; ++g) {
            nodes[j][g] = space[j].lower + (static_cast<double>(g) + 0.5) / static_cast<double>(grid) * space[j].width();
        }
    }
    std::vector<double> values(total);
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (std::size_t j = 0; j < d; ++j) x[static_cast<Eigen::Index>(j)] = nodes[j][(flat / stride[j]) % grid];
        values[flat] = f(x);
    }

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(total);
    double var = 0.0;
    double scale = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
        scale = std::max(scale, std::abs(v));
    }
    var /= static_cast<double>(total);

    SobolResult result;
    result.names = space.names();
    result.first_order = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    result.total_order = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    result.mc_ci_first = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    result.mc_ci_total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    result.mean = mean;
    result.variance = var;
    result.method = "tensor-midpoint-quadrature";
    result.grid = grid;
    if (!(var >= 1e-12 * scale * scale) || scale == 0.0) {
        result.degenerate = true;
        return result;
    }

    for (std::size_t i = 0; i < d; ++i) {
        // E(r | theta_i): average over all other coordinates.
        std::vector<double> cond_i(grid, 0.0);
        // E(r | theta_~i): average over coordinate i.
        std::vector<double> cond_rest(total / grid, 0.0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            const std::size_t gi = (flat / stride[i]) % grid;
            const std::size_t rest = (flat / (stride[i] * grid)) * stride[i] + flat % stride[i];
            cond_i[gi] += values[flat];
            cond_rest[rest] += values[flat];
        }
        double vi = 0.0;
        for (double c : cond_i) {
            const double m = c / static_cast<double>(total / grid) - mean;
            vi += m * m;
        }
        vi /= static_cast<double>(grid);
        double v_rest = 0.0;
        for (double c : cond_rest) {
            const double m = c / static_cast<double>(grid) - mean;
            v_rest += m * m;
        }
        v_rest /= static_cast<double>(cond_rest.size());
        result.first_order[static_cast<Eigen::Index>(i)] = vi / var;
        result.total_order[static_cast<Eigen::Index>(i)] = (var - v_rest) / var;
    }
    return result;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::string sobol_result_to_json(const SobolResult& result,
                                 const std::vector<std::pair<std::string, std::string>>& provenance) {
    nlohmann::json j;
    j["names"] = result.names;
    j["first_order"] = to_vector(result.first_order);
    j["total_order"] = to_vector(result.total_order);
    j["mean"] = result.mean;
    j["variance"] = result.variance;
    j["mc_ci_first"] = to_vector(result.mc_ci_first);
    j["mc_ci_total"] = to_vector(result.mc_ci_total);
    if (result.surrogate_ci_first) {
        j["surrogate_ci_first"] = to_vector(*result.surrogate_ci_first);
        j["surrogate_ci_total"] = to_vector(*result.surrogate_ci_total);
    }
    j["degenerate"] = result.degenerate;
    j["n_base"] = result.n_base;
    j["seed"] = result.seed;

    nlohmann::json prov;
    prov["method"] = result.method;
    prov["first_order_estimator"] = kFirstOrderEstimator;
    prov["total_order_estimator"] = kTotalOrderEstimator;
    prov["variance_estimator"] = "pooled (A, B), n-1 divisor";
    prov["base_design"] = "independent Latin hypercubes A, B";
    prov["bootstrap_resamples"] = result.bootstrap;
    prov["ci_level"] = 0.95;
    prov["posterior_draws"] = result.posterior_draws;
    prov["joint_draw_chunks"] = result.joint_draw_chunks;
    prov["chunked_draws_independent"] = result.joint_draw_chunks > 1;
    if (result.grid) prov["grid"] = result.grid;
    for (const auto& [key, value] : provenance) prov[key] = value;
    j["provenance"] = prov;
    return j.dump(2) + "\n";
}

std::string sobol_summary_csv(const SobolResult& result) {
    csv::Table t;
    t.header = {"name", "S_i", "S_Ti", "mc_ci_first", "mc_ci_total"};
    const bool surrogate = result.surrogate_ci_first.has_value();
    if (surrogate) {
        t.header.push_back("surrogate_ci_first");
        t.header.push_back("surrogate_ci_total");
    }
    for (std::size_t i = 0; i < result.dim(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        std::vector<std::string> row{result.names[i], csv::format_double(result.first_order[r]),
                                     csv::format_double(result.total_order[r]),
                                     csv::format_double(result.mc_ci_first[r]),
                                     csv::format_double(result.mc_ci_total[r])};
        if (surrogate) {
            row.push_back(csv::format_double((*result.surrogate_ci_first)[r]));
            row.push_back(csv::format_double((*result.surrogate_ci_total)[r]));
        }
        t.rows.push_back(std::move(row));
    }
    return csv::format(t);
}

std::string sobol_bars_csv(const SobolResult& result) {
    csv::Table t;
    t.header = {"name", "first_order", "total_order", "error_first", "error_total"};
    for (std::size_t i = 0; i < result.dim(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double err_first = result.mc_ci_first[r];
        double err_total = result.mc_ci_total[r];
        if (result.surrogate_ci_first) {
            err_first += (*result.surrogate_ci_first)[r];
            err_total += (*result.surrogate_ci_total)[r];
        }
        t.rows.push_back({result.names[i], csv::format_double(clamp01(result.first_order[r])),
                          csv::format_double(clamp01(result.total_order[r])), csv::format_double(err_first),
                          csv::format_double(err_total)});
    }
    return csv::format(t);
}

}  // namespace gsa
