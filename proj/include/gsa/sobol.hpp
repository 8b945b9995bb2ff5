#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsa/design.hpp"
#include "gsa/model.hpp"
#include "gsa/surrogate.hpp"

namespace gsa {

inline constexpr const char* kFirstOrderEstimator = "saltelli2010";
inline constexpr const char* kTotalOrderEstimator = "jansen1999";

/// First- and total-order indices with their uncertainty.
///
/// Stored indices are the raw estimator outputs and may stray slightly
/// outside [0, 1]; only rendered reports clamp them.
struct SobolResult {
    std::vector<std::string> names;
    Eigen::VectorXd first_order;
    Eigen::VectorXd total_order;
    double mean = 0.0;      // E(r), physical units
    double variance = 0.0;  // V(r), physical units squared
    Eigen::VectorXd mc_ci_first;  // 95% bootstrap half-widths
    Eigen::VectorXd mc_ci_total;
    std::optional<Eigen::VectorXd> surrogate_ci_first;  // 95% half-widths over posterior draws
    std::optional<Eigen::VectorXd> surrogate_ci_total;
    bool degenerate = false;
    std::size_t n_base = 0;
    std::uint64_t seed = 0;

    // Provenance.
    std::string method;  // "pick-freeze" or "tensor-midpoint-quadrature"
    std::size_t bootstrap = 0;
    std::size_t posterior_draws = 0;
    std::size_t joint_draw_chunks = 0;  // > 1 means chunks were drawn independently
    std::size_t grid = 0;

    std::size_t dim() const { return names.size(); }
};

struct SobolOptions {
    std::size_t n_base = std::size_t{1} << 14;
    std::size_t bootstrap = 500;
    std::size_t posterior_draws = 50;
    std::size_t joint_draw_size = 4096;
    unsigned threads = 0;
};

/// Base matrices A and B plus AB_i = A with column i taken from B, all in
/// the unit frame. Rows are ordered [A; B; AB_1; ...; AB_d] when stacked.
struct PickFreezeDesign {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    std::vector<Eigen::MatrixXd> ab;
    Frame frame = Frame::Unit;
    ParameterSpace space;

    std::size_t n() const { return static_cast<std::size_t>(a.rows()); }
    std::size_t evaluations() const { return n() * (space.dim() + 2); }
    Eigen::MatrixXd stacked() const;
};

/// A and B are independent Latin hypercubes (sub-streams 0 and 1 of seed).
/// Throws InvalidDesignError for n < 2.
PickFreezeDesign build_pick_freeze(const ParameterSpace& space, std::size_t n, std::uint64_t seed);

/// Plain Monte Carlo estimate of E(r) and V(r) (n - 1 divisor) under
/// independent uniform inputs.
struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};
Moments estimate_moments(const PointFunction& f, const ParameterSpace& space, std::size_t n, std::uint64_t seed,
                         unsigned threads = 1);

/// Pooled variance of (fA, fB) falls below 1e-12 times the squared response
/// scale.
bool is_degenerate(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b);

/// (1/N) sum fB (fAB_i - fA) / V, V the pooled variance of (fA, fB).
/// Returns 0 for degenerate responses.
double first_order(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b, const Eigen::VectorXd& f_ab);
/// (1/2N) sum (fA - fAB_i)^2 / V. Returns 0 for degenerate responses.
double total_order(const Eigen::VectorXd& f_a, const Eigen::VectorXd& f_b, const Eigen::VectorXd& f_ab);

/// Pick-freeze estimates on a function of physical-frame points, with
/// bootstrap half-widths over the base-sample index.
SobolResult sobol_on_function(const PointFunction& f, const ParameterSpace& space, const SobolOptions& options,
                              std::uint64_t seed);
SobolResult sobol_on_function(const EvaluableModel& model, const SobolOptions& options, std::uint64_t seed);

/// Indices of the surrogate's posterior mean, plus the spread of the indices
/// across joint posterior draws over the same pick-freeze design. Mean and
/// variance are reported in physical response units.
SobolResult sobol_on_surrogate(const GprModel& model, const ParameterSpace& space, const SobolOptions& options,
                               std::uint64_t seed);

/// Reference indices by tensor-product midpoint quadrature with `grid`
/// nodes per dimension. Supports up to three inputs.
SobolResult brute_force_sobol(const PointFunction& f, const ParameterSpace& space, std::size_t grid);

/// JSON serialization of a result plus free-form provenance entries.
std::string sobol_result_to_json(const SobolResult& result,
                                 const std::vector<std::pair<std::string, std::string>>& provenance = {});
/// One row per parameter; surrogate columns only when they were computed.
std::string sobol_summary_csv(const SobolResult& result);
/// Plot-ready bar data with indices clamped to [0, 1].
std::string sobol_bars_csv(const SobolResult& result);

}  // namespace gsa
