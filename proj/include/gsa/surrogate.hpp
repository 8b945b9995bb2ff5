#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsa/design.hpp"

namespace gsa {

class Rng;

/// Hyperparameters of the constant-mean, squared-exponential GP prior.
struct GprHyperparams {
    double mu0 = 0.0;
    double sigma0_sq = 1.0;
    Eigen::VectorXd length_scales;
    double nugget = kNuggetStart;

    static constexpr double kNuggetStart = 1e-10;
    static constexpr double kNuggetMax = 1e-4;

    /// Throws ParameterError on non-positive variance or length scale, or a
    /// negative nugget.
    void validate() const;
};

/// Gaussian-frame inputs paired with standardized responses.
class TrainingSet {
public:
    TrainingSet(DesignMatrix inputs, ResponseVector responses);

    const DesignMatrix& inputs() const { return inputs_; }
    const ResponseVector& responses() const { return responses_; }
    std::size_t size() const { return inputs_.rows(); }
    std::size_t dim() const { return inputs_.cols(); }

private:
    DesignMatrix inputs_;
    ResponseVector responses_;
};

/// k(a, b) = sigma0^2 * exp(-1/2 * sum_i (a_i - b_i)^2 / L_i^2).
double kernel_se(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                 const GprHyperparams& hyper);

/// Cross-kernel matrix between the rows of `x1` and the rows of `x2`.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const GprHyperparams& hyper);

/// Lower Cholesky factor of `matrix + nugget * I`, escalating the nugget by
/// x10 from `start_nugget` until the factorization succeeds or the nugget
/// exceeds GprHyperparams::kNuggetMax (then IllConditionedKernelError).
struct JitteredCholesky {
    Eigen::MatrixXd lower;
    double nugget = 0.0;
};
JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& matrix, double start_nugget);

/// -1/2 y^T K~^-1 y - 1/2 log det K~ - n/2 log 2 pi, with y = r - mu0 and
/// K~ = K + nugget I. The nugget escalates if K~ is not positive definite.
double log_marginal_likelihood(const TrainingSet& training, const GprHyperparams& hyper);

/// Likelihood with the constant mean profiled out by generalized least
/// squares, as a function of theta = (log sigma0^2, log L_1, ..., log L_d).
/// The gradient is analytic; by the envelope theorem it needs no term for
/// the profiled mean.
struct ProfiledLikelihood {
    double value = 0.0;
    Eigen::VectorXd gradient;
    double mu0 = 0.0;
    double nugget = 0.0;
};
ProfiledLikelihood profiled_log_likelihood(const TrainingSet& training, const Eigen::VectorXd& log_params,
                                           bool with_gradient = true);

struct FitConfig {
    std::size_t restarts = 8;
    double log_length_lower = -2.995732273553991;  // log 0.05
    double log_length_upper = 2.995732273553991;   // log 20
    double log_sigma2_lower = -6.0;
    double log_sigma2_upper = 6.0;
    std::size_t max_iterations = 200;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

/// Identity of the optimizer that produced a model; written to run manifests.
struct FitProvenance {
    std::string optimizer = "projected BFGS, analytic gradient, log-hyperparameter box";
    std::string mean_treatment = "profiled (generalized least squares)";
    std::size_t restarts = 0;
    std::size_t best_restart = 0;
    std::vector<double> restart_log_ml;
    std::uint64_t seed = 0;
};

class GprModel {
public:
    /// Conditions the prior on the training data. The nugget in `hyper` is the
    /// starting point of the jitter escalation; the value actually used is
    /// stored in hyper().nugget.
    GprModel(TrainingSet training, GprHyperparams hyper, FitProvenance provenance = {});

    const GprHyperparams& hyper() const { return hyper_; }
    const TrainingSet& training() const { return training_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    double log_ml() const { return log_ml_; }
    const FitProvenance& provenance() const { return provenance_; }
    std::size_t dim() const { return training_.dim(); }

    /// Posterior mean in standardized units for raw Gaussian-frame points.
    Eigen::VectorXd mean_at(const Eigen::MatrixXd& points) const;
    Eigen::MatrixXd cov_at(const Eigen::MatrixXd& points) const;

    /// Square-root factor of the posterior covariance at `points`, used for
    /// joint draws. See PosteriorFactor.
    struct PosteriorFactor;
    PosteriorFactor posterior_factor(const Eigen::MatrixXd& points) const;

private:
    TrainingSet training_;
    GprHyperparams hyper_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double log_ml_ = 0.0;
    FitProvenance provenance_;
};

/// Joint posterior at a set of points: cov ~= factor factor^T + diag(residual_sd^2).
///
/// The factor comes from a diagonally pivoted Cholesky that stops once every
/// remaining conditional variance is below GprHyperparams::kNuggetStart; the
/// leftover diagonal is kept as independent noise so marginal variances are
/// preserved. When the numerical rank exceeds an eighth of the point count
/// (for more than 256 points) the dense jittered Cholesky is used instead and
/// residual_sd is zero.
struct GprModel::PosteriorFactor {
    Eigen::VectorXd mean;
    Eigen::MatrixXd factor;
    Eigen::VectorXd residual_sd;
    double jitter = 0.0;
    bool low_rank = false;

    /// k joint draws as rows, consuming normals from `rng`.
    Eigen::MatrixXd draw(std::size_t k, Rng& rng) const;
};

/// Multi-start maximum-likelihood fit. Restart 0 starts at sigma0^2 = 1,
/// L_i = 1; restart r > 0 starts from a point drawn uniformly in the box
/// using a sub-stream of config.seed, so adding restarts never changes the
/// earlier ones. Restarts may run in parallel; the best log likelihood wins
/// with ties going to the lowest restart index.
GprModel fit_gpr(const TrainingSet& training, const FitConfig& config);

/// Posterior mean at Gaussian-frame query points. The result is standardized
/// and carries the training standardization constants.
ResponseVector predict_mean(const GprModel& model, const DesignMatrix& query);
Eigen::MatrixXd predict_cov(const GprModel& model, const DesignMatrix& query);

/// k joint draws (rows) from the posterior over the query points.
Eigen::MatrixXd sample_posterior(const GprModel& model, const DesignMatrix& query, std::size_t k,
                                 std::uint64_t seed);

/// Serializes hyperparameters, training data, standardization constants and
/// optimizer provenance to JSON, with a SHA-256 checksum of the payload.
std::string model_to_json(const GprModel& model);
/// Throws IntegrityError on malformed input or a checksum mismatch.
GprModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const GprModel& model);
GprModel load_model(const std::filesystem::path& path);

}  // namespace gsa
