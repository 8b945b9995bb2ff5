#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gsa {

/// One uncertain input with a uniform marginal on [lower, upper].
struct ParameterDef {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    std::string unit;

    double width() const { return upper - lower; }
};

/// Ordered set of independent uniform inputs. This is the support of the
/// input distribution; the density is the product of the uniform marginals.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<ParameterDef> params);

    std::size_t dim() const { return params_.size(); }
    const std::vector<ParameterDef>& params() const { return params_; }
    const ParameterDef& operator[](std::size_t j) const { return params_[j]; }

    std::vector<std::string> names() const;
    /// Index of a parameter by name, or dim() if absent.
    std::size_t index_of(std::string_view name) const;

    bool operator==(const ParameterSpace&) const;

    /// The two-parameter space of the pressure-bin study: punch tilt in
    /// degrees and additional indentation in millimetres.
    static ParameterSpace pressure_bin();

private:
    std::vector<ParameterDef> params_;
};

enum class Frame { Unit, Physical, Gaussian };

std::string_view to_string(Frame frame);
Frame frame_from_string(std::string_view text);

/// n_d x n_theta sample table tagged with the coordinate frame it lives in.
class DesignMatrix {
public:
    DesignMatrix(Eigen::MatrixXd values, Frame frame, ParameterSpace space);

    const Eigen::MatrixXd& values() const { return values_; }
    Frame frame() const { return frame_; }
    const ParameterSpace& space() const { return space_; }

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
    Eigen::VectorXd row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)).transpose(); }

private:
    Eigen::MatrixXd values_;
    Frame frame_;
    ParameterSpace space_;
};

/// Response vector, optionally carrying the constants used to standardize it.
struct ResponseVector {
    Eigen::VectorXd values;
    bool standardized = false;
    double mean = 0.0;
    double sd = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Latin hypercube design in the unit frame: one point per stratum
/// [k/n, (k+1)/n) in every column, strata independently permuted per column,
/// position within the cell uniform. Throws InvalidDesignError for n == 0.
DesignMatrix lhs_sample(const ParameterSpace& space, std::size_t n, std::uint64_t seed);

DesignMatrix to_physical(const DesignMatrix& unit);
DesignMatrix to_unit(const DesignMatrix& physical);

/// Entries are clamped to [kGaussianClamp, 1 - kGaussianClamp] before the
/// inverse-CDF map, so ingested designs touching the bounds stay finite.
inline constexpr double kGaussianClamp = 1e-12;
DesignMatrix to_gaussian(const DesignMatrix& unit);
DesignMatrix gaussian_to_unit(const DesignMatrix& gaussian);

/// Affine standardization with the population (divide-by-n) standard
/// deviation. Throws DegenerateResponseError when the spread vanishes.
ResponseVector standardize(const ResponseVector& raw);
ResponseVector destandardize(const ResponseVector& standardized);

}  // namespace gsa
