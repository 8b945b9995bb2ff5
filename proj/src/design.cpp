#include "gsa/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gsa/error.hpp"
#include "gsa/normal.hpp"
#include "gsa/rng.hpp"

namespace gsa {

ParameterSpace::ParameterSpace(std::vector<ParameterDef> params) : params_(std::move(params)) {
    if (params_.empty()) {
        throw InvalidDesignError("parameter space needs at least one parameter");
    }
    std::set<std::string> seen;
    for (const auto& p : params_) {
        if (p.name.empty()) {
            throw InvalidDesignError("parameter name must not be empty");
        }
        if (!seen.insert(p.name).second) {
            throw InvalidDesignError("duplicate parameter name '" + p.name + "'");
        }
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper)) {
            throw InvalidDesignError("parameter '" + p.name + "' needs finite bounds with lower < upper");
        }
    }
}

std::vector<std::string> ParameterSpace::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.name);
    return out;
}

std::size_t ParameterSpace::index_of(std::string_view name) const {
    for (std::size_t j = 0; j < params_.size(); ++j) {
        if (params_[j].name == name) return j;
    }
    return params_.size();
}

bool ParameterSpace::operator==(const ParameterSpace& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (std::size_t j = 0; j < params_.size(); ++j) {
        const auto& a = params_[j];
        const auto& b = other.params_[j];
        if (a.name != b.name || a.lower != b.lower || a.upper != b.upper || a.unit != b.unit) return false;
    }
    return true;
}

ParameterSpace ParameterSpace::pressure_bin() {
    return ParameterSpace({
        {"angle_of_attack_deg", 0.0, 0.25, "deg"},
        {"additional_indentation_mm", 0.0, 1.0, "mm"},
    });
}

std::string_view to_string(Frame frame) {
    switch (frame) {
        case Frame::Unit: return "unit";
        case Frame::Physical: return "physical";
        case Frame::Gaussian: return "gaussian";
    }
    return "unknown";
}

Frame frame_from_string(std::string_view text) {
    if (text == "unit") return Frame::Unit;
    if (text == "physical") return Frame::Physical;
    if (text == "gaussian") return Frame::Gaussian;
    throw FrameMismatchError("unknown frame '" + std::string(text) + "'");
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, Frame frame, ParameterSpace space)
    : values_(std::move(values)), frame_(frame), space_(std::move(space)) {
    if (static_cast<std::size_t>(values_.cols()) != space_.dim()) {
        throw ShapeError("design has " + std::to_string(values_.cols()) + " columns, space has " +
                         std::to_string(space_.dim()));
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        const auto& p = space_[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            const double v = values_(i, j);
            bool ok = std::isfinite(v);
            if (frame_ == Frame::Unit) ok = ok && v >= 0.0 && v <= 1.0;
            if (frame_ == Frame::Physical) ok = ok && v >= p.lower && v <= p.upper;
            if (!ok) {
                throw InvalidDesignError("design entry (" + std::to_string(i) + ", " + p.name + ") = " +
                                         std::to_string(v) + " is outside the " +
                                         std::string(to_string(frame_)) + " frame");
            }
        }
    }
}

DesignMatrix lhs_sample(const ParameterSpace& space, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw InvalidDesignError("Latin hypercube needs at least one sample");
    }
    Rng rng(seed);
    const std::size_t d = space.dim();
    Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<std::size_t> strata(n);
    const double width = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        // Fisher-Yates with the portable bounded generator.
        for (std::size_t i = n; i > 1; --i) {
            std::swap(strata[i - 1], strata[rng.below(i)]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double v = (static_cast<double>(strata[i]) + rng.uniform()) * width;
            // Rounding can land exactly on the upper stratum edge.
            const double upper_edge = static_cast<double>(strata[i] + 1) * width;
            if (v >= upper_edge) v = std::nextafter(upper_edge, 0.0);
            u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return DesignMatrix(std::move(u), Frame::Unit, space);
}

namespace {

void require_frame(const DesignMatrix& design, Frame expected, const char* op) {
    if (design.frame() != expected) {
        throw FrameMismatchError(std::string(op) + ": expected " + std::string(to_string(expected)) +
                                 " frame, got " + std::string(to_string(design.frame())));
    }
}

}  // namespace

DesignMatrix to_physical(const DesignMatrix& unit) {
    require_frame(unit, Frame::Unit, "to_physical");
    Eigen::MatrixXd x = unit.values();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto& p = unit.space()[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            // Clamp guards against rounding past the upper bound.
            x(i, j) = std::min(p.upper, p.lower + x(i, j) * p.width());
        }
    }
    return DesignMatrix(std::move(x), Frame::Physical, unit.space());
}

DesignMatrix to_unit(const DesignMatrix& physical) {
    require_frame(physical, Frame::Physical, "to_unit");
    Eigen::MatrixXd u = physical.values();
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        const auto& p = physical.space()[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            u(i, j) = std::clamp((u(i, j) - p.lower) / p.width(), 0.0, 1.0);
        }
    }
    return DesignMatrix(std::move(u), Frame::Unit, physical.space());
}

DesignMatrix to_gaussian(const DesignMatrix& unit) {
    require_frame(unit, Frame::Unit, "to_gaussian");
    Eigen::MatrixXd z = unit.values().unaryExpr([](double u) {
        return inv_norm_cdf(std::clamp(u, kGaussianClamp, 1.0 - kGaussianClamp));
    });
    return DesignMatrix(std::move(z), Frame::Gaussian, unit.space());
}

DesignMatrix gaussian_to_unit(const DesignMatrix& gaussian) {
    require_frame(gaussian, Frame::Gaussian, "gaussian_to_unit");
    Eigen::MatrixXd u = gaussian.values().unaryExpr([](double z) { return norm_cdf(z); });
    return DesignMatrix(std::move(u), Frame::Unit, gaussian.space());
}

ResponseVector standardize(const ResponseVector& raw) {
    if (raw.standardized) return raw;
    const auto n = raw.values.size();
    if (n < 2) {
        throw DegenerateResponseError("standardize needs at least two responses");
    }
    const double mean = raw.values.mean();
    const double var = (raw.values.array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    const double scale = std::max(1.0, std::abs(mean));
    if (!(sd > 1e-12 * scale)) {
        throw DegenerateResponseError("responses have zero variance (constant model output)");
    }
    ResponseVector out;
    out.values = (raw.values.array() - mean) / sd;
    out.standardized = true;
    out.mean = mean;
    out.sd = sd;
    return out;
}

ResponseVector destandardize(const ResponseVector& standardized) {
    if (!standardized.standardized) return standardized;
    ResponseVector out;
    out.values = standardized.values.array() * standardized.sd + standardized.mean;
    return out;
}

}  // namespace gsa
