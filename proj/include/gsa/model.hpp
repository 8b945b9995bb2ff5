#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsa/design.hpp"

namespace gsa {

/// Black-box response g(theta) over a parameter space. Implementations must
/// be deterministic, pure, and safe to call concurrently.
class EvaluableModel {
public:
    virtual ~EvaluableModel() = default;

    virtual std::string name() const = 0;
    virtual const ParameterSpace& space() const = 0;
    /// theta is a point in the physical frame.
    virtual double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) const = 0;
    /// Named constants that define the model, for run manifests.
    virtual std::vector<std::pair<std::string, double>> parameters() const { return {}; }
};

using PointFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// Adapts a callable to the model interface.
class FunctionModel final : public EvaluableModel {
public:
    FunctionModel(std::string name, ParameterSpace space, PointFunction fn)
        : name_(std::move(name)), space_(std::move(space)), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }
    const ParameterSpace& space() const override { return space_; }
    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) const override { return fn_(theta); }

private:
    std::string name_;
    ParameterSpace space_;
    PointFunction fn_;
};

// ---------------------------------------------------------------------------
// Analytic benchmarks

/// sin t1 + a sin^2 t2 + b t3^4 sin t1.
double ishigami(const Eigen::Ref<const Eigen::VectorXd>& theta, double a = 7.0, double b = 0.1);

/// Sobol' g-function: prod_i (|4 t_i - 2| + a_i) / (1 + a_i).
/// Throws ParameterError for negative a_i and ShapeError for mismatched lengths.
double g_function(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::VectorXd>& a);

class IshigamiModel final : public EvaluableModel {
public:
    explicit IshigamiModel(double a = 7.0, double b = 0.1);

    std::string name() const override { return "ishigami"; }
    const ParameterSpace& space() const override { return space_; }
    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) const override { return ishigami(theta, a_, b_); }
    std::vector<std::pair<std::string, double>> parameters() const override { return {{"a", a_}, {"b", b_}}; }

private:
    double a_;
    double b_;
    ParameterSpace space_;
};

class GFunctionModel final : public EvaluableModel {
public:
    explicit GFunctionModel(Eigen::VectorXd a);

    std::string name() const override { return "g_function"; }
    const ParameterSpace& space() const override { return space_; }
    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) const override { return g_function(theta, a_); }
    std::vector<std::pair<std::string, double>> parameters() const override;

private:
    Eigen::VectorXd a_;
    ParameterSpace space_;
};

// ---------------------------------------------------------------------------
// Pressure-bin stand-in

/// Elastic thick-walled cylinder standing in for the FE analysis of the
/// forged pressure bin. Lengths in mm, stresses and moduli in MPa.
struct PressureBinParams {
    double inner_radius = 11.6;       // 23.2 mm cavity diameter
    double nominal_min_wall = 1.3;
    double cavity_depth = 70.0;       // D tan(0.25 deg) ~ 0.3 mm wall loss
    double pressure = 50.0;
    double indentation_factor = 0.02;
    // Provenance only: hoop stress in a pressurized elastic cylinder does not
    // depend on stiffness.
    double youngs_modulus = 207000.0;
    double poisson_ratio = 0.3;

    /// Throws ParameterError unless the wall stays positive up to max_angle_deg.
    void validate(double max_angle_deg) const;
};

/// Maximum hoop stress at the inner surface for punch tilt `angle_deg` and
/// additional indentation `indentation_mm`:
///   t_min = t0 - D tan(phi),  b = a + t_min,
///   sigma = p (b^2 + a^2) / (b^2 - a^2) * (1 + beta h / 1 mm).
/// Throws GeometryInfeasibleError when t_min <= 0.
double pressure_bin_standin(double angle_deg, double indentation_mm, const PressureBinParams& params = {});

class PressureBinModel final : public EvaluableModel {
public:
    explicit PressureBinModel(PressureBinParams params = {}, ParameterSpace space = ParameterSpace::pressure_bin());

    std::string name() const override { return "pressure_bin"; }
    const ParameterSpace& space() const override { return space_; }
    double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
    std::vector<std::pair<std::string, double>> parameters() const override;
    const PressureBinParams& params() const { return params_; }

private:
    PressureBinParams params_;
    ParameterSpace space_;
};

/// Builtin model names: "ishigami", "g_function", "pressure_bin".
std::vector<std::string> builtin_model_names();

/// Scalar overrides by field name (ishigami: a, b; pressure_bin: any
/// PressureBinParams field) and, for the g-function, the coefficient vector.
struct BuiltinOptions {
    std::map<std::string, double> scalars;
    std::vector<double> coefficients;
};
std::unique_ptr<EvaluableModel> make_builtin_model(std::string_view name, const BuiltinOptions& options = {});

// ---------------------------------------------------------------------------
// Sample sets

struct SampleSource {
    enum class Kind { Ingested, Generated } kind = Kind::Generated;
    std::string model_name;
    std::uint64_t seed = 0;
};

/// Physical-frame design paired with raw responses.
class SampleSet {
public:
    SampleSet(DesignMatrix design, ResponseVector responses, std::vector<std::string> ids, SampleSource source);

    const DesignMatrix& design() const { return design_; }
    const ResponseVector& responses() const { return responses_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const SampleSource& source() const { return source_; }
    std::size_t size() const { return ids_.size(); }

private:
    DesignMatrix design_;
    ResponseVector responses_;
    std::vector<std::string> ids_;
    SampleSource source_;
};

/// Maps file headers onto the canonical column names; empty entries fall
/// back to the canonical names (`sample_id`, `response`, parameter names).
struct ColumnMapping {
    std::string sample_id;
    std::string response;
    std::map<std::string, std::string> parameters;
};

/// Reads and validates externally produced design and response tables.
/// Rows are returned in design-file order with responses aligned by id.
SampleSet ingest(const std::filesystem::path& design_csv, const std::filesystem::path& responses_csv,
                 const ParameterSpace& space, const ColumnMapping& mapping = {});

/// Canonical CSV text for a physical design: `sample_id,<names...>`.
std::string design_csv_text(const DesignMatrix& design, const std::vector<std::string>& ids);
std::string responses_csv_text(const ResponseVector& responses, const std::vector<std::string>& ids);
void export_sample_set(const SampleSet& samples, const std::filesystem::path& design_csv,
                       const std::filesystem::path& responses_csv);

/// Sample ids "1".."n".
std::vector<std::string> sequential_ids(std::size_t n);

/// Evaluates the model row by row (in parallel when threads != 1).
/// Failures are rethrown as EvaluationError naming the row.
SampleSet generate_sample_set(const EvaluableModel& model, const DesignMatrix& design, unsigned threads = 1,
                              std::uint64_t seed = 0);

}  // namespace gsa
