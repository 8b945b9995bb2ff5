#include "gsa/model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "gsa/csv.hpp"
#include "gsa/error.hpp"
#include "gsa/parallel.hpp"

namespace gsa {

double ishigami(const Eigen::Ref<const Eigen::VectorXd>& theta, double a, double b) {
    if (theta.size() != 3) {
        throw ShapeError("ishigami takes 3 inputs, got " + std::to_string(theta.size()));
    }
    const double s1 = std::sin(theta[0]);
    const double s2 = std::sin(theta[1]);
    const double t3 = theta[2] * theta[2];
    return s1 + a * s2 * s2 + b * t3 * t3 * s1;
}

double g_function(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (theta.size() != a.size()) {
        throw ShapeError("g_function: " + std::to_string(theta.size()) + " inputs for " + std::to_string(a.size()) +
                         " coefficients");
    }
    double prod = 1.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!(a[i] >= 0.0)) {
            throw ParameterError("g_function coefficients must be non-negative");
        }
        prod *= (std::abs(4.0 * theta[i] - 2.0) + a[i]) / (1.0 + a[i]);
    }
    return prod;
}

IshigamiModel::IshigamiModel(double a, double b)
    : a_(a), b_(b),
      space_({{"x1", -std::numbers::pi, std::numbers::pi, ""},
              {"x2", -std::numbers::pi, std::numbers::pi, ""},
              {"x3", -std::numbers::pi, std::numbers::pi, ""}}) {}

namespace {

ParameterSpace unit_cube(std::size_t n) {
    std::vector<ParameterDef> params;
    for (std::size_t i = 0; i < n; ++i) params.push_back({"x" + std::to_string(i + 1), 0.0, 1.0, ""});
    return ParameterSpace(std::move(params));
}

}  // namespace

GFunctionModel::GFunctionModel(Eigen::VectorXd a) : a_(std::move(a)) {
    if (a_.size() == 0) throw ParameterError("g_function needs at least one coefficient");
    if ((a_.array() < 0.0).any()) throw ParameterError("g_function coefficients must be non-negative");
    space_ = unit_cube(static_cast<std::size_t>(a_.size()));
}

std::vector<std::pair<std::string, double>> GFunctionModel::parameters() const {
    std::vector<std::pair<std::string, double>> out;
    for (Eigen::Index i = 0; i < a_.size(); ++i) out.emplace_back("a" + std::to_string(i + 1), a_[i]);
    return out;
}

void PressureBinParams::validate(double max_angle_deg) const {
    if (!(inner_radius > 0.0)) throw ParameterError("pressure bin inner radius must be positive");
    if (!(cavity_depth >= 0.0)) throw ParameterError("pressure bin cavity depth must be non-negative");
    if (!(pressure > 0.0)) throw ParameterError("pressure bin load must be positive");
    if (!(indentation_factor >= 0.0)) throw ParameterError("indentation factor must be non-negative");
    const double loss = cavity_depth * std::tan(max_angle_deg * std::numbers::pi / 180.0);
    if (!(nominal_min_wall > loss)) {
        std::ostringstream msg;
        msg << "nominal wall " << nominal_min_wall << " mm does not exceed the wall loss " << loss << " mm at "
            << max_angle_deg << " deg";
        throw ParameterError(msg.str());
    }
}

double pressure_bin_standin(double angle_deg, double indentation_mm, const PressureBinParams& params) {
    const double t_min = params.nominal_min_wall - params.cavity_depth * std::tan(angle_deg * std::numbers::pi / 180.0);
    if (!(t_min > 0.0)) {
        std::ostringstream msg;
        msg << "wall thickness " << t_min << " mm at angle " << angle_deg << " deg is not positive";
        throw GeometryInfeasibleError(msg.str());
    }
    const double a2 = params.inner_radius * params.inner_radius;
    const double b = params.inner_radius + t_min;
    const double b2 = b * b;
    const double hoop = params.pressure * (b2 + a2) / (b2 - a2);
    return hoop * (1.0 + params.indentation_factor * indentation_mm);
}

PressureBinModel::PressureBinModel(PressureBinParams params, ParameterSpace space)
    : params_(params), space_(std::move(space)) {
    if (space_.dim() != 2) {
        throw ShapeError("pressure bin model takes 2 parameters (angle, indentation)");
    }
    params_.validate(std::max(std::abs(space_[0].lower), std::abs(space_[0].upper)));
}

double PressureBinModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
    if (theta.size() != 2) {
        throw ShapeError("pressure bin model takes 2 inputs, got " + std::to_string(theta.size()));
    }
    return pressure_bin_standin(theta[0], theta[1], params_);
}

std::vector<std::pair<std::string, double>> PressureBinModel::parameters() const {
    return {{"inner_radius", params_.inner_radius},
            {"nominal_min_wall", params_.nominal_min_wall},
            {"cavity_depth", params_.cavity_depth},
            {"pressure", params_.pressure},
            {"indentation_factor", params_.indentation_factor},
            {"youngs_modulus", params_.youngs_modulus},
            {"poisson_ratio", params_.poisson_ratio}};
}

std::vector<std::string> builtin_model_names() { return {"ishigami", "g_function", "pressure_bin"}; }

std::unique_ptr<EvaluableModel> make_builtin_model(std::string_view name, const BuiltinOptions& options) {
    auto take = [&](const std::string& key, double fallback) {
        auto it = options.scalars.find(key);
        return it == options.scalars.end() ? fallback : it->second;
    };
    auto reject_unknown = [&](std::initializer_list<const char*> known) {
        for (const auto& [key, value] : options.scalars) {
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok) throw ParameterError("unknown parameter '" + key + "' for model '" + std::string(name) + "'");
        }
    };

    if (name == "ishigami") {
        reject_unknown({"a", "b"});
        return std::make_unique<IshigamiModel>(take("a", 7.0), take("b", 0.1));
    }
    if (name == "g_function") {
        reject_unknown({});
        std::vector<double> a = options.coefficients.empty() ? std::vector<double>{0.0, 1.0, 4.5, 9.0}
                                                             : options.coefficients;
        return std::make_unique<GFunctionModel>(
            Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size())));
    }
    if (name == "pressure_bin") {
        reject_unknown({"inner_radius", "nominal_min_wall", "cavity_depth", "pressure", "indentation_factor",
                        "youngs_modulus", "poisson_ratio"});
        PressureBinParams p;
        p.inner_radius = take("inner_radius", p.inner_radius);
        p.nominal_min_wall = take("nominal_min_wall", p.nominal_min_wall);
        p.cavity_depth = take("cavity_depth", p.cavity_depth);
        p.pressure = take("pressure", p.pressure);
        p.indentation_factor = take("indentation_factor", p.indentation_factor);
        p.youngs_modulus = take("youngs_modulus", p.youngs_modulus);
        p.poisson_ratio = take("poisson_ratio", p.poisson_ratio);
        return std::make_unique<PressureBinModel>(p);
    }
    throw ParameterError("unknown builtin model '" + std::string(name) + "'");
}

SampleSet::SampleSet(DesignMatrix design, ResponseVector responses, std::vector<std::string> ids,
                     SampleSource source)
    : design_(std::move(design)), responses_(std::move(responses)), ids_(std::move(ids)), source_(std::move(source)) {
    if (design_.frame() != Frame::Physical) {
        throw FrameMismatchError("sample set designs are stored in the physical frame");
    }
    if (design_.rows() != responses_.size() || design_.rows() != ids_.size()) {
        throw ShapeError("sample set has mismatched row counts");
    }
    if (!responses_.values.allFinite()) {
        throw ValidationError("sample set responses must be finite");
    }
}

namespace {

std::string resolve(const std::string& mapped, const std::string& canonical) {
    return mapped.empty() ? canonical : mapped;
}

std::size_t require_column(const csv::Table& table, const std::string& name, const std::filesystem::path& file) {
    const std::size_t c = table.column(name);
    if (c == table.header.size()) {
        throw IngestionError(file.string() + ": missing column '" + name + "'");
    }
    return c;
}

}  // namespace

SampleSet ingest(const std::filesystem::path& design_csv, const std::filesystem::path& responses_csv,
                 const ParameterSpace& space, const ColumnMapping& mapping) {
    const csv::Table design = csv::read(design_csv);
    const csv::Table responses = csv::read(responses_csv);

    const std::string id_name = resolve(mapping.sample_id, "sample_id");
    const std::size_t design_id_col = require_column(design, id_name, design_csv);
    const std::size_t resp_id_col = require_column(responses, id_name, responses_csv);
    const std::size_t resp_col = require_column(responses, resolve(mapping.response, "response"), responses_csv);

    std::vector<std::size_t> param_cols;
    for (const auto& p : space.params()) {
        auto it = mapping.parameters.find(p.name);
        param_cols.push_back(require_column(design, it == mapping.parameters.end() ? p.name : it->second, design_csv));
    }

    // Responses by id.
    std::unordered_map<std::string, std::size_t> resp_index;
    for (std::size_t i = 0; i < responses.rows.size(); ++i) {
        const std::string& id = responses.rows[i][resp_id_col];
        if (id.empty()) {
            throw IngestionError(responses_csv.string() + ": empty sample_id at row " + std::to_string(i + 1));
        }
        if (!resp_index.emplace(id, i).second) {
            throw IngestionError(responses_csv.string() + ": duplicate sample_id " + id);
        }
    }

    const std::size_t n = design.rows.size();
    const auto d = static_cast<Eigen::Index>(space.dim());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
    ResponseVector r;
    r.values.resize(static_cast<Eigen::Index>(n));
    std::vector<std::string> ids;
    std::set<std::string> seen;
    std::vector<std::string> problems;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = design.rows[i];
        const std::string& id = row[design_id_col];
        const std::string where = "row " + std::to_string(i + 1) + " (line " + std::to_string(design.line_numbers[i]) +
                                  ", sample_id " + id + ")";
        if (id.empty()) {
            throw IngestionError(design_csv.string() + ": empty sample_id at row " + std::to_string(i + 1));
        }
        if (!seen.insert(id).second) {
            throw IngestionError(design_csv.string() + ": duplicate sample_id " + id);
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto& p = space[static_cast<std::size_t>(j)];
            double v = 0.0;
            if (!csv::parse_double(row[param_cols[static_cast<std::size_t>(j)]], v) || !std::isfinite(v)) {
                problems.push_back(where + ": " + p.name + " is not a finite number");
            } else if (v < p.lower || v > p.upper) {
                std::ostringstream msg;
                msg << where << ": " << p.name << " = " << v << " outside [" << p.lower << ", " << p.upper << "]";
                problems.push_back(msg.str());
            }
            x(static_cast<Eigen::Index>(i), j) = v;
        }
        auto it = resp_index.find(id);
        if (it == resp_index.end()) {
            throw IngestionError(responses_csv.string() + ": missing response for sample_id " + id);
        }
        const std::size_t ri = it->second;
        double v = 0.0;
        if (!csv::parse_double(responses.rows[ri][resp_col], v) || !std::isfinite(v)) {
            problems.push_back("responses row " + std::to_string(ri + 1) + " (line " +
                               std::to_string(responses.line_numbers[ri]) + ", sample_id " + id +
                               "): response '" + responses.rows[ri][resp_col] + "' is not a finite number");
        }
        r.values[static_cast<Eigen::Index>(i)] = v;
        ids.push_back(id);
    }
    for (const auto& [id, ri] : resp_index) {
        if (!seen.count(id)) {
            throw IngestionError(responses_csv.string() + ": sample_id " + id + " (row " + std::to_string(ri + 1) +
                                 ") has no design row");
        }
    }
    if (!problems.empty()) {
        std::string msg = "validation failed for " + std::to_string(problems.size()) + " value(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }

    SampleSource source;
    source.kind = SampleSource::Kind::Ingested;
    return SampleSet(DesignMatrix(std::move(x), Frame::Physical, space), std::move(r), std::move(ids), source);
}

std::string design_csv_text(const DesignMatrix& design, const std::vector<std::string>& ids) {
    if (ids.size() != design.rows()) throw ShapeError("design_csv_text: id count does not match rows");
    csv::Table t;
    t.header.push_back("sample_id");
    for (const auto& name : design.space().names()) t.header.push_back(name);
    for (std::size_t i = 0; i < design.rows(); ++i) {
        std::vector<std::string> row{ids[i]};
        for (std::size_t j = 0; j < design.cols(); ++j) row.push_back(csv::format_double(design(i, j)));
        t.rows.push_back(std::move(row));
    }
    return csv::format(t);
}

std::string responses_csv_text(const ResponseVector& responses, const std::vector<std::string>& ids) {
    if (ids.size() != responses.size()) throw ShapeError("responses_csv_text: id count does not match rows");
    csv::Table t;
    t.header = {"sample_id", "response"};
    for (std::size_t i = 0; i < ids.size(); ++i) {
        t.rows.push_back({ids[i], csv::format_double(responses.values[static_cast<Eigen::Index>(i)])});
    }
    return csv::format(t);
}

void export_sample_set(const SampleSet& samples, const std::filesystem::path& design_csv,
                       const std::filesystem::path& responses_csv) {
    csv::write(design_csv, csv::parse(design_csv_text(samples.design(), samples.ids())));
    csv::write(responses_csv, csv::parse(responses_csv_text(samples.responses(), samples.ids())));
}

std::vector<std::string> sequential_ids(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
    return ids;
}

SampleSet generate_sample_set(const EvaluableModel& model, const DesignMatrix& design, unsigned threads,
                              std::uint64_t seed) {
    if (design.frame() != Frame::Physical) {
        throw FrameMismatchError("generate_sample_set needs a physical-frame design");
    }
    if (!(design.space() == model.space())) {
        throw ValidationError("design space does not match the parameter space of model '" + model.name() + "'");
    }
    const std::size_t n = design.rows();
    ResponseVector r;
    r.values.resize(static_cast<Eigen::Index>(n));
    parallel_for(n, threads, [&](std::size_t i) {
        double v = 0.0;
        try {
            v = model.evaluate(design.values().row(static_cast<Eigen::Index>(i)).transpose());
        } catch (const std::exception& e) {
            throw EvaluationError("model '" + model.name() + "' failed at row " + std::to_string(i + 1) + ": " +
                                  e.what());
        }
        if (!std::isfinite(v)) {
            throw EvaluationError("model '" + model.name() + "' returned a non-finite value at row " +
                                  std::to_string(i + 1));
        }
        r.values[static_cast<Eigen::Index>(i)] = v;
    });
    SampleSource source;
    source.kind = SampleSource::Kind::Generated;
    source.model_name = model.name();
    source.seed = seed;
    return SampleSet(design, std::move(r), sequential_ids(n), source);
}

}  // namespace gsa
