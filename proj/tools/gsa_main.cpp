// gsa: design -> evaluate/ingest -> fit -> sobol, with a run manifest.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "gsa/digest.hpp"
#include "gsa/error.hpp"
#include "gsa/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kValidation = 2, kNumerical = 3, kIo = 4 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<std::string> model;
    std::optional<std::size_t> n_design;
    std::optional<std::size_t> restarts;
    std::optional<std::size_t> n_base;
    std::optional<std::size_t> bootstrap;
    std::optional<std::size_t> draws;
    bool fresh = false;
};

gsa::RunConfig effective_config(const Flags& f) {
    gsa::RunConfig c = f.config.empty() ? gsa::RunConfig{} : gsa::load_config(f.config);
    if (f.model) {
        c.model = gsa::ModelSelection{};
        c.model.builtin = *f.model;
    }
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.out = *f.out;
    if (f.threads) c.threads = *f.threads;
    if (f.n_design) c.n_design = *f.n_design;
    if (f.restarts) c.fit.restarts = *f.restarts;
    if (f.n_base) c.sobol.n_base = *f.n_base;
    if (f.bootstrap) c.sobol.bootstrap = *f.bootstrap;
    if (f.draws) c.sobol.posterior_draws = *f.draws;
    gsa::validate_config(c);
    return c;
}

gsa::RunManifest open_manifest(const gsa::RunConfig& c, const Flags& f) {
    if (f.fresh) {
        std::error_code ec;
        std::filesystem::remove(c.out / gsa::artifacts::kManifest, ec);
    }
    gsa::RunManifest m = gsa::RunManifest::load_or_create(c);
    if (!f.config.empty()) m.set_config_file(f.config, gsa::sha256_file(f.config));
    return m;
}

void print_sobol(const gsa::SobolResult& r) {
    std::printf("%-28s %9s %9s %9s %9s", "parameter", "S_i", "S_Ti", "ci_S", "ci_ST");
    if (r.surrogate_ci_first) std::printf(" %9s %9s", "gp_ci_S", "gp_ci_ST");
    std::printf("\n");
    for (std::size_t i = 0; i < r.dim(); ++i) {
        auto k = static_cast<Eigen::Index>(i);
        std::printf("%-28s %9.4f %9.4f %9.4f %9.4f", r.names[i].c_str(), r.first_order(k), r.total_order(k),
                    r.mc_ci_first(k), r.mc_ci_total(k));
        if (r.surrogate_ci_first) std::printf(" %9.4f %9.4f", (*r.surrogate_ci_first)(k), (*r.surrogate_ci_total)(k));
        std::printf("\n");
    }
    std::printf("E(r) = %.6g  V(r) = %.6g%s\n", r.mean, r.variance, r.degenerate ? "  [degenerate response]" : "");
}

int exit_code(const gsa::Error& e) {
    switch (e.error_class()) {
        case gsa::ErrorClass::Validation: return kValidation;
        case gsa::ErrorClass::Numerical: return kNumerical;
        case gsa::ErrorClass::Io: return kIo;
    }
    return kOther;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance-based sensitivity analysis on a Gaussian-process surrogate"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "run seed");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--threads", f.threads, "worker threads (0 = all cores; results do not depend on it)");
    app.add_option("--model", f.model, "builtin model: ishigami, g_function, pressure_bin");
    app.add_option("--n-design", f.n_design, "training design size");
    app.add_option("--restarts", f.restarts, "likelihood optimizer restarts");
    app.add_option("--n-base", f.n_base, "pick-freeze base sample size");
    app.add_option("--bootstrap", f.bootstrap, "bootstrap resamples");
    app.add_option("--draws", f.draws, "posterior draws (0 disables the surrogate interval)");

    auto* design = app.add_subcommand("design", "write the Latin hypercube design");
    auto* evaluate = app.add_subcommand("evaluate", "evaluate the builtin model or ingest external results");
    auto* fit = app.add_subcommand("fit", "fit the Gaussian-process surrogate");
    auto* sobol = app.add_subcommand("sobol", "Sobol' indices on the fitted surrogate");
    auto* pipeline = app.add_subcommand("pipeline", "run every stage, resuming completed ones");
    pipeline->add_flag("--fresh", f.fresh, "ignore the existing manifest and rerun everything");
    auto* validate = app.add_subcommand("validate-config", "check the configuration and print it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kOther;
    }

    try {
        gsa::RunConfig config = effective_config(f);
        if (validate->parsed()) {
            std::cout << gsa::config_to_json(config);
            return kOk;
        }
        gsa::RunManifest manifest = open_manifest(config, f);
        if (design->parsed()) {
            gsa::run_design(config, manifest);
            std::cout << "design: " << (config.model.ingest ? "supplied by ingest files" : "wrote " +
                                        (config.out / gsa::artifacts::kDesign).string()) << "\n";
        } else if (evaluate->parsed()) {
            gsa::run_evaluate(config, manifest);
            std::cout << "evaluate: wrote " << (config.out / gsa::artifacts::kResponses).string() << "\n";
        } else if (fit->parsed()) {
            gsa::GprModel model = gsa::run_fit(config, manifest);
            std::printf("fit: log_ml = %.6f (restart %zu of %zu)\n", model.log_ml(), model.provenance().best_restart,
                        model.provenance().restarts);
        } else if (sobol->parsed()) {
            print_sobol(gsa::run_sobol(config, manifest));
        } else if (pipeline->parsed()) {
            gsa::PipelineReport report = gsa::run_pipeline(config, manifest);
            for (const auto& s : report.skipped) std::cout << "resume: " << s << " up to date\n";
            for (const auto& s : report.executed) std::cout << "ran: " << s << "\n";
            std::cout << "results in " << config.out.string() << "\n";
        }
        return kOk;
    } catch (const gsa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}
