// bhct: simulate, identify, predict, analyze, selftest.

#include "bhct/errors.hpp"
#include "bhct/experiment.hpp"
#include "bhct/selftest.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Common {
    std::string config;
    std::string out;
    std::string method;
    int jmax = 0;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_common(CLI::App* sub, Common& c, bool identify_flags) {
    sub->add_option("--config", c.config, "experiment configuration (JSON)")->required();
    sub->add_option("--out", c.out, "output directory (default: output.dir of the config)");
    if (identify_flags) {
        sub->add_option("--method", c.method, "identification method")
            ->check(CLI::IsMember({"regression", "singular"}));
        sub->add_option("--jmax", c.jmax, "highest polynomial degree to identify")
            ->check(CLI::Range(2, 8));
    }
    sub->add_option("--seed", c.seed, "noise seed (overrides the config)");
    sub->add_flag("--quiet", c.quiet, "suppress progress output");
}

bhct::ExperimentConfig load(const Common& c) {
    auto cfg = bhct::load_config(c.config);
    if (!c.method.empty()) cfg.identify.method = bhct::method_from_string(c.method);
    if (c.jmax) cfg.identify.j_max = c.jmax;
    if (c.seed) cfg.noise.seed = *c.seed;
    return cfg;
}

bhct::RunContext context(const Common& c, const bhct::ExperimentConfig& cfg) {
    bhct::RunContext ctx;
    ctx.out = c.out.empty() ? cfg.output.dir : c.out;
    ctx.quiet = c.quiet;
    ctx.log = [](const std::string& s) { std::cerr << s << "\n"; };
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Beam-hardening CT laboratory"};
    app.require_subcommand(1);

    Common sim, idf, pre, ana;
    std::string input, pred_image, ana_image;
    int st_ns = 2048;
    double st_fault = 0.0;
    bool st_quiet = false;

    auto* s_sim = app.add_subcommand("simulate", "synthesize sinograms and reconstruct");
    add_common(s_sim, sim, false);
    auto* s_id = app.add_subcommand("identify", "recover the nonlinearity coefficients");
    add_common(s_id, idf, true);
    s_id->add_option("--input", input, "P sinogram (.f64 or its sidecar); synthesized when absent");
    auto* s_pre = app.add_subcommand("predict", "list streak lines and sinogram crossings");
    add_common(s_pre, pre, false);
    s_pre->add_option("--image", pred_image, "image to overlay the lines on");
    auto* s_ana = app.add_subcommand("analyze", "score streaks and test for artifacts");
    add_common(s_ana, ana, false);
    s_ana->add_option("--image", ana_image, "reconstructed image (.f64 or its sidecar)")->required();
    auto* s_st = app.add_subcommand("selftest", "run the analytic oracle suite");
    s_st->add_option("--n-s", st_ns, "detector samples for the singularity fits")->check(CLI::Range(16, 1 << 16));
    s_st->add_option("--fault-fbp-scale", st_fault, "relative error injected into the FBP constant");
    s_st->add_flag("--quiet", st_quiet, "print only the summary line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*s_sim) {
            const auto cfg = load(sim);
            const auto j = bhct::run_simulate(cfg, context(sim, cfg));
            if (!sim.quiet) std::cout << bhct::dump_canonical(j["predicted_lines"]);
        } else if (*s_id) {
            const auto cfg = load(idf);
            std::optional<std::filesystem::path> in;
            if (!input.empty()) in = input;
            const auto j = bhct::run_identify(cfg, context(idf, cfg), in);
            if (!idf.quiet) {
                std::cout << bhct::dump_canonical(j["coeffs"]);
                for (const auto& f : j["flags"]) std::cout << "flag: " << f.get<std::string>() << "\n";
            }
        } else if (*s_pre) {
            const auto cfg = load(pre);
            std::optional<std::filesystem::path> img;
            if (!pred_image.empty()) img = pred_image;
            const auto j = bhct::run_predict(cfg, context(pre, cfg), img);
            if (!pre.quiet) std::cout << bhct::dump_canonical(j["lines"]);
        } else if (*s_ana) {
            const auto cfg = load(ana);
            const auto j = bhct::run_analyze(cfg, context(ana, cfg), ana_image);
            if (!ana.quiet)
                std::cout << "artifact_free: " << (j["artifact_free"].get<bool>() ? "true" : "false") << "\n";
        } else if (*s_st) {
            bhct::SelftestOptions o;
            o.n_s = st_ns;
            o.fbp_scale_error = st_fault;
            const auto rows = bhct::run_selftest(o);
            const bool ok = bhct::all_passed(rows);
            if (!st_quiet) std::cout << bhct::format_table(rows);
            std::cout << (ok ? "selftest: all checks passed" : "selftest: FAILED") << "\n";
            return ok ? 0 : 1;
        }
    } catch (const bhct::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
