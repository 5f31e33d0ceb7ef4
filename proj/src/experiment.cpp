#include "bhct/experiment.hpp"

#include "bhct/errors.hpp"

namespace bhct {

namespace fs = std::filesystem;

namespace {

void say(const RunContext& ctx, const std::string& msg) {
    if (!ctx.quiet && ctx.log) ctx.log(msg);
}

fs::path prepare(const RunContext& ctx) {
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec || !fs::is_directory(ctx.out))
        throw ConfigError("output directory " + ctx.out.string() + " is not writable");
    return ctx.out;
}

Sinogram simulated_p(const ExperimentConfig& cfg, const Nonlinearity& f) {
    const auto syn = synthesize(cfg.scene, f, cfg.grid);
    return add_noise(syn.p, cfg.noise.sigma, cfg.noise.seed);
}

void write_json(const fs::path& path, const Json& j) { write_text(path, dump_canonical(j)); }

}  // namespace

Json run_simulate(const ExperimentConfig& cfg, const RunContext& ctx) {
    const fs::path out = prepare(ctx);
    validate_scene(cfg.scene);
    say(ctx, "synthesizing sinograms");
    const auto syn = synthesize(cfg.scene, cfg.nonlinearity, cfg.grid);
    Sinogram p = add_noise(syn.p, cfg.noise.sigma, cfg.noise.seed);
    const Sinogram pma = syn.p_ma();

    write_sinogram(out / "P", p);
    write_sinogram(out / "Rf", syn.rf);
    write_sinogram(out / "RchiD", syn.rchi);
    write_sinogram(out / "P_MA", pma);

    say(ctx, "reconstructing");
    const Image fct = fbp(p, cfg.image);
    write_image(out / "f_CT", fct, "f_CT");

    const PngWindow win = cfg.output.window();
    write_png_gray(out / "P.png", p.values, win);
    write_png_image(out / "f_CT.png", fct, win);

    Json lines = Json::array();
    for (const auto& l : predict_streaks(cfg.scene)) lines.push_back(to_json(l));
    Json summary = {{"config", serialize_config(cfg)},
                    {"files",
                     {"P.f64", "Rf.f64", "RchiD.f64", "P_MA.f64", "f_CT.f64", "P.png", "f_CT.png"}},
                    {"predicted_lines", lines},
                    {"p_max", p.values.maxCoeff()},
                    {"p_ma_max", pma.values.cwiseAbs().maxCoeff()}};
    write_json(out / "simulate.json", summary);
    say(ctx, "wrote " + (out / "simulate.json").string());
    return summary;
}

Json run_identify(const ExperimentConfig& cfg, const RunContext& ctx,
                  const std::optional<fs::path>& input) {
    const fs::path out = prepare(ctx);
    Sinogram p;
    std::string source;
    if (input) {
        p = read_sinogram(*input);
        source = input->string();
    } else {
        say(ctx, "synthesizing P from the configuration");
        p = simulated_p(cfg, cfg.nonlinearity);
        source = "synthesized";
    }
    say(ctx, "identifying with the " + to_string(cfg.identify.method) + " method");
    try {
        const auto report = identify(p, cfg.scene, cfg.identify.method, cfg.identify.options());
        Json j = to_json(report);
        j["source"] = source;
        write_json(out / "identify.json", j);
        return j;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Numerical) {
            Json j = {{"source", source},
                      {"method", to_string(cfg.identify.method)},
                      {"error", {{"type", e.name()}, {"message", e.what()}}}};
            write_json(out / "identify.json", j);
        }
        throw;
    }
}

Json run_predict(const ExperimentConfig& cfg, const RunContext& ctx,
                 const std::optional<fs::path>& image) {
    const fs::path out = prepare(ctx);
    const auto lines = predict_streaks(cfg.scene);
    Json lj = Json::array(), cj = Json::array();
    for (const auto& l : lines) lj.push_back(to_json(l));
    if (cfg.scene.metal.size() >= 2)
        for (const auto& q : scene_crossings(cfg.scene)) cj.push_back(to_json(q));
    Json j = {{"lines", lj}, {"crossings", cj}};
    if (image) {
        const Image f = read_image(*image);
        write_png_overlay(out / "overlay.png", f, lines, cfg.output.window());
        j["overlay"] = "overlay.png";
    }
    write_json(out / "predict.json", j);
    return j;
}

Json run_analyze(const ExperimentConfig& cfg, const RunContext& ctx, const fs::path& image) {
    const fs::path out = prepare(ctx);
    const Image f = read_image(image);
    if (!(f.grid == cfg.image))
        throw ConfigError("image grid (n_x=" + std::to_string(f.grid.n_x) +
                          ") does not match grid.n_x / grid.fov in the configuration");
    const auto opts = cfg.analyze.options();
    double baseline = 0.0;
    std::string baseline_source;
    if (cfg.analyze.baseline) {
        baseline = *cfg.analyze.baseline;
        baseline_source = "config";
    } else {
        say(ctx, "measuring the baseline on a null reconstruction");
        const Image null_image = fbp(simulated_p(cfg, ZeroNonlinearity{}), cfg.image);
        baseline = null_baseline(null_image, cfg.scene, opts);
        baseline_source = "null_run";
    }
    const auto verdict = test_artifact_free(f, cfg.scene, baseline, cfg.analyze.threshold_factor, opts);
    Json j = to_json(verdict);
    j["baseline_source"] = baseline_source;
    write_json(out / "analyze.json", j);
    return j;
}

}  // namespace bhct
