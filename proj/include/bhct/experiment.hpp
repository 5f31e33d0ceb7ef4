#pragma once

// Orchestration behind the command line tool.  Every run writes its
// artifacts under an output directory and returns the JSON it wrote.

#include "bhct/config.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace bhct {

struct RunContext {
    std::filesystem::path out;  // output directory, created on demand
    bool quiet = false;
    std::function<void(const std::string&)> log;  // progress lines; may be empty
};

/// Writes P, Rf, R chi_D and P_MA sinograms, the f_CT reconstruction and
/// PNG renderings of P and f_CT.
Json run_simulate(const ExperimentConfig& cfg, const RunContext& ctx);

/// Identifies the nonlinearity from `input` (a P sinogram) or, when empty,
/// from data synthesized from the configuration.  Writes identify.json.
/// On NoCrossings or IllConditionedFit, identify.json records the failure
/// before the exception propagates.
Json run_identify(const ExperimentConfig& cfg, const RunContext& ctx,
                  const std::optional<std::filesystem::path>& input = std::nullopt);

/// Writes predict.json with the tangent lines and sinogram crossings, and
/// an overlay PNG when an image is given.
Json run_predict(const ExperimentConfig& cfg, const RunContext& ctx,
                 const std::optional<std::filesystem::path>& image = std::nullopt);

/// Streak scores and artifact verdict for an image; the baseline comes from
/// the configuration or from a reconstruction of the null nonlinearity.
Json run_analyze(const ExperimentConfig& cfg, const RunContext& ctx,
                 const std::filesystem::path& image);

}  // namespace bhct
