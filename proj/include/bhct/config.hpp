#pragma once

// Experiment configuration: JSON with a versioned schema.  Lengths are in
// scene units; angles in radians.

#include "bhct/beamhard.hpp"
#include "bhct/identify.hpp"
#include "bhct/io.hpp"
#include "bhct/scene.hpp"
#include "bhct/xray.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace bhct {

inline constexpr const char* kConfigSchema = "bhct-experiment/1";

struct NoiseConfig {
    double sigma = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const NoiseConfig&) const = default;
};

struct IdentifyConfig {
    IdentifyMethod method = IdentifyMethod::Regression;
    int j_max = 3;
    double window_width = 0.0;  // 0 selects 5% of s_max
    int nuisance_degree = 2;
    EdgeAmplitudeSource edge_amplitude = EdgeAmplitudeSource::Fitted;
    bool peel = false;
    bool subtract_linear = true;
    double mismatch_threshold = 1e-2;

    bool operator==(const IdentifyConfig&) const = default;
    IdentifyOptions options() const;
};

struct AnalyzeConfig {
    double threshold_factor = 3.0;
    double profile_half_width = 0.0;  // scene units; 0 selects 10 pixels
    int n_stations = 64;
    std::optional<double> baseline;   // measured on a null run when absent

    bool operator==(const AnalyzeConfig&) const = default;
    StreakOptions options() const;
};

struct OutputConfig {
    std::string dir = "out";
    double png_lo_percentile = 1.0;
    double png_hi_percentile = 99.0;

    bool operator==(const OutputConfig&) const = default;
    PngWindow window() const { return {png_lo_percentile, png_hi_percentile, 0.0, 0.0}; }
};

struct ExperimentConfig {
    Scene scene;
    SinogramGrid grid{4.0, 1024, 720};
    ImageGrid image{8.0, 512};
    Nonlinearity nonlinearity = ZeroNonlinearity{};
    NoiseConfig noise;
    IdentifyConfig identify;
    AnalyzeConfig analyze;
    OutputConfig output;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError naming the offending field path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
Json serialize_config(const ExperimentConfig& c);

}  // namespace bhct
