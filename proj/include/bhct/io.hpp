#pragma once

// File formats: raw little-endian float64 arrays with a JSON sidecar, 8-bit
// grayscale PNG renderings, and canonical JSON documents.

#include "bhct/geometry.hpp"
#include "bhct/identify.hpp"
#include "bhct/xray.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace bhct {

using Json = nlohmann::json;  // std::map objects, so keys serialize in sorted order

/// Serializes with sorted keys, two-space indentation and every
/// floating-point number printed with 17 significant digits.  Throws
/// ConfigError on non-finite numbers.
std::string dump_canonical(const Json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json_file(const std::filesystem::path& path);

/// Writes `<stem>.f64` and `<stem>.json`; returns the path of the data file.
std::filesystem::path write_sinogram(const std::filesystem::path& stem, const Sinogram& g);
std::filesystem::path write_image(const std::filesystem::path& stem, const Image& f,
                                  const std::string& role = "image");

/// Reads a sinogram from either the `.f64` file or its sidecar.
Sinogram read_sinogram(const std::filesystem::path& path);
Image read_image(const std::filesystem::path& path);

struct PngWindow {
    double lo_percentile = 1.0;
    double hi_percentile = 99.0;
    // Explicit window; used when lo < hi.
    double lo = 0.0;
    double hi = 0.0;
};

/// Linear window/level mapping of a row-major array to 8-bit gray.
std::vector<std::uint8_t> to_gray8(const RowMatrix& values, const PngWindow& window);

void write_png_gray(const std::filesystem::path& path, const RowMatrix& values,
                    const PngWindow& window = {});

/// Image rendering with +y pointing up.
void write_png_image(const std::filesystem::path& path, const Image& f, const PngWindow& window = {});

/// Gray rendering of the image with the given lines drawn in red.
void write_png_overlay(const std::filesystem::path& path, const Image& f,
                       const std::vector<TangentLine>& lines, const PngWindow& window = {});

Json to_json(const TangentLine& line);
Json to_json(const CrossingPoint& q);
Json to_json(const IdentifyReport& r);
Json to_json(const StreakScore& s);
Json to_json(const ArtifactVerdict& v);

}  // namespace bhct
