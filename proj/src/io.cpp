#include "bhct/io.hpp"

#include "bhct/errors.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace bhct {

namespace fs = std::filesystem;

namespace {

void dump_number(std::ostream& os, const Json& j) {
    if (j.is_number_integer()) {
        if (j.is_number_unsigned())
            os << j.get<std::uint64_t>();
        else
            os << j.get<std::int64_t>();
        return;
    }
    double v = j.get<double>();
    if (v == 0.0) v = 0.0;  // no negative zero in reports
    if (!std::isfinite(v)) throw ConfigError("cannot serialize a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
    // Keep floats recognisable as floats.
    if (!std::strpbrk(buf, ".eEn")) os << ".0";
}

void dump(std::ostream& os, const Json& j, int depth) {
    const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << Json(it.key()).dump() << ": ";
                dump(os, it.value(), depth + 1);
            }
            os << "\n" << close << "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            const bool flat = std::none_of(j.begin(), j.end(),
                                           [](const Json& e) { return e.is_structured(); });
            os << "[";
            bool first = true;
            for (const auto& e : j) {
                if (!first) os << (flat ? ", " : ",");
                first = false;
                if (!flat) os << "\n" << pad;
                dump(os, e, depth + 1);
            }
            if (!flat) os << "\n" << close;
            os << "]";
            return;
        }
        case Json::value_t::number_float:
        case Json::value_t::number_integer:
        case Json::value_t::number_unsigned:
            dump_number(os, j);
            return;
        default:
            os << j.dump();
    }
}

void write_f64(const fs::path& path, const RowMatrix& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    const auto n = static_cast<std::size_t>(values.size());
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), n * sizeof(double));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(values.data()[i]);
            unsigned char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
            out.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!out) throw ConfigError("write failed for " + path.string());
}

RowMatrix read_f64(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    const auto n = static_cast<std::size_t>(rows * cols);
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size != n * sizeof(double)) {
        std::ostringstream os;
        os << path.string() << " holds " << size << " bytes, sidecar dims need " << n * sizeof(double);
        throw ConfigError(os.str());
    }
    in.seekg(0);
    RowMatrix m(rows, cols);
    std::vector<unsigned char> buf(n * sizeof(double));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= std::uint64_t(buf[8 * i + k]) << (8 * k);
        m.data()[i] = std::bit_cast<double>(bits);
    }
    return m;
}

fs::path with_ext(fs::path p, const char* ext) { return p.replace_extension(ext); }

Json sidecar_base(Eigen::Index rows, Eigen::Index cols) {
    return {{"format", "bhct-raw/1"},
            {"dtype", "float64"},
            {"byte_order", "little"},
            {"layout", "row-major"},
            {"dims", {rows, cols}}};
}

template <class T>
T field(const Json& j, const char* key, const fs::path& where) {
    if (!j.contains(key)) throw ConfigError(where.string() + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where.string() + ": field '" + key + "' has the wrong type");
    }
}

Json read_sidecar(const fs::path& path, const char* kind) {
    const auto side = with_ext(path, ".json");
    Json j = read_json_file(side);
    if (field<std::string>(j, "format", side) != "bhct-raw/1")
        throw ConfigError(side.string() + ": unsupported format");
    if (field<std::string>(j, "dtype", side) != "float64" ||
        field<std::string>(j, "byte_order", side) != "little")
        throw ConfigError(side.string() + ": only little-endian float64 data is supported");
    if (!j.contains(kind)) throw ConfigError(side.string() + ": missing '" + kind + "' block");
    return j;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * (v.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(v.begin(), v.begin() + k, v.end());
    const double a = v[k];
    if (k + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + k + 1, v.end());
    return a + (pos - k) * (b - a);
}

void write_png(const fs::path& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels) {
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw ConfigError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw ConfigError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r)
        png_write_row(png, pixels.data() + static_cast<std::size_t>(r) * width * channels);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// Images are stored with y increasing down the rows; flip so +y is up.
RowMatrix flip_rows(const RowMatrix& m) { return m.colwise().reverse(); }

Json point_json(const Point& p) { return Json::array({p.x(), p.y()}); }

std::string kind_name(TangentKind k) { return k == TangentKind::Outer ? "outer" : "inner"; }

}  // namespace

std::string dump_canonical(const Json& j) {
    std::ostringstream os;
    dump(os, j, 0);
    os << "\n";
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ConfigError("write failed for " + path.string());
}

Json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

fs::path write_sinogram(const fs::path& stem, const Sinogram& g) {
    const auto data = with_ext(stem, ".f64");
    write_f64(data, g.values);
    Json side = sidecar_base(g.values.rows(), g.values.cols());
    side["axes"] = {"phi", "s"};
    side["ranges"] = {{"phi", {g.grid.phi(0), g.grid.phi(g.grid.n_phi - 1)}},
                      {"s", {-g.grid.s_max, g.grid.s_max}}};
    side["role"] = to_string(g.role);
    side["sinogram"] = {{"n_s", g.grid.n_s}, {"n_phi", g.grid.n_phi}, {"s_max", g.grid.s_max}};
    write_text(with_ext(stem, ".json"), dump_canonical(side));
    return data;
}

fs::path write_image(const fs::path& stem, const Image& f, const std::string& role) {
    const auto data = with_ext(stem, ".f64");
    write_f64(data, f.values);
    Json side = sidecar_base(f.values.rows(), f.values.cols());
    side["axes"] = {"y", "x"};
    const double lo = f.grid.x(0), hi = f.grid.x(f.grid.n_x - 1);
    side["ranges"] = {{"x", {lo, hi}}, {"y", {lo, hi}}};
    side["role"] = role;
    side["image"] = {{"fov", f.grid.fov}, {"n_x", f.grid.n_x}};
    write_text(with_ext(stem, ".json"), dump_canonical(side));
    return data;
}

Sinogram read_sinogram(const fs::path& path) {
    const Json j = read_sidecar(path, "sinogram");
    const auto side = with_ext(path, ".json");
    const Json& b = j.at("sinogram");
    SinogramGrid grid{field<double>(b, "s_max", side), field<int>(b, "n_s", side),
                      field<int>(b, "n_phi", side)};
    if (grid.n_s < 2 || grid.n_phi < 1 || !(grid.s_max > 0.0))
        throw ConfigError(side.string() + ": invalid sinogram grid");
    const auto dims = field<std::vector<long>>(j, "dims", side);
    if (dims.size() != 2 || dims[0] != grid.n_phi || dims[1] != grid.n_s)
        throw ConfigError(side.string() + ": dims do not match the sinogram grid");
    Sinogram g(grid, role_from_string(field<std::string>(j, "role", side)));
    g.values = read_f64(with_ext(path, ".f64"), grid.n_phi, grid.n_s);
    return g;
}

Image read_image(const fs::path& path) {
    const Json j = read_sidecar(path, "image");
    const auto side = with_ext(path, ".json");
    const Json& b = j.at("image");
    ImageGrid grid{field<double>(b, "fov", side), field<int>(b, "n_x", side)};
    if (grid.n_x < 1 || !(grid.fov > 0.0)) throw ConfigError(side.string() + ": invalid image grid");
    const auto dims = field<std::vector<long>>(j, "dims", side);
    if (dims.size() != 2 || dims[0] != grid.n_x || dims[1] != grid.n_x)
        throw ConfigError(side.string() + ": dims do not match the image grid");
    Image f(grid);
    f.values = read_f64(with_ext(path, ".f64"), grid.n_x, grid.n_x);
    return f;
}

std::vector<std::uint8_t> to_gray8(const RowMatrix& values, const PngWindow& w) {
    double lo = w.lo, hi = w.hi;
    if (!(lo < hi)) {
        std::vector<double> v(values.data(), values.data() + values.size());
        lo = percentile(v, w.lo_percentile);
        hi = percentile(std::move(v), w.hi_percentile);
    }
    std::vector<std::uint8_t> out(values.size());
    const double span = hi > lo ? hi - lo : 1.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double t = std::clamp((values.data()[i] - lo) / span, 0.0, 1.0);
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
    return out;
}

void write_png_gray(const fs::path& path, const RowMatrix& values, const PngWindow& window) {
    write_png(path, static_cast<int>(values.cols()), static_cast<int>(values.rows()), 1,
              to_gray8(values, window));
}

void write_png_image(const fs::path& path, const Image& f, const PngWindow& window) {
    write_png_gray(path, flip_rows(f.values), window);
}

void write_png_overlay(const fs::path& path, const Image& f, const std::vector<TangentLine>& lines,
                       const PngWindow& window) {
    const int n = f.grid.n_x;
    const auto gray = to_gray8(flip_rows(f.values), window);
    std::vector<std::uint8_t> rgb(3 * gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i) rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = gray[i];
    const double half = 0.5 * f.grid.pixel();
    for (int r = 0; r < n; ++r) {
        const double y = f.grid.x(n - 1 - r);
        for (int c = 0; c < n; ++c) {
            const Point x(f.grid.x(c), y);
            for (const auto& line : lines)
                if (std::abs(line.distance_to(x)) <= half * (1.0 + 1e-9)) {
                    const std::size_t k = 3 * (static_cast<std::size_t>(r) * n + c);
                    rgb[k] = 255;
                    rgb[k + 1] = rgb[k + 2] = 0;
                }
        }
    }
    write_png(path, n, n, 3, rgb);
}

Json to_json(const TangentLine& line) {
    return {{"s", line.s}, {"phi", line.phi}, {"kind", kind_name(line.kind)}};
}

Json to_json(const CrossingPoint& q) {
    return {{"s", q.s},
            {"phi", q.phi},
            {"body_a", q.body_a},
            {"body_b", q.body_b},
            {"sign_a", q.sign_a},
            {"sign_b", q.sign_b},
            {"kappa_a", q.kappa_a},
            {"kappa_b", q.kappa_b},
            {"h_a", q.h_a},
            {"h_b", q.h_b},
            {"transversality", q.transversality},
            {"line", to_json(q.line())}};
}

Json to_json(const IdentifyReport& r) {
    Json coeffs = Json::object(), spread = Json::object(), pair_spread = Json::object();
    for (int j = 2; j <= r.j_max; ++j) {
        coeffs[std::to_string(j)] = r.coeffs[j - 2];
        spread[std::to_string(j)] = r.spread[j - 2];
        if (!r.pair_spread.empty() && j >= 3) pair_spread[std::to_string(j)] = r.pair_spread[j - 2];
    }
    Json crossings = Json::array();
    for (const auto& c : r.crossings) {
        Json cj = {{"s", c.s},
                   {"phi", c.phi},
                   {"body_a", c.body_a},
                   {"body_b", c.body_b},
                   {"sign_a", c.sign_a},
                   {"sign_b", c.sign_b},
                   {"h_a", c.h_a},
                   {"h_b", c.h_b},
                   {"h_formula_a", c.h_formula_a},
                   {"h_formula_b", c.h_formula_b},
                   {"residual", c.residual},
                   {"relative_residual", c.relative_residual},
                   {"condition", c.condition},
                   {"n_samples", c.n_samples}};
        Json cc = Json::object();
        for (int j = 2; j <= r.j_max; ++j) cc[std::to_string(j)] = c.coeffs[j - 2];
        cj["coeffs"] = cc;
        if (!c.pairs.empty()) {
            Json pj = Json::object();
            for (const auto& [mn, a] : c.pairs)
                pj[std::to_string(mn.first) + "," + std::to_string(mn.second)] = a;
            cj["pairs"] = pj;
        }
        crossings.push_back(cj);
    }
    Json skipped = Json::array();
    for (const auto& s : r.skipped) skipped.push_back({{"s", s.s}, {"phi", s.phi}, {"reason", s.reason}});
    Json out = {{"method", to_string(r.method)},
                {"j_max", r.j_max},
                {"window_width", r.window_width},
                {"nuisance_degree", r.nuisance_degree},
                {"coeffs", coeffs},
                {"spread", spread},
                {"crossings", crossings},
                {"skipped", skipped},
                {"residual", r.residual},
                {"max_relative_residual", r.max_relative_residual},
                {"max_condition", r.max_condition},
                {"flags", r.flags}};
    if (r.method == IdentifyMethod::Singular) out["pair_spread"] = pair_spread;
    return out;
}

Json to_json(const StreakScore& s) {
    Json stations = Json::array();
    for (const auto& st : s.samples)
        stations.push_back(
            {{"position", point_json(st.position)}, {"kink", st.kink}, {"peak_offset", st.peak_offset}});
    return {{"line", to_json(s.line)},
            {"score", s.score},
            {"stations", s.stations},
            {"excluded", s.excluded},
            {"samples", stations}};
}

Json to_json(const ArtifactVerdict& v) {
    Json scores = Json::array();
    for (const auto& s : v.scores) scores.push_back(to_json(s));
    return {{"artifact_free", v.artifact_free},
            {"baseline", v.baseline},
            {"threshold_factor", v.threshold_factor},
            {"scores", scores}};
}

}  // namespace bhct
