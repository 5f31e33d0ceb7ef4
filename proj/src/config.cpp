#include "bhct/config.hpp"

#include "bhct/errors.hpp"

#include <set>
#include <sstream>

namespace bhct {

namespace {

// Typed access to one JSON object with the field path kept for messages.
class Node {
public:
    Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": " + msg);
    }
    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!ok.count(it.key())) throw ConfigError(sub(it.key()) + ": unknown field");
    }

    const Json& raw(const std::string& key) const {
        if (!j_.contains(key)) throw ConfigError(sub(key) + ": missing required field");
        return j_.at(key);
    }

    double number(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_number()) throw ConfigError(sub(key) + ": expected a number");
        return v.get<double>();
    }
    double number(const std::string& key, double dflt) const { return has(key) ? number(key) : dflt; }

    long integer(const std::string& key, long dflt) const {
        if (!has(key)) return dflt;
        const Json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(sub(key) + ": expected an integer");
        return v.get<long>();
    }

    bool boolean(const std::string& key, bool dflt) const {
        if (!has(key)) return dflt;
        const Json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(sub(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_string()) throw ConfigError(sub(key) + ": expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& dflt) const {
        return has(key) ? string(key) : dflt;
    }

    std::vector<double> numbers(const std::string& key) const {
        const Json& v = raw(key);
        if (!v.is_array()) throw ConfigError(sub(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number())
                throw ConfigError(sub(key) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> dflt) const {
        return has(key) ? numbers(key) : dflt;
    }

    Point point(const std::string& key) const {
        const auto v = numbers(key);
        if (v.size() != 2) throw ConfigError(sub(key) + ": expected [x, y]");
        return {v[0], v[1]};
    }

    Node child(const std::string& key) const { return Node(raw(key), sub(key)); }

    const Json& json() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const Json& j_;
    std::string path_;
};

void require(bool ok, const Node& n, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(n.sub(key) + ": " + msg);
}

ConvexBody parse_body(const Node& n) {
    const std::string type = n.string("type");
    try {
        if (type == "disk") {
            n.allow({"type", "center", "radius"});
            return ConvexBody(Disk{n.point("center"), n.number("radius")});
        }
        if (type == "ellipse") {
            n.allow({"type", "center", "semi_axes", "rotation"});
            const auto ax = n.numbers("semi_axes");
            require(ax.size() == 2, n, "semi_axes", "expected [a, b]");
            return ConvexBody(Ellipse{n.point("center"), {ax[0], ax[1]}, n.number("rotation", 0.0)});
        }
        if (type == "support") {
            n.allow({"type", "a0", "cos", "sin"});
            SupportCurve c;
            c.a0 = n.number("a0");
            c.cos_coeffs = n.numbers("cos", {});
            c.sin_coeffs = n.numbers("sin", {});
            return ConvexBody(c);
        }
    } catch (const InvalidBody& e) {
        throw InvalidBody(n.path() + ": " + e.what());
    }
    throw ConfigError(n.sub("type") + ": unknown body type '" + type + "'");
}

TissueBump parse_bump(const Node& n) {
    const std::string type = n.string("type");
    if (type == "gaussian") {
        n.allow({"type", "amplitude", "sigma", "center"});
        GaussianBump b{n.number("amplitude"), n.number("sigma"), n.point("center")};
        require(b.sigma > 0.0, n, "sigma", "must be positive");
        return b;
    }
    if (type == "compact") {
        n.allow({"type", "amplitude", "radius", "center"});
        CompactBump b{n.number("amplitude"), n.number("radius"), n.point("center")};
        require(b.radius > 0.0, n, "radius", "must be positive");
        return b;
    }
    throw ConfigError(n.sub("type") + ": unknown tissue type '" + type + "'");
}

Nonlinearity parse_nonlinearity(const Node& n) {
    const std::string type = n.string("type");
    Nonlinearity f;
    if (type == "zero") {
        n.allow({"type"});
        f = ZeroNonlinearity{};
    } else if (type == "polynomial") {
        n.allow({"type", "coeffs"});
        f = Polynomial{n.numbers("coeffs")};
    } else if (type == "physical") {
        n.allow({"type", "alpha_eps"});
        f = Physical{n.number("alpha_eps")};
    } else {
        throw ConfigError(n.sub("type") + ": unknown nonlinearity '" + type + "'");
    }
    try {
        validate(f);
    } catch (const ConfigError& e) {
        throw ConfigError(n.path() + ": " + e.what());
    }
    return f;
}

Json point_json(const Point& p) { return Json::array({p.x(), p.y()}); }

Json body_json(const ConvexBody& b) {
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk>) {
                return {{"type", "disk"}, {"center", point_json(s.center)}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {{"type", "ellipse"},
                        {"center", point_json(s.center)},
                        {"semi_axes", {s.semi_axes[0], s.semi_axes[1]}},
                        {"rotation", s.rotation}};
            } else {
                return {{"type", "support"}, {"a0", s.a0}, {"cos", s.cos_coeffs}, {"sin", s.sin_coeffs}};
            }
        },
        b.shape());
}

Json bump_json(const TissueBump& b) {
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianBump>)
                return {{"type", "gaussian"},
                        {"amplitude", s.amplitude},
                        {"sigma", s.sigma},
                        {"center", point_json(s.center)}};
            else
                return {{"type", "compact"},
                        {"amplitude", s.amplitude},
                        {"radius", s.radius},
                        {"center", point_json(s.center)}};
        },
        b);
}

Json nonlinearity_json(const Nonlinearity& f) {
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Polynomial>)
                return {{"type", "polynomial"}, {"coeffs", s.coeffs}};
            else if constexpr (std::is_same_v<T, Physical>)
                return {{"type", "physical"}, {"alpha_eps", s.alpha_eps}};
            else
                return {{"type", "zero"}};
        },
        f);
}

std::string edge_name(EdgeAmplitudeSource s) { return s == EdgeAmplitudeSource::Fitted ? "fitted" : "formula"; }

}  // namespace

IdentifyOptions IdentifyConfig::options() const {
    IdentifyOptions o;
    o.j_max = j_max;
    o.window_width = window_width;
    o.nuisance_degree = nuisance_degree;
    o.edge_source = edge_amplitude;
    o.peel = peel;
    o.subtract_linear = subtract_linear;
    o.mismatch_threshold = mismatch_threshold;
    return o;
}

StreakOptions AnalyzeConfig::options() const {
    StreakOptions o;
    o.profile_half_width = profile_half_width;
    o.n_stations = n_stations;
    return o;
}

ExperimentConfig parse_config(const Json& j) {
    const Node root(j, "");
    root.allow({"schema", "scene", "grid", "nonlinearity", "noise", "identify", "analyze", "output"});
    if (root.string("schema") != kConfigSchema)
        throw ConfigError(std::string("schema: expected '") + kConfigSchema + "'");

    ExperimentConfig c;
    {
        const Node s = root.child("scene");
        s.allow({"metal", "tissue"});
        const Json& metal = s.raw("metal");
        if (!metal.is_array()) s.fail("metal: expected an array");
        for (std::size_t i = 0; i < metal.size(); ++i)
            c.scene.metal.push_back(parse_body(Node(metal[i], s.sub("metal[" + std::to_string(i) + "]"))));
        if (s.has("tissue")) {
            const Json& tissue = s.raw("tissue");
            if (!tissue.is_array()) s.fail("tissue: expected an array");
            for (std::size_t i = 0; i < tissue.size(); ++i)
                c.scene.tissue.push_back(
                    parse_bump(Node(tissue[i], s.sub("tissue[" + std::to_string(i) + "]"))));
        }
    }
    if (root.has("grid")) {
        const Node g = root.child("grid");
        g.allow({"n_s", "n_phi", "s_max", "n_x", "fov"});
        c.grid.n_s = static_cast<int>(g.integer("n_s", c.grid.n_s));
        c.grid.n_phi = static_cast<int>(g.integer("n_phi", c.grid.n_phi));
        c.grid.s_max = g.number("s_max", c.grid.s_max);
        c.image.n_x = static_cast<int>(g.integer("n_x", c.image.n_x));
        c.image.fov = g.number("fov", c.image.fov);
        require(c.grid.n_s >= 16, g, "n_s", "must be at least 16");
        require(c.grid.n_phi >= 8, g, "n_phi", "must be at least 8");
        require(c.grid.s_max > 0.0, g, "s_max", "must be positive");
        require(c.image.n_x >= 8, g, "n_x", "must be at least 8");
        require(c.image.fov > 0.0, g, "fov", "must be positive");
    }
    if (root.has("nonlinearity")) c.nonlinearity = parse_nonlinearity(root.child("nonlinearity"));
    if (root.has("noise")) {
        const Node n = root.child("noise");
        n.allow({"sigma", "seed"});
        c.noise.sigma = n.number("sigma", 0.0);
        const long seed = n.integer("seed", 0);
        require(c.noise.sigma >= 0.0, n, "sigma", "must be nonnegative");
        require(seed >= 0, n, "seed", "must be nonnegative");
        c.noise.seed = static_cast<std::uint64_t>(seed);
    }
    if (root.has("identify")) {
        const Node n = root.child("identify");
        n.allow({"method", "j_max", "window_width", "nuisance_degree", "edge_amplitude", "peel",
                 "subtract_linear", "mismatch_threshold"});
        auto& id = c.identify;
        try {
            id.method = method_from_string(n.string("method", "regression"));
        } catch (const ConfigError& e) {
            throw ConfigError(n.sub("method") + ": " + e.what());
        }
        id.j_max = static_cast<int>(n.integer("j_max", id.j_max));
        id.window_width = n.number("window_width", id.window_width);
        id.nuisance_degree = static_cast<int>(n.integer("nuisance_degree", id.nuisance_degree));
        const std::string edge = n.string("edge_amplitude", "fitted");
        require(edge == "fitted" || edge == "formula", n, "edge_amplitude",
                "expected 'fitted' or 'formula'");
        id.edge_amplitude = edge == "fitted" ? EdgeAmplitudeSource::Fitted : EdgeAmplitudeSource::Formula;
        id.peel = n.boolean("peel", id.peel);
        id.subtract_linear = n.boolean("subtract_linear", id.subtract_linear);
        id.mismatch_threshold = n.number("mismatch_threshold", id.mismatch_threshold);
        require(id.j_max >= 2 && id.j_max <= Polynomial::kMaxDegree, n, "j_max", "must lie in [2, 8]");
        require(id.window_width >= 0.0, n, "window_width", "must be nonnegative");
        require(id.nuisance_degree >= 0, n, "nuisance_degree", "must be nonnegative");
        require(id.mismatch_threshold > 0.0, n, "mismatch_threshold", "must be positive");
    }
    if (root.has("analyze")) {
        const Node n = root.child("analyze");
        n.allow({"threshold_factor", "profile_half_width", "n_stations", "baseline"});
        auto& a = c.analyze;
        a.threshold_factor = n.number("threshold_factor", a.threshold_factor);
        a.profile_half_width = n.number("profile_half_width", a.profile_half_width);
        a.n_stations = static_cast<int>(n.integer("n_stations", a.n_stations));
        if (n.has("baseline")) a.baseline = n.number("baseline");
        require(a.threshold_factor > 0.0, n, "threshold_factor", "must be positive");
        require(a.profile_half_width >= 0.0, n, "profile_half_width", "must be nonnegative");
        require(a.n_stations >= 8, n, "n_stations", "must be at least 8");
        require(!a.baseline || *a.baseline >= 0.0, n, "baseline", "must be nonnegative");
    }
    if (root.has("output")) {
        const Node n = root.child("output");
        n.allow({"dir", "png_percentiles"});
        c.output.dir = n.string("dir", c.output.dir);
        if (n.has("png_percentiles")) {
            const auto p = n.numbers("png_percentiles");
            require(p.size() == 2 && 0.0 <= p[0] && p[0] < p[1] && p[1] <= 100.0, n, "png_percentiles",
                    "expected [lo, hi] with 0 <= lo < hi <= 100");
            c.output.png_lo_percentile = p[0];
            c.output.png_hi_percentile = p[1];
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_json_file(path));
}

Json serialize_config(const ExperimentConfig& c) {
    Json metal = Json::array(), tissue = Json::array();
    for (const auto& b : c.scene.metal) metal.push_back(body_json(b));
    for (const auto& b : c.scene.tissue) tissue.push_back(bump_json(b));
    Json analyze = {{"threshold_factor", c.analyze.threshold_factor},
                    {"profile_half_width", c.analyze.profile_half_width},
                    {"n_stations", c.analyze.n_stations}};
    if (c.analyze.baseline) analyze["baseline"] = *c.analyze.baseline;
    return {{"schema", kConfigSchema},
            {"scene", {{"metal", metal}, {"tissue", tissue}}},
            {"grid",
             {{"n_s", c.grid.n_s},
              {"n_phi", c.grid.n_phi},
              {"s_max", c.grid.s_max},
              {"n_x", c.image.n_x},
              {"fov", c.image.fov}}},
            {"nonlinearity", nonlinearity_json(c.nonlinearity)},
            {"noise", {{"sigma", c.noise.sigma}, {"seed", c.noise.seed}}},
            {"identify",
             {{"method", to_string(c.identify.method)},
              {"j_max", c.identify.j_max},
              {"window_width", c.identify.window_width},
              {"nuisance_degree", c.identify.nuisance_degree},
              {"edge_amplitude", edge_name(c.identify.edge_amplitude)},
              {"peel", c.identify.peel},
              {"subtract_linear", c.identify.subtract_linear},
              {"mismatch_threshold", c.identify.mismatch_threshold}}},
            {"analyze", analyze},
            {"output",
             {{"dir", c.output.dir},
              {"png_percentiles", {c.output.png_lo_percentile, c.output.png_hi_percentile}}}}};
}

}  // namespace bhct
