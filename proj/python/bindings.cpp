#include "bhct/beamhard.hpp"
#include "bhct/config.hpp"
#include "bhct/errors.hpp"
#include "bhct/identify.hpp"
#include "bhct/io.hpp"
#include "bhct/selftest.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bhct;

namespace {

std::string report_json(const IdentifyReport& r) { return dump_canonical(to_json(r)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Beam-hardening CT laboratory core";

    static py::exception<Error> base(m, "Error");
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    static py::exception<DegenerateGeometry> geometry_error(m, "GeometryError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            config_error(e.what());
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Geometry)
                geometry_error(e.what());
            else
                base(e.what());
        }
    });

    py::class_<ConvexBody>(m, "ConvexBody")
        .def_static("disk", [](std::array<double, 2> c, double r) { return ConvexBody(Disk{{c[0], c[1]}, r}); },
                    py::arg("center"), py::arg("radius"))
        .def_static("ellipse",
                    [](std::array<double, 2> c, std::array<double, 2> axes, double rot) {
                        return ConvexBody(Ellipse{{c[0], c[1]}, axes, rot});
                    },
                    py::arg("center"), py::arg("semi_axes"), py::arg("rotation") = 0.0)
        .def("support", &ConvexBody::support)
        .def("radius_of_curvature", &ConvexBody::radius_of_curvature)
        .def("branch", &ConvexBody::branch, py::arg("sign"), py::arg("phi"));

    py::class_<GaussianBump>(m, "GaussianBump")
        .def(py::init([](double a, double sigma, std::array<double, 2> c) {
                 return GaussianBump{a, sigma, {c[0], c[1]}};
             }),
             py::arg("amplitude"), py::arg("sigma"), py::arg("center"));

    py::class_<Scene>(m, "Scene")
        .def(py::init([](std::vector<ConvexBody> metal, std::vector<GaussianBump> tissue) {
                 Scene s;
                 s.metal = std::move(metal);
                 for (auto& t : tissue) s.tissue.emplace_back(t);
                 return s;
             }),
             py::arg("metal"), py::arg("tissue") = std::vector<GaussianBump>{})
        .def_readonly("metal", &Scene::metal);

    py::class_<SinogramGrid>(m, "SinogramGrid")
        .def(py::init([](double s_max, int n_s, int n_phi) { return SinogramGrid{s_max, n_s, n_phi}; }),
             py::arg("s_max"), py::arg("n_s"), py::arg("n_phi"))
        .def_readonly("s_max", &SinogramGrid::s_max)
        .def_readonly("n_s", &SinogramGrid::n_s)
        .def_readonly("n_phi", &SinogramGrid::n_phi)
        .def("s", &SinogramGrid::s)
        .def("phi", &SinogramGrid::phi);

    py::class_<ImageGrid>(m, "ImageGrid")
        .def(py::init([](double fov, int n_x) { return ImageGrid{fov, n_x}; }), py::arg("fov"), py::arg("n_x"))
        .def_readonly("fov", &ImageGrid::fov)
        .def_readonly("n_x", &ImageGrid::n_x);

    py::class_<Polynomial>(m, "Polynomial")
        .def(py::init([](std::vector<double> c) { return Polynomial{std::move(c)}; }), py::arg("coeffs"))
        .def_readonly("coeffs", &Polynomial::coeffs);
    py::class_<Physical>(m, "Physical")
        .def(py::init([](double ae) { return Physical{ae}; }), py::arg("alpha_eps"))
        .def_readonly("alpha_eps", &Physical::alpha_eps);
    py::class_<ZeroNonlinearity>(m, "Zero").def(py::init<>());

    py::class_<Sinogram>(m, "Sinogram")
        .def_readonly("grid", &Sinogram::grid)
        .def_property_readonly("values", [](const Sinogram& g) { return Eigen::MatrixXd(g.values); })
        .def_property_readonly("role", [](const Sinogram& g) { return to_string(g.role); });

    py::class_<Image>(m, "Image")
        .def_readonly("grid", &Image::grid)
        .def_property_readonly("values", [](const Image& f) { return Eigen::MatrixXd(f.values); });

    py::class_<SynthesisResult>(m, "SynthesisResult")
        .def_readonly("p", &SynthesisResult::p)
        .def_readonly("rf", &SynthesisResult::rf)
        .def_readonly("rchi", &SynthesisResult::rchi)
        .def("p_ma", &SynthesisResult::p_ma);

    py::class_<TangentLine>(m, "TangentLine")
        .def_readonly("s", &TangentLine::s)
        .def_readonly("phi", &TangentLine::phi)
        .def_property_readonly("kind", [](const TangentLine& l) {
            return l.kind == TangentKind::Outer ? "outer" : "inner";
        });

    m.def("synthesize", &synthesize, py::arg("scene"), py::arg("nonlinearity"), py::arg("grid"));
    m.def("add_noise", &add_noise, py::arg("p"), py::arg("sigma"), py::arg("seed"));
    m.def("fbp", [](const Sinogram& p, const ImageGrid& g) { return fbp(p, g); }, py::arg("p"),
          py::arg("grid"));
    m.def("eval_nonlinearity", &eval_nonlinearity, py::arg("f"), py::arg("t"));
    m.def("taylor_of_physical",
          [](double ae, int order) { return taylor_of_physical(ae, order).coeffs; },
          py::arg("alpha_eps"), py::arg("order"));
    m.def("predict_streaks", [](const Scene& s) { return predict_streaks(s); }, py::arg("scene"));
    m.def("crossing_count", [](const Scene& s) { return scene_crossings(s).size(); }, py::arg("scene"));
    m.def("multinomial", &multinomial, py::arg("m"), py::arg("n"));
    m.def(
        "_identify_json",
        [](const Sinogram& p, const Scene& scene, const std::string& method, int j_max) {
            IdentifyOptions o;
            o.j_max = j_max;
            return report_json(identify(p, scene, method_from_string(method), o));
        },
        py::arg("p"), py::arg("scene"), py::arg("method") = "regression", py::arg("j_max") = 3);
    m.def(
        "_config_roundtrip",
        [](const std::string& text) { return dump_canonical(serialize_config(parse_config(Json::parse(text)))); },
        py::arg("text"));
    m.def(
        "selftest",
        [](int n_s) {
            SelftestOptions o;
            o.n_s = n_s;
            const auto rows = run_selftest(o);
            return py::make_tuple(all_passed(rows), format_table(rows));
        },
        py::arg("n_s") = 2048);
}
