#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vantage/cli.hpp"
#include "vantage/error.hpp"
#include "vantage/gain.hpp"
#include "vantage/grid.hpp"
#include "vantage/planner.hpp"
#include "vantage/rfa.hpp"
#include "vantage/scenes.hpp"
#include "vantage/visibility.hpp"

namespace py = pybind11;
using namespace vantage;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GridGeometry geometry_of(const py::array& a, double dx) {
  if (a.ndim() != 2 && a.ndim() != 3) throw Error(ErrorCode::invalid_argument, "expected a 2-D or 3-D array");
  std::vector<int> shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  return GridGeometry(shape, dx);
}

ScalarField to_field(const Array& a, double dx) {
  const auto g = geometry_of(a, dx);
  return ScalarField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const ScalarField& f) {
  std::vector<py::ssize_t> shape;
  for (int s : f.geometry().shape()) shape.push_back(s);
  Array out(shape);
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

Vantage to_vantage(const std::vector<int>& v) {
  if (v.size() < 2 || v.size() > 3) throw Error(ErrorCode::invalid_vantage, "vantage needs 2 or 3 indices");
  return Vantage{{v[0], v[1], v.size() == 3 ? v[2] : 0}};
}

std::vector<int> from_vantage(const Vantage& v, int dim) {
  return std::vector<int>(v.node.begin(), v.node.begin() + dim);
}

GainMode mode_of(const std::string& s) {
  if (s == "surveillance") return GainMode::surveillance;
  if (s == "exploration") return GainMode::exploration;
  throw Error(ErrorCode::invalid_argument, "unknown mode " + s);
}

VisibilityMethod method_of(const std::string& s) {
  if (s == "sweep") return VisibilityMethod::sweep;
  if (s == "ray_march") return VisibilityMethod::ray_march;
  throw Error(ErrorCode::invalid_argument, "unknown method " + s);
}

ExplorationState state_of(const OccupancyMap& map, const std::vector<std::vector<int>>& vantages) {
  auto state = ExplorationState::empty(map.geometry());
  for (const auto& v : vantages) state = observe(map, state, to_vantage(v), default_eps(map.geometry()));
  return state;
}

}  // namespace

PYBIND11_MODULE(_vantage, m) {
  m.doc() = "Visibility-based vantage planning on level-set maps";

  py::register_exception<Error>(m, "VantageError", PyExc_RuntimeError);

  m.def(
      "signed_distance",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> free, double dx) {
        const auto g = geometry_of(free, dx);
        const auto map = signed_distance(std::span<const std::uint8_t>(free.data(), free.size()), g);
        return to_array(map.phi());
      },
      py::arg("free"), py::arg("dx") = 1.0, "Signed distance to the obstacle boundary, positive in free space.");

  m.def(
      "visibility",
      [](const Array& phi, const std::vector<int>& x, double dx, const std::string& method) {
        const OccupancyMap map(to_field(phi, dx));
        return to_array(visibility_field(map, to_vantage(x), method_of(method)));
      },
      py::arg("phi"), py::arg("vantage"), py::arg("dx") = 1.0, py::arg("method") = "sweep");

  m.def(
      "observe",
      [](const Array& phi, const std::vector<std::vector<int>>& vantages, double dx) {
        const OccupancyMap map(to_field(phi, dx));
        const auto state = state_of(map, vantages);
        return py::make_tuple(to_array(state.psi_cum()), to_array(state.boundary()),
                              residual(state.psi_cum(), map));
      },
      py::arg("phi"), py::arg("vantages"), py::arg("dx") = 1.0,
      "Returns (psi_cum, shadow_boundary, residual) after observing from every vantage.");

  m.def(
      "gain_field",
      [](const Array& phi, const std::vector<std::vector<int>>& vantages, const std::string& mode, double dx,
         unsigned workers) {
        const OccupancyMap map(to_field(phi, dx));
        const auto state = state_of(map, vantages);
        py::gil_scoped_release release;
        auto field = exact_gain_field(map, state, mode_of(mode), GainOptions{workers});
        py::gil_scoped_acquire acquire;
        return to_array(field.values);
      },
      py::arg("phi"), py::arg("vantages"), py::arg("mode") = "surveillance", py::arg("dx") = 1.0,
      py::arg("workers") = 1u);

  m.def(
      "run_episode",
      [](const Array& phi, const std::vector<int>& x0, const std::string& estimator, const std::string& mode,
         double eps_gain, double delta_residual, int max_steps, std::uint64_t seed, double dx, unsigned workers) {
        const OccupancyMap map(to_field(phi, dx));
        auto est = make_estimator(estimator, mode_of(mode), GainOptions{workers}, std::filesystem::temp_directory_path());
        const StopRule stop{eps_gain, delta_residual, max_steps};
        PlanTrace trace;
        {
          py::gil_scoped_release release;
          trace = run_episode(map, *est, to_vantage(x0), stop, seed);
        }
        py::dict out;
        py::list vs;
        for (const auto& v : trace.vantages()) vs.append(from_vantage(v, map.geometry().dim()));
        out["vantages"] = vs;
        out["residuals"] = trace.residuals();
        std::vector<double> gains;
        for (const auto& s : trace.steps) gains.push_back(s.max_gain);
        out["max_gains"] = gains;
        out["stop_reason"] = to_string(trace.stop);
        return out;
      },
      py::arg("phi"), py::arg("x0"), py::arg("estimator") = "exact", py::arg("mode") = "surveillance",
      py::arg("eps_gain") = 1e-3, py::arg("delta_residual") = 1e-3, py::arg("max_steps") = 100,
      py::arg("seed") = 0, py::arg("dx") = 1.0, py::arg("workers") = 1u);

  m.def(
      "generate_scene",
      [](const std::string& family, const std::vector<int>& shape, std::uint64_t seed) {
        const auto recipe = SceneRecipe::defaults(scene_family_from_string(family), shape, seed);
        const auto mask = generate_scene(recipe);
        std::vector<py::ssize_t> s(shape.begin(), shape.end());
        py::array_t<bool> out(s);
        std::copy(mask.begin(), mask.end(), out.mutable_data());
        return out;
      },
      py::arg("family"), py::arg("shape"), py::arg("seed") = 0, "Boolean free-space mask from a scene recipe.");

  m.def(
      "read_rfa", [](const std::filesystem::path& p) { return to_array(read_rfa(p)); }, py::arg("path"));
  m.def(
      "write_rfa", [](const Array& a, const std::filesystem::path& p, double dx) { write_rfa(to_field(a, dx), p); },
      py::arg("array"), py::arg("path"), py::arg("dx") = 1.0);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool and returns (exit_code, stdout, stderr).");
}
