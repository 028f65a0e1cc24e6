#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nsr/certifier.hpp"
#include "nsr/config.hpp"
#include "nsr/cover.hpp"
#include "nsr/mlp.hpp"
#include "nsr/system.hpp"
#include "nsr/trainer.hpp"

namespace py = pybind11;
using namespace nsr;

namespace {

py::dict condition_dict(const ConditionResult& c) {
  py::dict d;
  d["id"] = c.id;
  d["name"] = c.name;
  d["pass"] = c.pass;
  d["margin"] = c.margin;
  d["checked"] = c.checked;
  d["violations"] = c.violations;
  d["lhs"] = c.lhs;
  d["rhs"] = c.rhs;
  return d;
}

TrainConfig validity_config(double eta, double gamma, double e_state, double e_input) {
  TrainConfig c;
  c.eta = eta;
  c.gamma = gamma;
  c.eps = gamma;
  c.e_state = e_state;
  c.e_input = e_input;
  return c;
}

// Certificate of saved networks against a config file.
CertReport certify_files(const std::string& config, const std::string& v_path,
                         const std::string& k_path) {
  const RunConfig rc = load_config(config);
  const Mlp V = load(v_path, "V");
  const Mlp K = load(k_path, "K");
  const JointDataset ds = build_joint_dataset(rc.target, rc.source, rc.train.joint());
  const DatasetLabels labels = label_dataset(ds, rc.target, rc.source, K, rc.train);
  return full_certificate(ds, labels, V, K, rc.target, rc.source, rc.train);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural simulation relations: certificate arithmetic, grids and networks";

  py::register_exception<Error>(m, "NsrError", PyExc_ValueError);

  py::class_<LipschitzConstants>(m, "LipschitzConstants")
      .def_readonly("x", &LipschitzConstants::x)
      .def_readonly("u", &LipschitzConstants::u)
      .def_readonly("h", &LipschitzConstants::h);

  py::class_<SystemDef>(m, "System")
      .def_readonly("name", &SystemDef::name)
      .def_readonly("n", &SystemDef::n)
      .def_readonly("m", &SystemDef::m)
      .def_readonly("l", &SystemDef::l)
      .def_readonly("lipschitz", &SystemDef::lipschitz)
      .def("step", [](const SystemDef& s, const Vec& x, const Vec& u) { return s.step(x, u); })
      .def("output", [](const SystemDef& s, const Vec& x) { return s.output(x); })
      .def("state_box", [](const SystemDef& s) { return py::make_tuple(s.state_set.lb, s.state_set.ub); })
      .def("__repr__", [](const SystemDef& s) { return describe(s); });

  m.def("builtin_system", &builtin_system, py::arg("name"));
  m.def("builtin_system_names", &builtin_system_names);

  m.def(
      "check_validity",
      [](const SystemDef& target, const SystemDef& source, double L_V, double L_K, double eta,
         double gamma, double e_state, double e_input) {
        const ValidityResult r = check_validity(target.lipschitz, source.lipschitz, L_V, L_K,
                                                validity_config(eta, gamma, e_state, e_input));
        py::dict d;
        d["11"] = condition_dict(r.c11);
        d["12"] = condition_dict(r.c12);
        d["13"] = condition_dict(r.c13);
        return d;
      },
      py::arg("target"), py::arg("source"), py::arg("L_V"), py::arg("L_K"), py::arg("eta"),
      py::arg("gamma"), py::arg("e_state"), py::arg("e_input"));

  m.def(
      "precheck",
      [](const SystemDef& target, const SystemDef& source, double L_V_max, double L_K_max,
         double eta, double gamma, double e_input) {
        const PrecheckReport r = precheck(target.lipschitz, source.lipschitz,
                                          validity_config(eta, gamma, 1.0, e_input), L_V_max, L_K_max);
        py::dict d;
        d["e_max_11"] = r.e_max_11;
        d["e_max_12"] = r.e_max_12;
        d["e_max_13"] = r.e_max_13;
        d["e_max"] = r.e_max;
        d["feasible"] = r.feasible;
        return d;
      },
      py::arg("target"), py::arg("source"), py::arg("L_V_max"), py::arg("L_K_max"),
      py::arg("eta"), py::arg("gamma"), py::arg("e_input"));

  m.def(
      "joint_count",
      [](const SystemDef& target, const SystemDef& source, double eps, double e_state,
         double e_input) {
        const JointCount c = analytic_joint_count(target, source, {eps, e_state, e_input});
        return py::make_tuple(static_cast<double>(c.unfiltered), static_cast<double>(c.filtered));
      },
      py::arg("target"), py::arg("source"), py::arg("eps"), py::arg("e_state"),
      py::arg("e_input"));

  m.def(
      "nearest_center",
      [](const Vec& lb, const Vec& ub, double e, const Vec& t) {
        return nearest_center(cover(Box(lb, ub), e), t).second;
      },
      py::arg("lb"), py::arg("ub"), py::arg("e"), py::arg("t"));

  py::class_<Mlp>(m, "Mlp")
      .def_readonly("role", &Mlp::role)
      .def_property_readonly("layer_dims", &Mlp::layer_dims)
      .def("__call__", [](const Mlp& net, const Vec& x) { return forward(net, x); })
      .def("lipschitz_upper_bound", &lipschitz_upper_bound)
      .def("to_text", [](const Mlp& net) { return to_text(net); });

  m.def(
      "make_mlp",
      [](const std::vector<std::size_t>& dims, const std::string& head, std::uint64_t seed) {
        return make_mlp(dims, parse_head(head), seed);
      },
      py::arg("dims"), py::arg("head") = "sigmoid", py::arg("seed") = 0);
  m.def(
      "load_mlp", [](const std::string& path) { return load(path); }, py::arg("path"));

  m.def(
      "certify",
      [](const std::string& config, const std::string& v_path, const std::string& k_path) {
        return certify_files(config, v_path, k_path).to_text();
      },
      py::arg("config"), py::arg("v"), py::arg("k"),
      "Certificate text for saved V and K checkpoints under a config file.");
  m.def(
      "config_hash", [](const std::string& path) { return load_config(path).hash(); },
      py::arg("path"));
}
