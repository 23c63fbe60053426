// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <iostream>
#include <string>
#include <vector>

#include "ptloss/cli.hpp"
#include "ptloss/data.hpp"
#include "ptloss/equivalence.hpp"
#include "ptloss/error.hpp"
#include "ptloss/losses.hpp"
#include "ptloss/proxy.hpp"
#include "ptloss/selection.hpp"
#include "ptloss/series.hpp"

namespace py = pybind11;
using namespace ptloss;

namespace {

using Rows = std::vector<std::vector<double>>;

std::vector<ProbVector> prob_rows(const Rows& rows) {
  std::vector<ProbVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

std::vector<double> values(const ProbVector& p) { return {p.begin(), p.end()}; }

py::dict score_dict(const QualityScore& s) {
  py::dict d;
  d["total"] = s.total;
  d["distance_term"] = s.distance_term;
  d["entropy_term"] = s.entropy_term;
  return d;
}

py::dict solution_dict(const ProxySolution& s) {
  py::dict d;
  d["proxy"] = values(s.proxy);
  d["logits"] = std::vector<double>(s.logits.values().begin(), s.logits.values().end());
  d["residual_norm"] = s.residual_norm;
  d["iterations"] = s.iterations;
  d["converged"] = s.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ptloss, m) {
  m.doc() = "Perturbed KL distillation: losses, proxy teachers and coefficient search";
  m.attr("__version__") = PTLOSS_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<DegenerateTeacher>(m, "DegenerateTeacher", base.ptr());
  py::register_exception<SolverDivergence>(m, "SolverDivergence", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SearchFailure>(m, "SearchFailure", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<TrainingDivergence>(m, "TrainingDivergence", base.ptr());

  py::class_<PerturbationConfig>(m, "PerturbationConfig")
      .def(py::init<>())
      .def(py::init<Rows, bool>(), py::arg("rows"), py::arg("tie_classes") = false)
      .def_static("zero", &PerturbationConfig::zero, py::arg("classes"), py::arg("order"),
                  py::arg("tie_classes") = false)
      .def_static("tied", &PerturbationConfig::tied, py::arg("row"))
      .def_property_readonly("order", &PerturbationConfig::order)
      .def_property_readonly("tie_classes", &PerturbationConfig::tie_classes)
      .def_property_readonly("rows", &PerturbationConfig::rows)
      .def("coefficient", &PerturbationConfig::coefficient, py::arg("c"), py::arg("m"))
      .def("is_zero", &PerturbationConfig::is_zero)
      .def(py::self == py::self)
      .def("__repr__", [](const PerturbationConfig& c) {
        return "PerturbationConfig(order=" + std::to_string(c.order()) +
               ", tie_classes=" + (c.tie_classes() ? "True" : "False") + ")";
      });

  m.def("softmax", [](const std::vector<double>& z) { return values(softmax(std::span<const double>(z))); },
        py::arg("logits"));
  m.def(
      "kl_loss",
      [](const std::vector<double>& t, const std::vector<double>& s) { return kl_loss(ProbVector(t), ProbVector(s)); },
      py::arg("teacher"), py::arg("student"));
  m.def(
      "pt_loss",
      [](const std::vector<double>& t, const std::vector<double>& s, const PerturbationConfig& cfg) {
        return pt_loss(ProbVector(t), ProbVector(s), cfg);
      },
      py::arg("teacher"), py::arg("student"), py::arg("config"));
  m.def(
      "pt_loss_grad",
      [](const std::vector<double>& t, const std::vector<double>& z, const PerturbationConfig& cfg) {
        const auto e = pt_loss_grad(ProbVector(t), LogitVector(z), cfg);
        return py::make_tuple(e.value, *e.gradient);
      },
      py::arg("teacher"), py::arg("student_logits"), py::arg("config"),
      "Returns (loss, gradient with respect to the student logits).");

  m.def("maclaurin_log", &maclaurin_log, py::arg("x"), py::arg("order"));
  m.def("truncation_bound", &truncation_bound, py::arg("x"), py::arg("order"));
  m.def("required_order", &required_order, py::arg("x"), py::arg("tolerance"), py::arg("max_order") = 1'000'000);

  m.def(
      "ls_coefficients",
      [](const std::vector<double>& t, double delta, std::size_t order) {
        return ls_coefficients(ProbVector(t), delta, order);
      },
      py::arg("teacher"), py::arg("delta"), py::arg("order"));
  m.def(
      "focal_coefficients",
      [](const std::vector<double>& s, double gamma, std::size_t order) {
        return focal_coefficients(ProbVector(s), gamma, order);
      },
      py::arg("student"), py::arg("gamma"), py::arg("order"));
  m.def(
      "verify_equivalence",
      [](const std::string& method, double parameter, std::size_t order, std::size_t trials, std::uint64_t seed,
         std::size_t classes) {
        EquivalenceOptions o;
        o.parameter = parameter;
        o.order = order;
        o.trials = trials;
        o.seed = seed;
        o.classes = classes;
        const auto r = verify_equivalence(parse_equivalence_method(method), o);
        py::dict d;
        d["method"] = to_string(r.method);
        d["max_abs_deviation"] = r.max_abs_deviation;
        d["additive_constant"] = r.additive_constant;
        d["constant_error"] = r.constant_error;
        d["samples_checked"] = r.samples_checked;
        return d;
      },
      py::arg("method"), py::arg("parameter"), py::arg("order") = 200, py::arg("trials") = 100, py::arg("seed") = 0,
      py::arg("classes") = 2);

  m.def(
      "solve_proxy",
      [](const std::vector<double>& t, const PerturbationConfig& cfg, double tolerance, int max_iterations) {
        SolverConfig s;
        s.tolerance = tolerance;
        s.max_iterations = max_iterations;
        return solution_dict(solve_proxy_example(ProbVector(t), cfg, s));
      },
      py::arg("teacher"), py::arg("config"), py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 100);
  m.def(
      "solve_proxy_batch",
      [](const Rows& teachers, const PerturbationConfig& cfg) {
        const auto probs = prob_rows(teachers);
        const auto batch = solve_proxy_batch(probs, cfg);
        Rows proxies;
        for (const auto& s : batch.solutions) proxies.push_back(values(s.proxy));
        return py::make_tuple(proxies, batch.converged_fraction);
      },
      py::arg("teachers"), py::arg("config"), "Returns (proxies, converged_fraction).");

  m.def(
      "quality_score",
      [](const Rows& proxies, const Rows& labels) {
        return score_dict(quality_score(prob_rows(proxies), prob_rows(labels)));
      },
      py::arg("proxies"), py::arg("labels"));
  m.def(
      "risk_gap_terms",
      [](const Rows& probs, const Rows& reference) {
        const auto r = risk_gap_terms(prob_rows(probs), prob_rows(reference));
        py::dict d;
        d["l2_distance_mean"] = r.l2_distance_mean;
        d["entropy_sq_mean"] = r.entropy_sq_mean;
        d["tvd_mean"] = r.tvd_mean;
        return d;
      },
      py::arg("probs"), py::arg("reference"));
  m.def(
      "search_coefficients",
      [](const Rows& teacher_val, const Rows& labels, std::size_t max_order, std::size_t trials, double low,
         double high, bool tie_classes, std::uint64_t seed) {
        SearchSpec spec;
        spec.max_order = max_order;
        spec.trials_per_order = trials;
        spec.range_low = low;
        spec.range_high = high;
        spec.tie_classes = tie_classes;
        spec.seed = seed;
        const auto r = search_coefficients(prob_rows(teacher_val), prob_rows(labels), spec);
        py::dict d;
        d["best"] = r.best;
        d["score"] = score_dict(r.score);
        d["baseline_score"] = score_dict(r.baseline_score);
        d["best_order"] = r.best_order;
        d["best_trial"] = r.best_trial;
        d["discarded"] = r.discarded;
        return d;
      },
      py::arg("teacher_val"), py::arg("labels"), py::arg("max_order") = 3, py::arg("trials") = 100,
      py::arg("range_low") = -1.0, py::arg("range_high") = 10.0, py::arg("tie_classes") = false, py::arg("seed") = 0);
  m.def(
      "spearman_correlation",
      [](const std::vector<double>& x, const std::vector<double>& y) { return spearman_correlation(x, y); },
      py::arg("x"), py::arg("y"));

  m.def(
      "generate_gaussian",
      [](std::size_t classes, std::size_t dim, double sigma, std::size_t n, std::array<double, 3> split,
         std::uint64_t seed) {
        const auto spec = GaussianMixtureSpec::sample(classes, dim, sigma, seed);
        const auto data = generate(spec, n, split);
        py::dict d;
        d["means"] = spec.means;
        for (const auto& [name, s] : {std::pair<const char*, const DataSplit*>{"train", &data.train},
                                      {"validation", &data.validation},
                                      {"test", &data.test}}) {
          d[name] = py::make_tuple(s->inputs, s->labels);
        }
        Rows posterior;
        for (const auto& p : true_posteriors(spec, data.test.inputs)) posterior.push_back(values(p));
        d["test_posterior"] = posterior;
        return d;
      },
      py::arg("classes") = 3, py::arg("dim") = 30, py::arg("sigma") = 2.0, py::arg("n") = 10000,
      py::arg("split") = std::array<double, 3>{0.9, 0.05, 0.05}, py::arg("seed") = 0,
      "Returns means, (inputs, labels) per split, and the true posterior of the test split.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args, std::cout, std::cerr);
      },
      py::arg("args"), "Runs a ptloss subcommand; returns the process exit code.");
}
