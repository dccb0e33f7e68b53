// Python bindings for the core operations: ball geometry, losses, evaluation
// metrics, the synthetic data generator, the gradient checker, and the full
// command-line entry point (so Python can drive end-to-end runs).
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "hypball/cli.hpp"
#include "hypball/data.hpp"
#include "hypball/geometry.hpp"
#include "hypball/gradcheck.hpp"
#include "hypball/losses.hpp"
#include "hypball/metrics.hpp"
#include "hypball/vecmath.hpp"

namespace py = pybind11;
using namespace hypball;
using vm::Vec;

namespace {

geom::Curvature curv(double c, double max_norm_eps) { return geom::Curvature(c, max_norm_eps); }

loss::ContrastiveMode parse_mode(const std::string& mode) {
  if (mode == "bf") return loss::ContrastiveMode::kBF;
  if (mode == "att") return loss::ContrastiveMode::kAtt;
  if (mode == "ba") return loss::ContrastiveMode::kBA;
  if (mode == "none") return loss::ContrastiveMode::kNone;
  throw UsageError("contrastive mode must be one of bf | att | ba | none");
}

std::vector<geom::PoincarePoint> to_points(const std::vector<Vec>& coords,
                                           const geom::Curvature& k) {
  std::vector<geom::PoincarePoint> pts;
  pts.reserve(coords.size());
  for (const auto& v : coords) pts.push_back(geom::make_point(v, k));
  return pts;
}

metrics::ScoreSet score_set(const Vec& bonafide, const Vec& attacks) {
  metrics::ScoreSet s;
  s.bonafide = bonafide;
  s.attacks = attacks;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Poincare-ball face anti-spoofing toolkit: core operations";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ArithmeticError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  // ---- geometry ------------------------------------------------------------
  m.def("ball_radius", [](double c) { return curv(c, 1e-3).ball_radius(); }, py::arg("c"),
        "Radius 1/sqrt(c) of the curvature-c ball.");
  m.def(
      "mobius_add",
      [](const Vec& x, const Vec& y, double c, double max_norm_eps) {
        const auto k = curv(c, max_norm_eps);
        return geom::mobius_add(geom::make_point(x, k), geom::make_point(y, k)).coords;
      },
      py::arg("x"), py::arg("y"), py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Gyrovector addition of two in-ball points.");
  m.def(
      "hyp_distance",
      [](const Vec& x, const Vec& y, double c, double max_norm_eps) {
        const auto k = curv(c, max_norm_eps);
        return geom::hyp_distance(geom::make_point(x, k), geom::make_point(y, k));
      },
      py::arg("x"), py::arg("y"), py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Geodesic distance (2/sqrt(c)) * arctanh(sqrt(c) |(-x) (+) y|).");
  m.def(
      "conformal_factor",
      [](const Vec& x, double c, double max_norm_eps) {
        return geom::conformal_factor(geom::make_point(x, curv(c, max_norm_eps)));
      },
      py::arg("x"), py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Local metric scaling 2 / (1 - c |x|^2).");
  m.def(
      "exp_map",
      [](const Vec& x, const Vec& v, double c, double max_norm_eps) {
        const auto k = curv(c, max_norm_eps);
        return geom::exp_map(geom::make_point(x, k), geom::TangentVector{v}).coords;
      },
      py::arg("x"), py::arg("v"), py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Exponential map of tangent vector v at base point x.");
  m.def(
      "exp_map_origin",
      [](const Vec& v, double c, double max_norm_eps) {
        return geom::exp_map_origin(v, curv(c, max_norm_eps)).coords;
      },
      py::arg("v"), py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Exponential map at the origin: lifts a Euclidean feature onto the ball.");
  m.def(
      "log_map_origin",
      [](const Vec& y, double c, double max_norm_eps) {
        return geom::log_map_origin(geom::make_point(y, curv(c, max_norm_eps))).coords;
      },
      py::arg("y"), py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Inverse of exp_map_origin.");
  m.def(
      "clip_to_ball",
      [](const Vec& raw, double alpha, double c, double max_norm_eps) {
        return geom::clip_to_ball(raw, alpha, curv(c, max_norm_eps)).coords;
      },
      py::arg("raw"), py::arg("alpha") = 0.1, py::arg("c") = 0.1,
      py::arg("max_norm_eps") = 1e-3,
      "Cap the norm at (1/sqrt(c)) * (1 - alpha); identity below the bound.");

  // ---- losses ----------------------------------------------------------------
  m.def(
      "binary_cross_entropy", [](double p1, int label) { return loss::hyp_bce(p1, label); },
      py::arg("p1"), py::arg("label"),
      "Clamped binary cross-entropy of the bonafide probability against label 0/1.");
  m.def(
      "contrastive_loss",
      [](const std::vector<Vec>& bonafide, const std::vector<Vec>& attacks,
         const std::string& mode, double tau, double c, double max_norm_eps) {
        const auto k = curv(c, max_norm_eps);
        return loss::contrastive_loss(to_points(bonafide, k), to_points(attacks, k),
                                      parse_mode(mode), tau);
      },
      py::arg("bonafide"), py::arg("attacks"), py::arg("mode") = "bf", py::arg("tau") = 1.0,
      py::arg("c") = 0.1, py::arg("max_norm_eps") = 1e-3,
      "Geodesic contrastive loss over ordered same-class pairs.");
  m.def(
      "distance_loss",
      [](const Vec& f_sha, const Vec& f1, const Vec& f2, int batch, int dim) {
        return loss::distance_loss(f_sha, f1, f2, batch, dim);
      },
      py::arg("f_sha"), py::arg("f1"), py::arg("f2"), py::arg("batch"), py::arg("dim"),
      "Mean squared deviation of the shared feature from both modality features.");

  // ---- metrics -----------------------------------------------------------------
  m.def(
      "roc_auc",
      [](const Vec& bonafide, const Vec& attacks) { return metrics::roc_auc(score_set(bonafide, attacks)); },
      py::arg("bonafide"), py::arg("attacks"),
      "Probability a bonafide score outranks an attack score (ties count half).");
  m.def(
      "eer",
      [](const Vec& bonafide, const Vec& attacks) { return metrics::eer(score_set(bonafide, attacks)); },
      py::arg("bonafide"), py::arg("attacks"),
      "Smallest achievable mean of the two error rates over all thresholds.");
  m.def(
      "acer",
      [](const Vec& bonafide, const Vec& attacks, double threshold) {
        const auto r = metrics::acer(score_set(bonafide, attacks), threshold);
        return py::dict(py::arg("apcer") = r.apcer, py::arg("bpcer") = r.bpcer,
                        py::arg("acer") = r.acer);
      },
      py::arg("bonafide"), py::arg("attacks"), py::arg("threshold"),
      "Attack/bonafide error rates and their average at a threshold.");
  m.def("threshold_at_bpcer", &metrics::threshold_at_bpcer, py::arg("dev_bonafide"),
        py::arg("target_bpcer"),
        "Largest threshold keeping the bonafide error rate within the target.");
  m.def(
      "hter_fixed",
      [](const Vec& bonafide, const Vec& attacks) {
        return metrics::hter_fixed(score_set(bonafide, attacks));
      },
      py::arg("bonafide"), py::arg("attacks"), "Half total error rate at the fixed 0.5 threshold.");

  // ---- synthetic data --------------------------------------------------------------
  m.def(
      "generate_synthetic",
      [](int depth, int branching, int samples_per_leaf, int bonafide_count, int latent_dim,
         int modalities, const std::vector<int>& modality_widths, double view_noise,
         std::uint64_t seed) {
        data::HierarchySpec spec;
        spec.depth = depth;
        spec.branching = branching;
        spec.samples_per_leaf = samples_per_leaf;
        spec.bonafide_count = bonafide_count;
        spec.latent_dim = latent_dim;
        spec.modalities = modalities;
        spec.modality_widths = modality_widths;
        spec.view_noise = view_noise;
        spec.seed = seed;
        const auto ds = data::generate_synthetic(spec);
        py::list out;
        for (const auto& s : ds.samples) {
          py::dict d;
          d["id"] = s.id;
          d["label"] = s.label;
          d["attack_type"] = s.attack_type;
          d["features"] = s.features;
          out.append(d);
        }
        return out;
      },
      py::arg("depth") = 2, py::arg("branching") = 2, py::arg("samples_per_leaf") = 200,
      py::arg("bonafide_count") = 800, py::arg("latent_dim") = 16, py::arg("modalities") = 1,
      py::arg("modality_widths") = std::vector<int>{16}, py::arg("view_noise") = 0.1,
      py::arg("seed") = 7,
      "Sample the hierarchical synthetic dataset; returns a list of sample dicts.");

  // ---- verification and the CLI ------------------------------------------------------
  m.def(
      "gradcheck",
      [](std::uint64_t seed, int points) {
        const auto reports = gc::run_gradcheck_suite(seed, points);
        py::dict per_op;
        for (const auto& r : reports) per_op[py::str(r.name)] = r.worst_rel;
        return py::make_tuple(gc::worst_relative_error(reports), per_op);
      },
      py::arg("seed") = 7, py::arg("points") = 20,
      "Compare analytic gradients against central differences; returns (worst, per_op).");
  m.def(
      "cli_run", [](const std::vector<std::string>& args) { return cli::run(args); },
      py::arg("args"),
      "Invoke the command-line interface in-process; returns its exit code.");
}
