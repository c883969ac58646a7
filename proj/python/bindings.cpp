#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "sscb/bootstrap.hpp"
#include "sscb/cli.hpp"
#include "sscb/errors.hpp"
#include "sscb/operators.hpp"
#include "sscb/rcps.hpp"
#include "sscb/reconstruct.hpp"
#include "sscb/scores.hpp"
#include "sscb/simdata.hpp"
#include "sscb/transforms.hpp"

namespace py = pybind11;
using namespace sscb;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

RealField to_real(const RealArray& a) {
  if (a.ndim() != 2) throw DimensionMismatchError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return RealField(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

ComplexField to_complex(const ComplexArray& a) {
  if (a.ndim() != 2) throw DimensionMismatchError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return ComplexField(rows, cols, std::vector<Complex>(a.data(), a.data() + rows * cols));
}

RealArray from_real(const RealField& f) {
  RealArray out({f.rows(), f.cols()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

ComplexArray from_complex(const ComplexField& f) {
  ComplexArray out({f.rows(), f.cols()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

std::size_t square_size(const ComplexField& g) {
  if (g.rows() != g.cols()) throw DimensionMismatchError("expected a square field");
  return g.rows();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-supervised conformal uncertainty quantification for mass mapping";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionMismatchError>(m, "DimensionMismatchError", base.ptr());
  py::register_exception<InvalidGridError>(m, "InvalidGridError", base.ptr());
  py::register_exception<CalibrationInfeasibleError>(m, "CalibrationInfeasibleError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.attr("DEFAULT_SMOOTHING") = kDefaultSmoothingPixels;

  m.def("forward", [](const RealArray& kappa) {
    const RealField x = to_real(kappa);
    if (x.rows() != x.cols()) throw DimensionMismatchError("expected a square field");
    return from_complex(MassMappingOperator(x.rows()).forward(x));
  }, py::arg("kappa"), "Noiseless shear A kappa.");

  m.def("adjoint", [](const ComplexArray& gamma) {
    const ComplexField g = to_complex(gamma);
    return from_real(MassMappingOperator(square_size(g)).adjoint(g));
  }, py::arg("gamma"), "Real adjoint, which is also the pseudo-inverse.");

  m.def("kaiser_squires", [](const ComplexArray& gamma, double sigma_smooth) {
    const ComplexField g = to_complex(gamma);
    auto op = std::make_shared<const MassMappingOperator>(square_size(g));
    return from_real(KaiserSquires(op, KaiserSquiresConfig{sigma_smooth}).reconstruct(g));
  }, py::arg("gamma"), py::arg("sigma_smooth") = kDefaultSmoothingPixels);

  m.def("simulate_convergence", [](std::size_t n, double beta, double k0, std::uint64_t seed) {
    return from_real(simulate_convergence(GrfConfig{n, beta, k0, seed}));
  }, py::arg("n") = 64, py::arg("beta") = 2.0, py::arg("k0") = 1.0, py::arg("seed") = 0);

  m.def("make_observation", [](const RealArray& kappa, double sigma, std::uint64_t seed) {
    const RealField x = to_real(kappa);
    if (x.rows() != x.cols()) throw DimensionMismatchError("expected a square field");
    Rng rng(seed);
    return from_complex(make_observation(x, MassMappingOperator(x.rows()), GaussianNoiseModel(sigma), rng));
  }, py::arg("kappa"), py::arg("sigma"), py::arg("seed") = 0);

  py::class_<TransformSpec>(m, "TransformSpec")
      .def(py::init<>())
      .def_readwrite("flip_h", &TransformSpec::flip_h)
      .def_readwrite("flip_v", &TransformSpec::flip_v)
      .def_readwrite("rot_quarter", &TransformSpec::rot_quarter)
      .def_readwrite("shift_dx", &TransformSpec::shift_dx)
      .def_readwrite("shift_dy", &TransformSpec::shift_dy)
      .def_readwrite("low_threshold", &TransformSpec::low_threshold)
      .def_readwrite("high_threshold", &TransformSpec::high_threshold)
      .def_readwrite("attenuation", &TransformSpec::attenuation)
      .def("__eq__", [](const TransformSpec& a, const TransformSpec& b) { return a == b; });

  m.def("identity_transform", &identity_transform, py::arg("n"));
  m.def("sample_transform", [](std::size_t n, std::uint64_t seed) {
    TransformSamplerConfig cfg;
    cfg.n = n;
    Rng rng(seed);
    return sample_transform(cfg, rng);
  }, py::arg("n") = 64, py::arg("seed") = 0);
  m.def("apply_transform", [](const TransformSpec& t, const RealArray& x) {
    return from_real(apply_transform(t, to_real(x)));
  }, py::arg("spec"), py::arg("x"));
  m.def("invert_transform", [](const TransformSpec& t, const RealArray& x) {
    return from_real(invert_transform(t, to_real(x)));
  }, py::arg("spec"), py::arg("x"));

  m.def("score", [](const std::string& kind, const RealArray& a, const RealArray& b) {
    const RealField xa = to_real(a);
    if (xa.rows() != xa.cols()) throw DimensionMismatchError("expected a square field");
    return score(score_kind_from_string(kind), xa, to_real(b), MassMappingOperator(xa.rows()));
  }, py::arg("kind"), py::arg("x_a"), py::arg("x_b"));

  m.def("sure", [](const std::string& kind, const ComplexArray& gamma, double sigma,
                   std::size_t n_probes, std::uint64_t seed, double sigma_smooth) {
    const ComplexField g = to_complex(gamma);
    auto op = std::make_shared<const MassMappingOperator>(square_size(g));
    const KaiserSquires ks(op, KaiserSquiresConfig{sigma_smooth});
    SureConfig cfg;
    cfg.n_probes = n_probes;
    Rng rng(seed);
    return sure(score_kind_from_string(kind), g.to_components(), ks, *op, GaussianNoiseModel(sigma),
                cfg, rng);
  }, py::arg("kind"), py::arg("gamma"), py::arg("sigma"), py::arg("n_probes") = 16,
     py::arg("seed") = 0, py::arg("sigma_smooth") = kDefaultSmoothingPixels);

  m.def("bootstrap", [](const ComplexArray& gamma, double sigma, const std::string& mode,
                        std::size_t n_samples, std::uint64_t seed, const std::string& kind,
                        std::size_t workers) {
    const ComplexField g = to_complex(gamma);
    const std::size_t n = square_size(g);
    auto op = std::make_shared<const MassMappingOperator>(n);
    const KaiserSquires ks(op);
    TransformSamplerConfig sampler;
    sampler.n = n;
    BootstrapConfig cfg;
    cfg.n_samples = n_samples;
    cfg.mode = bootstrap_mode_from_string(mode);
    cfg.seed = seed;
    cfg.score_kind = score_kind_from_string(kind);
    cfg.workers = workers;
    BootstrapSummary s;
    {
      py::gil_scoped_release release;
      s = run_bootstrap(g.to_components(), ks, *op, GaussianNoiseModel(sigma), sampler, cfg);
    }
    return py::make_tuple(py::array_t<double>(s.scores.size(), s.scores.data()), from_real(s.estimate));
  }, py::arg("gamma"), py::arg("sigma"), py::arg("mode") = "equivariant", py::arg("n_samples") = 100,
     py::arg("seed") = 0, py::arg("kind") = "measurement", py::arg("workers") = 1,
     "Returns (scores, estimate).");

  m.def("bootstrap_quantile", [](const std::vector<double>& scores, double alpha) {
    return bootstrap_quantile(scores, alpha);
  }, py::arg("scores"), py::arg("alpha"));

  m.def("binomial_cdf", &binomial_cdf, py::arg("k"), py::arg("n"), py::arg("p"));
  m.def("binomial_ucb", &binomial_ucb, py::arg("r_hat"), py::arg("n"), py::arg("delta"));
  m.def("empirical_risk", [](const std::vector<double>& s, const std::vector<double>& q, double lambda) {
    return empirical_risk(s, q, lambda);
  }, py::arg("scores"), py::arg("quantiles"), py::arg("lam"));
  m.def("evaluate_coverage", [](const std::vector<double>& s, const std::vector<double>& q, double lambda) {
    return evaluate_coverage(s, q, lambda);
  }, py::arg("scores"), py::arg("quantiles"), py::arg("lam"));
  m.def("calibrate_lambda", [](const std::vector<double>& s, const std::vector<double>& q,
                               double alpha, double delta, std::size_t grid_points) {
    RcpsConfig cfg;
    cfg.alpha = alpha;
    cfg.delta = delta;
    cfg.lambda_grid = log_lambda_grid(1e-2, 1e2, grid_points);
    const CalibrationResult r = calibrate_lambda(s, q, cfg);
    py::dict d;
    d["alpha"] = r.alpha;
    d["delta"] = r.delta;
    d["lambda_star"] = r.lambda_star;
    d["empirical_risk"] = r.empirical_risk;
    d["ucb"] = r.ucb;
    d["n_cal"] = r.n_calibration;
    return d;
  }, py::arg("scores"), py::arg("quantiles"), py::arg("alpha") = 0.1, py::arg("delta") = 0.1,
     py::arg("grid_points") = 400);

  m.def("cli", [](const std::vector<std::string>& args) {
    py::gil_scoped_release release;
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    py::gil_scoped_acquire acquire;
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a CLI command; returns (exit_code, stdout, stderr).");
}
