#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <vector>

#include "dynperc/acceptance.hpp"
#include "dynperc/analytic.hpp"
#include "dynperc/couple.hpp"
#include "dynperc/estimate.hpp"
#include "dynperc/records.hpp"

namespace py = pybind11;
using namespace dynperc;

namespace {

// Owned block sample; estimators take it without copying.
struct BlockSet {
  ModelParams params;
  std::vector<BlockStats> blocks;
};

RunControl control_for(int threads) {
  RunControl c;
  c.threads = threads;
  return c;
}

template <class F>
py::array_t<double> column(const BlockSet& set, F f) {
  py::array_t<double> out(static_cast<py::ssize_t>(set.blocks.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < set.blocks.size(); ++i) view(static_cast<py::ssize_t>(i)) = static_cast<double>(f(set.blocks[i]));
  return out;
}

py::dict estimate_dict(const Estimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["stderr"] = e.std_error;
  d["n"] = e.n;
  d["method"] = std::string(to_string(e.method));
  d["error_method"] = e.error_method;
  d["ess"] = e.ess ? py::cast(*e.ess) : py::none();
  d["warnings"] = e.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dynperc, m) {
  m.doc() = "Exact Monte Carlo for lambda-biased walks in a refreshing bond-percolation environment";
  m.attr("__version__") = std::string(version());

  py::register_exception<CensoredError>(m, "CensoredError", PyExc_RuntimeError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<int, double, double, double>(), py::arg("d"), py::arg("p"), py::arg("mu"), py::arg("lam"))
      .def_property_readonly("d", &ModelParams::d)
      .def_property_readonly("p", &ModelParams::p)
      .def_property_readonly("mu", &ModelParams::mu)
      .def_property_readonly("lam", &ModelParams::lambda)
      .def("with_lambda", &ModelParams::with_lambda, py::arg("lam"))
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; })
      .def("__repr__", [](const ModelParams& p) { return "ModelParams(" + to_string(p) + ")"; });

  m.def("z_lambda", py::overload_cast<const ModelParams&>(&z_lambda), py::arg("params"));
  m.def("jump_probabilities", &jump_probabilities, py::arg("params"),
        "Attempt probabilities in the order +e1, -e1, +e2, -e2, ...");
  m.def(
      "sample_direction",
      [](const ModelParams& p, double u) {
        const Direction dir = sample_direction(p, u);
        return py::make_tuple(dir.axis, dir.sign);
      },
      py::arg("params"), py::arg("u"), "(axis, sign) with axis 0 the bias axis");

  // analytic
  m.def("speed_totally_asymmetric_1d", &speed_totally_asymmetric_1d, py::arg("p"), py::arg("mu"));
  m.def("asymptotic_speed", &asymptotic_speed, py::arg("params"));
  m.def("derivative_constant", &derivative_constant, py::arg("d"), py::arg("p"), py::arg("mu"));
  m.def("speed_static_full_lattice", &speed_static_full_lattice, py::arg("params"));
  m.def(
      "classify_regime",
      [](double p, double mu) {
        const auto v = classify_regime(p, mu);
        return py::make_tuple(std::string(to_string(v.verdict)), v.discriminant);
      },
      py::arg("p"), py::arg("mu"), "(verdict, mu^2 - p(1-p))");
  m.def(
      "coupling_rates",
      [](const ModelParams& p, double eps) {
        const auto r = coupling_rates(p, eps);
        py::dict d;
        d["good"] = r.good;
        d["bad"] = r.bad;
        d["very_bad"] = r.very_bad;
        d["residual"] = r.residual;
        return d;
      },
      py::arg("params"), py::arg("eps"));

  // blocks
  py::class_<BlockSet>(m, "BlockSet")
      .def_readonly("params", &BlockSet::params)
      .def("__len__", [](const BlockSet& s) { return s.blocks.size(); })
      .def("arrays", [](const BlockSet& s) {
        py::dict d;
        d["tau"] = column(s, [](const BlockStats& b) { return b.tau; });
        d["x1"] = column(s, [](const BlockStats& b) { return b.x1(); });
        d["right"] = column(s, [](const BlockStats& b) { return b.right; });
        d["left"] = column(s, [](const BlockStats& b) { return b.left; });
        d["right_attempts"] = column(s, [](const BlockStats& b) { return b.right_attempts; });
        d["left_attempts"] = column(s, [](const BlockStats& b) { return b.left_attempts; });
        d["jumps"] = column(s, [](const BlockStats& b) { return b.jumps; });
        d["attempts"] = column(s, [](const BlockStats& b) { return b.attempts; });
        return d;
      });

  m.def(
      "simulate_blocks",
      [](const ModelParams& p, std::uint64_t n, std::uint64_t seed, int threads) {
        BlockSet s{p, {}};
        {
          py::gil_scoped_release release;
          s.blocks = block_sequence(p, n, seed, {}, control_for(threads));
        }
        return s;
      },
      py::arg("params"), py::arg("n"), py::arg("seed"), py::arg("threads") = 0,
      "n independent regeneration blocks; block i uses stream (seed, blocks, i)");

  m.def("estimate_speed_direct", [](const BlockSet& s) { return estimate_dict(estimate_speed_direct(s.blocks)); });
  m.def(
      "estimate_sigma2", [](const BlockSet& s, std::uint64_t seed) { return estimate_dict(estimate_sigma2(s.blocks, seed)); },
      py::arg("blocks"), py::arg("seed") = 0);
  m.def(
      "estimate_derivative_formula",
      [](const BlockSet& s, std::uint64_t seed) {
        return estimate_dict(estimate_derivative_formula(s.blocks, s.params, seed));
      },
      py::arg("blocks"), py::arg("seed") = 0);
  m.def(
      "estimate_speed_importance",
      [](const BlockSet& s, double lam) {
        if (s.params.lambda() != 0.0) throw py::value_error("importance sampling needs blocks simulated at lam = 0");
        return estimate_dict(estimate_speed_importance(s.blocks, s.params.with_lambda(lam)));
      },
      py::arg("blocks"), py::arg("lam"));
  m.def(
      "speed_curve",
      [](const BlockSet& s, const std::vector<double>& lambdas) {
        if (s.params.lambda() != 0.0) throw py::value_error("the curve needs blocks simulated at lam = 0");
        const auto curve = speed_curve_from_unbiased(make_histogram(s.blocks), mean_tau(s.blocks), s.params.d(),
                                                     s.params.p(), s.params.mu(), lambdas);
        py::list out;
        for (const auto& pt : curve) {
          py::dict d;
          d["lam"] = pt.lambda;
          d["speed"] = estimate_dict(pt.speed);
          d["derivative"] = estimate_dict(pt.derivative);
          out.append(d);
        }
        return out;
      },
      py::arg("blocks"), py::arg("lambdas"));
  m.def(
      "check_clt",
      [](const BlockSet& s, std::uint64_t group_size) {
        const auto r = check_clt(s.blocks, group_size);
        py::dict d;
        d["groups"] = r.groups;
        d["ks_statistic"] = r.ks_statistic;
        d["ks_p_value"] = r.ks_p_value;
        d["skewness"] = r.skewness;
        d["skewness_error"] = r.skewness_error;
        d["excess_kurtosis"] = r.excess_kurtosis;
        return d;
      },
      py::arg("blocks"), py::arg("group_size") = kDefaultGroupSize);

  m.def(
      "fit_tail_exponent",
      [](const std::vector<double>& x, std::uint64_t seed) {
        const auto f = fit_tail_exponent(x, seed);
        py::dict d;
        d["slope"] = f.slope;
        d["stderr"] = f.std_error;
        d["lower"] = f.lower;
        d["upper"] = f.upper;
        d["points"] = f.points;
        return d;
      },
      py::arg("samples"), py::arg("seed") = 0);

  // fixed-horizon identities
  m.def(
      "check_martingale_identity",
      [](const ModelParams& p, double horizon, std::uint64_t n, std::uint64_t seed, int threads) {
        Estimate e;
        {
          py::gil_scoped_release release;
          e = check_martingale_identity(p, horizon, n, seed, {}, control_for(threads));
        }
        return estimate_dict(e);
      },
      py::arg("params"), py::arg("horizon"), py::arg("n"), py::arg("seed"), py::arg("threads") = 0);
  m.def(
      "check_orthogonality",
      [](const ModelParams& p, double horizon, std::uint64_t n, std::uint64_t seed, int threads) {
        Estimate e;
        {
          py::gil_scoped_release release;
          e = check_orthogonality(p, horizon, n, seed, {}, control_for(threads));
        }
        return estimate_dict(e);
      },
      py::arg("params"), py::arg("horizon"), py::arg("n"), py::arg("seed"), py::arg("threads") = 0);

  // couplings
  m.def(
      "estimate_derivative_coupled",
      [](const ModelParams& p, double eps, std::uint64_t n, std::uint64_t seed, int threads) {
        Estimate e;
        {
          py::gil_scoped_release release;
          e = estimate_derivative_coupled(p, eps, n, seed, {}, control_for(threads));
        }
        return estimate_dict(e);
      },
      py::arg("params"), py::arg("eps"), py::arg("n"), py::arg("seed"), py::arg("threads") = 0);
  m.def(
      "estimate_speed_anchored",
      [](const ModelParams& p, std::uint64_t n, std::uint64_t seed, int threads) {
        Estimate e;
        {
          py::gil_scoped_release release;
          e = estimate_speed_anchored(p, n, seed, {}, control_for(threads));
        }
        return estimate_dict(e);
      },
      py::arg("params"), py::arg("n"), py::arg("seed"), py::arg("threads") = 0);
  m.def(
      "monotone_pairs_1d",
      [](double p, double mu, double l1, double l2, std::uint64_t n, std::uint64_t seed, int threads) {
        MonotoneSummary s;
        {
          py::gil_scoped_release release;
          s = monotone_pairs_1d(p, mu, l1, l2, n, seed, {}, control_for(threads));
        }
        py::dict d;
        d["blocks"] = s.blocks;
        d["ordered"] = s.ordered;
        d["strictly_ahead"] = s.strictly_ahead;
        d["mean_gap"] = estimate_dict(s.mean_gap);
        d["mean_tau"] = s.mean_tau;
        return d;
      },
      py::arg("p"), py::arg("mu"), py::arg("lam1"), py::arg("lam2"), py::arg("n"), py::arg("seed"),
      py::arg("threads") = 0);
  m.def("monotone_separation_bound", &monotone_separation_bound, py::arg("mu"), py::arg("lam1"), py::arg("lam2"));

  // acceptance
  m.def("criterion_names", [] {
    std::vector<std::string> out;
    for (int i = 1; i <= kCriteria; ++i) out.emplace_back(criterion_name(i));
    return out;
  });
  m.def(
      "run_criterion",
      [](const std::string& name, std::uint64_t seed, int threads) {
        const auto ids = select_criteria(name);
        if (ids.size() != 1) throw py::value_error("run_criterion takes a single criterion");
        SuiteOptions opts;
        opts.seed = seed;
        opts.threads = threads;
        CriterionResult r;
        {
          py::gil_scoped_release release;
          r = run_criterion(ids.front(), opts);
        }
        py::dict d;
        d["id"] = r.id;
        d["name"] = r.name;
        d["verdict"] = std::string(to_string(r.verdict));
        d["detail"] = r.detail;
        d["seconds"] = r.seconds;
        return d;
      },
      py::arg("name"), py::arg("seed") = SuiteOptions{}.seed, py::arg("threads") = 0);
}
