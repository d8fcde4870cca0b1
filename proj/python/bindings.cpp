#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ramsel/bridge.hpp"
#include "ramsel/dataset.hpp"
#include "ramsel/error.hpp"
#include "ramsel/mc.hpp"
#include "ramsel/ridge.hpp"
#include "ramsel/screen.hpp"
#include "ramsel/synthetic.hpp"

namespace py = pybind11;
using namespace ramsel;

namespace {

ScreenConfig make_screen(std::optional<double> tau, std::optional<double> lambda) {
  if (lambda) return ScreenConfig::from_lambda(*lambda);
  return ScreenConfig::from_tau(tau.value_or(0.10));
}

std::vector<double> make_alphas(std::optional<std::vector<double>> alphas, double lo, double hi, int count) {
  if (alphas) return *alphas;
  return AlphaGrid{.lo = lo, .hi = hi, .count = count}.points();
}

py::dict screen_dict(const ScreenResult& r) {
  py::dict d;
  d["tstats"] = r.tstats;
  d["lambda"] = r.lambda;
  d["selected"] = r.selected;
  d["skipped"] = r.skipped;
  return d;
}

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<Variant> out;
  for (const auto& n : names) out.push_back(parse_variant(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_ramsel, m) {
  m.doc() = "Ridge after model selection: screening, ridge with GCV, weekly bridge nowcasts, Monte Carlo";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<DataGapError>(m, "DataGapError", data.ptr());

  m.def("normal_quantile", &normal_quantile, py::arg("p"));

  m.def(
      "screen",
      [](const Vector& y, const Matrix& officials, const Matrix& candidates, std::optional<double> tau,
         std::optional<double> lambda, unsigned threads) {
        return screen_dict(screen(y, officials, candidates, make_screen(tau, lambda), threads));
      },
      py::arg("y"), py::arg("officials"), py::arg("candidates"), py::arg("tau") = py::none(),
      py::arg("lambda_") = py::none(), py::arg("threads") = 1,
      "t-statistics of each candidate given the officials, and the indices with |t| > lambda");

  m.def("alpha_grid", [](double lo, double hi, int count) { return AlphaGrid{.lo = lo, .hi = hi, .count = count}.points(); },
        py::arg("lo") = 1e-6, py::arg("hi") = 1e2, py::arg("count") = 100);
  m.def("ridge_solve", &ridge_solve, py::arg("x"), py::arg("y"), py::arg("alpha"));
  m.def("gcv", py::overload_cast<const Matrix&, const Vector&, double>(&gcv), py::arg("x"), py::arg("y"),
        py::arg("alpha"));

  py::class_<RidgeOptions>(m, "RidgeOptions")
      .def(py::init([](bool standardize, bool penalize_intercept) {
             return RidgeOptions{standardize, penalize_intercept};
           }),
           py::arg("standardize") = true, py::arg("penalize_intercept") = true)
      .def_readwrite("standardize", &RidgeOptions::standardize)
      .def_readwrite("penalize_intercept", &RidgeOptions::penalize_intercept);

  py::class_<RidgeFit>(m, "RidgeFit")
      .def_readonly("coefficients", &RidgeFit::coefficients)
      .def_readonly("alpha", &RidgeFit::alpha)
      .def_readonly("gcv", &RidgeFit::gcv_value)
      .def_readonly("selected", &RidgeFit::selected)
      .def_property_readonly("gcv_path",
                             [](const RidgeFit& f) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& p : f.gcv_path) out.emplace_back(p.alpha, p.gcv);
                               return out;
                             })
      .def_property_readonly("screening",
                             [](const RidgeFit& f) -> py::object {
                               if (!f.screening) return py::none();
                               return screen_dict(*f.screening);
                             })
      .def("predict", &RidgeFit::predict, py::arg("x"));

  m.def(
      "gcv_minimize",
      [](const Matrix& x, const Vector& y, std::optional<std::vector<double>> alphas, const RidgeOptions& options) {
        const auto grid = make_alphas(alphas, 1e-6, 1e2, 100);
        return gcv_minimize(x, y, grid, options);
      },
      py::arg("x"), py::arg("y"), py::arg("alphas") = py::none(), py::arg("options") = RidgeOptions{});

  m.def(
      "ridge_after_selection",
      [](const Vector& y, const Matrix& officials, const Matrix& candidates, std::optional<double> tau,
         std::optional<double> lambda, std::optional<std::vector<double>> alphas, const RidgeOptions& options,
         unsigned threads) {
        const auto grid = make_alphas(alphas, 1e-6, 1e2, 100);
        return ridge_after_selection(y, officials, candidates, make_screen(tau, lambda), grid, options, threads);
      },
      py::arg("y"), py::arg("officials"), py::arg("candidates"), py::arg("tau") = py::none(),
      py::arg("lambda_") = py::none(), py::arg("alphas") = py::none(), py::arg("options") = RidgeOptions{},
      py::arg("threads") = 1,
      "Screen the candidates given the officials, then ridge with GCV on the retained columns");

  py::class_<Panel>(m, "Panel")
      .def_property_readonly("first", [](const Panel& p) { return p.first.label(); })
      .def_property_readonly("last", [](const Panel& p) { return p.last.label(); })
      .def_property_readonly("target", [](const Panel& p) { return p.target.id; })
      .def_property_readonly("series",
                             [](const Panel& p) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& s : p.predictors) out.emplace_back(s.id, to_string(s.group));
                               return out;
                             })
      .def("save", [](const Panel& p, const std::filesystem::path& data, const std::filesystem::path& meta) {
        save_panel(p, data, meta);
      });

  m.def(
      "load_panel",
      [](const std::filesystem::path& data, const std::filesystem::path& meta) { return load_panel(data, meta); },
      py::arg("data"), py::arg("metadata"));

  m.def(
      "synthetic_panel",
      [](const std::string& first, const std::string& last, int alt_informative, int alt_noise, std::uint64_t seed) {
        SyntheticPanelConfig cfg;
        cfg.first = Quarter::parse(first);
        cfg.last = Quarter::parse(last);
        cfg.alt_informative = alt_informative;
        cfg.alt_noise = alt_noise;
        cfg.seed = seed;
        return make_synthetic_panel(cfg);
      },
      py::arg("first") = "2000Q1", py::arg("last") = "2014Q4", py::arg("alt_informative") = 5,
      py::arg("alt_noise") = 15, py::arg("seed") = 1);

  m.def(
      "nowcast",
      [](const Panel& panel, const std::vector<std::string>& variants, const std::string& calendar,
         std::optional<std::string> oos_start, double tau, std::vector<int> weeks, int gap, int min_train,
         bool lagged_target, unsigned threads) {
        NowcastConfig cfg;
        cfg.screen = ScreenConfig::from_tau(tau);
        cfg.training_gap = gap;
        cfg.min_training_quarters = min_train;
        cfg.weeks = std::move(weeks);
        cfg.lagged_target = lagged_target;
        cfg.threads = threads;
        cfg.oos_start = oos_start ? Quarter::parse(*oos_start)
                                   : panel.first + (min_train + gap - 1 + (lagged_target ? gap : 0));
        const ReleaseCalendar cal = calendar == "metadata"
                                        ? ReleaseCalendar::from_panel(panel)
                                        : ReleaseCalendar::preset(parse_calendar_preset(calendar), panel);
        const auto vs = parse_variants(variants);
        const VariantTable t = compare_variants(panel, cal, vs, cfg);
        py::dict d;
        d["variants"] = variants;
        d["weeks"] = t.weeks;
        d["rmsfe"] = t.rmsfe;
        std::vector<std::string> quarters;
        for (Quarter q : t.runs.front().oos_quarters) quarters.push_back(q.label());
        d["quarters"] = quarters;
        std::vector<Matrix> nowcasts;
        for (const auto& r : t.runs) nowcasts.push_back(r.nowcasts);
        d["nowcasts"] = nowcasts;
        d["actuals"] = t.runs.front().actuals;
        return d;
      },
      py::arg("panel"),
      py::arg("variants") = std::vector<std::string>{"full_no_screen", "ridge_after_selection", "alt_only_screened",
                                                     "officials_only"},
      py::arg("calendar") = "ea", py::arg("oos_start") = py::none(), py::arg("tau") = 0.10,
      py::arg("weeks") = std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}, py::arg("gap") = 2,
      py::arg("min_train") = 12, py::arg("lagged_target") = false, py::arg("threads") = 1,
      "Recursive pseudo-real-time evaluation; returns per-week RMSFE by variant");

  m.def(
      "simulate_dgp",
      [](int n, int t, int s, double delta, const std::string& psi, std::uint64_t seed, int rows,
         std::uint64_t replication) {
        const DgpConfig cfg{.n = n, .t = t, .s = s, .delta = delta, .psi = parse_psi(psi), .seed = seed};
        const DgpSample d = simulate_dgp(cfg, rows > 0 ? rows : t, replication);
        py::dict out;
        out["y"] = d.y;
        out["z"] = d.z;
        out["x"] = d.x;
        out["beta"] = d.beta;
        out["gamma"] = d.gamma;
        return out;
      },
      py::arg("n") = 150, py::arg("t") = 100, py::arg("s") = 105, py::arg("delta") = 0.2,
      py::arg("psi") = "identity", py::arg("seed") = 0, py::arg("rows") = 0, py::arg("replication") = 0);

  m.def(
      "run_mc",
      [](int n, int t, int s, double delta, const std::string& psi, std::uint64_t seed, int replications,
         double oos_fraction, std::vector<double> fdr, std::optional<std::vector<double>> alphas, unsigned threads) {
        const DgpConfig cfg{.n = n, .t = t, .s = s, .delta = delta, .psi = parse_psi(psi), .seed = seed};
        McOptions o;
        o.replications = replications;
        o.oos_fraction = oos_fraction;
        o.fdr = std::move(fdr);
        o.alphas = make_alphas(alphas, 1e-6, 1e2, 100);
        o.threads = threads;
        const McReport r = run_mc(cfg, o);
        py::dict out;
        out["fdr"] = r.options.fdr;
        out["in_sample_mse"] = r.in_sample_mse;
        out["oos_mse"] = r.oos_mse;
        out["selected"] = r.selected;
        return out;
      },
      py::arg("n") = 150, py::arg("t") = 100, py::arg("s") = 105, py::arg("delta") = 0.2,
      py::arg("psi") = "identity", py::arg("seed") = 0, py::arg("replications") = 100,
      py::arg("oos_fraction") = 0.5, py::arg("fdr") = McOptions{}.fdr, py::arg("alphas") = py::none(),
      py::arg("threads") = 1, "Monte Carlo MSEs of ridge after selection per replication and threshold");
}
