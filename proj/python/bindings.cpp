#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "caai/cli.hpp"
#include "caai/errors.hpp"

namespace py = pybind11;
using namespace caai;

namespace {

EvaluationRecord record_from(const py::dict& d) {
  EvaluationRecord r;
  r.pipeline = d["pipeline"].cast<std::string>();
  r.instance = d.contains("instance") ? d["instance"].cast<std::string>() : std::string("instance");
  r.budget = d.contains("budget") ? d["budget"].cast<std::size_t>() : 1;
  r.best_y = d["best_y"].cast<double>();
  r.memory_bytes = d.contains("memory_bytes") ? d["memory_bytes"].cast<double>() : 0.0;
  r.cpu_time = d.contains("cpu_time") ? d["cpu_time"].cast<double>() : 0.0;
  return r;
}

py::dict rating_to_dict(const RatingResult& res) {
  py::list rows;
  for (const auto& r : res.table.rows) {
    py::dict d;
    d["pipeline"] = r.pipeline;
    d["improvement"] = r.improvement;
    d["mem_ratio"] = r.mem_ratio;
    d["cpu_ratio"] = r.cpu_ratio;
    d["norm_obj"] = r.norm_obj;
    d["norm_mem"] = r.norm_mem;
    d["norm_cpu"] = r.norm_cpu;
    d["aggregate"] = r.aggregate;
    d["rank"] = r.rank ? py::cast(*r.rank) : py::none();
    d["survivor"] = r.survivor;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["survivors"] = res.table.survivors;
  out["eliminated"] = res.table.eliminated;
  out["p_best"] = res.p_best ? py::cast(*res.p_best) : py::none();
  return out;
}

OptimizerConfig config_from(const std::string& algorithm, const py::dict& params) {
  OptimizerConfig c;
  c.algorithm = algorithm_from_string(algorithm);
  for (const auto& [k, v] : params) {
    const auto key = k.cast<std::string>();
    if (py::isinstance<py::str>(v))
      c.params[key] = v.cast<std::string>();
    else
      c.params[key] = v.cast<double>();
  }
  return c.completed();
}

}  // namespace

PYBIND11_MODULE(_caai, m) {
  m.doc() = "Bindings for the caai core library";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigurationError> config_error(m, "ConfigurationError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigurationError& e) {
      py::set_error(config_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<GPModel>(m, "GPModel")
      .def_static(
          "fit",
          [](const std::vector<double>& x, const std::vector<double>& y, double lo, double hi, bool noise) {
            return GPModel::fit(Dataset::one_d(x, y, lo, hi), noise);
          },
          py::arg("x"), py::arg("y"), py::arg("lo"), py::arg("hi"), py::arg("noise") = false)
      .def(
          "predict",
          [](const GPModel& g, double x) {
            const auto p = g.predict(std::vector<double>{x});
            return py::make_tuple(p.mean, p.variance);
          },
          py::arg("x"))
      .def_property_readonly("lengthscale", [](const GPModel& g) { return g.hyperparameters().lengthscale; })
      .def_property_readonly("signal_variance", [](const GPModel& g) { return g.hyperparameters().signal_variance; })
      .def_property_readonly("nugget", [](const GPModel& g) { return g.hyperparameters().nugget; });

  m.def(
      "simulate",
      [](const GPModel& g, const std::vector<double>& grid, std::uint64_t seed, bool conditional,
         const std::string& method) {
        const auto meth = simulation_method_from_string(method);
        const Realization r = conditional ? simulate_conditional(g, grid, seed, meth)
                                          : simulate_unconditional(g, grid, meth, seed);
        return py::make_tuple(r.grid, r.values);
      },
      py::arg("model"), py::arg("grid"), py::arg("seed"), py::arg("conditional") = true,
      py::arg("method") = "decomposition", "Draws one realization; returns (grid, values).");

  m.def(
      "run_optimizer",
      [](const std::string& algorithm, std::function<double(std::vector<double>)> f, std::vector<double> lo,
         std::vector<double> hi, std::size_t budget, std::uint64_t seed, py::dict params) {
        const OptProblem prob{[f](std::span<const double> x) { return f({x.begin(), x.end()}); },
                              Box{std::move(lo), std::move(hi)}, budget};
        const auto r = run_optimizer(config_from(algorithm, params), prob, seed);
        py::dict out;
        out["best_x"] = r.best_x;
        out["best_y"] = r.best_y;
        out["trace"] = r.trace;
        out["evals_used"] = r.evals_used;
        out["memory_trace"] = r.memory_trace;
        return out;
      },
      py::arg("algorithm"), py::arg("objective"), py::arg("lo"), py::arg("hi"), py::arg("budget"),
      py::arg("seed") = 1, py::arg("params") = py::dict());

  m.def(
      "rate_pipelines",
      [](const std::vector<py::dict>& records, const std::string& baseline, std::array<double, 3> w) {
        std::vector<EvaluationRecord> recs;
        for (const auto& d : records) recs.push_back(record_from(d));
        return rating_to_dict(rate_pipelines(recs, baseline, {w[0], w[1], w[2]}));
      },
      py::arg("records"), py::arg("baseline"), py::arg("weights") = std::array<double, 3>{0.8, 0.1, 0.1});

  m.def(
      "pearson",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto p = pearson_correlation(a, b);
        py::dict out;
        out["r"] = p.r;
        out["t"] = p.t;
        out["p"] = p.p;
        out["df"] = p.df;
        out["ci"] = py::make_tuple(p.ci_lo, p.ci_hi);
        return out;
      },
      py::arg("a"), py::arg("b"));

  m.def("default_kb_yaml", [] { return kb_to_yaml(default_kb()); });
  m.def(
      "compose_pipelines",
      [](const std::string& kb_yaml) {
        const auto kb = parse_kb(kb_yaml);
        const CognitionConfig c;
        std::vector<std::string> ids;
        for (const auto& t : compose_pipelines(kb, c.goal)) ids.push_back(t.id());
        return ids;
      },
      py::arg("kb_yaml"));

  py::class_<VpsSimulator>(m, "VpsSimulator")
      .def(py::init([](std::uint64_t seed, double noise_sd, std::size_t grid_size) {
             VpsSettings s;
             s.seed = seed;
             s.noise_sd = noise_sd;
             s.grid_size = grid_size;
             return VpsSimulator(load_seed_csv(default_seed_csv()), s);
           }),
           py::arg("seed") = 1, py::arg("noise_sd") = 0.02, py::arg("grid_size") = kDefaultGridSize)
      .def("apply", [](VpsSimulator& p, double x) { return p.apply(x).aggregate; }, py::arg("x"))
      .def("produce", [](VpsSimulator& p) { return p.produce().aggregate; })
      .def("ground_truth", &VpsSimulator::ground_truth_aggregate, py::arg("x"))
      .def("objectives", &VpsSimulator::ground_truth, py::arg("x"))
      .def("new_batch", &VpsSimulator::new_batch)
      .def_property_readonly("cycles", &VpsSimulator::latest_index)
      .def_property_readonly("bounds", [](const VpsSimulator& p) {
        return py::make_tuple(p.bounds().lo[0], p.bounds().hi[0]);
      });

  m.def(
      "run",
      [](const std::string& config_yaml, const std::filesystem::path& out_dir, bool force) {
        RunConfig cfg = parse_run_config(config_yaml);
        cfg.out_dir = out_dir;
        const auto res = cmd_run(cfg, force);
        return res.log_path;
      },
      py::arg("config_yaml"), py::arg("out_dir"), py::arg("force") = false,
      "Runs the selection loop on the simulated plant; returns the run log path.");

  m.def(
      "main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "caai");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line front end; returns its exit code.");
}
