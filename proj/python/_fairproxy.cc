//
// Copyright 2026 The Fairproxy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fairproxy/bisg.h"
#include "fairproxy/cbisg.h"
#include "fairproxy/cli.h"
#include "fairproxy/diagnostics.h"
#include "fairproxy/domain.h"
#include "fairproxy/estimators.h"
#include "fairproxy/tables.h"

namespace py = pybind11;

namespace fairproxy {
namespace {

std::vector<double> ToList(const RaceDistribution& dist) {
  return {dist.probs().begin(), dist.probs().end()};
}

// Rows of omega at both contexts, one list of K values per record.
ContextualPredictions ToPredictions(
    const std::vector<std::vector<double>>& at0,
    const std::vector<std::vector<double>>& at1) {
  if (at0.empty() || at0.size() != at1.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "need one row per record at both contexts");
  }
  ContextualPredictions predictions(at0.front().size());
  for (std::size_t i = 0; i < at0.size(); ++i) {
    if (at0[i].size() != predictions.num_races() ||
        at1[i].size() != predictions.num_races()) {
      throw Error(ErrorCode::kLengthMismatch, "ragged prediction rows");
    }
    predictions.Add(at0[i], at1[i]);
  }
  return predictions;
}

py::tuple RunCli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::Run(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace
}  // namespace fairproxy

PYBIND11_MODULE(_fairproxy, m) {
  using namespace fairproxy;
  m.doc() = "Race-proxy models and disparity estimators.";
  m.attr("__version__") = cli::kVersion;

  // Messages carry the error code name as a prefix.
  py::register_exception<Error>(m, "FairproxyError", PyExc_ValueError);

  m.def("normalize",
        [](const std::vector<double>& weights) {
          return ToList(Normalize(weights));
        },
        py::arg("weights"));

  py::class_<SurnameTable>(m, "SurnameTable")
      .def_property_readonly("races",
                             [](const SurnameTable& t) {
                               return t.races().labels();
                             })
      .def("__contains__", &SurnameTable::Contains)
      .def("__len__", [](const SurnameTable& t) { return t.surnames().size(); });
  py::class_<GeoTable>(m, "GeoTable")
      .def_property_readonly("races",
                             [](const GeoTable& t) { return t.races().labels(); })
      .def("__contains__", &GeoTable::Contains)
      .def("__len__", [](const GeoTable& t) { return t.geos().size(); })
      .def("race_given_geo", [](const GeoTable& t, const std::string& geo) {
        return ToList(t.RaceGivenGeo(geo));
      });

  m.def("load_surname_table",
        [](const std::string& path) {
          return LoadSurnameTable(path, RaceSetFromHeader(path));
        },
        py::arg("path"));
  m.def("load_geo_table",
        [](const std::string& path) {
          return LoadGeoTable(path, RaceSetFromHeader(path));
        },
        py::arg("path"));

  py::class_<BisgModel>(m, "BisgModel")
      .def(py::init<SurnameTable, GeoTable>(), py::arg("surnames"),
           py::arg("geos"))
      .def_property_readonly(
          "races", [](const BisgModel& b) { return b.races().labels(); })
      .def(
          "predict",
          [](const BisgModel& b, const std::string& surname,
             const std::string& geo) { return ToList(b.Predict(surname, geo)); },
          py::arg("surname"), py::arg("geo"));

  py::class_<CbisgModel>(m, "CbisgModel")
      .def_property_readonly(
          "races", [](const CbisgModel& c) { return c.races().labels(); })
      .def("eta", [](const CbisgModel& c, const std::string& geo) {
        return c.eta(geo);
      })
      .def(
          "predict",
          [](const CbisgModel& c, const std::string& surname,
             const std::string& geo, int context) {
            return ToList(c.Predict(surname, geo, context));
          },
          py::arg("surname"), py::arg("geo"), py::arg("context"));
  m.def("load_cbisg",
        [](const std::string& path, const SurnameTable& surnames) {
          return LoadCbisg(path, surnames);
        },
        py::arg("path"), py::arg("surnames"));

  m.def("fit_posterior",
        [](const std::vector<double>& census,
           const std::vector<double>& observed, double eta) {
          return FitPosterior(census, observed, eta).alpha;
        },
        py::arg("census"), py::arg("observed"), py::arg("eta"));
  m.def("posterior_mean",
        [](const std::vector<double>& alpha) {
          return ToList(PosteriorMean(DirichletParams{alpha}));
        },
        py::arg("alpha"));

  m.def("weighted_estimate",
        [](const std::vector<double>& race_weights,
           const std::vector<int>& outcomes) {
          return WeightedEstimate(race_weights, outcomes);
        },
        py::arg("race_weights"), py::arg("outcomes"));
  m.def("bayes_estimate",
        [](const std::vector<std::vector<double>>& at_context0,
           const std::vector<std::vector<double>>& at_context1,
           const std::vector<int>& outcomes, std::size_t race,
           const std::string& averaging) {
          return BayesEstimate(ToPredictions(at_context0, at_context1),
                               outcomes, race,
                               ParseContextAveraging(averaging));
        },
        py::arg("at_context0"), py::arg("at_context1"), py::arg("outcomes"),
        py::arg("race"), py::arg("averaging") = "observed");

  m.def("sufficient_consistency_bound", &SufficientConsistencyBound,
        py::arg("epsilon"), py::arg("theta"), py::arg("nu"), py::arg("gamma"),
        py::arg("omega_bar"));
  m.def("necessary_consistency_bound", &NecessaryConsistencyBound,
        py::arg("epsilon"), py::arg("theta"), py::arg("nu"), py::arg("gamma"),
        py::arg("mu_bayes"));

  m.def("run_cli", &RunCli, py::arg("args"),
        "Runs one CLI invocation in-process; returns (exit_code, stdout, "
        "stderr).");
}
