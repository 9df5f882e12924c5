// Copyright 2026 The Poietic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Structured results cross the boundary as JSON text; the
// pure-Python package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <atomic>
#include <future>
#include <thread>

#include "poietic/harness.hpp"
#include "poietic/net.hpp"
#include "poietic/session_service.hpp"

namespace py = pybind11;
using namespace poietic;

namespace {

struct PyRun {
  RunResult result;

  py::bytes log_bytes() const { return py::bytes(serialize_log(result.log)); }
  std::string report_json() const { return to_json(result.report).dump(); }
  std::string metrics_json() const { return poietic::metrics_json(result).dump(); }
  std::string verdict() const { return to_string(result.report.overall); }
  std::optional<double> closure_score() const { return result.report.closure.score; }
  std::vector<std::string> alienated() const {
    std::vector<std::string> out;
    for (const AgentId& a : result.report.alienated) out.push_back(a.str());
    return out;
  }
  std::vector<std::tuple<std::string, double, double>> ess_points() const {
    std::vector<std::tuple<std::string, double, double>> out;
    for (const EssPoint& p : result.ess) out.emplace_back(p.agent.str(), p.q, p.y);
    return out;
  }
  void emit(const std::string& out_dir) const { emit_metrics(result, out_dir); }
};

std::vector<EssPoint> to_points(const std::vector<std::pair<double, double>>& qy) {
  std::vector<EssPoint> out;
  for (std::size_t i = 0; i < qy.size(); ++i) {
    out.push_back(EssPoint{AgentId("p" + std::to_string(i + 1)), qy[i].first, qy[i].second});
  }
  return out;
}

VanishingCode code_from_hex(const std::string& hex) {
  auto code = VanishingCode::from_hex(hex);
  if (!code) throw Error(ErrorCode::kInvalidConfig, "session code must be 64 hex digits");
  return *code;
}

/// A live session served from a background thread.
class PyService {
 public:
  PyService(const std::string& config_json, const std::string& log_path, bool resume)
      : driver_(parse_service_config(nlohmann::json::parse(config_json)), log_path, resume) {}
  ~PyService() { stop(); }

  std::uint16_t start(const std::string& host, std::uint16_t port, std::optional<Tick> max_ticks) {
    if (thread_.joinable()) throw Error(ErrorCode::kInvalidConfig, "service already started");
    std::promise<std::uint16_t> bound;
    auto result = bound.get_future();
    options_.host = host;
    options_.port = port;
    options_.max_ticks = max_ticks;
    options_.stop = &stop_;
    options_.on_listening = [&bound](std::uint16_t p) { bound.set_value(p); };
    thread_ = std::thread([this, &bound] {
      try {
        ticks_ = net::serve(driver_, options_);
      } catch (...) {
        try {
          bound.set_exception(std::current_exception());
        } catch (const std::future_error&) {
        }
      }
    });
    py::gil_scoped_release release;
    port_ = result.get();
    return port_;
  }

  void stop() {
    stop_ = true;
    if (thread_.joinable()) {
      py::gil_scoped_release release;
      thread_.join();
    }
  }

  std::string code() const { return driver_.code().hex(); }
  std::uint16_t port() const { return port_; }
  /// Ticks pumped; meaningful once stopped.
  Tick ticks() const { return ticks_; }

 private:
  SessionDriver driver_;
  net::ServeOptions options_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
  std::uint16_t port_ = 0;
  Tick ticks_ = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collective canvas sessions: simulation, audit, replay and live service.";
  m.attr("protocol_version") = wire::kProtocolVersion;
  m.attr("log_schema_version") = kLogSchemaVersion;
  m.attr("scenario_schema_version") = kScenarioSchemaVersion;

  static py::exception<Error> error(m, "PoieticError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = error;
      PyErr_SetObject(err.ptr(), py::make_tuple(to_string(e.code()), e.what()).ptr());
    }
  });

  py::class_<PyRun>(m, "Run")
      .def("log_bytes", &PyRun::log_bytes)
      .def("report_json", &PyRun::report_json)
      .def("metrics_json", &PyRun::metrics_json)
      .def_property_readonly("verdict", &PyRun::verdict)
      .def_property_readonly("closure_score", &PyRun::closure_score)
      .def_property_readonly("alienated", &PyRun::alienated)
      .def("ess_points", &PyRun::ess_points)
      .def("emit", &PyRun::emit, py::arg("out_dir"));

  m.def(
      "run_scenario",
      [](const std::string& scenario_json, std::optional<std::uint64_t> seed) {
        const ScenarioConfig cfg = parse_scenario_text(scenario_json);
        py::gil_scoped_release release;
        return PyRun{run_scenario(cfg, RunOptions{seed, {}})};
      },
      py::arg("scenario_json"), py::arg("seed") = py::none());

  m.def(
      "audit_log",
      [](const py::bytes& log, Tick window, double epsilon, double theta, Tick admission_window) {
        const AuditParams params{window, epsilon, theta, admission_window};
        params.validate();
        const ReplayResult replay = parse_log(std::string(log));
        const LegitimacyReport report = legitimacy_report(replay.log, params);
        return std::make_tuple(to_json(report).dump(), exit_code(report.overall));
      },
      py::arg("log"), py::arg("window") = 50, py::arg("epsilon") = 0.05, py::arg("theta") = 0.99,
      py::arg("admission_window") = 5);

  m.def(
      "replay_log", [](const py::bytes& log) { return to_json(replay_log(std::string(log))).dump(); },
      py::arg("log"));

  m.def(
      "classify_ess",
      [](const std::vector<std::pair<double, double>>& qy) {
        const auto pts = to_points(qy);
        return std::string(to_string(classify_ess_shape(pts)));
      },
      py::arg("points"));
  m.def(
      "tertile_means",
      [](const std::vector<std::pair<double, double>>& qy) {
        const auto pts = to_points(qy);
        const TertileMeans t = tertile_means(pts);
        return std::make_tuple(t.m1, t.m2, t.m3);
      },
      py::arg("points"));

  m.def(
      "service_code",
      [](const std::string& config_json) {
        return vanishing_code(parse_service_config(nlohmann::json::parse(config_json)).scenario.genesis())
            .hex();
      },
      py::arg("config_json"));

  py::class_<wire::ClientView>(m, "ClientView")
      .def(py::init([](const std::string& code) { return wire::ClientView(code_from_hex(code)); }),
           py::arg("code"))
      .def(
          "join_request",
          [](const wire::ClientView& v, const std::string& agent, const std::string& role) {
            return v.encode(v.join_request(AgentId(agent), role_from_string(role)));
          },
          py::arg("agent"), py::arg("role") = "ordinary")
      .def("spectate_request", [](const wire::ClientView& v) { return v.encode(v.spectate_request()); })
      .def("leave_request", [](const wire::ClientView& v) { return v.encode(v.leave_request()); })
      .def(
          "paint",
          [](wire::ClientView& v, int color) {
            if (color < 0 || color > 255)
              throw Error(ErrorCode::kInvalidPayload, "colour index out of range");
            return v.encode(v.paint(CellPayload::filled(v.geometry(), static_cast<std::uint8_t>(color))));
          },
          py::arg("color"))
      .def(
          "receive",
          [](wire::ClientView& v, const std::string& line) {
            const wire::Message msg = v.decode(line);
            v.receive(msg);
            return std::string(wire::to_string(msg.kind()));
          },
          py::arg("line"))
      .def_property_readonly("joined", &wire::ClientView::joined)
      .def_property_readonly("spectator", &wire::ClientView::spectator)
      .def_property_readonly("agent", [](const wire::ClientView& v) { return v.agent().str(); })
      .def_property_readonly(
          "position",
          [](const wire::ClientView& v) -> std::optional<std::pair<std::uint32_t, std::uint32_t>> {
            if (!v.position()) return std::nullopt;
            return std::make_pair(v.position()->row, v.position()->col);
          })
      .def_property_readonly("palette", &wire::ClientView::palette)
      .def_property_readonly("pending", [](const wire::ClientView& v) { return v.pending().size(); })
      .def_property_readonly("confirmed", &wire::ClientView::confirmed)
      .def_property_readonly("superseded", &wire::ClientView::superseded)
      .def_property_readonly("badge",
                             [](const wire::ClientView& v) { return std::string(to_string(v.badge())); })
      .def_property_readonly(
          "last_error",
          [](const wire::ClientView& v) -> std::optional<std::pair<std::string, std::string>> {
            if (!v.last_error()) return std::nullopt;
            return std::make_pair(v.last_error()->reason, v.last_error()->detail);
          })
      .def_property_readonly("frames_received", &wire::ClientView::frames_received)
      .def_property_readonly("last_tick", &wire::ClientView::last_tick)
      .def_property_readonly("members", [](const wire::ClientView& v) {
        std::vector<std::string> out;
        if (v.frame()) {
          for (const auto& [agent, pos] : v.frame()->membership) out.push_back(agent.str());
        }
        return out;
      });

  py::class_<PyService>(m, "Service")
      .def(py::init<const std::string&, const std::string&, bool>(), py::arg("config_json"),
           py::arg("log_path"), py::arg("resume") = false)
      .def("start", &PyService::start, py::arg("host") = "127.0.0.1", py::arg("port") = 0,
           py::arg("max_ticks") = py::none())
      .def("stop", &PyService::stop)
      .def_property_readonly("code", &PyService::code)
      .def_property_readonly("port", &PyService::port)
      .def_property_readonly("ticks", &PyService::ticks);
}
