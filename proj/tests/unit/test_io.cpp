#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gsc/io.hpp"

using namespace gsc;
using nlohmann::json;

namespace {

bool any_error_contains(const ConfigError& e, const std::string& needle) {
  for (const auto& s : e.errors())
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError");
  return ConfigError({});
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto doc = parse_config_text(R"({"carpet": "sierpinski_carpet"})");
  CHECK(doc.plan.spec.mass() == 8);
  CHECK(doc.plan.pad == StudyPlan{}.pad);
  CHECK(doc.plan.chains.n_steps == ChainConfig{}.n_steps);
  CHECK(doc.limits.max_vertices == default_limits().max_vertices);

  const auto bare = parse_config_text(R"({"dimension": 2, "length_scale": 3,
      "cells": [[0,0],[1,0],[2,0],[0,1],[2,1],[0,2],[1,2],[2,2]]})");
  CHECK(bare.plan.spec.id() == sierpinski_carpet().id());
}

TEST_CASE("config errors are collected") {
  SUBCASE("coordinate equal to ell") {
    const auto e = config_error(R"({"carpet": {"dimension": 2, "length_scale": 3, "cells": [[0,0],[3,1]]}})");
    CHECK(any_error_contains(e, "carpet.cells[1][0]"));
    CHECK(any_error_contains(e, "out of range"));
  }
  SUBCASE("duplicate cell") {
    const auto e = config_error(R"({"carpet": {"dimension": 2, "length_scale": 3, "cells": [[0,0],[1,0],[0,0]]}})");
    CHECK(any_error_contains(e, "duplicate"));
  }
  SUBCASE("several problems at once") {
    const auto e = config_error(R"({"carpet": "menger_sponge", "colour": 1,
        "solver": {"pad": 0}, "mcmc": {"order": "sideways", "thinning": 0},
        "study": {"n_min": -1, "eps": [0.5, -1]}})");
    CHECK(e.errors().size() >= 5);
    CHECK(any_error_contains(e, "colour: unknown key"));
    CHECK(any_error_contains(e, "solver.pad"));
    CHECK(any_error_contains(e, "mcmc.order"));
    CHECK(any_error_contains(e, "mcmc.thinning"));
    CHECK(any_error_contains(e, "study.n_min"));
    CHECK(any_error_contains(e, "study.eps[1]"));
  }
  SUBCASE("malformed JSON names the line") {
    const auto e = config_error("{\n  \"carpet\": \n}");
    CHECK(any_error_contains(e, "line 3"));
  }
  SUBCASE("unknown preset, wrong types") {
    const auto e = config_error(R"({"carpet": "koch", "study": {"density": 3, "record_runtime": "yes"}})");
    CHECK(any_error_contains(e, "unknown preset"));
    CHECK(any_error_contains(e, "study.density"));
    CHECK(any_error_contains(e, "study.record_runtime"));
  }
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config round trip") {
  auto doc = parse_config_text(R"({"carpet": "menger_sponge", "solver": {"pad": 1, "rho_hat": 0.6},
      "mcmc": {"burnin": 3, "steps": 40, "thinning": 2, "order": "lexicographic", "exterior": "single_site"},
      "study": {"n_max": 3, "x0": [1,1,1], "centres": [[0.5,0.5,0.5]], "density": "linear", "master_seed": 99}})");
  const auto text = config_to_json(doc).dump();
  const auto again = parse_config_text(text);
  CHECK(config_to_json(again).dump() == text);
  CHECK(again.plan.chains.order == SweepOrder::Lexicographic);
  CHECK(again.plan.chains.exterior == ExteriorUpdate::SingleSite);
  CHECK(*again.plan.rho_hat == 0.6);
  CHECK(again.plan.master_seed == 99);
}

TEST_CASE("real formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const auto s = format_real(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_real(std::nan("")) == "nan");
  CHECK(format_real(-INFINITY) == "-inf");
}

TEST_CASE("report emission") {
  StudyReport r;
  r.rows.push_back({"capacity_sequence", "abc", 1, "ratio", 1.0 / 3.0, 1e-17, "", 42, 0});
  r.rows.push_back({"wall", "abc", 2, "log_p", -INFINITY, 0, "unusable;no_hit", 7, 1.5});
  r.rows.push_back({"height", "abc", 2, "phi_bar[c0,eps=0.25]", 2, 0.1, "", 9, 0});
  r.environment["host"] = "x";

  const auto csv = report_csv(r);
  std::istringstream lines(csv);
  std::string header, line;
  std::getline(lines, header);
  CHECK(header == kReportColumns);
  int n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 3);
  CHECK(csv.back() == '\n');
  CHECK(csv.find("\"phi_bar[c0,eps=0.25]\"") != std::string::npos);
  CHECK(digest(csv) == digest(report_csv(r)));
  CHECK(digest(csv) != digest(csv + " "));

  const auto back = report_from_json(json::parse(report_json(r).dump()));
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[0].value == r.rows[0].value);
  CHECK(back.rows[1].value == -INFINITY);
  CHECK(back.rows[2].quantity == r.rows[2].quantity);
  CHECK(back.environment == r.environment);
  CHECK(report_json(back).dump() == report_json(r).dump());
}

TEST_CASE("graph and sample export") {
  const auto g = build_outer_graph(sierpinski_carpet(), 1);
  const auto v = graph_vertex_table(g);
  const auto e = graph_edge_list(g);
  CHECK(v.rfind("0 0 0\n1 0 1\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(v.begin(), v.end(), '\n')) == g.size());
  CHECK(static_cast<std::size_t>(std::count(e.begin(), e.end(), '\n')) == g.edge_count());
  CHECK(e.rfind("0 1\n", 0) == 0);

  Eigen::MatrixXd s(2, 3);
  s << 1, 2, 3, 4, 5, 6;
  const auto csv = samples_csv(s, {"a", "b"});
  CHECK(csv == "sample,a,b\n0,1,4\n1,2,5\n2,3,6\n");
  CHECK_THROWS_AS(samples_csv(s, {"a"}), InputError);
}

TEST_CASE("files and manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "gsc_io_test";
  std::filesystem::remove_all(dir);
  RunManifest m;
  m.tool_version = tool_version();
  m.timestamp = timestamp(true);
  const auto d = m.emit(dir / "a.csv", "x,y\n1,2\n");
  CHECK(d == digest("x,y\n1,2\n"));
  CHECK(m.outputs.at("a.csv") == d);
  std::ifstream in(dir / "a.csv");
  std::string first;
  std::getline(in, first);
  CHECK(first == "x,y");
  CHECK(m.to_json()["timestamp"] == "1970-01-01T00:00:00Z");
  CHECK_THROWS_AS(write_file("/proc/forbidden/file", "x"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("validation report export") {
  const auto spec = sierpinski_carpet();
  const auto r = validate_gsc(spec);
  const auto j = validation_json(spec, r);
  CHECK(j["ok"] == true);
  CHECK(validation_text(spec, r).find("valid") != std::string::npos);
}
