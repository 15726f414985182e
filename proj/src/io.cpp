#include "gsc/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>

namespace gsc {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

/// Collects schema errors for one object, keyed by dotted field path.
class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string>& errors,
          std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j.is_object()) {
      fail(path_, "expected an object");
      ok_ = false;
      return;
    }
    std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
      if (!names.count(key)) fail(field(key), "unknown key");
  }

  bool ok() const { return ok_; }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& where, const std::string& what) { errors_.push_back(where + ": " + what); }

  template <class T>
  void integer(const char* key, T& out, long long lo, long long hi) {
    if (!ok_ || !j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) return fail(field(key), "expected an integer");
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if ((lo > 0 && u < static_cast<std::uint64_t>(lo)) || (hi >= 0 && u > static_cast<std::uint64_t>(hi)))
        return range(key, lo, hi);
      out = static_cast<T>(u);
      return;
    }
    const auto x = v.get<long long>();
    if (x < lo || (hi >= 0 && x > hi)) return range(key, lo, hi);
    out = static_cast<T>(x);
  }

  void real(const char* key, double& out, double lo, bool open_lo = false) {
    if (!ok_ || !j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) return fail(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || (open_lo && x == lo))
      return fail(field(key), "must be " + std::string(open_lo ? "> " : ">= ") + format_real(lo));
    out = x;
  }

  void boolean(const char* key, bool& out) {
    if (!ok_ || !j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) return fail(field(key), "expected true or false");
    out = v.get<bool>();
  }

  template <class E>
  void choice(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
    if (!ok_ || !j_.contains(key)) return;
    const auto& v = j_.at(key);
    std::string names;
    for (const auto& [name, value] : options) {
      if (v.is_string() && v.get<std::string>() == name) {
        out = value;
        return;
      }
      names += names.empty() ? name : std::string(", ") + name;
    }
    fail(field(key), "expected one of " + names);
  }

  const json* get(const char* key) const { return ok_ && j_.contains(key) ? &j_.at(key) : nullptr; }

 private:
  void range(const char* key, long long lo, long long hi) {
    fail(field(key), "out of range [" + std::to_string(lo) + ", " + (hi >= 0 ? std::to_string(hi) : "inf") + "]");
  }

  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  bool ok_ = true;
};

constexpr long long kNoMax = -1;

std::optional<CarpetSpec> read_carpet(const json& j, const std::string& path, std::vector<std::string>& errors) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "sierpinski_carpet") return sierpinski_carpet();
    if (name == "menger_sponge") return menger_sponge();
    errors.push_back(path + ": unknown preset '" + name + "' (sierpinski_carpet, menger_sponge)");
    return std::nullopt;
  }
  Section s(j, path, errors, {"name", "dimension", "length_scale", "cells", "allow_full_cube"});
  if (!s.ok()) return std::nullopt;
  const std::size_t before = errors.size();
  int dim = 0, ell = 0;
  bool full = false;
  std::string name;
  if (!j.contains("dimension")) s.fail(s.field("dimension"), "required");
  if (!j.contains("length_scale")) s.fail(s.field("length_scale"), "required");
  if (!j.contains("cells")) s.fail(s.field("cells"), "required");
  s.integer("dimension", dim, 1, 8);
  s.integer("length_scale", ell, 2, 1000);
  s.boolean("allow_full_cube", full);
  if (const auto* n = s.get("name")) {
    if (n->is_string()) name = n->get<std::string>();
    else s.fail(s.field("name"), "expected a string");
  }
  std::vector<std::vector<Coord>> cells;
  if (const auto* c = s.get("cells")) {
    if (!c->is_array()) {
      s.fail(s.field("cells"), "expected a list of tuples");
    } else {
      std::map<std::vector<Coord>, std::size_t> seen;
      for (std::size_t i = 0; i < c->size(); ++i) {
        const auto where = s.field("cells") + "[" + std::to_string(i) + "]";
        const auto& t = (*c)[i];
        if (!t.is_array() || (dim > 0 && static_cast<int>(t.size()) != dim)) {
          s.fail(where, dim > 0 ? "expected a " + std::to_string(dim) + "-tuple" : "expected a tuple");
          continue;
        }
        std::vector<Coord> cell;
        bool good = true;
        for (std::size_t a = 0; a < t.size(); ++a) {
          const auto& x = t[a];
          const auto at = where + "[" + std::to_string(a) + "]";
          if (!x.is_number_integer()) {
            s.fail(at, "expected an integer");
            good = false;
          } else if (ell > 0 && (x.get<long long>() < 0 || x.get<long long>() >= ell)) {
            s.fail(at, "coordinate " + std::to_string(x.get<long long>()) + " out of range [0, " +
                           std::to_string(ell - 1) + "]");
            good = false;
          } else {
            cell.push_back(static_cast<Coord>(x.get<long long>()));
          }
        }
        if (!good) continue;
        auto [it, fresh] = seen.emplace(cell, i);
        if (!fresh) s.fail(where, "duplicate of cells[" + std::to_string(it->second) + "]");
        else cells.push_back(std::move(cell));
      }
    }
  }
  if (errors.size() != before) return std::nullopt;
  try {
    return CarpetSpec(dim, ell, std::move(cells), full, name);
  } catch (const InputError& e) {
    errors.push_back(path + ": " + e.what());
    return std::nullopt;
  }
}

void read_solver(const json& j, ConfigDocument& doc, std::vector<std::string>& errors) {
  Section s(j, "solver", errors,
            {"pad", "max_ambient_level", "rho_hat", "rho_level", "max_cells", "max_vertices", "max_unknowns"});
  auto& p = doc.plan;
  s.integer("pad", p.pad, 1, 8);
  s.integer("max_ambient_level", p.max_ambient_level, 0, 12);
  if (s.get("rho_hat")) {
    double r = 1;
    s.real("rho_hat", r, 0, true);
    p.rho_hat = r;
  }
  s.integer("rho_level", p.rho_level, 2, 12);
  s.integer("max_cells", doc.limits.max_cells, 1, kNoMax);
  s.integer("max_vertices", doc.limits.max_vertices, 1, kNoMax);
  s.integer("max_unknowns", doc.limits.max_unknowns, 1, kNoMax);
}

void read_mcmc(const json& j, ChainConfig& c, std::vector<std::string>& errors) {
  Section s(j, "mcmc", errors, {"burnin", "steps", "thinning", "order", "exterior", "chains"});
  s.integer("burnin", c.n_burnin, 0, kNoMax);
  s.integer("steps", c.n_steps, 1, kNoMax);
  s.integer("thinning", c.thinning, 1, kNoMax);
  s.integer("chains", c.chains, 1, 1024);
  s.choice("order", c.order, {{"random", SweepOrder::RandomPermutation}, {"lexicographic", SweepOrder::Lexicographic}});
  s.choice("exterior", c.exterior,
           {{"exact_block", ExteriorUpdate::ExactBlock}, {"single_site", ExteriorUpdate::SingleSite}});
  if (s.ok() && c.thinning > 0 && c.n_steps / c.thinning < 4)
    s.fail("mcmc.steps", "steps / thinning must be at least 4");
}

std::optional<std::vector<double>> real_list(const json& v, const std::string& where, std::vector<std::string>& errors,
                                             double lo, double hi) {
  if (!v.is_array()) {
    errors.push_back(where + ": expected a list of numbers");
    return std::nullopt;
  }
  std::vector<double> out;
  bool good = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>()) || v[i].get<double>() < lo ||
        v[i].get<double>() > hi) {
      errors.push_back(where + "[" + std::to_string(i) + "]: expected a number in [" + format_real(lo) + ", " +
                       format_real(hi) + "]");
      good = false;
    } else {
      out.push_back(v[i].get<double>());
    }
  }
  return good ? std::optional(out) : std::nullopt;
}

void read_study(const json& j, StudyPlan& p, std::vector<std::string>& errors) {
  Section s(j, "study", errors,
            {"n_min", "n_max", "k", "x0", "alpha", "wall_samples", "centres", "eps", "trials", "refinement",
             "density", "master_seed", "record_runtime"});
  s.integer("n_min", p.n_min, 0, 12);
  s.integer("n_max", p.n_max, 0, 12);
  s.integer("k", p.k, 0, 12);
  s.real("alpha", p.alpha, 0);
  s.integer("wall_samples", p.wall_samples, 2, kNoMax);
  s.integer("trials", p.trials, 1, 10'000'000);
  s.integer("refinement", p.refinement, 0, 8);
  s.integer("master_seed", p.master_seed, 0, kNoMax);
  s.boolean("record_runtime", p.record_runtime);
  s.choice("density", p.density, {{"constant", Density::Constant}, {"linear", Density::Linear}});
  if (s.ok() && p.n_max < p.n_min) s.fail("study.n_max", "must be >= n_min");
  if (const auto* v = s.get("eps")) {
    if (auto list = real_list(*v, "study.eps", errors, 1e-300, 1e300)) p.eps = *list;
  }
  if (const auto* v = s.get("centres")) {
    if (!v->is_array()) {
      s.fail("study.centres", "expected a list of points");
    } else {
      p.centres.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const auto where = "study.centres[" + std::to_string(i) + "]";
        if (auto pt = real_list((*v)[i], where, errors, 0, 1)) {
          if (static_cast<int>(pt->size()) != p.spec.dimension())
            errors.push_back(where + ": expected " + std::to_string(p.spec.dimension()) + " coordinates");
          else p.centres.push_back(*pt);
        }
      }
    }
  }
  if (const auto* v = s.get("x0")) {
    bool good = v->is_array() && static_cast<int>(v->size()) == p.spec.dimension();
    std::vector<Coord> x;
    if (good)
      for (const auto& c : *v) {
        if (!c.is_number_integer() || c.get<long long>() < 0) good = false;
        else x.push_back(static_cast<Coord>(c.get<long long>()));
      }
    if (good) p.x0 = x;
    else s.fail("study.x0", "expected " + std::to_string(p.spec.dimension()) + " nonnegative integers");
  }
}

std::string parse_location(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json real_json(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

double real_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  const auto s = v.get<std::string>();
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  throw InputError("bad real value '" + s + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors) : InputError(join_lines(errors)), errors_(std::move(errors)) {}

CarpetSpec parse_carpet(const json& j) {
  std::vector<std::string> errors;
  auto spec = read_carpet(j, "carpet", errors);
  if (!spec) throw ConfigError(errors);
  return *spec;
}

ConfigDocument parse_config_text(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({source + ": " + parse_location(text, e.byte) + ": malformed JSON"});
  }
  ConfigDocument doc;
  doc.source = source;
  doc.limits = default_limits();
  std::vector<std::string> errors;
  if (!j.is_object()) throw ConfigError({source + ": expected a JSON object"});
  if (j.contains("dimension")) j = json{{"carpet", j}};

  Section top(j, "", errors, {"carpet", "solver", "mcmc", "study"});
  if (j.contains("carpet")) {
    if (auto spec = read_carpet(j.at("carpet"), "carpet", errors)) doc.plan.spec = *spec;
  }
  if (j.contains("solver")) read_solver(j.at("solver"), doc, errors);
  if (j.contains("mcmc")) read_mcmc(j.at("mcmc"), doc.plan.chains, errors);
  if (j.contains("study")) read_study(j.at("study"), doc.plan, errors);
  if (errors.empty()) {
    try {
      doc.plan.validate();
    } catch (const InputError& e) {
      errors.push_back(std::string("study: ") + e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return doc;
}

ConfigDocument parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path.string());
}

json carpet_to_json(const CarpetSpec& spec) {
  json cells = json::array();
  for (std::size_t i = 0; i < spec.cells().size(); ++i) {
    const auto c = spec.cells()[i];
    cells.push_back(std::vector<long long>(c.begin(), c.end()));
  }
  json j{{"dimension", spec.dimension()}, {"length_scale", spec.length_scale()}, {"cells", cells},
         {"allow_full_cube", spec.allow_full_cube()}};
  if (!spec.name().empty()) j["name"] = spec.name();
  return j;
}

json config_to_json(const ConfigDocument& doc) {
  const auto& p = doc.plan;
  json solver{{"pad", p.pad},
              {"max_ambient_level", p.max_ambient_level},
              {"rho_level", p.rho_level},
              {"max_cells", doc.limits.max_cells},
              {"max_vertices", doc.limits.max_vertices},
              {"max_unknowns", doc.limits.max_unknowns}};
  if (p.rho_hat) solver["rho_hat"] = *p.rho_hat;
  const auto& c = p.chains;
  json mcmc{{"burnin", c.n_burnin},
            {"steps", c.n_steps},
            {"thinning", c.thinning},
            {"chains", c.chains},
            {"order", c.order == SweepOrder::RandomPermutation ? "random" : "lexicographic"},
            {"exterior", c.exterior == ExteriorUpdate::ExactBlock ? "exact_block" : "single_site"}};
  json study{{"n_min", p.n_min},
             {"n_max", p.n_max},
             {"k", p.k},
             {"alpha", p.alpha},
             {"wall_samples", p.wall_samples},
             {"centres", p.centres},
             {"eps", p.eps},
             {"trials", p.trials},
             {"refinement", p.refinement},
             {"density", p.density == Density::Constant ? "constant" : "linear"},
             {"master_seed", p.master_seed},
             {"record_runtime", p.record_runtime}};
  if (p.x0) study["x0"] = std::vector<long long>(p.x0->begin(), p.x0->end());
  return json{{"carpet", carpet_to_json(p.spec)}, {"solver", solver}, {"mcmc", mcmc}, {"study", study}};
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_csv(const StudyReport& report) {
  std::string out(kReportColumns);
  out += '\n';
  for (const auto& r : report.rows) {
    out += csv_field(r.study) + ',' + csv_field(r.spec) + ',' + std::to_string(r.level) + ',' + csv_field(r.quantity) +
           ',' + format_real(r.value) + ',' + format_real(r.stderr) + ',' + csv_field(r.flags) + ',' +
           std::to_string(r.seed) + ',' + format_real(r.runtime_ms) + '\n';
  }
  return out;
}

json report_json(const StudyReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"study", r.study},
                    {"spec", r.spec},
                    {"N", r.level},
                    {"quantity", r.quantity},
                    {"value", real_json(r.value)},
                    {"stderr", real_json(r.stderr)},
                    {"flags", r.flags},
                    {"seed", r.seed},
                    {"runtime_ms", real_json(r.runtime_ms)}});
  return json{{"rows", rows}, {"environment", report.environment}};
}

StudyReport report_from_json(const json& j) {
  StudyReport report;
  try {
    for (const auto& r : j.at("rows"))
      report.rows.push_back({r.at("study").get<std::string>(), r.at("spec").get<std::string>(), r.at("N").get<int>(),
                             r.at("quantity").get<std::string>(), real_from_json(r.at("value")),
                             real_from_json(r.at("stderr")), r.at("flags").get<std::string>(),
                             r.at("seed").get<std::uint64_t>(), real_from_json(r.at("runtime_ms"))});
    if (j.contains("environment")) report.environment = j.at("environment").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
  return report;
}

json validation_json(const CarpetSpec& spec, const ValidationReport& report) {
  json axioms = json::object();
  for (int a = 0; a < 4; ++a) {
    const auto& r = report.axioms[static_cast<std::size_t>(a)];
    axioms[axiom_name(static_cast<Axiom>(a))] = {{"pass", r.pass}, {"witness", r.witness}};
  }
  return json{{"spec", spec.id()},
              {"name", spec.name()},
              {"ok", report.ok()},
              {"calibration_mode", report.calibration_mode},
              {"failed", report.failed_names()},
              {"axioms", axioms}};
}

std::string validation_text(const CarpetSpec& spec, const ValidationReport& report) {
  std::ostringstream out;
  out << "carpet " << (spec.name().empty() ? spec.id() : spec.name()) << "  d=" << spec.dimension()
      << " ell=" << spec.length_scale() << " m=" << spec.mass() << '\n';
  for (int a = 0; a < 4; ++a) {
    const auto& r = report.axioms[static_cast<std::size_t>(a)];
    out << "  " << axiom_name(static_cast<Axiom>(a)) << ": " << (r.pass ? "pass" : "FAIL");
    if (!r.witness.empty()) out << "  (" << r.witness << ")";
    out << '\n';
  }
  if (report.calibration_mode) out << "  calibration mode (full cube)\n";
  out << (report.ok() ? "valid\n" : "invalid\n");
  return out.str();
}

std::string graph_vertex_table(const LatticeGraph& graph) {
  std::string out;
  for (VertexId v = 0; v < graph.size(); ++v) {
    out += std::to_string(v);
    for (auto c : graph.coord(v)) out += ' ' + std::to_string(c);
    out += '\n';
  }
  return out;
}

std::string graph_edge_list(const LatticeGraph& graph) {
  std::string out;
  for (const auto& e : graph.edges()) out += std::to_string(e.first) + ' ' + std::to_string(e.second) + '\n';
  return out;
}

std::string samples_csv(const Eigen::MatrixXd& samples, const std::vector<std::string>& vertex_labels,
                        const std::vector<std::string>& sample_labels) {
  if (static_cast<Eigen::Index>(vertex_labels.size()) != samples.rows())
    throw InputError("samples_csv: one label per vertex required");
  if (!sample_labels.empty() && static_cast<Eigen::Index>(sample_labels.size()) != samples.cols())
    throw InputError("samples_csv: one label per sample required");
  std::string out = "sample";
  for (const auto& l : vertex_labels) out += ',' + csv_field(l);
  out += '\n';
  for (Eigen::Index s = 0; s < samples.cols(); ++s) {
    out += sample_labels.empty() ? std::to_string(s) : csv_field(sample_labels[static_cast<std::size_t>(s)]);
    for (Eigen::Index v = 0; v < samples.rows(); ++v) out += ',' + format_real(samples(v, s));
    out += '\n';
  }
  return out;
}

std::string write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write to " + path.string() + " failed");
  return digest(bytes);
}

std::string RunManifest::emit(const std::filesystem::path& path, std::string_view bytes) {
  auto d = write_file(path, bytes);
  outputs[path.filename().string()] = d;
  return d;
}

json RunManifest::to_json() const {
  return json{{"tool_version", tool_version},
              {"spec_hash", spec_hash},
              {"command_line", command_line},
              {"master_seed", master_seed},
              {"timestamp", timestamp},
              {"task_seeds", task_seeds},
              {"outputs", outputs},
              {"config", config}};
}

std::string tool_version() { return "0.1.0"; }

std::string timestamp(bool deterministic) {
  if (deterministic) return "1970-01-01T00:00:00Z";
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace gsc
