// Command-line front end: validate carpets, build graphs, query Green's
// functions and resistances, sample fields and run the scaling studies.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "gsc/gff.hpp"
#include "gsc/io.hpp"
#include "gsc/studies.hpp"

namespace fs = std::filesystem;
using namespace gsc;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kResource = 3, kNumeric = 4 };

struct Options {
  std::string config;
  std::string carpet;
  fs::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> pad;
  bool deterministic = false;
  bool quiet = false;
  std::vector<std::string> pairs;
  std::vector<std::string> only;
};

struct Context {
  ConfigDocument doc;
  RunManifest manifest;
  fs::path out;
  bool quiet = false;

  void log(const std::string& s) const {
    if (!quiet) std::cout << s << '\n';
  }
  void emit(const std::string& name, const std::string& bytes) {
    const auto d = manifest.emit(out / name, bytes);
    log("wrote " + (out / name).string() + "  " + d);
  }
  void finish() { manifest.emit(out / "manifest.json", manifest.to_json().dump(2) + "\n"); }
};

Context make_context(const Options& o, const std::vector<std::string>& argv) {
  Context c;
  c.doc = o.config.empty() ? ConfigDocument{StudyPlan{}, default_limits(), "<defaults>"} : parse_config(o.config);
  auto& plan = c.doc.plan;
  if (!o.carpet.empty()) {
    if (o.carpet == "sierpinski_carpet" || o.carpet == "menger_sponge") plan.spec = parse_carpet(json(o.carpet));
    else plan.spec = parse_config(o.carpet).plan.spec;
  }
  if (o.seed) plan.master_seed = *o.seed;
  if (o.pad) plan.pad = *o.pad;
  if (o.deterministic) plan.record_runtime = false;
  plan.chains.master_seed = plan.master_seed;
  plan.validate();

  c.out = o.out;
  c.quiet = o.quiet;
  auto& m = c.manifest;
  m.tool_version = tool_version();
  m.spec_hash = plan.spec.id();
  m.command_line = argv;
  m.master_seed = plan.master_seed;
  m.timestamp = timestamp(o.deterministic);
  m.config = config_to_json(c.doc);
  return c;
}

void record_seeds(Context& c, const StudyReport& r) {
  for (const auto& row : r.rows) c.manifest.task_seeds[row.study + "/N=" + std::to_string(row.level)] = row.seed;
}

std::vector<std::string> core_labels(const PaddedAmbient& amb) {
  std::vector<std::string> labels;
  const auto& g = *amb.inner_graph;
  for (VertexId v = 0; v < g.size(); ++v) {
    std::string s = "v";
    for (std::size_t i = 0; i < g.coord(v).size(); ++i) s += (i ? "_" : "") + std::to_string(g.coord(v)[i]);
    labels.push_back(s);
  }
  return labels;
}

std::vector<std::pair<LocalIndex, LocalIndex>> parse_pairs(const std::string& text, std::size_t n) {
  std::vector<std::pair<LocalIndex, LocalIndex>> pairs;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw InputError("pair '" + item + "' must be i,j");
    std::size_t i = 0, j = 0;
    try {
      i = std::stoul(item.substr(0, comma));
      j = std::stoul(item.substr(comma + 1));
    } catch (const std::exception&) {
      throw InputError("pair '" + item + "' must be two vertex indices");
    }
    if (i >= n || j >= n) throw InputError("pair '" + item + "' out of range: V_N has " + std::to_string(n) + " vertices");
    pairs.emplace_back(static_cast<LocalIndex>(i), static_cast<LocalIndex>(j));
  }
  return pairs;
}

std::vector<Observable> height_observables(const StudyPlan& plan, const PaddedAmbient& amb) {
  const auto core = amb.core;
  std::vector<Observable> obs{{"mean_height", [core](const Eigen::VectorXd& phi) { return set_mean(phi, core); }}};
  auto centres = plan.centres;
  if (centres.empty()) centres.push_back(std::vector<double>(static_cast<std::size_t>(plan.spec.dimension()), 0.5));
  for (std::size_t c = 0; c < centres.size(); ++c)
    for (double e : plan.eps) {
      std::vector<LocalIndex> set;
      for (auto v : cubic_neighborhood(plan.spec, *amb.inner_graph, centres[c], e)) set.push_back(core[v]);
      std::ostringstream name;
      name << "phi_bar[c" << c << ",eps=" << e << "]";
      obs.push_back({name.str(), [set](const Eigen::VectorXd& phi) { return set_mean(phi, set); }});
    }
  return obs;
}

int run(CLI::App& app, const Options& o, const std::vector<std::string>& argv) {
  const auto* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  Context c = make_context(o, argv);
  auto& plan = c.doc.plan;
  const Limits& limits = c.doc.limits;

  if (cmd == "validate") {
    ValidationOptions vo;
    vo.deep_non_diagonality = sub->get_option("--deep")->as<bool>();
    const auto report = validate_gsc(plan.spec, vo);
    std::cout << validation_text(plan.spec, report);
    c.emit("validation.json", validation_json(plan.spec, report).dump(2) + "\n");
    c.finish();
    return report.ok() ? kOk : kInput;
  }
  if (cmd == "build") {
    const int level = sub->get_option("--level")->as<int>();
    const auto kind = sub->get_option("--graph")->as<std::string>();
    const auto g = kind == "inner" ? build_inner_graph(plan.spec, level, limits) : build_outer_graph(plan.spec, level, limits);
    c.log(std::string(graph_kind_name(g.kind())) + " graph, level " + std::to_string(level) + ": " +
          std::to_string(g.size()) + " vertices, " + std::to_string(g.edge_count()) + " edges");
    c.emit("vertices.txt", graph_vertex_table(g));
    c.emit("edges.txt", graph_edge_list(g));
    c.finish();
    return kOk;
  }
  if (cmd == "green") {
    const int level = sub->get_option("--level")->as<int>();
    const auto amb = padded_ambient(plan.spec, level, plan.pad, limits);
    const std::size_t n = amb.core.size();
    std::vector<std::pair<LocalIndex, LocalIndex>> pairs;
    std::string spec_pairs;
    for (const auto& p : o.pairs) spec_pairs += (spec_pairs.empty() ? "" : ";") + p;
    if (spec_pairs.empty()) {
      for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(static_cast<LocalIndex>(i), static_cast<LocalIndex>(i));
    } else {
      pairs = parse_pairs(spec_pairs, n);
    }
    std::vector<std::pair<LocalIndex, LocalIndex>> mapped;
    for (auto [i, j] : pairs) mapped.emplace_back(amb.core[static_cast<std::size_t>(i)], amb.core[static_cast<std::size_t>(j)]);
    const auto values = green_entries(amb.op, mapped);
    std::string csv = "i,j,green\n";
    for (std::size_t k = 0; k < pairs.size(); ++k)
      csv += std::to_string(pairs[k].first) + ',' + std::to_string(pairs[k].second) + ',' + format_real(values[k]) + '\n';
    c.emit("green.csv", csv);
    c.finish();
    return kOk;
  }
  if (cmd == "resistance") {
    const int max_level = sub->get_option("--max-level")->as<int>();
    const auto seq = crosswire_sequence(plan.spec, max_level, limits);
    std::string csv = "N,resistance,rho_hat,nodes\n";
    for (const auto& r : seq) {
      csv += std::to_string(r.level) + ',' + format_real(r.resistance) + ',' +
             (r.rho_hat ? format_real(*r.rho_hat) : std::string{}) + ',' + std::to_string(r.nodes) + '\n';
      c.log("N=" + std::to_string(r.level) + "  R=" + format_real(r.resistance) +
            (r.rho_hat ? "  rho_hat=" + format_real(*r.rho_hat) : std::string{}));
    }
    c.emit("resistance.csv", csv);
    c.finish();
    return kOk;
  }
  if (cmd == "capacity") {
    const auto r = capacity_sequence(plan);
    record_seeds(c, r);
    c.emit("capacity.csv", report_csv(r));
    c.finish();
    return kOk;
  }
  if (cmd == "sample") {
    const int level = sub->get_option("--level")->as<int>();
    const auto count = sub->get_option("--count")->as<Eigen::Index>();
    const auto amb = padded_ambient(plan.spec, level, plan.pad, limits);
    const std::uint64_t seed = derive_seed(plan.master_seed, 0x53414d50);
    c.manifest.task_seeds["sample/N=" + std::to_string(level)] = seed;
    Rng rng(seed);
    const Eigen::MatrixXd all = sample_gff_batch(amb.op, rng, count);
    Eigen::MatrixXd core(static_cast<Eigen::Index>(amb.core.size()), count);
    for (std::size_t i = 0; i < amb.core.size(); ++i) core.row(static_cast<Eigen::Index>(i)) = all.row(amb.core[i]);
    c.emit("samples.csv", samples_csv(core, core_labels(amb)));
    c.finish();
    return kOk;
  }
  if (cmd == "wall") {
    const int level = sub->get_option("--level")->as<int>();
    const bool dump = sub->get_option("--dump")->as<bool>();
    const auto amb = padded_ambient(plan.spec, level, plan.pad, limits);
    const auto obs = height_observables(plan, amb);
    std::vector<std::string> labels;
    std::vector<Eigen::VectorXd> kept;
    SampleSink sink;
    if (dump)
      sink = [&](const FieldSample& s) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(amb.core.size()));
        for (std::size_t i = 0; i < amb.core.size(); ++i) v[static_cast<Eigen::Index>(i)] = s.values[amb.core[i]];
        kept.push_back(std::move(v));
        labels.push_back("chain" + std::to_string(s.provenance.chain) + ":step" + std::to_string(s.provenance.step));
      };
    const auto stats = gibbs_hard_wall(amb.op, amb.core, plan.chains, obs, sink);
    for (std::uint32_t k = 0; k < plan.chains.chains; ++k)
      c.manifest.task_seeds["wall/chain" + std::to_string(k)] = derive_seed(plan.chains.master_seed, k);
    std::string csv = "observable,mean,variance,stderr,iat,rhat,chains,samples_per_chain\n";
    for (const auto& s : stats.observables) {
      csv += s.name + ',' + format_real(s.mean) + ',' + format_real(s.variance) + ',' + format_real(s.stderr) + ',' +
             format_real(s.iat) + ',' + format_real(s.rhat) + ',' + std::to_string(stats.chains) + ',' +
             std::to_string(stats.samples_per_chain) + '\n';
      c.log(s.name + "  mean=" + format_real(s.mean) + "  stderr=" + format_real(s.stderr) + "  rhat=" + format_real(s.rhat));
    }
    c.emit("wall_stats.csv", csv);
    if (dump) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(amb.core.size()), static_cast<Eigen::Index>(kept.size()));
      for (std::size_t k = 0; k < kept.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = kept[k];
      c.emit("wall_samples.csv", samples_csv(m, core_labels(amb), labels));
    }
    c.finish();
    return kOk;
  }
  if (cmd == "study") {
    const auto& only = o.only;
    const auto wanted = [&](const std::string& s) {
      return only.empty() || std::find(only.begin(), only.end(), s) != only.end();
    };
    StudyReport r;
    if (wanted("capacity")) r.append(capacity_sequence(plan));
    if (wanted("green_form")) r.append(green_form_convergence(plan));
    if (wanted("audit")) r.append(comparison_audit(plan));
    if (wanted("wall")) r.append(wall_probability_scaling(plan));
    if (wanted("height")) r.append(height_scaling(plan));
    r.environment["tool_version"] = tool_version();
    r.environment["spec"] = plan.spec.id();
    r.environment["master_seed"] = std::to_string(plan.master_seed);
    record_seeds(c, r);
    for (const auto& row : r.rows)
      c.log(row.study + "  N=" + std::to_string(row.level) + "  " + row.quantity + " = " + format_real(row.value) +
            (row.stderr > 0 ? " +- " + format_real(row.stderr) : std::string{}) +
            (row.flags.empty() ? std::string{} : "  [" + row.flags + "]"));
    c.emit("report.csv", report_csv(r));
    c.emit("report.json", report_json(r).dump(2) + "\n");
    c.finish();
    return kOk;
  }
  throw InputError("unknown command " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian free fields on generalized Sierpinski carpet graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-c,--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--carpet", o.carpet, "preset name (sierpinski_carpet, menger_sponge) or carpet file; overrides the config");
  app.add_option("-o,--out", o.out, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--pad", o.pad, "ambient pad (M = N + pad)")->check(CLI::Range(1, 8));
  app.add_flag("--deterministic", o.deterministic, "single-threaded replay: fixed timestamp, no runtimes");
  app.add_flag("-q,--quiet", o.quiet, "no progress output");

  auto* validate = app.add_subcommand("validate", "check the four carpet axioms");
  validate->add_flag("--deep", "re-test non-diagonality at level 2");
  auto* build = app.add_subcommand("build", "export an outer or inner graph");
  build->add_option("-N,--level", "level")->required()->check(CLI::NonNegativeNumber);
  build->add_option("--graph", "outer or inner")->default_val("outer")->check(CLI::IsMember({"outer", "inner"}));
  auto* green = app.add_subcommand("green", "Green's function entries on V_N in the padded ambient");
  green->add_option("-N,--level", "level")->required()->check(CLI::NonNegativeNumber);
  green->add_option("--pairs", o.pairs, "i,j pairs of V_N vertex indices, separated by ';' or given as several values; default: diagonal");
  auto* resistance = app.add_subcommand("resistance", "crosswire resistances and rho_hat");
  resistance->add_option("--max-level", "largest level")->default_val(3)->check(CLI::Range(1, 12));
  app.add_subcommand("capacity", "capacity sequence");
  auto* sample = app.add_subcommand("sample", "exact free-field samples on V_N");
  sample->add_option("-N,--level", "level")->required()->check(CLI::NonNegativeNumber);
  sample->add_option("-n,--count", "number of samples")->default_val(100)->check(CLI::PositiveNumber);
  auto* wall = app.add_subcommand("wall", "hard-wall Gibbs run on V_N");
  wall->add_option("-N,--level", "level")->required()->check(CLI::NonNegativeNumber);
  wall->add_flag("--dump", "write every recorded sample");
  auto* study = app.add_subcommand("study", "scaling studies");
  study->add_option("--only", o.only, "subset of capacity, green_form, audit, wall, height")
      ->check(CLI::IsMember({"capacity", "green_form", "audit", "wall", "height"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    return run(app, o, args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kInput;
  } catch (const ResourceError& e) {
    std::cerr << "resource cap exceeded: " << e.what() << '\n';
    return kResource;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
