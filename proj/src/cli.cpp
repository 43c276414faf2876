#include "rigidlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "rigidlab/certifier.hpp"
#include "rigidlab/error.hpp"
#include "rigidlab/estimators.hpp"
#include "rigidlab/models.hpp"
#include "rigidlab/parallel.hpp"
#include "rigidlab/plateau.hpp"
#include "rigidlab/samplers.hpp"
#include "rigidlab/simd/kernels.hpp"
#include "rigidlab/variance.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rigidlab::cli {

namespace {

constexpr int kArtifactSchema = 1;
// Jitter and bootstrap streams are derived from the sampler seed but must not
// replay the sampler's own draws.
constexpr std::uint64_t kJitterSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kBootstrapSalt = 0xc2b2ae3d27d4eb4fULL;

std::string fmt17(double x) { return fmt::format("{:.17g}", x); }

// ------------------------------------------------------------ validation

class Validator {
 public:
  void add(std::string field, std::string message) { errs_.push_back({std::move(field), std::move(message)}); }
  bool ok() const noexcept { return errs_.empty(); }
  std::vector<FieldError> take() { return std::move(errs_); }

  const json* object(const json& parent, const char* key, const std::string& path) {
    if (!parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      add(path, "must be an object");
      return nullptr;
    }
    return &v;
  }

  void known_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        add(join(path, k), "unknown field");
    }
  }

  void number(const json& obj, const char* key, const std::string& path, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      add(join(path, key), "must be a finite number");
      return;
    }
    out = v.get<double>();
  }

  void unsigned_int(const json& obj, const char* key, const std::string& path, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else {
      add(join(path, key), "must be a non-negative integer");
    }
  }

  void boolean(const json& obj, const char* key, const std::string& path, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) {
      add(join(path, key), "must be true or false");
      return;
    }
    out = obj.at(key).get<bool>();
  }

  void numbers(const json& obj, const char* key, const std::string& path, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
      add(join(path, key), "must be a non-empty array of numbers");
      return;
    }
    std::vector<double> xs;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        add(join(path, key), "must be a non-empty array of numbers");
        return;
      }
      xs.push_back(e.get<double>());
    }
    out = std::move(xs);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<FieldError> errs_;
};

std::string format_fields(const std::vector<FieldError>& fields) {
  std::string s = "invalid configuration:";
  for (const auto& f : fields) s += fmt::format(" {}: {};", f.field, f.message);
  s.pop_back();
  return s;
}

bool strictly_increasing(const std::vector<double>& xs) {
  return std::adjacent_find(xs.begin(), xs.end(), [](double a, double b) { return !(a < b); }) == xs.end();
}

// ------------------------------------------------------------ artifacts

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) { return fmt::format("{:016x}", h); }

/// Writes through a hidden temporary in the same directory and renames it into
/// place, so readers never observe a partial file.
void write_atomic(const fs::path& path, const std::string& bytes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".partial");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("write to '{}' failed", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError(fmt::format("cannot rename '{}' to '{}': {}", tmp.string(), path.string(), ec.message()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError(fmt::format("'{}' is not valid JSON", path.string()));
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

/// Collects artifacts of one run and emits the manifest last.
class Run {
 public:
  Run(std::string subcommand, fs::path out, const json& config)
      : sub_(std::move(subcommand)), out_(std::move(out)), config_(config) {}

  const fs::path& out() const noexcept { return out_; }

  void write(const std::string& rel, const std::string& bytes) {
    write_atomic(out_ / rel, bytes);
    artifacts_.push_back({{"path", rel}, {"bytes", bytes.size()}, {"fnv1a", hex64(fnv1a(bytes))}});
  }

  void finish(json summary, json seeds) {
    json m;
    m["schema"] = kArtifactSchema;
    m["tool"] = "rigidlab";
    m["version"] = RIGIDLAB_VERSION;
    m["subcommand"] = sub_;
    // The output location is not part of the experiment's identity.
    json identity = config_;
    if (identity.is_object()) identity.erase("output");
    m["config_hash"] = config_hash(identity);
    m["config"] = config_;
    m["seeds"] = std::move(seeds);
    m["threads"] = parallel::threads();
    m["simd"] = std::string(simd::to_string(simd::active_backend()));
    m["artifacts"] = artifacts_;
    m["summary"] = std::move(summary);
    m["timestamp"] = utc_timestamp();
    write_atomic(out_ / fmt::format("manifest.{}.json", sub_), dump(m));
  }

 private:
  std::string sub_;
  fs::path out_;
  json config_;
  json artifacts_ = json::array();
};

// ------------------------------------------------------------ point CSV

std::string points_csv(const PointConfiguration& c) {
  const int d = c.box().dim();
  std::string s;
  for (int a = 0; a < d; ++a) s += fmt::format("{}x{}", a ? "," : "", a + 1);
  s += "\n";
  s.reserve(s.size() + c.size() * static_cast<std::size_t>(d) * 25);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (int a = 0; a < d; ++a) {
      if (a) s += ',';
      s += fmt17(c.axis(a)[i]);
    }
    s += '\n';
  }
  return s;
}

PointConfiguration parse_points_csv(const fs::path& path, const SimulationBox& box) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("'{}' is empty", path.string()));
  const int d = box.dim();
  PointConfiguration c(box);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    Point p(d);
    const char* s = line.c_str();
    for (int a = 0; a < d; ++a) {
      char* end = nullptr;
      p[a] = std::strtod(s, &end);
      if (end == s) throw IoError(fmt::format("'{}' row {}: expected {} numbers", path.string(), row, d));
      s = end;
      if (a + 1 < d) {
        if (*s != ',') throw IoError(fmt::format("'{}' row {}: expected {} columns", path.string(), row, d));
        ++s;
      }
    }
    if (*s != '\0' && *s != '\r') throw IoError(fmt::format("'{}' row {}: trailing data", path.string(), row));
    for (int a = 0; a < d; ++a) {
      if (!(p[a] >= 0.0 && p[a] < box.side()))
        throw IoError(fmt::format("'{}' row {}: point outside [0, L)", path.string(), row));
    }
    c.add_unchecked(p);
  }
  return c;
}

// ------------------------------------------------------------ model helpers

PerturbationSpec perturbation_from_params(const json& p, int d) {
  if (p.contains("sigma")) return GaussianDisplacement{p.at("sigma").get<double>()};
  const auto& t = p.at("table");
  auto radii = t.at("radii").get<std::vector<double>>();
  auto dens = t.at("density").get<std::vector<double>>();
  if (t.value("normalize", false)) return RadialTable::normalized(d, std::move(radii), std::move(dens));
  return RadialTable(d, std::move(radii), std::move(dens));
}

bool samplable(const std::string& model) { return model == "poisson" || model == "perturbed_lattice"; }

SamplerModelSpec sampler_spec(const ExperimentConfig& cfg) {
  const int d = cfg.dim();
  SimulationBox box(d, cfg.sampler.box);
  const json& p = cfg.model.params;
  if (cfg.model.name == "poisson") return {PoissonSpec{p.value("rho", 1.0)}, box};
  return {PerturbedLatticeSpec{perturbation_from_params(p, d)}, box};
}

GridOptions grid_options(const QuadratureBlock& q) {
  GridOptions o;
  o.delta = q.grid_delta;
  o.near_radius = q.truncation;
  return o;
}

std::string csv_or_empty(double x, bool present) { return present ? fmt17(x) : std::string(); }

// ------------------------------------------------------------ subcommands

struct Context {
  ExperimentConfig cfg;
  json canonical;
  fs::path out;
  fs::path samples_dir;  // analyze only
};

json cmd_sample(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (!samplable(cfg.model.name))
    throw ConfigError("model.name", fmt::format("no sampler for model '{}' (poisson, perturbed_lattice)",
                                                  cfg.model.name));
  if (cfg.model.name == "perturbed_lattice" && cfg.sampler.box != std::round(cfg.sampler.box))
    throw ConfigError("sampler.box", "must be an integer for lattice models");
  const SamplerModelSpec spec = sampler_spec(cfg);
  const int d = spec.box.dim();
  const Seed seed{cfg.sampler.seed, 0};

  Run run("sample", ctx.out, ctx.canonical);
  std::size_t total = 0;
  // Replicas are drawn and written one at a time so memory stays bounded.
  for (std::uint64_t i = 0; i < cfg.sampler.replicas; ++i) {
    const PointConfiguration c = sample(spec, Seed{seed.value, i});
    total += c.size();
    const std::string stem = fmt::format("samples/replica_{:05d}", i);
    run.write(stem + ".csv", points_csv(c));
    json side = {{"schema", kArtifactSchema},
                 {"d", d},
                 {"L", spec.box.side()},
                 {"seed", {{"value", seed.value}, {"stream", i}}},
                 {"model", {{"name", cfg.model.name}, {"params", cfg.model.params}}},
                 {"count", c.size()}};
    run.write(stem + ".json", dump(side));
  }
  json summary = {{"replicas", cfg.sampler.replicas},
                  {"points_total", total},
                  {"d", d},
                  {"L", spec.box.side()},
                  {"model", cfg.model.name}};
  run.finish(summary, {{"sampler", seed.value}, {"replica_streams", {0, cfg.sampler.replicas}}});
  return summary;
}

json cmd_analyze(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const fs::path manifest_path = ctx.samples_dir / "manifest.sample.json";
  if (!fs::exists(manifest_path))
    throw IoError(fmt::format("no sample manifest at '{}' (run 'sample' first)", manifest_path.string()));
  const json manifest = read_json(manifest_path);
  if (!manifest.contains("summary") || !manifest.contains("artifacts") || !manifest.contains("seeds"))
    throw IoError(fmt::format("corrupt sample manifest '{}'", manifest_path.string()));

  const int d = manifest.at("summary").at("d").get<int>();
  const double L = manifest.at("summary").at("L").get<double>();
  const std::uint64_t seed = manifest.at("seeds").at("sampler").get<std::uint64_t>();
  const json sample_model = manifest.at("config").at("model");
  const SimulationBox box(d, L);

  std::vector<PointConfiguration> samples;
  for (const auto& a : manifest.at("artifacts")) {
    const std::string rel = a.at("path").get<std::string>();
    if (rel.size() < 4 || rel.compare(rel.size() - 4, 4, ".csv") != 0) continue;
    samples.push_back(parse_points_csv(ctx.samples_dir / rel, box));
  }
  if (samples.empty()) throw IoError("sample manifest lists no replica CSVs");

  for (double R : cfg.estimator.radii) {
    if (3.0 * R > L)
      throw ConfigError("estimator.radii", fmt::format("window radius {} does not fit box L = {} (3R <= L)", R, L));
  }
  if (cfg.estimator.r_max > L / 2.0)
    throw ConfigError("estimator.r_max", fmt::format("must be <= L/2 = {}", L / 2.0));

  const WindowPlacement placement{cfg.estimator.jitter, Seed{seed ^ kJitterSalt, 0}};
  Run run("analyze", ctx.out, ctx.canonical);
  json summary;
  summary["schema"] = kArtifactSchema;
  summary["replicas"] = samples.size();
  summary["d"] = d;
  summary["L"] = L;
  summary["model"] = sample_model;

  const VarianceCurve curve = number_variance_curve(samples, cfg.estimator.radii, placement);
  {
    std::string csv = "R,mean,var,ci\n";
    for (std::size_t k = 0; k < curve.radii.size(); ++k)
      csv += fmt::format("{},{},{},{}\n", fmt17(curve.radii[k]), fmt17(curve.mean_count[k]), fmt17(curve.var_count[k]),
                         fmt17(curve.ci_halfwidth[k]));
    run.write("variance_curve.csv", csv);
  }
  summary["variance_curve"] = curve.to_json();
  try {
    const GrowthFit fit = growth_exponent(curve);
    summary["growth_fit"] = fit.to_json();
    summary["exponent_verdict"] = fit.superhomogeneous_consistent ? "superhomogeneous_consistent" : "volume_order";
  } catch (const DomainError& e) {
    summary["growth_fit"] = nullptr;
    summary["exponent_verdict"] = "insufficient_radii";
    summary["growth_fit_note"] = e.what();
  }

  ModelPtr model;
  try {
    model = builtin_model(sample_model.at("name").get<std::string>(), sample_model.at("params"));
  } catch (const Error&) {
    model = nullptr;
  }

  const PairCorrelationEstimate pc = pair_correlation_hist(
      samples, cfg.estimator.bin_width, cfg.estimator.r_max,
      BootstrapOptions{static_cast<std::size_t>(cfg.estimator.bootstrap), Seed{seed ^ kBootstrapSalt, 0}});
  {
    std::string csv = "r_lo,r_hi,rho_tr_hat,stderr,pairs,rho_tr_model\n";
    for (std::size_t k = 0; k < pc.rho_tr_hat.size(); ++k) {
      const double mid = 0.5 * (pc.bin_edges[k] + pc.bin_edges[k + 1]);
      csv += fmt::format("{},{},{},{},{},{}\n", fmt17(pc.bin_edges[k]), fmt17(pc.bin_edges[k + 1]),
                         fmt17(pc.rho_tr_hat[k]), fmt17(pc.stderr[k]), fmt17(pc.pair_counts[k]),
                         csv_or_empty(model ? model->rho_tr_bar(mid) : 0.0, static_cast<bool>(model)));
    }
    run.write("pair_correlation.csv", csv);
  }
  summary["pair_correlation"] = {{"rho_bar", pc.rho_bar},
                                 {"bins", pc.rho_tr_hat.size()},
                                 {"bin_width", cfg.estimator.bin_width},
                                 {"r_max", cfg.estimator.r_max},
                                 {"bootstrap", pc.bootstrap}};

  if (cfg.estimator.linear_statistic) {
    const auto ls = *cfg.estimator.linear_statistic;
    if (d > 2) throw DomainError("linear statistics use plateau functions, available in d = 1, 2");
    if (ls.K * ls.R > L / 2.0)
      throw ConfigError("estimator.linear_statistic", fmt::format("support K R = {} exceeds L/2 = {}", ls.K * ls.R,
                                                                    L / 2.0));
    const PlateauFunction phi = build_plateau(d, ls.K);
    const BoxField f = centered_radial_field(box, [phi, R = ls.R](double r) { return phi.value(r / R); });
    const LinearStatistic st = linear_statistic_variance(samples, f, placement);
    json js = st.to_json();
    js["K"] = ls.K;
    js["R"] = ls.R;
    if (model && model->dim() == d) {
      const VlsValues v = evaluate_vls(*model, ScalarField::plateau(phi, ls.R), grid_options(cfg.quadrature));
      js["model_variance"] = v.vls1;
    }
    summary["linear_statistic"] = js;
  }
  run.write("analysis.json", dump(summary));
  json headline = {{"replicas", samples.size()}, {"exponent_verdict", summary["exponent_verdict"]}};
  if (summary["growth_fit"].is_object()) headline["slope"] = summary["growth_fit"]["slope"];
  run.finish(headline, {{"sampler", seed}, {"jitter", seed ^ kJitterSalt}, {"bootstrap", seed ^ kBootstrapSalt}});
  return headline;
}

json cmd_quadrature(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelPtr m = builtin_model(cfg.model.name, cfg.model.params);
  if (m->dim() > 2) throw DomainError("plateau statistics are available in d = 1, 2 only");
  const GridOptions opts = grid_options(cfg.quadrature);

  json reports = json::array();
  std::string csv = "K,R,vls1,vls3,leading,order1,order2,boundary,total,delta,change_vls3\n";
  for (double K : cfg.quadrature.K) {
    const PlateauFunction phi = build_plateau(m->dim(), K);
    for (double R : cfg.quadrature.R) {
      const VarianceReport rep = variance_report(*m, phi, R, opts);
      json j = rep.to_json();
      j["K"] = K;
      reports.push_back(j);
      const bool b = !rep.bound.kind.empty();
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", fmt17(K), fmt17(R), fmt17(rep.vls1), fmt17(rep.vls3),
                         csv_or_empty(rep.bound.leading, b), csv_or_empty(rep.bound.order1, b),
                         csv_or_empty(rep.bound.order2, b), csv_or_empty(rep.bound.boundary, b),
                         csv_or_empty(rep.bound.total, b), fmt17(rep.grid.delta), fmt17(rep.grid.change_vls3));
    }
  }
  const DefectReport defect = superhomogeneity_defect_report(*m, m->default_truncation());
  json doc = {{"schema", kArtifactSchema},
              {"model", {{"name", m->name()}, {"params", m->params()}, {"dim", m->dim()}}},
              {"defect",
               {{"value", defect.defect}, {"truncation", defect.truncation}, {"tail_error", defect.tail_error}}},
              {"reports", reports}};
  Run run("quadrature", ctx.out, ctx.canonical);
  run.write("quadrature.json", dump(doc));
  run.write("quadrature.csv", csv);
  json summary = {{"model", m->name()}, {"cases", reports.size()}, {"defect", defect.defect}};
  run.finish(summary, json::object());
  return summary;
}

json cmd_certify(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelPtr m = builtin_model(cfg.model.name, cfg.model.params);
  const GridOptions opts = grid_options(cfg.quadrature);
  const DecayKind kind = m->decay().kind;
  const bool exp_route =
      m->dim() == 2 && (kind == DecayKind::gaussian || kind == DecayKind::exponential);

  json certs = json::array();
  json verdicts = json::array();
  for (double eps : cfg.certify.epsilon) {
    const Certificate c = exp_route ? certify_exponential(*m, eps, opts) : certify_power_law(*m, eps, opts);
    certs.push_back(c.to_json());
    verdicts.push_back({{"epsilon", eps}, {"verdict", c.verdict()}, {"K", c.K}, {"R", c.R}});
  }
  Run run("certify", ctx.out, ctx.canonical);
  run.write("certificates.json", dump({{"schema", kArtifactSchema}, {"certificates", certs}}));
  json summary = {{"model", m->name()}, {"results", verdicts}};
  run.finish(summary, json::object());
  return summary;
}

json cmd_verdict(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelPtr m = builtin_model(cfg.model.name, cfg.model.params);
  const RigidityReport rep = verdict(*m, cfg.certify.epsilon.front(), grid_options(cfg.quadrature));
  json doc = rep.to_json();
  doc["schema"] = kArtifactSchema;
  Run run("verdict", ctx.out, ctx.canonical);
  run.write("verdict.json", dump(doc));
  json summary = {{"model", m->name()}, {"verdict", rep.verdict}, {"verdict_text", rep.verdict_text}};
  run.finish(summary, json::object());
  return summary;
}

std::string headline_of(const json& summary) {
  if (summary.contains("verdict")) return summary.at("verdict").get<std::string>();
  if (summary.contains("exponent_verdict")) return summary.at("exponent_verdict").get<std::string>();
  if (summary.contains("results")) {
    std::string s;
    for (const auto& r : summary.at("results"))
      s += fmt::format("{}eps={}:{}", s.empty() ? "" : " ", r.at("epsilon").get<double>(),
                       r.at("verdict").get<std::string>());
    return s;
  }
  if (summary.contains("cases")) return fmt::format("{} cases", summary.at("cases").get<std::size_t>());
  if (summary.contains("replicas")) return fmt::format("{} replicas", summary.at("replicas").get<std::uint64_t>());
  return "";
}

json cmd_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<fs::path> found;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.rfind("manifest.", 0) == 0 && name.size() > 14 && name.compare(name.size() - 5, 5, ".json") == 0 &&
        name != "manifest.report.json")
      found.push_back(e.path());
  }
  if (found.empty()) throw IoError(fmt::format("no manifests found under '{}'", dir.string()));
  std::sort(found.begin(), found.end());

  json runs = json::array();
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
  for (const auto& p : found) {
    const json m = read_json(p);
    for (const char* key : {"subcommand", "config_hash", "config", "summary"}) {
      if (!m.is_object() || !m.contains(key))
        throw IoError(fmt::format("corrupt manifest '{}': missing '{}'", p.string(), key));
    }
    const std::string rel = fs::relative(p, dir).generic_string();
    const std::string sub = m.at("subcommand").get<std::string>();
    const std::string hash = m.at("config_hash").get<std::string>();
    const json& model = m.at("config").value("model", json::object());
    runs.push_back({{"manifest", rel},
                    {"subcommand", sub},
                    {"model", model.value("name", "")},
                    {"config_hash", hash},
                    {"timestamp", m.value("timestamp", "")},
                    {"result", headline_of(m.at("summary"))}});
    groups[{sub, hash}].push_back(rel);
  }
  json dups = json::array();
  for (auto& r : runs) {
    const auto& g = groups.at({r["subcommand"].get<std::string>(), r["config_hash"].get<std::string>()});
    r["duplicate"] = g.size() > 1;
  }
  for (const auto& [key, members] : groups) {
    if (members.size() > 1) dups.push_back({{"subcommand", key.first}, {"config_hash", key.second}, {"runs", members}});
  }

  std::size_t w_path = 8, w_model = 5, w_result = 6;
  for (const auto& r : runs) {
    w_path = std::max(w_path, r["manifest"].get<std::string>().size());
    w_model = std::max(w_model, r["model"].get<std::string>().size());
    w_result = std::max(w_result, r["result"].get<std::string>().size());
  }
  std::string table = fmt::format("{:<{}}  {:<10}  {:<{}}  {:<16}  {:<{}}  {}\n", "manifest", w_path, "subcommand",
                                  "model", w_model, "config_hash", "result", w_result, "dup");
  for (const auto& r : runs) {
    table += fmt::format("{:<{}}  {:<10}  {:<{}}  {:<16}  {:<{}}  {}\n", r["manifest"].get<std::string>(), w_path,
                         r["subcommand"].get<std::string>(), r["model"].get<std::string>(), w_model,
                         r["config_hash"].get<std::string>(), r["result"].get<std::string>(), w_result,
                         r["duplicate"].get<bool>() ? "yes" : "");
  }

  json canonical = {{"report", dir.generic_string()}};
  Run run("report", dir, canonical);
  run.write("report.json", dump({{"schema", kArtifactSchema}, {"runs", runs}, {"duplicates", dups}}));
  run.write("report.txt", table);
  json summary = {{"runs", runs.size()}, {"duplicate_groups", dups.size()}};
  run.finish(summary, json::object());
  std::cout << table;
  return summary;
}

void print_error(const std::string& kind, const std::string& message, const json& extra = json::object()) {
  json e = {{"error", {{"kind", kind}, {"message", message}}}};
  for (const auto& [k, v] : extra.items()) e["error"][k] = v;
  std::cerr << e.dump() << "\n";
}

}  // namespace

// ------------------------------------------------------------ config model

ConfigError::ConfigError(std::string field, std::string message)
    : ConfigError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}

ConfigError::ConfigError(std::vector<FieldError> fields)
    : std::runtime_error(format_fields(fields)), fields_(std::move(fields)) {}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  Validator v;
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  v.known_keys(j, "", {"schema", "model", "sampler", "estimator", "quadrature", "certify", "output"});

  if (j.contains("schema") && !(j.at("schema").is_number_integer() && j.at("schema").get<int>() == kConfigSchema))
    v.add("schema", fmt::format("unsupported schema (expected {})", kConfigSchema));

  if (const json* m = v.object(j, "model", "model")) {
    v.known_keys(*m, "model", {"name", "params"});
    if (!m->contains("name") || !m->at("name").is_string()) {
      v.add("model.name", "required string");
    } else {
      c.model.name = m->at("name").get<std::string>();
      const auto names = builtin_model_names();
      if (std::find(names.begin(), names.end(), c.model.name) == names.end())
        v.add("model.name", fmt::format("unknown model '{}'", c.model.name));
    }
    if (m->contains("params")) {
      if (!m->at("params").is_object())
        v.add("model.params", "must be an object");
      else
        c.model.params = m->at("params");
    }
  } else if (!j.contains("model")) {
    v.add("model", "required");
  }
  if (v.ok()) {
    try {
      (void)builtin_model(c.model.name, c.model.params);
    } catch (const Error& e) {
      v.add("model.params", e.what());
    } catch (const json::exception& e) {
      v.add("model.params", e.what());
    }
  }

  if (const json* s = v.object(j, "sampler", "sampler")) {
    v.known_keys(*s, "sampler", {"box", "replicas", "seed"});
    v.number(*s, "box", "sampler", c.sampler.box);
    v.unsigned_int(*s, "replicas", "sampler", c.sampler.replicas);
    v.unsigned_int(*s, "seed", "sampler", c.sampler.seed);
  }
  if (!(c.sampler.box > 0.0)) v.add("sampler.box", "must be > 0");
  if (c.sampler.replicas < 1) v.add("sampler.replicas", "must be >= 1");

  if (const json* e = v.object(j, "estimator", "estimator")) {
    v.known_keys(*e, "estimator", {"radii", "bin_width", "r_max", "jitter", "bootstrap", "linear_statistic"});
    v.numbers(*e, "radii", "estimator", c.estimator.radii);
    v.number(*e, "bin_width", "estimator", c.estimator.bin_width);
    v.number(*e, "r_max", "estimator", c.estimator.r_max);
    v.boolean(*e, "jitter", "estimator", c.estimator.jitter);
    v.unsigned_int(*e, "bootstrap", "estimator", c.estimator.bootstrap);
    if (const json* ls = v.object(*e, "linear_statistic", "estimator.linear_statistic")) {
      LinearStatBlock b;
      v.known_keys(*ls, "estimator.linear_statistic", {"K", "R"});
      v.number(*ls, "K", "estimator.linear_statistic", b.K);
      v.number(*ls, "R", "estimator.linear_statistic", b.R);
      if (!(b.K >= PlateauFunction::kMinK))
        v.add("estimator.linear_statistic.K", fmt::format("must be >= {}", PlateauFunction::kMinK));
      if (!(b.R > 0.0)) v.add("estimator.linear_statistic.R", "must be > 0");
      c.estimator.linear_statistic = b;
    }
  }
  for (double R : c.estimator.radii) {
    if (!(R > 0.0)) v.add("estimator.radii", "radii must be > 0");
  }
  if (!strictly_increasing(c.estimator.radii)) v.add("estimator.radii", "must be strictly increasing");
  if (!c.estimator.radii.empty() && 3.0 * c.estimator.radii.back() > c.sampler.box)
    v.add("estimator.radii", fmt::format("largest window R = {} needs 3R <= sampler.box = {}",
                                         c.estimator.radii.back(), c.sampler.box));
  if (!(c.estimator.bin_width > 0.0)) v.add("estimator.bin_width", "must be > 0");
  if (!(c.estimator.r_max >= c.estimator.bin_width)) v.add("estimator.r_max", "must be >= bin_width");
  if (!(c.estimator.r_max <= c.sampler.box / 2.0))
    v.add("estimator.r_max", fmt::format("must be <= sampler.box / 2 = {}", c.sampler.box / 2.0));
  if (c.estimator.bootstrap < 1) v.add("estimator.bootstrap", "must be >= 1");

  if (const json* q = v.object(j, "quadrature", "quadrature")) {
    v.known_keys(*q, "quadrature", {"grid_delta", "truncation", "K", "R"});
    v.number(*q, "grid_delta", "quadrature", c.quadrature.grid_delta);
    v.number(*q, "truncation", "quadrature", c.quadrature.truncation);
    v.numbers(*q, "K", "quadrature", c.quadrature.K);
    v.numbers(*q, "R", "quadrature", c.quadrature.R);
  }
  if (!(c.quadrature.grid_delta >= 0.0)) v.add("quadrature.grid_delta", "must be >= 0 (0 = default)");
  if (!(c.quadrature.truncation >= 0.0)) v.add("quadrature.truncation", "must be >= 0 (0 = default)");
  for (double K : c.quadrature.K) {
    if (!(K >= PlateauFunction::kMinK)) v.add("quadrature.K", fmt::format("every K must be >= {}", PlateauFunction::kMinK));
  }
  for (double R : c.quadrature.R) {
    if (!(R > 0.0)) v.add("quadrature.R", "every R must be > 0");
  }

  if (const json* ce = v.object(j, "certify", "certify")) {
    v.known_keys(*ce, "certify", {"epsilon"});
    v.numbers(*ce, "epsilon", "certify", c.certify.epsilon);
  }
  for (double e : c.certify.epsilon) {
    if (!(e > 0.0)) v.add("certify.epsilon", "every epsilon must be > 0");
  }

  if (j.contains("output")) {
    if (!j.at("output").is_string() || j.at("output").get<std::string>().empty())
      v.add("output", "must be a non-empty string");
    else
      c.output = j.at("output").get<std::string>();
  }

  if (!v.ok()) throw ConfigError(v.take());
  return c;
}

json ExperimentConfig::to_json() const {
  json e = {{"radii", estimator.radii},     {"bin_width", estimator.bin_width}, {"r_max", estimator.r_max},
            {"jitter", estimator.jitter},   {"bootstrap", estimator.bootstrap}};
  if (estimator.linear_statistic)
    e["linear_statistic"] = {{"K", estimator.linear_statistic->K}, {"R", estimator.linear_statistic->R}};
  return {{"schema", kConfigSchema},
          {"model", {{"name", model.name}, {"params", model.params}}},
          {"sampler", {{"box", sampler.box}, {"replicas", sampler.replicas}, {"seed", sampler.seed}}},
          {"estimator", e},
          {"quadrature",
           {{"grid_delta", quadrature.grid_delta},
            {"truncation", quadrature.truncation},
            {"K", quadrature.K},
            {"R", quadrature.R}}},
          {"certify", {{"epsilon", certify.epsilon}}},
          {"output", output}};
}

int ExperimentConfig::dim() const { return builtin_model(model.name, model.params)->dim(); }

std::string config_hash(const json& canonical) { return hex64(fnv1a(canonical.dump())); }

// ------------------------------------------------------------ entry point

int main(int argc, const char* const* argv) {
  CLI::App app{"rigidlab: number-variance experiments, quadrature and rigidity certificates"};
  app.set_version_flag("--version", std::string(RIGIDLAB_VERSION));
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir, samples_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> grid_delta, truncation;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--out", out_dir, "Output directory (overrides config 'output')");
  app.add_option("--seed", seed, "Sampler seed (overrides sampler.seed)");
  app.add_option("--threads", threads, "Worker cap (fallback: RIGIDLAB_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--grid-delta", grid_delta, "Quadrature cell size (overrides quadrature.grid_delta)");
  app.add_option("--truncation", truncation, "Near-field radius (overrides quadrature.truncation)");

  const std::vector<std::pair<const char*, const char*>> subs = {
      {"sample", "Draw replicas and write one CSV per replica"},
      {"analyze", "Estimate variance curves, pair correlation and linear statistics from samples"},
      {"quadrature", "Evaluate both variance identities and the bounds for plateau statistics"},
      {"certify", "Build variance certificates for each epsilon"},
      {"verdict", "Check the rigidity criterion for the model"},
      {"report", "Aggregate the manifests found under a directory"}};
  for (const auto& [name, desc] : subs) {
    CLI::App* s = app.add_subcommand(name, desc);
    if (std::string_view(name) == "analyze")
      s->add_option("--samples", samples_dir, "Directory holding the sample manifest (default: --out)");
    if (std::string_view(name) == "report") s->add_option("dir", out_dir, "Directory to scan (default: --out)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitConfig;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (threads) parallel::set_threads(*threads);
    else parallel::set_threads(0);

    if (sub == "report") {
      if (out_dir.empty()) throw ConfigError("--out", "report needs a directory");
      const json s = cmd_report(out_dir);
      (void)s;
      return kExitOk;
    }

    if (config_path.empty()) throw ConfigError("--config", "required for this subcommand");
    json raw;
    {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("--config", fmt::format("cannot read '{}'", config_path));
      raw = json::parse(in, nullptr, false);
      if (raw.is_discarded()) throw ConfigError("--config", fmt::format("'{}' is not valid JSON", config_path));
    }
    if (raw.is_object()) {
      if (seed) raw["sampler"]["seed"] = *seed;
      if (grid_delta) raw["quadrature"]["grid_delta"] = *grid_delta;
      if (truncation) raw["quadrature"]["truncation"] = *truncation;
      if (!out_dir.empty()) raw["output"] = out_dir;
    }
    Context ctx;
    ctx.cfg = ExperimentConfig::from_json(raw);
    ctx.canonical = ctx.cfg.to_json();
    ctx.out = ctx.cfg.output;
    ctx.samples_dir = samples_dir.empty() ? ctx.out : fs::path(samples_dir);

    json summary;
    if (sub == "sample") summary = cmd_sample(ctx);
    else if (sub == "analyze") summary = cmd_analyze(ctx);
    else if (sub == "quadrature") summary = cmd_quadrature(ctx);
    else if (sub == "certify") summary = cmd_certify(ctx);
    else summary = cmd_verdict(ctx);
    std::cout << summary.dump() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    json fields = json::array();
    for (const auto& f : e.fields()) fields.push_back({{"field", f.field}, {"message", f.message}});
    print_error("config", e.what(), {{"fields", fields}});
    return kExitConfig;
  } catch (const PreconditionError& e) {
    print_error(std::string(to_string(e.kind())), e.what(), {{"value", e.value()}});
    return kExitModule;
  } catch (const ToleranceError& e) {
    print_error(std::string(to_string(e.kind())), e.what(), {{"bound", e.bound()}});
    return kExitModule;
  } catch (const Error& e) {
    print_error(std::string(to_string(e.kind())), e.what());
    return kExitModule;
  } catch (const json::exception& e) {
    print_error("io", e.what());
    return kExitModule;
  } catch (const fs::filesystem_error& e) {
    print_error("io", e.what());
    return kExitModule;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitInternal;
  }
}

}  // namespace rigidlab::cli
