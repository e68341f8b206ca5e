#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "avl/errors.hpp"
#include "avl/kernels.hpp"
#include "avl/model.hpp"
#include "avl/simulate.hpp"

namespace avl {

using json = nlohmann::json;

struct RunSettings {
  int steps = 500;
  double t = 1.0;
  std::size_t paths = 10000;
  std::uint64_t seed = 42;
  std::string scheme = "euler";  // euler | inverse-gaussian | ou-exact
};

inline const std::set<std::string>& known_schemes() {
  static const std::set<std::string> s{"euler", "inverse-gaussian", "ou-exact"};
  return s;
}

// A general affine Volterra model: kernel, characteristics and initial state.
struct AffineModel {
  KernelSpec kernel = KernelSpec::constant(1.0);
  AffineParams params;
  Eigen::VectorXd x0;
};

struct ModelConfig {
  std::optional<HestonParams> heston;
  std::optional<AffineModel> affine;
  RunSettings run;

  std::size_t dimension() const { return heston ? 2 : affine->params.d; }
  KernelSpec kernel() const { return heston ? heston_kernel(*heston) : affine->kernel; }
  AffineParams params() const { return heston ? heston_to_affine(*heston) : affine->params; }
  Eigen::VectorXd x0() const {
    if (!heston) return affine->x0;
    Eigen::VectorXd x(2);
    x << std::log(heston->s0), heston->v0;
    return x;
  }
};

namespace detail {

inline json toml_to_json(const toml::node& n) {
  if (auto* t = n.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (auto* a = n.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (auto* v = n.as_integer()) return v->get();
  if (auto* v = n.as_floating_point()) return v->get();
  if (auto* v = n.as_boolean()) return v->get();
  if (auto* v = n.as_string()) return v->get();
  throw ValidationError("config: unsupported TOML value type");
}

// Collects schema violations so that all offending keys are reported at once.
class SchemaErrors {
public:
  void add(std::string msg) { msgs_.push_back(std::move(msg)); }
  bool empty() const { return msgs_.empty(); }
  void raise(const std::string& source) const {
    if (msgs_.empty()) return;
    std::string s = "config " + source + ":";
    for (const auto& m : msgs_) s += "\n  " + m;
    throw ValidationError(s);
  }

private:
  std::vector<std::string> msgs_;
};

inline void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed,
                       SchemaErrors& err) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) err.add("unknown key '" + where + k + "'");
}

inline std::optional<double> number(const json& obj, const std::string& key, const std::string& where,
                                    SchemaErrors& err, bool required) {
  if (!obj.contains(key)) {
    if (required) err.add("missing key '" + where + key + "'");
    return std::nullopt;
  }
  if (!obj[key].is_number()) {
    err.add("key '" + where + key + "' must be a number");
    return std::nullopt;
  }
  return obj[key].get<double>();
}

inline Eigen::VectorXd vector_from(const json& v, const std::string& where, SchemaErrors& err) {
  if (!v.is_array()) {
    err.add("key '" + where + "' must be an array of numbers");
    return {};
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      err.add("key '" + where + "' must be an array of numbers");
      return {};
    }
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

inline Eigen::MatrixXd matrix_from(const json& v, std::size_t d, const std::string& where, SchemaErrors& err) {
  const auto n = static_cast<Eigen::Index>(d);
  if (!v.is_array() || v.size() != d) {
    err.add("key '" + where + "' must be a " + std::to_string(d) + "x" + std::to_string(d) + " array");
    return Eigen::MatrixXd::Zero(n, n);
  }
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = vector_from(v[i], where, err);
    if (row.size() != n) {
      err.add("key '" + where + "' must be a " + std::to_string(d) + "x" + std::to_string(d) + " array");
      return Eigen::MatrixXd::Zero(n, n);
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

} // namespace detail

// Kernel grammar: {"kind": "constant" | "fractional" | "exponential" | "gamma",
// "c", "alpha", "lambda"} or {"kind": "sum", "terms": [...]} or
// {"kind": "diagonal", "entries": [...]}.
inline KernelSpec kernel_from_json(const json& j, const std::string& where = "kernel.") {
  detail::SchemaErrors err;
  if (!j.is_object()) throw ValidationError("config: '" + where + "' must be a table");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ValidationError("config: missing key '" + where + "kind'");
  const std::string kind = j["kind"].get<std::string>();
  auto num = [&](const char* k) { return detail::number(j, k, where, err, true).value_or(0.0); };
  auto list = [&](const char* key) {
    std::vector<KernelSpec> out;
    if (!j.contains(key) || !j[key].is_array()) {
      err.add("key '" + where + key + "' must be an array of kernels");
      return out;
    }
    for (std::size_t i = 0; i < j[key].size(); ++i)
      out.push_back(kernel_from_json(j[key][i], where + key + "[" + std::to_string(i) + "]."));
    return out;
  };
  if (kind == "constant") {
    detail::check_keys(j, where, {"kind", "c"}, err);
    const double c = num("c");
    err.raise("kernel");
    return KernelSpec::constant(c);
  }
  if (kind == "fractional") {
    detail::check_keys(j, where, {"kind", "c", "alpha"}, err);
    const double c = num("c"), a = num("alpha");
    err.raise("kernel");
    return KernelSpec::fractional(c, a);
  }
  if (kind == "exponential") {
    detail::check_keys(j, where, {"kind", "c", "lambda"}, err);
    const double c = num("c"), l = num("lambda");
    err.raise("kernel");
    return KernelSpec::exponential(c, l);
  }
  if (kind == "gamma") {
    detail::check_keys(j, where, {"kind", "c", "alpha", "lambda"}, err);
    const double c = num("c"), a = num("alpha"), l = num("lambda");
    err.raise("kernel");
    return KernelSpec::gamma(c, a, l);
  }
  if (kind == "sum") {
    detail::check_keys(j, where, {"kind", "terms"}, err);
    auto terms = list("terms");
    err.raise("kernel");
    return KernelSpec::sum(std::move(terms));
  }
  if (kind == "diagonal") {
    detail::check_keys(j, where, {"kind", "entries"}, err);
    auto entries = list("entries");
    err.raise("kernel");
    return KernelSpec::diagonal(std::move(entries));
  }
  throw ValidationError("config: unknown kernel kind '" + kind + "' at '" + where + "kind'");
}

inline json kernel_to_json(const KernelSpec& k) {
  struct V {
    json operator()(const ConstantKernel& x) const { return {{"kind", "constant"}, {"c", x.c}}; }
    json operator()(const FractionalKernel& x) const {
      return {{"kind", "fractional"}, {"c", x.c}, {"alpha", x.alpha}};
    }
    json operator()(const ExponentialKernel& x) const {
      return {{"kind", "exponential"}, {"c", x.c}, {"lambda", x.lambda}};
    }
    json operator()(const GammaKernel& x) const {
      return {{"kind", "gamma"}, {"c", x.c}, {"alpha", x.alpha}, {"lambda", x.lambda}};
    }
    json operator()(const SumKernel& x) const {
      json t = json::array();
      for (const auto& e : x.terms) t.push_back(kernel_to_json(e));
      return {{"kind", "sum"}, {"terms", t}};
    }
    json operator()(const DiagonalKernel& x) const {
      json t = json::array();
      for (const auto& e : x.entries) t.push_back(kernel_to_json(e));
      return {{"kind", "diagonal"}, {"entries", t}};
    }
  };
  return std::visit(V{}, k.variant());
}

inline KernelSpec kernel_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("kernel: malformed JSON: ") + e.what());
  }
  return kernel_from_json(j);
}

inline HestonParams heston_from_json(const json& j) {
  detail::SchemaErrors err;
  const std::string w = "heston.";
  if (!j.is_object()) throw ValidationError("config: 'heston' must be a table");
  detail::check_keys(j, w, {"s0", "v0", "kappa", "theta", "sigma", "rho", "kernel"}, err);
  HestonParams h;
  h.s0 = detail::number(j, "s0", w, err, false).value_or(1.0);
  h.v0 = detail::number(j, "v0", w, err, true).value_or(0.0);
  h.kappa = detail::number(j, "kappa", w, err, true).value_or(0.0);
  h.theta = detail::number(j, "theta", w, err, true).value_or(0.0);
  h.sigma = detail::number(j, "sigma", w, err, true).value_or(0.0);
  h.rho = detail::number(j, "rho", w, err, true).value_or(0.0);
  if (!j.contains("kernel")) err.add("missing key 'heston.kernel'");
  err.raise("heston");
  h.kernel = kernel_from_json(j["kernel"], "heston.kernel.");
  const auto v = validate(h);
  if (!v.empty()) {
    std::string s = "heston parameters invalid:";
    for (const auto& m : v) s += "\n  " + m;
    throw ValidationError(s);
  }
  return h;
}

inline AffineModel affine_from_json(const json& j) {
  detail::SchemaErrors err;
  const std::string w = "affine.";
  if (!j.is_object()) throw ValidationError("config: 'affine' must be a table");
  detail::check_keys(j, w, {"d", "state_space", "A", "b0", "B", "x0", "kernel"}, err);
  for (const char* k : {"d", "A", "b0", "B", "x0", "kernel"})
    if (!j.contains(k)) err.add(std::string("missing key 'affine.") + k + "'");
  err.raise("affine");
  if (!j["d"].is_number_integer() || j["d"].get<long>() < 1) throw ValidationError("config: 'affine.d' must be a positive integer");
  const auto d = static_cast<std::size_t>(j["d"].get<long>());
  const StateSpace s = state_space_from_string(j.value("state_space", std::string("real")));
  AffineModel m;
  m.params = AffineParams::zeros(d, s);
  if (!j["A"].is_array() || j["A"].size() != d + 1)
    err.add("key 'affine.A' must list d + 1 matrices A^0 .. A^d");
  else
    for (std::size_t i = 0; i <= d; ++i) m.params.A[i] = detail::matrix_from(j["A"][i], d, w + "A[" + std::to_string(i) + "]", err);
  m.params.b0 = detail::vector_from(j["b0"], w + "b0", err);
  m.params.B = detail::matrix_from(j["B"], d, w + "B", err);
  m.x0 = detail::vector_from(j["x0"], w + "x0", err);
  if (m.params.b0.size() != static_cast<Eigen::Index>(d)) err.add("key 'affine.b0' must have length d");
  if (m.x0.size() != static_cast<Eigen::Index>(d)) err.add("key 'affine.x0' must have length d");
  err.raise("affine");
  m.kernel = kernel_from_json(j["kernel"], "affine.kernel.");
  if (!m.kernel.is_scalar() && m.kernel.dimension() != d)
    throw ValidationError("config: diagonal kernel dimension does not match affine.d");
  require_valid(m.params);
  return m;
}

inline RunSettings run_from_json(const json& j) {
  detail::SchemaErrors err;
  RunSettings r;
  if (j.is_null()) return r;
  if (!j.is_object()) throw ValidationError("config: 'run' must be a table");
  detail::check_keys(j, "run.", {"steps", "t", "paths", "seed", "scheme"}, err);
  auto positive_int = [&](const char* k, auto& target) {
    if (!j.contains(k)) return;
    if (!j[k].is_number_integer() || j[k].get<long long>() < 1)
      err.add(std::string("key 'run.") + k + "' must be a positive integer");
    else
      target = static_cast<std::remove_reference_t<decltype(target)>>(j[k].get<long long>());
  };
  positive_int("steps", r.steps);
  positive_int("paths", r.paths);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
      err.add("key 'run.seed' must be a nonnegative integer");
    else
      r.seed = j["seed"].get<std::uint64_t>();
  }
  if (auto t = detail::number(j, "t", "run.", err, false)) {
    if (!(*t > 0.0)) err.add("key 'run.t' must be positive");
    r.t = *t;
  }
  if (j.contains("scheme")) {
    if (!j["scheme"].is_string()) err.add("key 'run.scheme' must be a string");
    else if (!known_schemes().count(j["scheme"].get<std::string>()))
      err.add("key 'run.scheme' must be one of euler, inverse-gaussian, ou-exact");
    else
      r.scheme = j["scheme"].get<std::string>();
  }
  err.raise("run");
  return r;
}

inline ModelConfig config_from_json(const json& j) {
  detail::SchemaErrors err;
  if (!j.is_object()) throw ValidationError("config: top level must be a table");
  detail::check_keys(j, "", {"heston", "affine", "run"}, err);
  if (j.contains("heston") == j.contains("affine")) err.add("exactly one of 'heston' or 'affine' is required");
  err.raise("file");
  ModelConfig c;
  if (j.contains("heston")) c.heston = heston_from_json(j["heston"]);
  else c.affine = affine_from_json(j["affine"]);
  c.run = run_from_json(j.contains("run") ? j["run"] : json());
  return c;
}

// Loads a TOML (default) or JSON (.json extension) model file.
inline ModelConfig load_config(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw ValidationError("config file not found: " + path);
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  if (fs::path(path).extension() == ".json") {
    try {
      j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      throw ValidationError("config " + path + ": malformed JSON: " + e.what());
    }
  } else {
    try {
      j = detail::toml_to_json(toml::parse(ss.str(), path));
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << "config " << path << ": malformed TOML: " << e.description() << " at line " << e.source().begin.line;
      throw ValidationError(msg.str());
    }
  }
  return config_from_json(j);
}

} // namespace avl
