#pragma once

#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avl/config.hpp"
#include "avl/csv.hpp"
#include "avl/pricing.hpp"
#include "avl/resolvents.hpp"
#include "avl/riccati.hpp"
#include "avl/simulate.hpp"
#include "avl/transform.hpp"
#include "avl/validation.hpp"

namespace avl::cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse " + what + " '" + s + "' as a number");
  }
}

// Accepts "a", "bi", "a+bi", "a-bi", "i", "-i" (j is accepted for i).
inline cplx parse_complex(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) throw ValidationError("empty complex number");
  const char last = s.back();
  if (last != 'i' && last != 'j') return parse_real(s, "complex number");
  const std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;)
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  const std::string re = split == std::string::npos ? "" : body.substr(0, split);
  std::string im = split == std::string::npos ? body : body.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : parse_real(re, "complex number"), parse_real(im, "complex number")};
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline RowC parse_complex_row(const std::string& s) {
  const auto parts = split(s, ',');
  RowC r(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) r(static_cast<Eigen::Index>(i)) = parse_complex(parts[i]);
  return r;
}

inline std::vector<double> parse_real_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_real(p, what));
  if (out.empty()) throw ValidationError(what + " list is empty");
  return out;
}

// "<a>:<b>:<n>" (n points from a to b, complex endpoints) or a comma list.
inline std::vector<cplx> parse_u_grid(const std::string& s) {
  const auto parts = split(s, ':');
  std::vector<cplx> out;
  if (parts.size() == 3) {
    const cplx a = parse_complex(parts[0]), b = parse_complex(parts[1]);
    const double n = parse_real(parts[2], "u-grid count");
    if (n < 1 || n != std::floor(n)) throw ValidationError("u-grid count must be a positive integer");
    const auto m = static_cast<std::size_t>(n);
    for (std::size_t k = 0; k < m; ++k)
      out.push_back(m == 1 ? a : a + (b - a) * (static_cast<double>(k) / static_cast<double>(m - 1)));
    return out;
  }
  if (parts.size() != 1) throw ValidationError("u-grid must be '<a>:<b>:<n>' or a comma list");
  for (const auto& p : split(s, ',')) out.push_back(parse_complex(p));
  return out;
}

inline Eigen::MatrixXd parse_matrix_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("b-matrix: malformed JSON: ") + e.what());
  }
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ValidationError("b-matrix must be a square array of arrays");
  detail::SchemaErrors err;
  const auto m = detail::matrix_from(j, j.size(), "b-matrix", err);
  err.raise("b-matrix");
  return m;
}

inline std::unique_ptr<CsvWriter> open_csv(const std::string& path, bool force, std::ostream& out) {
  if (path.empty() || path == "-") return std::make_unique<CsvWriter>(out);
  return std::make_unique<CsvWriter>(path, force);
}

inline std::vector<std::string> matrix_columns(const std::string& prefix, std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out.push_back(prefix + "_" + std::to_string(i + 1) + std::to_string(j + 1));
  return out;
}

// ---- resolvent ----

struct ResolventArgs {
  std::string kernel, which = "second", b_matrix, out;
  double t_end = 1.0;
  int steps = 500;
  bool force = false;
};

inline int cmd_resolvent(const ResolventArgs& a, std::ostream& out) {
  const KernelSpec k = kernel_from_string(a.kernel);
  const TimeGrid g(a.t_end, a.steps);
  std::size_t d = k.dimension();
  Eigen::MatrixXd b;
  if (a.which == "eb") {
    if (a.b_matrix.empty()) throw ValidationError("resolvent --which eb requires --b-matrix");
    b = parse_matrix_json(a.b_matrix);
    if (b.rows() != b.cols()) throw ValidationError("b-matrix must be square");
    if (!k.is_scalar() && static_cast<std::size_t>(b.rows()) != d)
      throw ValidationError("b-matrix dimension does not match the kernel");
    d = static_cast<std::size_t>(b.rows());
  } else if (!a.b_matrix.empty()) {
    throw ValidationError("--b-matrix applies to --which eb only");
  }
  const auto entries = k.diagonal_entries(d);
  std::vector<KernelMoments> km;
  for (const auto& e : entries) km.push_back(kernel_moments(e, g));

  std::vector<Eigen::MatrixXd> values(g.size());
  std::vector<double> residual(g.size(), 0.0);
  std::string prefix;
  if (a.which == "second") {
    prefix = "r";
    const auto r = resolvent_second_kind(k, g);
    values = r.values;
    for (std::size_t c = 0; c < d; ++c) {
      std::vector<Eigen::MatrixXd> rc(g.size());
      for (std::size_t i = 0; i < g.size(); ++i)
        rc[i] = Eigen::MatrixXd::Constant(1, 1, r.values[i](static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)));
      std::vector<Eigen::MatrixXd> ci(g.size() - 1);
      for (std::size_t j = 0; j + 1 < g.size(); ++j)
        ci[j] = Eigen::MatrixXd::Constant(1, 1, r.cell_integral(j)(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)));
      const auto res = second_kind_residual(km[c], MatrixFunction(g, rc, ci));
      for (std::size_t i = 0; i < g.size(); ++i) residual[i] = std::max(residual[i], std::abs(res[i]));
    }
  } else if (a.which == "first") {
    prefix = "l";
    const auto l = resolvent_first_kind(k, g);
    Eigen::MatrixXd cum = l.atom0;
    values[0] = cum;
    for (std::size_t i = 1; i < g.size(); ++i) {
      cum += l.mass[i - 1];
      values[i] = cum;
    }
    for (std::size_t c = 0; c < d; ++c) {
      const auto ec = static_cast<Eigen::Index>(c);
      MeasureRepr lc{g, Eigen::MatrixXd::Constant(1, 1, l.atom0(ec, ec)), {}};
      for (const auto& m : l.mass) lc.mass.push_back(Eigen::MatrixXd::Constant(1, 1, m(ec, ec)));
      const auto res = first_kind_residual(km[c], lc);
      for (std::size_t i = 0; i < g.size(); ++i) residual[i] = std::max(residual[i], std::abs(res[i]));
    }
  } else if (a.which == "eb") {
    prefix = "e";
    const auto pair = resolvent_pair_b(k, b, g);
    values = pair.e_b.values;
    // E_B = K + (K B) * E_B, with K * . by exact kernel cell integrals
    for (std::size_t i = 0; i < g.size(); ++i) {
      Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < i; ++j) {
        const Eigen::MatrixXd be = b * pair.e_b.values[j];
        for (std::size_t c = 0; c < d; ++c) conv.row(static_cast<Eigen::Index>(c)) += km[c].m1[i - 1 - j] * be.row(static_cast<Eigen::Index>(c));
      }
      Eigen::MatrixXd kn = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (std::size_t c = 0; c < d; ++c) kn(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = km[c].nodes[i];
      residual[i] = (values[i] - kn - conv).cwiseAbs().maxCoeff();
    }
  } else {
    throw ValidationError("--which must be one of first, second, eb");
  }

  auto csv = open_csv(a.out, a.force, out);
  std::vector<std::string> cols{"t"};
  for (const auto& c : matrix_columns(prefix, d)) cols.push_back(c);
  cols.push_back("residual");
  csv->header(cols);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> row{g.node(i)};
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) row.push_back(values[i](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    row.push_back(residual[i]);
    csv->row(row);
  }
  return kExitOk;
}

// ---- shared model plumbing ----

struct ModelArgs {
  std::string model;
  std::optional<double> t;
  std::optional<int> steps;
};

inline double horizon(const ModelConfig& c, const ModelArgs& a) { return a.t ? *a.t : c.run.t; }
inline int steps_of(const ModelConfig& c, const ModelArgs& a) { return a.steps ? *a.steps : c.run.steps; }

inline RowC checked_u(const RowC& u, const ModelConfig& c) {
  if (static_cast<std::size_t>(u.size()) != c.dimension())
    throw ValidationError("u has " + std::to_string(u.size()) + " entries, model dimension is " +
                          std::to_string(c.dimension()));
  return u;
}

// Whether the martingale hypothesis behind the transform formula is covered
// by the sign conditions (or the Gaussian case).
inline bool hypothesis_verified(const AffineParams& p, const TransformInputs& in, const TimeGrid& g) {
  if (p.state_space == StateSpace::RealSpace && p.gaussian()) return true;
  return check_sign_conditions(p, in, g).ok;
}

// ---- riccati ----

struct RiccatiArgs {
  ModelArgs m;
  std::string u, out;
  bool force = false;
};

inline int cmd_riccati(const RiccatiArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(a.m.model);
  const double T = horizon(cfg, a.m);
  const TimeGrid g(T, steps_of(cfg, a.m));
  const auto in = TransformInputs::with_u(checked_u(parse_complex_row(a.u), cfg), T);
  const auto sol = solve_riccati(cfg.kernel(), cfg.params(), in, g);
  if (!sol.global())
    err << "riccati: solution blows up near t = " << sol.t_max_estimate << "; later rows are nan\n";
  const std::size_t d = cfg.dimension();
  auto csv = open_csv(a.out, a.force, out);
  std::vector<std::string> cols{"t"};
  for (std::size_t c = 1; c <= d; ++c) {
    cols.push_back("re_psi_" + std::to_string(c));
    cols.push_back("im_psi_" + std::to_string(c));
  }
  cols.push_back("re_phi");
  cols.push_back("im_phi");
  for (std::size_t c = 1; c <= d; ++c) {
    cols.push_back("re_chi_" + std::to_string(c));
    cols.push_back("im_chi_" + std::to_string(c));
  }
  cols.push_back("status");
  csv->header(cols);
  const std::string status = sol.global() ? "global" : "blowup";
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<std::string> row{format_double(g.node(i))};
    for (std::size_t c = 0; c < d; ++c) {
      row.push_back(format_double(sol.psi[i](static_cast<Eigen::Index>(c)).real()));
      row.push_back(format_double(sol.psi[i](static_cast<Eigen::Index>(c)).imag()));
    }
    row.push_back(format_double(sol.phi[i].real()));
    row.push_back(format_double(sol.phi[i].imag()));
    for (std::size_t c = 0; c < d; ++c) {
      row.push_back(format_double(sol.chi[i](static_cast<Eigen::Index>(c)).real()));
      row.push_back(format_double(sol.chi[i](static_cast<Eigen::Index>(c)).imag()));
    }
    row.push_back(status);
    csv->line(row);
  }
  return kExitOk;
}

// ---- transform ----

struct TransformArgs {
  ModelArgs m;
  std::string u_grid, out;
  int component = 1;
  bool force = false;
};

inline int cmd_transform(const TransformArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(a.m.model);
  const double T = horizon(cfg, a.m);
  const TimeGrid g(T, steps_of(cfg, a.m));
  const std::size_t d = cfg.dimension();
  if (a.component < 1 || static_cast<std::size_t>(a.component) > d)
    throw ValidationError("--component must lie in 1.." + std::to_string(d));
  const auto us = parse_u_grid(a.u_grid);
  const auto k = cfg.kernel();
  const auto p = cfg.params();
  const Eigen::VectorXd x0 = cfg.x0();
  struct Row {
    cplx value{std::nan(""), std::nan("")}, y0{std::nan(""), std::nan("")};
    bool global = false, verified = false;
  };
  std::vector<Row> rows(us.size());
  parallel_for(us.size(), [&](std::size_t i) {
    RowC u = RowC::Zero(static_cast<Eigen::Index>(d));
    u(a.component - 1) = us[i];
    const auto in = TransformInputs::with_u(u, T);
    RiccatiOptions opt;
    opt.compute_chi = false;
    const auto sol = solve_riccati(k, p, in, g, opt);
    rows[i].verified = hypothesis_verified(p, in, g);
    if (sol.global()) {
      rows[i].global = true;
      rows[i].y0 = y_zero(x0, sol, p, in);
      rows[i].value = std::exp(rows[i].y0);
    }
  });
  auto csv = open_csv(a.out, a.force, out);
  csv->header({"re_u", "im_u", "re_value", "im_value", "re_y0", "im_y0", "hypothesis", "status"});
  std::size_t unverified = 0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    unverified += rows[i].verified ? 0 : 1;
    csv->line({format_double(us[i].real()), format_double(us[i].imag()), format_double(rows[i].value.real()),
               format_double(rows[i].value.imag()), format_double(rows[i].y0.real()), format_double(rows[i].y0.imag()),
               rows[i].verified ? "verified" : "unverified martingale hypothesis",
               rows[i].global ? "global" : "blowup"});
  }
  if (unverified > 0)
    err << "transform: " << unverified << " of " << us.size()
        << " inputs lie outside the sign conditions; martingale hypothesis unverified\n";
  return kExitOk;
}

// ---- simulate ----

struct SimulateArgs {
  ModelArgs m;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::string scheme, out_paths, functional;
  bool force = false;
};

inline PathEnsemble simulate_model(const ModelConfig& cfg, const TimeGrid& g, std::size_t n_paths,
                                   std::uint64_t seed, const std::string& scheme, const StorageSpec& storage) {
  SimulationOptions opt;
  opt.storage = storage;
  if (!known_schemes().count(scheme)) throw ValidationError("unknown scheme '" + scheme + "'");
  if (cfg.heston) {
    if (scheme == "ou-exact") throw ValidationError("scheme ou-exact needs a Gaussian affine model");
    opt.heston_scheme = heston_scheme_from_string(scheme);
    return simulate_heston(*cfg.heston, g, n_paths, seed, opt);
  }
  if (scheme == "inverse-gaussian") throw ValidationError("scheme inverse-gaussian applies to heston models only");
  if (scheme == "ou-exact") return simulate_ou_exact(cfg.affine->kernel, cfg.affine->params, cfg.affine->x0, g, n_paths, seed, opt);
  return simulate_volterra_euler(cfg.affine->kernel, cfg.affine->params, cfg.affine->x0, g, n_paths, seed, opt);
}

// "u=<complex list>[;f=<complex list>]" with constant f.
inline TransformInputs parse_functional(const std::string& spec, double T, std::size_t d) {
  TransformInputs in;
  in.T = T;
  bool have_u = false;
  for (const auto& part : split(spec, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ValidationError("functional spec entries must be 'u=...' or 'f=...'");
    const std::string key = trim(part.substr(0, eq)), val = part.substr(eq + 1);
    const RowC r = parse_complex_row(val);
    if (static_cast<std::size_t>(r.size()) != d) throw ValidationError("functional '" + key + "' must have d entries");
    if (key == "u") {
      in.u = r;
      have_u = true;
    } else if (key == "f") {
      in.f_fn = [r](double) { return r; };
    } else {
      throw ValidationError("unknown functional key '" + key + "'");
    }
  }
  if (!have_u) throw ValidationError("functional spec needs u=...");
  return in;
}

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(a.m.model);
  const double T = horizon(cfg, a.m);
  const TimeGrid g(T, steps_of(cfg, a.m));
  const std::size_t n_paths = a.paths ? *a.paths : cfg.run.paths;
  const std::uint64_t seed = a.seed ? *a.seed : cfg.run.seed;
  const std::string scheme = a.scheme.empty() ? cfg.run.scheme : a.scheme;
  std::optional<TransformInputs> fn;
  if (!a.functional.empty()) fn = parse_functional(a.functional, T, cfg.dimension());
  const bool all_nodes = !a.out_paths.empty() || (fn && fn->has_f());
  std::unique_ptr<CsvWriter> csv;
  if (!a.out_paths.empty()) csv = std::make_unique<CsvWriter>(a.out_paths, a.force);
  const auto paths = simulate_model(cfg, g, n_paths, seed, scheme, all_nodes ? StorageSpec::all() : StorageSpec::terminal());
  const std::size_t d = paths.d, last = paths.n_stored() - 1;

  out << std::setprecision(10);
  out << "scheme " << paths.scheme_tag << ", paths " << n_paths << ", steps " << g.n_steps() << ", T " << T
      << ", seed " << seed << "\n";
  if (paths.psd_clip > 0.0) out << "covariance eigenvalue clip " << paths.psd_clip << "\n";
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t q = 0; q < n_paths; ++q) {
      const double x = paths.at(q, last, c);
      s += x;
      s2 += x * x;
    }
    const double n = static_cast<double>(n_paths), m = s / n;
    out << "X_T[" << c + 1 << "] mean " << m << " se " << std::sqrt(std::max(s2 / n - m * m, 0.0) / n) << "\n";
  }
  if (fn) {
    const auto mc = mc_functional(paths, *fn);
    out << "functional mc " << mc.estimate.real() << (mc.estimate.imag() < 0 ? " - " : " + ")
        << std::abs(mc.estimate.imag()) << "i  se (" << mc.se_real << ", " << mc.se_imag << ")\n";
    const auto sol = solve_riccati(cfg.kernel(), cfg.params(), *fn, g);
    if (sol.global()) {
      const cplx tr = transform_at_zero(cfg.x0(), sol, cfg.params(), *fn);
      out << "functional transform " << tr.real() << (tr.imag() < 0 ? " - " : " + ") << std::abs(tr.imag()) << "i\n";
    } else {
      err << "simulate: Riccati solution blows up near t = " << sol.t_max_estimate << "; no transform value\n";
    }
  }
  if (csv) {
    std::vector<std::string> cols{"path_id", "t"};
    for (std::size_t c = 1; c <= d; ++c) cols.push_back("x_" + std::to_string(c));
    csv->header(cols);
    for (std::size_t q = 0; q < n_paths; ++q)
      for (std::size_t s = 0; s < paths.n_stored(); ++s) {
        std::vector<double> row{static_cast<double>(q), g.node(paths.stored_nodes[s])};
        for (std::size_t c = 0; c < d; ++c) row.push_back(paths.at(q, s, c));
        csv->row(row);
      }
  }
  return kExitOk;
}

// ---- price ----

struct PriceArgs {
  ModelArgs m;
  std::string strikes, out, scheme;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  double contour = 0.5;
  int pricing_steps = 1000;
  bool no_mc = false, force = false;
};

inline int cmd_price(const PriceArgs& a, std::ostream& out) {
  const auto cfg = load_config(a.m.model);
  if (!cfg.heston) throw ValidationError("price needs a [heston] model");
  const auto& h = *cfg.heston;
  const double T = horizon(cfg, a.m);
  const auto strikes = parse_real_list(a.strikes, "strike");
  PricingOptions po;
  po.steps = a.pricing_steps;
  po.contour = a.contour;
  HestonPricer pricer(h, T, po);
  const auto calls = pricer.call_prices(strikes);
  std::vector<std::array<McPrice, 2>> mc;
  if (!a.no_mc) {
    const std::string scheme = a.scheme.empty() ? cfg.run.scheme : a.scheme;
    const auto paths = simulate_model(cfg, TimeGrid(T, steps_of(cfg, a.m)), a.paths ? *a.paths : cfg.run.paths,
                                      a.seed ? *a.seed : cfg.run.seed, scheme, StorageSpec::terminal());
    mc = mc_prices(paths, strikes, T);
  }
  auto csv = open_csv(a.out, a.force, out);
  csv->header({"strike", "call", "put", "implied_vol", "mc_price", "mc_se"});
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    double iv = std::nan("");
    try {
      iv = implied_vol(calls[i], h.s0, strikes[i], T);
    } catch (const std::domain_error&) {
    }
    const double put = calls[i] - h.s0 + strikes[i];
    csv->row({strikes[i], calls[i], put, iv, mc.empty() ? std::nan("") : mc[i][0].price,
              mc.empty() ? std::nan("") : mc[i][0].se});
  }
  return kExitOk;
}

// ---- validate ----

struct ValidateArgs {
  std::string suite = "all", model, scheme = "inverse-gaussian", out;
  std::size_t paths = 10000;
  std::uint64_t seed = 42;
  int steps = 500;
  bool force = false;
};

inline int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  if (a.suite != "all" && a.suite != "classical-limit" && a.suite != "transform-mc")
    throw ValidationError("--suite must be one of classical-limit, transform-mc, all");
  ValidationSettings s;
  s.paths = a.paths;
  s.seed = a.seed;
  s.steps = a.steps;
  s.scheme = heston_scheme_from_string(a.scheme);
  HestonParams h = reference_rough_heston();
  double T = 1.0;
  if (!a.model.empty()) {
    const auto cfg = load_config(a.model);
    if (!cfg.heston) throw ValidationError("validate --model needs a [heston] model");
    h = *cfg.heston;
    T = cfg.run.t;
  }
  std::vector<CheckResult> results;
  if (a.suite != "transform-mc") {
    const auto r = classical_limit_suite(s);
    results.insert(results.end(), r.begin(), r.end());
  }
  if (a.suite != "classical-limit") {
    const auto r = transform_mc_suite(s, h, T);
    results.insert(results.end(), r.begin(), r.end());
  }
  bool all = true;
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  out << std::left << std::setw(6) << "" << std::setw(static_cast<int>(width) + 2) << "check" << std::setw(14)
      << "value" << "tolerance\n";
  for (const auto& r : results) {
    all = all && r.pass;
    std::ostringstream v, t;
    v << std::setprecision(4) << r.value;
    t << std::setprecision(4) << r.tolerance;
    out << std::left << std::setw(6) << (r.pass ? "PASS" : "FAIL") << std::setw(static_cast<int>(width) + 2) << r.name
        << std::setw(14) << v.str() << t.str() << "\n";
  }
  out << (all ? "all checks passed" : "some checks FAILED") << "\n";
  if (!a.out.empty()) {
    CsvWriter csv(a.out, a.force);
    csv.header({"check", "value", "tolerance", "pass"});
    for (const auto& r : results)
      csv.line({"\"" + r.name + "\"", format_double(r.value), format_double(r.tolerance), r.pass ? "1" : "0"});
  }
  return all ? kExitOk : kExitNumerical;
}

// ---- entry point ----

inline void add_model_options(CLI::App* sub, ModelArgs& m, std::optional<double>& t, std::optional<int>& steps) {
  sub->add_option("--model", m.model, "model config file (TOML, or JSON with .json extension)")->required();
  sub->add_option("--t", t, "horizon T (default: config run.t)");
  sub->add_option("--steps", steps, "grid steps (default: config run.steps)");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Affine Volterra processes: resolvents, Riccati-Volterra transforms, simulation and pricing", "avl"};
  app.require_subcommand(1);
  app.fallthrough(false);

  ResolventArgs ra;
  auto* res = app.add_subcommand("resolvent", "resolvents of the first and second kind, and E_B");
  res->add_option("--kernel", ra.kernel, "kernel as JSON, e.g. {\"kind\":\"fractional\",\"c\":1,\"alpha\":0.75}")->required();
  res->add_option("--t-end", ra.t_end, "grid end")->capture_default_str();
  res->add_option("--steps", ra.steps, "grid steps")->capture_default_str();
  res->add_option("--which", ra.which, "first | second | eb")->capture_default_str();
  res->add_option("--b-matrix", ra.b_matrix, "B as JSON array of rows (for --which eb)");
  res->add_option("--out", ra.out, "output CSV (default: stdout)");
  res->add_flag("--force", ra.force, "overwrite an existing output file");

  RiccatiArgs rc;
  auto* ric = app.add_subcommand("riccati", "solve the Riccati-Volterra equation for psi, phi and chi");
  add_model_options(ric, rc.m, rc.m.t, rc.m.steps);
  ric->add_option("--u", rc.u, "u as a comma list of complex numbers, e.g. \"0.5+1i,0\"")->required();
  ric->add_option("--out", rc.out, "output CSV (default: stdout)");
  ric->add_flag("--force", rc.force, "overwrite an existing output file");

  TransformArgs ta;
  auto* tr = app.add_subcommand("transform", "exponential-affine transform E[exp(u X_T)] over a u-grid");
  add_model_options(tr, ta.m, ta.m.t, ta.m.steps);
  tr->add_option("--u-grid", ta.u_grid, "\"<a>:<b>:<n>\" or a comma list of complex values")->required();
  tr->add_option("--component", ta.component, "1-based coordinate that carries u")->capture_default_str();
  tr->add_option("--out", ta.out, "output CSV (default: stdout)");
  tr->add_flag("--force", ta.force, "overwrite an existing output file");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo paths of the model");
  add_model_options(sim, sa.m, sa.m.t, sa.m.steps);
  sim->add_option("--paths", sa.paths, "number of paths (default: config run.paths)");
  sim->add_option("--seed", sa.seed, "RNG seed (default: config run.seed)");
  sim->add_option("--scheme", sa.scheme, "euler | inverse-gaussian | ou-exact (default: config run.scheme)");
  sim->add_option("--out-paths", sa.out_paths, "paths CSV: path_id, t, coordinates");
  sim->add_option("--functional", sa.functional, "\"u=<list>[;f=<list>]\" Monte Carlo transform estimate");
  sim->add_flag("--force", sa.force, "overwrite an existing output file");

  PriceArgs pa;
  auto* pr = app.add_subcommand("price", "European call/put prices by Fourier inversion, with a Monte Carlo check");
  add_model_options(pr, pa.m, pa.m.t, pa.m.steps);
  pr->add_option("--strikes", pa.strikes, "comma list of strikes")->required();
  pr->add_option("--contour", pa.contour, "Re u_1 of the inversion contour, in (0, 1)")->capture_default_str();
  pr->add_option("--pricing-steps", pa.pricing_steps, "Riccati grid steps per transform")->capture_default_str();
  pr->add_option("--paths", pa.paths, "Monte Carlo paths (default: config run.paths)");
  pr->add_option("--seed", pa.seed, "RNG seed (default: config run.seed)");
  pr->add_option("--scheme", pa.scheme, "Monte Carlo scheme (default: config run.scheme)");
  pr->add_flag("--no-mc", pa.no_mc, "skip the Monte Carlo columns");
  pr->add_option("--out", pa.out, "output CSV (default: stdout)");
  pr->add_flag("--force", pa.force, "overwrite an existing output file");

  ValidateArgs va;
  auto* val = app.add_subcommand("validate", "cross-checks against classical limits and Monte Carlo");
  val->add_option("--suite", va.suite, "classical-limit | transform-mc | all")->capture_default_str();
  val->add_option("--model", va.model, "heston config for the transform-mc suite (default: built-in rough Heston)");
  val->add_option("--paths", va.paths, "Monte Carlo paths")->capture_default_str();
  val->add_option("--seed", va.seed, "RNG seed")->capture_default_str();
  val->add_option("--steps", va.steps, "simulation steps")->capture_default_str();
  val->add_option("--scheme", va.scheme, "Heston scheme for the Monte Carlo side")->capture_default_str();
  val->add_option("--out", va.out, "results CSV");
  val->add_flag("--force", va.force, "overwrite an existing output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*res) return cmd_resolvent(ra, out);
    if (*ric) return cmd_riccati(rc, out, err);
    if (*tr) return cmd_transform(ta, out, err);
    if (*sim) return cmd_simulate(sa, out, err);
    if (*pr) return cmd_price(pa, out);
    if (*val) return cmd_validate(va, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  err << app.help();
  return kExitUsage;
}

} // namespace avl::cli
