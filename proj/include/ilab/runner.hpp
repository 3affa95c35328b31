#pragma once

#include "ilab/config.hpp"
#include "ilab/io.hpp"
#include "ilab/oracle_check.hpp"

namespace ilab {

namespace fs = std::filesystem;
using config::json;

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitSolver = 3, kExitCertificate = 4 };

// Setup errors are validation failures; during compute only the numerical kinds map to 3.
inline int exit_code_for(Errc c, bool computing) {
  switch (c) {
    case Errc::certificate_failed: return kExitCertificate;
    case Errc::domain_error:
    case Errc::non_monotone:
    case Errc::invalid_bracket: return kExitSolver;
    case Errc::non_finite: return computing ? kExitSolver : kExitValidation;
    default: return kExitValidation;
  }
}

struct RunOptions {
  std::string command;
  json user = json::object();  // parsed config file, may be empty
  fs::path out = ".";
  int workers = 1;
  std::uint64_t seed = 1;
  char** env = environ;
};

struct RunResult {
  int exit_code = 0;
  std::string message;
  json meta;
};

namespace detail {

inline json rows_json(const std::vector<std::pair<double, double>>& v) {
  json a = json::array();
  for (const auto& [x, y] : v) a.push_back({x, std::isfinite(y) ? json(y) : json(nullptr)});
  return a;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline bool field_finite(const ScalarField& u) {
  if (!u.mask) return false;
  for (auto i : u.mask->active())
    if (!std::isfinite(u.values[i])) return false;
  return true;
}

// Everything a command needs, resolved before any solve starts.
struct Plan {
  json cfg;
  int workers = 1;
  std::uint64_t seed = 1;
  std::function<json(const fs::path&, std::vector<std::string>&, int&)> run;
};

inline Plan plan_solve(const json& cfg, int workers) {
  const json& p = cfg.at("problem");
  const int dim = config::dim_of(cfg);
  const MaskPtr mask = config::mask_of(cfg);
  CoefficientSet cs = config::coeffs_of(cfg);
  const json rhs = p.value("rhs", json{{"type", "zero"}});
  if (rhs.value("type", "zero") != "zero") cs.h_rhs = config::scalar_sampler(rhs, dim);
  const Sampler g = config::scalar_sampler(p.value("boundary", json{{"type", "zero"}}), dim);
  const Sampler init = config::scalar_sampler(p.value("initial", json{{"type", "zero"}}), dim);
  const json rj = p.value("reaction", json{{"type", "none"}});
  const std::string rt = rj.value("type", "none");
  Reaction F;
  if (rt == "potential") F = reactions::potential(config::scalar_sampler(rj.value("c", json{{"type", "zero"}}), dim), cs.gamma);
  else if (rt == "kpp") F = reactions::kpp(cs.gamma);
  else if (rt != "none") throw Error(Errc::invalid_argument, "unknown reaction type '" + rt + "'");
  const SolverConfig sc = config::solver_of(cfg, workers);
  ScalarField u0 = sample(init, mask);
  set_boundary(u0, g);
  for (auto i : mask->active())
    if (!std::isfinite(u0.values[i])) throw Error(Errc::non_finite, "initial or boundary data is not finite");

  Plan pl;
  pl.run = [=](const fs::path& out, std::vector<std::string>& written, int& code) {
    const SolveReport r = relax_to_steady(u0, cs, F, g, sc);
    const json& o = cfg.at("output");
    if (field_finite(r.field)) {
      emit_field(r.field, out / o.at("field").get<std::string>());
      written.push_back(o.at("field"));
    }
    emit_trace(r, out / o.at("trace").get<std::string>());
    written.push_back(o.at("trace"));
    if (!r.converged) code = kExitSolver;
    return json{{"status", status_name(r.status)},
                {"iterations", r.iterations},
                {"residual_sup", r.residual_history.empty() ? json(nullptr) : finite_or_null(r.residual_history.back())},
                {"nodes_interior", mask->interior.size()},
                {"nodes_boundary", mask->count(NodeClass::Boundary)}};
  };
  return pl;
}

inline Plan plan_eigen(const json& cfg, int workers) {
  const json& p = cfg.at("problem");
  const MaskPtr mask = config::mask_of(cfg);
  const CoefficientSet cs = config::coeffs_of(cfg);
  EigenConfig ec;
  ec.solver = config::solver_of(cfg, workers);
  ec.bracket_tol = config::num(p, "bracket_tol", ec.bracket_tol);
  ec.check_every = p.value("check_every", ec.check_every);
  ec.max_bisections = p.value("max_bisections", ec.max_bisections);
  if (ec.check_every < 1 || ec.max_bisections < 0) throw Error(Errc::invalid_argument, "check_every and max_bisections");
  Plan pl;
  pl.run = [=](const fs::path& out, std::vector<std::string>& written, int&) {
    const EigenResult r = principal_eigenvalue(mask, cs, ec);
    const json& o = cfg.at("output");
    emit_field(r.eigenfunction, out / o.at("field").get<std::string>());
    written.push_back(o.at("field"));
    Trace t;
    t.extra_names = {"lambda", "sup_norm", "feasible"};
    for (std::size_t k = 0; k < r.probes.size(); ++k) {
      const bool feas = std::isfinite(r.probes[k].second);
      t.add(r.probe_residuals[k], {r.probes[k].first, feas ? r.probes[k].second : -1.0, feas ? 1.0 : 0.0});
    }
    emit_trace(t, out / o.at("trace").get<std::string>());
    written.push_back(o.at("trace"));
    json probes = json::array();
    for (std::size_t k = 0; k < r.probes.size(); ++k)
      probes.push_back({{"lambda", r.probes[k].first}, {"outcome", r.probe_outcomes[k]}});
    json res{{"lambda_lo", r.lambda_lo},
             {"lambda_hi", r.lambda_hi},
             {"bracket_tol", r.bracket_tol},
             {"widenings", r.widenings},
             {"probes", probes}};
    if (const Ball* b = std::get_if<Ball>(&mask->shape)) res["hopf_nu"] = finite_or_null(hopf_fit(r.eigenfunction, *b));
    return res;
  };
  return pl;
}

inline json trace_rows(const std::vector<RadiusTrace>& tr) {
  json a = json::array();
  for (const auto& t : tr)
    a.push_back({{"radius", t.radius},
                 {"center", t.center},
                 {"inner_min", t.inner_min},
                 {"inner_max", t.inner_max},
                 {"cauchy", finite_or_null(t.cauchy)},
                 {"sandwich_low", finite_or_null(t.sandwich_low)},
                 {"residual", t.residual},
                 {"outer_iterations", t.outer_iterations},
                 {"inner_sweeps", t.inner_sweeps},
                 {"descent_ok", t.descent_ok},
                 {"status", t.status}});
  return a;
}

inline Trace radius_trace(const std::vector<RadiusTrace>& tr) {
  Trace t;
  t.extra_names = {"radius", "center", "inner_min", "inner_max", "cauchy", "sandwich_low"};
  for (const auto& r : tr)
    t.add(r.residual, {r.radius, r.center, r.inner_min, r.inner_max, std::isfinite(r.cauchy) ? r.cauchy : -1.0,
                       std::isfinite(r.sandwich_low) ? r.sandwich_low : -1.0});
  return t;
}

inline Plan plan_kpp(const json& cfg, int workers, std::uint64_t seed) {
  const json& p = cfg.at("problem");
  const KppConfig kc = config::kpp_config_of(cfg, workers, seed);
  const Nonlinearity nl = config::nonlinearity_of(p.value("nonlinearity", json{{"type", "kpp"}}), kc.gamma, kc.dim);
  const DriftSpec drift = config::drift_spec(p.value("drift", json{{"type", "zero"}}), kc.dim);
  const std::vector<double> radii = config::radii_of(p);
  const std::string mode = p.value("mode", "whole_space");
  nl.validate(kc.gamma, kc.dim, radii.back(), seed);
  drift.validate(kc.dim, radii.back(), seed);
  if (mode != "whole_space" && mode != "ball" && mode != "uniqueness" && mode != "nonexistence")
    throw Error(Errc::invalid_argument, "unknown kpp mode '" + mode + "'");
  GrowthEnvelope env;
  double threshold = 1e-3;
  if (mode == "nonexistence") {
    const json ej = p.value("envelope", json{{"type", "constant"}, {"value", 1.0}});
    env.V = config::scalar_sampler(ej, kc.dim);
    env.inf_V = config::num(p, "envelope_inf", 1.0);
    threshold = config::num(p, "threshold", threshold);
    if (!(env.inf_V > 0)) throw Error(Errc::invalid_argument, "envelope_inf must be positive");
  }
  Plan pl;
  pl.run = [=](const fs::path& out, std::vector<std::string>& written, int& code) {
    const json& o = cfg.at("output");
    json res{{"mode", mode}, {"nonlinearity", nl.name}};
    auto emit = [&](const ScalarField& u, const std::vector<RadiusTrace>& tr) {
      emit_field(u, out / o.at("field").get<std::string>());
      written.push_back(o.at("field"));
      emit_trace(radius_trace(tr), out / o.at("trace").get<std::string>());
      written.push_back(o.at("trace"));
      for (const auto& t : tr)
        if (t.status != status_name(SolveStatus::Converged)) code = kExitSolver;
      res["radii"] = trace_rows(tr);
      res["center_value"] = center_value(u);
      const double R = radii.back();
      const AsymptoticsReport a = asymptotics_check(u, nl.M1, 0.0, 0.5 * R, 1e-2);
      res["inner_half"] = {{"min", a.min}, {"max", a.max}, {"margin", a.margin}, {"within_1e-2", a.pass}};
    };
    if (mode == "ball") {
      const KppBallResult b = solve_kpp_ball(radii.back(), nl, drift, kc);
      RadiusTrace t;
      t.radius = radii.back();
      t.center = b.center_value;
      detail::inner_extremes(b.field, 0.5 * t.radius, t.inner_min, t.inner_max);
      t.sandwich_low = b.sandwich_low;
      if (!b.iteration.final.residual_history.empty()) t.residual = b.iteration.final.residual_history.back();
      t.outer_iterations = b.iteration.outer_iterations;
      t.inner_sweeps = b.iteration.inner_sweeps;
      t.status = status_name(b.iteration.final.status);
      emit(b.field, {t});
    } else if (mode == "whole_space") {
      const WholeSpaceResult w = solve_kpp_whole_space(nl, drift, radii, kc);
      emit(w.field, w.trace);
      res["status"] = w.status;
      res["bump_center"] = {w.bump_center[0], w.bump_center[1], w.bump_center[2]};
    } else if (mode == "uniqueness") {
      const UniquenessReport u = uniqueness_probe(nl, drift, radii, kc);
      emit(u.limits.front(), {});
      res["gap_two_start"] = u.gap_two_start;
      res["gap_all"] = u.gap_all;
      res["gap_full_ball"] = u.gap_full_ball;
      res["agree"] = u.agree;
      res["labels"] = u.labels;
    } else {
      const NonexistenceReport n = nonexistence_check(nl, env, drift, radii, kc, threshold);
      emit(n.run.field, n.run.trace);
      res["certificate_max"] = n.certificate_max;
      res["final_sup"] = n.final_sup;
      res["collapsed"] = n.collapsed;
    }
    return res;
  };
  return pl;
}

inline Plan plan_liouville(const json& cfg, int workers) {
  const json& p = cfg.at("problem");
  const ExperimentConfig ec = config::experiment_of(cfg, workers);
  const std::string ex = p.value("experiment", "theta");
  std::vector<double> alphas = p.value("alphas", std::vector<double>{ec.alpha_test});
  for (double a : alphas)
    if (!(a > -1.0 && a < 0.0)) throw Error(Errc::invalid_argument, "alphas must lie in (-1,0)");
  const VectorSampler q = config::vector_sampler(p.value("drift", json{{"type", "zero"}}), 1);
  const Sampler c = config::scalar_sampler(p.value("c", json{{"type", "constant"}, {"value", -8.0}}), 1);
  const Sampler seedf = config::scalar_sampler(p.value("seed_field", json{{"type", "zero"}}), 1);
  const double kappa = config::num(p, "kappa", 1.0);
  const double sh_h = config::num(p, "sharpness_h", 1e-3), sh_L = config::num(p, "sharpness_L", 3.0);
  DriftEnvelope de{q, config::num(p, "compact_radius", 1.0), config::num(p, "delta0", 0.1)};
  if (ex != "theta" && ex != "sharpness" && ex != "oscillation" && ex != "decay")
    throw Error(Errc::invalid_argument, "unknown liouville experiment '" + ex + "'");
  if (!(sh_h > 0 && sh_L > 0)) throw Error(Errc::invalid_argument, "sharpness_h and sharpness_L must be positive");

  Plan pl;
  pl.run = [=](const fs::path& out, std::vector<std::string>& written, int& code) {
    const json& o = cfg.at("output");
    Trace t;
    json res{{"experiment", ex}};
    if (ex == "theta") {
      t.extra_names = {"alpha", "min_margin", "rel_deviation"};
      json rows = json::array();
      bool all = true;
      for (double a : alphas) {
        ExperimentConfig e = ec;
        e.alpha_test = a;
        const ThetaReport r = certify_theta_subsolution(e);
        t.add(r.max_deviation, {a, r.min_margin, r.rel_deviation});
        rows.push_back({{"alpha", a},
                        {"min_margin", r.min_margin},
                        {"worst_r", r.worst_r},
                        {"max_deviation", r.max_deviation},
                        {"rel_deviation", r.rel_deviation},
                        {"nodes", r.nodes},
                        {"pass", r.pass},
                        {"flagged_small_margin", r.flagged}});
        all = all && r.pass;
      }
      res["rows"] = rows;
      res["pass"] = all;
    } else if (ex == "sharpness") {
      const SharpnessReport r = sharpness_witness(sh_h, sh_L, workers);
      t.add(r.max_residual);
      res.update({{"max_deviation", r.max_deviation},
                  {"max_residual", r.max_residual},
                  {"oscillation", r.oscillation},
                  {"positive", r.positive},
                  {"pass", r.pass}});
    } else if (ex == "oscillation") {
      const LiouvilleIIReport r = liouville_II_experiment(de, ec);
      t.extra_names = {"radius", "inf_u", "oscillation", "theta_gap"};
      json rows = json::array();
      for (const auto& w : r.rows) {
        t.add(w.oscillation, {w.radius, w.inf_u, w.oscillation, w.theta_gap});
        rows.push_back({{"radius", w.radius},
                        {"inf_u", w.inf_u},
                        {"oscillation", w.oscillation},
                        {"theta_gap", w.theta_gap},
                        {"sweeps", w.sweeps},
                        {"status", w.status}});
        if (w.status != status_name(SolveStatus::Converged)) code = kExitSolver;
      }
      res.update({{"rows", rows}, {"inf_ok", r.inf_ok}, {"monotone_trace", r.monotone_trace}, {"envelope_max", r.envelope_max}});
    } else {
      const LiouvilleIIIReport r = liouville_III_experiment(c, seedf, ec, q, kappa);
      t.extra_names = {"radius", "sup_pos"};
      json rows = json::array();
      for (const auto& w : r.rows) {
        t.add(w.sup_pos, {w.radius, w.sup_pos});
        rows.push_back({{"radius", w.radius}, {"sup_pos", w.sup_pos}, {"sweeps", w.sweeps}, {"status", w.status}});
        if (w.status != status_name(SolveStatus::Converged)) code = kExitSolver;
      }
      res.update({{"alpha", r.alpha},
                  {"certificate_margin", r.certificate_margin},
                  {"discrete_check", r.discrete_check},
                  {"rows", rows},
                  {"final_sup", r.final_sup},
                  {"nonpositive_kept", r.nonpositive_kept},
                  {"pass", r.pass}});
    }
    emit_trace(t, out / o.at("trace").get<std::string>());
    written.push_back(o.at("trace"));
    return res;
  };
  return pl;
}

inline std::string oracle_table_csv(const std::vector<OracleRow>& rows) {
  std::string s = "profile,gamma,h,abs_err,rel_err\n";
  for (const auto& r : rows)
    for (std::size_t l = 0; l < r.h.size(); ++l)
      s += r.profile + "," + fmt17(r.gamma) + "," + fmt17(r.h[l]) + "," + fmt17(r.abs_err[l]) + "," + fmt17(r.rel_err[l]) + "\n";
  return s;
}

inline Plan plan_oracle(const json& cfg) {
  const json& p = cfg.at("problem");
  const double h = config::num(p, "h", 0.02);
  const int levels = p.value("levels", 2);
  const std::vector<double> gammas = p.value("gammas", std::vector<double>{0, 1, 2});
  const Scheme scheme = config::scheme_of(cfg.at("operator").value("scheme", "flux"));
  if (!(h > 0) || levels < 2) throw Error(Errc::invalid_argument, "oracle-check needs h > 0 and levels >= 2");
  for (double g : gammas)
    if (!(g >= 0 && g <= 2)) throw Error(Errc::invalid_argument, "gammas must lie in [0,2]");
  Plan pl;
  pl.run = [=](const fs::path& out, std::vector<std::string>& written, int&) {
    std::vector<OracleRow> rows;
    Trace t;
    t.extra_names = {"gamma", "h", "rel_err"};
    json jr = json::array();
    for (const auto& prof : oracle_profiles())
      for (double g : gammas) {
        rows.push_back(oracle_convergence({prof, g}, h, levels, scheme));
        const OracleRow& r = rows.back();
        for (std::size_t l = 0; l < r.h.size(); ++l) t.add(r.abs_err[l], {g, r.h[l], r.rel_err[l]});
        jr.push_back({{"profile", r.profile},
                      {"gamma", g},
                      {"abs_err", r.abs_err},
                      {"rel_err", r.rel_err},
                      {"decreasing", r.decreasing},
                      {"fine_ok", r.fine_ok}});
      }
    write_text(out / "oracle_table.csv", oracle_table_csv(rows));
    written.push_back("oracle_table.csv");
    emit_trace(t, out / cfg.at("output").at("trace").get<std::string>());
    written.push_back(cfg.at("output").at("trace"));
    return json{{"rows", jr}};
  };
  return pl;
}

inline Plan make_plan(const std::string& cmd, const json& cfg, int workers, std::uint64_t seed) {
  if (cmd == "solve") return plan_solve(cfg, workers);
  if (cmd == "eigen") return plan_eigen(cfg, workers);
  if (cmd == "kpp") return plan_kpp(cfg, workers, seed);
  if (cmd == "liouville") return plan_liouville(cfg, workers);
  if (cmd == "oracle-check") return plan_oracle(cfg);
  throw Error(Errc::invalid_argument, "unknown command '" + cmd + "'");
}

}  // namespace detail

// Resolves and validates the config, runs the command, and writes outputs plus meta.json
// into opt.out. The worker count is kept out of the metadata so outputs do not depend on it.
inline RunResult run(const RunOptions& opt) {
  RunResult rr;
  bool computing = false;
  json cfg;
  std::vector<std::string> written;
  json results;
  try {
    if (opt.workers < 1) throw Error(Errc::invalid_argument, "workers must be >= 1");
    if (!opt.user.is_object()) throw Error(Errc::invalid_argument, "config root must be an object");
    cfg = config::resolve(opt.command, opt.user, opt.env);
    detail::Plan plan;
    try {
      plan = detail::make_plan(opt.command, cfg, opt.workers, opt.seed);
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_argument, std::string("config: ") + e.what());
    }
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec || !fs::is_directory(opt.out)) throw Error(Errc::io, "cannot create output directory " + opt.out.string());
    computing = true;
    results = plan.run(opt.out, written, rr.exit_code);
    rr.message = rr.exit_code == 0 ? "ok" : "solver did not converge";
  } catch (const Error& e) {
    rr.exit_code = exit_code_for(e.code(), computing);
    rr.message = e.what();
  } catch (const json::exception& e) {
    rr.exit_code = kExitValidation;
    rr.message = std::string("config: ") + e.what();
  }
  rr.meta = {{"tool", "ilab"},
             {"version", kToolVersion},
             {"command", opt.command},
             {"seed", opt.seed},
             {"config", cfg},
             {"exit_code", rr.exit_code},
             {"message", rr.message},
             {"outputs", written},
             {"results", results}};
  if (computing) {
    try {
      const std::string name = cfg.at("output").value("meta", "meta.json");
      write_text(opt.out / name, rr.meta.dump(2) + "\n");
    } catch (const std::exception& e) {
      rr.exit_code = kExitValidation;
      rr.message = std::string("io: ") + e.what();
    }
  }
  return rr;
}

}  // namespace ilab
