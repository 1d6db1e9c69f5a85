#include "ccgeo/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccgeo/families.hpp"
#include "ccgeo/measures.hpp"
#include "ccgeo/verify.hpp"

namespace ccgeo {

using nlohmann::json;

namespace {

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["subcommand"] = cfg.subcommand;
  j["family"] = cfg.family;
  j["tuple"] = cfg.tuple;
  j["point"] = cfg.point;
  j["target"] = cfg.target;
  j["arg"] = cfg.arg;
  j["radius"] = cfg.radius;
  j["epsilon"] = cfg.epsilon;
  j["time"] = cfg.time;
  j["metric"] = cfg.metric;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["enlarge"] = cfg.enlarge;
  j["only"] = cfg.only;
  return j;
}

struct Resolved {
  BuiltinFamily bf;
  CommutatorBasis basis;
  IntegratorConfig icfg;
  Vec point;
  double radius;
  double epsilon;
  Metric metric;
  int samples;
  TupleIndex tuple;  // selected or user-specified
};

Resolved resolve(const ExperimentConfig& cfg, bool need_tuple, int default_samples) {
  if (cfg.family.empty()) throw ArgumentError("--family is required");
  Resolved r;
  r.bf = resolve_family(cfg.family);
  r.basis = generate_commutators(r.bf.family);
  r.icfg.domain = r.bf.family.domain_box;
  r.point = cfg.point.empty() ? r.bf.base_point : to_vec(cfg.point);
  if (r.point.size() != r.bf.family.dim)
    throw ArgumentError("--point must have " + std::to_string(r.bf.family.dim) +
                        " coordinates");
  if (!r.bf.family.domain_box.contains(r.point))
    throw ArgumentError("--point lies outside the family domain box");
  r.radius = cfg.radius > 0.0 ? cfg.radius : 0.5 * r.bf.guards.r0;
  r.epsilon = cfg.epsilon > 0.0 ? cfg.epsilon : r.bf.guards.eps0;
  if (cfg.metric == "cc")
    r.metric = Metric::cc;
  else if (cfg.metric == "rho")
    r.metric = Metric::rho;
  else
    throw ArgumentError("--metric must be cc or rho");
  r.samples = cfg.samples > 0 ? cfg.samples : default_samples;
  if (need_tuple) {
    if (!cfg.tuple.empty()) {
      r.tuple = TupleIndex::from_one_based(cfg.tuple);
      r.tuple.validate(r.basis);
    } else {
      r.tuple = select_maximal_tuple(r.basis, r.point, r.radius).I;
    }
  }
  return r;
}

std::string csv_of_cloud(const BallCloud& cloud) {
  std::ostringstream os;
  os.precision(17);
  const int n = static_cast<int>(cloud.center.size());
  for (int i = 0; i < n; ++i) os << "x" << i + 1 << ",";
  os << "path_hash\n";
  for (const auto& [pt, path] : cloud.points) {
    for (int i = 0; i < n; ++i) os << pt[i] << ",";
    os << std::hex << path.hash() << std::dec << "\n";
  }
  return os.str();
}

std::string csv_of_samples(
    const std::vector<std::pair<std::string, const SampleDump*>>& dumps) {
  std::ostringstream os;
  os.precision(17);
  os << "ball,weight";
  const int p = static_cast<int>(dumps[0].second->h.empty() ? 0
                                     : dumps[0].second->h[0].size());
  const int n = static_cast<int>(dumps[0].second->y.empty() ? 0
                                     : dumps[0].second->y[0].size());
  for (int k = 0; k < p; ++k) os << ",h" << k + 1;
  for (int i = 0; i < n; ++i) os << ",y" << i + 1;
  os << "\n";
  for (const auto& [tag, dump] : dumps) {
    for (std::size_t s = 0; s < dump->w.size(); ++s) {
      os << tag << "," << dump->w[s];
      for (int k = 0; k < p; ++k)
        os << "," << (static_cast<int>(dump->h[s].size()) == p ? dump->h[s][k] : 0.0);
      for (int i = 0; i < n; ++i)
        os << "," << (static_cast<int>(dump->y[s].size()) == n ? dump->y[s][i] : 0.0);
      os << "\n";
    }
  }
  return os.str();
}

json measure_json(const MeasureReport& rep) {
  json j;
  j["estimate"] = rep.sigma_p;
  j["std_error"] = rep.std_error;
  j["samples"] = rep.sample_size;
  j["method"] = rep.method;
  j["tuple"] = rep.tuple.str();
  j["radius"] = rep.radius;
  j["box_eps"] = rep.box_eps;
  j["failure_rate"] = rep.failure_rate;
  j["unreliable"] = rep.unreliable;
  j["oracle_mix"] = {{"surrogate_in", rep.oracle_mix.surrogate_in},
                     {"surrogate_out", rep.oracle_mix.surrogate_out},
                     {"searched", rep.oracle_mix.searched},
                     {"failures", rep.oracle_mix.failures}};
  return j;
}

}  // namespace

std::vector<std::string> known_subcommands() {
  return {"flow",    "exp-ap",      "map-e",       "map-phi", "maximal-tuple",
          "chi",     "a-ode",       "lift",        "injectivity", "distance",
          "sample-ball", "ballbox", "doubling",    "poincare", "suite"};
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ArgumentError("config must be a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, val] : doc.items()) {
    if (key == "subcommand") cfg.subcommand = val.get<std::string>();
    else if (key == "family") cfg.family = val.get<std::string>();
    else if (key == "tuple") cfg.tuple = val.get<std::vector<int>>();
    else if (key == "point") cfg.point = val.get<std::vector<double>>();
    else if (key == "target") cfg.target = val.get<std::vector<double>>();
    else if (key == "arg") cfg.arg = val.get<std::vector<double>>();
    else if (key == "radius") cfg.radius = val.get<double>();
    else if (key == "epsilon") cfg.epsilon = val.get<double>();
    else if (key == "time") cfg.time = val.get<double>();
    else if (key == "metric") cfg.metric = val.get<std::string>();
    else if (key == "samples") cfg.samples = val.get<int>();
    else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
    else if (key == "enlarge") cfg.enlarge = val.get<double>();
    else if (key == "out") cfg.out_dir = val.get<std::string>();
    else if (key == "only") cfg.only = val.get<std::string>();
    else throw ArgumentError("unknown config key \"" + key + "\"");
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (subcommand.empty()) throw ArgumentError("missing subcommand");
  const auto known = known_subcommands();
  if (std::find(known.begin(), known.end(), subcommand) == known.end())
    throw ArgumentError("unknown subcommand \"" + subcommand + "\"");
  if (subcommand != "suite" && family.empty())
    throw ArgumentError("--family is required");
  if (radius < 0.0) throw ArgumentError("--radius must be >= 0");
  if (epsilon < 0.0) throw ArgumentError("--epsilon must be >= 0");
  if (samples < 0) throw ArgumentError("--samples must be >= 0");
  if (metric != "cc" && metric != "rho")
    throw ArgumentError("--metric must be cc or rho");
}

RunResult run(const ExperimentConfig& cfg,
              const std::function<void(const CriterionResult&)>& on_criterion) {
  RunResult out;
  json rep;
  rep["command"] = cfg.subcommand;
  rep["version"] = kVersion;
  rep["config"] = config_json(cfg);
  int exit_code = 0;

  try {
    cfg.validate();
    const std::string& sub = cfg.subcommand;

    if (sub == "suite") {
      const auto suite = run_suite(cfg.seed ? cfg.seed : 12345, cfg.only, on_criterion);
      json rows = json::array();
      for (const auto& cr : suite.results) {
        rows.push_back({{"id", cr.id},
                        {"name", cr.name},
                        {"pass", cr.pass},
                        {"measured", cr.measured},
                        {"details", cr.details}});
      }
      rep["results"] = {{"criteria", rows}, {"all_pass", suite.all_pass}};
      exit_code = suite.all_pass ? 0 : 2;
    } else if (sub == "maximal-tuple") {
      auto r = resolve(cfg, /*need_tuple=*/false, 0);
      const auto sel = select_maximal_tuple(r.basis, r.point, r.radius);
      rep["results"] = {{"tuple", sel.I.str()},
                        {"degree", sel.I.degree(r.basis)},
                        {"value", sel.value},
                        {"runner_up", sel.runner_up.str()},
                        {"runner_value", sel.runner_value}};
    } else if (sub == "flow") {
      auto r = resolve(cfg, /*need_tuple=*/false, 0);
      int member = cfg.tuple.empty() ? 1 : cfg.tuple[0];
      if (member < 1 || member > r.basis.q())
        throw ArgumentError("--tuple member index out of range");
      const double t = cfg.time != 0.0 ? cfg.time
                       : (cfg.arg.empty() ? 0.0 : cfg.arg[0]);
      const Vec img = flow(r.basis.Y(member - 1), r.point, t, r.icfg);
      const Mat J = jacobian_of_map(
          [&](const Vec& x) { return flow(r.basis.Y(member - 1), x, t, r.icfg); },
          r.point, 1e-5);
      rep["results"] = {{"image", vec_json(img)}, {"jacobian", mat_json(J)}};
    } else if (sub == "exp-ap") {
      auto r = resolve(cfg, /*need_tuple=*/false, 0);
      int member = cfg.tuple.empty() ? 1 : cfg.tuple[0];
      if (member < 1 || member > r.basis.q())
        throw ArgumentError("--tuple member index out of range");
      if (cfg.arg.empty()) throw ArgumentError("--arg h is required");
      const double h = cfg.arg[0];
      const auto& word = r.basis.Y(member - 1).word;
      const Vec img = approx_exponential(r.basis, word, h, r.point, r.icfg);
      Vec harg(1);
      harg[0] = h;
      const Mat J = jacobian_of_map(
          [&](const Vec& hh) {
            return approx_exponential(r.basis, word, hh[0], r.point, r.icfg);
          },
          harg, 1e-5);
      rep["results"] = {{"image", vec_json(img)}, {"jacobian", mat_json(J)}};
    } else if (sub == "map-e" || sub == "map-phi") {
      auto r = resolve(cfg, /*need_tuple=*/true, 0);
      if (static_cast<int>(cfg.arg.size()) != r.tuple.p())
        throw ArgumentError("--arg must have one entry per tuple member");
      const Vec h = to_vec(cfg.arg);
      auto map = [&](const Vec& hh) {
        return sub == "map-e" ? map_E(r.basis, r.tuple, r.point, r.radius, hh, r.icfg)
                              : map_Phi(r.basis, r.tuple, r.point, r.radius, hh, r.icfg);
      };
      const Vec img = map(h);
      const Mat J = jacobian_of_map(map, h, 1e-5);
      rep["results"] = {{"image", vec_json(img)},
                        {"jacobian", mat_json(J)},
                        {"tuple", r.tuple.str()},
                        {"box_norm", sub == "map-e"
                                         ? box_norm(h, r.tuple, r.basis)
                                         : h.norm()}};
    } else if (sub == "chi") {
      auto r = resolve(cfg, /*need_tuple=*/true, 0);
      Vec h = cfg.arg.empty() ? Vec(Vec::Zero(r.tuple.p())) : to_vec(cfg.arg);
      IntegratorConfig tight = r.icfg;
      tight.rel_tol = 1e-12;
      tight.abs_tol = 1e-13;
      const auto cr = chi_matrix(r.basis, r.tuple, r.point, r.radius, h, tight);
      rep["results"] = {{"chi", mat_json(cr.chi)},
                        {"chi_norm", operator_norm(cr.chi)},
                        {"box_norm", box_norm(h, r.tuple, r.basis)},
                        {"residual_abs", cr.residual_abs},
                        {"residual_rel", cr.residual_rel},
                        {"image", vec_json(cr.image)},
                        {"tuple", r.tuple.str()}};
    } else if (sub == "a-ode") {
      auto r = resolve(cfg, /*need_tuple=*/true, 0);
      const int p = r.tuple.p();
      Vec omega;
      if (cfg.arg.empty()) {
        omega = Vec::Zero(p);
        omega[0] = 1.0;
      } else {
        omega = to_vec(cfg.arg);
        if (omega.size() != p) throw ArgumentError("--arg omega size mismatch");
      }
      const double rho_max = cfg.epsilon > 0.0 ? cfg.epsilon : r.bf.guards.eta1;
      std::vector<double> rhos;
      for (int k = 1; k <= 10; ++k) rhos.push_back(rho_max * k / 10.0);
      const auto sol =
          solve_A_ode(r.basis, r.tuple, r.point, r.radius, omega, rho_max, r.icfg, rhos);
      json rows = json::array();
      for (std::size_t i = 0; i < sol.rhos.size(); ++i)
        rows.push_back({{"rho", sol.rhos[i]},
                        {"A", mat_json(sol.A[i])},
                        {"A_norm", operator_norm(sol.A[i])},
                        {"phi", vec_json(sol.phi[i])}});
      rep["results"] = {{"ray", rows}, {"tuple", r.tuple.str()}};
    } else if (sub == "lift") {
      auto r = resolve(cfg, /*need_tuple=*/true, 20);
      const double path_radius = 0.5 * std::pow(r.epsilon, r.basis.step) * r.radius;
      const auto cloud = sample_ball(r.basis, r.point, path_radius, Metric::rho,
                                     r.samples, cfg.seed, r.icfg);
      json rows = json::array();
      int successes = 0;
      double max_bn = 0.0, max_res = 0.0;
      for (const auto& [pt, path] : cloud.points) {
        try {
          const auto lift =
              lift_path(r.basis, r.tuple, r.point, r.radius, path, r.epsilon, r.icfg);
          ++successes;
          max_bn = std::max(max_bn, lift.max_box_norm);
          max_res = std::max(max_res, lift.max_tracking_residual);
          rows.push_back({{"endpoint", vec_json(pt)},
                          {"max_box_norm", lift.max_box_norm},
                          {"tracking_residual", lift.max_tracking_residual},
                          {"theta_end", vec_json(lift.theta.back())}});
        } catch (const Error& e) {
          rows.push_back({{"endpoint", vec_json(pt)}, {"error", e.what()}});
        }
      }
      rep["results"] = {{"paths", rows},
                        {"successes", successes},
                        {"samples", r.samples},
                        {"path_radius", path_radius},
                        {"max_box_norm", max_bn},
                        {"max_tracking_residual", max_res},
                        {"tuple", r.tuple.str()}};
      if (successes < r.samples) exit_code = 2;
    } else if (sub == "injectivity") {
      auto r = resolve(cfg, /*need_tuple=*/true, 0);
      const double eps1 = cfg.epsilon > 0.0 ? cfg.epsilon : r.bf.guards.eps1;
      try {
        const auto ir = injectivity_check_E(r.basis, r.tuple, r.point, r.radius,
                                            eps1, 5, r.icfg, r.bf.guards.eta3);
        rep["results"] = {{"points", ir.points},
                          {"min_pair_ratio", ir.min_pair_ratio},
                          {"threshold", ir.threshold},
                          {"collision_free", ir.collision_free},
                          {"lift_max_dev", ir.lift_max_dev},
                          {"lift_consistent", ir.lift_consistent},
                          {"tuple", r.tuple.str()}};
      } catch (const NotInjective& e) {
        rep["results"] = {{"collision_free", false}, {"error", e.what()}};
        exit_code = 2;
      }
    } else if (sub == "distance") {
      auto r = resolve(cfg, /*need_tuple=*/false, 0);
      if (cfg.target.empty()) throw ArgumentError("--target is required");
      const Vec y = to_vec(cfg.target);
      const auto rr = reach_upper(r.basis, r.point, y, r.metric, r.icfg, cfg.seed);
      rep["results"] = {{"reached", rr.reached},
                        {"upper_bound", rr.radius},
                        {"miss", rr.miss},
                        {"evals", rr.evals},
                        {"metric", metric_name(r.metric)}};
      if (!rr.reached) exit_code = 2;
    } else if (sub == "sample-ball") {
      auto r = resolve(cfg, /*need_tuple=*/false, 200);
      const auto cloud =
          sample_ball(r.basis, r.point, r.radius, r.metric, r.samples, cfg.seed, r.icfg);
      Vec mins = cloud.points[0].first, maxs = cloud.points[0].first;
      for (const auto& [pt, path] : cloud.points)
        for (int i = 0; i < pt.size(); ++i) {
          mins[i] = std::min(mins[i], pt[i]);
          maxs[i] = std::max(maxs[i], pt[i]);
        }
      rep["results"] = {{"count", static_cast<int>(cloud.points.size())},
                        {"bbox_min", vec_json(mins)},
                        {"bbox_max", vec_json(maxs)},
                        {"metric", metric_name(r.metric)},
                        {"radius", r.radius}};
      out.csv = csv_of_cloud(cloud);
    } else if (sub == "ballbox") {
      auto r = resolve(cfg, /*need_tuple=*/true, 200);
      const auto br = ball_box_check(r.basis, r.tuple, r.point, r.radius, r.epsilon,
                                     r.samples, cfg.seed, r.icfg, r.bf.guards.eta2);
      json fails = json::array();
      for (const auto& f : br.unliftable) fails.push_back(vec_json(f));
      json unreached = json::array();
      for (const auto& f : br.outer_unreached) unreached.push_back(vec_json(f));
      rep["results"] = {{"inner_c", br.inner_c},
                        {"inner_samples", br.inner_samples},
                        {"inner_max_box_norm", br.inner_max_box_norm},
                        {"inner_max_residual", br.inner_max_residual},
                        {"outer_C_box", br.outer_C_box},
                        {"outer_C_phi", br.outer_C_phi},
                        {"eta2", br.eta2},
                        {"unliftable", fails},
                        {"outer_unreached", unreached},
                        {"tuple", r.tuple.str()}};
      if (br.inner_c <= 0.0 || !br.unliftable.empty() ||
          !br.outer_unreached.empty())
        exit_code = 2;
    } else if (sub == "doubling") {
      auto r = resolve(cfg, /*need_tuple=*/false, 20000);
      const TupleIndex I_r = select_maximal_tuple(r.basis, r.point, r.radius).I;
      const TupleIndex I_2r = select_maximal_tuple(r.basis, r.point, 2.0 * r.radius).I;
      const auto at_r = sigma_ball_samples(r.basis, I_r, r.point, r.radius, r.metric,
                                           r.samples, cfg.seed, r.icfg,
                                           r.bf.guards.cover_eps);
      const auto at_2r =
          sigma_ball_samples(r.basis, I_2r, r.point, 2.0 * r.radius, r.metric,
                             r.samples, cfg.seed, r.icfg, r.bf.guards.cover_eps);
      if (at_r.report.unreliable || at_2r.report.unreliable)
        throw Error("doubling: unreliable measure estimate");
      if (at_r.report.sigma_p <= 0.0) throw Error("doubling: vanishing ball measure");
      rep["results"] = {{"ratio", at_2r.report.sigma_p / at_r.report.sigma_p},
                        {"at_r", measure_json(at_r.report)},
                        {"at_2r", measure_json(at_2r.report)}};
      out.csv = csv_of_samples({{"r", &at_r}, {"2r", &at_2r}});
    } else if (sub == "poincare") {
      auto r = resolve(cfg, /*need_tuple=*/false, 5000);
      const auto suite = default_test_suite(r.bf.family.dim, cfg.seed ^ 0xbeef);
      const auto pr =
          poincare_ratio(r.bf.family, r.basis, r.point, r.radius, suite, r.samples,
                         cfg.seed, r.icfg, cfg.enlarge, r.bf.guards.cover_eps);
      json rows = json::array();
      bool flagged = false;
      for (const auto& row : pr.rows) {
        rows.push_back({{"name", row.name},
                        {"lhs", row.lhs},
                        {"rhs", row.rhs},
                        {"ratio", std::isfinite(row.ratio) ? row.ratio : -1.0},
                        {"flagged", row.flagged}});
        flagged = flagged || row.flagged;
      }
      rep["results"] = {{"max_ratio", pr.max_ratio},
                        {"enlargement", pr.enlargement},
                        {"rows", rows},
                        {"inner_ball", measure_json(pr.inner.report)},
                        {"outer_ball", measure_json(pr.outer.report)}};
      if (flagged) exit_code = 2;
      out.csv = csv_of_samples({{"inner", &pr.inner}, {"outer", &pr.outer}});
    } else {
      throw ArgumentError("unhandled subcommand \"" + sub + "\"");
    }
  } catch (const ArgumentError& e) {
    rep["error"] = e.what();
    exit_code = 1;
  } catch (const NotInvolutive& e) {
    rep["error"] = e.what();
    rep["verdict"] = "not-involutive";
    exit_code = 2;
  } catch (const Error& e) {
    rep["error"] = e.what();
    exit_code = 1;
  }

  out.exit_code = exit_code;
  out.report_json = rep.dump(2) + "\n";

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream rf(std::filesystem::path(cfg.out_dir) / "report.json");
    rf << out.report_json;
    if (!out.csv.empty()) {
      std::ofstream cf(std::filesystem::path(cfg.out_dir) / "data.csv");
      cf << out.csv;
    }
  }
  return out;
}

}  // namespace ccgeo
