#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tscale/domains.hpp"
#include "tscale/numeric.hpp"
#include "tscale/random.hpp"
#include "tscale/scenarios.hpp"
#include "tscale/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tscale;

namespace {

json load_params(const std::string& config_path,
                 const std::vector<std::string>& kv) {
  json P = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot read config " + config_path);
    in >> P;
    if (!P.is_object())
      throw std::invalid_argument("config must hold a JSON object");
  }
  for (const std::string& pair : kv) {
    auto eq = pair.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--param needs key=value, got " + pair);
    std::string key = pair.substr(0, eq);
    std::string val = pair.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(val);
    } catch (const json::parse_error&) {
      parsed = val;  // bare strings like "1,0" stay strings
    }
    P[key] = std::move(parsed);
  }
  return P;
}

double num(const json& P, const std::string& key, double fallback) {
  if (!P.contains(key)) return fallback;
  const json& v = P.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return std::stod(v.get<std::string>());
  throw std::invalid_argument("parameter " + key + " must be a number");
}

long integer(const json& P, const std::string& key, long fallback) {
  double v = num(P, key, static_cast<double>(fallback));
  return static_cast<long>(v);
}

Vec vec2(const json& P, const std::string& key, double a, double b) {
  if (!P.contains(key)) {
    Vec x(2);
    x << a, b;
    return x;
  }
  const json& v = P.at(key);
  Vec x(2);
  if (v.is_array() && v.size() == 2) {
    x << v[0].get<double>(), v[1].get<double>();
    return x;
  }
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    auto comma = s.find(',');
    if (comma != std::string::npos) {
      x << std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1));
      return x;
    }
  }
  throw std::invalid_argument("parameter " + key +
                              " must be [a,b] or \"a,b\"");
}

SolverConfig solver_config(const json& P) {
  SolverConfig cfg;
  cfg.step = num(P, "step", cfg.step);
  cfg.event_tol = num(P, "event_tol", cfg.event_tol);
  cfg.horizon = num(P, "horizon", cfg.horizon);
  cfg.max_jumps = integer(P, "max_jumps", cfg.max_jumps);
  cfg.zeno_tol = num(P, "zeno_tol", cfg.zeno_tol);
  cfg.zeno_run = static_cast<int>(integer(P, "zeno_run", cfg.zeno_run));
  std::string kind =
      P.contains("gap_kind") ? P.at("gap_kind").get<std::string>() : "constant";
  if (kind == "geometric") {
    cfg.gap_policy.kind = GapKind::Geometric;
    cfg.gap_policy.ratio = num(P, "gap_ratio", cfg.gap_policy.ratio);
  } else {
    cfg.gap_policy.kind = GapKind::Constant;
    cfg.gap_policy.delta = num(P, "gap_delta", cfg.gap_policy.delta);
  }
  return cfg;
}

struct ScenarioRun {
  Signal signal;
  json report;
  std::optional<ImpactTable> impacts;
};

ScenarioRun run_scenario(const std::string& name, const json& P) {
  ScenarioRun run;
  if (name == "example1-continuous") {
    auto res = example1_continuous(vec2(P, "x0", 1.0, 0.0),
                                   num(P, "horizon", 5.0),
                                   num(P, "step", 1e-3));
    run.signal = std::move(res.signal);
    json rep;
    to_json(rep, res.report);
    rep["decay_rate_error"] = res.report.resolution.at("max_abs_err");
    run.report = std::move(rep);
  } else if (name == "example1-discrete") {
    auto res = example1_discrete(
        vec2(P, "x0", 0.1, 0.0), num(P, "r", 1.0),
        static_cast<int>(integer(P, "n_steps", 10)));
    run.signal = std::move(res.signal);
    to_json(run.report, res.report);
  } else if (name == "example2") {
    auto res = example2_switched(vec2(P, "x0", 3.0, 4.0),
                                 num(P, "horizon", 60.0),
                                 num(P, "step", 1e-3));
    run.signal = std::move(res.signal);
    json logj;
    to_json(logj, res.log);
    run.report = {{"log", std::move(logj)}};
  } else if (name == "bouncing-ball") {
    auto res = bouncing_ball(num(P, "h0", 0.0), num(P, "v0", 1.0),
                             num(P, "g", 2.0), num(P, "theta", 0.5),
                             solver_config(P));
    run.signal = res.sol.signal;
    run.report = {{"stop_reason", to_string(res.sol.reason)},
                  {"jumps", res.sol.jumps},
                  {"theta_estimate", res.impacts.theta_estimate},
                  {"t_inf_estimate", res.impacts.t_inf_estimate}};
    run.impacts = std::move(res.impacts);
  } else if (name == "bouncing-ball-zeno") {
    auto res = bouncing_ball_zeno(num(P, "h0", 0.0), num(P, "v0", 1.0),
                                  num(P, "g", 2.0), num(P, "theta", 0.5));
    json first_gaps = json::array();
    const auto& segs = res.signal.dom().segments();
    for (std::size_t k = 1; k < segs.size() && k <= 8; ++k)
      first_gaps.push_back(segs[k].lo - segs[k - 1].hi);
    run.report = {
        {"t_inf", res.t_inf},
        {"closure", res.closure},
        {"gap_budget", discrete_part(res.signal.dom(), res.closure)},
        {"first_gaps", std::move(first_gaps)},
        {"projection_groups", res.projection.groups.size()}};
    run.signal = std::move(res.signal);
  } else {
    throw std::invalid_argument("unknown scenario " + name);
  }
  return run;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct EnsembleSpec {
  Ensemble E;
  double tau_max = 1.0;  // largest observed dwell, for fitted gains
};

EnsembleSpec make_ensemble(const std::string& scenario, const json& P,
                           std::uint64_t seed, int members) {
  EnsembleSpec spec;
  spec.E.distance = named_value_map("norm");
  DomainRng rng(seed);
  if (scenario == "example1-continuous") {
    double horizon = num(P, "horizon", 5.0), step = num(P, "step", 1e-3);
    spec.E.signals.push_back(
        example1_continuous(vec2(P, "x0", 1.0, 0.0), horizon, step).signal);
    for (int i = 1; i < members; ++i) {
      double r = rng.uniform(0.1, 2.0), phi = rng.uniform(0.0, 6.2831853);
      Vec x0(2);
      x0 << r * std::cos(phi), r * std::sin(phi);
      spec.E.signals.push_back(example1_continuous(x0, horizon, step).signal);
    }
  } else if (scenario == "example1-discrete") {
    double r = num(P, "r", 1.0);
    int n_steps = static_cast<int>(integer(P, "n_steps", 10));
    spec.E.signals.push_back(
        example1_discrete(vec2(P, "x0", 0.1, 0.0), r, n_steps).signal);
    for (int i = 1; i < members; ++i) {
      Vec x0(2);
      x0 << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      spec.E.signals.push_back(example1_discrete(x0, r, n_steps).signal);
    }
  } else if (scenario == "example2") {
    double horizon = num(P, "horizon", 60.0), step = num(P, "step", 1e-3);
    double dwell = 0.0;
    auto push = [&](const Vec& x0) {
      auto res = example2_switched(x0, horizon, step);
      for (int m : {0, 1})
        if (res.log.tau_max[m] > dwell) dwell = res.log.tau_max[m];
      spec.E.signals.push_back(std::move(res.signal));
    };
    push(vec2(P, "x0", 3.0, 4.0));
    for (int i = 1; i < members; ++i) {
      double r = rng.uniform(0.1, 10.0), phi = rng.uniform(0.0, 6.2831853);
      Vec x0(2);
      x0 << r * std::cos(phi), r * std::sin(phi);
      push(x0);
    }
    spec.tau_max = dwell > 0.0 ? dwell : 1.0;
  } else if (scenario == "bouncing-ball") {
    auto res = bouncing_ball(num(P, "h0", 0.0), num(P, "v0", 1.0),
                             num(P, "g", 2.0), num(P, "theta", 0.5),
                             solver_config(P));
    spec.E.signals.push_back(std::move(res.sol.signal));
  } else if (scenario == "bouncing-ball-zeno") {
    auto res = bouncing_ball_zeno(num(P, "h0", 0.0), num(P, "v0", 1.0),
                                  num(P, "g", 2.0), num(P, "theta", 0.5));
    spec.E.signals.push_back(std::move(res.signal));
  } else {
    throw std::invalid_argument("unknown scenario " + scenario);
  }
  return spec;
}

int emit_and_exit(const json& envelope, const std::string& out_dir,
                  bool pass) {
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "report.json", envelope.dump(2) + "\n");
  std::cout << envelope.dump(2) << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid trajectories on generalized time scales"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", scenario, op;
  std::vector<std::string> params;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file with parameters");
    cmd->add_option("--param", params, "key=value parameter override");
    cmd->add_option("--out", out_dir, "artifact directory")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "random seed")->capture_default_str();
  };

  CLI::App* sim = app.add_subcommand("simulate", "run a scenario");
  sim->add_option("scenario", scenario,
                  "example1-continuous | example1-discrete | example2 | "
                  "bouncing-ball | bouncing-ball-zeno")
      ->required();
  add_common(sim);

  CLI::App* conv =
      app.add_subcommand("convert", "hybrid time domain <-> time scale");
  std::string in_path, to_kind;
  bool roundtrip = false;
  int random_n = 0;
  double horizon = kInf;
  conv->add_option("--in", in_path, "input JSON (auto-detected kind)");
  conv->add_option("--to", to_kind, "target kind: gts | htd");
  conv->add_flag("--roundtrip", roundtrip, "verify the inverse recovers it");
  conv->add_option("--random", random_n,
                   "round-trip N random domains instead of --in");
  conv->add_option("--horizon", horizon,
                   "materialization horizon for lattice scales");
  add_common(conv);

  CLI::App* chk = app.add_subcommand("check", "stability analyses");
  chk->add_option("op", op,
                  "ugs | attractivity | kweak | c1 | corollary1 | strict")
      ->required();
  std::string beta_spec, alpha_spec, gamma_spec, v_name;
  double eps = 0.0, T = 0.0, M_gap = 0.0, delta = 0.0;
  int members = 8;
  chk->add_option("--scenario", scenario, "ensemble source")->required();
  chk->add_option("--beta", beta_spec, "class K-infinity spec");
  chk->add_option("--alpha", alpha_spec, "class K-infinity spec");
  chk->add_option("--gamma", gamma_spec, "class K-infinity spec or 'fitted'");
  chk->add_option("--V", v_name, "scalarizer: norm | sqnorm | example2_v");
  chk->add_option("--eps", eps, "corridor band parameter");
  chk->add_option("--T", T, "separation time");
  chk->add_option("--M", M_gap, "gap bound");
  chk->add_option("--delta", delta, "required V decrease");
  chk->add_option("--ensemble", members, "ensemble size")
      ->capture_default_str();
  add_common(chk);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json P = load_params(config_path, params);

    if (sim->parsed()) {
      ScenarioRun run = run_scenario(scenario, P);
      fs::create_directories(out_dir);
      {
        std::ofstream trace(fs::path(out_dir) / "trace.csv",
                            std::ios::binary);
        write_trace_csv(trace, run.signal);
      }
      if (run.impacts) {
        std::ofstream imp(fs::path(out_dir) / "impacts.csv",
                          std::ios::binary);
        write_impacts_csv(imp, *run.impacts);
      }
      bool pass = !run.report.contains("verdict") ||
                  run.report.at("verdict") == "pass";
      json envelope = {{"command", "simulate"},
                       {"scenario", scenario},
                       {"seed", seed},
                       {"params", P},
                       {"report", std::move(run.report)}};
      return emit_and_exit(envelope, out_dir, pass);
    }

    if (conv->parsed()) {
      if (random_n > 0) {
        DomainRng rng(seed);
        int failures = 0;
        for (int i = 0; i < random_n; ++i) {
          HybridTimeDomain dom = random_htd(rng);
          HybridTimeDomain back = to_htd(to_gts(dom));
          if (back.pieces.size() != dom.pieces.size()) ++failures;
          for (std::size_t k = 0;
               k < back.pieces.size() && k < dom.pieces.size(); ++k) {
            if (std::abs(back.pieces[k].lo - dom.pieces[k].lo) > 1e-12 ||
                (std::isfinite(dom.pieces[k].hi)
                     ? std::abs(back.pieces[k].hi - dom.pieces[k].hi) > 1e-12
                     : std::isfinite(back.pieces[k].hi)) ||
                back.pieces[k].j != dom.pieces[k].j) {
              ++failures;
              break;
            }
          }
          GeneralizedTimeScale I = random_h_scale(rng);
          GeneralizedTimeScale back2 = to_gts(to_htd(I));
          const auto &a = I.segments(), &b = back2.segments();
          if (a.size() != b.size()) {
            ++failures;
            continue;
          }
          for (std::size_t k = 0; k < a.size(); ++k)
            if (std::abs(a[k].lo - b[k].lo) > 1e-12 ||
                (std::isfinite(a[k].hi)
                     ? std::abs(a[k].hi - b[k].hi) > 1e-12
                     : std::isfinite(b[k].hi))) {
              ++failures;
              break;
            }
        }
        json envelope = {{"command", "convert"},
                         {"random", random_n},
                         {"seed", seed},
                         {"failures", failures}};
        return emit_and_exit(envelope, out_dir, failures == 0);
      }

      if (in_path.empty())
        throw std::invalid_argument("convert needs --in or --random");
      std::ifstream in(in_path);
      if (!in) throw std::invalid_argument("cannot read " + in_path);
      json doc;
      in >> doc;
      json converted;
      std::string from_kind;
      bool ok = true;
      if (doc.contains("pieces")) {
        from_kind = "htd";
        HybridTimeDomain dom = doc.get<HybridTimeDomain>();
        if (to_kind == "htd") {
          converted = json(normalize(dom));
        } else {
          GeneralizedTimeScale I = to_gts(dom);
          converted = json(I);
          if (roundtrip) {
            HybridTimeDomain back = to_htd(I);
            ok = back.pieces.size() == dom.pieces.size();
            for (std::size_t k = 0; ok && k < back.pieces.size(); ++k)
              ok = std::abs(back.pieces[k].lo - dom.pieces[k].lo) <= 1e-12 &&
                   back.pieces[k].j == dom.pieces[k].j &&
                   (std::isfinite(dom.pieces[k].hi)
                        ? std::abs(back.pieces[k].hi - dom.pieces[k].hi) <=
                              1e-12
                        : !std::isfinite(back.pieces[k].hi));
          }
        }
      } else {
        from_kind = "gts";
        GeneralizedTimeScale I = doc.get<GeneralizedTimeScale>();
        if (to_kind == "gts") {
          converted = json(I);
        } else {
          HybridTimeDomain dom = to_htd(I, horizon);  // throws off H
          converted = json(dom);
          if (roundtrip && !I.is_lattice()) {
            GeneralizedTimeScale back = to_gts(dom);
            const auto &a = I.segments(), &b = back.segments();
            ok = a.size() == b.size();
            for (std::size_t k = 0; ok && k < a.size(); ++k)
              ok = std::abs(a[k].lo - b[k].lo) <= 1e-12 &&
                   (std::isfinite(a[k].hi)
                        ? std::abs(a[k].hi - b[k].hi) <= 1e-12
                        : !std::isfinite(b[k].hi));
          }
        }
      }
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "converted.json",
                 converted.dump(2) + "\n");
      json envelope = {{"command", "convert"},
                       {"from", from_kind},
                       {"to", to_kind.empty() ? (from_kind == "htd" ? "gts"
                                                                    : "htd")
                                              : to_kind},
                       {"seed", seed},
                       {"roundtrip_ok", ok},
                       {"converted", std::move(converted)}};
      return emit_and_exit(envelope, out_dir, ok);
    }

    // check
    EnsembleSpec spec = make_ensemble(scenario, P, seed, members);
    if (v_name.empty())
      v_name = scenario == "example2" ? "example2_v" : "sqnorm";
    ValueMap V = named_value_map(v_name);
    StabilityReport rep;
    if (op == "ugs") {
      if (beta_spec.empty()) throw std::invalid_argument("ugs needs --beta");
      rep = check_ugs(spec.E, parse_kinf(beta_spec));
    } else if (op == "attractivity") {
      if (eps <= 0.0 || T <= 0.0)
        throw std::invalid_argument("attractivity needs --eps and --T");
      rep = check_attractivity(spec.E, eps, T);
    } else if (op == "kweak") {
      if (alpha_spec.empty() || beta_spec.empty() || gamma_spec.empty())
        throw std::invalid_argument(
            "kweak needs --alpha, --beta and --gamma");
      ClassKInfFn gamma = gamma_spec == "fitted"
                              ? fit_growth_gamma(spec.E, V, spec.tau_max).gamma
                              : parse_kinf(gamma_spec);
      rep = check_k_weak(spec.E, V, parse_kinf(alpha_spec),
                         parse_kinf(beta_spec), gamma);
    } else if (op == "c1") {
      if (eps <= 0.0 || T <= 0.0)
        throw std::invalid_argument("c1 needs --eps and --T");
      rep = falsify_c1(spec.E, eps, T);
    } else if (op == "corollary1") {
      if (eps <= 0.0 || T <= 0.0 || M_gap <= 0.0 || delta <= 0.0)
        throw std::invalid_argument(
            "corollary1 needs --M, --eps, --T and --delta");
      rep = check_corollary1(spec.E, V, M_gap, eps, T, delta);
    } else if (op == "strict") {
      if (gamma_spec.empty())
        throw std::invalid_argument("strict needs --gamma");
      ClassKInfFn gamma = parse_kinf(gamma_spec);
      bool all = true;
      for (std::size_t i = 0; i < spec.E.signals.size(); ++i) {
        StabilityReport one = check_strict_decrease(
            spec.E.signals[i], V, gamma, spec.E.distance);
        if (i == 0 || (!one.pass && all)) {
          if (one.witness) one.witness->signal = static_cast<int>(i);
          rep = std::move(one);
        }
        if (!rep.pass) all = false;
      }
      rep.pass = all;
    } else {
      throw std::invalid_argument("unknown check op " + op);
    }
    json repj;
    to_json(repj, rep);
    json envelope = {{"command", "check"},       {"op", op},
                     {"scenario", scenario},     {"seed", seed},
                     {"ensemble", spec.E.signals.size()},
                     {"params", P},              {"report", std::move(repj)}};
    return emit_and_exit(envelope, out_dir, rep.pass);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
