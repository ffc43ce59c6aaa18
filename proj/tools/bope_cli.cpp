// bope-cli: config-driven runner for model generation, data generation, estimation and diagnostics.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "bope/coverage.hpp"
#include "bope/experiment.hpp"
#include "bope/generators.hpp"
#include "bope/json_io.hpp"
#include "bope/lemmas.hpp"
#include "bope/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bope;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Run {
  std::string command;
  json config;
  fs::path out;
  std::uint64_t seed = 1;
  int workers = 1;
  std::vector<std::string> outputs;
  std::vector<Assertion> assertions;

  void write(const std::string& name, const std::string& bytes) {
    write_file((out / name).string(), bytes);
    outputs.push_back(name);
  }
  void check(const std::string& name, bool pass, const std::string& detail = "") {
    assertions.push_back({name, pass, detail});
  }
  std::uint64_t stream(const char* name) const { return splitmix64(seed ^ named_stream(name)); }
};

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw BadSpec(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw BadSpec("unknown key '" + k + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw BadSpec(std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& section(const json& cfg, const char* key) {
  static const json empty = json::object();
  return cfg.contains(key) ? cfg.at(key) : empty;
}

POMDP make_model(const json& spec, std::uint64_t stream_seed) {
  require_keys(spec, "model", {"path", "family", "n_states", "n_actions", "n_obs", "gamma", "horizon", "rmax",
                               "seed", "xi", "rank", "lambda", "obs_per_state", "alpha", "reward", "order"});
  if (spec.contains("path")) return load_model(spec.at("path").get<std::string>());
  const std::string family = get_or<std::string>(spec, "family", "");
  ModelShape shape;
  shape.n_states = get_or(spec, "n_states", 2);
  shape.n_actions = get_or(spec, "n_actions", 2);
  shape.n_obs = get_or(spec, "n_obs", 2);
  if (spec.contains("horizon")) shape.horizon = get_or(spec, "horizon", 1);
  shape.gamma = get_or(spec, "gamma", shape.horizon ? 1.0 : 0.9);
  shape.rmax = get_or(spec, "rmax", 1.0);
  const std::uint64_t seed = get_or<std::uint64_t>(spec, "seed", stream_seed);
  POMDP m;
  if (family == "random-dense") m = random_dense(shape, seed, get_or(spec, "alpha", 1.0));
  else if (family == "revealing") m = revealing(shape, get_or(spec, "obs_per_state", 1), seed);
  else if (family == "counter-example") m = counter_example(get_or(spec, "xi", 0.05), shape.gamma);
  else if (family == "low-rank") m = low_rank(shape, get_or(spec, "rank", 2), seed);
  else if (family == "fast-forgetting") m = fast_forgetting(shape, get_or(spec, "lambda", 0.3), seed);
  else if (family == "reset") m = reset_dynamics(shape, seed);
  else if (family == "constant-chain") m = constant_chain(get_or(spec, "reward", 0.5), shape.gamma, shape.rmax);
  else throw BadSpec("unknown model family '" + family + "'");
  const std::string order = get_or<std::string>(spec, "order", "predict-first");
  if (order == "update-first") m.order = UpdateOrder::UpdateFirst;
  else if (order != "predict-first") throw BadSpec("order must be predict-first or update-first");
  validate(m);
  return m;
}

Policy make_policy(const json& spec, const POMDP& m, std::uint64_t stream_seed, const char* where) {
  require_keys(spec, where, {"kind", "seed", "min_prob", "depth", "window", "alpha", "probs", "policy"});
  const std::string kind = get_or<std::string>(spec, "kind", "uniform");
  const std::uint64_t seed = get_or<std::uint64_t>(spec, "seed", stream_seed);
  const double min_prob = get_or(spec, "min_prob", 0.05);
  Policy p;
  if (kind == "uniform") p = Policy::uniform(m.n_actions);
  else if (kind == "constant") p = Policy::constant_dist(vector_from_json(spec.at("probs")));
  else if (kind == "memoryless-random") p = random_memoryless(m.n_obs, m.n_actions, seed, min_prob);
  else if (kind == "belief-linear-random") p = random_belief_linear(m.n_states, m.n_actions, seed, get_or(spec, "alpha", 1.0));
  else if (kind == "history-random") p = random_history_policy(m, get_or(spec, "depth", 4), seed, min_prob);
  else if (kind == "truncated-random") p = random_truncated_policy(m, get_or(spec, "window", 1), seed, min_prob);
  else if (kind == "inline") p = policy_from_json(spec.at("policy"));
  else throw BadSpec(std::string("unknown policy kind '") + kind + "' in " + where);
  if (p.n_actions != m.n_actions) throw BadSpec(std::string(where) + " has the wrong action count");
  p.validate(1e-9);
  return p;
}

PrefixDist make_prefix(const json& spec, double gamma) {
  require_keys(spec, "prefix", {"kind", "gamma", "max_h"});
  const std::string kind = get_or<std::string>(spec, "kind", "geometric");
  const int max_h = get_or(spec, "max_h", 10);
  if (kind == "geometric") return PrefixDist::geometric(get_or(spec, "gamma", gamma), max_h);
  if (kind == "uniform") return PrefixDist::uniform(max_h);
  throw BadSpec("prefix kind must be geometric or uniform");
}

D1Mode make_mode(const std::string& s) {
  if (s == "independent-redraw") return D1Mode::IndependentRedraw;
  if (s == "shared-reward") return D1Mode::SharedReward;
  throw BadSpec("mode must be independent-redraw or shared-reward");
}

std::vector<std::size_t> n_grid_of(const json& sec) {
  const auto g = get_or<std::vector<std::size_t>>(sec, "n_grid", {});
  if (g.empty()) throw BadSpec("n_grid is empty");
  for (std::size_t n : g)
    if (n == 0) throw BadSpec("n_grid entries must be positive");
  return g;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

POMDP model_of(Run& r) { return make_model(section(r.config, "model"), r.stream("model")); }

// ---- commands ----

void cmd_gen_model(Run& r) {
  const POMDP m = model_of(r);
  r.write("model.json", model_to_json(m).dump(2) + "\n");
  r.check("model-valid", true, "hash " + model_hash(m));
}

void cmd_gen_data(Run& r) {
  const POMDP m = model_of(r);
  const Policy pi_b = make_policy(section(r.config, "pi_b"), m, r.stream("probes") ^ 0xb, "pi_b");
  const json& sec = section(r.config, "data");
  require_keys(sec, "data", {"kind", "n", "prefix", "mode", "horizon"});
  const std::string kind = get_or<std::string>(sec, "kind", "d1");
  const std::size_t n = get_or<std::size_t>(sec, "n", 0);
  if (n == 0) throw BadSpec("data.n must be positive");
  const fs::path dir = r.out / "data";
  if (kind == "d1") {
    const D1Dataset d = gen_d1(m, pi_b, n, make_prefix(section(sec, "prefix"), m.gamma),
                               make_mode(get_or<std::string>(sec, "mode", "independent-redraw")), r.stream("data"),
                               r.workers);
    save(d, dir.string());
    r.check("record-count", d.records.size() == n);
  } else if (kind == "d2") {
    const int H = get_or(sec, "horizon", m.horizon.value_or(0));
    if (H < 1) throw BadSpec("d2 data needs a horizon");
    const D2Dataset d = gen_d2(m, pi_b, n, H, r.stream("data"), r.workers);
    save(d, dir.string());
    r.check("trajectory-count", d.trajs.size() == n);
  } else {
    throw BadSpec("data.kind must be d1 or d2");
  }
  for (const auto& e : fs::directory_iterator(dir)) r.outputs.push_back("data/" + e.path().filename().string());
  std::sort(r.outputs.begin(), r.outputs.end());
}

void cmd_estimate_ds(Run& r) {
  ExperimentConfig c;
  c.model = model_of(r);
  c.pi_e = make_policy(section(r.config, "pi_e"), c.model, r.stream("probes") ^ 0xe, "pi_e");
  c.pi_b = make_policy(section(r.config, "pi_b"), c.model, r.stream("probes") ^ 0xb, "pi_b");
  const json& sec = section(r.config, "estimate_ds");
  require_keys(sec, "estimate_ds", {"n_grid", "seeds", "delta", "prefix", "mode", "eps_rule", "eps_grid",
                                    "class_shifts", "eps_floor"});
  c.n_grid = n_grid_of(sec);
  c.seeds = get_or(sec, "seeds", 20);
  c.delta = get_or(sec, "delta", 0.1);
  c.prefix = make_prefix(section(sec, "prefix"), c.model.gamma);
  c.mode = make_mode(get_or<std::string>(sec, "mode", "independent-redraw"));
  const std::string rule = get_or<std::string>(sec, "eps_rule", "cor1");
  if (rule != "cor1" && rule != "grid") throw BadSpec("eps_rule must be cor1 or grid");
  c.cor1_rule = rule == "cor1";
  c.eps_grid = get_or<std::vector<double>>(sec, "eps_grid", {});
  c.class_shifts = get_or(sec, "class_shifts", c.class_shifts);
  c.eps_floor = get_or(sec, "eps_floor", c.eps_floor);
  c.master_seed = r.stream("data");
  c.workers = r.workers;
  const ExperimentResult res = bound_vs_error_experiment(c);
  r.write("estimate_ds.csv", res.csv());
  r.write("estimate_ds.json", res.summary().dump(2) + "\n");
  r.check("errors-within-bound", res.bound_violations == 0,
          std::to_string(res.bound_violations) + " violations over " + std::to_string(res.rows.size()) + " rows");
  r.check("median-error-non-increasing", res.medians_non_increasing);
}

void cmd_estimate_fdvf(Run& r) {
  FdvfExperimentConfig c;
  c.model = model_of(r);
  c.pi_e = make_policy(section(r.config, "pi_e"), c.model, r.stream("probes") ^ 0xe, "pi_e");
  c.pi_b = make_policy(section(r.config, "pi_b"), c.model, r.stream("probes") ^ 0xb, "pi_b");
  const json& sec = section(r.config, "estimate_fdvf");
  require_keys(sec, "estimate_fdvf", {"n_grid", "seeds", "window", "class_shifts", "truncation_T"});
  c.n_grid = n_grid_of(sec);
  c.seeds = get_or(sec, "seeds", 20);
  c.window = get_or(sec, "window", 1);
  c.class_shifts = get_or(sec, "class_shifts", c.class_shifts);
  if (sec.contains("truncation_T")) c.truncation_T = get_or(sec, "truncation_T", 1);
  c.master_seed = r.stream("data");
  c.workers = r.workers;
  const FdvfExperimentResult res = fdvf_experiment(c);
  r.write("estimate_fdvf.csv", res.csv());
  r.write("estimate_fdvf.json", res.summary().dump(2) + "\n");
  r.check("realizable", res.solve_residual <= 1e-9, "residual " + fmt(res.solve_residual));
  r.check("bellman-complete", res.completeness_gap <= 1e-9, "gap " + fmt(res.completeness_gap));
}

void cmd_diagnose_coverage(Run& r) {
  const POMDP m = model_of(r);
  const Policy pi_e = make_policy(section(r.config, "pi_e"), m, r.stream("probes") ^ 0xe, "pi_e");
  const Policy pi_b = make_policy(section(r.config, "pi_b"), m, r.stream("probes") ^ 0xb, "pi_b");
  const json& sec = section(r.config, "coverage");
  require_keys(sec, "coverage", {"T_grid", "depth"});
  const auto Ts = get_or<std::vector<int>>(sec, "T_grid", {1, 2, 3});
  const int depth = get_or(sec, "depth", 4);
  if (Ts.empty()) throw BadSpec("T_grid is empty");
  std::ostringstream csv;
  csv.precision(17);
  csv << "T,depth,linf_fine,linf_coarse,chi2_fine,chi2_coarse,theorem_regime,coarse_le_fine\n";
  json reports = json::array();
  for (int T : Ts) {
    const CoverageReport c = compare_coverage(m, pi_b, pi_e, T, depth);
    csv << T << ',' << depth << ',' << c.linf_fine << ',' << c.linf_coarse << ',' << c.chi2_fine << ','
        << c.chi2_coarse << ',' << c.theorem_regime << ',' << c.coarse_le_fine << '\n';
    json j = c.to_json();
    j["T"] = T;
    reports.push_back(j);
    r.check("coarse-le-fine(T=" + std::to_string(T) + ")", c.coarse_le_fine);
  }
  r.write("coverage.csv", csv.str());
  r.write("coverage.json", reports.dump(2) + "\n");
}

void cmd_verify_lemmas(Run& r) {
  const json& sec = section(r.config, "lemmas");
  require_keys(sec, "lemmas", {"ids", "trials", "tol", "pairs", "vi_depth", "vi_models", "pair_depth", "max_states", "max_obs",
                               "max_actions", "gamma", "xi_fixtures"});
  LemmaOptions o;
  o.seed = r.stream("probes");
  o.trials = get_or(sec, "trials", o.trials);
  o.tol = get_or(sec, "tol", o.tol);
  o.pairs = get_or(sec, "pairs", o.pairs);
  o.vi_depth = get_or(sec, "vi_depth", o.vi_depth);
  o.vi_models = get_or(sec, "vi_models", o.vi_models);
  o.pair_depth = get_or(sec, "pair_depth", o.pair_depth);
  o.max_states = get_or(sec, "max_states", o.max_states);
  o.max_obs = get_or(sec, "max_obs", o.max_obs);
  o.max_actions = get_or(sec, "max_actions", o.max_actions);
  o.gamma = get_or(sec, "gamma", o.gamma);
  o.xi_fixtures = get_or(sec, "xi_fixtures", o.xi_fixtures);
  const auto ids = get_or(sec, "ids", registered_lemmas());
  json verdicts = json::array();
  for (const auto& id : ids) {
    const LemmaVerdict v = verify_lemma(id, o);
    verdicts.push_back(v.to_json());
    r.check(id, v.pass, "max violation " + fmt(v.max_violation));
  }
  r.write("verdicts.json", verdicts.dump(2) + "\n");
}

void cmd_sweep(Run& r) {
  const POMDP m = model_of(r);
  const json& sec = section(r.config, "sweep");
  require_keys(sec, "sweep", {"kind", "depths", "eps", "depth", "eps_grid", "rate_ratio", "min_r2"});
  const std::string kind = get_or<std::string>(sec, "kind", "");
  std::ostringstream csv;
  csv.precision(17);
  json fit;
  if (kind == "cover-growth") {
    const auto depths = get_or<std::vector<int>>(sec, "depths", {1, 2, 3, 4, 5, 6});
    if (depths.size() < 2) throw BadSpec("cover-growth needs two or more depths");
    const auto rows = cover_growth_sweep(m, depths, get_or(sec, "eps", 0.1));
    csv << "depth,nodes,cover\n";
    std::vector<double> x, ln_nodes, ln_cover, ll_x;
    for (const auto& row : rows) {
      csv << row.depth << ',' << row.nodes << ',' << row.cover << '\n';
      x.push_back(row.depth);
      ll_x.push_back(std::log(double(row.depth)));
      ln_nodes.push_back(std::log(double(row.nodes)));
      ln_cover.push_back(std::log(double(row.cover)));
    }
    const LinearFit fn = linear_fit(x, ln_nodes), fc = linear_fit(x, ln_cover);
    const LinearFit gn = linear_fit(ll_x, ln_nodes), gc = linear_fit(ll_x, ln_cover);
    const double ratio = get_or(sec, "rate_ratio", 0.5);
    fit = {{"node_rate", fn.slope},         {"cover_rate", fc.slope},
           {"node_loglog_slope", gn.slope}, {"cover_loglog_slope", gc.slope},
           {"expected_node_rate", std::log(double(m.n_obs * m.n_actions))}};
    r.check("cover-sub-exponential", fc.slope < ratio * fn.slope,
            "cover rate " + fmt(fc.slope) + " vs node rate " + fmt(fn.slope));
  } else if (kind == "forgetting") {
    const auto grid = get_or<std::vector<double>>(sec, "eps_grid", {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
    const auto rows = forgetting_sweep(m, get_or(sec, "depth", 10), grid);
    csv << "eps,T0\n";
    std::vector<double> x, y;
    bool all_found = true;
    for (const auto& row : rows) {
      csv << row.eps << ',' << row.T0 << '\n';
      if (row.T0 < 0) all_found = false;
      x.push_back(std::log(1.0 / row.eps));
      y.push_back(row.T0);
    }
    const LinearFit f = linear_fit(x, y);
    fit = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
    r.check("every-eps-reached", all_found);
    r.check("log-fit", all_found && f.r2 >= get_or(sec, "min_r2", 0.9), "R2 " + fmt(f.r2));
  } else {
    throw BadSpec("sweep.kind must be cover-growth or forgetting");
  }
  r.write("sweep.csv", csv.str());
  r.write("sweep.json", fit.dump(2) + "\n");
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream s;
  s << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json manifest(const Run& r, const std::string& error) {
  json j;
  j["command"] = r.command;
  j["config_hash"] = hex64(fnv1a64(r.config.dump()));
  j["versions"] = {{"bope", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"cli11", CLI11_VERSION}};
  j["seed"] = r.seed;
  j["workers"] = r.workers;
  json outs = json::array();
  for (const auto& o : r.outputs) {
    const fs::path p = r.out / o;
    outs.push_back({{"path", o}, {"fnv1a64", fs::exists(p) ? hex64(fnv1a64(read_file(p.string()))) : ""}});
  }
  j["outputs"] = outs;
  json as = json::array();
  bool ok = error.empty();
  for (const auto& a : r.assertions) {
    as.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    ok = ok && a.pass;
  }
  j["assertions"] = as;
  j["all_passed"] = ok;
  if (!error.empty()) j["error"] = error;
  j["timestamp"] = timestamp();
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-space off-policy evaluation runner"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  int workers = 0;
  std::optional<std::uint64_t> seed_override;
  const std::vector<std::pair<std::string, void (*)(Run&)>> commands{
      {"gen-model", cmd_gen_model},     {"gen-data", cmd_gen_data},
      {"estimate-ds", cmd_estimate_ds}, {"estimate-fdvf", cmd_estimate_fdvf},
      {"diagnose-coverage", cmd_diagnose_coverage}, {"verify-lemmas", cmd_verify_lemmas},
      {"sweep", cmd_sweep}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads (overrides the config)");
    sub->add_option("--seed-override", seed_override, "replaces the config master seed");
  }
  CLI11_PARSE(app, argc, argv);

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  run.out = out_dir;
  std::string error;
  int code = 0;
  try {
    fs::create_directories(run.out);
    try {
      run.config = json::parse(read_file(config_path));
    } catch (const json::parse_error& e) {
      throw BadSpec(std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(run.config, "config", {"seed", "workers", "tail_tol", "model", "pi_e", "pi_b", "data",
                                        "estimate_ds", "estimate_fdvf", "coverage", "lemmas", "sweep"});
    run.seed = seed_override.value_or(get_or<std::uint64_t>(run.config, "seed", 1));
    run.workers = workers > 0 ? workers : get_or(run.config, "workers", 1);
    if (run.workers < 1) throw BadSpec("workers must be >= 1");
    for (const auto& [name, fn] : commands)
      if (name == run.command) fn(run);
  } catch (const std::exception& e) {
    error = e.what();
    code = 2;
    try {
      write_file((run.out / "failure.json").string(),
                 json{{"command", run.command}, {"error", error}}.dump(2) + "\n");
    } catch (...) {
    }
    std::cerr << "error: " << error << '\n';
  }
  const json man = manifest(run, error);
  try {
    write_file((run.out / "manifest.json").string(), man.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write manifest: " << e.what() << '\n';
    return 2;
  }
  if (code == 0 && !man["all_passed"].get<bool>()) {
    for (const auto& a : run.assertions)
      if (!a.pass) std::cerr << "assertion failed: " << a.name << " " << a.detail << '\n';
    code = 1;
  }
  return code;
}
