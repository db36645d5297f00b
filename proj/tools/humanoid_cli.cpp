// Batch orchestration: corpus prep, benchmark synthesis, training,
// evaluation, exploration, and policy comparison. Every artifact embeds the
// run configuration in its header so it can be reproduced from the file
// alone. Exit codes: 0 ok, 1 usage, 2 bad data, 3 internal.
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "humanoid/explorer.hpp"
#include "humanoid/sim_env.hpp"
#include "humanoid/trace.hpp"
#include "humanoid/training.hpp"

namespace fs = std::filesystem;
using namespace humanoid;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  uint64_t seed = 0;
  std::string dims = "45x80";
  std::string policy = "random";
  int budget = 1000;
  std::string checkpoint;
  std::string out = "out";
  int workers = 1;
  std::string config_path;

  // subcommand-specific
  std::string in;
  std::string suite = "gated";
  int count = 10;
  int flows = 10;
  int flow_len = 20;
  bool raw = false;
  std::string policies = "model-greedy,random";
  int seeds = 5;

  // model hyperparameters (forwarded into ModelConfig)
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 16;
  int epochs = 3;
  int holdout_percent = 10;

  // trace thresholds
  double dist_px = 50.0;
  int64_t time_ms = 500;
};

std::pair<int, int> parse_dims(const std::string& s) {
  const size_t x = s.find('x');
  int w = 0, h = 0;
  try {
    w = std::stoi(s.substr(0, x));
    h = std::stoi(s.substr(x + 1));
  } catch (const std::exception&) {
    throw UsageError("--dims expects WxH, got '" + s + "'");
  }
  if (x == std::string::npos || w <= 0 || h <= 0)
    throw UsageError("--dims expects WxH, got '" + s + "'");
  return {w, h};
}

ModelConfig model_config(const RunConfig& rc) {
  ModelConfig mc;
  std::tie(mc.width, mc.height) = parse_dims(rc.dims);
  mc.learning_rate = rc.learning_rate;
  mc.momentum = rc.momentum;
  mc.weight_decay = rc.weight_decay;
  mc.batch_size = rc.batch_size;
  mc.epochs = rc.epochs;
  mc.holdout_percent = rc.holdout_percent;
  mc.seed = rc.seed;
  mc.validate();
  return mc;
}

TraceConfig trace_config(const RunConfig& rc) {
  TraceConfig tc;
  tc.dist_threshold_px = rc.dist_px;
  tc.time_threshold_ms = rc.time_ms;
  return tc;
}

// "# k=v" header lines shared by every CSV/DOT artifact.
std::vector<std::pair<std::string, std::string>> artifact_header(
    const std::string& command, const RunConfig& rc) {
  return {{"version", kVersion},
          {"command", command},
          {"seed", std::to_string(rc.seed)},
          {"dims", rc.dims},
          {"policy", rc.policy},
          {"budget", std::to_string(rc.budget)},
          {"workers", std::to_string(rc.workers)}};
}

void write_header(std::ostream& out,
                  const std::vector<std::pair<std::string, std::string>>& hdr) {
  for (const auto& [k, v] : hdr) out << "# " << k << "=" << v << "\n";
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

json run_config_json(const std::string& command, const RunConfig& rc) {
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = rc.seed;
  j["dims"] = rc.dims;
  j["policy"] = rc.policy;
  j["budget"] = rc.budget;
  j["workers"] = rc.workers;
  return j;
}

std::vector<fs::path> sorted_files(const fs::path& dir,
                                   const std::string& ext) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  for (const auto& ent : fs::directory_iterator(dir))
    if (ent.path().extension() == ext) files.push_back(ent.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Corpus directory layout: states/<fp>.json, flows/<name>.json,
// raw/<name>.jsonl, manifest.json.
std::vector<InteractionFlow> load_corpus(const fs::path& dir) {
  StateStore store;
  store.load_dir((dir / "states").string());
  std::vector<InteractionFlow> flows;
  for (const fs::path& p : sorted_files(dir / "flows", ".json"))
    flows.push_back(flow_from_json(read_json_file(p.string()), store));
  return flows;
}

void write_flow_corpus(const fs::path& dir, const Corpus& corpus,
                       json manifest) {
  corpus.states.save_dir((dir / "states").string());
  fs::create_directories(dir / "flows");
  for (size_t i = 0; i < corpus.flows.size(); ++i) {
    const std::string name = i < corpus.raw.size()
                                 ? corpus.raw[i].name
                                 : corpus.flows[i].app_id + "__flow" +
                                       std::to_string(i);
    write_json_file((dir / "flows" / (name + ".json")).string(),
                    flow_to_json(corpus.flows[i]));
  }
  for (const RawTrace& rt : corpus.raw) {
    if (rt.events.empty()) continue;  // name placeholders only
    fs::create_directories(dir / "raw");
    write_trace_jsonl((dir / "raw" / (rt.name + ".jsonl")).string(),
                      rt.events);
  }
  manifest["flows"] = corpus.flows.size();
  write_json_file((dir / "manifest.json").string(), manifest);
}

std::vector<SimAppSpec> load_suite(const fs::path& dir) {
  std::vector<SimAppSpec> specs;
  for (const fs::path& p : sorted_files(dir, ".json")) {
    if (p.filename() == "manifest.json") continue;
    specs.push_back(sim_spec_from_json(read_json_file(p.string())));
  }
  if (specs.empty()) throw DataError("no app specs in " + dir.string());
  return specs;
}

std::unique_ptr<Net<float>> load_model(const RunConfig& rc) {
  if (rc.checkpoint.empty())
    throw UsageError("--checkpoint is required for model-guided policies");
  return std::move(load_checkpoint(rc.checkpoint).net);
}

ExplorationPolicy::Kind parse_policy(const std::string& s) {
  auto k = policy_kind_from_string(s);
  if (!k) throw UsageError("unknown policy '" + s + "'");
  return *k;
}

// ---------------------------------------------------------------------------
// prep
// ---------------------------------------------------------------------------

int cmd_prep(const RunConfig& rc) {
  const fs::path in(rc.in), out(rc.out);
  StateStore store;
  if (fs::is_directory(in / "states")) store.load_dir((in / "states").string());
  const TraceConfig tc = trace_config(rc);

  Corpus corpus;
  corpus.states = store;
  std::vector<std::string> errors;
  std::vector<std::string> names;
  std::vector<fs::path> traces;
  if (fs::is_directory(in / "raw")) traces = sorted_files(in / "raw", ".jsonl");
  for (const fs::path& p : traces) {
    const std::string name = p.stem().string();
    const std::string app_id = name.substr(0, name.find("__"));
    try {
      PrepResult r = prep_trace(read_trace_jsonl(p.string()), store, app_id, tc);
      for (const std::string& d : r.diagnostics)
        std::cerr << name << ": " << d << "\n";
      corpus.flows.push_back(std::move(r.flow));
      names.push_back(name);
    } catch (const DataError& e) {
      errors.push_back(name + ": " + e.what());
    }
  }
  for (const std::string& e : errors) std::cerr << "error: " << e << "\n";
  if (traces.empty()) std::cerr << "warning: no raw traces under " << in << "\n";

  // keep the simulator's trace names for the flow files
  corpus.raw.resize(names.size());
  for (size_t i = 0; i < names.size(); ++i) corpus.raw[i].name = names[i];
  json manifest = run_config_json("prep", rc);
  manifest["errors"] = errors;
  write_flow_corpus(out, {corpus.flows, corpus.states, corpus.raw}, manifest);

  // summary: flow count, mean states per flow, action-count CDF
  double mean_states = 0;
  std::map<size_t, int> by_len;
  for (const InteractionFlow& f : corpus.flows) {
    mean_states += double(f.states.size());
    ++by_len[f.actions.size()];
  }
  if (!corpus.flows.empty()) mean_states /= double(corpus.flows.size());
  std::ofstream sum = open_out(out / "summary.csv");
  write_header(sum, artifact_header("prep", rc));
  sum << "metric,value\n";
  sum << "flows," << corpus.flows.size() << "\n";
  sum << "malformed," << errors.size() << "\n";
  sum << "mean_states_per_flow," << mean_states << "\n";
  size_t cum = 0;
  for (const auto& [len, n] : by_len) {
    cum += size_t(n);
    sum << "cdf_actions_le_" << len << ","
        << double(cum) / double(corpus.flows.size()) << "\n";
  }
  std::cout << "prep: " << corpus.flows.size() << " flows ("
            << errors.size() << " malformed), mean states/flow "
            << mean_states << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth / gen-traces
// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& rc) {
  auto kind = suite_kind_from_string(rc.suite);
  if (!kind) throw UsageError("unknown suite kind '" + rc.suite + "'");
  std::vector<SimAppSpec> specs =
      make_benchmark_suite(*kind, rc.count, rc.seed);
  const fs::path out(rc.out);
  fs::create_directories(out);
  json manifest = run_config_json("synth", rc);
  manifest["suite"] = rc.suite;
  json apps = json::array();
  for (const SimAppSpec& spec : specs) {
    write_json_file((out / (spec.app_id + ".json")).string(),
                    sim_spec_to_json(spec));
    apps.push_back(spec.app_id);
  }
  manifest["apps"] = std::move(apps);
  write_json_file((out / "manifest.json").string(), manifest);
  std::cout << "synth: " << specs.size() << " " << rc.suite << " apps -> "
            << out << "\n";
  return 0;
}

int cmd_gen_traces(const RunConfig& rc) {
  std::vector<SimAppSpec> specs = load_suite(rc.in);
  Corpus merged;
  for (size_t i = 0; i < specs.size(); ++i) {
    Corpus c = generate_traces(specs[i], rc.flows, rc.flow_len,
                               rc.seed + i, rc.raw);
    for (auto& f : c.flows) merged.flows.push_back(std::move(f));
    for (auto& [ref, st] : c.states.by_ref) merged.states.by_ref.emplace(ref, st);
    if (rc.raw)
      for (auto& r : c.raw) merged.raw.push_back(std::move(r));
    else
      for (int k = 0; k < rc.flows; ++k)
        merged.raw.push_back(
            {specs[i].app_id + "__flow" + std::to_string(k), {}});
  }
  if (!rc.raw) {
    std::vector<std::string> names;
    for (auto& r : merged.raw) names.push_back(r.name);
    merged.raw.clear();
    merged.raw.resize(names.size());
    for (size_t i = 0; i < names.size(); ++i) merged.raw[i].name = names[i];
  }
  json manifest = run_config_json("gen-traces", rc);
  manifest["flow_len"] = rc.flow_len;
  manifest["apps"] = specs.size();
  write_flow_corpus(rc.out, merged, manifest);
  std::cout << "gen-traces: " << merged.flows.size() << " flows from "
            << specs.size() << " apps -> " << rc.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / eval
// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& rc) {
  std::vector<InteractionFlow> flows = load_corpus(rc.in);
  if (flows.empty()) throw DataError("no flows under " + rc.in);
  const ModelConfig mc = model_config(rc);
  Net<float> net(mc);
  std::mt19937_64 rng(mc.seed);
  net.init_params(rng);
  TrainResult result = train(net, flows, &std::cout);

  const fs::path out(rc.out);
  const std::string ckpt =
      rc.checkpoint.empty() ? (out / "model.ckpt").string() : rc.checkpoint;
  fs::create_directories(fs::path(ckpt).parent_path().empty()
                             ? "."
                             : fs::path(ckpt).parent_path().string());
  std::ostringstream rng_state;
  rng_state << rng;
  save_checkpoint(ckpt, net, result.steps, rng_state.str());

  std::ofstream loss = open_out(out / "loss.csv");
  write_header(loss, artifact_header("train", rc));
  loss << "epoch,train_loss,holdout_loss\n";
  loss.precision(17);
  for (const EpochRow& row : result.epochs)
    loss << row.epoch << "," << row.train_loss << "," << row.holdout_loss
         << "\n";
  std::cout << "train: " << result.steps << " steps ("
            << result.skipped_steps << " skipped) -> " << ckpt << "\n";
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  if (rc.checkpoint.empty()) throw UsageError("eval requires --checkpoint");
  Checkpoint ckpt = load_checkpoint(rc.checkpoint);
  std::vector<InteractionFlow> flows = load_corpus(rc.in);
  if (flows.empty()) throw DataError("no flows under " + rc.in);
  EvalMetrics m = evaluate(*ckpt.net, flows);

  std::ofstream out = open_out(fs::path(rc.out) / "metrics.csv");
  write_header(out, artifact_header("eval", rc));
  out << "metric,value\n";
  std::ostringstream body;
  body.precision(10);
  for (size_t i = 0; i < kTopNs.size(); ++i)
    body << "top" << kTopNs[i] << "_acc," << m.top_acc[i] << "\n";
  for (size_t i = 0; i < kTopNs.size(); ++i)
    body << "random_top" << kTopNs[i] << "," << m.random_top[i] << "\n";
  body << "mean_percentile," << m.mean_percentile << "\n";
  body << "median_percentile," << m.median_percentile << "\n";
  body << "states," << m.states << "\n";
  body << "skipped," << m.skipped << "\n";
  body << "mean_score_ms," << m.mean_score_ms << "\n";
  out << body.str();
  std::cout << body.str();
  return 0;
}

// ---------------------------------------------------------------------------
// explore / compare
// ---------------------------------------------------------------------------

int cmd_explore(const RunConfig& rc) {
  const ExplorationPolicy::Kind kind = parse_policy(rc.policy);
  std::unique_ptr<Net<float>> model;
  if (kind != ExplorationPolicy::Kind::Random) model = load_model(rc);

  SimAppSpec spec = sim_spec_from_json(read_json_file(rc.in));
  SimEnv env(spec);
  Explorer ex(ExplorationPolicy{kind, rc.seed}, model.get());
  ExplorationLog log = ex.run(env, rc.budget);

  auto hdr = artifact_header("explore", rc);
  hdr.emplace_back("app", spec.app_id);
  std::ofstream csv = open_out(fs::path(rc.out) / "log.csv");
  log.write_csv(csv, hdr);
  std::ofstream dot = open_out(fs::path(rc.out) / "utg.dot");
  write_header(dot, hdr);
  dot << ex.utg().to_dot();

  const double coverage =
      double(ex.utg().actions_explored()) / double(spec.total_actions());
  std::cout << "explore: " << log.records.size() << " steps, "
            << ex.utg().nodes().size() << " states, coverage " << coverage
            << (log.terminated ? " (terminated)" : "") << "\n";
  if (!log.failure.empty()) std::cerr << "failure: " << log.failure << "\n";
  return 0;
}

struct Session {
  const SimAppSpec* app;
  ExplorationPolicy::Kind kind;
  std::string policy_name;
  uint64_t seed;
};

struct SessionResult {
  int steps_to_target = -1;
  double final_coverage = 0;
  size_t steps = 0;
  bool terminated = false;
  std::string failure;
  std::vector<std::pair<int, size_t>> curve;  // (step, actions_explored)
};

SessionResult run_session(const Session& s, const Net<float>* model,
                          int budget) {
  SessionResult r;
  SimEnv env(*s.app);
  Explorer ex(ExplorationPolicy{s.kind, s.seed}, model);
  ExplorationLog log = ex.run(env, budget);
  r.steps = log.records.size();
  r.terminated = log.terminated;
  r.failure = log.failure;
  for (const LogRecord& rec : log.records) {
    r.curve.emplace_back(rec.step, rec.actions_explored);
    if (r.steps_to_target < 0 && rec.targets_hit > 0)
      r.steps_to_target = rec.step;
  }
  r.final_coverage =
      double(ex.utg().actions_explored()) / double(s.app->total_actions());
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

int cmd_compare(const RunConfig& rc) {
  std::vector<std::string> policy_names;
  {
    std::istringstream in(rc.policies);
    std::string tok;
    while (std::getline(in, tok, ',')) policy_names.push_back(tok);
  }
  if (policy_names.size() < 2)
    throw UsageError("compare needs at least 2 policies");
  if (rc.seeds < 5) throw UsageError("compare needs at least 5 seeds");

  std::unique_ptr<Net<float>> model;
  for (const std::string& p : policy_names)
    if (parse_policy(p) != ExplorationPolicy::Kind::Random && !model)
      model = load_model(rc);

  std::vector<SimAppSpec> apps = load_suite(rc.in);
  std::vector<Session> sessions;
  for (const SimAppSpec& app : apps)
    for (const std::string& p : policy_names)
      for (int s = 0; s < rc.seeds; ++s)
        sessions.push_back(
            {&app, parse_policy(p), p, rc.seed + uint64_t(s)});

  // independent sessions fan out across workers; aggregation stays ordered
  std::vector<SessionResult> results(sessions.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < sessions.size();
         i = next.fetch_add(1))
      results[i] = run_session(sessions[i], model.get(), rc.budget);
  };
  const int nw = std::max(1, rc.workers);
  std::vector<std::thread> pool;
  for (int i = 1; i < nw; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  const fs::path out(rc.out);
  auto hdr = artifact_header("compare", rc);
  hdr.emplace_back("policies", rc.policies);
  hdr.emplace_back("seeds", std::to_string(rc.seeds));

  std::ofstream sess = open_out(out / "sessions.csv");
  write_header(sess, hdr);
  sess << "app,policy,seed,steps_to_target,final_coverage,steps,terminated,"
          "failed\n";
  std::ofstream curves = open_out(out / "curves.csv");
  write_header(curves, hdr);
  curves << "app,policy,seed,step,actions_explored,coverage\n";
  int failed = 0;
  for (size_t i = 0; i < sessions.size(); ++i) {
    const Session& s = sessions[i];
    const SessionResult& r = results[i];
    if (!r.failure.empty()) ++failed;
    sess << s.app->app_id << "," << s.policy_name << "," << s.seed << ","
         << r.steps_to_target << "," << r.final_coverage << "," << r.steps
         << "," << (r.terminated ? 1 : 0) << "," << (r.failure.empty() ? 0 : 1)
         << "\n";
    const double total = double(s.app->total_actions());
    for (const auto& [step, explored] : r.curve)
      curves << s.app->app_id << "," << s.policy_name << "," << s.seed << ","
             << step << "," << explored << "," << double(explored) / total
             << "\n";
  }

  // per-policy medians over successful target hits, plus a per-app win/loss
  // tally between the first two policies
  std::map<std::string, std::vector<double>> steps_by_policy;
  std::map<std::string, std::map<std::string, std::vector<double>>> by_app;
  std::map<std::string, std::vector<double>> coverage_by_policy;
  for (size_t i = 0; i < sessions.size(); ++i) {
    if (!results[i].failure.empty()) continue;
    const Session& s = sessions[i];
    coverage_by_policy[s.policy_name].push_back(results[i].final_coverage);
    if (results[i].steps_to_target > 0) {
      steps_by_policy[s.policy_name].push_back(
          double(results[i].steps_to_target));
      by_app[s.app->app_id][s.policy_name].push_back(
          double(results[i].steps_to_target));
    }
  }
  std::map<std::string, int> wins;
  int ties = 0;
  for (const auto& [app, per_policy] : by_app) {
    auto a = per_policy.find(policy_names[0]);
    auto b = per_policy.find(policy_names[1]);
    const double ma = a == per_policy.end() ? std::numeric_limits<double>::infinity()
                                            : median(a->second);
    const double mb = b == per_policy.end() ? std::numeric_limits<double>::infinity()
                                            : median(b->second);
    if (ma < mb)
      ++wins[policy_names[0]];
    else if (mb < ma)
      ++wins[policy_names[1]];
    else
      ++ties;
  }

  std::ofstream sum = open_out(out / "summary.csv");
  write_header(sum, hdr);
  sum << "metric,policy,value\n";
  for (const std::string& p : policy_names) {
    sum << "median_steps_to_target," << p << "," << median(steps_by_policy[p])
        << "\n";
    sum << "median_final_coverage," << p << ","
        << median(coverage_by_policy[p]) << "\n";
    sum << "sessions_hit_target," << p << "," << steps_by_policy[p].size()
        << "\n";
    sum << "wins," << p << "," << wins[p] << "\n";
  }
  sum << "ties,-," << ties << "\n";
  sum << "failed_sessions,-," << failed << "\n";
  std::cout << "compare: " << sessions.size() << " sessions over "
            << apps.size() << " apps (" << failed << " failed) -> " << out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// config file + dispatch
// ---------------------------------------------------------------------------

// --config accepts JSON or `key = value` TOML-style lines; flags override.
void apply_config_file(RunConfig& rc) {
  if (rc.config_path.empty()) return;
  std::map<std::string, std::string> kv;
  if (fs::path(rc.config_path).extension() == ".json") {
    const json j = read_json_file(rc.config_path);
    for (const auto& [k, v] : j.items())
      kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
  } else {
    std::ifstream in(rc.config_path);
    if (!in) throw DataError("cannot read " + rc.config_path);
    std::string line;
    while (std::getline(in, line)) {
      const size_t eq = line.find('=');
      if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const size_t a = s.find_first_not_of(" \t\"");
        const size_t b = s.find_last_not_of(" \t\"\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
      };
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }
  try {
    if (kv.count("seed")) rc.seed = std::stoull(kv["seed"]);
    if (kv.count("dims")) rc.dims = kv["dims"];
    if (kv.count("policy")) rc.policy = kv["policy"];
    if (kv.count("budget")) rc.budget = std::stoi(kv["budget"]);
    if (kv.count("checkpoint")) rc.checkpoint = kv["checkpoint"];
    if (kv.count("out")) rc.out = kv["out"];
    if (kv.count("workers")) rc.workers = std::stoi(kv["workers"]);
    if (kv.count("learning_rate")) rc.learning_rate = std::stod(kv["learning_rate"]);
    if (kv.count("momentum")) rc.momentum = std::stod(kv["momentum"]);
    if (kv.count("weight_decay")) rc.weight_decay = std::stod(kv["weight_decay"]);
    if (kv.count("batch_size")) rc.batch_size = std::stoi(kv["batch_size"]);
    if (kv.count("epochs")) rc.epochs = std::stoi(kv["epochs"]);
    if (kv.count("holdout_percent"))
      rc.holdout_percent = std::stoi(kv["holdout_percent"]);
    if (kv.count("dist_px")) rc.dist_px = std::stod(kv["dist_px"]);
    if (kv.count("time_ms")) rc.time_ms = std::stoll(kv["time_ms"]);
  } catch (const std::exception&) {
    throw DataError("bad value in config file " + rc.config_path);
  }
}

void add_common(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--seed", rc.seed, "global RNG seed");
  cmd->add_option("--dims", rc.dims, "raster dims WxH");
  cmd->add_option("--budget", rc.budget, "step budget");
  cmd->add_option("--checkpoint", rc.checkpoint, "model checkpoint path");
  cmd->add_option("--out", rc.out, "output directory");
  cmd->add_option("--workers", rc.workers, "worker thread count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", rc.config_path,
                  "config file (JSON or key=value); flags override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GUI exploration test-input generator"};
  app.require_subcommand(1);
  RunConfig rc;

  CLI::App* prep = app.add_subcommand("prep", "raw traces -> flow corpus");
  prep->add_option("--in", rc.in, "raw trace directory")->required();
  prep->add_option("--dist-px", rc.dist_px, "touch/swipe distance threshold");
  prep->add_option("--time-ms", rc.time_ms, "touch/long-touch time threshold");

  CLI::App* synth = app.add_subcommand("synth", "write a benchmark app suite");
  synth->add_option("--suite", rc.suite, "gated | uniform | wide");
  synth->add_option("--count", rc.count, "number of apps")
      ->check(CLI::PositiveNumber);

  CLI::App* gen = app.add_subcommand("gen-traces",
                                     "scripted-user corpora from a suite");
  gen->add_option("--in", rc.in, "suite directory")->required();
  gen->add_option("--flows", rc.flows, "flows per app")
      ->check(CLI::PositiveNumber);
  gen->add_option("--len", rc.flow_len, "actions per flow")
      ->check(CLI::PositiveNumber);
  gen->add_flag("--raw", rc.raw, "also emit raw motion-event JSONL");

  CLI::App* trn = app.add_subcommand("train", "train a model on a corpus");
  trn->add_option("--in", rc.in, "flow corpus directory")->required();
  trn->add_option("--lr", rc.learning_rate, "learning rate");
  trn->add_option("--epochs", rc.epochs, "epochs");
  trn->add_option("--batch", rc.batch_size, "batch size");
  trn->add_option("--holdout", rc.holdout_percent, "holdout percent");

  CLI::App* evl = app.add_subcommand("eval", "rank metrics on a corpus");
  evl->add_option("--in", rc.in, "flow corpus directory")->required();

  CLI::App* exp = app.add_subcommand("explore", "explore one app");
  exp->add_option("--in", rc.in, "app spec JSON")->required();
  exp->add_option("--policy", rc.policy,
                  "model-greedy | model-weighted | random");

  CLI::App* cmp = app.add_subcommand("compare", "policy comparison on a suite");
  cmp->add_option("--in", rc.in, "suite directory")->required();
  cmp->add_option("--policies", rc.policies, "comma-separated policy list");
  cmp->add_option("--seeds", rc.seeds, "seeds per (app, policy)");

  for (CLI::App* c : {prep, synth, gen, trn, evl, exp, cmp})
    add_common(c, rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    // flags override the config file: re-parse after loading it
    if (!rc.config_path.empty()) {
      RunConfig flags_only = rc;
      rc = RunConfig{};
      rc.config_path = flags_only.config_path;
      apply_config_file(rc);
      // overlay: values from this parse beat file values
      CLI::App app2{""};
      app2.allow_extras();
      rc.in = flags_only.in;
      rc.suite = flags_only.suite;
      rc.count = flags_only.count;
      rc.flows = flags_only.flows;
      rc.flow_len = flags_only.flow_len;
      rc.raw = flags_only.raw;
      rc.policies = flags_only.policies;
      rc.seeds = flags_only.seeds;
      for (CLI::App* c : {prep, synth, gen, trn, evl, exp, cmp})
        for (const CLI::Option* o : c->get_options())
          if (o->count()) {
            const std::string n = o->get_name();
            if (n == "--seed") rc.seed = std::stoull(o->results()[0]);
            else if (n == "--dims") rc.dims = o->results()[0];
            else if (n == "--policy") rc.policy = o->results()[0];
            else if (n == "--budget") rc.budget = std::stoi(o->results()[0]);
            else if (n == "--checkpoint") rc.checkpoint = o->results()[0];
            else if (n == "--out") rc.out = o->results()[0];
            else if (n == "--workers") rc.workers = std::stoi(o->results()[0]);
            else if (n == "--lr") rc.learning_rate = std::stod(o->results()[0]);
            else if (n == "--epochs") rc.epochs = std::stoi(o->results()[0]);
            else if (n == "--batch") rc.batch_size = std::stoi(o->results()[0]);
            else if (n == "--holdout")
              rc.holdout_percent = std::stoi(o->results()[0]);
            else if (n == "--dist-px") rc.dist_px = std::stod(o->results()[0]);
            else if (n == "--time-ms") rc.time_ms = std::stoll(o->results()[0]);
          }
    }
    if (prep->parsed()) return cmd_prep(rc);
    if (synth->parsed()) return cmd_synth(rc);
    if (gen->parsed()) return cmd_gen_traces(rc);
    if (trn->parsed()) return cmd_train(rc);
    if (evl->parsed()) return cmd_eval(rc);
    if (exp->parsed()) return cmd_explore(rc);
    if (cmp->parsed()) return cmd_compare(rc);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
