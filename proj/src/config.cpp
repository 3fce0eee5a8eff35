#include "pmstrnn/config.hpp"

#include <set>

#include "json.hpp"

#include "pmstrnn/binio.hpp"
#include "pmstrnn/errors.hpp"

namespace pmstrnn {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

double get_num(const json& obj, const std::string& key, const std::string& where,
               double dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(key + " in " + where + " must be a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& key, const std::string& where,
            int dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(key + " in " + where + " must be an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& where,
              bool dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(key + " in " + where + " must be a boolean");
  return v.get<bool>();
}

std::uint64_t get_seed(const json& obj, const std::string& key,
                       const std::string& where, std::uint64_t dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(key + " in " + where + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

// a bare integer means square
std::pair<int, int> get_size(const json& obj, const std::string& key,
                             const std::string& where, std::pair<int, int> dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (v.is_number_integer()) {
    int s = v.get<int>();
    return {s, s};
  }
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer())
    throw ConfigError(key + " in " + where + " must be a size or [height, width]");
  return {v[0].get<int>(), v[1].get<int>()};
}

ArchitectureSpec parse_arch(const json& a) {
  check_keys(a, "architecture", {"input_size", "k_fo", "layers"});
  ArchitectureSpec arch;
  auto in = get_size(a, "input_size", "architecture", {36, 36});
  arch.input_h = in.first;
  arch.input_w = in.second;
  arch.k_fo = get_int(a, "k_fo", "architecture", 0);
  if (!a.contains("layers")) throw ConfigError("architecture needs a layers array");
  const json& layers = a.at("layers");
  if (!layers.is_array() || layers.empty())
    throw ConfigError("architecture.layers must be a non-empty array");
  int level = 1;
  for (const json& lj : layers) {
    std::string where = "architecture.layers[" + std::to_string(level - 1) + "]";
    check_keys(lj, where,
               {"tau", "num_fm", "fm_size", "num_cm", "cm_size", "k_ff", "k_cf",
                "k_if", "k_fc"});
    LayerSpec l;
    l.level = level++;
    l.tau = get_num(lj, "tau", where, 1.0);
    l.num_fm = get_int(lj, "num_fm", where, 1);
    auto fs = get_size(lj, "fm_size", where, {1, 1});
    l.fm_h = fs.first;
    l.fm_w = fs.second;
    l.num_cm = get_int(lj, "num_cm", where, 0);
    auto cs = get_size(lj, "cm_size", where, {0, 0});
    l.cm_h = cs.first;
    l.cm_w = cs.second;
    l.k_ff = get_int(lj, "k_ff", where, 0);
    l.k_cf = get_int(lj, "k_cf", where, 0);
    l.k_if = get_int(lj, "k_if", where, 0);
    l.k_fc = get_int(lj, "k_fc", where, 0);
    arch.layers.push_back(l);
  }
  arch.validate();
  return arch;
}

std::vector<PlanEntry> parse_plan(const json& sj, const std::string& where) {
  std::vector<PlanEntry> plan;
  bool has_single = sj.contains("primitive");
  bool has_plan = sj.contains("plan");
  if (has_single == has_plan)
    throw ConfigError(where + " needs exactly one of 'primitive' or 'plan'");
  if (has_single) {
    PlanEntry e;
    e.primitive = primitive_index(sj.at("primitive").get<std::string>());
    e.cycles = get_int(sj, "cycles", where, 6);
    plan.push_back(e);
  } else {
    const json& pj = sj.at("plan");
    if (!pj.is_array() || pj.empty())
      throw ConfigError(where + ".plan must be a non-empty array");
    for (const json& ej : pj) {
      if (!ej.is_array() || ej.size() != 2 || !ej[0].is_string() ||
          !ej[1].is_number_integer())
        throw ConfigError(where + ".plan entries must be [\"P<n>\", cycles]");
      PlanEntry e;
      e.primitive = primitive_index(ej[0].get<std::string>());
      e.cycles = ej[1].get<int>();
      plan.push_back(e);
    }
  }
  return plan;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid json: ") + e.what());
  }
  check_keys(root, "config", {"architecture", "training", "regression", "dataset"});

  RunConfig cfg;
  cfg.arch = default_architecture();
  if (root.contains("architecture")) cfg.arch = parse_arch(root.at("architecture"));

  if (root.contains("training")) {
    const json& t = root.at("training");
    check_keys(t, "training",
               {"learning_rate", "momentum", "closed_loop_stop", "max_epochs",
                "eval_every", "seed", "threads"});
    cfg.training.learning_rate =
        get_num(t, "learning_rate", "training", cfg.training.learning_rate);
    cfg.training.momentum = get_num(t, "momentum", "training", cfg.training.momentum);
    cfg.training.closed_loop_stop =
        get_num(t, "closed_loop_stop", "training", cfg.training.closed_loop_stop);
    cfg.training.max_epochs = get_int(t, "max_epochs", "training", cfg.training.max_epochs);
    cfg.training.eval_every = get_int(t, "eval_every", "training", cfg.training.eval_every);
    cfg.training.seed = get_seed(t, "seed", "training", cfg.training.seed);
    cfg.training.threads = get_int(t, "threads", "training", cfg.training.threads);
    if (cfg.training.learning_rate < 0.0)
      throw ConfigError("training.learning_rate must not be negative");
    if (cfg.training.momentum < 0.0 || cfg.training.momentum >= 1.0)
      throw ConfigError("training.momentum must be in [0, 1)");
    if (cfg.training.closed_loop_stop <= 0.0)
      throw ConfigError("training.closed_loop_stop must be positive");
  }

  if (root.contains("regression")) {
    const json& r = root.at("regression");
    check_keys(r, "regression",
               {"window", "rate", "iters", "early_stop", "use_history_inputs"});
    cfg.regression.window = get_int(r, "window", "regression", cfg.regression.window);
    cfg.regression.rate = get_num(r, "rate", "regression", cfg.regression.rate);
    cfg.regression.iters_per_step =
        get_int(r, "iters", "regression", cfg.regression.iters_per_step);
    cfg.regression.early_stop =
        get_num(r, "early_stop", "regression", cfg.regression.early_stop);
    cfg.regression.use_history_inputs = get_bool(r, "use_history_inputs", "regression",
                                                 cfg.regression.use_history_inputs);
    if (cfg.regression.window < 1) throw ConfigError("regression.window must be >= 1");
    if (cfg.regression.rate <= 0.0) throw ConfigError("regression.rate must be positive");
    if (cfg.regression.iters_per_step < 1)
      throw ConfigError("regression.iters must be >= 1");
  }

  if (root.contains("dataset")) {
    const json& d = root.at("dataset");
    check_keys(d, "dataset", {"steps_per_cycle", "sequences"});
    cfg.dataset.steps_per_cycle =
        get_int(d, "steps_per_cycle", "dataset", cfg.dataset.steps_per_cycle);
    if (cfg.dataset.steps_per_cycle < 2)
      throw ConfigError("dataset.steps_per_cycle must be >= 2");
    if (d.contains("sequences")) {
      const json& sa = d.at("sequences");
      if (!sa.is_array()) throw ConfigError("dataset.sequences must be an array");
      int idx = 0;
      for (const json& sj : sa) {
        std::string where = "dataset.sequences[" + std::to_string(idx++) + "]";
        check_keys(sj, where, {"label", "subject", "primitive", "cycles", "plan"});
        SequencePlan sp;
        if (!sj.contains("label") || !sj.at("label").is_string())
          throw ConfigError(where + " needs a string label");
        sp.label = sj.at("label").get<std::string>();
        sp.subject = get_int(sj, "subject", where, 0);
        if (sp.subject < 0) throw ConfigError(where + ".subject must be >= 0");
        sp.plan = parse_plan(sj, where);
        cfg.dataset.sequences.push_back(std::move(sp));
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

std::string default_config_json() {
  json root;
  ArchitectureSpec arch = default_architecture();
  json layers = json::array();
  for (const LayerSpec& l : arch.layers) {
    json lj;
    lj["tau"] = l.tau;
    lj["num_fm"] = l.num_fm;
    lj["fm_size"] = {l.fm_h, l.fm_w};
    lj["num_cm"] = l.num_cm;
    lj["cm_size"] = {l.cm_h, l.cm_w};
    lj["k_ff"] = l.k_ff;
    lj["k_cf"] = l.k_cf;
    lj["k_if"] = l.k_if;
    lj["k_fc"] = l.k_fc;
    layers.push_back(lj);
  }
  root["architecture"] = {{"input_size", {arch.input_h, arch.input_w}},
                          {"k_fo", arch.k_fo},
                          {"layers", layers}};
  TrainingConfig t;
  root["training"] = {{"learning_rate", t.learning_rate},
                      {"momentum", t.momentum},
                      {"closed_loop_stop", t.closed_loop_stop},
                      {"max_epochs", t.max_epochs},
                      {"eval_every", t.eval_every},
                      {"seed", t.seed},
                      {"threads", t.threads}};
  RegressionConfig r;
  root["regression"] = {{"window", r.window},
                        {"rate", r.rate},
                        {"iters", r.iters_per_step},
                        {"early_stop", r.early_stop},
                        {"use_history_inputs", r.use_history_inputs}};
  json sequences = json::array();
  for (int p = 0; p < 6; ++p) {
    sequences.push_back({{"label", primitive_name(p)},
                         {"subject", 0},
                         {"primitive", primitive_name(p)},
                         {"cycles", 6}});
  }
  root["dataset"] = {{"steps_per_cycle", kStepsPerCycleDefault},
                     {"sequences", sequences}};
  return root.dump(2) + "\n";
}

}  // namespace pmstrnn
