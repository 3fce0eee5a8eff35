// command line front end: data generation, training, continued training,
// generation, recognition, analysis exports and the gradient self-check.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmstrnn/analysis.hpp"
#include "pmstrnn/binio.hpp"
#include "pmstrnn/bptt.hpp"
#include "pmstrnn/checkpoint.hpp"
#include "pmstrnn/config.hpp"
#include "pmstrnn/csvio.hpp"
#include "pmstrnn/dataset.hpp"
#include "pmstrnn/errors.hpp"
#include "pmstrnn/gradcheck.hpp"
#include "pmstrnn/network.hpp"
#include "pmstrnn/regression.hpp"
#include "pmstrnn/training.hpp"

namespace fs = std::filesystem;
using namespace pmstrnn;

namespace {

std::string safe_filename(const std::string& label) {
  std::string out;
  for (char c : label)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
               ? c
               : '_';
  return out.empty() ? std::string("seq") : out;
}

StoredSequence build_sequence(const RunConfig& cfg, const SequencePlan& sp) {
  StoredSequence s;
  s.label = sp.label;
  s.subject = subject_params(cfg.training.seed, sp.subject);
  s.plan = sp.plan;
  s.steps_per_cycle = cfg.dataset.steps_per_cycle;
  s.frames = generate(sp.plan, cfg.dataset.steps_per_cycle, s.subject, sp.label).frames;
  return s;
}

const SequencePlan& find_plan(const RunConfig& cfg, const std::string& label) {
  for (const auto& sp : cfg.dataset.sequences)
    if (sp.label == label) return sp;
  throw ConfigError("no sequence '" + label + "' in the config dataset");
}

std::vector<VideoSequence> dataset_from_config(const RunConfig& cfg) {
  if (cfg.dataset.sequences.empty())
    throw ConfigError("empty dataset: the config lists no sequences");
  std::vector<VideoSequence> out;
  for (const auto& sp : cfg.dataset.sequences) {
    StoredSequence s = build_sequence(cfg, sp);
    out.push_back({s.label, std::move(s.frames)});
  }
  return out;
}

int find_label(const std::vector<std::string>& labels, const std::string& want) {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == want) return static_cast<int>(i);
  return -1;
}

bool arch_equal(const ArchitectureSpec& a, const ArchitectureSpec& b) {
  if (a.input_h != b.input_h || a.input_w != b.input_w || a.k_fo != b.k_fo ||
      a.layers.size() != b.layers.size())
    return false;
  for (size_t i = 0; i < a.layers.size(); ++i) {
    const LayerSpec &x = a.layers[i], &y = b.layers[i];
    if (x.tau != y.tau || x.num_fm != y.num_fm || x.fm_h != y.fm_h ||
        x.fm_w != y.fm_w || x.num_cm != y.num_cm || x.cm_h != y.cm_h ||
        x.cm_w != y.cm_w || x.k_ff != y.k_ff || x.k_cf != y.k_cf ||
        x.k_if != y.k_if || x.k_fc != y.k_fc)
      return false;
  }
  return true;
}

// streams the epoch log so a divergence abort still leaves the csv behind
class TrainLogWriter {
 public:
  explicit TrainLogWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    out_ << "epoch,open_mse,closed_mse,wall_seconds\n";
    out_.flush();
  }
  void row(const EpochLog& e) {
    CsvBuilder b;
    b.cell(e.epoch).cell(e.open_mse);
    if (std::isnan(e.closed_mse))
      b.blank();
    else
      b.cell(e.closed_mse);
    b.cell(e.wall_seconds);
    b.endrow();
    out_ << b.str();
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void write_out(const fs::path& dir, const std::string& name, const std::string& text) {
  write_text_file((dir / name).string(), text);
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  if (cfg.dataset.sequences.empty())
    throw ConfigError("empty dataset: the config lists no sequences");
  fs::create_directories(out_dir);
  nlohmann::json manifest;
  manifest["steps_per_cycle"] = cfg.dataset.steps_per_cycle;
  manifest["sequences"] = nlohmann::json::array();
  for (const auto& sp : cfg.dataset.sequences) {
    StoredSequence s = build_sequence(cfg, sp);
    std::string file = safe_filename(sp.label) + ".pmvs";
    save_sequence((fs::path(out_dir) / file).string(), s);
    nlohmann::json entry;
    entry["label"] = s.label;
    entry["file"] = file;
    entry["frames"] = s.frames.size();
    entry["subject"] = {{"index", sp.subject},
                        {"speed_scale", s.subject.speed_scale},
                        {"limb_scale", s.subject.limb_scale},
                        {"height_scale", s.subject.height_scale}};
    manifest["sequences"].push_back(entry);
    std::cout << "wrote " << file << " (" << s.frames.size() << " frames)\n";
  }
  write_out(out_dir, "manifest.json", manifest.dump(2) + "\n");
  return exit_code::ok;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              int threads) {
  RunConfig cfg = load_config(config_path);
  if (threads >= 0) cfg.training.threads = threads;
  auto data = dataset_from_config(cfg);
  fs::create_directories(out_dir);
  TrainLogWriter log((fs::path(out_dir) / "training_log.csv").string());
  TrainedModel model = train(cfg.arch, data, cfg.training,
                             [&](const EpochLog& e) { log.row(e); });
  save_checkpoint((fs::path(out_dir) / "model.ckpt").string(), model);
  const EpochLog& last = model.log.back();
  std::cout << "trained " << model.epochs_run << " epochs, open_mse "
            << format_double(last.open_mse) << ", closed_mse "
            << format_double(last.closed_mse)
            << (model.reached_stop ? " (stop threshold reached)\n" : "\n");
  return exit_code::ok;
}

int cmd_continue(const std::string& config_path, const std::string& ckpt_path,
                 const std::string& out_dir, int threads) {
  RunConfig cfg = load_config(config_path);
  if (threads >= 0) cfg.training.threads = threads;
  TrainedModel base = load_checkpoint(ckpt_path);
  if (!arch_equal(base.arch, cfg.arch))
    throw ConfigError("checkpoint architecture differs from the config architecture");
  auto all = dataset_from_config(cfg);
  std::vector<VideoSequence> old_data, new_data;
  for (auto& s : all) {
    if (find_label(base.labels, s.label) >= 0)
      old_data.push_back(std::move(s));
    else
      new_data.push_back(std::move(s));
  }
  fs::create_directories(out_dir);
  TrainLogWriter log((fs::path(out_dir) / "training_log.csv").string());
  TrainedModel model = continue_training(base, old_data, new_data, cfg.training,
                                         [&](const EpochLog& e) { log.row(e); });
  save_checkpoint((fs::path(out_dir) / "model.ckpt").string(), model);
  std::cout << "continued for " << model.epochs_run << " epochs on "
            << old_data.size() << " known and " << new_data.size()
            << " new sequences\n";
  return exit_code::ok;
}

int cmd_generate(const std::string& config_path, const std::string& ckpt_path,
                 const std::string& label, const std::string& mode_name, int steps,
                 const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  TrainedModel model = load_checkpoint(ckpt_path);
  const SequencePlan& sp = find_plan(cfg, label);
  StoredSequence ref = build_sequence(cfg, sp);
  int idx = find_label(model.labels, label);
  if (idx < 0)
    throw ConfigError("checkpoint stores no intention for sequence '" + label + "'");

  Mode mode;
  if (mode_name == "open")
    mode = Mode::open;
  else if (mode_name == "closed")
    mode = Mode::closed;
  else
    throw ConfigError("generate mode must be open or closed");

  int max_scored = static_cast<int>(ref.frames.size()) - 1;
  int n = steps > 0 ? steps : max_scored;
  if (mode == Mode::open && n > max_scored) n = max_scored;

  Rollout r = rollout(model.arch, model.params, model.intentions[idx], mode,
                      ref.frames, n, false);

  fs::create_directories(out_dir);
  std::string stem = "generated_" + safe_filename(label) + "_" + mode_name;
  StoredSequence out_seq;
  out_seq.label = label;
  out_seq.subject = ref.subject;
  out_seq.plan = ref.plan;
  out_seq.steps_per_cycle = ref.steps_per_cycle;
  for (const MapGrid& f : r.outputs) {
    MapGrid q(f.h, f.w);
    for (int i = 0; i < f.cells(); ++i)
      q.v[i] = static_cast<double>(static_cast<float>(f.v[i]));
    out_seq.frames.push_back(std::move(q));
  }
  save_sequence((fs::path(out_dir) / (stem + ".pmvs")).string(), out_seq);

  CsvBuilder csv;
  csv.cell("step").cell("mse").endrow();
  double mean = 0.0;
  int scored = 0;
  for (int t = 0; t < n && t < max_scored; ++t) {
    double e = mse(r.outputs[t], ref.frames[t + 1]);
    csv.cell(t + 1).cell(e).endrow();
    mean += e;
    ++scored;
  }
  write_out(out_dir, stem + ".csv", csv.str());
  if (scored > 0) mean /= scored;
  std::cout << mode_name << " generation of '" << label << "': " << n
            << " steps, mean mse vs reference " << format_double(mean) << "\n";
  return exit_code::ok;
}

int cmd_recognize(const std::string& config_path, const std::string& ckpt_path,
                  const std::string& label, const std::string& mode_name,
                  const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  TrainedModel model = load_checkpoint(ckpt_path);
  const SequencePlan& sp = find_plan(cfg, label);
  StoredSequence stream = build_sequence(cfg, sp);

  // start from the stored intention of the stream's first primitive if the
  // model knows it, else from rest
  std::string first = primitive_name(sp.plan[0].primitive);
  int idx = find_label(model.labels, first);
  IntentionState start = idx >= 0 ? model.intentions[idx] : zero_intention(model.arch);

  std::uint32_t before = params_checksum(model.arch, model.params);
  RecognitionTrace trace;
  if (mode_name == "regression")
    trace = recognize_stream(model.arch, model.params, start, stream.frames,
                             cfg.regression);
  else if (mode_name == "entrainment")
    trace = entrainment_stream(model.arch, model.params, start, stream.frames);
  else
    throw ConfigError("recognize mode must be regression or entrainment");
  if (params_checksum(model.arch, model.params) != before)
    throw NumericError("weights changed during recognition");

  fs::create_directories(out_dir);
  std::string stem = "recognition_" + safe_filename(label) + "_" + mode_name;
  CsvBuilder csv;
  bool has_window = !trace.window_loss.empty();
  csv.cell("step").cell("mse");
  if (has_window) csv.cell("window_loss");
  csv.endrow();
  double mean = 0.0;
  for (size_t t = 0; t < trace.prediction_error.size(); ++t) {
    csv.cell(t + 1).cell(trace.prediction_error[t]);
    if (has_window) csv.cell(trace.window_loss[t]);
    csv.endrow();
    mean += trace.prediction_error[t];
  }
  mean /= trace.prediction_error.size();
  write_out(out_dir, stem + ".csv", csv.str());

  std::cout << mode_name << " on '" << label << "': mean prediction mse "
            << format_double(mean) << "\n";
  if (mode_name == "regression" && !model.labels.empty()) {
    int best = 0;
    double best_d = intention_distance(trace.final_state, model.intentions[0]);
    for (size_t i = 1; i < model.intentions.size(); ++i) {
      double d = intention_distance(trace.final_state, model.intentions[i]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    std::cout << "nearest stored intention: " << model.labels[best] << " (distance "
              << format_double(best_d) << ")\n";
  }
  return exit_code::ok;
}

int cmd_analyze(const std::string& config_path, const std::string& ckpt_path,
                const std::string& out_dir, int components, int quadrant_level) {
  RunConfig cfg = load_config(config_path);
  TrainedModel model = load_checkpoint(ckpt_path);
  fs::create_directories(out_dir);

  // closed-loop traces for every stored sequence that the config can rebuild
  struct Ran {
    std::string label;
    int cycle_len = 0;
    std::vector<NetworkState> states;
  };
  std::vector<Ran> runs;
  for (size_t i = 0; i < model.labels.size(); ++i) {
    const SequencePlan* sp = nullptr;
    for (const auto& c : cfg.dataset.sequences)
      if (c.label == model.labels[i]) sp = &c;
    if (!sp) continue;
    StoredSequence ref = build_sequence(cfg, *sp);
    int steps = static_cast<int>(ref.frames.size()) - 1;
    Rollout r = rollout(model.arch, model.params, model.intentions[i], Mode::closed,
                        ref.frames, steps, true);
    Ran ran;
    ran.label = model.labels[i];
    ran.cycle_len = static_cast<int>(
        std::llround(cfg.dataset.steps_per_cycle / ref.subject.speed_scale));
    // states 1..T line up with the emitted predictions
    ran.states.assign(r.trace.begin() + 1, r.trace.end());
    runs.push_back(std::move(ran));
  }
  if (runs.empty())
    throw ConfigError("no stored sequence matches the config dataset");

  CsvBuilder metrics;
  metrics.cell("layer").cell("kind").cell("label").cell("cyclicity").cell("convergence").endrow();
  CsvBuilder traj;
  traj.cell("layer").cell("kind").cell("label").cell("step");
  for (int c = 0; c < components; ++c) traj.cell("pc" + std::to_string(c + 1));
  traj.endrow();

  for (int level = 1; level <= model.arch.num_layers(); ++level) {
    for (int kind = 0; kind < 2; ++kind) {
      bool fm = kind == 0;
      if (!fm && model.arch.layer(level).num_cm == 0) continue;
      std::vector<ActivationTrace> per_label;
      ActivationTrace joint;
      for (const Ran& ran : runs) {
        ActivationTrace t = fm ? layer_fm_trace(ran.states, level)
                               : layer_cm_trace(ran.states, level);
        joint = per_label.empty() ? t : concat_steps(joint, t);
        per_label.push_back(std::move(t));
      }
      PcaResult p = pca(joint, components);
      size_t row = 0;
      for (size_t i = 0; i < runs.size(); ++i) {
        std::vector<std::vector<double>> proj(
            p.projected.begin() + row,
            p.projected.begin() + row + per_label[i].steps());
        row += per_label[i].steps();
        metrics.cell(level).cell(fm ? "fm" : "cm").cell(runs[i].label);
        // too-short traces get blank cells rather than failing the export
        if (proj.size() >= 2 * static_cast<size_t>(runs[i].cycle_len))
          metrics.cell(cyclicity(proj, runs[i].cycle_len));
        else
          metrics.blank();
        if (proj.size() >= 10)
          metrics.cell(convergence(proj));
        else
          metrics.blank();
        metrics.endrow();
        for (size_t s = 0; s < proj.size(); ++s) {
          traj.cell(level).cell(fm ? "fm" : "cm").cell(runs[i].label);
          traj.cell(s + 1);
          for (double v : proj[s]) traj.cell(v);
          traj.endrow();
        }
      }
    }
  }
  write_out(out_dir, "metrics.csv", metrics.str());
  write_out(out_dir, "trajectories.csv", traj.str());

  // per-quadrant distance table on one layer's feature maps
  if (quadrant_level >= 1 && quadrant_level <= model.arch.num_layers() &&
      model.arch.layer(quadrant_level).fm_h % 2 == 0 &&
      model.arch.layer(quadrant_level).fm_w % 2 == 0) {
    CsvBuilder qd;
    qd.cell("fm").cell("quadrant").cell("label_a").cell("label_b").cell("distance").endrow();
    int nfm = model.arch.layer(quadrant_level).num_fm;
    const char* qname[4] = {"Q1", "Q2", "Q3", "Q4"};
    for (int f = 0; f < nfm; ++f) {
      std::vector<std::array<ActivationTrace, 4>> quads;
      for (const Ran& ran : runs)
        quads.push_back(quadrant_split(fm_trace(ran.states, quadrant_level, f)));
      for (int q = 0; q < 4; ++q) {
        ActivationTrace joint;
        for (size_t i = 0; i < runs.size(); ++i)
          joint = i == 0 ? quads[i][q] : concat_steps(joint, quads[i][q]);
        PcaResult p = pca(joint, components);
        std::vector<std::vector<std::vector<double>>> proj;
        size_t row = 0;
        for (size_t i = 0; i < runs.size(); ++i) {
          proj.emplace_back(p.projected.begin() + row,
                            p.projected.begin() + row + quads[i][q].steps());
          row += quads[i][q].steps();
        }
        for (size_t a = 0; a < runs.size(); ++a)
          for (size_t b = a + 1; b < runs.size(); ++b) {
            qd.cell(f).cell(qname[q]).cell(runs[a].label).cell(runs[b].label);
            qd.cell(trajectory_distance(proj[a], proj[b])).endrow();
          }
      }
    }
    write_out(out_dir, "quadrant_distances.csv", qd.str());
  }
  std::cout << "analysis written to " << out_dir << "\n";
  return exit_code::ok;
}

int cmd_gradcheck(const std::string& config_path, int trials, std::uint64_t seed,
                  double fd_h) {
  const ArchitectureSpec* arch = nullptr;
  ArchitectureSpec from_config;
  if (!config_path.empty()) {
    RunConfig cfg = load_config(config_path);
    from_config = cfg.arch;
    arch = &from_config;
    seed = cfg.training.seed;
  }
  GradCheckReport rep = gradcheck(arch, seed, trials, 5, fd_h);
  for (const auto& c : rep.classes)
    std::cout << c.name << " max rel err " << format_double(c.max_rel_err) << "\n";
  std::cout << "overall max rel err " << format_double(rep.max_rel_err) << " ("
            << rep.worst << ") over " << rep.trials << " trials\n";
  if (!rep.pass(1e-4)) {
    std::cerr << "gradient check failed: max relative error above 1e-4\n";
    return exit_code::failure;
  }
  return exit_code::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"predictive multiscale recurrent network tool"};
  app.require_subcommand(1);

  std::string config_path, out_dir, ckpt_path, label, mode_name;
  int steps = 0, trials = 20, components = 2, quadrant_level = 2, threads = -1;
  std::uint64_t seed = 1;
  double fd_h = 1e-5;

  auto* gen_data = app.add_subcommand("gen-data", "render the configured dataset");
  gen_data->add_option("--config", config_path, "run configuration")->required();
  gen_data->add_option("--out", out_dir, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train from scratch");
  train_cmd->add_option("--config", config_path, "run configuration")->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--threads", threads, "worker thread limit");

  auto* cont = app.add_subcommand("continue", "resume training with more sequences");
  cont->add_option("--config", config_path, "run configuration")->required();
  cont->add_option("--checkpoint", ckpt_path, "trained model")->required();
  cont->add_option("--out", out_dir, "output directory")->required();
  cont->add_option("--threads", threads, "worker thread limit");

  auto* gen = app.add_subcommand("generate", "roll the model out against a reference");
  gen->add_option("--config", config_path, "run configuration")->required();
  gen->add_option("--checkpoint", ckpt_path, "trained model")->required();
  gen->add_option("--sequence", label, "sequence label")->required();
  gen->add_option("--mode", mode_name, "open or closed")->default_val("closed");
  gen->add_option("--steps", steps, "override the rollout length");
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* rec = app.add_subcommand("recognize", "follow a stream and report errors");
  rec->add_option("--config", config_path, "run configuration")->required();
  rec->add_option("--checkpoint", ckpt_path, "trained model")->required();
  rec->add_option("--sequence", label, "sequence label")->required();
  rec->add_option("--mode", mode_name, "regression or entrainment")
      ->default_val("regression");
  rec->add_option("--out", out_dir, "output directory")->required();

  auto* ana = app.add_subcommand("analyze", "export trajectory statistics");
  ana->add_option("--config", config_path, "run configuration")->required();
  ana->add_option("--checkpoint", ckpt_path, "trained model")->required();
  ana->add_option("--out", out_dir, "output directory")->required();
  ana->add_option("--components", components, "projection dimensionality");
  ana->add_option("--quadrant-layer", quadrant_level, "layer for the quadrant table");

  auto* gc = app.add_subcommand("gradcheck", "verify gradients against differences");
  gc->add_option("--config", config_path, "architecture to check (default: micro nets)");
  gc->add_option("--trials", trials, "number of random networks");
  gc->add_option("--seed", seed, "rng seed");
  gc->add_option("--fd", fd_h, "finite difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_data->parsed()) return cmd_gen_data(config_path, out_dir);
    if (train_cmd->parsed()) return cmd_train(config_path, out_dir, threads);
    if (cont->parsed()) return cmd_continue(config_path, ckpt_path, out_dir, threads);
    if (gen->parsed())
      return cmd_generate(config_path, ckpt_path, label, mode_name, steps, out_dir);
    if (rec->parsed())
      return cmd_recognize(config_path, ckpt_path, label, mode_name, out_dir);
    if (ana->parsed())
      return cmd_analyze(config_path, ckpt_path, out_dir, components, quadrant_level);
    if (gc->parsed()) return cmd_gradcheck(config_path, trials, seed, fd_h);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code::config;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return exit_code::format;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return exit_code::io;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return exit_code::numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::failure;
  }
  return exit_code::failure;
}
