#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hotmv/checkpoint.hpp"
#include "hotmv/config.hpp"
#include "hotmv/data.hpp"
#include "hotmv/error.hpp"
#include "hotmv/eval.hpp"
#include "hotmv/train.hpp"
#include "hotmv/version.hpp"

namespace hotmv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  std::string out;
  bool force = false;
  bool print_config = false;
};

struct TrainingOptions {
  std::string regularizer;
  int epochs = -1;
  std::vector<std::string> settings;  // key=value
  double labeled_fraction = 0.05;
  std::string mode = "semisupervised";
};

struct SynthOptions {
  Index samples = 2000;
  int classes = 6;
  std::string assignment = "0,0,1,1,2,2";
  std::string moduli;
  Index latent_dim = 4;
  Index view_dim = 20;
  double separation = 2.0;
  double latent_noise = 1.0;
  double noise = 0.1;
};

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not an integer");
    }
  }
  return out;
}

TrainConfig resolve_config(const GlobalOptions& g, const TrainingOptions& t) {
  TrainConfig config;
  if (!g.config_path.empty()) config = load_config_file(g.config_path);
  for (const auto& kv : t.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!t.regularizer.empty()) config.regularizer = parse_regularizer(t.regularizer);
  if (t.epochs >= 0) config.epochs = t.epochs;
  if (g.seed_given) config.seed = g.seed;
  config.validate();
  return config;
}

void prepare_out(const fs::path& out, bool force) {
  if (out.empty()) throw UsageError("--out is required");
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw UsageError(out.string() + " exists and is not a directory");
    if (!fs::is_empty(out) && !force) {
      throw UsageError(out.string() + " is not empty (use --force to overwrite)");
    }
  }
  fs::create_directories(out);
}

fs::path manifest_path(const std::string& data) {
  fs::path p(data);
  return fs::is_directory(p) ? p / "manifest.json" : p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// One RunManifest per command invocation.
class RunRecord {
 public:
  RunRecord(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["argv"] = std::vector<std::string>(args.begin() + 1, args.end());
    j_["version"] = library_version();
    j_["outputs"] = json::array();
  }

  void config(const TrainConfig& c) {
    j_["config"] = config_to_map(c);
    j_["seed"] = c.seed;
  }
  void seed(std::uint64_t s) { j_["seed"] = s; }
  void dataset(const fs::path& path, const MultiViewDataset& ds) {
    j_["dataset"] = {{"path", path.string()}, {"name", ds.name}, {"provenance", ds.provenance}};
  }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void set(const std::string& key, json value) { j_[key] = std::move(value); }

  void write(const fs::path& dir) {
    j_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(dir / "run.json", j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

int cmd_synth(const GlobalOptions& g, const SynthOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  SynthSpec spec;
  spec.samples = o.samples;
  spec.classes = o.classes;
  spec.assignment = parse_int_list(o.assignment, "--assignment");
  if (!o.moduli.empty()) spec.moduli = parse_int_list(o.moduli, "--moduli");
  spec.latent_dim = o.latent_dim;
  spec.default_view_dim = o.view_dim;
  spec.class_separation = o.separation;
  spec.latent_noise = o.latent_noise;
  spec.noise = o.noise;
  spec.seed = g.seed;
  if (g.print_config) {
    out << "samples = " << spec.samples << "\nclasses = " << spec.classes << "\nassignment = " << o.assignment
        << "\nlatent_dim = " << spec.latent_dim << "\nview_dim = " << spec.default_view_dim
        << "\nseparation = " << spec.class_separation << "\nlatent_noise = " << spec.latent_noise
        << "\nnoise = " << spec.noise << "\nseed = " << spec.seed << "\n";
    return 0;
  }
  const auto ds = generate_synthetic(spec);
  const fs::path dir(g.out);
  prepare_out(dir, g.force);
  RunRecord run("synth", args);
  run.seed(spec.seed);
  write_dataset(ds, dir);
  run.output(dir / "manifest.json");
  run.dataset(dir / "manifest.json", ds);
  run.write(dir);
  out << "wrote " << ds.num_views() << " views x " << ds.num_samples() << " samples to " << dir.string() << "\n";
  return 0;
}

SplitSpec split_for(const TrainConfig& config, double labeled_fraction) {
  SplitSpec split;
  split.labeled_fraction = labeled_fraction;
  split.seed = config.seed;
  split.unalign = !requires_alignment(config.regularizer);
  return split;
}

int cmd_train(const GlobalOptions& g, const TrainingOptions& t, const std::string& data,
              const std::vector<std::string>& args, std::ostream& out) {
  const auto config = resolve_config(g, t);
  if (g.print_config) {
    out << config_to_text(config);
    return 0;
  }
  if (t.mode != "semisupervised" && t.mode != "unsupervised") {
    throw UsageError("--mode must be semisupervised or unsupervised");
  }
  const auto mpath = manifest_path(data);
  const auto ds = load_manifest(mpath);
  const fs::path dir(g.out);
  prepare_out(dir, g.force);
  RunRecord run("train", args);
  run.config(config);
  run.dataset(mpath, ds);
  run.set("mode", t.mode);
  run.set("labeled_fraction", t.labeled_fraction);

  TrainResult result;
  if (t.mode == "semisupervised") {
    if (!ds.labels) throw DataError(mpath.string() + ": no labels; semisupervised training needs a labeled subset");
    const auto split = split_and_unalign(ds, split_for(config, t.labeled_fraction));
    result = train_semisupervised(split, config);
  } else if (ds.labels) {
    const auto split = split_and_unalign(ds, split_for(config, t.labeled_fraction));
    result = train_unsupervised(unsupervised_pool(split), config, &split.valid);
    fit_classifier(result.model, split.labeled, config);
  } else {
    result = train_unsupervised(ds, config);
  }

  save_checkpoint(dir / "checkpoint.bin", model_to_named(result.model));
  run.output(dir / "checkpoint.bin");
  write_text(dir / "report.jsonl", report_to_jsonl(result.report));
  run.output(dir / "report.jsonl");
  write_text(dir / "config.txt", config_to_text(config));
  run.output(dir / "config.txt");
  if (result.report.final_plan) {
    // Square reference plans (S == K) would otherwise read as pairwise.
    auto plan_json = nlohmann::json::parse(plan_to_json(*result.report.final_plan));
    plan_json["columns"] = uses_references(config.regularizer) ? "references" : "views";
    write_text(dir / "plan.json", plan_json.dump(2));
    std::ofstream csv(dir / "plan.csv", std::ios::binary);
    write_plan_csv(csv, *result.report.final_plan);
    run.output(dir / "plan.json");
    run.output(dir / "plan.csv");
    if (ds.planted_partition && result.report.final_plan->weights.rows() ==
                                    static_cast<Index>(ds.planted_partition->size())) {
      const auto& plan = *result.report.final_plan;
      run.set("view_assignment", assign_views(plan));
      if (config.regularizer == RegularizerKind::kHotReference) {
        run.set("cluster_ari", cluster_recovery(plan, *ds.planted_partition));
      }
    }
  }
  run.set("selected_epoch", result.report.selected_epoch);
  run.write(dir);
  out << "trained " << result.report.epochs.size() << " epochs; outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_eval(const GlobalOptions& g, const std::string& checkpoint, const std::string& data,
             const std::string& split_name, double labeled_fraction, const std::vector<std::string>& args,
             std::ostream& out) {
  const fs::path ckpt(checkpoint);
  // The split must match training: take the seed and labeled fraction from
  // the training run manifest unless given explicitly.
  std::uint64_t seed = g.seed;
  std::string regularizer = "none";
  const auto run_json = ckpt.parent_path() / "run.json";
  if (fs::exists(run_json)) {
    try {
      const auto j = json::parse(read_text(run_json));
      if (!g.seed_given && j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
      if (labeled_fraction < 0 && j.contains("labeled_fraction")) {
        labeled_fraction = j.at("labeled_fraction").get<double>();
      }
      if (j.contains("config") && j.at("config").contains("regularizer")) {
        regularizer = j.at("config").at("regularizer").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw DataError(run_json.string() + ": " + e.what());
    }
  }
  if (labeled_fraction < 0) labeled_fraction = 0.05;
  if (g.print_config) {
    out << "seed = " << seed << "\nlabeled_fraction = " << labeled_fraction << "\nsplit = " << split_name << "\n";
    return 0;
  }

  const auto model = model_from_named(load_checkpoint(ckpt));
  const auto mpath = manifest_path(data);
  const auto ds = load_manifest(mpath);
  if (!ds.labels) throw DataError(mpath.string() + ": no labels to evaluate against");
  if (ds.num_views() != model.num_views()) {
    throw DataError("checkpoint has " + std::to_string(model.num_views()) + " views but " + mpath.string() +
                    " has " + std::to_string(ds.num_views()));
  }
  for (size_t s = 0; s < ds.num_views(); ++s) {
    const Index expected = model.encoders.mlps[s].input_dim();
    if (ds.view_dim(s) != expected) {
      throw DataError("view '" + ds.view_names[s] + "' has dimension " + std::to_string(ds.view_dim(s)) +
                      " but the checkpoint expects " + std::to_string(expected));
    }
  }

  SplitSpec spec;
  spec.seed = seed;
  spec.labeled_fraction = labeled_fraction;
  spec.unalign = !requires_alignment(parse_regularizer(regularizer));
  const MultiViewDataset* part = &ds;
  DataSplit split;
  if (split_name != "all") {
    split = split_and_unalign(ds, spec);
    if (split_name == "test") {
      part = &split.test;
    } else if (split_name == "valid") {
      part = &split.valid;
    } else if (split_name == "labeled") {
      part = &split.labeled;
    } else {
      throw UsageError("--split must be test, valid, labeled or all");
    }
  }
  const double acc = accuracy(predict(model, *part), *part->labels);
  json result = {{"split", split_name},
                 {"samples", part->num_samples()},
                 {"accuracy", acc},
                 {"seed", seed},
                 {"checkpoint", ckpt.string()}};
  if (g.out.empty()) {
    out << result.dump(2) << "\n";
    return 0;
  }
  const fs::path dir(g.out);
  prepare_out(dir, g.force);
  RunRecord run("eval", args);
  run.seed(seed);
  run.dataset(mpath, ds);
  write_text(dir / "eval.json", result.dump(2) + "\n");
  run.output(dir / "eval.json");
  run.write(dir);
  out << result.dump(2) << "\n";
  return 0;
}

int cmd_ablate(const GlobalOptions& g, const TrainingOptions& t, const std::string& data, int trials,
               const std::vector<std::string>& args, std::ostream& out) {
  const auto config = resolve_config(g, t);
  if (g.print_config) {
    out << config_to_text(config);
    return 0;
  }
  AblationOptions options;
  options.trials = trials;
  options.mode = parse_ablation_mode(t.mode);
  options.split.labeled_fraction = t.labeled_fraction;
  const auto mpath = manifest_path(data);
  const auto ds = load_manifest(mpath);
  const fs::path dir(g.out);
  prepare_out(dir, g.force);
  RunRecord run("ablate", args);
  run.config(config);
  run.dataset(mpath, ds);
  const auto report = run_ablation(ds, config, options);
  write_text(dir / "ablation.json", ablation_to_json(report));
  run.output(dir / "ablation.json");
  run.write(dir);
  for (const auto& row : report.rows) {
    out << row.removed << "\t" << row.mean << "\t" << row.stddev << "\n";
  }
  return 0;
}

int cmd_export_plan(const GlobalOptions& g, const std::string& plan_path, const std::string& data,
                    const std::string& names, const std::vector<std::string>& args, std::ostream& out) {
  const auto text = read_text(plan_path);
  const auto plan = plan_from_json(text);
  std::vector<std::string> cols;
  if (nlohmann::json::parse(text).value("columns", "") == "references") {
    for (Index k = 0; k < plan.weights.cols(); ++k) cols.push_back("ref" + std::to_string(k));
  }
  std::vector<std::string> rows;
  if (!names.empty()) {
    std::stringstream ss(names);
    std::string item;
    while (std::getline(ss, item, ',')) rows.push_back(item);
  } else if (!data.empty()) {
    rows = load_manifest(manifest_path(data), false).view_names;
  } else {
    for (Index s = 0; s < plan.weights.rows(); ++s) rows.push_back("view" + std::to_string(s));
  }
  if (g.print_config) {
    out << "plan = " << plan_path << "\nrows = " << rows.size() << "\n";
    return 0;
  }
  const fs::path dir(g.out);
  prepare_out(dir, g.force);
  RunRecord run("export-plan", args);
  export_plan_heatmap(plan, rows, dir / "plan_heatmap.csv", cols);
  run.output(dir / "plan_heatmap.csv");
  run.output(dir / "plan_heatmap.json");
  run.write(dir);
  out << "wrote " << (dir / "plan_heatmap.csv").string() << "\n";
  return 0;
}

int exit_code(const Error& e) { return static_cast<int>(e.kind()); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view representation learning with hierarchical optimal transport", "hotmv"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", library_version());

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed (default 0)");
  app.add_option("--config", g.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--force", g.force, "Allow writing into a non-empty output directory");
  app.add_flag("--print-config", g.print_config, "Print the fully resolved settings and exit");

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a planted-cluster synthetic dataset");
  synth->add_option("--samples", so.samples, "Number of samples");
  synth->add_option("--classes", so.classes, "Number of classes");
  synth->add_option("--assignment", so.assignment, "Comma-separated planted cluster of each view");
  synth->add_option("--moduli", so.moduli, "Comma-separated label modulus of each cluster");
  synth->add_option("--latent-dim", so.latent_dim, "Latent code dimension");
  synth->add_option("--view-dim", so.view_dim, "Features per view");
  synth->add_option("--separation", so.separation, "Scale of group means");
  synth->add_option("--latent-noise", so.latent_noise, "Latent noise level");
  synth->add_option("--noise", so.noise, "Observation noise level");

  TrainingOptions to;
  std::string data;
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--data", data, "Dataset directory or manifest")->required();
    sub->add_option("--regularizer", to.regularizer,
                    "none, lscca, gdcca, sw_pairwise, sw_reference, hot_pairwise or hot_reference");
    sub->add_option("--epochs", to.epochs, "Number of epochs");
    sub->add_option("--set", to.settings, "Config override key=value (repeatable)");
    sub->add_option("--labeled-fraction", to.labeled_fraction, "Labeled share of the training part");
    sub->add_option("--mode", to.mode, "semisupervised or unsupervised");
  };
  auto* train = app.add_subcommand("train", "Train encoders (and classifier) on a dataset");
  add_training(train);

  std::string checkpoint;
  std::string split_name = "test";
  double eval_fraction = -1.0;
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data, "Dataset directory or manifest")->required();
  eval->add_option("--split", split_name, "test, valid, labeled or all");
  eval->add_option("--labeled-fraction", eval_fraction, "Labeled share used at training time");

  int trials = 1;
  auto* ablate = app.add_subcommand("ablate", "Retrain with each view removed");
  add_training(ablate);
  ablate->add_option("--trials", trials, "Trials per row");

  std::string plan_path;
  std::string names;
  auto* export_plan = app.add_subcommand("export-plan", "Write a transport plan as heatmap CSV and JSON");
  export_plan->add_option("--plan", plan_path, "plan.json written by train")->required()->check(CLI::ExistingFile);
  export_plan->add_option("--data", data, "Dataset whose view names label the rows");
  export_plan->add_option("--names", names, "Comma-separated row names");

  std::vector<std::string> argv_rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(argv_rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }
  g.seed_given = app.count("--seed") > 0;

  try {
    if (synth->parsed()) return cmd_synth(g, so, args, out);
    if (train->parsed()) return cmd_train(g, to, data, args, out);
    if (eval->parsed()) return cmd_eval(g, checkpoint, data, split_name, eval_fraction, args, out);
    if (ablate->parsed()) return cmd_ablate(g, to, data, trials, args, out);
    if (export_plan->parsed()) return cmd_export_plan(g, plan_path, data, names, args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace hotmv::cli
