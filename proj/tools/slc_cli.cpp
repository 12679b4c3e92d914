// slc: command-line front end over the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slc/slc.h"

namespace {

namespace fs = std::filesystem;

struct Failure {
  slc_status status;
  std::string message;
};

void check(slc_status s) {
  if (s != SLC_OK) throw Failure{s, slc_last_error()};
}

template <typename F>
std::string read_string(F&& f) {
  std::size_t need = 0;
  check(f(nullptr, 0, &need));
  std::string s(need, '\0');
  check(f(s.data(), s.size(), &need));
  s.resize(need - 1);
  return s;
}

struct ConfigHandle {
  slc_config* p = nullptr;
  ~ConfigHandle() { slc_config_free(p); }
};

struct PipelineHandle {
  slc_pipeline* p = nullptr;
  ~PipelineHandle() { slc_pipeline_free(p); }
};

struct Options {
  std::string config_path;
  std::string run_root = "runs";
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::string model;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> image_size;
  std::string labels;
  std::string images;
  bool use_mask = false;
  std::vector<std::string> sets;
  std::string weights;
  bool quiet = false;
};

void log_line(const char* line, void* user) {
  if (!*static_cast<bool*>(user)) std::cerr << line << '\n';
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--run-root", o.run_root, "parent of hash-named run directories")
      ->capture_default_str();
  cmd->add_option("--run-dir", o.run_dir, "explicit run directory");
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--model", o.model, "m1 | m2-one | m2-dual")
      ->check(CLI::IsMember({"m1", "m2-one", "m2-dual"}));
  cmd->add_option("--folds", o.folds, "cross-validation folds");
  cmd->add_option("--epochs", o.epochs, "training epochs (0 = model default)");
  cmd->add_option("--image-size", o.image_size, "model input size (0 = model default)");
  cmd->add_option("--labels", o.labels, "ISIC-layout labels CSV");
  cmd->add_option("--images", o.images, "image directory");
  cmd->add_flag("--use-mask", o.use_mask, "m1: train on mask-multiplied images");
  cmd->add_option("--set", o.sets, "override any config key: key=value")->take_all();
  cmd->add_flag("-q,--quiet", o.quiet, "suppress progress on stderr");
}

ConfigHandle resolve_config(const Options& o) {
  ConfigHandle cfg;
  const fs::path recorded = o.run_dir.empty() ? fs::path() : fs::path(o.run_dir) / "config.txt";
  if (!o.config_path.empty()) {
    check(slc_config_load(o.config_path.c_str(), &cfg.p));
  } else if (!recorded.empty() && fs::is_regular_file(recorded)) {
    check(slc_config_load(recorded.c_str(), &cfg.p));
  } else {
    check(slc_config_new(&cfg.p));
  }
  auto set = [&](const std::string& k, const std::string& v) {
    check(slc_config_set(cfg.p, k.c_str(), v.c_str()));
  };
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (!o.model.empty()) set("model", o.model);
  if (o.folds) set("train.folds", std::to_string(*o.folds));
  if (o.epochs) set("train.epochs", std::to_string(*o.epochs));
  if (o.image_size) set("preprocess.image_size", std::to_string(*o.image_size));
  if (!o.labels.empty()) set("data.labels", fs::absolute(o.labels).string());
  if (!o.images.empty()) set("data.images", fs::absolute(o.images).string());
  if (o.use_mask) set("train.use_mask", "true");
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Failure{SLC_ERR_INVALID_ARGUMENT, "--set expects key=value, got '" + kv + "'"};
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

PipelineHandle open_pipeline(const Options& o, const ConfigHandle& cfg, bool* quiet) {
  PipelineHandle p;
  check(slc_pipeline_open(cfg.p, o.run_root.c_str(), o.run_dir.empty() ? nullptr : o.run_dir.c_str(),
                          log_line, quiet, &p.p));
  const std::string dir = read_string([&](char* b, std::size_t c, std::size_t* n) {
    return slc_pipeline_run_dir(p.p, b, c, n);
  });
  if (!*quiet) std::cerr << "run directory: " << dir << '\n';
  return p;
}

std::string run_dir_of(const PipelineHandle& p) {
  return read_string(
      [&](char* b, std::size_t c, std::size_t* n) { return slc_pipeline_run_dir(p.p, b, c, n); });
}

void print_file(const fs::path& path) {
  std::ifstream f(path);
  std::cout << f.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skin-lesion classification pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(slc_version()));

  Options o;
  std::string stage_for_all;
  const char* stages[] = {"ingest", "preprocess", "segment", "augment",
                          "train",  "crossval",   "evaluate"};
  std::vector<CLI::App*> stage_cmds;
  for (const char* s : stages) {
    auto* cmd = app.add_subcommand(s, std::string("run the ") + s + " stage");
    add_common(cmd, o);
    if (std::string(s) == "evaluate")
      cmd->add_option("--weights", o.weights, "weights file (default: best crossval checkpoint)");
    stage_cmds.push_back(cmd);
  }

  auto* all = app.add_subcommand("run", "run ingest through crossval in order");
  add_common(all, o);

  std::string image;
  auto* predict = app.add_subcommand("predict", "classify one image");
  add_common(predict, o);
  predict->add_option("image", image, "image file")->required();
  predict->add_option("--weights", o.weights, "weights file (default: best crossval checkpoint)");

  std::string synth_out;
  std::size_t per_class = 10, synth_size = 96;
  std::uint64_t synth_seed = 0;
  bool synth_masks = false;
  auto* synth = app.add_subcommand("synth", "write a synthetic ISIC-layout dataset");
  synth->add_option("out", synth_out, "output directory")->required();
  synth->add_option("--per-class", per_class, "images per class")->capture_default_str();
  synth->add_option("--size", synth_size, "image side in pixels")->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_flag("--masks", synth_masks, "also write <id>_mask.png ground truth");

  auto* cfg_cmd = app.add_subcommand("config", "print every config key with its default");

  CLI11_PARSE(app, argc, argv);

  bool quiet = o.quiet;
  try {
    if (cfg_cmd->parsed()) {
      std::cout << read_string([](char* b, std::size_t c, std::size_t* n) {
        return slc_config_describe(b, c, n);
      });
      return 0;
    }
    if (synth->parsed()) {
      check(slc_synth_dataset(synth_out.c_str(), per_class, synth_size, synth_seed,
                              synth_masks ? 1 : 0));
      std::cout << (fs::path(synth_out) / "labels.csv").string() << '\n';
      return 0;
    }

    quiet = o.quiet;
    const ConfigHandle cfg = resolve_config(o);
    const PipelineHandle p = open_pipeline(o, cfg, &quiet);
    const fs::path dir = run_dir_of(p);

    if (predict->parsed()) {
      const std::string line = read_string([&](char* b, std::size_t c, std::size_t* n) {
        return slc_pipeline_predict(p.p, image.c_str(), o.weights.empty() ? nullptr : o.weights.c_str(),
                                    b, c, n);
      });
      std::cout << line << '\n';
      return 0;
    }
    if (all->parsed()) {
      for (const char* s : {"ingest", "preprocess", "segment", "augment", "crossval"})
        check(slc_pipeline_run(p.p, s));
      print_file(dir / "crossval" / "metrics.json");
      return 0;
    }
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (!stage_cmds[i]->parsed()) continue;
      const std::string s = stages[i];
      if (s == "evaluate")
        check(slc_pipeline_evaluate(p.p, o.weights.empty() ? nullptr : o.weights.c_str()));
      else
        check(slc_pipeline_run(p.p, s.c_str()));
      if (s == "crossval" || s == "train" || s == "evaluate") print_file(dir / s / "metrics.json");
      if (s == "ingest") print_file(dir / "ingest" / "counts.txt");
    }
    return 0;
  } catch (const Failure& f) {
    std::cerr << "slc: error [" << slc_status_name(f.status) << "]: " << f.message << '\n';
    return static_cast<int>(f.status);
  }
}
