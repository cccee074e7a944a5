#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include "peps/checkpoint.hpp"
#include "peps/config.hpp"
#include "peps/model.hpp"
#include "peps/procedural.hpp"
#include "peps/signals.hpp"
#include "peps/sweep.hpp"
#include "peps/train.hpp"

namespace fs = std::filesystem;
using namespace peps;

namespace {

struct LoadedSignal {
  // Owning storage; SignalDataset keeps pointers into these.
  std::optional<ImageSignal> image;
  std::optional<TextureSet> textures;
  std::optional<SdfVolume> volume;

  SignalDataset dataset() const {
    if (image) return SignalDataset(*image);
    if (textures) return SignalDataset(*textures);
    return SignalDataset(*volume);
  }
};

SdfVolume make_analytic_volume(const std::string& spec) {
  // analytic-<shape>-<resolution> with canonical shape parameters.
  const auto second = spec.find('-', 9);
  if (spec.rfind("analytic-", 0) != 0 || second == std::string::npos)
    throw config_error("malformed analytic signal '" + spec +
                       "' (expected analytic-<shape>-<res>)");
  const std::string shape = spec.substr(9, second - 9);
  const std::size_t res = std::stoul(spec.substr(second + 1));
  if (shape == "sphere") return analytic_sphere({0.5, 0.5, 0.5}, 0.3, res);
  if (shape == "torus")
    return analytic_torus({0.5, 0.5, 0.5}, 0.3, 0.12, res);
  if (shape == "box")
    return analytic_box({0.5, 0.5, 0.5}, {0.3, 0.25, 0.2}, res);
  throw config_error("unknown analytic shape '" + shape + "'");
}

LoadedSignal load_signal(const std::string& task, const std::string& path) {
  LoadedSignal s;
  if (path.empty()) throw config_error("config has no [task] signal path");
  if (task == "image") {
    s.image = load_image(path);
  } else if (task == "texture_set") {
    s.textures = load_texture_set(path);
  } else if (task == "sdf") {
    if (path.rfind("analytic-", 0) == 0)
      s.volume = make_analytic_volume(path);
    else
      s.volume = load_volume(path);
  } else {
    throw config_error("unknown task '" + task + "'");
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << text;
}

void print_report(const EvalReport& rep) {
  for (const auto& [k, v] : rep.entries) std::printf("%s = %.6g\n", k.c_str(), v);
}

void write_reconstruction(Model& model, const SignalDataset& data,
                          const fs::path& dir) {
  switch (data.task()) {
    case SignalDataset::Task::image: {
      const auto& gt = *data.image();
      save_image((dir / "reconstruction.ppm").string(),
                 model.reconstruct_image(gt.width, gt.height));
      return;
    }
    case SignalDataset::Task::texture_set: {
      const auto& set = *data.textures();
      for (std::size_t l = 0; l < set.layers.size(); ++l)
        save_image((dir / ("reconstruction_" + set.layers[l].name + ".ppm"))
                       .string(),
                   model.reconstruct_layer(set.width(), set.height(), l));
      return;
    }
    case SignalDataset::Task::sdf: {
      SdfVolume pred = model.reconstruct_volume(data.volume()->resolution);
      for (double& v : pred.values) v = static_cast<float>(v);
      save_volume((dir / "reconstruction.sdfv").string(), pred);
      return;
    }
  }
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> out_dir, bool param_count_only) {
  ExperimentConfig cfg = parse_experiment_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  validate_config(cfg);

  LoadedSignal sig = load_signal(cfg.task, cfg.signal);
  SignalDataset data = sig.dataset();
  const std::size_t img_size = std::max(data.grid_width(), data.grid_height());
  Model model = build_model(cfg, data.value_dim(), img_size);

  std::printf("encoder %s -> mlp input dim %zu, output dim %zu\n",
              cfg.encoder_kind.c_str(), model.mlp.cfg.input_dim,
              model.mlp.cfg.output_dim);
  std::printf("parameters: %zu (encoder %zu, mlp %zu)\n", model.param_count(),
              model.encoder.param_count(), model.mlp.param_count());
  if (param_count_only) return 0;

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  TrainConfig tc = TrainConfig::from(cfg);
  auto res = train(model, data, tc);
  model.round_params_to_f32();

  const char* metric_name =
      data.task() == SignalDataset::Task::sdf ? "iou" : "psnr";
  write_text(dir / "train_log.csv", metric_log_csv(res, metric_name));
  EvalReport rep = evaluate(model, data);
  write_text(dir / "report.csv", rep.csv());
  save_checkpoint((dir / "checkpoint.peps").string(),
                  make_checkpoint(cfg, model));
  std::printf("trained %zu steps, final loss %.6g\n", res.steps,
              res.final_loss);
  print_report(rep);
  std::printf("wrote %s\n", (dir / "checkpoint.peps").string().c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& signal_path,
             std::optional<std::string> out_dir) {
  ModelCheckpoint ck = load_checkpoint(ckpt_path);
  LoadedSignal sig = load_signal(ck.config.task, signal_path);
  SignalDataset data = sig.dataset();
  Model model = build_model(ck.config, data.value_dim(),
                            std::max(data.grid_width(), data.grid_height()));
  if (model.mlp.cfg.output_dim != data.value_dim())
    throw config_error("checkpoint output dim " +
                       std::to_string(model.mlp.cfg.output_dim) +
                       " does not match signal value dim " +
                       std::to_string(data.value_dim()));
  restore_params(model, ck);

  EvalReport rep = evaluate(model, data);
  print_report(rep);
  if (out_dir) {
    const fs::path dir(*out_dir);
    fs::create_directories(dir);
    write_text(dir / "report.csv", rep.csv());
    write_reconstruction(model, data, dir);
    std::printf("wrote reconstruction under %s\n", dir.string().c_str());
  }
  return 0;
}

int cmd_spectra(const std::string& image_path,
                std::optional<std::string> out_dir) {
  ImageSignal img = load_image(image_path);
  auto spec = radial_psd(img.values, img.width, img.height, 3);
  const fs::path dir(out_dir.value_or("."));
  fs::create_directories(dir);
  std::string table;
  for (std::size_t i = 0; i < spec.radii.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g %.12g\n", spec.radii[i], spec.power[i]);
    table += buf;
  }
  write_text(dir / "spectrum.csv", table);
  if (std::isnan(spec.fitted_alpha))
    std::printf("warning: degenerate spectrum, alpha undefined\n");
  else
    std::printf("alpha = %.4f\n", spec.fitted_alpha);
  std::printf("wrote %s\n", (dir / "spectrum.csv").string().c_str());
  return 0;
}

int cmd_lissajous(double x, double y, double phi_max, std::size_t samples,
                  const std::string& out_file,
                  const std::vector<double>& compare) {
  auto curve = lissajous_curve({x, y}, 0.0, phi_max, samples);
  std::string table;
  for (const auto& pt : curve) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.12g %.12g\n", pt[0], pt[1]);
    table += buf;
  }
  write_text(out_file, table);
  std::printf("wrote %s (%zu samples)\n", out_file.c_str(), samples);
  if (compare.size() == 2) {
    const double gap =
        lissajous_gap({x, y}, {compare[0], compare[1]}, phi_max, samples);
    std::printf("max pointwise gap = %.6g\n", gap);
    std::printf("verdict: %s\n", gap > 1e-6 ? "distinct" : "identical");
  }
  return 0;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::size_t>& resolutions,
              const std::vector<std::size_t>& feat_dims,
              std::vector<std::string> kinds,
              std::optional<std::uint64_t> seed,
              std::optional<std::string> out_dir) {
  ExperimentConfig base = parse_experiment_config(config_path);
  if (seed) base.seed = *seed;
  if (out_dir) base.out_dir = *out_dir;
  validate_config(base);
  LoadedSignal sig = load_signal(base.task, base.signal);
  SignalDataset data = sig.dataset();

  if (kinds.empty()) kinds.push_back(base.encoder_kind);
  std::vector<std::size_t> res_list =
      resolutions.empty() ? std::vector<std::size_t>{16} : resolutions;
  std::vector<SweepRun> runs;
  for (const auto& kind : kinds)
    for (std::size_t r : res_list)
      for (std::size_t d : feat_dims) {
        ExperimentConfig c = base;
        c.encoder_kind = kind;
        c.resolution = {r};
        c.feat_dim = d;
        SweepRun run;
        run.label = kind + "," + std::to_string(r) + "," + std::to_string(d);
        run.config = c;
        runs.push_back(std::move(run));
      }

  auto results = run_sweep(runs, data);
  std::string csv = "kind,resolution,feat_dim,params,metric\n";
  std::printf("%-24s %12s %12s\n", "kind,res,feat", "params", "metric");
  for (const auto& r : results) {
    std::printf("%-24s %12zu %12.4f\n", r.label.c_str(), r.param_count,
                r.metric);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6g\n", r.label.c_str(),
                  r.param_count, r.metric);
    csv += buf;
  }
  const fs::path dir(base.out_dir);
  fs::create_directories(dir);
  write_text(dir / "sweep.csv", csv);
  std::printf("wrote %s\n", (dir / "sweep.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positional-encoding projected sampling for implicit neural "
               "representations: training, evaluation and analysis"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, signal_path, image_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool param_count_only = false;

  auto* train_cmd = app.add_subcommand("train", "Train a model from a config");
  train_cmd->add_option("--config", config_path, "experiment config file")
      ->required();
  train_cmd->add_option("--seed", seed, "override the config seed");
  train_cmd->add_option("--out", out_dir, "override the output directory");
  train_cmd->add_flag("--param-count-only", param_count_only,
                      "print the parameter total and exit");

  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint against a signal");
  eval_cmd->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("signal", signal_path, "signal path")->required();
  eval_cmd->add_option("--out", out_dir,
                       "write report and reconstruction here");

  auto* spectra_cmd =
      app.add_subcommand("spectra", "Radially averaged power spectrum");
  spectra_cmd->add_option("image", image_path, "image file")->required();
  spectra_cmd->add_option("--out", out_dir, "output directory");

  double lx = 0, ly = 0, phi_max = 16.0 * std::numbers::pi;
  std::size_t samples = 4096;
  std::string curve_out = "curve.txt";
  std::vector<double> compare;
  auto* lis_cmd =
      app.add_subcommand("lissajous", "Coordinate trajectory analysis");
  lis_cmd->add_option("x", lx, "first coordinate")->required();
  lis_cmd->add_option("y", ly, "second coordinate")->required();
  lis_cmd->add_option("--phi-max", phi_max, "largest angular coefficient");
  lis_cmd->add_option("--samples", samples, "curve samples");
  lis_cmd->add_option("--out", curve_out, "curve output file");
  lis_cmd->add_option("--compare", compare,
                      "second point (x y) to compare against")
      ->expected(2);

  std::vector<std::size_t> sweep_res, sweep_feat;
  std::vector<std::string> sweep_kinds;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Train a grid of configurations and tabulate quality");
  sweep_cmd->add_option("--config", config_path, "base config")->required();
  sweep_cmd->add_option("--resolutions", sweep_res, "grid resolutions")
      ->delimiter(',');
  sweep_cmd->add_option("--feat-dims", sweep_feat, "feature dimensions")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_option("--kinds", sweep_kinds,
                        "encoder kinds (default: the config's)")
      ->delimiter(',');
  sweep_cmd->add_option("--seed", seed, "override the config seed");
  sweep_cmd->add_option("--out", out_dir, "override the output directory");

  try {
    app.parse(argc, argv);
    if (*train_cmd)
      return cmd_train(config_path, seed, out_dir, param_count_only);
    if (*eval_cmd) return cmd_eval(ckpt_path, signal_path, out_dir);
    if (*spectra_cmd) return cmd_spectra(image_path, out_dir);
    if (*lis_cmd)
      return cmd_lissajous(lx, ly, phi_max, samples, curve_out, compare);
    if (*sweep_cmd)
      return cmd_sweep(config_path, sweep_res, sweep_feat, sweep_kinds, seed,
                       out_dir);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numeric fault: %s\n", e.what());
    return 3;
  } catch (const io_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
