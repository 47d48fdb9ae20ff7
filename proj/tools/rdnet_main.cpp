// Command-line surface for the region-detection pipeline:
// gen-phantom | augment | train | predict | evaluate.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rdnet/augment.hpp"
#include "rdnet/detector.hpp"
#include "rdnet/errors.hpp"
#include "rdnet/io.hpp"
#include "rdnet/phantom.hpp"
#include "rdnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace rdnet;

namespace {

std::string sample_name(int i) {
  std::ostringstream os;
  os << "sample_" << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

RunConfig load_config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : io::load_run_config(path);
}

// Sorted stems of "<stem>.vol" files, mask volumes excluded.
std::vector<std::string> volume_stems(const std::string& dir) {
  std::vector<std::string> stems;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".vol") continue;
    const std::string stem = e.path().stem().string();
    if (stem.ends_with(".mask") || stem.ends_with("_mask")) continue;
    stems.push_back(stem);
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw DataError("no volume files in " + dir);
  return stems;
}

int cmd_gen_phantom(const std::string& config_path, const std::string& out_dir, int count,
                    std::uint64_t seed, const std::string& noise_kind) {
  const RunConfig cfg = load_config_or_default(config_path);
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    Rng rng(seed ^ std::uint64_t(i + 1));
    auto sample = gen_phantom(cfg.phantom, rng);
    if (noise_kind == "low")
      sample.volume = apply_noise(sample.volume, cfg.noise.low(), rng);
    else if (noise_kind == "high")
      sample.volume = apply_noise(sample.volume, cfg.noise.high(), rng);
    else if (noise_kind != "none")
      throw UsageError("unknown noise kind: " + noise_kind);
    const std::string base = (fs::path(out_dir) / sample_name(i)).string();
    io::write_volume(base + ".vol", sample.volume);
    io::write_volume(base + "_mask.vol", sample.mask);
    io::write_annotations(base + ".ann", {sample.annotation});
  }
  std::cout << "wrote " << count << " phantoms to " << out_dir << "\n";
  return 0;
}

int cmd_augment(const std::string& config_path, const std::string& in_dir,
                const std::string& out_dir, int aug_count, float aug_sigma,
                std::uint64_t seed) {
  const RunConfig cfg = load_config_or_default(config_path);
  const int count = aug_count >= 0 ? aug_count : cfg.augment.count;
  const float sigma = aug_sigma >= 0.f ? aug_sigma : cfg.augment.sigma;
  fs::create_directories(out_dir);
  int written = 0;
  for (const auto& stem : volume_stems(in_dir)) {
    const std::string base = (fs::path(in_dir) / stem).string();
    Volume vol = io::read_volume(base + ".vol");
    Volume mask = io::read_volume(base + "_mask.vol");
    auto boxes = io::read_annotations(base + ".ann");

    // originals pass through unchanged
    const std::string out_base = (fs::path(out_dir) / stem).string();
    io::write_volume(out_base + ".vol", vol);
    io::write_annotations(out_base + ".ann", boxes);
    ++written;

    Rng rng(seed ^ std::hash<std::string>{}(stem));
    auto augmented = augment_dataset(vol, {mask}, rng, count, {sigma, sigma});
    for (std::size_t i = 0; i < augmented.size(); ++i) {
      std::ostringstream name;
      name << stem << "_aug" << std::setw(2) << std::setfill('0') << i + 1;
      const std::string abase = (fs::path(out_dir) / name.str()).string();
      io::write_volume(abase + ".vol", augmented[i].volume);
      // boxes re-derived from the warped mask
      io::write_annotations(abase + ".ann",
                            {box_from_mask(augmented[i].masks[0], boxes.at(0).label)});
      ++written;
    }
  }
  std::cout << "wrote " << written << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_ckpt, std::optional<std::uint64_t> seed,
              const std::string& log_path) {
  RunConfig cfg = load_config_or_default(config_path);
  if (seed) cfg.train.seed = *seed;

  std::vector<TrainSample> dataset;
  for (const auto& stem : volume_stems(data_dir)) {
    const std::string base = (fs::path(data_dir) / stem).string();
    Volume vol = io::read_volume(base + ".vol");
    auto boxes = io::read_annotations(base + ".ann");
    auto fitted = io::crop_or_pad(vol, cfg.network.input_dims);
    dataset.push_back(
        {volume_to_tensor(fitted.volume), io::shift_annotations(boxes, fitted.shift)});
  }

  Rng rng(cfg.train.seed);
  auto params = build_model<float>(cfg.network, rng);
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw DataError("cannot open loss log " + log_path);
  }
  auto result = train(params, cfg.network, dataset, cfg.train,
                      log_path.empty() ? nullptr : &log, out_ckpt);
  std::cout << "trained " << result.steps_run << " steps on " << dataset.size()
            << " samples; final L_total "
            << (result.history.empty() ? 0.0 : result.history.back().l_total)
            << (result.early_stopped ? " (early stop)" : "") << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& in_dir,
                const std::string& out_dir, float threshold) {
  auto ck = io::load_checkpoint(model_path);
  fs::create_directories(out_dir);
  for (const auto& stem : volume_stems(in_dir)) {
    Volume vol = io::read_volume((fs::path(in_dir) / (stem + ".vol")).string());
    auto fitted = io::crop_or_pad(vol, ck.config.input_dims);

    const auto t0 = std::chrono::steady_clock::now();
    auto field = model_forward(ck.params, ck.config, volume_to_tensor(fitted.volume), false);
    auto dets = decode(field, threshold, vol.spacing);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // report in the original volume's coordinates
    for (auto& d : dets)
      for (int a = 0; a < 3; ++a) {
        d.center_vox[a] -= float(fitted.shift[a]);
        d.center_mm[a] = d.center_vox[a] * vol.spacing[a];
      }
    io::write_detections((fs::path(out_dir) / (stem + ".det")).string(), dets);
    std::cout << stem << ": " << dets.size() << " detection(s) in " << std::fixed
              << std::setprecision(2) << secs << " s\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& pred_dir, const std::string& truth_dir,
                 const std::string& out_path) {
  std::vector<EvalCase> cases;
  for (const auto& stem : volume_stems(truth_dir)) {
    const std::string base = (fs::path(truth_dir) / stem).string();
    Volume vol = io::read_volume(base + ".vol");
    auto boxes = io::read_annotations(base + ".ann");
    if (boxes.size() != 1)
      throw DataError(base + ".ann: expected exactly one ground-truth box");
    EvalCase c;
    c.truth = boxes[0];
    c.spacing = vol.spacing;
    const std::string det_path = (fs::path(pred_dir) / (stem + ".det")).string();
    if (fs::exists(det_path)) {
      auto dets = io::read_detections(det_path);
      for (const auto& d : dets)
        if (d.label == c.truth.label) c.detection = d;
    }
    cases.push_back(std::move(c));
  }
  const auto stats = evaluate(cases);
  const std::string table = format_error_table(stats);
  std::cout << table;
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot open " + out_path + " for writing");
    f << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D one-shot region detection on volumetric images"};
  app.require_subcommand(1);

  std::string config_path, in_dir, out_dir, out_path, model_path, log_path, noise_kind = "none";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> train_seed;
  int count = 10, aug_count = -1;
  float aug_sigma = -1.f, threshold = 0.1f;

  auto* gen = app.add_subcommand("gen-phantom", "generate synthetic phantom volumes");
  gen->add_option("--config", config_path);
  gen->add_option("--out-dir", out_dir)->required();
  gen->add_option("--count", count);
  gen->add_option("--seed", seed);
  gen->add_option("--noise", noise_kind)->check(CLI::IsMember({"none", "low", "high"}));

  auto* aug = app.add_subcommand("augment", "elastically deform a dataset");
  aug->add_option("--config", config_path);
  aug->add_option("--in-dir", in_dir)->required();
  aug->add_option("--out-dir", out_dir)->required();
  aug->add_option("--aug-count", aug_count);
  aug->add_option("--aug-sigma", aug_sigma);
  aug->add_option("--seed", seed);

  auto* trn = app.add_subcommand("train", "train FEN+RDN end to end");
  trn->add_option("--config", config_path);
  trn->add_option("--data", in_dir)->required();
  trn->add_option("--out", out_path)->required();
  trn->add_option("--seed", train_seed);
  trn->add_option("--log", log_path);

  auto* prd = app.add_subcommand("predict", "decode detections from volumes");
  prd->add_option("--model", model_path)->required();
  prd->add_option("--in-dir", in_dir)->required();
  prd->add_option("--out-dir", out_dir)->required();
  prd->add_option("--threshold", threshold);

  auto* evl = app.add_subcommand("evaluate", "center-distance error statistics");
  evl->add_option("--pred-dir", in_dir)->required();
  evl->add_option("--truth-dir", out_dir)->required();
  evl->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_phantom(config_path, out_dir, count, seed, noise_kind);
    if (aug->parsed()) return cmd_augment(config_path, in_dir, out_dir, aug_count, aug_sigma, seed);
    if (trn->parsed()) return cmd_train(config_path, in_dir, out_path, train_seed, log_path);
    if (prd->parsed()) return cmd_predict(model_path, in_dir, out_dir, threshold);
    if (evl->parsed()) return cmd_evaluate(in_dir, out_dir, out_path);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
