#pragma once

// Command implementations behind the `lwcnn` tool. Every command validates the
// whole RunConfig first, writes only below `out`, and echoes the effective
// configuration to <out>/config.json.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lwcnn/augment.hpp"
#include "lwcnn/network.hpp"
#include "lwcnn/preprocess.hpp"
#include "lwcnn/trainer.hpp"
#include "lwcnn/tuner.hpp"

namespace lwcnn {

struct RunConfig {
    std::filesystem::path data;  // dataset root holding Training/ and Testing/
    std::filesystem::path out = "out";
    std::uint64_t seed = 42;
    NetworkConfig network;
    TrainConfig train;
    SearchSpace search;
    CropParams crop;
    bool crop_on_the_fly = false;  // crop while loading instead of reading a pre-cropped tree
    std::filesystem::path weights;  // evaluate, featuremaps
    std::filesystem::path image;    // featuremaps
    std::size_t preview_samples = 8;
    std::size_t preview_variants = 5;

    /// Throws std::invalid_argument naming the first bad setting.
    void validate() const;
};

void to_json(nlohmann::json &j, const RunConfig &c);
/// Missing keys keep their current values, so a file can override defaults piecemeal.
void from_json(const nlohmann::json &j, RunConfig &c);

RunConfig load_run_config(const std::filesystem::path &path);

/// split,class,count rows plus totals, for Training and Testing.
std::string dataset_stats_csv(const std::filesystem::path &root, std::ostream &log);

/// stats: print and write <out>/stats.csv.
void cmd_stats(const RunConfig &cfg, std::ostream &out, std::ostream &log);

/// crop: mirror <data>/{Training,Testing} as 150x150 PNGs below <out>, plus
/// <out>/crop_boxes.csv (path,top,bottom,left,right,empty_fallback).
void cmd_crop(const RunConfig &cfg, std::ostream &log);

/// train: fit on a stratified 80/20 split of <data>/Training. Writes
/// weights.lwcnn, history.csv, val_report.{txt,csv} and val_confusion.csv.
void cmd_train(const RunConfig &cfg, std::ostream &log);

/// tune: k-fold random search on <data>/Training, retrain the best config,
/// evaluate on <data>/Testing. Writes tuner_report.json, weights.lwcnn,
/// history.csv, report.{txt,csv} and confusion.csv.
void cmd_tune(const RunConfig &cfg, std::ostream &log);

/// evaluate: <weights> on <data>/Testing. Writes report.{txt,csv} and confusion.csv.
void cmd_evaluate(const RunConfig &cfg, std::ostream &log);

/// Per-channel min-max to 0..255 (a constant channel maps to 0), tiled
/// row-major into a grid of ceil(sqrt(C)) columns.
Grayscale8 feature_grid(const Tensor &maps);

/// featuremaps: crop <image>, write input.png, conv1.png and conv2.png.
void cmd_featuremaps(const RunConfig &cfg, std::ostream &log);

/// augment-preview: one row per sample, the original followed by augmented
/// variants for epochs 0.., written to augment_preview.png.
void cmd_augment_preview(const RunConfig &cfg, std::ostream &log);

}  // namespace lwcnn
