#include "lwcnn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lwcnn/dataset.hpp"
#include "lwcnn/metrics.hpp"
#include "lwcnn/weights_io.hpp"

namespace fs = std::filesystem;

namespace lwcnn {

void to_json(nlohmann::json &j, const CropParams &c) {
    j = nlohmann::json{{"threshold", c.threshold},
                       {"blur_sigma", c.blur_sigma},
                       {"erode_iterations", c.erode_iterations},
                       {"dilate_iterations", c.dilate_iterations},
                       {"output_size", c.output_size}};
}

void from_json(const nlohmann::json &j, CropParams &c) {
    CropParams d;
    c.threshold = j.value("threshold", d.threshold);
    c.blur_sigma = j.value("blur_sigma", d.blur_sigma);
    c.erode_iterations = j.value("erode_iterations", d.erode_iterations);
    c.dilate_iterations = j.value("dilate_iterations", d.dilate_iterations);
    c.output_size = j.value("output_size", d.output_size);
}

void RunConfig::validate() const {
    network.validate();
    train.validate();
    search.validate();
    crop.validate();
    if (preview_samples < 1) {
        throw std::invalid_argument("preview_samples must be >= 1");
    }
}

void to_json(nlohmann::json &j, const RunConfig &c) {
    nlohmann::json train = c.train;
    train.erase("seed");  // the run seed drives everything
    j = nlohmann::json{{"data", c.data.generic_string()},
                       {"out", c.out.generic_string()},
                       {"seed", c.seed},
                       {"network", c.network},
                       {"train", train},
                       {"search", c.search},
                       {"crop", c.crop},
                       {"crop_on_the_fly", c.crop_on_the_fly},
                       {"weights", c.weights.generic_string()},
                       {"image", c.image.generic_string()},
                       {"preview_samples", c.preview_samples},
                       {"preview_variants", c.preview_variants}};
}

namespace {

template <typename T>
void merge_into(const nlohmann::json &j, const char *key, T &value) {
    if (!j.contains(key)) {
        return;
    }
    nlohmann::json current = value;
    current.merge_patch(j.at(key));
    value = current.get<T>();
}

}  // namespace

void from_json(const nlohmann::json &j, RunConfig &c) {
    if (!j.is_object()) {
        throw std::invalid_argument("run config must be a JSON object");
    }
    static const std::set<std::string> known{"data",  "out",  "seed",           "network",        "train",
                                             "search", "crop", "crop_on_the_fly", "weights",        "image",
                                             "preview_samples", "preview_variants", "command"};
    for (const auto &[key, _] : j.items()) {
        if (!known.count(key)) {
            throw std::invalid_argument("unknown run config key '" + key + "'");
        }
    }
    c.data = j.value("data", c.data.generic_string());
    c.out = j.value("out", c.out.generic_string());
    c.seed = j.value("seed", c.seed);
    merge_into(j, "network", c.network);
    merge_into(j, "train", c.train);
    merge_into(j, "search", c.search);
    merge_into(j, "crop", c.crop);
    c.crop_on_the_fly = j.value("crop_on_the_fly", c.crop_on_the_fly);
    c.weights = j.value("weights", c.weights.generic_string());
    c.image = j.value("image", c.image.generic_string());
    c.preview_samples = j.value("preview_samples", c.preview_samples);
    c.preview_variants = j.value("preview_variants", c.preview_variants);
}

RunConfig load_run_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error("config " + path.string() + " is not valid JSON: " + e.what());
    }
    RunConfig cfg;
    from_json(j, cfg);
    return cfg;
}

namespace {

const char *const kSplits[] = {"Training", "Testing"};

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

void prepare_out(const RunConfig &cfg, const char *command) {
    cfg.validate();
    fs::create_directories(cfg.out);
    nlohmann::json j = cfg;
    j["command"] = command;
    write_text(cfg.out / "config.json", j.dump(2) + "\n");
}

fs::path split_dir(const RunConfig &cfg, const char *split) {
    const fs::path dir = cfg.data / split;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("missing " + std::string(split) + " directory under " + cfg.data.string());
    }
    return dir;
}

LoadOptions load_options(const RunConfig &cfg, std::size_t size) {
    LoadOptions o;
    o.crop = cfg.crop_on_the_fly;
    o.crop_params = cfg.crop;
    o.size = size;
    return o;
}

std::vector<std::string> class_names() {
    return {kClassNames.begin(), kClassNames.end()};
}

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

EpochCallback epoch_logger(std::ostream &log, const std::string &prefix) {
    return [&log, prefix](const EpochRecord &r) {
        log << prefix << "epoch " << r.epoch << ": loss " << fmt("%.4f", r.train_loss) << " acc "
            << fmt("%.4f", r.train_acc) << " val_loss " << fmt("%.4f", r.val_loss) << " val_acc "
            << fmt("%.4f", r.val_acc) << " lr " << fmt("%.3g", r.lr) << '\n';
    };
}

void write_reports(const fs::path &out, const std::string &stem, const std::string &confusion_name,
                   const std::vector<int> &truth, const std::vector<int> &pred, std::ostream &log) {
    const auto cm = confusion(truth, pred, kNumClasses);
    const auto report = aggregate(cm, class_names());
    const std::string text = render_text(report);
    write_text(out / (stem + ".txt"), text);
    write_text(out / (stem + ".csv"), render_csv(report));
    write_text(out / confusion_name, confusion_csv(cm, class_names()));
    log << text;
}

TrainConfig run_train_config(const RunConfig &cfg) {
    TrainConfig t = cfg.train;
    t.seed = cfg.seed;
    return t;
}

}  // namespace

std::string dataset_stats_csv(const fs::path &root, std::ostream &log) {
    std::ostringstream csv;
    csv << "split,class,count\n";
    std::size_t all = 0;
    bool any = false;
    for (const char *split : kSplits) {
        if (!fs::is_directory(root / split)) {
            continue;
        }
        any = true;
        const auto counts = scan_dataset(root / split, log).counts();
        std::size_t total = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            csv << split << ',' << kClassNames[c] << ',' << counts[c] << '\n';
            total += counts[c];
        }
        csv << split << ",total," << total << '\n';
        all += total;
    }
    if (!any) {
        throw std::runtime_error("no Training or Testing directory under " + root.string());
    }
    csv << "all,total," << all << '\n';
    return csv.str();
}

void cmd_stats(const RunConfig &cfg, std::ostream &out, std::ostream &log) {
    prepare_out(cfg, "stats");
    const std::string csv = dataset_stats_csv(cfg.data, log);
    write_text(cfg.out / "stats.csv", csv);
    out << csv;
}

void cmd_crop(const RunConfig &cfg, std::ostream &log) {
    prepare_out(cfg, "crop");
    std::ostringstream csv;
    csv << "path,top,bottom,left,right,empty_fallback\n";
    bool any = false;
    for (const char *split : kSplits) {
        if (!fs::is_directory(cfg.data / split)) {
            continue;
        }
        any = true;
        const auto index = scan_dataset(cfg.data / split, log);
        std::vector<fs::path> targets;
        std::set<fs::path> seen;
        for (const auto &s : index.samples) {
            const fs::path target = cfg.out / split / std::string(kClassNames[static_cast<std::size_t>(s.label)]) /
                                    (s.path.stem().string() + ".png");
            if (!seen.insert(target).second) {
                throw std::runtime_error("two inputs map to " + target.string());
            }
            targets.push_back(target);
            fs::create_directories(target.parent_path());
        }
        std::vector<CropResult> results(index.size());
        std::vector<std::string> errors(index.size());
#pragma omp parallel for schedule(dynamic, 4)
        for (std::size_t i = 0; i < index.size(); ++i) {
            try {
                results[i] = crop_pipeline(read_image(index.samples[i].path), cfg.crop);
                write_png(targets[i], results[i].image);
                results[i].image = {};
            } catch (const std::exception &e) {
                errors[i] = e.what();
            }
        }
        std::size_t written = 0, fallbacks = 0;
        for (std::size_t i = 0; i < index.size(); ++i) {
            if (!errors[i].empty()) {
                log << "warning: " << errors[i] << '\n';
                continue;
            }
            const auto &b = results[i].box;
            csv << fs::relative(index.samples[i].path, cfg.data).generic_string() << ',' << b.top << ',' << b.bottom
                << ',' << b.left << ',' << b.right << ',' << (results[i].empty_fallback ? 1 : 0) << '\n';
            ++written;
            fallbacks += results[i].empty_fallback;
        }
        log << split << ": cropped " << written << " images (" << fallbacks << " without foreground)\n";
    }
    if (!any) {
        throw std::runtime_error("no Training or Testing directory under " + cfg.data.string());
    }
    write_text(cfg.out / "crop_boxes.csv", csv.str());
}

void cmd_train(const RunConfig &cfg, std::ostream &log) {
    prepare_out(cfg, "train");
    const auto index = scan_dataset(split_dir(cfg, "Training"), log);
    const auto images = load_image_set(index, load_options(cfg, cfg.network.input_size));
    const auto [train_pos, val_pos] = stratified_split_positions(index, 0.8, cfg.seed);
    log << "training samples: " << train_pos.size() << ", validation samples: " << val_pos.size() << '\n';

    Network<float> net(cfg.network, hash64({cfg.seed, 0x7E1E7u}));
    log << "parameters: " << param_count(cfg.network) << '\n';
    const ImageSet val = images.subset(val_pos);
    const TrainConfig tc = run_train_config(cfg);
    const History h = fit(net, images.subset(train_pos), val, tc, epoch_logger(log, ""));
    log << "best epoch " << h.best_epoch << (h.stopped_early ? " (stopped early)" : "") << '\n';

    save_weights(net, cfg.out / "weights.lwcnn");
    write_text(cfg.out / "history.csv", h.csv());
    const Evaluation ev = evaluate(net, val, tc.batch_size, tc.augment.rescale);
    write_reports(cfg.out, "val_report", "val_confusion.csv", val.labels, ev.predictions, log);
}

void cmd_tune(const RunConfig &cfg, std::ostream &log) {
    prepare_out(cfg, "tune");
    const auto index = scan_dataset(split_dir(cfg, "Training"), log);
    const auto images = load_image_set(index, load_options(cfg, cfg.network.input_size));
    SearchSpace space = cfg.search;
    space.input_size = cfg.network.input_size;
    const TrainConfig tc = run_train_config(cfg);

    const TunerReport report =
        search(space, index, images, tc, cfg.seed,
               [&log](std::size_t t, std::size_t f, const std::vector<std::size_t> &, const History &h) {
                   log << "trial " << t << " fold " << f << ": best val_acc " << fmt("%.4f", h.max_val_acc())
                       << " after " << h.records.size() << " epochs\n";
               });
    for (const auto &t : report.trials) {
        log << "trial " << t.trial.id << ": mean " << fmt("%.4f", t.mean) << '\n';
    }
    log << "best trial " << report.best().trial.id << '\n';
    write_text(cfg.out / "tuner_report.json", nlohmann::json(report).dump(2) + "\n");

    const auto final_run =
        retrain_best(report, index, images, tc, cfg.seed, cfg.out / "weights.lwcnn", epoch_logger(log, "final "));
    write_text(cfg.out / "history.csv", final_run.history.csv());

    const auto test_index = scan_dataset(split_dir(cfg, "Testing"), log);
    const auto test = load_image_set(test_index, load_options(cfg, cfg.network.input_size));
    const Evaluation ev = evaluate(final_run.network, test, tc.batch_size, tc.augment.rescale);
    log << "test accuracy " << fmt("%.4f", ev.accuracy) << '\n';
    write_reports(cfg.out, "report", "confusion.csv", test.labels, ev.predictions, log);
}

void cmd_evaluate(const RunConfig &cfg, std::ostream &log) {
    prepare_out(cfg, "evaluate");
    if (cfg.weights.empty()) {
        throw std::invalid_argument("evaluate needs --weights");
    }
    const Network<float> net = load_weights(cfg.weights);
    const auto index = scan_dataset(split_dir(cfg, "Testing"), log);
    const auto test = load_image_set(index, load_options(cfg, net.config().input_size));
    const Evaluation ev = evaluate(net, test, cfg.train.batch_size, cfg.train.augment.rescale);
    log << "test accuracy " << fmt("%.4f", ev.accuracy) << ", loss " << fmt("%.4f", ev.loss) << '\n';
    write_reports(cfg.out, "report", "confusion.csv", test.labels, ev.predictions, log);
}

Grayscale8 feature_grid(const Tensor &maps) {
    if (maps.rank() == 4 && maps.dim(0) != 1) {
        throw std::invalid_argument("feature_grid: expects a single image, got " + shape_string(maps.shape()));
    }
    if (maps.rank() != 3 && maps.rank() != 4) {
        throw std::invalid_argument("feature_grid: expects (H,W,C) maps, got " + shape_string(maps.shape()));
    }
    const std::size_t off = maps.rank() - 3;
    const std::size_t h = maps.dim(off), w = maps.dim(off + 1), c = maps.dim(off + 2);
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(c))));
    const std::size_t rows = (c + cols - 1) / cols;
    Grayscale8 grid(rows * h, cols * w, 0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        float lo = maps[ch], hi = maps[ch];
        for (std::size_t i = 0; i < h * w; ++i) {
            lo = std::min(lo, maps[i * c + ch]);
            hi = std::max(hi, maps[i * c + ch]);
        }
        const std::size_t oy = (ch / cols) * h, ox = (ch % cols) * w;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const float v = maps[(y * w + x) * c + ch];
                const double scaled = hi > lo ? 255.0 * (v - lo) / (hi - lo) : 0.0;
                grid.at(oy + y, ox + x) = static_cast<std::uint8_t>(std::floor(scaled + 0.5));
            }
        }
    }
    return grid;
}

void cmd_featuremaps(const RunConfig &cfg, std::ostream &log) {
    prepare_out(cfg, "featuremaps");
    if (cfg.weights.empty() || cfg.image.empty()) {
        throw std::invalid_argument("featuremaps needs --weights and --image");
    }
    const Network<float> net = load_weights(cfg.weights);
    const std::size_t size = net.config().input_size;
    CropParams params = cfg.crop;
    params.output_size = size;
    const CropResult crop = crop_pipeline(read_image(cfg.image), params);
    write_png(cfg.out / "input.png", crop.image);
    const Tensor x = normalize(crop.image, size, cfg.train.augment.rescale).reshaped({1, size, size, 3});
    const auto maps = net.feature_maps(x, 2);
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const fs::path file = cfg.out / ("conv" + std::to_string(i + 1) + ".png");
        write_png(file, feature_grid(maps[i]));
        log << file.filename().string() << ": " << maps[i].dim(3) << " maps of " << maps[i].dim(1) << "x"
            << maps[i].dim(2) << '\n';
    }
}

void cmd_augment_preview(const RunConfig &cfg, std::ostream &log) {
    prepare_out(cfg, "augment-preview");
    const auto index = scan_dataset(split_dir(cfg, "Training"), log);
    const std::size_t size = cfg.network.input_size;

    // Alternate classes so every class shows up in the first rows.
    std::vector<std::size_t> picks;
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        by_class[c] = index.positions_of(static_cast<int>(c));
    }
    for (std::size_t round = 0; picks.size() < cfg.preview_samples; ++round) {
        bool added = false;
        for (std::size_t c = 0; c < kNumClasses && picks.size() < cfg.preview_samples; ++c) {
            if (round < by_class[c].size()) {
                picks.push_back(by_class[c][round]);
                added = true;
            }
        }
        if (!added) {
            break;
        }
    }

    const std::size_t gap = 2, cols = 1 + cfg.preview_variants;
    Rgb8 sheet(picks.size() * (size + gap) - gap, cols * (size + gap) - gap, 255);
    auto place = [&](const Rgb8 &img, std::size_t row, std::size_t col) {
        for (std::size_t y = 0; y < size; ++y) {
            std::copy_n(img.pixels.data() + y * size * 3, size * 3,
                        sheet.pixels.data() + ((row * (size + gap) + y) * sheet.width + col * (size + gap)) * 3);
        }
    };
    const LoadOptions opts = load_options(cfg, size);
    for (std::size_t r = 0; r < picks.size(); ++r) {
        const Rgb8 original = load_image(index.samples[picks[r]].path, opts);
        place(original, r, 0);
        for (std::size_t v = 0; v < cfg.preview_variants; ++v) {
            // Keyed like augment_batch: (seed, epoch, sample position).
            Rng rng(hash64({cfg.seed, v, picks[r]}));
            const AugmentParams p = sample_params(cfg.train.augment, size, size, rng);
            place(apply_brightness(apply_affine(original, p), p.brightness), r, v + 1);
        }
    }
    write_png(cfg.out / "augment_preview.png", sheet);
    log << "augment_preview.png: " << picks.size() << " samples x " << cfg.preview_variants << " variants\n";
}

}  // namespace lwcnn
