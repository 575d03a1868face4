#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "lwcnn/pipeline.hpp"

namespace {

struct Overrides {
    std::string config, data, out, weights, image;
    std::uint64_t seed = 0;
    std::size_t epochs = 0, max_trials = 0, batch_size = 0, folds = 0, samples = 0, variants = 0;
    bool crop_on_the_fly = false;
};

void add_common(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--config", o.config, "JSON run config; flags override its values")->check(CLI::ExistingFile);
    cmd->add_option("--data", o.data, "dataset root containing Training/ and Testing/");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "global seed");
    cmd->add_option("--epochs", o.epochs, "epochs per training run");
    cmd->add_option("--max-trials", o.max_trials, "random-search trials");
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
    cmd->add_option("--folds", o.folds, "cross-validation folds");
    cmd->add_flag("--crop-on-the-fly", o.crop_on_the_fly, "crop images while loading");
}

lwcnn::RunConfig resolve(const CLI::App *cmd, const Overrides &o) {
    lwcnn::RunConfig cfg = o.config.empty() ? lwcnn::RunConfig{} : lwcnn::load_run_config(o.config);
    auto given = [cmd](const char *name) {
        const auto *opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--data")) cfg.data = o.data;
    if (given("--out")) cfg.out = o.out;
    if (given("--seed")) cfg.seed = o.seed;
    if (given("--epochs")) cfg.train.epochs = o.epochs;
    if (given("--max-trials")) cfg.search.max_trials = o.max_trials;
    if (given("--batch-size")) cfg.train.batch_size = o.batch_size;
    if (given("--folds")) cfg.search.folds = o.folds;
    if (given("--crop-on-the-fly")) cfg.crop_on_the_fly = true;
    if (given("--weights")) cfg.weights = o.weights;
    if (given("--image")) cfg.image = o.image;
    if (given("--samples")) cfg.preview_samples = o.samples;
    if (given("--variants")) cfg.preview_variants = o.variants;
    cfg.validate();
    if (cfg.data.empty() && cmd->get_name() != "featuremaps") {
        throw std::invalid_argument("--data is required");
    }
    return cfg;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Lightweight CNN for 4-class brain MRI classification"};
    app.require_subcommand(1);
    Overrides o;

    auto *stats = app.add_subcommand("stats", "per-class image counts for Training and Testing");
    auto *crop = app.add_subcommand("crop", "contour-crop every image to 150x150");
    auto *train = app.add_subcommand("train", "train the network on an 80/20 split of Training");
    auto *tune = app.add_subcommand("tune", "k-fold random search, retrain the best config, test it");
    auto *evaluate = app.add_subcommand("evaluate", "classification report for saved weights on Testing");
    auto *featuremaps = app.add_subcommand("featuremaps", "conv1/conv2 activation grids for one image");
    auto *preview = app.add_subcommand("augment-preview", "contact sheet of augmented training samples");
    for (auto *cmd : {stats, crop, train, tune, evaluate, featuremaps, preview}) {
        add_common(cmd, o);
    }
    for (auto *cmd : {evaluate, featuremaps}) {
        cmd->add_option("--weights", o.weights, "weights file")->check(CLI::ExistingFile);
    }
    featuremaps->add_option("--image", o.image, "input image")->check(CLI::ExistingFile);
    preview->add_option("--samples", o.samples, "rows in the sheet");
    preview->add_option("--variants", o.variants, "augmented copies per row");

    CLI11_PARSE(app, argc, argv);

    const std::map<const CLI::App *, std::function<void(const lwcnn::RunConfig &)>> commands{
        {stats, [](const lwcnn::RunConfig &c) { lwcnn::cmd_stats(c, std::cout, std::cerr); }},
        {crop, [](const lwcnn::RunConfig &c) { lwcnn::cmd_crop(c, std::cout); }},
        {train, [](const lwcnn::RunConfig &c) { lwcnn::cmd_train(c, std::cout); }},
        {tune, [](const lwcnn::RunConfig &c) { lwcnn::cmd_tune(c, std::cout); }},
        {evaluate, [](const lwcnn::RunConfig &c) { lwcnn::cmd_evaluate(c, std::cout); }},
        {featuremaps, [](const lwcnn::RunConfig &c) { lwcnn::cmd_featuremaps(c, std::cout); }},
        {preview, [](const lwcnn::RunConfig &c) { lwcnn::cmd_augment_preview(c, std::cout); }},
    };
    try {
        for (const auto &[cmd, run] : commands) {
            if (cmd->parsed()) {
                run(resolve(cmd, o));
            }
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
