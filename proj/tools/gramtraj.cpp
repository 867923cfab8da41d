// Batch command line front end: validate, synth, kernel, gridsearch,
// evaluate, predict. Every subcommand prints `key,value` lines on stdout and
// writes its files under --out.

#include "gramtraj/dataset_io.hpp"
#include "gramtraj/pipeline.hpp"
#include "gramtraj/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace gramtraj;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<unsigned long long> seed;
    std::string out = "gramtraj_out";
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "key = value configuration file");
    cmd->add_option("--seed", o.seed, "random seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

ExperimentConfig load(const CommonOptions& o) {
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw Error("override '" + kv + "' is not of the form key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        set_config_value(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (o.seed) c.seed = *o.seed;
    validate_config(c);
    return c;
}

Dataset load_manifest(const ExperimentConfig& c) {
    if (c.manifest.empty()) throw Error("config: key 'data.manifest' is required");
    return ingest(c.manifest);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    return f;
}

KernelCache make_cache(const ExperimentConfig& c, const fs::path& out) {
    return KernelCache(KernelCache::resolve_directory(c.cache_dir, out / "kernel_cache"));
}

void kv(const std::string& key, const std::string& value) {
    std::cout << key << "," << value << "\n";
}

std::vector<std::string> kernels_for(const std::vector<Strategy>& strategies) {
    std::vector<std::string> names;
    for (auto s : strategies) {
        for (const auto& n : required_kernels(s)) {
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        }
    }
    return names;
}

int cmd_validate(const std::string& manifest) {
    const auto result = ingest_report(manifest);
    kv("sequences_ok", std::to_string(result.dataset.size()));
    kv("sequences_rejected", std::to_string(result.errors.size()));
    for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
    if (!result.dataset.empty()) {
        kv("subjects", std::to_string(subject_order(result.dataset).size()));
        kv("landmarks", std::to_string(result.dataset.front().landmark_count()));
        kv("dataset_hash", dataset_hash(result.dataset));
    }
    return result.errors.empty() && !result.dataset.empty() ? 0 : 1;
}

int cmd_synth(const CommonOptions& o) {
    const auto c = load(o);
    const auto data = synthesize(c.synth, c.seed);
    const auto manifest = write_dataset(data, o.out);
    kv("manifest", manifest.string());
    kv("sequences", std::to_string(data.size()));
    kv("subjects", std::to_string(c.synth.subjects));
    kv("landmarks", std::to_string(c.synth.landmarks));
    kv("levels", std::to_string(c.synth.levels));
    kv("seed", std::to_string(c.seed));
    kv("dataset_hash", dataset_hash(data));
    return 0;
}

int cmd_kernel(const CommonOptions& o) {
    const auto c = load(o);
    const auto dataset = prepare_dataset(load_manifest(c), c);
    fs::create_directories(o.out);
    auto cache = make_cache(c, o.out);
    const auto names = kernels_for(c.strategies);
    const auto kernels = compute_kernels(dataset, c, names, &cache);
    auto f = open_out(fs::path(o.out) / "kernels.csv");
    f << "kernel,size,min_eigenvalue_ratio,cache_file\n";
    for (const auto& name : names) {
        const auto& k = kernels.at(name);
        const auto file =
            cache.path_for(kernel_spec(name, c, static_cast<int>(dataset.front().landmark_count()),
                                       dataset_hash(dataset)));
        f << name << "," << k.size() << "," << format_decimal(min_eigenvalue_ratio(k.values)) << ","
          << file.string() << "\n";
    }
    const long total = cache.hits() + cache.misses();
    kv("kernels", std::to_string(names.size()));
    kv("cache_dir", cache.directory().string());
    kv("cache_hits", std::to_string(cache.hits()));
    kv("cache_misses", std::to_string(cache.misses()));
    kv("cache_hit_rate", format_decimal(total ? static_cast<double>(cache.hits()) / total : 0.0));
    return 0;
}

int cmd_gridsearch(const CommonOptions& o) {
    const auto c = load(o);
    const auto raw = load_manifest(c);
    fs::create_directories(o.out);
    auto cache = make_cache(c, o.out);
    for (auto s : c.strategies) {
        const auto result = run_grid_search(raw, c, s, &cache);
        auto f = open_out(fs::path(o.out) / ("grid_" + to_string(s) + ".csv"));
        write_grid_table_csv(f, result);
        const auto& best = result.best_cell();
        kv(to_string(s) + ".best_sigma", format_decimal(best.sigma));
        kv(to_string(s) + ".best_lambda", lambda_to_string(best.lambda));
        kv(to_string(s) + ".best_sampling", format_decimal(best.sampling));
        kv(to_string(s) + ".best_validation_mae", format_decimal(best.validation_mae));
        kv(to_string(s) + ".best_test_mae", format_decimal(best.test_mae));
    }
    kv("cache_hits", std::to_string(cache.hits()));
    kv("cache_misses", std::to_string(cache.misses()));
    return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& models_out) {
    const auto c = load(o);
    const auto raw = load_manifest(c);
    fs::create_directories(o.out);
    auto cache = make_cache(c, o.out);
    std::vector<ExperimentReport> reports;
    for (auto s : c.strategies) {
        auto report = run_experiment(raw, c, s, &cache);
        const auto name = to_string(s);
        {
            auto f = open_out(fs::path(o.out) / ("predictions_" + name + ".csv"));
            write_predictions_csv(f, report);
        }
        {
            auto f = open_out(fs::path(o.out) / ("folds_" + name + ".csv"));
            write_folds_csv(f, report);
        }
        {
            auto f = open_out(fs::path(o.out) / ("summary_" + name + ".csv"));
            write_summary_csv(f, report, c.k);
        }
        kv(name + ".mae", format_decimal(report.mae));
        kv(name + ".rmse", format_decimal(report.rmse));
        kv(name + ".baseline_mae", format_decimal(report.baseline_mae));
        if (!models_out.empty()) {
            fs::create_directories(models_out);
            const auto model = train_deployed_model(raw, c, s, consensus_weights(report.folds), &cache);
            const auto path = fs::path(models_out) / ("model_" + name + ".txt");
            save_model(model, path);
            kv(name + ".model", path.string());
        }
        reports.push_back(std::move(report));
    }
    auto f = open_out(fs::path(o.out) / "comparison.csv");
    write_comparison_csv(f, reports);
    kv("report_dir", o.out);
    return 0;
}

int cmd_predict(const CommonOptions& o, const std::string& model_path, const std::string& manifest) {
    const auto model = load_model(model_path);
    const auto data = ingest(manifest);
    fs::create_directories(o.out);
    auto f = open_out(fs::path(o.out) / "predictions.csv");
    f << "sequence_id,subject_id,label,prediction\n";
    for (const auto& s : data) {
        f << s.sequence_id << "," << s.subject_id << "," << format_decimal(s.label) << ","
          << format_decimal(predict_sequence(model, s)) << "\n";
    }
    kv("sequences", std::to_string(data.size()));
    kv("predictions", (fs::path(o.out) / "predictions.csv").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trajectory-kernel intensity regression on facial landmark sequences"};
    app.require_subcommand(1);

    CommonOptions validate_o, synth_o, kernel_o, grid_o, eval_o, predict_o;
    std::string validate_manifest, models_out, model_path, predict_manifest;

    auto* validate = app.add_subcommand("validate", "check a manifest and its landmark files");
    add_common(validate, validate_o);
    validate->add_option("manifest", validate_manifest, "manifest CSV")->required();

    auto* synth = app.add_subcommand("synth", "write a synthetic dataset to --out");
    auto* kernel = app.add_subcommand("kernel", "compute and cache the kernels of the strategies");
    auto* grid = app.add_subcommand("gridsearch", "hyperparameter grid on validation sets");
    auto* evaluate = app.add_subcommand("evaluate", "run the cross-validation protocol");
    auto* predict = app.add_subcommand("predict", "apply a saved model to new sequences");
    for (auto [cmd, opts] : {std::pair{synth, &synth_o}, {kernel, &kernel_o}, {grid, &grid_o},
                             {evaluate, &eval_o}}) {
        add_common(cmd, *opts);
        cmd->add_option("overrides", opts->overrides, "key=value config overrides");
    }
    evaluate->add_option("--models-out", models_out, "directory for trained models");
    add_common(predict, predict_o);
    predict->add_option("--model", model_path, "model file written by evaluate")->required();
    predict->add_option("manifest", predict_manifest, "manifest of sequences to score")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*validate) return cmd_validate(validate_manifest);
        if (*synth) return cmd_synth(synth_o);
        if (*kernel) return cmd_kernel(kernel_o);
        if (*grid) return cmd_gridsearch(grid_o);
        if (*evaluate) return cmd_evaluate(eval_o, models_out);
        if (*predict) return cmd_predict(predict_o, model_path, predict_manifest);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
