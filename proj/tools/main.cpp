#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ghostdiff/experiment.hpp"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompareFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void print_diagnostic(const char* kind, const std::string& message) {
    nlohmann::json j;
    j["error"] = kind;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

std::vector<ghostdiff::ExperimentConfig> resolve_run_target(const std::string& target) {
    std::vector<ghostdiff::ExperimentConfig> configs;
    if (ghostdiff::is_preset_group(target)) {
        for (const auto& name : ghostdiff::preset_group_members(target))
            configs.push_back(ghostdiff::preset_config(name));
    } else if (ghostdiff::is_preset(target)) {
        configs.push_back(ghostdiff::preset_config(target));
    } else if (std::filesystem::exists(target)) {
        configs.push_back(ghostdiff::load_config_file(target));
    } else {
        throw std::invalid_argument("config: '" + target +
                                    "' is neither a preset, a preset group, nor a "
                                    "config file");
    }
    return configs;
}

int run_command(const std::string& target, const ghostdiff::RunOverrides& overrides) {
    std::vector<ghostdiff::ExperimentConfig> configs;
    try {
        configs = resolve_run_target(target);
    } catch (const std::invalid_argument& e) {
        print_diagnostic("config", e.what());
        return kExitConfig;
    }

    bool numerical_failure = false;
    for (const auto& config : configs) {
        ghostdiff::RunManifest manifest;
        try {
            manifest = ghostdiff::run_experiment(config, overrides);
        } catch (const std::invalid_argument& e) {
            print_diagnostic("config", e.what());
            return kExitConfig;
        } catch (const std::exception& e) {
            print_diagnostic("numerical", e.what());
            return kExitNumerical;
        }
        std::cout << config.name << ": " << manifest.frames << " frames, "
                  << manifest.outputs.size() << " files in " << manifest.directory
                  << "\n";
        for (const auto& err : manifest.errors) {
            numerical_failure = true;
            print_diagnostic("numerical", err.stage + ": " + err.message);
        }
    }
    return numerical_failure ? kExitNumerical : kExitOk;
}

int presets_list_command() {
    for (const auto& name : ghostdiff::preset_names())
        std::cout << name << "\t" << ghostdiff::preset_description(name) << "\n";
    for (const auto& group : ghostdiff::preset_group_names()) {
        std::cout << group << "\t(group:";
        for (const auto& member : ghostdiff::preset_group_members(group))
            std::cout << " " << member;
        std::cout << ")\n";
    }
    return kExitOk;
}

int compare_command(const std::string& pattern_file, const std::string& prediction_file,
                    double tolerance) {
    ghostdiff::CompareReport report;
    try {
        report = ghostdiff::compare_with_reference(pattern_file, prediction_file,
                                                   tolerance);
    } catch (const std::invalid_argument& e) {
        print_diagnostic("config", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        print_diagnostic("numerical", e.what());
        return kExitNumerical;
    }

    for (const auto& row : report.rows)
        std::cout << "order " << row.order << ": measured " << row.measured
                  << ", predicted " << row.predicted << ", deviation "
                  << row.deviation << "\n";
    for (const auto& problem : report.problems) std::cout << "problem: " << problem
                                                          << "\n";
    std::cout << (report.pass ? "PASS" : "FAIL") << " at tolerance "
              << report.tolerance << "\n";
    return report.pass ? kExitOk : kExitCompareFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudo-thermal ghost diffraction bench"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment config or preset");
    std::string target;
    run->add_option("config", target, "config file, preset, or preset group")
        ->required();
    std::uint64_t seed = 0;
    std::uint64_t frames = 0;
    std::size_t workers = 0;
    std::string out_dir;
    bool full_size = false;
    auto* seed_opt = run->add_option("--seed", seed, "master seed override");
    auto* frames_opt = run->add_option("--frames", frames, "frame count override");
    auto* workers_opt = run->add_option("--workers", workers, "worker thread count");
    auto* out_opt = run->add_option("--out", out_dir, "output directory override");
    run->add_flag("--full", full_size, "use the full-size frame count");

    auto* presets = app.add_subcommand("presets", "preset utilities");
    auto* list = presets->add_subcommand("list", "list built-in presets");

    auto* compare = app.add_subcommand("compare", "check a pattern against a prediction");
    std::string pattern_file, prediction_file;
    double tolerance = 0.0;
    compare->add_option("pattern", pattern_file, "pattern file")->required();
    compare->add_option("prediction", prediction_file, "prediction file")->required();
    compare->add_option("--tol", tolerance, "relative tolerance on peak ratios")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    if (run->parsed()) {
        ghostdiff::RunOverrides overrides;
        if (seed_opt->count() > 0) overrides.seed = seed;
        if (frames_opt->count() > 0) overrides.frames = frames;
        if (workers_opt->count() > 0) overrides.workers = workers;
        if (out_opt->count() > 0) overrides.out_dir = out_dir;
        overrides.full_size = full_size;
        return run_command(target, overrides);
    }
    if (presets->parsed()) {
        if (list->parsed()) return presets_list_command();
        std::cerr << "presets: expected 'list'\n";
        return kExitConfig;
    }
    if (compare->parsed())
        return compare_command(pattern_file, prediction_file, tolerance);
    return kExitConfig;
}
