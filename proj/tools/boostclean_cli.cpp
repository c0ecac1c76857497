#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <boostclean/boostclean.hpp>

namespace bc = boostclean;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> threads;
    std::optional<std::string> label;
    std::string out;
};

bc::Config resolve(const Common& c) {
    bc::Config cfg = c.config_path.empty() ? bc::Config{} : bc::load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.budget) cfg.budget = *c.budget;
    if (c.threads) {
        if (*c.threads == 0) throw bc::ValidationError("--threads must be positive");
        cfg.threads = *c.threads;
        cfg.detect.threads = *c.threads;
    }
    if (c.label) cfg.label_column = *c.label;
    return cfg;
}

void emit(const std::string& path, const std::string& bytes) {
    if (path.empty() || path == "-") {
        std::cout << bytes;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bc::ValidationError("cannot write " + path);
    out << bytes;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void common_flags(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker threads (1 = sequential)");
    sub->add_option("--label", c.label, "label column (default: last column)");
    sub->add_option("--out", c.out, "output file (default: stdout)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"boostclean: detect and repair dirty training data by boosting"};
    app.require_subcommand(1);
    Common common;
    std::string input, model_path, report_path, spec_path, truth_path;

    auto* detect = app.add_subcommand("detect", "run the detector library and report hits");
    common_flags(detect, common);
    detect->add_option("csv", input, "labelled CSV")->required();

    auto* select = app.add_subcommand("select", "select repairs and write a deployed model");
    common_flags(select, common);
    select->add_option("--budget", common.budget, "boosting rounds B");
    select->add_option("--report", report_path, "selection report path (default: stdout)");
    select->add_option("csv", input, "labelled CSV")->required();

    auto* predict = app.add_subcommand("predict", "append predictions to a CSV");
    common_flags(predict, common);
    predict->add_option("model", model_path, "deployed model")->required();
    predict->add_option("csv", input, "CSV to score")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score a deployed model on labelled data");
    common_flags(evaluate, common);
    evaluate->add_option("model", model_path, "deployed model")->required();
    evaluate->add_option("csv", input, "labelled CSV")->required();

    auto* inj = app.add_subcommand("inject", "write a dirty copy of a clean CSV with ground truth");
    common_flags(inj, common);
    inj->add_option("--spec", spec_path, "injection spec JSON")->required();
    inj->add_option("--truth", truth_path, "ground truth JSON path")->required();
    inj->add_option("csv", input, "clean labelled CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const bc::Config cfg = resolve(common);
        if (*detect) {
            emit(common.out, dump(bc::cmd_detect(input, cfg)));
        } else if (*select) {
            if (common.out.empty()) throw bc::ValidationError("select: --out <model file> is required");
            const auto res = bc::cmd_select(input, cfg);
            emit(common.out, res.model);
            emit(report_path, dump(res.report));
        } else if (*predict) {
            emit(common.out, bc::cmd_predict(model_path, input, cfg.delimiter));
        } else if (*evaluate) {
            emit(common.out, dump(bc::cmd_evaluate(model_path, input, cfg.delimiter)));
        } else if (*inj) {
            std::ifstream in(spec_path);
            if (!in) throw bc::ValidationError("cannot read " + spec_path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw bc::ValidationError(std::string("spec: ") + e.what());
            }
            auto spec = bc::injection_spec_from_json(j);
            if (common.seed) spec.seed = *common.seed;
            const auto res = bc::cmd_inject(input, spec, cfg);
            emit(common.out, res.dirty_csv);
            emit(truth_path, dump(res.truth));
        }
    } catch (const bc::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bc::DegenerateDataError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
