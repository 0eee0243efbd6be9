// Command-line front end. Every subcommand turns its flags into a JSON config
// and hands it to rshallu_run_command; the status code becomes the exit code.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rshallu/rshallu.h"

using nlohmann::json;

namespace {

// Collects flag values that were actually given on the command line.
class Binder {
public:
    explicit Binder(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "JSON file with base options; flags override it");
    }

    Binder& str(const std::string& flag, const std::string& key, const std::string& help, bool required = false) {
        return bind<std::string>(flag, key, help, required);
    }
    Binder& num(const std::string& flag, const std::string& key, const std::string& help) {
        return bind<double>(flag, key, help, false);
    }
    Binder& integer(const std::string& flag, const std::string& key, const std::string& help) {
        return bind<long long>(flag, key, help, false);
    }
    Binder& seed() { return bind<std::uint64_t>("--seed", "seed", "random seed", false); }
    Binder& strings(const std::string& flag, const std::string& key, const std::string& help, bool required = false) {
        return bind<std::vector<std::string>>(flag, key, help, required);
    }
    Binder& ints(const std::string& flag, const std::string& key, const std::string& help) {
        return bind<std::vector<int>>(flag, key, help, false);
    }
    // "--name,!--no-name"
    Binder& toggle(const std::string& flags, const std::string& key, const std::string& help) {
        auto v = std::make_shared<bool>(false);
        auto* opt = app_->add_flag(flags, *v, help);
        emit_.push_back([v, opt, key](json& j) {
            if (opt->count() > 0) j[key] = *v;
        });
        return *this;
    }

    json config() const {
        json j = json::object();
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path_);
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw CLI::ValidationError("--config", e.what());
            }
        }
        for (const auto& f : emit_) f(j);
        return j;
    }

private:
    template <class T>
    Binder& bind(const std::string& flag, const std::string& key, const std::string& help, bool required) {
        auto v = std::make_shared<T>();
        auto* opt = app_->add_option(flag, *v, help);
        if (required) opt->required();
        emit_.push_back([v, opt, key](json& j) {
            if (opt->count() > 0) j[key] = *v;
        });
        return *this;
    }

    CLI::App* app_;
    std::string config_path_;
    std::vector<std::function<void(json&)>> emit_;
};

struct Command {
    std::string name;
    CLI::App* app;
    std::unique_ptr<Binder> binder;
};

void add_correction_flags(Binder& b) {
    b.num("--r-p", "r_p", "penalty on instruction attention")
        .integer("--k-m", "k_m", "candidate layers kept in stage 1")
        .integer("--k-t", "k_t", "top tokens screened per candidate layer")
        .num("--thred-t", "thred_t", "final-layer probability threshold")
        .num("--r", "r", "recall rate")
        .ints("--m-origin", "m_origin", "candidate layer indices");
}

int report_status(rshallu_status s) {
    if (s != RSHALLU_OK) std::cerr << "error: " << rshallu_last_error() << "\n";
    return static_cast<int>(s);
}

int run(const std::string& command, const json& config) {
    char* result = nullptr;
    const rshallu_status s = rshallu_run_command(command.c_str(), config.dump().c_str(), &result);
    if (s != RSHALLU_OK) return report_status(s);
    const json out = json::parse(result);
    rshallu_string_free(result);
    for (const auto& w : out.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << "\n";
    std::cout << out.at("summary").dump(2) << "\n";
    return 0;
}

int correct_stream(const json& config) {
    rshallu_correction_config cfg;
    rshallu_correction_config_default(&cfg);
    std::vector<int> origin;
    cfg.r_p = config.value("r_p", cfg.r_p);
    cfg.k_m = config.value("k_m", cfg.k_m);
    cfg.k_t = config.value("k_t", cfg.k_t);
    cfg.thred_t = config.value("thred_t", cfg.thred_t);
    cfg.r = config.value("r", cfg.r);
    if (config.contains("m_origin")) {
        origin = config.at("m_origin").get<std::vector<int>>();
        cfg.m_origin = origin.data();
        cfg.n_m_origin = origin.size();
    }
    rshallu_engine* engine = nullptr;
    if (auto s = rshallu_engine_create(&cfg, &engine); s != RSHALLU_OK) return report_status(s);
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        char* reply = nullptr;
        if (auto s = rshallu_engine_handle_line(engine, line.c_str(), &reply); s != RSHALLU_OK) {
            rshallu_engine_free(engine);
            return report_status(s);
        }
        std::cout << reply << std::endl;
        rshallu_string_free(reply);
    }
    rshallu_engine_free(engine);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hallucination benchmarking, checking and decoding-time correction for remote-sensing VLMs"};
    app.set_version_flag("--version", std::string(rshallu_version()));
    app.require_subcommand(1);

    std::vector<Command> commands;
    auto add = [&](CLI::App* parent, const std::string& sub, const std::string& command, const std::string& help) -> Binder& {
        CLI::App* a = parent->add_subcommand(sub, help);
        commands.push_back({command, a, std::make_unique<Binder>(a)});
        return *commands.back().binder;
    };

    add(&app, "eval-run", "eval-run", "judge model answers with an automated checker")
        .str("--manifest", "manifest", "dataset manifest")
        .str("--answers", "answers", "answers file (item_id, model_name, answer)")
        .str("--out", "out", "judgments output")
        .str("--transport", "transport", "replay:<file> or http://host:port/path")
        .str("--judge-model", "judge_model", "judge model name")
        .toggle("--cot,!--no-cot", "cot", "ask for reasoning before the mark")
        .str("--marking", "marking", "presence | accuracy")
        .toggle("--with-gt,!--no-gt", "with_gt", "show the reference answer to the judge")
        .toggle("--domain-preamble,!--generic-preamble", "domain_preamble", "remote-sensing judge preamble")
        .integer("--max-retries", "max_retries", "retries per item")
        .integer("--jobs", "jobs", "concurrent requests")
        .integer("--backoff-ms", "backoff_ms", "base retry backoff")
        .str("--unjudged-out", "unjudged_out", "unjudged items output");

    add(&app, "answer", "answer", "answer manifest questions under a prompting strategy")
        .str("--manifest", "manifest", "dataset manifest")
        .str("--out", "out", "answers output")
        .str("--transport", "transport", "replay:<file> or http://host:port/path")
        .str("--model", "model", "answering model name")
        .str("--strategy", "strategy", "none | overall | counterfactual | combined")
        .toggle("--cache", "cache", "reuse global descriptions per image")
        .str("--calls-out", "calls_out", "per-call prompt log")
        .integer("--jobs", "jobs", "concurrent items");

    add(&app, "score", "score", "checker accuracy against binary labels")
        .str("--verdicts", "verdicts", "checker judgments")
        .str("--labels", "labels", "binary reference labels")
        .str("--manifest", "manifest", "dataset manifest")
        .str("--out", "out", "accuracy CSV");

    add(&app, "report", "report", "hallucination-free rates per model and category")
        .str("--judgments", "judgments", "judgments file")
        .str("--manifest", "manifest", "dataset manifest")
        .str("--out", "out", "HF CSV")
        .str("--radar", "radar", "radar CSV");

    add(&app, "compare-checkers", "compare-checkers", "relative error of automated checkers against experts")
        .str("--expert", "expert", "expert judgments")
        .strings("--auto", "auto", "automated judgment files; file stem names the checker")
        .str("--manifest", "manifest", "dataset manifest")
        .str("--out", "out", "ES CSV");

    {
        Binder& b = add(&app, "correct-sim", "correct-sim", "run layer correction over simulated traces")
                        .str("--scenarios", "scenarios", "scenario file")
                        .integer("--generate", "generate", "number of random scenarios")
                        .integer("--scenario-seed", "scenario_seed", "first random scenario seed")
                        .integer("--n-steps", "n_steps", "decoding steps per scenario")
                        .str("--mode", "mode", "greedy | sample")
                        .num("--temperature", "temperature", "sampling temperature")
                        .seed()
                        .toggle("--average-baseline", "average_baseline", "uniform random layers, no screening")
                        .toggle("--sweep", "sweep", "recall rates 0.0..1.0")
                        .str("--transcript", "transcript", "transcript output")
                        .str("--sweep-csv", "sweep_csv", "sweep CSV output");
        add_correction_flags(b);
    }
    {
        Binder& b = add(&app, "correct-stream", "correct-stream", "serve the step-trace wire protocol on stdin/stdout");
        add_correction_flags(b);
    }

    CLI::App* datagen = app.add_subcommand("datagen", "question generation and shield composition");
    datagen->require_subcommand(1);
    add(datagen, "generate", "datagen-generate", "generate QA pairs from captions")
        .str("--captions", "captions", "captions file (image_id, caption, image_ref?)")
        .str("--transport", "transport", "replay:<file> or http://host:port/path")
        .str("--model", "model", "generator model name")
        .str("--purpose", "purpose", "check | shield")
        .str("--kind", "kind", "normal | misleading")
        .strings("--categories", "categories", "categories to generate")
        .integer("--count", "count", "pairs per request")
        .toggle("--normalize-yesno,!--raw-yesno", "normalize_yesno", "collapse long yes/no answers")
        .toggle("--keep-partial", "keep_partial", "keep pairs from short batches")
        .str("--out", "out", "item pool output");
    add(datagen, "filter", "datagen-filter", "drop long answers and flag caption leaks")
        .str("--in", "in", "item pool")
        .str("--captions", "captions", "captions file")
        .integer("--max-answer-len", "max_answer_len", "maximum answer words")
        .str("--out", "out", "kept items")
        .str("--flagged-out", "flagged_out", "flagged items");
    add(datagen, "compose", "datagen-compose", "compose a shield dataset from item pools")
        .str("--normal", "normal", "normal item pool")
        .str("--misleading", "misleading", "misleading item pool")
        .integer("--total", "total", "total items")
        .str("--ratio", "ratio", "normal:misleading, e.g. 1:1")
        .seed()
        .str("--name", "name", "manifest name")
        .str("--out", "out", "manifest output");

    add(&app, "split", "split", "split a manifest into train/val by image")
        .str("--in", "in", "manifest")
        .num("--val-fraction", "val_fraction", "fraction of images in val")
        .seed()
        .str("--train-out", "train_out", "train manifest")
        .str("--val-out", "val_out", "val manifest");

    add(&app, "sample-audit", "sample-audit", "draw items for manual review")
        .str("--in", "in", "manifest")
        .integer("--n", "n", "sample size")
        .seed()
        .str("--out", "out", "sample output");

    add(&app, "validate", "validate", "check manifest invariants")
        .str("--manifest", "manifest", "manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : RSHALLU_ERR_USAGE;
    }

    for (const auto& c : commands) {
        if (!c.app->parsed()) continue;
        json config;
        try {
            config = c.binder->config();
        } catch (const CLI::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return RSHALLU_ERR_USAGE;
        }
        try {
            if (c.name == "correct-stream") return correct_stream(config);
            return run(c.name, config);
        } catch (const json::exception& e) {
            std::cerr << "error: bad option value: " << e.what() << "\n";
            return RSHALLU_ERR_USAGE;
        }
    }
    return RSHALLU_ERR_USAGE;
}
