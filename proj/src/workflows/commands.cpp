#include "workflows/commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "checker/client.hpp"
#include "checker/judge.hpp"
#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/text.hpp"
#include "datagen/datagen.hpp"
#include "decode/correction.hpp"
#include "metrics/metrics.hpp"
#include "prompting/strategies.hpp"
#include "sim/trace_sim.hpp"
#include "taxonomy/taxonomy.hpp"

#ifndef RSHALLU_VERSION
#define RSHALLU_VERSION "dev"
#endif

namespace rshallu::workflows {

namespace fs = std::filesystem;
using nlohmann::json;
using taxonomy::Category;

namespace {

// Typed view over a command's config object. Every lookup failure is a
// usage error.
class Config {
public:
    Config(std::string_view command, const json& j) : command_(command), j_(j) {
        if (!j_.is_object()) throw UsageError(command_ + ": config must be an object");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    std::string str(const char* key) const {
        if (!has(key)) throw UsageError(command_ + ": missing required option '" + key + "'");
        return get<std::string>(key);
    }
    std::string str_or(const char* key, const std::string& fallback) const { return has(key) ? get<std::string>(key) : fallback; }
    double num_or(const char* key, double fallback) const { return has(key) ? get<double>(key) : fallback; }
    long long int_or(const char* key, long long fallback) const { return has(key) ? get<long long>(key) : fallback; }
    std::uint64_t seed() const { return has("seed") ? get<std::uint64_t>("seed") : 0; }
    bool flag(const char* key, bool fallback = false) const { return has(key) ? get<bool>(key) : fallback; }

    template <class T>
    T get(const char* key) const {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw UsageError(command_ + ": option '" + key + "' has the wrong type");
        }
    }

    fs::path input(const char* key) const {
        fs::path p = str(key);
        if (!fs::exists(p)) throw UsageError(command_ + ": input file for '" + key + "' not found: " + p.string());
        return p;
    }

    const json& raw() const { return j_; }
    const std::string& command() const { return command_; }

private:
    std::string command_;
    const json& j_;
};

void write_stamp(const Config& cfg, const fs::path& primary_output) {
    json stamp = {
        {"tool", "rshallu"},
        {"version", RSHALLU_VERSION},
        {"command", cfg.command()},
        {"config", cfg.raw()},
        {"seed", cfg.seed()},
    };
    jsonl::write_text(primary_output.string() + ".stamp.json", stamp.dump(2) + "\n");
}

fs::path derived(const fs::path& base, const std::string& suffix) {
    fs::path out = base;
    out.replace_extension();
    return out.string() + suffix;
}

struct AnswerRecord {
    std::string item_id;
    std::string model_name;
    std::string answer;
};

std::vector<AnswerRecord> load_answers(const fs::path& path) {
    std::vector<AnswerRecord> out;
    for (const auto& line : jsonl::read_file(path)) {
        out.push_back({jsonl::require_string(line, "item_id"), jsonl::require_string(line, "model_name"),
                       jsonl::require_string(line, "answer")});
    }
    return out;
}

std::unordered_map<std::string, const taxonomy::QaItem*> index_items(const taxonomy::DatasetManifest& m) {
    std::unordered_map<std::string, const taxonomy::QaItem*> idx;
    for (const auto& item : m.items) idx.emplace(item.id, &item);
    return idx;
}

checker::JudgeOptions judge_options(const Config& cfg) {
    checker::JudgeOptions o;
    o.use_cot = cfg.flag("cot", true);
    const std::string marking = cfg.str_or("marking", "accuracy");
    auto m = checker::parse_marking(marking);
    if (!m) throw UsageError("unknown marking '" + marking + "'");
    o.marking = *m;
    o.include_ground_truth = cfg.flag("with_gt", true);
    o.domain_preamble = cfg.flag("domain_preamble", true);
    return o;
}

std::size_t jobs(const Config& cfg) {
    const long long n = cfg.int_or("jobs", 4);
    if (n < 1) throw UsageError("jobs must be >= 1");
    return static_cast<std::size_t>(n);
}

std::map<std::string, std::vector<taxonomy::Judgment>> by_model(const std::vector<taxonomy::Judgment>& js) {
    std::map<std::string, std::vector<taxonomy::Judgment>> out;
    for (const auto& j : js) out[j.model_name].push_back(j);
    return out;
}

void warn_omitted(const std::string& model, const metrics::HfReport& r, std::vector<std::string>& warnings) {
    for (Category c : r.omitted) {
        warnings.push_back("model " + model + ": category " + std::string(taxonomy::to_string(c)) +
                           " has no judged items; omitted");
    }
}

// --- eval-run ---------------------------------------------------------------

CommandResult eval_run(const Config& cfg) {
    const auto manifest = taxonomy::load_manifest(cfg.input("manifest"));
    const auto answers = load_answers(cfg.input("answers"));
    const fs::path out = cfg.str("out");
    const auto client = checker::make_client(cfg.str("transport"));
    const auto opts = judge_options(cfg);

    checker::BatchPolicy policy;
    policy.max_retries = static_cast<int>(cfg.int_or("max_retries", 2));
    policy.concurrency_limit = static_cast<int>(jobs(cfg));
    policy.backoff_base = std::chrono::milliseconds(cfg.int_or("backoff_ms", 100));

    const auto idx = index_items(manifest);
    std::vector<checker::BatchEntry> entries;
    for (const auto& a : answers) {
        auto it = idx.find(a.item_id);
        if (it == idx.end()) throw JoinError("answer references unknown item '" + a.item_id + "'");
        entries.push_back({*it->second, a.model_name, a.answer});
    }

    const auto result = checker::judge_batch(entries, *client, opts, policy, cfg.str_or("judge_model", "judge"));
    taxonomy::save_judgments(result.judgments, out);

    std::vector<json> unjudged;
    CommandResult r;
    for (const auto& u : result.unjudged) {
        unjudged.push_back({{"item_id", u.item_id}, {"model_name", u.model_name}, {"reason", u.reason}, {"attempts", u.attempts}});
        r.warnings.push_back("unjudged " + u.model_name + "/" + u.item_id + ": " + u.reason);
    }
    const fs::path unjudged_path = cfg.str_or("unjudged_out", derived(out, ".unjudged.jsonl").string());
    jsonl::write_file(unjudged_path, unjudged);
    write_stamp(cfg, out);

    r.summary = {{"judged", result.judgments.size()}, {"unjudged", result.unjudged.size()}, {"out", out.string()}};
    return r;
}

// --- answer (prompting strategies) -------------------------------------------

CommandResult answer(const Config& cfg) {
    const auto manifest = taxonomy::load_manifest(cfg.input("manifest"));
    const fs::path out = cfg.str("out");
    const auto client = checker::make_client(cfg.str("transport"));
    const std::string model = cfg.str("model");
    const std::string strategy_name = cfg.str_or("strategy", "none");
    auto strategy = prompting::parse_strategy(strategy_name);
    if (!strategy) throw UsageError("unknown strategy '" + strategy_name + "'");

    prompting::GlobalDescriptionCache cache;
    prompting::GlobalDescriptionCache* cache_ptr = cfg.flag("cache") ? &cache : nullptr;

    struct Slot {
        std::optional<prompting::StrategyRun> run;
        std::string error;
    };
    std::vector<Slot> slots(manifest.items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < slots.size(); i = next++) {
            const auto& item = manifest.items[i];
            try {
                slots[i].run = prompting::run_strategy(*client, model, item.image_id, item.question, *strategy,
                                                       model + "/" + item.id, cache_ptr);
            } catch (const Error& e) {
                slots[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(jobs(cfg), slots.size()); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::vector<json> answers, calls;
    CommandResult r;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& item = manifest.items[i];
        if (!slots[i].run) {
            ++failed;
            r.warnings.push_back("no answer for " + item.id + ": " + slots[i].error);
            continue;
        }
        answers.push_back({{"item_id", item.id}, {"model_name", model}, {"answer", slots[i].run->answer}});
        for (const auto& c : slots[i].run->calls) {
            calls.push_back({{"item_id", item.id}, {"strategy", strategy_name}, {"stage", c.stage},
                             {"request_id", c.request_id}, {"prompt", c.prompt}, {"response", c.response}});
        }
    }
    jsonl::write_file(out, answers);
    jsonl::write_file(cfg.str_or("calls_out", derived(out, ".calls.jsonl").string()), calls);
    write_stamp(cfg, out);
    r.summary = {{"answered", answers.size()}, {"failed", failed}, {"calls", calls.size()}, {"out", out.string()}};
    return r;
}

// --- score (checker accuracy) ----------------------------------------------

CommandResult score(const Config& cfg) {
    const auto manifest = taxonomy::load_manifest(cfg.input("manifest"));
    const auto verdicts = taxonomy::load_judgments(cfg.input("verdicts"));
    const auto labels = taxonomy::load_judgments(cfg.input("labels"));
    const fs::path out = cfg.str("out");
    if (verdicts.empty()) throw UsageError("score: verdicts file is empty");
    const auto report = metrics::checker_accuracy(verdicts, labels, manifest);
    jsonl::write_text(out, metrics::accuracy_csv(report));
    write_stamp(cfg, out);
    CommandResult r;
    r.summary = {{"A_all", text::fixed(report.overall, 4)}, {"items", report.n_items}, {"out", out.string()}};
    return r;
}

// --- report -----------------------------------------------------------------

CommandResult report(const Config& cfg) {
    const auto manifest = taxonomy::load_manifest(cfg.input("manifest"));
    const auto judgments = taxonomy::load_judgments(cfg.input("judgments"));
    if (judgments.empty()) throw UsageError("report: judgments file is empty");
    const fs::path out = cfg.str("out");
    const fs::path radar = cfg.str_or("radar", derived(out, ".radar.csv").string());

    CommandResult r;
    std::vector<metrics::NamedHf> reports;
    for (const auto& [model, js] : by_model(judgments)) {
        reports.push_back({model, metrics::hf(js, manifest)});
        warn_omitted(model, reports.back().report, r.warnings);
        r.summary["HF_all"][model] = text::fixed(reports.back().report.overall, 4);
    }
    jsonl::write_text(out, metrics::hf_csv(reports));
    jsonl::write_text(radar, metrics::radar_csv(reports));
    write_stamp(cfg, out);
    r.summary["out"] = out.string();
    r.summary["radar"] = radar.string();
    return r;
}

// --- compare-checkers -------------------------------------------------------

CommandResult compare_checkers(const Config& cfg) {
    const auto manifest = taxonomy::load_manifest(cfg.input("manifest"));
    const auto expert = taxonomy::load_judgments(cfg.input("expert"));
    const fs::path out = cfg.str("out");
    const auto autos = cfg.get<std::vector<std::string>>("auto");
    if (autos.empty()) throw UsageError("compare-checkers: at least one automated judgment file is required");

    CommandResult r;
    std::map<std::string, metrics::HfReport> expert_hf;
    for (const auto& [model, js] : by_model(expert)) expert_hf.emplace(model, metrics::hf(js, manifest));

    std::vector<metrics::NamedEs> rows;
    std::vector<metrics::EsReport> reports;
    for (const auto& path : autos) {
        if (!fs::exists(path)) throw UsageError("compare-checkers: input file not found: " + path);
        const std::string checker = fs::path(path).stem().string();
        for (const auto& [model, js] : by_model(taxonomy::load_judgments(path))) {
            auto e = expert_hf.find(model);
            if (e == expert_hf.end()) throw JoinError("no expert judgments for model '" + model + "'");
            auto es = metrics::es(metrics::hf(js, manifest), e->second);
            for (const auto& [c, v] : es.per_category) {
                if (!v) r.warnings.push_back(checker + "/" + model + ": ES_" + std::string(taxonomy::short_code(c)) + " undefined");
            }
            if (!es.overall) r.warnings.push_back(checker + "/" + model + ": ES_all undefined");
            rows.push_back({checker, model, es});
            reports.push_back(es);
        }
    }
    const auto mes_row = metrics::mes(reports);
    jsonl::write_text(out, metrics::es_csv(rows, mes_row));
    write_stamp(cfg, out);
    r.summary = {{"rows", rows.size()}, {"MES_all", mes_row.overall ? json(text::fixed(*mes_row.overall, 4)) : json("undefined")},
                 {"out", out.string()}};
    return r;
}

// --- correct-sim --------------------------------------------------------------

decode::CorrectionConfig correction_config(const Config& cfg) {
    decode::CorrectionConfig c;
    c.r_p = cfg.num_or("r_p", c.r_p);
    c.k_m = static_cast<int>(cfg.int_or("k_m", c.k_m));
    c.k_t = static_cast<int>(cfg.int_or("k_t", c.k_t));
    c.thred_t = cfg.num_or("thred_t", c.thred_t);
    c.r = cfg.num_or("r", c.r);
    c.eps_at = cfg.num_or("eps_at", c.eps_at);
    if (cfg.has("m_origin")) c.m_origin = cfg.get<std::vector<int>>("m_origin");
    c.validate();
    return c;
}

CommandResult correct_sim(const Config& cfg) {
    const auto ccfg = correction_config(cfg);
    std::vector<sim::FlipScenario> scenarios;
    if (cfg.has("scenarios")) {
        try {
            scenarios = sim::load_scenarios(cfg.input("scenarios"));
        } catch (const FormatError& e) {
            throw UsageError(std::string("correct-sim: invalid scenario file: ") + e.what());
        }
    } else if (cfg.has("generate")) {
        const long long n = cfg.int_or("generate", 0);
        if (n < 1) throw UsageError("correct-sim: generate must be >= 1");
        const auto base = static_cast<std::uint64_t>(cfg.int_or("scenario_seed", 1));
        for (long long i = 0; i < n; ++i) {
            scenarios.push_back(sim::random_flip_scenario(base + static_cast<std::uint64_t>(i), ccfg.m_origin,
                                                          static_cast<int>(cfg.int_or("n_layers", 32)),
                                                          static_cast<std::size_t>(cfg.int_or("vocab_size", 16))));
        }
    } else {
        throw UsageError("correct-sim: give either 'scenarios' or 'generate'");
    }
    if (scenarios.empty()) throw UsageError("correct-sim: no scenarios");

    sim::RunOptions opts;
    opts.n_steps = static_cast<std::size_t>(cfg.int_or("n_steps", 1));
    const std::string mode = cfg.str_or("mode", "greedy");
    auto m = decode::parse_decode_mode(mode);
    if (!m) throw UsageError("unknown decode mode '" + mode + "'");
    opts.mode = *m;
    opts.temperature = cfg.num_or("temperature", 1.0);
    opts.seed = cfg.seed();
    opts.strategy = cfg.flag("average_baseline") ? sim::Strategy::Average : sim::Strategy::Selection;
    if (opts.n_steps < 1) throw UsageError("correct-sim: n_steps must be >= 1");

    const fs::path transcript_path = cfg.str("transcript");
    const fs::path sweep_path = cfg.str_or("sweep_csv", derived(transcript_path, ".sweep.csv").string());
    std::vector<double> r_values = {ccfg.r};
    if (cfg.flag("sweep")) {
        r_values.clear();
        for (int k = 0; k <= 10; ++k) r_values.push_back(k / 10.0);
    }

    std::vector<json> transcript;
    std::string csv = sim::sweep_csv_header();
    std::size_t repaired_at_r = 0;
    for (const auto& s : scenarios) {
        const auto t = sim::run_generation(s, ccfg, opts);
        for (const auto& step : t.steps) {
            json rec = sim::transcript_step_json(step);
            rec["scenario"] = s.name;
            rec["strategy"] = opts.strategy == sim::Strategy::Average ? "average" : "selection";
            transcript.push_back(std::move(rec));
        }
        if (t.corrected_tokens.front() == s.correct_token && t.baseline_tokens.front() != s.correct_token) ++repaired_at_r;
        for (const auto& row : sim::sweep_recall(s, ccfg, r_values, opts.strategy, opts.seed)) csv += sim::sweep_csv_row(row);
    }
    jsonl::write_file(transcript_path, transcript);
    jsonl::write_text(sweep_path, csv);
    write_stamp(cfg, transcript_path);

    CommandResult r;
    r.summary = {{"scenarios", scenarios.size()}, {"repaired", repaired_at_r}, {"transcript", transcript_path.string()},
                 {"sweep_csv", sweep_path.string()}};
    return r;
}

// --- datagen ------------------------------------------------------------------

struct CaptionRecord {
    std::string image_id;
    std::string caption;
    std::optional<std::string> image_ref;
    taxonomy::Modality modality = taxonomy::Modality::Unknown;
};

std::vector<CaptionRecord> load_captions(const fs::path& path) {
    std::vector<CaptionRecord> out;
    for (const auto& line : jsonl::read_file(path)) {
        CaptionRecord c;
        c.image_id = jsonl::require_string(line, "image_id");
        c.caption = jsonl::require_string(line, "caption");
        if (line.value.contains("image_ref")) c.image_ref = jsonl::require_string(line, "image_ref");
        if (line.value.contains("modality")) {
            auto m = taxonomy::parse_modality(jsonl::require_string(line, "modality"));
            if (!m) throw FormatError(line.number, "unknown modality");
            c.modality = *m;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Category> categories(const Config& cfg) {
    if (!cfg.has("categories")) return {taxonomy::kAllCategories.begin(), taxonomy::kAllCategories.end()};
    std::vector<Category> out;
    for (const auto& name : cfg.get<std::vector<std::string>>("categories")) {
        auto c = taxonomy::parse_category(name);
        if (!c) throw UsageError("unknown category '" + name + "'");
        out.push_back(*c);
    }
    return out;
}

CommandResult datagen_generate(const Config& cfg) {
    const auto captions = load_captions(cfg.input("captions"));
    const fs::path out = cfg.str("out");
    const auto client = checker::make_client(cfg.str("transport"));
    const std::string model = cfg.str_or("model", "generator");
    const std::string kind_name = cfg.str_or("kind", "normal");
    auto kind = datagen::parse_gen_kind(kind_name);
    if (!kind) throw UsageError("unknown kind '" + kind_name + "'");
    const std::string purpose_name = cfg.str_or("purpose", "check");
    auto purpose = datagen::parse_gen_purpose(purpose_name);
    if (!purpose) throw UsageError("unknown purpose '" + purpose_name + "'");
    const auto count = static_cast<std::size_t>(cfg.int_or("count", 6));
    const bool normalize = cfg.flag("normalize_yesno", true);
    const bool keep_partial = cfg.flag("keep_partial");

    CommandResult r;
    std::vector<taxonomy::QaItem> pool;
    std::size_t batches = 0, partial = 0, failed = 0;
    for (const auto& cap : captions) {
        for (Category c : categories(cfg)) {
            datagen::GenRequest req;
            try {
                req = datagen::build_gen_request(c, cap.caption, cap.image_ref, *kind, *purpose, count);
            } catch (const datagen::RoutingError& e) {
                ++failed;
                r.warnings.push_back(cap.image_id + "/" + std::string(taxonomy::short_code(c)) + ": " + e.what());
                continue;
            }
            const std::string id = "gen/" + cap.image_id + "/" + std::string(taxonomy::short_code(c)) + "/" + kind_name;
            const auto resp = client->complete({id, model, req.image_ref.value_or(""), req.instruction});
            ++batches;
            if (resp.status != checker::TransportStatus::Ok) {
                ++failed;
                r.warnings.push_back(id + ": transport: " + resp.error);
                continue;
            }
            const bool labels = *kind == datagen::GenKind::Normal && req.purpose == datagen::GenPurpose::Check;
            datagen::GenBatch batch;
            try {
                batch = datagen::parse_gen_batch(resp.text, count, labels);
            } catch (const datagen::PartialBatchError& e) {
                ++partial;
                r.warnings.push_back(id + ": " + e.what() + (keep_partial ? " (salvaged)" : " (dropped)"));
                if (!keep_partial) continue;
                batch.pairs = e.salvage();
            }
            for (auto item : datagen::batch_items(batch, req, cap.image_id)) {
                if (normalize) item.answer = datagen::normalize_yesno(item.answer);
                item.modality = cap.modality;
                pool.push_back(std::move(item));
            }
        }
    }
    taxonomy::save_items(pool, out);
    write_stamp(cfg, out);
    r.summary = {{"batches", batches}, {"items", pool.size()}, {"partial", partial}, {"failed", failed}, {"out", out.string()}};
    return r;
}

CommandResult datagen_filter(const Config& cfg) {
    const auto items = taxonomy::load_items(cfg.input("in"));
    const fs::path out = cfg.str("out");
    const fs::path flagged_out = cfg.str_or("flagged_out", derived(out, ".flagged.jsonl").string());
    std::unordered_map<std::string, std::string> caption_by_image;
    if (cfg.has("captions")) {
        for (const auto& c : load_captions(cfg.input("captions"))) caption_by_image[c.image_id] = c.caption;
    }
    datagen::ShieldConfig sc;
    sc.max_answer_len = static_cast<std::size_t>(cfg.int_or("max_answer_len", 25));

    std::map<std::string, std::vector<taxonomy::QaItem>> per_image;
    for (const auto& item : items) per_image[item.image_id].push_back(item);
    datagen::FilterResult all;
    for (const auto& [image, group] : per_image) {
        auto it = caption_by_image.find(image);
        auto fr = datagen::filter_and_flag(group, sc, it == caption_by_image.end() ? "" : it->second);
        all.kept.insert(all.kept.end(), fr.kept.begin(), fr.kept.end());
        all.flagged.insert(all.flagged.end(), fr.flagged.begin(), fr.flagged.end());
        all.removed.insert(all.removed.end(), fr.removed.begin(), fr.removed.end());
    }
    taxonomy::save_items(all.kept, out);
    taxonomy::save_items(all.flagged, flagged_out);
    write_stamp(cfg, out);
    CommandResult r;
    r.summary = {{"kept", all.kept.size()}, {"flagged", all.flagged.size()}, {"removed", all.removed.size()},
                 {"out", out.string()}, {"flagged_out", flagged_out.string()}};
    return r;
}

std::pair<std::size_t, std::size_t> parse_ratio(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(s);
        std::size_t a = std::stoul(s.substr(0, colon));
        std::size_t b = std::stoul(s.substr(colon + 1));
        return {a, b};
    } catch (const std::exception&) {
        throw UsageError("ratio must look like p:q, got '" + s + "'");
    }
}

CommandResult datagen_compose(const Config& cfg) {
    const auto normal = taxonomy::load_items(cfg.input("normal"));
    const auto misleading = taxonomy::load_items(cfg.input("misleading"));
    const fs::path out = cfg.str("out");
    datagen::ShieldConfig sc;
    sc.total = static_cast<std::size_t>(cfg.int_or("total", 30000));
    sc.normal_ratio = parse_ratio(cfg.str_or("ratio", "1:1"));
    sc.seed = cfg.seed();
    if (cfg.has("quotas")) {
        for (const auto& [name, w] : cfg.raw().at("quotas").items()) {
            auto c = taxonomy::parse_category(name);
            if (!c || !w.is_number_unsigned()) throw UsageError("bad quota entry '" + name + "'");
            sc.category_quotas[*c] = w.get<std::size_t>();
        }
    }
    auto manifest = datagen::compose_shield(normal, misleading, sc);
    manifest.name = cfg.str_or("name", "shield");
    taxonomy::save_manifest(manifest, out);
    write_stamp(cfg, out);
    std::size_t n_mis = 0;
    for (const auto& item : manifest.items) n_mis += item.is_misleading ? 1 : 0;
    CommandResult r;
    r.summary = {{"normal", manifest.items.size() - n_mis}, {"misleading", n_mis}, {"out", out.string()}};
    return r;
}

// --- split / sample-audit / validate --------------------------------------------

CommandResult split(const Config& cfg) {
    const auto source = taxonomy::load_manifest(cfg.input("in"));
    const fs::path train_out = cfg.str("train_out");
    const fs::path val_out = cfg.str("val_out");
    auto [train, val] = datagen::split_by_image(source.items, cfg.num_or("val_fraction", 0.2), cfg.seed());
    if (!source.name.empty()) {
        train.name = source.name + "-train";
        val.name = source.name + "-val";
    }
    taxonomy::save_manifest(train, train_out);
    taxonomy::save_manifest(val, val_out);
    write_stamp(cfg, train_out);

    std::set<std::string> train_images, val_images;
    for (const auto& i : train.items) train_images.insert(i.image_id);
    for (const auto& i : val.items) val_images.insert(i.image_id);
    CommandResult r;
    r.summary = {{"train_items", train.items.size()}, {"val_items", val.items.size()},
                 {"train_images", train_images.size()}, {"val_images", val_images.size()}};
    return r;
}

CommandResult sample_audit(const Config& cfg) {
    const auto source = taxonomy::load_manifest(cfg.input("in"));
    const fs::path out = cfg.str("out");
    const long long n = cfg.int_or("n", 100);
    if (n < 0) throw UsageError("sample-audit: n must be >= 0");
    const auto sample = datagen::sample_audit(source.items, static_cast<std::size_t>(n), cfg.seed());
    std::vector<json> records;
    for (const auto& item : sample) records.push_back(taxonomy::to_json(item));
    jsonl::write_file(out, records);
    write_stamp(cfg, out);
    CommandResult r;
    r.summary = {{"sampled", sample.size()}, {"out", out.string()}};
    return r;
}

CommandResult validate(const Config& cfg) {
    const auto manifest = taxonomy::load_manifest(cfg.input("manifest"));
    const auto violations = taxonomy::validate_manifest(manifest);
    CommandResult r;
    json list = json::array();
    for (const auto& v : violations) list.push_back({{"item_id", v.item_id}, {"rule", v.rule}, {"detail", v.detail}});
    r.summary = {{"items", manifest.items.size()}, {"violations", list}};
    if (!violations.empty()) {
        throw DataError("manifest '" + manifest.name + "' has " + std::to_string(violations.size()) + " violation(s): " +
                        list.dump());
    }
    return r;
}

using Handler = std::function<CommandResult(const Config&)>;

const std::map<std::string, Handler, std::less<>>& handlers() {
    static const std::map<std::string, Handler, std::less<>> h = {
        {"eval-run", eval_run},
        {"answer", answer},
        {"score", score},
        {"report", report},
        {"compare-checkers", compare_checkers},
        {"correct-sim", correct_sim},
        {"datagen-generate", datagen_generate},
        {"datagen-filter", datagen_filter},
        {"datagen-compose", datagen_compose},
        {"split", split},
        {"sample-audit", sample_audit},
        {"validate", validate},
    };
    return h;
}

} // namespace

CommandResult run_command(std::string_view command, const json& config) {
    auto it = handlers().find(command);
    if (it == handlers().end()) throw UsageError("unknown command '" + std::string(command) + "'");
    Config cfg(command, config);
    try {
        return it->second(cfg);
    } catch (const json::exception& e) {
        throw DataError(std::string(command) + ": " + e.what());
    } catch (const fs::filesystem_error& e) {
        throw DataError(std::string(command) + ": " + e.what());
    }
}

std::vector<std::string> command_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : handlers()) out.push_back(name);
    return out;
}

} // namespace rshallu::workflows
