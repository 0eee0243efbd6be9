#include "sim/trace_sim.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/rng.hpp"

namespace rshallu::sim {

using nlohmann::json;

namespace {

constexpr double kLead = 6.0;
constexpr double kNoise = 2.0;

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

AttentionPair FlipScenario::attention(int layer) const {
    if (auto it = attention_profile.find(layer); it != attention_profile.end()) return it->second;
    if (layer == last_layer()) return {0.3, 0.3};
    if (strong_layers.count(layer)) return {0.6, 0.2};
    return {0.2, 0.4};
}

void FlipScenario::validate() const {
    if (n_layers < 1) throw ConfigError("scenario needs at least 1 layer");
    if (vocab_size < 2) throw ConfigError("scenario vocab_size must be >= 2");
    if (correct_token >= vocab_size || hallucinated_token >= vocab_size) throw ConfigError("scenario token out of vocab");
    if (correct_token == hallucinated_token) throw ConfigError("correct and hallucinated tokens must differ");
    if (!(flip_margin > 0.0 && flip_margin <= 8.0)) throw ConfigError("flip_margin must lie in (0, 8]");
    if (!(strong_margin > 0.0 && strong_margin <= 4.0)) throw ConfigError("strong_margin must lie in (0, 4]");
    for (int l : strong_layers) {
        if (l < 0 || l >= last_layer()) throw ConfigError("strong layer " + std::to_string(l) + " outside [0, n_layers)");
    }
    for (const auto& [l, a] : attention_profile) {
        if (l < 0 || l > last_layer()) throw ConfigError("attention profile names layer " + std::to_string(l) + " outside the model");
        if (!(a.a_v >= 0 && a.a_v <= 1 && a.a_t >= 0 && a.a_t <= 1 && a.a_v + a.a_t <= 1.0 + 1e-9)) {
            throw ConfigError("attention profile for layer " + std::to_string(l) + " is not a valid mass split");
        }
    }
}

decode::LayerStepTrace build_flip_trace(const FlipScenario& scenario, std::size_t step) {
    scenario.validate();
    decode::LayerStepTrace trace;
    trace.last_layer_index = scenario.last_layer();
    trace.vocab_size = scenario.vocab_size;

    for (int l = 0; l <= scenario.last_layer(); ++l) {
        Rng rng(mix_seed(mix_seed(scenario.seed, step), static_cast<std::uint64_t>(l)));
        decode::LayerStepRecord rec;
        rec.layer_index = l;
        rec.logits.resize(scenario.vocab_size);
        for (double& v : rec.logits) v = rng.uniform(-kNoise, kNoise);

        const std::size_t c = scenario.correct_token;
        const std::size_t h = scenario.hallucinated_token;
        if (l == scenario.last_layer()) {
            rec.logits[h] = kLead;
            rec.logits[c] = kLead - scenario.flip_margin;
        } else if (scenario.strong_layers.count(l)) {
            rec.logits[c] = kLead;
            rec.logits[h] = kLead - scenario.strong_margin;
        } else {
            rec.logits[h] = kLead;
            rec.logits[c] = kLead - rng.uniform(1.0, 3.0);
        }
        const AttentionPair a = scenario.attention(l);
        rec.a_v = a.a_v;
        rec.a_t = a.a_t;
        trace.add(std::move(rec));
    }
    return trace;
}

GenerationTranscript run_generation(const FlipScenario& scenario, const decode::CorrectionConfig& cfg,
                                    const RunOptions& opts) {
    if (opts.n_steps < 1) throw ConfigError("n_steps must be >= 1");
    scenario.validate();
    cfg.validate(scenario.last_layer());

    GenerationTranscript out;
    decode::Sampler baseline(opts.seed);
    decode::Sampler corrected(opts.seed);
    Rng layer_picker(mix_seed(opts.seed, 0xa11));

    for (std::size_t s = 0; s < opts.n_steps; ++s) {
        TranscriptStep step;
        step.step = s;
        step.trace = build_flip_trace(scenario, s);
        step.outcome = opts.strategy == Strategy::Average ? decode::correct_step_average(step.trace, cfg, layer_picker)
                                                          : decode::correct_step(step.trace, cfg);
        step.baseline_token = baseline.next(step.trace.final_layer().logits, opts.mode, opts.temperature);
        step.corrected_token = corrected.next(step.outcome.corrected_logits, opts.mode, opts.temperature);
        out.baseline_tokens.push_back(step.baseline_token);
        out.corrected_tokens.push_back(step.corrected_token);
        out.steps.push_back(std::move(step));
    }
    return out;
}

FlipScenario random_flip_scenario(std::uint64_t seed, const std::vector<int>& m_origin, int n_layers,
                                  std::size_t vocab_size) {
    if (m_origin.empty()) throw ConfigError("m_origin must be non-empty");
    Rng rng(mix_seed(seed, 0x5ce));
    FlipScenario s;
    s.name = "random-" + std::to_string(seed);
    s.n_layers = n_layers;
    s.vocab_size = vocab_size;
    s.seed = seed;
    s.correct_token = rng.index(vocab_size);
    do {
        s.hallucinated_token = rng.index(vocab_size);
    } while (s.hallucinated_token == s.correct_token);
    s.flip_margin = rng.uniform(0.2, 1.5);
    s.strong_margin = rng.uniform(1.5, 4.0);

    std::vector<int> pool(m_origin);
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    rng.shuffle(pool);
    const std::size_t n_strong = 1 + rng.index(std::min<std::size_t>(3, pool.size()));
    s.strong_layers.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_strong));

    for (int l : pool) {
        if (s.strong_layers.count(l)) s.attention_profile[l] = {rng.uniform(0.5, 0.7), rng.uniform(0.1, 0.2)};
        else s.attention_profile[l] = {rng.uniform(0.05, 0.2), rng.uniform(0.3, 0.5)};
    }
    s.attention_profile[s.last_layer()] = {rng.uniform(0.25, 0.35), rng.uniform(0.25, 0.35)};
    s.validate();
    return s;
}

std::vector<SweepRow> sweep_recall(const FlipScenario& scenario, const decode::CorrectionConfig& cfg,
                                   const std::vector<double>& r_values, Strategy strategy, std::uint64_t seed) {
    std::vector<SweepRow> rows;
    for (double r : r_values) {
        decode::CorrectionConfig c = cfg;
        c.r = r;
        RunOptions opts;
        opts.seed = seed;
        opts.strategy = strategy;
        const auto t = run_generation(scenario, c, opts);
        SweepRow row;
        row.scenario = scenario.name;
        row.cfg = c;
        row.baseline_token = t.baseline_tokens.front();
        row.corrected_token = t.corrected_tokens.front();
        row.repaired = row.corrected_token == scenario.correct_token && row.baseline_token != scenario.correct_token;
        rows.push_back(row);
    }
    return rows;
}

bool repair_eligible(const FlipScenario& scenario, const decode::CorrectionConfig& cfg) {
    for (int l : scenario.strong_layers) {
        if (std::find(cfg.m_origin.begin(), cfg.m_origin.end(), l) == cfg.m_origin.end()) return false;
    }
    const auto trace = build_flip_trace(scenario, 0);
    const auto probs = decode::softmax(trace.final_layer().logits);
    return probs[scenario.correct_token] > cfg.thred_t;
}

json scenario_to_json(const FlipScenario& s) {
    json profile = json::object();
    for (const auto& [l, a] : s.attention_profile) profile[std::to_string(l)] = {{"a_v", a.a_v}, {"a_t", a.a_t}};
    return {
        {"name", s.name},
        {"n_layers", s.n_layers},
        {"vocab_size", s.vocab_size},
        {"correct_token", s.correct_token},
        {"hallucinated_token", s.hallucinated_token},
        {"strong_layers", s.strong_layers},
        {"flip_margin", s.flip_margin},
        {"strong_margin", s.strong_margin},
        {"attention_profile", profile},
        {"seed", s.seed},
    };
}

FlipScenario scenario_from_json(const json& j, std::size_t line) {
    try {
        FlipScenario s;
        s.name = j.value("name", "");
        s.n_layers = j.value("n_layers", 32);
        s.vocab_size = j.at("vocab_size").get<std::size_t>();
        s.correct_token = j.at("correct_token").get<std::size_t>();
        s.hallucinated_token = j.at("hallucinated_token").get<std::size_t>();
        s.strong_layers = j.at("strong_layers").get<std::set<int>>();
        s.flip_margin = j.at("flip_margin").get<double>();
        s.strong_margin = j.value("strong_margin", 3.0);
        s.seed = j.value("seed", std::uint64_t{0});
        if (auto it = j.find("attention_profile"); it != j.end()) {
            for (const auto& [k, v] : it->items()) {
                s.attention_profile[std::stoi(k)] = {v.at("a_v").get<double>(), v.at("a_t").get<double>()};
            }
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw FormatError(line, std::string("bad scenario: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw FormatError(line, "attention_profile keys must be layer indices");
    } catch (const ConfigError& e) {
        throw FormatError(line, e.what());
    }
}

std::vector<FlipScenario> load_scenarios(const std::filesystem::path& path) {
    std::vector<FlipScenario> out;
    for (const auto& line : jsonl::read_file(path)) {
        out.push_back(scenario_from_json(line.value, line.number));
        if (out.back().name.empty()) out.back().name = "line-" + std::to_string(line.number);
    }
    return out;
}

json transcript_step_json(const TranscriptStep& s) {
    json ab = json::object();
    for (const auto& [l, v] : s.outcome.a_b_by_layer) ab[std::to_string(l)] = v;
    return {
        {"step", s.step},
        {"baseline_token", s.baseline_token},
        {"corrected_token", s.corrected_token},
        {"stage1_layers", s.outcome.stage1_layers},
        {"m_final", s.outcome.m_final},
        {"weights", s.outcome.weights},
        {"a_b", ab},
    };
}

std::string sweep_csv_header() {
    return "r_p,K_m,K_t,thred_t,r,repaired,baseline_token,corrected_token,scenario\n";
}

std::string sweep_csv_row(const SweepRow& row) {
    std::ostringstream out;
    out << fmt_g(row.cfg.r_p) << ',' << row.cfg.k_m << ',' << row.cfg.k_t << ',' << fmt_g(row.cfg.thred_t) << ','
        << fmt_g(row.cfg.r) << ',' << (row.repaired ? "true" : "false") << ',' << row.baseline_token << ','
        << row.corrected_token << ',' << row.scenario << '\n';
    return out.str();
}

} // namespace rshallu::sim
