#include "rshallu/rshallu.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "common/error.hpp"
#include "decode/correction.hpp"
#include "decode/sampling.hpp"
#include "decode/wire.hpp"
#include "taxonomy/taxonomy.hpp"
#include "workflows/commands.hpp"

using namespace rshallu;

struct rshallu_trace {
    decode::LayerStepTrace trace;
};

struct rshallu_outcome {
    decode::CorrectionOutcome outcome;
};

struct rshallu_manifest {
    taxonomy::DatasetManifest manifest;
};

struct rshallu_engine {
    explicit rshallu_engine(decode::CorrectionConfig cfg) : engine(std::move(cfg)) {}
    decode::CorrectionEngine engine;
};

namespace {

thread_local std::string g_last_error;

const int kDefaultOrigin[] = {29, 30, 31};

rshallu_status fail(rshallu_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <class F>
rshallu_status guarded(F&& f) {
    g_last_error.clear();
    try {
        f();
        return RSHALLU_OK;
    } catch (const Error& e) {
        return fail(static_cast<rshallu_status>(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(RSHALLU_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RSHALLU_ERR_INTERNAL, e.what());
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(const void* p, const char* what) {
    if (!p) throw UsageError(std::string(what) + " must not be null");
}

decode::CorrectionConfig to_config(const rshallu_correction_config* c) {
    decode::CorrectionConfig cfg;
    if (!c) return cfg;
    cfg.r_p = c->r_p;
    cfg.k_m = c->k_m;
    cfg.k_t = c->k_t;
    cfg.thred_t = c->thred_t;
    cfg.r = c->r;
    cfg.eps_at = c->eps_at;
    if (c->n_m_origin > 0 && !c->m_origin) throw UsageError("m_origin is null");
    cfg.m_origin.assign(c->m_origin, c->m_origin + c->n_m_origin);
    return cfg;
}

} // namespace

extern "C" {

const char* rshallu_last_error(void) { return g_last_error.c_str(); }

const char* rshallu_version(void) { return RSHALLU_VERSION; }

void rshallu_string_free(char* s) { std::free(s); }

rshallu_status rshallu_trace_create(int last_layer_index, size_t vocab_size, rshallu_trace** out) {
    return guarded([&] {
        require(out, "out");
        if (last_layer_index < 0) throw UsageError("last_layer_index must be >= 0");
        auto t = std::make_unique<rshallu_trace>();
        t->trace.last_layer_index = last_layer_index;
        t->trace.vocab_size = vocab_size;
        *out = t.release();
    });
}

rshallu_status rshallu_trace_parse(const char* step_json, rshallu_trace** out) {
    return guarded([&] {
        require(step_json, "step_json");
        require(out, "out");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(step_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(1, e.what());
        }
        auto t = std::make_unique<rshallu_trace>();
        t->trace = decode::step_from_json(j, 1).trace;
        *out = t.release();
    });
}

rshallu_status rshallu_trace_add_layer(rshallu_trace* trace, int layer_index, double a_v, double a_t,
                                       const double* logits, size_t n_logits) {
    return guarded([&] {
        require(trace, "trace");
        if (n_logits > 0) require(logits, "logits");
        decode::LayerStepRecord rec;
        rec.layer_index = layer_index;
        rec.a_v = a_v;
        rec.a_t = a_t;
        rec.logits.assign(logits, logits + n_logits);
        trace->trace.add(std::move(rec));
    });
}

void rshallu_trace_free(rshallu_trace* trace) { delete trace; }

void rshallu_correction_config_default(rshallu_correction_config* cfg) {
    if (!cfg) return;
    const decode::CorrectionConfig d;
    cfg->r_p = d.r_p;
    cfg->k_m = d.k_m;
    cfg->k_t = d.k_t;
    cfg->thred_t = d.thred_t;
    cfg->r = d.r;
    cfg->eps_at = d.eps_at;
    cfg->m_origin = kDefaultOrigin;
    cfg->n_m_origin = sizeof(kDefaultOrigin) / sizeof(kDefaultOrigin[0]);
}

rshallu_status rshallu_correct_step(const rshallu_trace* trace, const rshallu_correction_config* cfg,
                                    rshallu_outcome** out) {
    return guarded([&] {
        require(trace, "trace");
        require(out, "out");
        auto o = std::make_unique<rshallu_outcome>();
        o->outcome = decode::correct_step(trace->trace, to_config(cfg));
        *out = o.release();
    });
}

size_t rshallu_outcome_vocab_size(const rshallu_outcome* o) { return o ? o->outcome.corrected_logits.size() : 0; }
const double* rshallu_outcome_logits(const rshallu_outcome* o) { return o ? o->outcome.corrected_logits.data() : nullptr; }
size_t rshallu_outcome_n_layers(const rshallu_outcome* o) { return o ? o->outcome.m_final.size() : 0; }
const int* rshallu_outcome_layers(const rshallu_outcome* o) { return o ? o->outcome.m_final.data() : nullptr; }
const double* rshallu_outcome_weights(const rshallu_outcome* o) { return o ? o->outcome.weights.data() : nullptr; }
void rshallu_outcome_free(rshallu_outcome* o) { delete o; }

double rshallu_attention_balance(double a_v, double a_t, double r_p, double eps_at) {
    return decode::attention_balance(a_v, a_t, r_p, eps_at);
}

rshallu_status rshallu_decode_next(const double* logits, size_t n, int mode, double temperature, uint64_t seed,
                                   size_t* token_out) {
    return guarded([&] {
        require(logits, "logits");
        require(token_out, "token_out");
        if (n == 0) throw UsageError("empty logits");
        if (mode != 0 && mode != 1) throw UsageError("mode must be 0 (greedy) or 1 (sample)");
        *token_out = decode::decode_next({logits, n}, mode == 0 ? decode::DecodeMode::Greedy : decode::DecodeMode::Sample,
                                         temperature, seed);
    });
}

rshallu_status rshallu_manifest_load(const char* path, rshallu_manifest** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        auto m = std::make_unique<rshallu_manifest>();
        m->manifest = taxonomy::load_manifest(path);
        *out = m.release();
    });
}

size_t rshallu_manifest_size(const rshallu_manifest* m) { return m ? m->manifest.items.size() : 0; }

rshallu_status rshallu_manifest_validate(const rshallu_manifest* m, size_t* n_out, char** report_json) {
    return guarded([&] {
        require(m, "manifest");
        const auto violations = taxonomy::validate_manifest(m->manifest);
        if (n_out) *n_out = violations.size();
        if (report_json) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& v : violations) list.push_back({{"item_id", v.item_id}, {"rule", v.rule}, {"detail", v.detail}});
            *report_json = copy_string(list.dump());
        }
    });
}

rshallu_status rshallu_manifest_save(const rshallu_manifest* m, const char* path) {
    return guarded([&] {
        require(m, "manifest");
        require(path, "path");
        taxonomy::save_manifest(m->manifest, path);
    });
}

void rshallu_manifest_free(rshallu_manifest* m) { delete m; }

rshallu_status rshallu_engine_create(const rshallu_correction_config* cfg, rshallu_engine** out) {
    return guarded([&] {
        require(out, "out");
        auto c = to_config(cfg);
        c.validate();
        *out = new rshallu_engine(std::move(c));
    });
}

rshallu_status rshallu_engine_handle_line(rshallu_engine* e, const char* line, char** reply) {
    return guarded([&] {
        require(e, "engine");
        require(line, "line");
        require(reply, "reply");
        *reply = copy_string(e->engine.handle_line(line));
    });
}

size_t rshallu_engine_open_sessions(const rshallu_engine* e) { return e ? e->engine.open_sessions() : 0; }

void rshallu_engine_free(rshallu_engine* e) { delete e; }

rshallu_status rshallu_run_command(const char* command, const char* config_json, char** result_json) {
    return guarded([&] {
        require(command, "command");
        require(config_json, "config_json");
        nlohmann::json cfg;
        try {
            cfg = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw UsageError(std::string("config is not valid JSON: ") + e.what());
        }
        const auto r = workflows::run_command(command, cfg);
        if (result_json) {
            nlohmann::json out = {{"summary", r.summary}, {"warnings", r.warnings}};
            *result_json = copy_string(out.dump());
        }
    });
}

} // extern "C"
