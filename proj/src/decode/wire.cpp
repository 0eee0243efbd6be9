#include "decode/wire.hpp"

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace rshallu::decode {

using nlohmann::json;

json step_to_json(const StepRecord& record) {
    json layers = json::array();
    for (const auto& [idx, rec] : record.trace.records) {
        layers.push_back({{"layer_index", idx}, {"a_v", rec.a_v}, {"a_t", rec.a_t}, {"logits", rec.logits}});
    }
    return {
        {"type", "step"},
        {"session", record.session},
        {"step", record.step},
        {"last_layer_index", record.trace.last_layer_index},
        {"vocab_size", record.trace.vocab_size},
        {"layers", layers},
    };
}

StepRecord step_from_json(const json& j, std::size_t line) {
    try {
        StepRecord r;
        r.session = j.value("session", "");
        r.step = j.at("step").get<std::size_t>();
        r.trace.last_layer_index = j.at("last_layer_index").get<int>();
        r.trace.vocab_size = j.at("vocab_size").get<std::size_t>();
        for (const auto& l : j.at("layers")) {
            LayerStepRecord rec;
            rec.layer_index = l.at("layer_index").get<int>();
            rec.a_v = l.at("a_v").get<double>();
            rec.a_t = l.at("a_t").get<double>();
            rec.logits = l.at("logits").get<std::vector<double>>();
            r.trace.add(std::move(rec));
        }
        return r;
    } catch (const json::exception& e) {
        throw FormatError(line, std::string("bad step record: ") + e.what());
    }
}

json corrected_reply(const std::string& session, std::size_t step, const CorrectionOutcome& outcome) {
    return {
        {"type", "corrected"},
        {"session", session},
        {"step", step},
        {"logits", outcome.corrected_logits},
        {"m_final", outcome.m_final},
    };
}

std::size_t CorrectionEngine::open_sessions() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

std::string CorrectionEngine::handle_line(std::string_view line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error& e) {
        return jsonl::dump({{"type", "error"}, {"session", ""}, {"message", std::string("malformed line: ") + e.what()}});
    }
    const std::string session = request.is_object() ? request.value("session", "") : "";
    try {
        return jsonl::dump(handle(request));
    } catch (const std::exception& e) {
        return jsonl::dump({{"type", "error"}, {"session", session}, {"message", e.what()}});
    }
}

json CorrectionEngine::handle(const json& request) {
    if (!request.is_object()) throw FormatError(0, "request is not an object");
    const std::string type = request.value("type", "");
    const std::string session = request.value("session", "");

    if (type == "hello") {
        Session s{request.at("vocab_size").get<std::size_t>(), request.at("last_layer_index").get<int>(), base_};
        if (auto it = request.find("m_origin"); it != request.end()) s.cfg.m_origin = it->get<std::vector<int>>();
        s.cfg.validate(s.last_layer_index);
        std::lock_guard lock(mu_);
        sessions_.insert_or_assign(session, std::move(s));
        return {{"type", "ready"}, {"session", session}};
    }
    if (type == "bye") {
        std::lock_guard lock(mu_);
        sessions_.erase(session);
        return {{"type", "closed"}, {"session", session}};
    }
    if (type == "step") {
        Session s = [&] {
            std::lock_guard lock(mu_);
            auto it = sessions_.find(session);
            if (it == sessions_.end()) throw UsageError("step for unknown session '" + session + "' (send hello first)");
            return it->second;
        }();
        StepRecord rec = step_from_json(request);
        if (rec.trace.vocab_size != s.vocab_size || rec.trace.last_layer_index != s.last_layer_index) {
            throw TraceError("step disagrees with session handshake");
        }
        return corrected_reply(session, rec.step, correct_step(rec.trace, s.cfg));
    }
    throw UsageError("unknown request type '" + type + "'");
}

} // namespace rshallu::decode
