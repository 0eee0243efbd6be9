#pragma once

#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "decode/correction.hpp"

namespace rshallu::decode {

// Step-trace wire format, one JSON object per line:
//
//   {"type":"hello","session":S,"vocab_size":V,"last_layer_index":L,"m_origin":[...]}
//   {"type":"step","session":S,"step":N,"last_layer_index":L,"vocab_size":V,
//    "layers":[{"layer_index":i,"a_v":x,"a_t":y,"logits":[...]}, ...]}
//   {"type":"bye","session":S}
//
// Replies:
//
//   {"type":"ready","session":S}
//   {"type":"corrected","session":S,"step":N,"logits":[...],"m_final":[...]}
//   {"type":"error","session":S,"message":"..."}
//
// Numbers are written in shortest round-trip decimal form, so values
// survive a parse/serialize cycle exactly.

struct StepRecord {
    std::string session;
    std::size_t step = 0;
    LayerStepTrace trace;
};

nlohmann::json step_to_json(const StepRecord& record);
// Throws FormatError (line 0 when the caller has no line context).
StepRecord step_from_json(const nlohmann::json& j, std::size_t line = 0);

nlohmann::json corrected_reply(const std::string& session, std::size_t step, const CorrectionOutcome& outcome);

// Serves interleaved sessions. Thread-safe; each reply is computed from the
// session's handshake and the engine's base configuration.
class CorrectionEngine {
public:
    explicit CorrectionEngine(CorrectionConfig base) : base_(std::move(base)) {}

    // Handles one request line, always producing exactly one reply line.
    std::string handle_line(std::string_view line);

    std::size_t open_sessions() const;

private:
    struct Session {
        std::size_t vocab_size;
        int last_layer_index;
        CorrectionConfig cfg;
    };

    nlohmann::json handle(const nlohmann::json& request);

    CorrectionConfig base_;
    mutable std::mutex mu_;
    std::map<std::string, Session> sessions_;
};

} // namespace rshallu::decode
