#include "checker/client.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace rshallu::checker {

using nlohmann::json;

std::unique_ptr<ReplayTransport> ReplayTransport::from_file(const std::filesystem::path& path) {
    auto t = std::make_unique<ReplayTransport>();
    for (const auto& line : jsonl::read_file(path)) {
        ClientResponse r;
        r.text = line.value.value("text", "");
        r.latency_ms = line.value.value("latency_ms", 0.0);
        const std::string status = line.value.value("status", "ok");
        if (status == "error") {
            r.status = TransportStatus::Error;
            r.error = line.value.value("error", "replayed transport error");
        } else if (status != "ok") {
            throw FormatError(line.number, "status must be 'ok' or 'error'");
        }
        t->add(jsonl::require_string(line, "request_id"), std::move(r));
    }
    return t;
}

void ReplayTransport::add(const std::string& request_id, ClientResponse response) {
    std::lock_guard lock(mu_);
    queues_[request_id].responses.push_back(std::move(response));
}

ClientResponse ReplayTransport::complete(const ClientRequest& request) {
    std::lock_guard lock(mu_);
    log_.push_back(request);
    auto it = queues_.find(request.request_id);
    if (it == queues_.end() || it->second.responses.empty()) {
        ClientResponse miss;
        miss.status = TransportStatus::Error;
        miss.error = "no replay record for '" + request.request_id + "'";
        return miss;
    }
    Queue& q = it->second;
    const std::size_t i = std::min(q.cursor, q.responses.size() - 1);
    if (q.cursor < q.responses.size()) ++q.cursor;
    return q.responses[i];
}

std::vector<ClientRequest> ReplayTransport::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::size_t ReplayTransport::calls() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

HttpTransport::HttpTransport(std::string url, int timeout_seconds) : timeout_seconds_(timeout_seconds) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw UsageError("transport url needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

ClientResponse HttpTransport::complete(const ClientRequest& request) {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(timeout_seconds_, 0);
    cli.set_read_timeout(timeout_seconds_, 0);
    const json body = {
        {"request_id", request.request_id},
        {"model", request.model_name},
        {"image_ref", request.image_ref},
        {"prompt", request.prompt},
    };

    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, body.dump(), "application/json");
    ClientResponse out;
    out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!res) {
        out.status = TransportStatus::Error;
        out.error = "http transport: " + httplib::to_string(res.error());
        return out;
    }
    if (res->status < 200 || res->status >= 300) {
        out.status = TransportStatus::Error;
        out.error = "http status " + std::to_string(res->status);
        return out;
    }
    try {
        out.text = json::parse(res->body).at("text").get<std::string>();
    } catch (const json::exception& e) {
        out.status = TransportStatus::Error;
        out.error = std::string("malformed response envelope: ") + e.what();
    }
    return out;
}

std::unique_ptr<ModelClient> make_client(std::string_view spec) {
    if (spec.rfind("replay:", 0) == 0) return ReplayTransport::from_file(std::string(spec.substr(7)));
    if (spec.rfind("http://", 0) == 0) return std::make_unique<HttpTransport>(std::string(spec));
    throw UsageError("unsupported transport '" + std::string(spec) + "' (use replay:<file> or http://...)");
}

} // namespace rshallu::checker
