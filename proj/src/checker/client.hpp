#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace rshallu::checker {

// Request envelope for any upstream model (judge, answering model, generator).
struct ClientRequest {
    std::string request_id; // routing key, e.g. "judge/<model>/<item>"
    std::string model_name;
    std::string image_ref;
    std::string prompt;
};

enum class TransportStatus { Ok, Error };

struct ClientResponse {
    std::string text;
    double latency_ms = 0.0;
    TransportStatus status = TransportStatus::Ok;
    std::string error;
};

// Implementations must tolerate concurrent complete() calls.
class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual ClientResponse complete(const ClientRequest& request) = 0;
};

// Offline transport backed by canned responses keyed by request_id. Several
// records with one id are served in order; the last one then repeats.
//
// File format, one per line:
//   {"request_id": "...", "text": "...", "status": "ok"|"error", "latency_ms": 0}
class ReplayTransport : public ModelClient {
public:
    ReplayTransport() = default;
    static std::unique_ptr<ReplayTransport> from_file(const std::filesystem::path& path);

    void add(const std::string& request_id, ClientResponse response);
    ClientResponse complete(const ClientRequest& request) override;

    std::vector<ClientRequest> requests() const;
    std::size_t calls() const;

private:
    struct Queue {
        std::vector<ClientResponse> responses;
        std::size_t cursor = 0;
    };
    mutable std::mutex mu_;
    std::map<std::string, Queue> queues_;
    std::vector<ClientRequest> log_;
};

// Posts the request envelope as JSON to an HTTP endpoint and expects
// {"text": "..."} back. Non-2xx or unreachable endpoints map to
// TransportStatus::Error.
class HttpTransport : public ModelClient {
public:
    explicit HttpTransport(std::string url, int timeout_seconds = 120);
    ClientResponse complete(const ClientRequest& request) override;

private:
    std::string origin_;
    std::string path_;
    int timeout_seconds_;
};

// "replay:<path>" or "http://host:port/path". Throws UsageError otherwise.
std::unique_ptr<ModelClient> make_client(std::string_view spec);

} // namespace rshallu::checker
