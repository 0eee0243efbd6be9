#include "checker/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <regex>
#include <sstream>
#include <thread>

#include "common/text.hpp"

namespace rshallu::checker {

std::optional<Marking> parse_marking(std::string_view s) {
    if (s == "presence") return Marking::Presence;
    if (s == "accuracy") return Marking::Accuracy;
    return std::nullopt;
}

std::string_view to_string(Marking m) { return m == Marking::Presence ? "presence" : "accuracy"; }

std::string build_judge_prompt(const taxonomy::QaItem& item, std::string_view answer,
                               const std::optional<std::string>& ground_truth, const JudgeOptions& opts) {
    if (text::trim(answer).empty()) throw UsageError("cannot judge an empty answer for item '" + item.id + "'");
    if (opts.include_ground_truth && !ground_truth) {
        throw ConfigError("ground truth required by options but absent for item '" + item.id + "'");
    }
    const bool with_gt = opts.include_ground_truth;

    std::ostringstream p;
    if (opts.domain_preamble) {
        p << "You are evaluating an answer produced by a multimodal model about the attached remote sensing image. "
             "Interpret the image and the question strictly in the remote sensing context: aerial or satellite "
             "imagery, land use, ground objects and their spatial relations.\n\n";
    } else {
        p << "You are evaluating an answer produced by a multimodal model about the attached image.\n\n";
    }
    p << "Question: " << item.question << "\n";
    p << "Model answer: " << answer << "\n";
    if (with_gt) p << "Ground truth answer: " << *ground_truth << "\n";
    p << "\n";
    p << "Task: decide whether the model answer contains hallucinations, that is, content inconsistent with the image"
      << (with_gt ? " or contradicting the ground truth answer" : "") << ".\n";
    if (opts.marking == Marking::Presence) {
        p << "Marking: output 1 if hallucinations are present in the model answer, and 0 if they are absent.\n";
    } else {
        p << "Marking: output 1 if the model answer is without hallucinations and accurate, and 0 if it contains "
             "hallucinations or is inaccurate.\n";
    }
    if (opts.use_cot) {
        p << kCotSentence << " Explain your reasoning first, then end your reply with a final line of the form "
          << "\"Mark: <0 or 1>\".\n";
    } else {
        p << "Reply with a single line of the form \"Mark: <0 or 1>\" and nothing else.\n";
    }
    return p.str();
}

JudgeRequest make_judge_request(const taxonomy::QaItem& item, std::string_view answer, const JudgeOptions& opts) {
    JudgeRequest r;
    r.item_id = item.id;
    r.image_ref = item.image_id;
    r.question = item.question;
    r.candidate_answer = std::string(answer);
    if (opts.include_ground_truth) r.ground_truth = item.answer;
    r.rendered_prompt = build_judge_prompt(item, answer, r.ground_truth, opts);
    return r;
}

namespace {

struct MarkMatch {
    int mark;
    std::size_t pos;
    std::size_t len;
};

std::optional<MarkMatch> last_match(const std::string& s, const std::regex& re, int group) {
    std::optional<MarkMatch> found;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        found = MarkMatch{m.str(group) == "1" ? 1 : 0, static_cast<std::size_t>(m.position(0)),
                          static_cast<std::size_t>(m.length(0))};
    }
    return found;
}

} // namespace

Verdict parse_verdict(std::string_view raw, const JudgeOptions& opts, std::string item_id) {
    static const std::regex labeled(R"((?:mark|score)\s*\**\s*[:=]\s*\**\s*([01])(?![0-9A-Za-z]|\.[0-9]))",
                                    std::regex::icase);
    static const std::regex standalone(R"((?:^|[^0-9A-Za-z.])([01])(?![0-9A-Za-z]|\.[0-9]))");

    const std::string s(raw);
    if (text::trim(s).empty()) throw UnparseableVerdictError("empty response");
    auto m = last_match(s, labeled, 1);
    if (!m) m = last_match(s, standalone, 1);
    if (!m) throw UnparseableVerdictError("no 0/1 mark in response");

    Verdict v;
    v.item_id = std::move(item_id);
    v.raw_response = s;
    const bool one = m->mark == 1;
    if (opts.marking == Marking::Presence) v.binary = one ? VerdictLabel::Hallucinated : VerdictLabel::Clean;
    else v.binary = one ? VerdictLabel::Clean : VerdictLabel::Hallucinated;

    std::string rest = s.substr(0, m->pos) + s.substr(m->pos + m->len);
    v.reasoning_present = std::any_of(rest.begin(), rest.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
    return v;
}

taxonomy::Score to_score(VerdictLabel v) {
    return v == VerdictLabel::Clean ? taxonomy::Score::one() : taxonomy::Score::zero();
}

VerdictLabel from_score(taxonomy::Score s) {
    if (!s.is_binary()) throw DataError("score " + s.str() + " has no binary verdict");
    return s == taxonomy::Score::one() ? VerdictLabel::Clean : VerdictLabel::Hallucinated;
}

std::string judge_request_id(std::string_view model_name, std::string_view item_id) {
    return "judge/" + std::string(model_name) + "/" + std::string(item_id);
}

BatchResult judge_batch(std::span<const BatchEntry> entries, ModelClient& client, const JudgeOptions& opts,
                        const BatchPolicy& policy, const std::string& judge_model) {
    if (policy.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (policy.concurrency_limit < 1) throw ConfigError("concurrency_limit must be >= 1");

    struct Slot {
        std::optional<Verdict> verdict;
        std::optional<Unjudged> failure;
    };
    std::vector<Slot> slots(entries.size());

    // Prompt construction errors are configuration problems; surface them
    // before any request goes out.
    std::vector<JudgeRequest> requests;
    requests.reserve(entries.size());
    for (const auto& e : entries) requests.push_back(make_judge_request(e.item, e.answer, opts));

    auto run_one = [&](std::size_t i) {
        const auto& e = entries[i];
        ClientRequest req{judge_request_id(e.model_name, e.item.id), judge_model, requests[i].image_ref,
                          requests[i].rendered_prompt};
        std::string last_error;
        int attempts = 0;
        for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
            if (attempt > 0 && policy.backoff_base.count() > 0) {
                std::this_thread::sleep_for(policy.backoff_base * (1 << std::min(attempt - 1, 16)));
            }
            ++attempts;
            ClientResponse resp;
            try {
                resp = client.complete(req);
            } catch (const std::exception& ex) {
                resp.status = TransportStatus::Error;
                resp.error = ex.what();
            }
            if (resp.status != TransportStatus::Ok) {
                last_error = "transport: " + resp.error;
                continue;
            }
            try {
                slots[i].verdict = parse_verdict(resp.text, opts, e.item.id);
                return;
            } catch (const UnparseableVerdictError& ex) {
                last_error = ex.what();
            }
        }
        slots[i].failure = Unjudged{e.item.id, e.model_name, last_error, attempts};
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(policy.concurrency_limit), entries.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < entries.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < entries.size(); i = next++) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    BatchResult out;
    std::vector<std::size_t> order(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(entries[a].model_name, entries[a].item.id) < std::tie(entries[b].model_name, entries[b].item.id);
    });
    for (std::size_t i : order) {
        const auto& e = entries[i];
        if (slots[i].verdict) {
            const auto& v = *slots[i].verdict;
            out.judgments.push_back({e.item.id, e.model_name, e.answer, to_score(v.binary), taxonomy::JudgmentSource::Automated});
            out.verdicts.push_back(v);
        } else {
            out.unjudged.push_back(*slots[i].failure);
        }
    }
    return out;
}

} // namespace rshallu::checker
