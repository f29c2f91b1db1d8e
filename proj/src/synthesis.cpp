#include "memq/synthesis.hpp"

#include "memq/errors.hpp"
#include "memq/text.hpp"

#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

using nlohmann::json;
namespace fs = std::filesystem;

namespace memq::synth {

const char* const kMockRefusal = "no relevant memory";

PromptTemplate PromptTemplate::answer_template() {
    PromptTemplate t;
    t.template_id = "answer-v1";
    t.body =
        "You are a personal assistant who answers questions about a person using "
        "their long-term memories.\n"
        "Memories, most relevant first:\n{memories}\n"
        "Question: {question}\n"
        "Answer in no more than {word_limit} words, using only the memories above. "
        "If the memories do not contain the answer, say so.";
    return t;
}

namespace {

std::size_t count_placeholder(const std::string& body, const std::string& name) {
    std::size_t n = 0;
    std::string needle = "{" + name + "}";
    for (std::size_t pos = body.find(needle); pos != std::string::npos;
         pos = body.find(needle, pos + needle.size()))
        ++n;
    return n;
}

std::string replace_once(std::string body, const std::string& name, const std::string& value) {
    std::string needle = "{" + name + "}";
    auto pos = body.find(needle);
    body.replace(pos, needle.size(), value);
    return body;
}

} // namespace

void PromptTemplate::validate() const {
    for (const char* name : {"question", "memories", "word_limit"}) {
        std::size_t n = count_placeholder(body, name);
        if (n != 1)
            throw TemplateError("template " + template_id + ": placeholder {" +
                                std::string(name) + "} must appear exactly once, found " +
                                std::to_string(n));
    }
}

std::string build_prompt(const PromptTemplate& tmpl, const std::string& question,
                         const std::vector<store::MemoryItem>& memories, int word_limit) {
    tmpl.validate();
    std::ostringstream mem;
    if (memories.empty()) {
        mem << "(no memory provided)";
    } else {
        for (std::size_t i = 0; i < memories.size(); ++i) {
            if (i) mem << "\n";
            mem << (i + 1) << ". [" << store::to_string(memories[i].subtype) << "] "
                << memories[i].text;
        }
    }
    std::string out = replace_once(tmpl.body, "memories", mem.str());
    out = replace_once(out, "question", question);
    out = replace_once(out, "word_limit", std::to_string(word_limit));
    if (out.empty()) throw TemplateError("rendered prompt is empty");
    return out;
}

std::string mock_extractive_generate(const std::string&,
                                     const std::vector<std::string>& ranked_memory_texts) {
    if (ranked_memory_texts.empty()) return kMockRefusal;
    const std::string& top = ranked_memory_texts.front();

    // Truncate to 50 Latin words / 100 CJK characters, whichever is hit first.
    std::u32string cps = text::utf8_decode(top);
    int words = 0, cjk = 0;
    bool in_word = false;
    std::size_t cut = cps.size();
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t c = cps[i];
        bool word_char = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                         (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (text::is_cjk(c)) {
            in_word = false;
            if (++cjk > 100) { cut = i; break; }
        } else if (word_char) {
            if (!in_word) {
                in_word = true;
                if (++words > 50) { cut = i; break; }
            }
        } else {
            in_word = false;
        }
    }
    if (cut == cps.size()) return top;
    return text::utf8_encode(std::u32string_view(cps.data(), cut));
}

std::string MockExtractiveBackend::generate(const GenRequest& req) {
    return mock_extractive_generate(req.question, req.memory_texts);
}

void ScriptedBackend::push_text(std::string t) {
    std::lock_guard lk(mu_);
    steps_.push_back(Step{std::move(t), 0, 0});
}

void ScriptedBackend::push_error(int status, int retry_after_s) {
    std::lock_guard lk(mu_);
    steps_.push_back(Step{std::nullopt, status, retry_after_s});
}

std::string ScriptedBackend::generate(const GenRequest&) {
    ++calls_;
    Step s;
    {
        std::lock_guard lk(mu_);
        if (steps_.empty()) throw EndpointError(0, "scripted backend exhausted");
        s = steps_.front();
        steps_.pop_front();
    }
    if (s.text) return *s.text;
    if (s.status == 429) throw RateLimited("scripted 429", s.retry_after_s);
    throw EndpointError(s.status, "scripted error");
}

// Transcripts -----------------------------------------------------------------

TranscriptStore::TranscriptStore(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::string TranscriptStore::key_for(const std::string& prompt, const GenParams& params) {
    std::ostringstream key;
    key << prompt << '\x1f' << params.max_tokens << '\x1f' << params.temperature;
    return text::hex16(text::fnv1a64(key.str()));
}

void TranscriptStore::record(const Transcript& t) const {
    json j;
    j["key"] = t.key;
    j["prompt"] = t.prompt;
    j["response"] = t.response;
    j["latency_ms"] = t.latency_ms;
    j["params"] = {{"max_tokens", t.params.max_tokens},
                   {"temperature", t.params.temperature},
                   {"timeout_ms", t.params.timeout_ms},
                   {"max_retries", t.params.max_retries}};
    j["attempts"] = json::array();
    for (const auto& a : t.attempts)
        j["attempts"].push_back(
            {{"status", a.status}, {"detail", a.detail}, {"latency_ms", a.latency_ms}});
    std::ofstream f(fs::path(dir_) / (t.key + ".json"));
    if (!f) throw IoError("cannot write transcript in " + dir_);
    f << j.dump(2) << "\n";
}

std::optional<Transcript> TranscriptStore::lookup(const std::string& key) const {
    std::ifstream f(fs::path(dir_) / (key + ".json"));
    if (!f) return std::nullopt;
    json j;
    try {
        f >> j;
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    Transcript t;
    t.key = j.value("key", key);
    t.prompt = j.value("prompt", "");
    t.response = j.value("response", "");
    t.latency_ms = j.value("latency_ms", 0.0);
    return t;
}

// Network guard ----------------------------------------------------------------

namespace {
std::atomic<bool> g_network_allowed{true};
}

void NetworkGuard::set_allowed(bool allowed) {
    g_network_allowed.store(allowed);
}

bool NetworkGuard::allowed() {
    return g_network_allowed.load();
}

// HTTP chat backend ---------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpBackendConfig cfg, const TranscriptStore* store)
    : cfg_(std::move(cfg)), store_(store) {
    if (cfg_.base_url.empty()) throw SchemaError("backend.base_url", "must be set");
}

std::string HttpChatBackend::generate(const GenRequest& req) {
    if (!NetworkGuard::allowed())
        throw EndpointError(0, "network disabled by guard; use the mock or replay backend");
    if (req.params.max_calls > 0 && calls_made_.fetch_add(1) >= req.params.max_calls)
        throw BudgetExceeded("call cap of " + std::to_string(req.params.max_calls) + " reached");
    if (req.params.max_calls == 0) calls_made_.fetch_add(1);

    json body;
    body["model"] = cfg_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.params.temperature;
    body["max_tokens"] = req.params.max_tokens;
    const std::string payload = body.dump();

    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(req.params.timeout_ms / 1000,
                                  (req.params.timeout_ms % 1000) * 1000);
    client.set_read_timeout(req.params.timeout_ms / 1000, (req.params.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    Transcript transcript;
    transcript.prompt = req.prompt;
    transcript.params = req.params;
    transcript.key = TranscriptStore::key_for(req.prompt, req.params);

    const auto t_begin = std::chrono::steady_clock::now();
    const int attempts_allowed = 1 + std::max(0, req.params.max_retries);
    for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        const auto t0 = std::chrono::steady_clock::now();
        auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();

        if (!res) {
            transcript.attempts.push_back({0, httplib::to_string(res.error()), ms});
            if (attempt + 1 >= attempts_allowed)
                throw TimeoutError("no response from " + cfg_.base_url + ": " +
                                   httplib::to_string(res.error()));
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * (attempt + 1)));
            continue;
        }
        transcript.attempts.push_back({res->status, "", ms});
        if (res->status == 200) {
            json j;
            try {
                j = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw EndpointError(200, std::string("unparsable body: ") + e.what());
            }
            if (!j.contains("choices") || j["choices"].empty())
                throw EndpointError(200, "response has no choices");
            std::string out = j["choices"][0].at("message").at("content").get<std::string>();
            transcript.response = out;
            transcript.latency_ms = std::chrono::duration<double, std::milli>(
                                        std::chrono::steady_clock::now() - t_begin)
                                        .count();
            if (store_) store_->record(transcript);
            return out;
        }
        if (res->status == 429 || res->status >= 500) {
            if (attempt + 1 >= attempts_allowed) {
                if (res->status == 429) {
                    int ra = 0;
                    if (res->has_header("Retry-After"))
                        ra = std::atoi(res->get_header_value("Retry-After").c_str());
                    throw RateLimited("rate limited after " + std::to_string(attempt + 1) +
                                          " attempts",
                                      ra);
                }
                throw EndpointError(res->status, res->body);
            }
            int wait_ms = 50 * (attempt + 1);
            if (res->status == 429 && res->has_header("Retry-After"))
                wait_ms = std::max(wait_ms,
                                   1000 * std::atoi(res->get_header_value("Retry-After").c_str()));
            std::this_thread::sleep_for(std::chrono::milliseconds(std::min(wait_ms, 10000)));
            continue;
        }
        throw EndpointError(res->status, res->body);
    }
    throw EndpointError(0, "unreachable retry state");
}

std::string ReplayBackend::generate(const GenRequest& req) {
    auto t = store_.lookup(TranscriptStore::key_for(req.prompt, req.params));
    if (!t) throw EndpointError(0, "no recorded transcript for this prompt");
    return t->response;
}

} // namespace memq::synth
