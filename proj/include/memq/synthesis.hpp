#ifndef MEMQ_SYNTHESIS_HPP
#define MEMQ_SYNTHESIS_HPP

#include "memq/store.hpp"

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace memq::synth {

/// Prompt template with {question}, {memories} and {word_limit} placeholders,
/// each required exactly once.
struct PromptTemplate {
    std::string template_id;
    std::string body;

    static PromptTemplate answer_template(); // shipped default, versioned
    void validate() const;                   // throws TemplateError
};

constexpr int kDefaultWordLimit = 50;

/// Render the prompt: memories as a numbered list in rank order, each
/// prefixed with its subtype tag; an explicit marker when none are provided.
std::string build_prompt(const PromptTemplate& tmpl, const std::string& question,
                         const std::vector<store::MemoryItem>& memories,
                         int word_limit = kDefaultWordLimit);

struct GenParams {
    int max_tokens = 256;
    double temperature = 0.0; // deterministic by default
    int timeout_ms = 30000;
    int max_retries = 3;
    int max_calls = 0; // 0 = unlimited; exceeded -> BudgetExceeded
};

/// What a backend sees per call. Remote backends use the rendered prompt;
/// the offline mock uses the structured question + ranked memory texts.
struct GenRequest {
    std::string prompt;
    std::string question;
    std::vector<std::string> memory_texts; // rank order
    GenParams params;
};

struct Attempt {
    int status = 0; // HTTP status, or 0 for transport errors
    std::string detail;
    double latency_ms = 0.0;
};

struct Transcript {
    std::string key; // content address of (prompt, params)
    std::string prompt;
    std::string response;
    double latency_ms = 0.0;
    std::vector<Attempt> attempts;
    GenParams params;
};

/// Content-addressed transcript persistence for record/replay.
class TranscriptStore {
public:
    explicit TranscriptStore(std::string dir);
    static std::string key_for(const std::string& prompt, const GenParams& params);
    void record(const Transcript& t) const;
    std::optional<Transcript> lookup(const std::string& key) const;
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
};

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    /// Returns response text or throws a BackendError subtype. Must respect
    /// the request timeout.
    virtual std::string generate(const GenRequest& req) = 0;
    virtual std::string name() const = 0;
    virtual int max_concurrency() const { return 1; }
};

/// Deterministic offline answerer: echoes the top-ranked memory, truncated to
/// 50 words / 100 CJK characters; fixed refusal string with no memories.
std::string mock_extractive_generate(const std::string& question,
                                     const std::vector<std::string>& ranked_memory_texts);

extern const char* const kMockRefusal;

class MockExtractiveBackend : public GenerationBackend {
public:
    std::string generate(const GenRequest& req) override;
    std::string name() const override { return "mock"; }
};

/// Test double: replays a queue of scripted outcomes (text or error).
class ScriptedBackend : public GenerationBackend {
public:
    struct Step {
        std::optional<std::string> text; // nullopt -> throw
        int status = 0;                  // 429 -> RateLimited, else EndpointError
        int retry_after_s = 0;
    };

    void push_text(std::string text);
    void push_error(int status, int retry_after_s = 0);
    std::string generate(const GenRequest& req) override;
    std::string name() const override { return "scripted"; }
    std::size_t calls() const { return calls_; }

private:
    std::mutex mu_;
    std::deque<Step> steps_;
    std::atomic<std::size_t> calls_{0};
};

/// Process-wide switch tests use to prove the offline paths never touch the
/// network. The HTTP backend refuses to run while disallowed.
class NetworkGuard {
public:
    static void set_allowed(bool allowed);
    static bool allowed();
};

struct HttpBackendConfig {
    std::string base_url;           // e.g. http://host:port
    std::string model;              // forwarded verbatim
    std::string api_key_env = "MEMQ_API_KEY";
    int max_concurrency = 4;
};

/// Chat-completions wire format: POST {base_url}/v1/chat/completions with a
/// bearer token; retries on 429 (honoring Retry-After) and transport errors.
class HttpChatBackend : public GenerationBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig cfg, const TranscriptStore* store = nullptr);
    std::string generate(const GenRequest& req) override;
    std::string name() const override { return "http:" + cfg_.model; }
    int max_concurrency() const override { return cfg_.max_concurrency; }

private:
    HttpBackendConfig cfg_;
    const TranscriptStore* store_;
    std::atomic<int> calls_made_{0};
};

/// Replays recorded transcripts; fails on any request it has not seen.
class ReplayBackend : public GenerationBackend {
public:
    explicit ReplayBackend(const TranscriptStore& store) : store_(store) {}
    std::string generate(const GenRequest& req) override;
    std::string name() const override { return "replay"; }

private:
    const TranscriptStore& store_;
};

} // namespace memq::synth

#endif
