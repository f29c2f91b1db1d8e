#ifndef MEMQ_EVALUATION_HPP
#define MEMQ_EVALUATION_HPP

#include "memq/classifier.hpp"
#include "memq/rerank.hpp"
#include "memq/retriever.hpp"
#include "memq/store.hpp"
#include "memq/synthesis.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace memq::eval {

// Metrics ---------------------------------------------------------------------

/// Fraction of questions whose top-k retrieved set intersects its gold set.
/// Questions with an empty gold set are excluded from the denominator.
double recall_at_k(const std::vector<std::vector<std::string>>& retrieved,
                   const std::vector<std::vector<std::string>>& gold, std::size_t k);

/// Number of distinct anchors whose normalized text occurs as a contiguous
/// substring of the normalized response.
int em_count(const std::string& response, const std::vector<std::string>& anchors);

/// Distinct-anchor count used as the per-question MAP denominator.
int distinct_anchor_count(const std::vector<std::string>& anchors);

struct MapResult {
    double map = 0.0;
    std::size_t scored = 0;             // N
    std::size_t excluded_no_anchor = 0; // zero-anchor questions
};

/// Mean over questions of em_count/distinct anchors; zero-anchor questions are
/// excluded from N and reported. Throws NoScorableQuestions if all excluded.
MapResult map_memory_anchors(const std::vector<std::string>& responses,
                             const std::vector<store::QAItem>& qa);

// Ablation harness ---------------------------------------------------------------

enum class Pipeline { W_MC_R, Wo_MC_W_R, Wo_MC_R };
enum class MemoryCondition { NR, IR, CR, RETRIEVED };

std::string to_string(Pipeline p);
std::string to_string(MemoryCondition c);
Pipeline pipeline_from_string(const std::string& s);
MemoryCondition condition_from_string(const std::string& s);

struct AblationSetting {
    Pipeline pipeline = Pipeline::W_MC_R;
    MemoryCondition condition = MemoryCondition::RETRIEVED;
};

struct EvalConfig {
    std::size_t k = 3;
    double alpha = 0.5;
    double beta = 0.5;
    bool classify_memory_text = false;
    std::uint64_t seed = 42;
    std::vector<std::size_t> recall_ks = {1, 2, 3, 5};
    int word_limit = synth::kDefaultWordLimit;
    synth::GenParams gen_params;
};

struct PerQuestion {
    std::string qa_id;
    std::vector<std::string> retrieved;    // ranking used for recall
    std::vector<std::string> prompt_items; // items shown to the generator
    std::string response;
    int anchors_hit = 0;
    int anchors_total = 0;
    bool generation_failed = false;
};

struct StageTiming {
    double mean_ms = 0.0;
    double p95_ms = 0.0;
};

struct EvalReport {
    AblationSetting setting;
    std::string backend_name;
    std::string input_fingerprint; // corpus+qa content hash
    std::size_t n_questions = 0;   // MAP denominator
    std::size_t excluded_no_anchor = 0;
    std::size_t excluded_unaligned = 0;
    std::size_t failed_generations = 0;
    std::map<std::size_t, double> recall;
    double map_score = 0.0;
    std::optional<cls::ClassMetrics> classification_metrics;
    std::map<std::string, StageTiming> latency;
    std::vector<PerQuestion> per_question; // ascending qa_id

    /// Canonical serialization. Timing is excluded by default so reports are
    /// byte-identical across reruns; pass include_timing for the sidecar.
    std::string to_json(const EvalConfig& cfg, bool include_timing = false) const;
    std::string to_table(const EvalConfig& cfg) const;
};

/// Owns the immutable evaluation state: database, segmented items,
/// per-character BM25 indexes and the optional question classifier.
class Engine {
public:
    explicit Engine(store::MemoryDatabase db);

    void set_classifier(std::shared_ptr<cls::QuestionClassifier> c) { classifier_ = std::move(c); }
    const cls::QuestionClassifier* classifier() const { return classifier_.get(); }

    const store::MemoryDatabase& db() const { return db_; }
    const std::vector<store::MemoryItem>& items() const { return items_; }
    const ir::InvertedIndex* index_for(const std::string& character_id) const;
    const store::MemoryItem* item(const std::string& item_id) const;

    struct AnswerTrace {
        cls::ClassDistribution dist;
        bool classified = false;
        std::vector<ir::RankedCandidate> pool;     // 2k per-type pool
        std::vector<ir::RankedCandidate> selected; // top-k by composite score
        std::string prompt;
        std::string response;
    };

    /// End-to-end single question: classify, per-type retrieve, re-rank,
    /// build prompt, generate. With use_classifier=false a uniform
    /// distribution is used and ranking degrades to raw retrieval order.
    AnswerTrace answer(const std::string& question, const std::string& character_id,
                       synth::GenerationBackend& backend, const EvalConfig& cfg,
                       bool use_classifier = true) const;

    /// Run one (pipeline, condition) cell over the QA set. Generation failures
    /// are isolated per question: the question scores 0 and is flagged.
    EvalReport run_ablation(const std::vector<store::QAItem>& qa, const AblationSetting& setting,
                            synth::GenerationBackend& backend, const EvalConfig& cfg,
                            const std::vector<cls::LabeledQuestion>* classifier_test = nullptr) const;

private:
    std::vector<store::MemoryItem> select_memories(const store::QAItem& qa,
                                                   const AblationSetting& setting,
                                                   const EvalConfig& cfg,
                                                   std::vector<std::string>& retrieved_ids,
                                                   std::vector<std::string>& prompt_ids,
                                                   double& classify_ms, double& retrieve_ms) const;

    store::MemoryDatabase db_;
    std::vector<store::MemoryItem> items_;
    std::map<std::string, ir::InvertedIndex> indexes_;
    std::unordered_map<std::string, const store::MemoryItem*> items_by_id_;
    std::shared_ptr<cls::QuestionClassifier> classifier_;
    synth::PromptTemplate prompt_template_ = synth::PromptTemplate::answer_template();
};

// LLM-judge adapter (optional; never part of offline acceptance) -----------------

struct JudgeScores {
    std::optional<double> correctness; // [0,1]
    std::optional<double> coherence;   // [0,1]
    bool parsed() const { return correctness.has_value() && coherence.has_value(); }
};

/// Asks the backend to grade a response on a 0-10 rubric and normalizes to
/// [0,1]; unparsable output yields missing scores rather than an error.
JudgeScores judge_adapter(const std::string& question, const std::string& response,
                          const std::string& gold_answer, synth::GenerationBackend& backend,
                          const synth::GenParams& params = {});

} // namespace memq::eval

#endif
