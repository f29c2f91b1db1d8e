#include "memq/evaluation.hpp"

#include "memq/errors.hpp"
#include "memq/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

using nlohmann::json;

namespace memq::eval {

double recall_at_k(const std::vector<std::vector<std::string>>& retrieved,
                   const std::vector<std::vector<std::string>>& gold, std::size_t k) {
    if (retrieved.size() != gold.size())
        throw SchemaError("recall_at_k", "retrieved and gold must be parallel");
    std::size_t scored = 0, hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i].empty()) continue;
        ++scored;
        std::set<std::string> gold_set(gold[i].begin(), gold[i].end());
        std::size_t upto = std::min(k, retrieved[i].size());
        for (std::size_t r = 0; r < upto; ++r) {
            if (gold_set.count(retrieved[i][r])) {
                ++hits;
                break;
            }
        }
    }
    return scored == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(scored);
}

namespace {

std::set<std::string> normalized_anchor_set(const std::vector<std::string>& anchors) {
    std::set<std::string> out;
    for (const auto& a : anchors) {
        std::string n = text::normalize(a);
        if (!n.empty()) out.insert(std::move(n));
    }
    return out;
}

} // namespace

int em_count(const std::string& response, const std::vector<std::string>& anchors) {
    const std::string norm_response = text::normalize(response);
    int hits = 0;
    for (const auto& a : normalized_anchor_set(anchors))
        if (norm_response.find(a) != std::string::npos) ++hits;
    return hits;
}

int distinct_anchor_count(const std::vector<std::string>& anchors) {
    return static_cast<int>(normalized_anchor_set(anchors).size());
}

MapResult map_memory_anchors(const std::vector<std::string>& responses,
                             const std::vector<store::QAItem>& qa) {
    if (responses.size() != qa.size())
        throw SchemaError("map_memory_anchors", "responses and qa must be parallel");
    MapResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < qa.size(); ++i) {
        std::vector<std::string> anchor_texts;
        for (const auto& a : qa[i].anchors) anchor_texts.push_back(a.text);
        int total = distinct_anchor_count(anchor_texts);
        if (total == 0) {
            ++r.excluded_no_anchor;
            continue;
        }
        sum += static_cast<double>(em_count(responses[i], anchor_texts)) /
               static_cast<double>(total);
        ++r.scored;
    }
    if (r.scored == 0) throw NoScorableQuestions();
    r.map = sum / static_cast<double>(r.scored);
    return r;
}

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::W_MC_R: return "w-mc+r";
        case Pipeline::Wo_MC_W_R: return "wo-mc+w-r";
        case Pipeline::Wo_MC_R: return "wo-mc+r";
    }
    return "w-mc+r";
}

std::string to_string(MemoryCondition c) {
    switch (c) {
        case MemoryCondition::NR: return "nr";
        case MemoryCondition::IR: return "ir";
        case MemoryCondition::CR: return "cr";
        case MemoryCondition::RETRIEVED: return "retrieved";
    }
    return "retrieved";
}

Pipeline pipeline_from_string(const std::string& s) {
    if (s == "w-mc+r") return Pipeline::W_MC_R;
    if (s == "wo-mc+w-r") return Pipeline::Wo_MC_W_R;
    if (s == "wo-mc+r") return Pipeline::Wo_MC_R;
    throw SchemaError("setting", "unknown pipeline setting: " + s);
}

MemoryCondition condition_from_string(const std::string& s) {
    if (s == "nr") return MemoryCondition::NR;
    if (s == "ir") return MemoryCondition::IR;
    if (s == "cr") return MemoryCondition::CR;
    if (s == "retrieved") return MemoryCondition::RETRIEVED;
    throw SchemaError("condition", "unknown memory condition: " + s);
}

// Engine ------------------------------------------------------------------------

Engine::Engine(store::MemoryDatabase db) : db_(std::move(db)) {
    items_ = store::segment_memories(db_);
    std::unordered_map<std::string, std::vector<store::MemoryItem>> by_char;
    for (const auto& it : items_) by_char[it.character_id].push_back(it);
    for (auto& [cid, list] : by_char) indexes_.emplace(cid, ir::InvertedIndex::build(list));
    for (const auto& it : items_) items_by_id_[it.item_id] = &it;
}

const ir::InvertedIndex* Engine::index_for(const std::string& character_id) const {
    auto it = indexes_.find(character_id);
    return it == indexes_.end() ? nullptr : &it->second;
}

const store::MemoryItem* Engine::item(const std::string& item_id) const {
    auto it = items_by_id_.find(item_id);
    return it == items_by_id_.end() ? nullptr : it->second;
}

namespace {

rr::RerankConfig rerank_config(const EvalConfig& cfg) {
    rr::RerankConfig rc;
    rc.alpha = cfg.alpha;
    rc.beta = cfg.beta;
    rc.k = cfg.k;
    rc.classify_memory_text = cfg.classify_memory_text;
    return rc;
}

/// Per-candidate probability: the query distribution's component for the
/// candidate's type, or (literal mode) the classifier run on the memory text.
std::vector<double> candidate_probs(const std::vector<ir::RankedCandidate>& pool,
                                    const cls::ClassDistribution& dist,
                                    const cls::QuestionClassifier* clf, bool classify_memory_text,
                                    const Engine& eng) {
    std::vector<double> probs;
    probs.reserve(pool.size());
    for (const auto& c : pool) {
        if (classify_memory_text && clf) {
            const store::MemoryItem* it = eng.item(c.item_id);
            probs.push_back(clf->classify(it ? it->text : "").prob_of(dist.argmax()));
        } else {
            probs.push_back(dist.prob_of(c.mem_type));
        }
    }
    return probs;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

Engine::AnswerTrace Engine::answer(const std::string& question, const std::string& character_id,
                                   synth::GenerationBackend& backend, const EvalConfig& cfg,
                                   bool use_classifier) const {
    const ir::InvertedIndex* idx = index_for(character_id);
    if (!idx) throw SchemaError("character_id", "unknown character: " + character_id);

    AnswerTrace trace;
    if (use_classifier && classifier_) {
        trace.dist = classifier_->classify(question);
        trace.classified = true;
    }
    trace.pool = idx->retrieve_per_type(question, cfg.k);
    auto probs = candidate_probs(trace.pool, trace.dist, classifier_.get(),
                                 cfg.classify_memory_text && trace.classified, *this);
    auto rcfg = rerank_config(cfg);
    for (std::size_t i = 0; i < trace.pool.size(); ++i)
        trace.pool[i].composite_score =
            rr::composite_score(probs[i], trace.pool[i].raw_score, rcfg);
    trace.selected = rr::rerank_with_probs(trace.pool, probs, rcfg, cfg.k);

    std::vector<store::MemoryItem> memories;
    std::vector<std::string> memory_texts;
    for (const auto& c : trace.selected) {
        if (const store::MemoryItem* it = item(c.item_id)) {
            memories.push_back(*it);
            memory_texts.push_back(it->text);
        }
    }
    trace.prompt = synth::build_prompt(prompt_template_, question, memories, cfg.word_limit);
    synth::GenRequest req{trace.prompt, question, memory_texts, cfg.gen_params};
    trace.response = backend.generate(req);
    return trace;
}

std::vector<store::MemoryItem> Engine::select_memories(const store::QAItem& qa,
                                                       const AblationSetting& setting,
                                                       const EvalConfig& cfg,
                                                       std::vector<std::string>& retrieved_ids,
                                                       std::vector<std::string>& prompt_ids,
                                                       double& classify_ms,
                                                       double& retrieve_ms) const {
    std::vector<store::MemoryItem> memories;
    auto push_item = [this, &memories, &prompt_ids](const std::string& id) {
        if (const store::MemoryItem* it = item(id)) {
            memories.push_back(*it);
            prompt_ids.push_back(id);
        }
    };

    switch (setting.condition) {
        case MemoryCondition::NR:
            return memories;
        case MemoryCondition::CR:
            for (const auto& id : qa.reference_item_ids) push_item(id);
            return memories;
        case MemoryCondition::IR: {
            // The most confusable wrong memory: top-ranked non-reference item
            // of the same character; seeded pick from another character when
            // the whole corpus is referenced.
            const ir::InvertedIndex* idx = index_for(qa.character_id);
            if (!idx) return memories;
            std::set<std::string> refs(qa.reference_item_ids.begin(),
                                       qa.reference_item_ids.end());
            auto t0 = std::chrono::steady_clock::now();
            auto ranked = idx->retrieve(qa.question, refs.size() + 1);
            retrieve_ms += elapsed_ms(t0);
            for (const auto& c : ranked) {
                if (!refs.count(c.item_id)) {
                    push_item(c.item_id);
                    return memories;
                }
            }
            std::vector<std::string> other_chars;
            for (const auto& [cid, index] : indexes_)
                if (cid != qa.character_id) other_chars.push_back(cid);
            std::sort(other_chars.begin(), other_chars.end());
            if (other_chars.empty()) return memories;
            std::uint64_t h = cfg.seed ^ text::fnv1a64(qa.qa_id);
            const auto& chosen = indexes_.at(other_chars[h % other_chars.size()]);
            auto ids = chosen.item_ids();
            push_item(ids[(h >> 16) % ids.size()]);
            return memories;
        }
        case MemoryCondition::RETRIEVED:
            break;
    }

    if (setting.pipeline == Pipeline::Wo_MC_R) return memories; // bare generator

    const ir::InvertedIndex* idx = index_for(qa.character_id);
    if (!idx) return memories;
    std::size_t max_k = cfg.k;
    for (std::size_t k : cfg.recall_ks) max_k = std::max(max_k, k);

    if (setting.pipeline == Pipeline::Wo_MC_W_R) {
        auto t0 = std::chrono::steady_clock::now();
        auto ranked = idx->retrieve(qa.question, max_k);
        retrieve_ms += elapsed_ms(t0);
        for (const auto& c : ranked) retrieved_ids.push_back(c.item_id);
        for (std::size_t i = 0; i < std::min(cfg.k, ranked.size()); ++i)
            push_item(ranked[i].item_id);
        return memories;
    }

    // W_MC_R: classify, per-type pool, composite re-rank over the whole pool.
    if (!classifier_)
        throw InsufficientData("pipeline w-mc+r requires a trained classifier");
    auto t0 = std::chrono::steady_clock::now();
    cls::ClassDistribution dist = classifier_->classify(qa.question);
    classify_ms += elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    auto pool = idx->retrieve_per_type(qa.question, std::max(cfg.k, max_k));
    auto probs =
        candidate_probs(pool, dist, classifier_.get(), cfg.classify_memory_text, *this);
    auto ranked = rr::rerank_with_probs(pool, probs, rerank_config(cfg), pool.size());
    retrieve_ms += elapsed_ms(t0);

    for (const auto& c : ranked) retrieved_ids.push_back(c.item_id);
    for (std::size_t i = 0; i < std::min(cfg.k, ranked.size()); ++i)
        push_item(ranked[i].item_id);
    return memories;
}

namespace {

StageTiming summarize(std::vector<double>& samples) {
    StageTiming t;
    if (samples.empty()) return t;
    double sum = 0.0;
    for (double s : samples) sum += s;
    t.mean_ms = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(samples.size())));
    t.p95_ms = samples[std::min(samples.size() - 1, idx == 0 ? 0 : idx - 1)];
    return t;
}

} // namespace

EvalReport Engine::run_ablation(const std::vector<store::QAItem>& qa_in,
                                const AblationSetting& setting,
                                synth::GenerationBackend& backend, const EvalConfig& cfg,
                                const std::vector<cls::LabeledQuestion>* classifier_test) const {
    std::vector<store::QAItem> qa = qa_in;
    std::sort(qa.begin(), qa.end(),
              [](const store::QAItem& a, const store::QAItem& b) { return a.qa_id < b.qa_id; });

    EvalReport report;
    report.setting = setting;
    report.backend_name = backend.name();
    {
        std::string fp = store::serialize_qa(qa);
        for (const auto& c : db_.characters()) fp += c.character_id;
        report.input_fingerprint = text::hex16(text::fnv1a64(fp));
    }

    struct RowTiming {
        double classify = 0, retrieve = 0, synthesize = 0;
    };
    std::vector<PerQuestion> rows(qa.size());
    std::vector<RowTiming> row_times(qa.size());

    auto work_one = [&](std::size_t i) {
        const store::QAItem& q = qa[i];
        PerQuestion row;
        row.qa_id = q.qa_id;
        RowTiming rt;
        std::vector<store::MemoryItem> memories = select_memories(
            q, setting, cfg, row.retrieved, row.prompt_items, rt.classify, rt.retrieve);

        std::vector<std::string> memory_texts;
        memory_texts.reserve(memories.size());
        for (const auto& m : memories) memory_texts.push_back(m.text);
        std::string prompt =
            synth::build_prompt(prompt_template_, q.question, memories, cfg.word_limit);

        auto t0 = std::chrono::steady_clock::now();
        try {
            synth::GenRequest req{prompt, q.question, memory_texts, cfg.gen_params};
            row.response = backend.generate(req);
        } catch (const BackendError& e) {
            row.generation_failed = true;
            row.response.clear();
        }
        rt.synthesize = elapsed_ms(t0);

        std::vector<std::string> anchor_texts;
        for (const auto& a : q.anchors) anchor_texts.push_back(a.text);
        row.anchors_total = distinct_anchor_count(anchor_texts);
        row.anchors_hit = row.anchors_total == 0 ? 0 : em_count(row.response, anchor_texts);
        rows[i] = std::move(row);
        row_times[i] = rt;
    };

    const int workers = std::max(1, std::min<int>(backend.max_concurrency(),
                                                  static_cast<int>(qa.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < qa.size(); ++i) work_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < qa.size(); i = next.fetch_add(1))
                    work_one(i);
            });
        for (auto& t : pool) t.join();
    }

    // Aggregate in qa_id order (rows are already sorted by construction).
    double map_sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const PerQuestion& row = rows[i];
        if (row.generation_failed) ++report.failed_generations;
        if (row.anchors_total == 0) {
            ++report.excluded_no_anchor;
        } else {
            map_sum += static_cast<double>(row.anchors_hit) /
                       static_cast<double>(row.anchors_total);
            ++report.n_questions;
        }
    }
    report.map_score =
        report.n_questions == 0 ? 0.0 : map_sum / static_cast<double>(report.n_questions);

    const bool has_retrieval = setting.condition == MemoryCondition::RETRIEVED &&
                               setting.pipeline != Pipeline::Wo_MC_R;
    if (has_retrieval) {
        std::vector<std::vector<std::string>> retrieved, gold;
        for (std::size_t i = 0; i < qa.size(); ++i) {
            if (qa[i].reference_item_ids.empty()) {
                ++report.excluded_unaligned;
                continue;
            }
            retrieved.push_back(rows[i].retrieved);
            gold.push_back(qa[i].reference_item_ids);
        }
        for (std::size_t k : cfg.recall_ks)
            report.recall[k] = recall_at_k(retrieved, gold, k);
    }

    if (classifier_test && classifier_ && setting.pipeline == Pipeline::W_MC_R)
        report.classification_metrics = cls::evaluate_classifier(*classifier_, *classifier_test);

    std::vector<double> cl, re, sy;
    for (const auto& rt : row_times) {
        cl.push_back(rt.classify);
        re.push_back(rt.retrieve);
        sy.push_back(rt.synthesize);
    }
    report.latency["classify"] = summarize(cl);
    report.latency["retrieve"] = summarize(re);
    report.latency["synthesize"] = summarize(sy);

    report.per_question = std::move(rows);
    return report;
}

// Serialization -------------------------------------------------------------------

namespace {

json metrics_to_json(const cls::ClassMetrics& m) {
    auto per = [](const cls::PerClassMetrics& p) {
        return json{{"precision", p.precision},
                    {"recall", p.recall},
                    {"f1", p.f1},
                    {"support", p.support}};
    };
    return json{{"precision", m.precision}, {"recall", m.recall},
                {"f1", m.f1},               {"accuracy", m.accuracy},
                {"n", m.n},                 {"semantic", per(m.semantic)},
                {"episodic", per(m.episodic)}};
}

} // namespace

std::string EvalReport::to_json(const EvalConfig& cfg, bool include_timing) const {
    json j;
    j["format_version"] = 1;
    j["setting"] = {{"pipeline", eval::to_string(setting.pipeline)},
                    {"condition", eval::to_string(setting.condition)}};
    j["backend"] = backend_name;
    j["input_fingerprint"] = input_fingerprint;
    j["config"] = {{"k", cfg.k},
                   {"alpha", cfg.alpha},
                   {"beta", cfg.beta},
                   {"seed", cfg.seed},
                   {"recall_ks", cfg.recall_ks},
                   {"word_limit", cfg.word_limit},
                   {"classify_memory_text", cfg.classify_memory_text}};
    j["n_questions"] = n_questions;
    j["excluded_no_anchor"] = excluded_no_anchor;
    j["excluded_unaligned"] = excluded_unaligned;
    j["failed_generations"] = failed_generations;
    j["map"] = map_score;
    j["recall_at_k"] = json::object();
    for (const auto& [k, v] : recall) j["recall_at_k"][std::to_string(k)] = v;
    if (classification_metrics)
        j["classification_metrics"] = metrics_to_json(*classification_metrics);
    if (include_timing) {
        j["latency_ms"] = json::object();
        for (const auto& [stage, t] : latency)
            j["latency_ms"][stage] = {{"mean", t.mean_ms}, {"p95", t.p95_ms}};
    }
    j["per_question"] = json::array();
    for (const auto& row : per_question)
        j["per_question"].push_back({{"qa_id", row.qa_id},
                                     {"retrieved", row.retrieved},
                                     {"prompt_items", row.prompt_items},
                                     {"response", row.response},
                                     {"anchors_hit", row.anchors_hit},
                                     {"anchors_total", row.anchors_total},
                                     {"failed", row.generation_failed}});
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table(const EvalConfig& cfg) const {
    std::ostringstream os;
    os << std::left << std::setw(12) << "setting" << std::setw(11) << "condition"
       << std::setw(7) << "n" << std::setw(8) << "map";
    for (const auto& [k, v] : recall) os << std::setw(8) << ("r@" + std::to_string(k));
    os << "\n";
    os << std::setw(12) << eval::to_string(setting.pipeline) << std::setw(11)
       << eval::to_string(setting.condition) << std::setw(7) << n_questions;
    os << std::setw(8) << std::fixed << std::setprecision(3) << map_score;
    for (const auto& [k, v] : recall) os << std::setw(8) << v;
    os << "\n";
    if (classification_metrics) {
        const auto& m = *classification_metrics;
        os << "classifier (weighted): p=" << m.precision << " r=" << m.recall
           << " f1=" << m.f1 << " acc=" << m.accuracy << " n=" << m.n << "\n";
    }
    os << "k=" << cfg.k << " alpha=" << cfg.alpha << " beta=" << cfg.beta
       << " seed=" << cfg.seed << " backend=" << backend_name << "\n";
    return os.str();
}

// Judge adapter ----------------------------------------------------------------

JudgeScores judge_adapter(const std::string& question, const std::string& response,
                          const std::string& gold_answer, synth::GenerationBackend& backend,
                          const synth::GenParams& params) {
    std::ostringstream prompt;
    prompt << "Grade the candidate answer against the reference answer.\n"
           << "Question: " << question << "\n"
           << "Reference answer: " << gold_answer << "\n"
           << "Candidate answer: " << response << "\n"
           << "Reply with JSON only: {\"correctness\": <0-10>, \"coherence\": <0-10>}";
    synth::GenRequest req{prompt.str(), question, {}, params};
    std::string raw = backend.generate(req);

    JudgeScores scores;
    auto clamp01 = [](double v) { return std::max(0.0, std::min(1.0, v)); };
    try {
        json j = json::parse(raw);
        if (j.contains("correctness") && j["correctness"].is_number())
            scores.correctness = clamp01(j["correctness"].get<double>() / 10.0);
        if (j.contains("coherence") && j["coherence"].is_number())
            scores.coherence = clamp01(j["coherence"].get<double>() / 10.0);
        return scores;
    } catch (const json::parse_error&) {
        // fall through to a lenient scan
    }
    auto scan = [&raw, &clamp01](const std::string& key) -> std::optional<double> {
        auto pos = raw.find(key);
        if (pos == std::string::npos) return std::nullopt;
        pos += key.size();
        while (pos < raw.size() && (raw[pos] == ':' || raw[pos] == ' ' || raw[pos] == '=' ||
                                    raw[pos] == '"'))
            ++pos;
        std::size_t end = pos;
        while (end < raw.size() && (std::isdigit(static_cast<unsigned char>(raw[end])) ||
                                    raw[end] == '.'))
            ++end;
        if (end == pos) return std::nullopt;
        try {
            return clamp01(std::stod(raw.substr(pos, end - pos)) / 10.0);
        } catch (...) {
            return std::nullopt;
        }
    };
    scores.correctness = scan("correctness");
    scores.coherence = scan("coherence");
    return scores;
}

} // namespace memq::eval
