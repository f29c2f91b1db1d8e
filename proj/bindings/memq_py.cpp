// Python bindings for the main memq operations: text pipeline, corpus
// generation, ingestion/segmentation, BM25 retrieval, classification,
// re-ranking, mock synthesis and the evaluation harness.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memq/classifier.hpp"
#include "memq/corpus_gen.hpp"
#include "memq/errors.hpp"
#include "memq/evaluation.hpp"
#include "memq/rerank.hpp"
#include "memq/retriever.hpp"
#include "memq/store.hpp"
#include "memq/synthesis.hpp"
#include "memq/text.hpp"

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace memq;

namespace {

store::MemType label_from_string(const std::string& s) {
    if (s == "semantic") return store::MemType::semantic;
    if (s == "episodic") return store::MemType::episodic;
    throw SchemaError("label", "must be semantic or episodic, got " + s);
}

/// Engine wrapper owning the corpus, indexes, classifier and mock backend.
class PyEngine {
public:
    explicit PyEngine(const std::string& corpus_json) {
        std::istringstream in(corpus_json);
        engine_ = std::make_unique<eval::Engine>(store::ingest_database(in));
    }

    static PyEngine from_file(const std::string& path) {
        return PyEngine(slurp(path));
    }

    std::vector<std::string> character_ids() const {
        std::vector<std::string> out;
        for (const auto& c : engine_->db().characters()) out.push_back(c.character_id);
        return out;
    }

    std::vector<py::dict> items() const {
        std::vector<py::dict> out;
        for (const auto& it : engine_->items()) {
            py::dict d;
            d["item_id"] = it.item_id;
            d["character_id"] = it.character_id;
            d["mem_type"] = store::to_string(it.mem_type);
            d["subtype"] = store::to_string(it.subtype);
            d["text"] = it.text;
            d["provenance"] = it.provenance;
            out.push_back(std::move(d));
        }
        return out;
    }

    void train_classifier(const std::vector<std::pair<std::string, std::string>>& labeled,
                          double smoothing) {
        std::vector<cls::LabeledQuestion> data;
        for (const auto& [label, question] : labeled)
            data.push_back({question, label_from_string(label)});
        engine_->set_classifier(std::make_shared<cls::NaiveBayesClassifier>(
            cls::NaiveBayesClassifier::train(data, smoothing)));
    }

    std::pair<double, double> classify(const std::string& question) const {
        if (!engine_->classifier()) throw InsufficientData("no classifier trained");
        auto d = engine_->classifier()->classify(question);
        return {d.p_semantic, d.p_episodic};
    }

    std::vector<py::dict> retrieve(const std::string& character_id, const std::string& question,
                                   std::size_t k, bool per_type) const {
        const ir::InvertedIndex* idx = engine_->index_for(character_id);
        if (!idx) throw SchemaError("character_id", "unknown character: " + character_id);
        auto cands = per_type ? idx->retrieve_per_type(question, k) : idx->retrieve(question, k);
        return to_dicts(cands);
    }

    py::dict answer(const std::string& character_id, const std::string& question, std::size_t k,
                    double alpha, double beta, bool use_classifier) const {
        synth::MockExtractiveBackend mock;
        eval::EvalConfig cfg;
        cfg.k = k;
        cfg.alpha = alpha;
        cfg.beta = beta;
        auto trace = engine_->answer(question, character_id, mock, cfg, use_classifier);
        py::dict out;
        out["p_semantic"] = trace.dist.p_semantic;
        out["p_episodic"] = trace.dist.p_episodic;
        out["pool"] = to_dicts(trace.pool);
        out["selected"] = to_dicts(trace.selected);
        out["prompt"] = trace.prompt;
        out["response"] = trace.response;
        return out;
    }

    std::string run_eval(const std::string& qa_json, const std::string& setting,
                         const std::string& condition, std::size_t k, std::uint64_t seed) const {
        std::istringstream in(qa_json);
        auto qa = store::load_qa(in);
        store::align_references(qa, engine_->items());
        synth::MockExtractiveBackend mock;
        eval::EvalConfig cfg;
        cfg.k = k;
        cfg.seed = seed;
        eval::AblationSetting s{eval::pipeline_from_string(setting),
                                eval::condition_from_string(condition)};
        auto report = engine_->run_ablation(qa, s, mock, cfg);
        return report.to_json(cfg);
    }

private:
    static std::string slurp(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw IoError("cannot open " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    static std::vector<py::dict> to_dicts(const std::vector<ir::RankedCandidate>& cands) {
        std::vector<py::dict> out;
        for (const auto& c : cands) {
            py::dict d;
            d["item_id"] = c.item_id;
            d["raw_score"] = c.raw_score;
            d["mem_type"] = store::to_string(c.mem_type);
            if (c.composite_score)
                d["composite_score"] = *c.composite_score;
            else
                d["composite_score"] = py::none();
            out.push_back(std::move(d));
        }
        return out;
    }

    std::unique_ptr<eval::Engine> engine_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "memq: classification-weighted memory retrieval and synthesis engine";

    py::register_exception<Error>(m, "MemqError");

    m.def("normalize", [](const std::string& s) { return text::normalize(s); },
          py::arg("text"), "Canonical normalization: width fold, lowercase, whitespace collapse");
    m.def(
        "tokenize",
        [](const std::string& s) { return text::tokenize_normalized(s).tokens; },
        py::arg("text"), "Normalize and tokenize: Latin word tokens, CJK unigrams + bigrams");

    m.def(
        "composite_score",
        [](double p, double s, double alpha, double beta) {
            rr::RerankConfig cfg;
            cfg.alpha = alpha;
            cfg.beta = beta;
            return rr::composite_score(p, s, cfg);
        },
        py::arg("p"), py::arg("s"), py::arg("alpha") = 0.5, py::arg("beta") = 0.5,
        "alpha * p + beta * sigmoid(s)");

    m.def(
        "em_count",
        [](const std::string& response, const std::vector<std::string>& anchors) {
            return eval::em_count(response, anchors);
        },
        py::arg("response"), py::arg("anchors"),
        "Distinct anchors occurring as substrings of the normalized response");

    m.def(
        "map_memory_anchors",
        [](const std::vector<std::string>& responses,
           const std::vector<std::vector<std::string>>& anchors) {
            std::vector<store::QAItem> qa(anchors.size());
            for (std::size_t i = 0; i < anchors.size(); ++i)
                for (const auto& a : anchors[i]) qa[i].anchors.push_back({a, 0, 0});
            return eval::map_memory_anchors(responses, qa).map;
        },
        py::arg("responses"), py::arg("anchors"),
        "Mean fraction of anchors found per response; zero-anchor rows excluded");

    m.def(
        "recall_at_k",
        [](const std::vector<std::vector<std::string>>& retrieved,
           const std::vector<std::vector<std::string>>& gold, std::size_t k) {
            return eval::recall_at_k(retrieved, gold, k);
        },
        py::arg("retrieved"), py::arg("gold"), py::arg("k"));

    m.def(
        "mock_generate",
        [](const std::string& question, const std::vector<std::string>& memories) {
            return synth::mock_extractive_generate(question, memories);
        },
        py::arg("question"), py::arg("memories"),
        "Deterministic extractive mock: top memory truncated, or a fixed refusal");

    m.def(
        "generate_corpus",
        [](std::uint64_t seed, int n_characters, int relationships, int events,
           int dialogues_per_event, int turns, int qa_per_char, int anchors) {
            gen::GenSpec spec;
            spec.seed = seed;
            spec.n_characters = n_characters;
            spec.relationships_per_char = relationships;
            spec.events_per_char = events;
            spec.dialogues_per_event = dialogues_per_event;
            spec.turns_per_dialogue = turns;
            spec.qa_per_char = qa_per_char;
            spec.anchor_per_qa = anchors;
            auto corpus = gen::generate_corpus(spec);
            std::ostringstream questions;
            for (const auto& q : corpus.questions)
                questions << store::to_string(q.label) << "\t" << q.question << "\n";
            py::dict out;
            out["corpus_json"] = store::serialize_database(corpus.db);
            out["qa_json"] = store::serialize_qa(corpus.qa);
            out["questions_tsv"] = questions.str();
            return out;
        },
        py::arg("seed") = 42, py::arg("n_characters") = 5, py::arg("relationships") = 9,
        py::arg("events") = 6, py::arg("dialogues_per_event") = 1, py::arg("turns") = 4,
        py::arg("qa_per_char") = 24, py::arg("anchors") = 3,
        "Deterministic synthetic corpus; returns corpus_json, qa_json, questions_tsv");

    py::class_<PyEngine>(m, "Engine")
        .def(py::init<const std::string&>(), py::arg("corpus_json"))
        .def_static("from_file", &PyEngine::from_file, py::arg("path"))
        .def("character_ids", &PyEngine::character_ids)
        .def("items", &PyEngine::items)
        .def("train_classifier", &PyEngine::train_classifier, py::arg("labeled"),
             py::arg("smoothing") = 1.0,
             "Train the naive-Bayes question classifier from (label, question) pairs")
        .def("classify", &PyEngine::classify, py::arg("question"),
             "Returns (p_semantic, p_episodic)")
        .def("retrieve", &PyEngine::retrieve, py::arg("character_id"), py::arg("question"),
             py::arg("k") = 3, py::arg("per_type") = false)
        .def("answer", &PyEngine::answer, py::arg("character_id"), py::arg("question"),
             py::arg("k") = 3, py::arg("alpha") = 0.5, py::arg("beta") = 0.5,
             py::arg("use_classifier") = true,
             "Classify, retrieve per type, re-rank, prompt the mock backend")
        .def("run_eval", &PyEngine::run_eval, py::arg("qa_json"), py::arg("setting"),
             py::arg("condition"), py::arg("k") = 3, py::arg("seed") = 42,
             "Run one ablation cell with the mock backend; returns the report JSON");
}
