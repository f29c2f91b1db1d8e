// memq - classification-weighted memory retrieval QA engine.
//
// Subcommands: gen | ingest | index {build,query} | classifier {train,eval} |
//              retrieve | answer | eval | ablate
// Exit codes: 0 ok, 2 config error, 3 missing artifacts, 4 backend failure.

#include "memq/classifier.hpp"
#include "memq/corpus_gen.hpp"
#include "memq/dense.hpp"
#include "memq/errors.hpp"
#include "memq/evaluation.hpp"
#include "memq/rerank.hpp"
#include "memq/retriever.hpp"
#include "memq/store.hpp"
#include "memq/synthesis.hpp"
#include "memq/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memq;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitBackend = 4;

struct CliError {
    int code;
    std::string message;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << content;
}

std::vector<cls::LabeledQuestion> load_labeled_questions(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open question file: " + path);
    std::vector<cls::LabeledQuestion> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw SchemaError(path + ":" + std::to_string(lineno),
                              "expected 'label<TAB>question'");
        std::string label = line.substr(0, tab);
        cls::LabeledQuestion q;
        q.question = line.substr(tab + 1);
        if (label == "semantic")
            q.label = store::MemType::semantic;
        else if (label == "episodic")
            q.label = store::MemType::episodic;
        else
            throw SchemaError(path + ":" + std::to_string(lineno),
                              "label must be semantic or episodic, got " + label);
        out.push_back(std::move(q));
    }
    return out;
}

std::string questions_to_tsv(const std::vector<cls::LabeledQuestion>& questions) {
    std::ostringstream os;
    for (const auto& q : questions)
        os << store::to_string(q.label) << "\t" << q.question << "\n";
    return os.str();
}

struct BackendOptions {
    std::string kind = "mock";
    std::string base_url;
    std::string model_name;
    std::string transcripts_dir;
    int timeout_ms = 30000;
    int max_retries = 3;
    int max_calls = 0;
    int concurrency = 4;
};

void add_backend_options(CLI::App* cmd, BackendOptions& opt) {
    cmd->add_option("--backend", opt.kind, "Generation backend: mock | http | replay")
        ->check(CLI::IsMember({"mock", "http", "replay"}));
    cmd->add_option("--base-url", opt.base_url, "Chat endpoint base URL (http backend)");
    cmd->add_option("--model-name", opt.model_name, "Model name forwarded to the endpoint");
    cmd->add_option("--transcripts", opt.transcripts_dir,
                    "Transcript directory (records for http, source for replay)");
    cmd->add_option("--timeout-ms", opt.timeout_ms, "Per-request timeout");
    cmd->add_option("--max-retries", opt.max_retries, "Retries on 429/transport errors");
    cmd->add_option("--max-calls", opt.max_calls, "Backend call budget (0 = unlimited)");
    cmd->add_option("--concurrency", opt.concurrency, "Max in-flight requests (http)");
}

struct BuiltBackend {
    std::unique_ptr<synth::GenerationBackend> backend;
    std::unique_ptr<synth::TranscriptStore> transcripts;
};

BuiltBackend make_backend(const BackendOptions& opt) {
    BuiltBackend out;
    if (!opt.transcripts_dir.empty())
        out.transcripts = std::make_unique<synth::TranscriptStore>(opt.transcripts_dir);
    if (opt.kind == "mock") {
        out.backend = std::make_unique<synth::MockExtractiveBackend>();
    } else if (opt.kind == "http") {
        if (opt.base_url.empty())
            throw CliError{kExitConfig, "--backend http requires --base-url"};
        synth::HttpBackendConfig cfg;
        cfg.base_url = opt.base_url;
        cfg.model = opt.model_name.empty() ? "default" : opt.model_name;
        cfg.max_concurrency = opt.concurrency;
        out.backend = std::make_unique<synth::HttpChatBackend>(cfg, out.transcripts.get());
    } else if (opt.kind == "replay") {
        if (!out.transcripts)
            throw CliError{kExitConfig, "--backend replay requires --transcripts"};
        out.backend = std::make_unique<synth::ReplayBackend>(*out.transcripts);
    }
    return out;
}

synth::GenParams gen_params_of(const BackendOptions& opt) {
    synth::GenParams p;
    p.timeout_ms = opt.timeout_ms;
    p.max_retries = opt.max_retries;
    p.max_calls = opt.max_calls;
    return p;
}

store::MemoryDatabase load_corpus_checked(const std::string& path) {
    if (!fs::exists(path)) throw CliError{kExitMissing, "corpus file not found: " + path};
    return store::ingest_database_file(path);
}

std::vector<store::QAItem> load_qa_checked(const std::string& path) {
    if (!fs::exists(path)) throw CliError{kExitMissing, "qa file not found: " + path};
    return store::load_qa_file(path);
}

std::shared_ptr<cls::NaiveBayesClassifier> load_model_checked(const std::string& path) {
    if (!fs::exists(path)) throw CliError{kExitMissing, "model file not found: " + path};
    return std::make_shared<cls::NaiveBayesClassifier>(
        cls::NaiveBayesClassifier::load_file(path));
}

void print_candidates(std::ostream& os, const std::vector<ir::RankedCandidate>& cands,
                      const eval::Engine* engine) {
    os << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        os << "  " << (i + 1) << ". " << c.item_id << "  raw=" << c.raw_score;
        if (c.composite_score) os << "  composite=" << *c.composite_score;
        os << "  [" << store::to_string(c.mem_type) << "]";
        if (engine) {
            if (const store::MemoryItem* it = engine->item(c.item_id)) os << " " << it->text;
        }
        os << "\n";
    }
}

// Paper reference tables: display-only comparison numbers.
json load_paper_refs(const std::string& explicit_path) {
    std::vector<fs::path> candidates;
    if (!explicit_path.empty()) candidates.emplace_back(explicit_path);
    if (const char* env = std::getenv("MEMQ_DATA_DIR"))
        candidates.emplace_back(fs::path(env) / "paper_reference.json");
    candidates.emplace_back("data/paper_reference.json");
    for (const auto& p : candidates) {
        std::ifstream f(p);
        if (!f) continue;
        json j;
        f >> j;
        return j;
    }
    throw CliError{kExitMissing,
                   "paper reference file not found (tried data/paper_reference.json)"};
}

void print_paper_refs(const json& refs, const std::string& table) {
    if (!refs.contains(table)) return;
    std::cout << "reference (" << refs[table].value("source", table) << "):\n";
    for (const auto& row : refs[table]["rows"]) {
        std::cout << "  ";
        for (auto it = row.begin(); it != row.end(); ++it)
            std::cout << it.key() << "=" << it.value() << " ";
        std::cout << "\n";
    }
}

int run(int argc, char** argv) {
    CLI::App app{"memq: memory classification, retrieval and synthesis engine"};
    app.require_subcommand(1);

    // gen ----------------------------------------------------------------------
    auto* cmd_gen = app.add_subcommand("gen", "Generate a deterministic synthetic corpus");
    gen::GenSpec spec;
    std::string gen_out;
    cmd_gen->add_option("--seed", spec.seed, "PRNG seed");
    cmd_gen->add_option("--chars", spec.n_characters, "Number of characters");
    cmd_gen->add_option("--relationships", spec.relationships_per_char,
                        "Relationships per character");
    cmd_gen->add_option("--events", spec.events_per_char, "Events per character");
    cmd_gen->add_option("--dialogues-per-event", spec.dialogues_per_event, "Dialogues per event");
    cmd_gen->add_option("--turns", spec.turns_per_dialogue, "Turns per dialogue");
    cmd_gen->add_option("--qa-per-char", spec.qa_per_char, "QA items per character");
    cmd_gen->add_option("--anchors", spec.anchor_per_qa, "Anchors per QA item");
    cmd_gen->add_option("-o,--out", gen_out, "Output directory")->required();

    // ingest -------------------------------------------------------------------
    auto* cmd_ingest = app.add_subcommand("ingest", "Validate and summarize a corpus");
    std::string ing_corpus, ing_qa;
    bool ing_json = false;
    cmd_ingest->add_option("--corpus", ing_corpus, "Corpus file")->required();
    cmd_ingest->add_option("--qa", ing_qa, "QA file (optional, aligns references)");
    cmd_ingest->add_flag("--format-json", ing_json, "Emit machine-readable output");

    // index ---------------------------------------------------------------------
    auto* cmd_index = app.add_subcommand("index", "Build or query per-character BM25 indexes");
    cmd_index->require_subcommand(1);
    auto* cmd_index_build = cmd_index->add_subcommand("build", "Build indexes from a corpus");
    std::string ib_corpus, ib_out;
    cmd_index_build->add_option("--corpus", ib_corpus)->required();
    cmd_index_build->add_option("-o,--out", ib_out, "Index directory")->required();
    auto* cmd_index_query = cmd_index->add_subcommand("query", "Query one character's index");
    std::string iq_dir, iq_char, iq_question;
    std::size_t iq_k = 3;
    bool iq_per_type = false;
    cmd_index_query->add_option("--index-dir", iq_dir)->required();
    cmd_index_query->add_option("--character", iq_char)->required();
    cmd_index_query->add_option("--question", iq_question)->required();
    cmd_index_query->add_option("-k,--k", iq_k, "Top k");
    cmd_index_query->add_flag("--per-type", iq_per_type, "k per memory type (2k pool)");

    // classifier ------------------------------------------------------------------
    auto* cmd_cls =
        app.add_subcommand("classifier", "Train or evaluate the question classifier");
    cmd_cls->require_subcommand(1);
    auto* cmd_cls_train =
        cmd_cls->add_subcommand("train", "Train from 'label<TAB>question' lines");
    std::string ct_data, ct_out;
    double ct_smoothing = 1.0;
    cmd_cls_train->add_option("--data", ct_data)->required();
    cmd_cls_train->add_option("-o,--out", ct_out, "Model file")->required();
    cmd_cls_train->add_option("--smoothing", ct_smoothing, "Additive smoothing");
    auto* cmd_cls_eval = cmd_cls->add_subcommand("eval", "Evaluate a trained model");
    std::string ce_model, ce_data;
    bool ce_json = false;
    cmd_cls_eval->add_option("--model", ce_model)->required();
    cmd_cls_eval->add_option("--data", ce_data)->required();
    cmd_cls_eval->add_flag("--format-json", ce_json);

    // retrieve ---------------------------------------------------------------------
    auto* cmd_ret =
        app.add_subcommand("retrieve", "Classification-weighted retrieval for one question");
    std::string rt_corpus, rt_char, rt_question, rt_model, rt_retriever = "bm25";
    std::size_t rt_k = 3;
    double rt_alpha = 0.5, rt_beta = 0.5;
    bool rt_no_classify = false;
    cmd_ret->add_option("--corpus", rt_corpus)->required();
    cmd_ret->add_option("--character", rt_char)->required();
    cmd_ret->add_option("--question", rt_question)->required();
    cmd_ret->add_option("--model", rt_model, "Classifier model file");
    cmd_ret->add_option("-k,--k", rt_k);
    cmd_ret->add_option("--alpha", rt_alpha);
    cmd_ret->add_option("--beta", rt_beta);
    cmd_ret->add_option("--retriever", rt_retriever, "bm25 | dense")
        ->check(CLI::IsMember({"bm25", "dense"}));
    cmd_ret->add_flag("--no-classify", rt_no_classify, "Uniform class distribution");

    // answer -----------------------------------------------------------------------
    auto* cmd_ans = app.add_subcommand("answer", "End-to-end answer for one question");
    std::string an_corpus, an_char, an_question, an_model;
    std::size_t an_k = 3;
    double an_alpha = 0.5, an_beta = 0.5;
    bool an_verbose = false, an_no_classify = false;
    BackendOptions an_backend;
    cmd_ans->add_option("--corpus", an_corpus)->required();
    cmd_ans->add_option("--character", an_char)->required();
    cmd_ans->add_option("--question", an_question)->required();
    cmd_ans->add_option("--model", an_model, "Classifier model file");
    cmd_ans->add_option("-k,--k", an_k);
    cmd_ans->add_option("--alpha", an_alpha);
    cmd_ans->add_option("--beta", an_beta);
    cmd_ans->add_flag("-v,--verbose", an_verbose, "Print the rendered prompt");
    cmd_ans->add_flag("--no-classify", an_no_classify);
    add_backend_options(cmd_ans, an_backend);

    // eval -------------------------------------------------------------------------
    auto* cmd_eval = app.add_subcommand("eval", "Run one or more evaluation settings");
    std::string ev_corpus, ev_qa, ev_questions, ev_setting = "w-mc+r",
                                                ev_condition = "retrieved";
    std::string ev_run_dir, ev_paper_refs_path;
    bool ev_paper_refs = false, ev_json = false;
    eval::EvalConfig ev_cfg;
    BackendOptions ev_backend;
    cmd_eval->add_option("--corpus", ev_corpus)->required();
    cmd_eval->add_option("--qa", ev_qa)->required();
    cmd_eval->add_option("--questions", ev_questions,
                         "Labeled questions (trains the classifier; even/odd split)");
    cmd_eval->add_option("--setting", ev_setting, "w-mc+r | wo-mc+w-r | wo-mc+r | all");
    cmd_eval->add_option("--condition", ev_condition, "retrieved | nr | ir | cr | all");
    cmd_eval->add_option("-k,--k", ev_cfg.k);
    cmd_eval->add_option("--alpha", ev_cfg.alpha);
    cmd_eval->add_option("--beta", ev_cfg.beta);
    cmd_eval->add_option("--seed", ev_cfg.seed);
    cmd_eval->add_flag("--classify-memory-text", ev_cfg.classify_memory_text,
                       "Literal reading: classify each memory's own text");
    cmd_eval->add_option("--run-dir", ev_run_dir,
                         "Run directory (must not already contain a run)");
    cmd_eval->add_flag("--paper-refs", ev_paper_refs, "Print reference numbers for comparison");
    cmd_eval->add_option("--paper-refs-file", ev_paper_refs_path, "Reference table file");
    cmd_eval->add_flag("--format-json", ev_json, "Print report JSON to stdout");
    add_backend_options(cmd_eval, ev_backend);

    // ablate ------------------------------------------------------------------------
    auto* cmd_abl = app.add_subcommand("ablate", "Full settings x conditions grid");
    std::string ab_corpus, ab_qa, ab_questions, ab_run_dir;
    eval::EvalConfig ab_cfg;
    BackendOptions ab_backend;
    cmd_abl->add_option("--corpus", ab_corpus)->required();
    cmd_abl->add_option("--qa", ab_qa)->required();
    cmd_abl->add_option("--questions", ab_questions)->required();
    cmd_abl->add_option("--run-dir", ab_run_dir);
    cmd_abl->add_option("-k,--k", ab_cfg.k);
    cmd_abl->add_option("--seed", ab_cfg.seed);
    add_backend_options(cmd_abl, ab_backend);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    // ---- gen
    if (cmd_gen->parsed()) {
        auto corpus = gen::generate_corpus(spec);
        fs::create_directories(gen_out);
        write_file(fs::path(gen_out) / "corpus.json", store::serialize_database(corpus.db));
        write_file(fs::path(gen_out) / "qa.json", store::serialize_qa(corpus.qa));
        write_file(fs::path(gen_out) / "questions.tsv", questions_to_tsv(corpus.questions));
        auto stats = corpus.db.stats();
        std::cout << "generated " << stats.characters << " characters, " << stats.events
                  << " events, " << stats.dialogues << " dialogues, " << corpus.qa.size()
                  << " qa items -> " << gen_out << "\n";
        return 0;
    }

    // ---- ingest
    if (cmd_ingest->parsed()) {
        auto db = load_corpus_checked(ing_corpus);
        auto stats = db.stats();
        json j = {{"characters", stats.characters},
                  {"profile_fields", stats.profile_fields},
                  {"relationships", stats.relationships},
                  {"events", stats.events},
                  {"dialogues", stats.dialogues},
                  {"utterances", stats.utterances}};
        if (!ing_qa.empty()) {
            auto qa = load_qa_checked(ing_qa);
            auto items = store::segment_memories(db);
            auto report = store::align_references(qa, items);
            j["qa_items"] = qa.size();
            j["memory_items"] = items.size();
            j["aligned_exact"] = report.resolved_exact;
            j["aligned_overlap"] = report.resolved_overlap;
            j["unaligned"] = report.unaligned_qa_ids;
        }
        if (ing_json) {
            std::cout << j.dump(2) << "\n";
        } else {
            for (auto it = j.begin(); it != j.end(); ++it)
                std::cout << it.key() << ": " << it.value() << "\n";
        }
        return 0;
    }

    // ---- index build / query
    if (cmd_index_build->parsed()) {
        auto db = load_corpus_checked(ib_corpus);
        auto items = store::segment_memories(db);
        if (items.empty()) throw CliError{kExitConfig, "corpus yields no memory items"};
        auto indexes = ir::build_indexes(items);
        fs::create_directories(ib_out);
        json manifest;
        manifest["format_version"] = 1;
        manifest["characters"] = json::array();
        std::vector<std::string> cids;
        for (const auto& [cid, idx] : indexes) cids.push_back(cid);
        std::sort(cids.begin(), cids.end());
        for (const auto& cid : cids) {
            std::string fname = text::hex16(text::fnv1a64(cid)) + ".index.json";
            indexes.at(cid).save_file((fs::path(ib_out) / fname).string());
            manifest["characters"].push_back({{"character_id", cid}, {"file", fname}});
        }
        write_file(fs::path(ib_out) / "manifest.json", manifest.dump(2) + "\n");
        std::cout << "built " << cids.size() << " indexes over " << items.size() << " items -> "
                  << ib_out << "\n";
        return 0;
    }
    if (cmd_index_query->parsed()) {
        fs::path idx_file =
            fs::path(iq_dir) / (text::hex16(text::fnv1a64(iq_char)) + ".index.json");
        if (!fs::exists(idx_file))
            throw CliError{kExitMissing, "unknown character: no index for " + iq_char};
        auto idx = ir::InvertedIndex::load_file(idx_file.string());
        auto cands = iq_per_type ? idx.retrieve_per_type(iq_question, iq_k)
                                 : idx.retrieve(iq_question, iq_k);
        print_candidates(std::cout, cands, nullptr);
        return 0;
    }

    // ---- classifier train / eval
    if (cmd_cls_train->parsed()) {
        auto data = load_labeled_questions(ct_data);
        auto model = cls::NaiveBayesClassifier::train(data, ct_smoothing);
        model.save_file(ct_out);
        std::cout << "trained on " << data.size() << " questions, vocabulary "
                  << model.vocabulary_size() << " -> " << ct_out << "\n";
        return 0;
    }
    if (cmd_cls_eval->parsed()) {
        auto model = load_model_checked(ce_model);
        auto data = load_labeled_questions(ce_data);
        auto m = cls::evaluate_classifier(*model, data);
        json j = {{"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1},
                  {"accuracy", m.accuracy},
                  {"n", m.n},
                  {"semantic",
                   {{"precision", m.semantic.precision},
                    {"recall", m.semantic.recall},
                    {"f1", m.semantic.f1},
                    {"support", m.semantic.support}}},
                  {"episodic",
                   {{"precision", m.episodic.precision},
                    {"recall", m.episodic.recall},
                    {"f1", m.episodic.f1},
                    {"support", m.episodic.support}}}};
        if (ce_json)
            std::cout << j.dump(2) << "\n";
        else
            std::cout << "P=" << m.precision << " R=" << m.recall << " F1=" << m.f1
                      << " Acc=" << m.accuracy << " (n=" << m.n << ")\n";
        return 0;
    }

    // ---- retrieve
    if (cmd_ret->parsed()) {
        auto db = load_corpus_checked(rt_corpus);
        eval::Engine engine(std::move(db));
        if (!engine.index_for(rt_char)) throw CliError{kExitMissing, "unknown character: " + rt_char};
        cls::ClassDistribution dist{0.5, 0.5};
        if (!rt_model.empty() && !rt_no_classify)
            dist = load_model_checked(rt_model)->classify(rt_question);

        std::vector<ir::RankedCandidate> pool;
        if (rt_retriever == "dense") {
            std::vector<store::MemoryItem> char_items;
            for (const auto& it : engine.items())
                if (it.character_id == rt_char) char_items.push_back(it);
            ir::DenseIndex dense(char_items, std::make_shared<ir::FeatureHashingEmbedder>());
            pool = dense.retrieve_per_type(rt_question, rt_k);
        } else {
            pool = engine.index_for(rt_char)->retrieve_per_type(rt_question, rt_k);
        }
        rr::RerankConfig rcfg;
        rcfg.alpha = rt_alpha;
        rcfg.beta = rt_beta;
        rcfg.k = rt_k;
        auto ranked = rr::rerank_all(pool, dist, rcfg);
        std::cout << "classification: semantic=" << dist.p_semantic
                  << " episodic=" << dist.p_episodic << "\n";
        std::cout << "pool (" << pool.size() << " candidates, composite-ranked):\n";
        print_candidates(std::cout, ranked, &engine);
        std::cout << "top-" << rt_k << ":\n";
        ranked.resize(std::min(ranked.size(), rt_k));
        print_candidates(std::cout, ranked, &engine);
        return 0;
    }

    // ---- answer
    if (cmd_ans->parsed()) {
        auto db = load_corpus_checked(an_corpus);
        eval::Engine engine(std::move(db));
        if (!engine.index_for(an_char))
            throw CliError{kExitMissing, "unknown character: " + an_char};
        if (!an_model.empty()) engine.set_classifier(load_model_checked(an_model));
        auto built = make_backend(an_backend);
        eval::EvalConfig cfg;
        cfg.k = an_k;
        cfg.alpha = an_alpha;
        cfg.beta = an_beta;
        cfg.gen_params = gen_params_of(an_backend);

        auto trace = engine.answer(an_question, an_char, *built.backend, cfg, !an_no_classify);
        std::cout << "classification: semantic=" << trace.dist.p_semantic
                  << " episodic=" << trace.dist.p_episodic
                  << (trace.classified ? "" : " (uniform)") << "\n";
        std::cout << "pool (" << trace.pool.size() << " candidates):\n";
        print_candidates(std::cout, trace.pool, &engine);
        std::cout << "selected top-" << cfg.k << ":\n";
        print_candidates(std::cout, trace.selected, &engine);
        if (an_verbose) std::cout << "prompt:\n" << trace.prompt << "\n";
        std::cout << "answer: " << trace.response << "\n";
        return 0;
    }

    // ---- eval / ablate
    auto run_grid = [](const std::string& corpus_path, const std::string& qa_path,
                       const std::string& questions_path,
                       const std::vector<eval::Pipeline>& pipelines,
                       const std::vector<eval::MemoryCondition>& conditions,
                       eval::EvalConfig cfg, const BackendOptions& backend_opt,
                       const std::string& run_dir, bool paper_refs,
                       const std::string& paper_refs_path, bool print_json) {
        auto db = load_corpus_checked(corpus_path);
        auto qa = load_qa_checked(qa_path);
        eval::Engine engine(std::move(db));
        {
            auto report = store::align_references(qa, engine.items());
            if (!report.unaligned_qa_ids.empty())
                std::cerr << "warning: " << report.unaligned_qa_ids.size()
                          << " qa items have unresolved references\n";
        }

        std::vector<cls::LabeledQuestion> test_half;
        bool needs_mc = std::any_of(pipelines.begin(), pipelines.end(), [](eval::Pipeline p) {
            return p == eval::Pipeline::W_MC_R;
        });
        if (!questions_path.empty()) {
            auto labeled = load_labeled_questions(questions_path);
            std::vector<cls::LabeledQuestion> train_half;
            for (std::size_t i = 0; i < labeled.size(); ++i)
                (i % 2 ? test_half : train_half).push_back(labeled[i]);
            engine.set_classifier(std::make_shared<cls::NaiveBayesClassifier>(
                cls::NaiveBayesClassifier::train(train_half)));
        } else if (needs_mc) {
            throw CliError{kExitConfig,
                           "setting w-mc+r requires --questions to train the classifier"};
        }

        auto built = make_backend(backend_opt);
        cfg.gen_params = gen_params_of(backend_opt);

        if (!run_dir.empty()) {
            if (fs::exists(fs::path(run_dir) / "report.json"))
                throw CliError{kExitConfig, "run directory already contains a run: " + run_dir};
            fs::create_directories(run_dir);
        }

        json combined_reports = json::array();
        std::ostringstream combined_table;
        json timings = json::object();
        for (eval::Pipeline p : pipelines) {
            for (eval::MemoryCondition c : conditions) {
                eval::AblationSetting setting{p, c};
                auto report = engine.run_ablation(qa, setting, *built.backend, cfg,
                                                  test_half.empty() ? nullptr : &test_half);
                std::string cell = eval::to_string(p) + "_" + eval::to_string(c);
                combined_reports.push_back(json::parse(report.to_json(cfg)));
                combined_table << report.to_table(cfg) << "\n";
                timings[cell] = json::parse(report.to_json(cfg, true))["latency_ms"];
                if (print_json)
                    std::cout << report.to_json(cfg);
                else
                    std::cout << report.to_table(cfg) << "\n";
            }
        }
        if (paper_refs) {
            auto refs = load_paper_refs(paper_refs_path);
            for (const char* table : {"map_by_setting", "recall_at_k", "ablation_nr_ir_cr"})
                print_paper_refs(refs, table);
        }
        if (!run_dir.empty()) {
            json config;
            config["k"] = cfg.k;
            config["alpha"] = cfg.alpha;
            config["beta"] = cfg.beta;
            config["seed"] = cfg.seed;
            config["backend"] = backend_opt.kind;
            config["corpus"] = corpus_path;
            config["qa"] = qa_path;
            config["questions"] = questions_path;
            write_file(fs::path(run_dir) / "config.json", config.dump(2) + "\n");
            write_file(fs::path(run_dir) / "report.json", combined_reports.dump(2) + "\n");
            write_file(fs::path(run_dir) / "table.txt", combined_table.str());
            write_file(fs::path(run_dir) / "timings.json", timings.dump(2) + "\n");
            std::cout << "run written to " << run_dir << "\n";
        }
    };

    if (cmd_eval->parsed()) {
        std::vector<eval::Pipeline> pipelines;
        if (ev_setting == "all")
            pipelines = {eval::Pipeline::W_MC_R, eval::Pipeline::Wo_MC_W_R,
                         eval::Pipeline::Wo_MC_R};
        else
            pipelines = {eval::pipeline_from_string(ev_setting)};
        std::vector<eval::MemoryCondition> conditions;
        if (ev_condition == "all")
            conditions = {eval::MemoryCondition::NR, eval::MemoryCondition::IR,
                          eval::MemoryCondition::CR, eval::MemoryCondition::RETRIEVED};
        else
            conditions = {eval::condition_from_string(ev_condition)};
        run_grid(ev_corpus, ev_qa, ev_questions, pipelines, conditions, ev_cfg, ev_backend,
                 ev_run_dir, ev_paper_refs, ev_paper_refs_path, ev_json);
        return 0;
    }

    if (cmd_abl->parsed()) {
        run_grid(ab_corpus, ab_qa, ab_questions,
                 {eval::Pipeline::W_MC_R, eval::Pipeline::Wo_MC_W_R, eval::Pipeline::Wo_MC_R},
                 {eval::MemoryCondition::NR, eval::MemoryCondition::IR, eval::MemoryCondition::CR,
                  eval::MemoryCondition::RETRIEVED},
                 ab_cfg, ab_backend, ab_run_dir, false, "", false);
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissing;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
