// Offline acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. No network access: the guard is off for the
// whole run, so any attempt to reach an endpoint would fail loudly.

#include "memq/classifier.hpp"
#include "memq/corpus_gen.hpp"
#include "memq/evaluation.hpp"
#include "memq/rerank.hpp"
#include "memq/retriever.hpp"
#include "memq/store.hpp"
#include "memq/synthesis.hpp"
#include "memq/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

using namespace memq;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct SplitMix64 {
    std::uint64_t s;
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::size_t below(std::size_t n) { return next() % n; }
    double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
};

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << id << ": " << detail << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// C1: BM25 index scoring vs a no-index brute-force scorer.
// ---------------------------------------------------------------------------

const std::vector<std::string> kC1Vocab = {"alpha", "beta", "gamma", "delta", "搜", "索",
                                           "记",    "忆",   "检",    "bm25",  "qa", "引",
                                           "擎",    "omega", "phi",  "zeta"};

void criterion_1() {
    auto t0 = Clock::now();
    SplitMix64 rng{20240101};
    std::size_t score_checks = 0;
    bool ok = true;
    std::string why;

    for (int corpus_i = 0; corpus_i < 200 && ok; ++corpus_i) {
        std::size_t n_docs = 1 + rng.below(50);
        std::vector<store::MemoryItem> items;
        std::vector<std::vector<std::string>> doc_tokens;
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::string text;
            std::size_t len = 1 + rng.below(12);
            for (std::size_t t = 0; t < len; ++t) {
                if (t) text += " ";
                text += kC1Vocab[rng.below(kC1Vocab.size())];
            }
            store::MemoryItem it;
            it.character_id = "角色";
            it.subtype = static_cast<store::Subtype>(rng.below(4));
            it.mem_type = store::mem_type_of(it.subtype);
            it.provenance = "doc/" + std::to_string(d);
            it.item_id = store::item_id_for("角色", it.subtype, it.provenance);
            it.text = text::normalize(text);
            items.push_back(it);
            doc_tokens.push_back(text::tokenize(it.text).tokens);
        }
        auto idx = ir::InvertedIndex::build(items);
        auto ids = idx.item_ids();
        // map sorted ids back to token lists
        std::map<std::string, std::size_t> id_to_doc;
        for (std::size_t d = 0; d < items.size(); ++d) id_to_doc[items[d].item_id] = d;

        double total_len = 0;
        for (const auto& toks : doc_tokens) total_len += static_cast<double>(toks.size());
        const double avg_len = total_len / static_cast<double>(doc_tokens.size());

        for (int q_i = 0; q_i < 20 && ok; ++q_i) {
            text::TokenList query;
            std::size_t qlen = 1 + rng.below(5);
            for (std::size_t t = 0; t < qlen; ++t)
                query.tokens.push_back(kC1Vocab[rng.below(kC1Vocab.size())]);

            // brute force from raw token lists, no index structures
            std::map<std::string, std::size_t> df;
            for (const auto& term : query.tokens) {
                if (df.count(term)) continue;
                std::size_t d = 0;
                for (const auto& toks : doc_tokens)
                    if (std::find(toks.begin(), toks.end(), term) != toks.end()) ++d;
                df[term] = d;
            }
            std::vector<double> brute(items.size(), 0.0);
            for (std::size_t d = 0; d < items.size(); ++d) {
                for (const auto& term : query.tokens) {
                    double tf = static_cast<double>(
                        std::count(doc_tokens[d].begin(), doc_tokens[d].end(), term));
                    if (tf == 0.0 || df[term] == 0) continue;
                    double idf = std::log(
                        1.0 + (static_cast<double>(items.size()) -
                               static_cast<double>(df[term]) + 0.5) /
                                  (static_cast<double>(df[term]) + 0.5));
                    double len_norm =
                        1.0 - 0.75 +
                        0.75 * static_cast<double>(doc_tokens[d].size()) / avg_len;
                    brute[d] += idf * tf * 2.2 / (tf + 1.2 * len_norm);
                }
            }
            for (const auto& id : ids) {
                double got = idx.bm25_score(query, id);
                double want = brute[id_to_doc[id]];
                ++score_checks;
                if (std::abs(got - want) > 1e-9) {
                    ok = false;
                    why = "score mismatch " + std::to_string(got) + " vs " +
                          std::to_string(want);
                    break;
                }
            }
            if (!ok) break;
            // full ranking equality under (-score, ascending id)
            std::vector<std::string> want_rank = ids;
            std::sort(want_rank.begin(), want_rank.end(),
                      [&](const std::string& a, const std::string& b) {
                          double sa = brute[id_to_doc[a]], sb = brute[id_to_doc[b]];
                          if (sa != sb) return sa > sb;
                          return a < b;
                      });
            auto got_rank = idx.retrieve_tokens(query, items.size());
            for (std::size_t r = 0; r < want_rank.size(); ++r) {
                if (got_rank[r].item_id != want_rank[r]) {
                    ok = false;
                    why = "ranking mismatch at position " + std::to_string(r);
                    break;
                }
            }
        }
    }
    double secs = seconds_since(t0);
    if (ok && secs >= 10.0) {
        ok = false;
        why = "too slow";
    }
    std::ostringstream detail;
    detail << "BM25 index == brute force on 200 corpora x 20 queries (" << score_checks
           << " scores, 1e-9), rankings identical, " << std::fixed << std::setprecision(2)
           << secs << "s < 10s";
    if (!ok) detail << " -- " << why;
    report("C1", ok, detail.str());
}

// ---------------------------------------------------------------------------
// C2: reranker formula grid + sort oracle + uniform invariance.
// ---------------------------------------------------------------------------

void criterion_2() {
    auto t0 = Clock::now();
    bool ok = true;
    std::string why;

    rr::RerankConfig half;
    int grid_points = 0;
    for (int i = 0; i < 25 && ok; ++i) {
        for (int j = 0; j < 40; ++j) {
            double p = static_cast<double>(i) / 24.0;
            double s = -10.0 + 20.0 * static_cast<double>(j) / 39.0;
            double want = 0.5 * p + 0.5 * (1.0 / (1.0 + std::exp(-s)));
            ++grid_points;
            if (std::abs(rr::composite_score(p, s, half) - want) > 1e-12) {
                ok = false;
                why = "grid mismatch at p=" + std::to_string(p) + " s=" + std::to_string(s);
                break;
            }
        }
    }

    SplitMix64 rng{77};
    for (int rep = 0; rep < 500 && ok; ++rep) {
        std::size_t n = 1 + rng.below(16);
        std::vector<ir::RankedCandidate> pool;
        for (std::size_t i = 0; i < n; ++i) {
            ir::RankedCandidate c;
            c.item_id = "cand" + std::to_string(rng.below(400)) + "_" + std::to_string(i);
            c.raw_score = rng.unit() * 12.0 - 3.0;
            c.mem_type = rng.below(2) ? store::MemType::semantic : store::MemType::episodic;
            pool.push_back(c);
        }
        cls::ClassDistribution dist{rng.unit(), 0.0};
        dist.p_episodic = 1.0 - dist.p_semantic;
        rr::RerankConfig cfg;
        cfg.k = 1 + rng.below(n);
        auto got = rr::rerank(pool, dist, cfg);

        std::vector<std::pair<double, const ir::RankedCandidate*>> oracle;
        for (const auto& c : pool)
            oracle.push_back({0.5 * dist.prob_of(c.mem_type) +
                                  0.5 / (1.0 + std::exp(-c.raw_score)),
                              &c});
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            if (a.second->raw_score != b.second->raw_score)
                return a.second->raw_score > b.second->raw_score;
            return a.second->item_id < b.second->item_id;
        });
        if (got.size() != std::min(cfg.k, n)) {
            ok = false;
            why = "wrong output size";
            break;
        }
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i].item_id != oracle[i].second->item_id) {
                ok = false;
                why = "pool oracle mismatch at rank " + std::to_string(i);
                break;
            }
        }
        if (!ok) break;

        // uniform invariance: exact equality with the raw-score order
        rr::RerankConfig full;
        full.k = n;
        auto uniform = rr::rerank(pool, {0.5, 0.5}, full);
        auto raw_order = pool;
        std::sort(raw_order.begin(), raw_order.end(),
                  [](const ir::RankedCandidate& a, const ir::RankedCandidate& b) {
                      if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
                      return a.item_id < b.item_id;
                  });
        for (std::size_t i = 0; i < n; ++i) {
            if (uniform[i].item_id != raw_order[i].item_id) {
                ok = false;
                why = "uniform-distribution invariance violated";
                break;
            }
        }
    }

    double secs = seconds_since(t0);
    if (ok && secs >= 5.0) {
        ok = false;
        why = "too slow";
    }
    std::ostringstream detail;
    detail << "composite formula on " << grid_points
           << "-point grid (1e-12), 500 pools == sort oracle, uniform invariance exact, "
           << std::fixed << std::setprecision(2) << secs << "s < 5s";
    if (!ok) detail << " -- " << why;
    report("C2", ok, detail.str());
}

// ---------------------------------------------------------------------------
// C3: anchor MAP vs a naive substring-count oracle.
// ---------------------------------------------------------------------------

void criterion_3() {
    const std::vector<std::string> frags = {"北京", "摄影师", "他是", "去过", "上海", "写作",
                                            "音乐", "朋友",   "导师", "记者", "酒店", "咖啡"};
    SplitMix64 rng{99};
    bool ok = true;
    std::string why;

    std::vector<store::QAItem> qa;
    std::vector<std::string> responses;
    double oracle_sum = 0.0;
    std::size_t oracle_n = 0;
    for (int i = 0; i < 1000; ++i) {
        store::QAItem q;
        q.qa_id = "r" + std::to_string(i);
        std::string response;
        std::size_t rn = rng.below(6);
        for (std::size_t r = 0; r < rn; ++r) response += frags[rng.below(frags.size())];
        std::size_t an = 1 + rng.below(4); // at least one anchor, duplicates allowed
        std::vector<std::string> anchors;
        for (std::size_t a = 0; a < an; ++a) anchors.push_back(frags[rng.below(frags.size())]);
        for (const auto& a : anchors) q.anchors.push_back({a, 0, 0});
        q.answer = response;
        qa.push_back(q);
        responses.push_back(response);

        // naive oracle: distinct normalized anchors, plain substring search
        std::set<std::string> distinct;
        for (const auto& a : anchors) distinct.insert(text::normalize(a));
        int hits = 0;
        for (const auto& a : distinct)
            if (text::normalize(response).find(a) != std::string::npos) ++hits;
        int got = eval::em_count(response, anchors);
        if (got != hits) {
            ok = false;
            why = "em_count mismatch on pair " + std::to_string(i);
            break;
        }
        oracle_sum += static_cast<double>(hits) / static_cast<double>(distinct.size());
        ++oracle_n;
    }
    if (ok) {
        auto batch = eval::map_memory_anchors(responses, qa);
        double want = oracle_sum / static_cast<double>(oracle_n);
        if (batch.map != want) {
            ok = false;
            why = "batch map mismatch";
        }
    }
    if (ok) {
        store::QAItem all, none;
        all.anchors = {{"北京", 0, 0}, {"摄影师", 0, 0}};
        none.anchors = {{"北京", 0, 0}, {"摄影师", 0, 0}};
        auto m_all = eval::map_memory_anchors({"他是摄影师住在北京"}, {all});
        auto m_none = eval::map_memory_anchors({"完全无关的话"}, {none});
        if (m_all.map != 1.0) {
            ok = false;
            why = "MAP(all anchors present) != 1.0";
        } else if (m_none.map != 0.0) {
            ok = false;
            why = "MAP(no anchors present) != 0.0";
        }
    }
    std::string detail = "anchor MAP == naive oracle on 1000 random pairs, exact; "
                         "all-present=1.0, none-present=0.0";
    if (!ok) detail += " -- " + why;
    report("C3", ok, detail);
}

// ---------------------------------------------------------------------------
// Shared synthetic acceptance corpus: seed 42, 20 characters.
// ---------------------------------------------------------------------------

gen::GenSpec acceptance_spec() {
    gen::GenSpec spec;
    spec.seed = 42;
    spec.n_characters = 20;
    return spec;
}

// C4: classifier quality + probability normalization.
void criterion_4(const gen::GeneratedCorpus& corpus,
                 const std::shared_ptr<cls::NaiveBayesClassifier>& model,
                 const std::vector<cls::LabeledQuestion>& test_half) {
    bool ok = true;
    std::string why;
    if (corpus.questions.size() < 400) {
        ok = false;
        why = "only " + std::to_string(corpus.questions.size()) + " labeled questions";
    }
    cls::ClassMetrics m{};
    if (ok) {
        m = cls::evaluate_classifier(*model, test_half);
        if (m.accuracy < 0.90) {
            ok = false;
            why = "accuracy " + std::to_string(m.accuracy);
        }
    }
    if (ok) {
        std::vector<std::string> probes;
        for (const auto& q : corpus.questions) probes.push_back(q.question);
        probes.push_back("");
        probes.push_back("完全 没有 见过 的 问题 tokens");
        for (const auto& q : probes) {
            auto d = model->classify(q);
            if (std::abs(d.p_semantic + d.p_episodic - 1.0) > 1e-9 || d.p_semantic < 0.0 ||
                d.p_episodic < 0.0) {
                ok = false;
                why = "probabilities not normalized on input";
                break;
            }
        }
    }
    std::ostringstream detail;
    detail << "naive-Bayes on synthetic spec (seed=42, 20 chars, "
           << corpus.questions.size() << " questions, 50/50 split): weighted accuracy "
           << std::fixed << std::setprecision(3) << m.accuracy
           << " >= 0.90; probabilities sum to 1 within 1e-9";
    if (!ok) detail << " -- " << why;
    report("C4", ok, detail.str());
}

// C5: end-to-end ablation ordering with the mock extractive backend.
void criterion_5(const gen::GeneratedCorpus& corpus,
                 const std::shared_ptr<cls::NaiveBayesClassifier>& model) {
    auto t0 = Clock::now();
    bool ok = true;
    std::string why;

    eval::Engine engine(corpus.db);
    engine.set_classifier(model);
    auto qa = corpus.qa;
    store::align_references(qa, engine.items());

    synth::MockExtractiveBackend mock;
    eval::EvalConfig cfg;
    cfg.k = 3;
    cfg.seed = 42;

    auto run = [&](eval::Pipeline p, eval::MemoryCondition c) {
        return engine.run_ablation(qa, {p, c}, mock, cfg);
    };
    auto cr = run(eval::Pipeline::W_MC_R, eval::MemoryCondition::CR);
    auto nr = run(eval::Pipeline::W_MC_R, eval::MemoryCondition::NR);
    auto full = run(eval::Pipeline::W_MC_R, eval::MemoryCondition::RETRIEVED);
    auto bare = run(eval::Pipeline::Wo_MC_R, eval::MemoryCondition::RETRIEVED);

    if (cr.map_score != 1.0) {
        ok = false;
        why = "MAP(CR) = " + std::to_string(cr.map_score) + " != 1.0";
    } else if (nr.map_score != 0.0) {
        ok = false;
        why = "MAP(NR) = " + std::to_string(nr.map_score) + " != 0.0";
    } else if (full.map_score < 0.70) {
        ok = false;
        why = "MAP(w-mc+r) = " + std::to_string(full.map_score) + " < 0.70";
    } else if (full.map_score < bare.map_score + 0.5) {
        ok = false;
        why = "MAP(w-mc+r) not >= MAP(wo-mc+r) + 0.5";
    }
    double secs = seconds_since(t0);
    if (ok && secs >= 120.0) {
        ok = false;
        why = "too slow";
    }
    std::ostringstream detail;
    detail << "mock ablation (seed=42, k=3): MAP(CR)=" << cr.map_score
           << " MAP(NR)=" << nr.map_score << " MAP(w-mc+r)=" << std::fixed
           << std::setprecision(3) << full.map_score << " MAP(wo-mc+r)=" << bare.map_score
           << ", ordering holds, " << std::setprecision(2) << secs << "s < 120s, no network";
    if (!ok) detail << " -- " << why;
    report("C5", ok, detail.str());
}

// C6: retrieval quality on the synthetic corpus (plus optional real-data check).
void criterion_6(const gen::GeneratedCorpus& corpus) {
    bool ok = true;
    std::string why;

    eval::Engine engine(corpus.db);
    auto qa = corpus.qa;
    store::align_references(qa, engine.items());

    std::vector<std::vector<std::string>> retrieved, gold;
    for (const auto& q : qa) {
        if (q.reference_item_ids.empty()) continue;
        auto ranked = engine.index_for(q.character_id)->retrieve(q.question, 5);
        std::vector<std::string> ids;
        for (const auto& c : ranked) ids.push_back(c.item_id);
        retrieved.push_back(std::move(ids));
        gold.push_back(q.reference_item_ids);
    }
    std::map<std::size_t, double> recall;
    double prev = 0.0;
    bool monotone = true;
    for (std::size_t k = 1; k <= 5; ++k) {
        recall[k] = eval::recall_at_k(retrieved, gold, k);
        if (recall[k] < prev) monotone = false;
        prev = recall[k];
    }
    if (recall[1] < 0.95) {
        ok = false;
        why = "R@1 = " + std::to_string(recall[1]);
    } else if (recall[5] != 1.0) {
        ok = false;
        why = "R@5 = " + std::to_string(recall[5]);
    } else if (!monotone) {
        ok = false;
        why = "recall not monotone in k";
    }
    std::ostringstream detail;
    detail << "synthetic retrieval: R@1=" << std::fixed << std::setprecision(3) << recall[1]
           << " >= 0.95, R@5=" << recall[5] << " == 1.00, monotone in k over "
           << retrieved.size() << " questions";
    if (!ok) detail << " -- " << why;
    report("C6", ok, detail.str());

    // Non-gating: BM25 R@1 on the published dataset, when converted and supplied.
    const char* corpus_env = std::getenv("MEMQ_PERLTQA_CORPUS");
    const char* qa_env = std::getenv("MEMQ_PERLTQA_QA");
    if (corpus_env && qa_env && fs::exists(corpus_env) && fs::exists(qa_env)) {
        try {
            eval::Engine real(store::ingest_database_file(corpus_env));
            auto real_qa = store::load_qa_file(qa_env);
            store::align_references(real_qa, real.items());
            std::vector<std::vector<std::string>> rr_, gg;
            for (const auto& q : real_qa) {
                if (q.reference_item_ids.empty() || !real.index_for(q.character_id)) continue;
                auto ranked = real.index_for(q.character_id)->retrieve(q.question, 1);
                std::vector<std::string> ids;
                for (const auto& c : ranked) ids.push_back(c.item_id);
                rr_.push_back(std::move(ids));
                gg.push_back(q.reference_item_ids);
            }
            double r1 = eval::recall_at_k(rr_, gg, 1);
            bool in_band = r1 >= 0.60 && r1 <= 0.80;
            std::cout << "[NOTE] C6-optional (non-gating): published-data BM25 R@1 = " << r1
                      << (in_band ? " within" : " outside") << " [0.60, 0.80]\n";
        } catch (const std::exception& e) {
            std::cout << "[NOTE] C6-optional (non-gating): skipped (" << e.what() << ")\n";
        }
    } else {
        std::cout << "[NOTE] C6-optional (non-gating): published dataset not supplied "
                     "(set MEMQ_PERLTQA_CORPUS / MEMQ_PERLTQA_QA); skipped\n";
    }
}

// C7: index build and query latency at the 10k-item scale.
void criterion_7() {
    bool ok = true;
    std::string why;

    gen::GenSpec spec;
    spec.seed = 7;
    spec.n_characters = 1;
    spec.relationships_per_char = 9;
    spec.events_per_char = 2500;
    spec.dialogues_per_event = 1;
    spec.turns_per_dialogue = 3;
    spec.qa_per_char = 1000;
    auto corpus = gen::generate_corpus(spec);
    auto items = store::segment_memories(corpus.db);

    auto t_build = Clock::now();
    auto idx = ir::InvertedIndex::build(items);
    double build_s = seconds_since(t_build);
    if (items.size() < 10000) {
        ok = false;
        why = "corpus too small: " + std::to_string(items.size());
    } else if (build_s >= 5.0) {
        ok = false;
        why = "build took " + std::to_string(build_s) + "s";
    }

    double mean_ms = 0.0;
    if (ok) {
        std::vector<text::TokenList> queries;
        for (std::size_t i = 0; i < 1000; ++i)
            queries.push_back(
                text::tokenize_normalized(corpus.qa[i % corpus.qa.size()].question));
        auto t_q = Clock::now();
        double sink = 0.0;
        for (const auto& q : queries) {
            auto top = idx.retrieve_tokens(q, 5);
            sink += top.empty() ? 0.0 : top.front().raw_score;
        }
        double total_ms = seconds_since(t_q) * 1000.0;
        mean_ms = total_ms / static_cast<double>(queries.size());
        if (!std::isfinite(sink)) {
            ok = false;
            why = "non-finite scores";
        }
        if (ok && mean_ms >= 10.0) {
            ok = false;
            why = "mean query latency " + std::to_string(mean_ms) + "ms";
        }
    }
    std::ostringstream detail;
    detail << "index build over " << items.size() << " items in " << std::fixed
           << std::setprecision(2) << build_s << "s < 5s; mean BM25 query "
           << std::setprecision(3) << mean_ms << "ms < 10ms over 1000 queries";
    if (!ok) detail << " -- " << why;
    report("C7", ok, detail.str());
}

// C8: byte-identical reports across two identical CLI eval runs.
void criterion_8() {
    bool ok = true;
    std::string why;
    const char* bin = std::getenv("MEMQ_BIN");
    if (!bin) {
        report("C8", false, "MEMQ_BIN not set; cannot drive the CLI");
        return;
    }
    fs::path dir = fs::temp_directory_path() /
                   ("memq_accept_" +
                    std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(dir);
    auto sh = [&](const std::string& args) {
        std::string cmd = std::string(bin) + " " + args + " > " + (dir / "out.txt").string() +
                          " 2> " + (dir / "err.txt").string();
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };

    if (sh("gen --seed 42 --chars 6 -o " + (dir / "data").string()) != 0) {
        ok = false;
        why = "gen failed";
    }
    std::string eval_args = "eval --corpus " + (dir / "data" / "corpus.json").string() +
                            " --qa " + (dir / "data" / "qa.json").string() + " --questions " +
                            (dir / "data" / "questions.tsv").string() +
                            " --setting w-mc+r --condition retrieved -k 3 --seed 42 "
                            "--backend mock --run-dir ";
    if (ok && sh(eval_args + (dir / "run1").string()) != 0) {
        ok = false;
        why = "first eval failed";
    }
    if (ok && sh(eval_args + (dir / "run2").string()) != 0) {
        ok = false;
        why = "second eval failed";
    }
    if (ok) {
        std::string r1 = slurp(dir / "run1" / "report.json");
        std::string r2 = slurp(dir / "run2" / "report.json");
        std::string t1 = slurp(dir / "run1" / "table.txt");
        std::string t2 = slurp(dir / "run2" / "table.txt");
        if (r1.empty() || r1 != r2) {
            ok = false;
            why = "report.json differs between runs";
        } else if (t1 != t2) {
            ok = false;
            why = "table.txt differs between runs";
        }
    }
    fs::remove_all(dir);
    std::string detail = "two consecutive `memq eval` runs (same config/seed/mock) produce "
                         "byte-identical report.json and table.txt";
    if (!ok) detail += " -- " + why;
    report("C8", ok, detail);
}

} // namespace

int main() {
    // Prove the offline path: nothing in this process may touch the network.
    synth::NetworkGuard::set_allowed(false);

    criterion_1();
    criterion_2();
    criterion_3();

    auto corpus = gen::generate_corpus(acceptance_spec());
    std::vector<cls::LabeledQuestion> train_half, test_half;
    for (std::size_t i = 0; i < corpus.questions.size(); ++i)
        (i % 2 ? test_half : train_half).push_back(corpus.questions[i]);
    auto model = std::make_shared<cls::NaiveBayesClassifier>(
        cls::NaiveBayesClassifier::train(train_half));

    criterion_4(corpus, model, test_half);
    criterion_5(corpus, model);
    criterion_6(corpus);
    criterion_7();
    criterion_8();

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all acceptance criteria passed" << std::endl;
    return 0;
}
