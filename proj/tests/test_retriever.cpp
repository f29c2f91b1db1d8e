#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "memq/dense.hpp"
#include "memq/errors.hpp"
#include "memq/retriever.hpp"
#include "memq/store.hpp"
#include "memq/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

using namespace memq;

namespace {

struct Rng {
    std::uint64_t s;
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::size_t below(std::size_t n) { return next() % n; }
};

const std::vector<std::string> kVocab = {"alpha", "beta",  "gamma", "delta", "搜", "索",
                                         "记",    "忆",    "检",    "bm25",  "qa", "引",
                                         "擎",    "omega", "phi"};

store::MemoryItem make_item(const std::string& cid, int i, const std::string& text,
                            store::Subtype st) {
    store::MemoryItem it;
    it.character_id = cid;
    it.subtype = st;
    it.mem_type = store::mem_type_of(st);
    it.provenance = "synthetic/" + std::to_string(i);
    it.item_id = store::item_id_for(cid, st, it.provenance);
    it.text = text::normalize(text);
    return it;
}

std::vector<store::MemoryItem> random_corpus(Rng& rng, std::size_t max_docs,
                                             std::size_t max_tokens) {
    std::size_t n = 1 + rng.below(max_docs);
    std::vector<store::MemoryItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        std::size_t len = 1 + rng.below(max_tokens);
        for (std::size_t t = 0; t < len; ++t) {
            if (t) text += " ";
            text += kVocab[rng.below(kVocab.size())];
        }
        auto st = static_cast<store::Subtype>(rng.below(4));
        items.push_back(make_item("角色", static_cast<int>(i), text, st));
    }
    return items;
}

text::TokenList random_query(Rng& rng, std::size_t max_terms) {
    std::string q;
    std::size_t len = 1 + rng.below(max_terms);
    for (std::size_t t = 0; t < len; ++t) {
        if (t) q += " ";
        q += kVocab[rng.below(kVocab.size())];
    }
    return text::tokenize_normalized(q);
}

/// No-index BM25 oracle: recomputes df/tf/lengths by scanning the raw token
/// lists for every call.
double brute_bm25(const std::vector<store::MemoryItem>& items, const text::TokenList& query,
                  const std::string& item_id) {
    const double k1 = 1.2, b = 0.75;
    std::vector<std::vector<std::string>> docs;
    std::size_t target = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        docs.push_back(text::tokenize(items[i].text).tokens);
        if (items[i].item_id == item_id) target = i;
    }
    REQUIRE(target < items.size());
    double total_len = 0;
    for (const auto& d : docs) total_len += static_cast<double>(d.size());
    const double avg = total_len / static_cast<double>(docs.size());
    double score = 0.0;
    for (const auto& term : query.tokens) {
        std::size_t df = 0;
        for (const auto& d : docs)
            if (std::count(d.begin(), d.end(), term) > 0) ++df;
        if (df == 0) continue;
        double tf = static_cast<double>(std::count(docs[target].begin(), docs[target].end(), term));
        if (tf == 0) continue;
        double idf = std::log(1.0 + (static_cast<double>(docs.size()) - static_cast<double>(df) + 0.5) /
                                        (static_cast<double>(df) + 0.5));
        double len_norm = 1.0 - b + b * static_cast<double>(docs[target].size()) / avg;
        score += idf * tf * (k1 + 1.0) / (tf + k1 * len_norm);
    }
    return score;
}

} // namespace

TEST_CASE("build rejects empty corpora and mixed characters") {
    CHECK_THROWS_AS(ir::InvertedIndex::build({}), EmptyCorpus);
    auto a = make_item("甲", 0, "alpha", store::Subtype::PRO);
    auto b = make_item("乙", 1, "beta", store::Subtype::EVT);
    CHECK_THROWS_AS(ir::InvertedIndex::build({a, b}), SchemaError);
}

TEST_CASE("avg_doc_len is the mean of document lengths") {
    std::vector<store::MemoryItem> items = {
        make_item("甲", 0, "a b c d", store::Subtype::PRO),
        make_item("甲", 1, "a b c d e f", store::Subtype::SR),
        make_item("甲", 2, "a b c d e f g h", store::Subtype::EVT),
    };
    auto idx = ir::InvertedIndex::build(items);
    CHECK(idx.doc_count() == 3);
    CHECK(idx.avg_doc_len() == doctest::Approx(6.0));
}

TEST_CASE("duplicate texts keep distinct item ids") {
    std::vector<store::MemoryItem> items = {
        make_item("甲", 0, "alpha beta", store::Subtype::PRO),
        make_item("甲", 1, "alpha beta", store::Subtype::PRO),
    };
    auto idx = ir::InvertedIndex::build(items);
    CHECK(idx.doc_count() == 2);
    auto top = idx.retrieve("alpha", 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].raw_score == doctest::Approx(top[1].raw_score));
    CHECK(top[0].item_id < top[1].item_id); // ties by ascending id
}

TEST_CASE("disjoint query scores zero") {
    auto idx = ir::InvertedIndex::build({make_item("甲", 0, "alpha beta", store::Subtype::PRO)});
    CHECK(idx.bm25_score(text::tokenize_normalized("omega"), idx.item_ids()[0]) == 0.0);
}

TEST_CASE("hand-evaluated single-doc score") {
    // One document "摄影 师 职业", single-term query [职业]: idf = ln(1+0.5/1.5),
    // tf = 1, len = avg_len, so the score collapses to the idf.
    auto idx = ir::InvertedIndex::build({make_item("甲", 0, "摄影 师 职业", store::Subtype::PRO)});
    text::TokenList q;
    q.tokens = {"职业"};
    double got = idx.bm25_score(q, idx.item_ids()[0]);
    CHECK(got == doctest::Approx(std::log(1.0 + 0.5 / 1.5)).epsilon(1e-9));
    CHECK(got == doctest::Approx(0.28768).epsilon(1e-4));
}

TEST_CASE("adding a non-matching query term never changes a score") {
    Rng rng{5};
    for (int rep = 0; rep < 20; ++rep) {
        auto items = random_corpus(rng, 20, 10);
        auto idx = ir::InvertedIndex::build(items);
        auto q = random_query(rng, 4);
        for (const auto& id : idx.item_ids()) {
            double before = idx.bm25_score(q, id);
            text::TokenList q2 = q;
            q2.tokens.push_back("nonexistent_token_zz");
            CHECK(idx.bm25_score(q2, id) == doctest::Approx(before).epsilon(1e-12));
        }
    }
}

TEST_CASE("indexed scoring equals the brute-force oracle") {
    Rng rng{17};
    for (int rep = 0; rep < 40; ++rep) {
        auto items = random_corpus(rng, 50, 12);
        auto idx = ir::InvertedIndex::build(items);
        for (int qi = 0; qi < 5; ++qi) {
            auto q = random_query(rng, 5);
            for (const auto& id : idx.item_ids()) {
                double got = idx.bm25_score(q, id);
                double want = brute_bm25(items, q, id);
                CHECK(got == doctest::Approx(want).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("retrieve ranks all docs, ties broken by ascending id") {
    Rng rng{23};
    for (int rep = 0; rep < 25; ++rep) {
        auto items = random_corpus(rng, 30, 8);
        auto idx = ir::InvertedIndex::build(items);
        auto q = random_query(rng, 4);
        auto got = idx.retrieve_tokens(q, items.size());
        REQUIRE(got.size() == items.size());

        // oracle: score every doc, sort by (-score, id)
        std::vector<std::pair<double, std::string>> want;
        for (const auto& id : idx.item_ids()) want.push_back({brute_bm25(items, q, id), id});
        std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got[i].item_id == want[i].second);
            CHECK(got[i].raw_score == doctest::Approx(want[i].first).epsilon(1e-9));
        }

        // stable prefix: retrieve(k) equals the k-prefix of retrieve(k+1)
        std::size_t k = 1 + rng.below(items.size());
        auto a = idx.retrieve_tokens(q, k);
        auto b = idx.retrieve_tokens(q, std::min(k + 1, items.size()));
        for (std::size_t i = 0; i < a.size() && i < k; ++i) CHECK(a[i].item_id == b[i].item_id);
    }
}

TEST_CASE("k larger than corpus returns everything sorted") {
    auto idx = ir::InvertedIndex::build({make_item("甲", 0, "alpha", store::Subtype::PRO),
                                         make_item("甲", 1, "beta", store::Subtype::EVT)});
    CHECK(idx.retrieve("alpha beta", 10).size() == 2);
}

TEST_CASE("monotonicity: raising tf of a query term never lowers the score") {
    std::vector<store::MemoryItem> items = {
        make_item("甲", 0, "alpha beta gamma", store::Subtype::PRO),
        make_item("甲", 1, "alpha alpha beta gamma", store::Subtype::PRO),
        make_item("甲", 2, "delta omega", store::Subtype::EVT),
    };
    auto idx = ir::InvertedIndex::build(items);
    text::TokenList q;
    q.tokens = {"alpha"};
    // doc 1 has the same length + one extra alpha occurrence relative to doc 0
    // prefix; compare tf=1 vs tf=2 at equal df/idf via direct scores
    double s0 = idx.bm25_score(q, items[0].item_id);
    double s1 = idx.bm25_score(q, items[1].item_id);
    CHECK(s1 > 0.0);
    CHECK(s0 > 0.0);
    // tf rises from 1 to 2 while length rises too; check the pure-tf effect
    // with an explicit pair of equal-length docs
    std::vector<store::MemoryItem> eq = {
        make_item("乙", 0, "alpha beta gamma delta", store::Subtype::PRO),
        make_item("乙", 1, "alpha alpha beta gamma", store::Subtype::PRO),
    };
    auto idx2 = ir::InvertedIndex::build(eq);
    CHECK(idx2.bm25_score(q, eq[1].item_id) > idx2.bm25_score(q, eq[0].item_id));
}

TEST_CASE("per-type pool: k from each partition") {
    std::vector<store::MemoryItem> items;
    for (int i = 0; i < 3; ++i)
        items.push_back(make_item("甲", i, "semantic item " + std::to_string(i),
                                  store::Subtype::PRO));
    for (int i = 3; i < 6; ++i)
        items.push_back(make_item("甲", i, "episodic item " + std::to_string(i),
                                  store::Subtype::EVT));
    auto idx = ir::InvertedIndex::build(items);

    auto pool = idx.retrieve_per_type("item", 2);
    REQUIRE(pool.size() == 4);
    CHECK(pool[0].mem_type == store::MemType::semantic);
    CHECK(pool[1].mem_type == store::MemType::semantic);
    CHECK(pool[2].mem_type == store::MemType::episodic);
    CHECK(pool[3].mem_type == store::MemType::episodic);

    // partition exhaustion: k=5 with only 2 semantic items -> 2 + 5
    std::vector<store::MemoryItem> skew;
    for (int i = 0; i < 2; ++i)
        skew.push_back(make_item("乙", i, "sem " + std::to_string(i), store::Subtype::SR));
    for (int i = 2; i < 9; ++i)
        skew.push_back(make_item("乙", i, "epi " + std::to_string(i), store::Subtype::DLG));
    auto idx2 = ir::InvertedIndex::build(skew);
    CHECK(idx2.retrieve_per_type("sem epi", 5).size() == 7);
}

TEST_CASE("per-type pool equals brute-force per-type top-k") {
    Rng rng{31};
    for (int rep = 0; rep < 25; ++rep) {
        auto items = random_corpus(rng, 30, 8);
        auto idx = ir::InvertedIndex::build(items);
        auto q = random_query(rng, 4);
        std::size_t k = 1 + rng.below(6);
        auto pool = idx.retrieve_per_type_tokens(q, k);

        std::vector<std::pair<double, std::string>> sem, epi;
        for (const auto& it : items) {
            double s = brute_bm25(items, q, it.item_id);
            (it.mem_type == store::MemType::semantic ? sem : epi).push_back({s, it.item_id});
        }
        auto by_rank = [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        };
        std::sort(sem.begin(), sem.end(), by_rank);
        std::sort(epi.begin(), epi.end(), by_rank);
        if (sem.size() > k) sem.resize(k);
        if (epi.size() > k) epi.resize(k);
        REQUIRE(pool.size() == sem.size() + epi.size());
        for (std::size_t i = 0; i < sem.size(); ++i) CHECK(pool[i].item_id == sem[i].second);
        for (std::size_t i = 0; i < epi.size(); ++i)
            CHECK(pool[sem.size() + i].item_id == epi[i].second);
    }
}

TEST_CASE("index persistence round-trips byte-identically") {
    Rng rng{43};
    auto items = random_corpus(rng, 25, 10);
    auto idx = ir::InvertedIndex::build(items);
    std::ostringstream a, b;
    idx.save(a);
    ir::InvertedIndex::build(items).save(b);
    CHECK(a.str() == b.str()); // byte-stable across builds

    std::istringstream in(a.str());
    auto loaded = ir::InvertedIndex::load(in);
    CHECK(loaded.doc_count() == idx.doc_count());
    CHECK(loaded.avg_doc_len() == doctest::Approx(idx.avg_doc_len()));
    auto q = random_query(rng, 4);
    auto r1 = idx.retrieve_tokens(q, 5);
    auto r2 = loaded.retrieve_tokens(q, 5);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].item_id == r2[i].item_id);
        CHECK(r1[i].raw_score == doctest::Approx(r2[i].raw_score).epsilon(1e-12));
    }
    std::ostringstream c;
    loaded.save(c);
    CHECK(c.str() == a.str());
}

TEST_CASE("feature hashing embedder is deterministic and normalized") {
    ir::FeatureHashingEmbedder emb(128, 7);
    auto v1 = emb.embed("检索 记忆 bm25");
    auto v2 = emb.embed("检索 记忆 bm25");
    CHECK(v1 == v2);
    double norm = 0;
    for (float x : v1) norm += static_cast<double>(x) * static_cast<double>(x);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(emb.embed("").size() == 128);
}

TEST_CASE("dense retriever ranks identical text first") {
    auto emb = std::make_shared<ir::FeatureHashingEmbedder>(256, 1);
    std::vector<store::MemoryItem> items = {
        make_item("甲", 0, "红色 的 苹果", store::Subtype::PRO),
        make_item("甲", 1, "蓝色 的 天空", store::Subtype::EVT),
        make_item("甲", 2, "绿色 的 草地", store::Subtype::EVT),
    };
    ir::DenseIndex dense(items, emb);
    auto top = dense.retrieve("红色 的 苹果", 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].item_id == items[0].item_id);
    CHECK(top[0].raw_score == doctest::Approx(1.0).epsilon(1e-5));

    auto pool = dense.retrieve_per_type("红色 的 苹果", 1);
    CHECK(pool.size() == 2); // one semantic + one episodic
}
