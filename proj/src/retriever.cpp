#include "memq/retriever.hpp"

#include "memq/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

using nlohmann::json;

namespace memq::ir {

namespace {
constexpr int kIndexFormatVersion = 1;

void rank_subset(const std::vector<double>& scores, const std::vector<std::uint32_t>& docs,
                 std::size_t k, std::vector<std::uint32_t>& out) {
    out = docs;
    std::sort(out.begin(), out.end(), [&scores](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b; // docs are ordered by item_id, so index order is id order
    });
    if (out.size() > k) out.resize(k);
}

} // namespace

InvertedIndex InvertedIndex::build(const std::vector<store::MemoryItem>& items) {
    if (items.empty()) throw EmptyCorpus("cannot build an index over zero items");
    InvertedIndex idx;
    idx.character_id_ = items.front().character_id;
    for (const auto& it : items)
        if (it.character_id != idx.character_id_)
            throw SchemaError("items", "all items must share one character_id");
    idx.docs_ = items;
    std::sort(idx.docs_.begin(), idx.docs_.end(),
              [](const store::MemoryItem& a, const store::MemoryItem& b) {
                  return a.item_id < b.item_id;
              });
    for (std::size_t i = 1; i < idx.docs_.size(); ++i)
        if (idx.docs_[i].item_id == idx.docs_[i - 1].item_id)
            throw SchemaError("items", "duplicate item_id " + idx.docs_[i].item_id);
    idx.build_postings();
    return idx;
}

void InvertedIndex::build_postings() {
    postings_.clear();
    doc_index_.clear();
    doc_len_.assign(docs_.size(), 0);
    std::uint64_t total_len = 0;
    for (std::uint32_t d = 0; d < docs_.size(); ++d) {
        doc_index_[docs_[d].item_id] = d;
        auto toks = text::tokenize(docs_[d].text);
        doc_len_[d] = static_cast<std::uint32_t>(toks.tokens.size());
        total_len += doc_len_[d];
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : toks.tokens) ++tf[t];
        for (const auto& [t, f] : tf) postings_[t].push_back({d, f});
    }
    avg_doc_len_ = docs_.empty() ? 0.0
                                 : static_cast<double>(total_len) / static_cast<double>(docs_.size());
}

double InvertedIndex::idf(std::size_t df) const {
    const double n = static_cast<double>(docs_.size());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::bm25_score(const text::TokenList& query, const std::string& item_id) const {
    auto di = doc_index_.find(item_id);
    if (di == doc_index_.end()) throw SchemaError("item_id", "unknown item " + item_id);
    const std::uint32_t doc = di->second;
    const double len_norm =
        1.0 - kB + kB * static_cast<double>(doc_len_[doc]) / avg_doc_len_;
    double score = 0.0;
    for (const auto& term : query.tokens) {
        auto p = postings_.find(term);
        if (p == postings_.end()) continue;
        const auto& plist = p->second;
        auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                                   [](const Posting& a, std::uint32_t b) { return a.doc < b; });
        if (it == plist.end() || it->doc != doc) continue;
        const double tf = static_cast<double>(it->tf);
        score += idf(plist.size()) * tf * (kK1 + 1.0) / (tf + kK1 * len_norm);
    }
    return score;
}

std::vector<RankedCandidate> InvertedIndex::retrieve_tokens(const text::TokenList& query,
                                                            std::size_t k) const {
    if (docs_.empty()) throw EmptyCorpus();
    std::vector<double> scores(docs_.size(), 0.0);
    for (const auto& term : query.tokens) {
        auto p = postings_.find(term);
        if (p == postings_.end()) continue;
        const double w = idf(p->second.size());
        for (const auto& post : p->second) {
            const double tf = static_cast<double>(post.tf);
            const double len_norm =
                1.0 - kB + kB * static_cast<double>(doc_len_[post.doc]) / avg_doc_len_;
            scores[post.doc] += w * tf * (kK1 + 1.0) / (tf + kK1 * len_norm);
        }
    }
    std::vector<std::uint32_t> order(docs_.size());
    for (std::uint32_t i = 0; i < docs_.size(); ++i) order[i] = i;
    std::vector<std::uint32_t> top;
    rank_subset(scores, order, k, top);
    std::vector<RankedCandidate> out;
    out.reserve(top.size());
    for (std::uint32_t d : top)
        out.push_back({docs_[d].item_id, scores[d], docs_[d].mem_type, std::nullopt});
    return out;
}

std::vector<RankedCandidate> InvertedIndex::retrieve(const std::string& question,
                                                     std::size_t k) const {
    return retrieve_tokens(text::tokenize_normalized(question), k);
}

std::vector<RankedCandidate> InvertedIndex::retrieve_per_type_tokens(const text::TokenList& query,
                                                                     std::size_t k) const {
    if (docs_.empty()) throw EmptyCorpus();
    std::vector<double> scores(docs_.size(), 0.0);
    for (const auto& term : query.tokens) {
        auto p = postings_.find(term);
        if (p == postings_.end()) continue;
        const double w = idf(p->second.size());
        for (const auto& post : p->second) {
            const double tf = static_cast<double>(post.tf);
            const double len_norm =
                1.0 - kB + kB * static_cast<double>(doc_len_[post.doc]) / avg_doc_len_;
            scores[post.doc] += w * tf * (kK1 + 1.0) / (tf + kK1 * len_norm);
        }
    }
    std::vector<std::uint32_t> semantic_docs, episodic_docs;
    for (std::uint32_t i = 0; i < docs_.size(); ++i) {
        if (docs_[i].mem_type == store::MemType::semantic)
            semantic_docs.push_back(i);
        else
            episodic_docs.push_back(i);
    }
    std::vector<std::uint32_t> top_sem, top_epi;
    rank_subset(scores, semantic_docs, k, top_sem);
    rank_subset(scores, episodic_docs, k, top_epi);
    std::vector<RankedCandidate> out;
    out.reserve(top_sem.size() + top_epi.size());
    for (std::uint32_t d : top_sem)
        out.push_back({docs_[d].item_id, scores[d], docs_[d].mem_type, std::nullopt});
    for (std::uint32_t d : top_epi)
        out.push_back({docs_[d].item_id, scores[d], docs_[d].mem_type, std::nullopt});
    return out;
}

std::vector<RankedCandidate> InvertedIndex::retrieve_per_type(const std::string& question,
                                                              std::size_t k) const {
    return retrieve_per_type_tokens(text::tokenize_normalized(question), k);
}

std::size_t InvertedIndex::doc_length(const std::string& item_id) const {
    auto it = doc_index_.find(item_id);
    if (it == doc_index_.end()) throw SchemaError("item_id", "unknown item " + item_id);
    return doc_len_[it->second];
}

const store::MemoryItem* InvertedIndex::item(const std::string& item_id) const {
    auto it = doc_index_.find(item_id);
    if (it == doc_index_.end()) return nullptr;
    return &docs_[it->second];
}

std::vector<std::string> InvertedIndex::item_ids() const {
    std::vector<std::string> out;
    out.reserve(docs_.size());
    for (const auto& d : docs_) out.push_back(d.item_id);
    return out;
}

void InvertedIndex::save(std::ostream& out) const {
    json j;
    j["format_version"] = kIndexFormatVersion;
    j["character_id"] = character_id_;
    j["docs"] = json::array();
    for (const auto& d : docs_)
        j["docs"].push_back({{"item_id", d.item_id},
                             {"mem_type", store::to_string(d.mem_type)},
                             {"subtype", store::to_string(d.subtype)},
                             {"text", d.text},
                             {"provenance", d.provenance}});
    // vocabulary sorted, postings as [doc, tf] pairs in doc order
    std::map<std::string, const std::vector<Posting>*> sorted;
    for (const auto& [t, plist] : postings_) sorted[t] = &plist;
    json vocab = json::array();
    json plists = json::array();
    for (const auto& [t, plist] : sorted) {
        vocab.push_back(t);
        json pl = json::array();
        for (const auto& p : *plist) pl.push_back({p.doc, p.tf});
        plists.push_back(std::move(pl));
    }
    j["vocabulary"] = std::move(vocab);
    j["postings"] = std::move(plists);
    j["doc_lengths"] = doc_len_;
    out << j.dump() << "\n";
}

void InvertedIndex::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write index file: " + path);
    save(f);
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid index file: ") + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != kIndexFormatVersion)
        throw SchemaError("$.format_version", "unsupported index format version");
    InvertedIndex idx;
    idx.character_id_ = j.at("character_id").get<std::string>();
    for (const auto& dj : j.at("docs")) {
        store::MemoryItem it;
        it.item_id = dj.at("item_id").get<std::string>();
        it.character_id = idx.character_id_;
        it.subtype = dj.at("subtype").get<std::string>() == "PRO"   ? store::Subtype::PRO
                     : dj.at("subtype").get<std::string>() == "SR"  ? store::Subtype::SR
                     : dj.at("subtype").get<std::string>() == "EVT" ? store::Subtype::EVT
                                                                    : store::Subtype::DLG;
        it.mem_type = store::mem_type_of(it.subtype);
        it.text = dj.at("text").get<std::string>();
        it.provenance = dj.value("provenance", "");
        idx.docs_.push_back(std::move(it));
    }
    if (idx.docs_.empty()) throw EmptyCorpus("index file contains no documents");
    idx.build_postings();
    return idx;
}

InvertedIndex InvertedIndex::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open index file: " + path);
    return load(f);
}

std::unordered_map<std::string, InvertedIndex> build_indexes(
    const std::vector<store::MemoryItem>& items) {
    std::unordered_map<std::string, std::vector<store::MemoryItem>> by_char;
    for (const auto& it : items) by_char[it.character_id].push_back(it);
    std::unordered_map<std::string, InvertedIndex> out;
    for (auto& [cid, list] : by_char) out.emplace(cid, InvertedIndex::build(list));
    return out;
}

} // namespace memq::ir
