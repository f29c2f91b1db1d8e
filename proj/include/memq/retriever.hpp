#ifndef MEMQ_RETRIEVER_HPP
#define MEMQ_RETRIEVER_HPP

#include "memq/store.hpp"
#include "memq/text.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace memq::ir {

struct RankedCandidate {
    std::string item_id;
    double raw_score = 0.0;
    store::MemType mem_type = store::MemType::semantic;
    std::optional<double> composite_score; // set by the reranker
};

/// Common retrieval contract: ranked candidates for a question, either as a
/// single top-k list or as a per-type pool of up to 2k candidates.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::vector<RankedCandidate> retrieve(const std::string& question,
                                                  std::size_t k) const = 0;
    virtual std::vector<RankedCandidate> retrieve_per_type(const std::string& question,
                                                           std::size_t k) const = 0;
    virtual const std::string& character_id() const = 0;
    virtual std::string name() const = 0;
};

/// Okapi BM25 (k1 = 1.2, b = 0.75, idf = ln(1 + (N - df + 0.5)/(df + 0.5)))
/// over one character's memory items. Immutable once built.
class InvertedIndex : public Retriever {
public:
    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

    /// Items must be nonempty and share one character_id. Deterministic:
    /// documents are ordered by ascending item_id.
    static InvertedIndex build(const std::vector<store::MemoryItem>& items);

    double bm25_score(const text::TokenList& query, const std::string& item_id) const;

    /// Top-k by descending raw score, ties by ascending item_id. Returns fewer
    /// than k only when the corpus is smaller than k.
    std::vector<RankedCandidate> retrieve(const std::string& question,
                                          std::size_t k) const override;
    std::vector<RankedCandidate> retrieve_tokens(const text::TokenList& query,
                                                 std::size_t k) const;

    /// Top-k within each mem_type partition: semantic block then episodic
    /// block, each internally sorted. A partition smaller than k yields all of it.
    std::vector<RankedCandidate> retrieve_per_type(const std::string& question,
                                                   std::size_t k) const override;
    std::vector<RankedCandidate> retrieve_per_type_tokens(const text::TokenList& query,
                                                          std::size_t k) const;

    const std::string& character_id() const override { return character_id_; }
    std::string name() const override { return "bm25"; }

    std::size_t doc_count() const { return docs_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    std::size_t doc_length(const std::string& item_id) const;
    const store::MemoryItem* item(const std::string& item_id) const;
    std::vector<std::string> item_ids() const;

    /// Versioned on-disk format; byte-stable across runs for identical input.
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static InvertedIndex load(std::istream& in);
    static InvertedIndex load_file(const std::string& path);

private:
    InvertedIndex() = default;
    void build_postings();
    double idf(std::size_t df) const;

    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
    };

    std::string character_id_;
    std::vector<store::MemoryItem> docs_; // sorted by item_id
    std::vector<std::uint32_t> doc_len_;
    double avg_doc_len_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> doc_index_;
};

/// Build one index per character from a segmented item list.
std::unordered_map<std::string, InvertedIndex> build_indexes(
    const std::vector<store::MemoryItem>& items);

} // namespace memq::ir

#endif
