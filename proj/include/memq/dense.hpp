#ifndef MEMQ_DENSE_HPP
#define MEMQ_DENSE_HPP

#include "memq/retriever.hpp"

#include <memory>

namespace memq::ir {

/// Dense-retrieval slot: any embedder mapping text to a fixed-length vector
/// plugs in behind the Retriever contract.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<float> embed(const std::string& text) const = 0;
    virtual std::string name() const = 0;
};

/// Deterministic signed feature hashing over tokenizer output, L2-normalized.
/// Ships as the test embedder; neural embedders implement the same interface.
class FeatureHashingEmbedder : public Embedder {
public:
    explicit FeatureHashingEmbedder(std::size_t dim = 256, std::uint64_t seed = 0x9e3779b9U);
    std::size_t dim() const override { return dim_; }
    std::vector<float> embed(const std::string& text) const override;
    std::string name() const override { return "feature-hashing"; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Exact (brute-force) cosine-similarity retrieval over embedded items.
class DenseIndex : public Retriever {
public:
    DenseIndex(const std::vector<store::MemoryItem>& items, std::shared_ptr<Embedder> embedder);

    std::vector<RankedCandidate> retrieve(const std::string& question,
                                          std::size_t k) const override;
    std::vector<RankedCandidate> retrieve_per_type(const std::string& question,
                                                   std::size_t k) const override;
    const std::string& character_id() const override { return character_id_; }
    std::string name() const override { return "dense:" + embedder_->name(); }
    std::size_t doc_count() const { return docs_.size(); }

private:
    std::vector<double> score_all(const std::string& question) const;

    std::string character_id_;
    std::vector<store::MemoryItem> docs_; // sorted by item_id
    std::vector<std::vector<float>> vectors_;
    std::shared_ptr<Embedder> embedder_;
};

} // namespace memq::ir

#endif
