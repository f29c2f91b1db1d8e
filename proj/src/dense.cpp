#include "memq/dense.hpp"

#include "memq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace memq::ir {

FeatureHashingEmbedder::FeatureHashingEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw SchemaError("dim", "embedding dimension must be positive");
}

std::vector<float> FeatureHashingEmbedder::embed(const std::string& raw) const {
    std::vector<float> v(dim_, 0.0f);
    for (const auto& tok : text::tokenize_normalized(raw).tokens) {
        std::uint64_t h = text::fnv1a64(tok) ^ seed_;
        std::size_t bucket = static_cast<std::size_t>(h % dim_);
        float sign = (h >> 63) ? -1.0f : 1.0f;
        v[bucket] += sign;
    }
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * static_cast<double>(x);
    if (norm > 0.0) {
        const float inv = static_cast<float>(1.0 / std::sqrt(norm));
        for (float& x : v) x *= inv;
    }
    return v;
}

DenseIndex::DenseIndex(const std::vector<store::MemoryItem>& items,
                       std::shared_ptr<Embedder> embedder)
    : embedder_(std::move(embedder)) {
    if (items.empty()) throw EmptyCorpus("cannot build a dense index over zero items");
    character_id_ = items.front().character_id;
    docs_ = items;
    std::sort(docs_.begin(), docs_.end(),
              [](const store::MemoryItem& a, const store::MemoryItem& b) {
                  return a.item_id < b.item_id;
              });
    vectors_.reserve(docs_.size());
    for (const auto& d : docs_) vectors_.push_back(embedder_->embed(d.text));
}

std::vector<double> DenseIndex::score_all(const std::string& question) const {
    const auto q = embedder_->embed(question);
    std::vector<double> scores(docs_.size(), 0.0);
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j)
            dot += static_cast<double>(q[j]) * static_cast<double>(vectors_[i][j]);
        scores[i] = dot;
    }
    return scores;
}

namespace {

std::vector<RankedCandidate> take_top(const std::vector<store::MemoryItem>& docs,
                                      const std::vector<double>& scores,
                                      const std::vector<std::size_t>& subset, std::size_t k) {
    std::vector<std::size_t> order = subset;
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    if (order.size() > k) order.resize(k);
    std::vector<RankedCandidate> out;
    out.reserve(order.size());
    for (std::size_t d : order)
        out.push_back({docs[d].item_id, scores[d], docs[d].mem_type, std::nullopt});
    return out;
}

} // namespace

std::vector<RankedCandidate> DenseIndex::retrieve(const std::string& question,
                                                  std::size_t k) const {
    auto scores = score_all(question);
    std::vector<std::size_t> all(docs_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return take_top(docs_, scores, all, k);
}

std::vector<RankedCandidate> DenseIndex::retrieve_per_type(const std::string& question,
                                                           std::size_t k) const {
    auto scores = score_all(question);
    std::vector<std::size_t> sem, epi;
    for (std::size_t i = 0; i < docs_.size(); ++i)
        (docs_[i].mem_type == store::MemType::semantic ? sem : epi).push_back(i);
    auto top_sem = take_top(docs_, scores, sem, k);
    auto top_epi = take_top(docs_, scores, epi, k);
    top_sem.insert(top_sem.end(), top_epi.begin(), top_epi.end());
    return top_sem;
}

} // namespace memq::ir
