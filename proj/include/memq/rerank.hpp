#ifndef MEMQ_RERANK_HPP
#define MEMQ_RERANK_HPP

#include "memq/classifier.hpp"
#include "memq/retriever.hpp"

#include <vector>

namespace memq::rr {

/// Weights of the composite re-ranking score alpha*p + beta*sigmoid(s).
/// Defaults balance the two terms.
struct RerankConfig {
    double alpha = 0.5;
    double beta = 0.5;
    std::size_t k = 3;
    /// When true, p comes from classifying the memory item's own text instead
    /// of the query distribution's component for the item's type.
    bool classify_memory_text = false;

    void validate() const;
};

double sigmoid(double s);

/// alpha * p + beta * sigmoid(s); lies in [0,1] whenever alpha + beta = 1.
double composite_score(double p, double s, const RerankConfig& cfg);

/// Re-rank the 2k candidate pool by composite score and keep the top k.
/// Each candidate's p is the query distribution's component for that
/// candidate's mem_type. Ties: descending raw score, then ascending item_id.
std::vector<ir::RankedCandidate> rerank(const std::vector<ir::RankedCandidate>& pool,
                                        const cls::ClassDistribution& dist,
                                        const RerankConfig& cfg);

/// Same ordering over the whole pool (no truncation).
std::vector<ir::RankedCandidate> rerank_all(const std::vector<ir::RankedCandidate>& pool,
                                            const cls::ClassDistribution& dist,
                                            const RerankConfig& cfg);

/// Low-level variant with an explicit per-candidate probability vector
/// (parallel to pool). Used for the classify-memory-text mode.
std::vector<ir::RankedCandidate> rerank_with_probs(const std::vector<ir::RankedCandidate>& pool,
                                                   const std::vector<double>& probs,
                                                   const RerankConfig& cfg, std::size_t keep);

} // namespace memq::rr

#endif
