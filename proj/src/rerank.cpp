#include "memq/rerank.hpp"

#include "memq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace memq::rr {

void RerankConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
        throw SchemaError("rerank", "alpha and beta must lie in [0,1]");
    if (k < 1) throw SchemaError("rerank.k", "k must be >= 1");
}

double sigmoid(double s) {
    return 1.0 / (1.0 + std::exp(-s));
}

double composite_score(double p, double s, const RerankConfig& cfg) {
    return cfg.alpha * p + cfg.beta * sigmoid(s);
}

std::vector<ir::RankedCandidate> rerank_with_probs(const std::vector<ir::RankedCandidate>& pool,
                                                   const std::vector<double>& probs,
                                                   const RerankConfig& cfg, std::size_t keep) {
    if (pool.empty()) throw EmptyPool();
    cfg.validate();
    std::vector<ir::RankedCandidate> out = pool;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].composite_score = composite_score(probs[i], out[i].raw_score, cfg);
    std::stable_sort(out.begin(), out.end(),
                     [](const ir::RankedCandidate& a, const ir::RankedCandidate& b) {
                         if (*a.composite_score != *b.composite_score)
                             return *a.composite_score > *b.composite_score;
                         if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
                         return a.item_id < b.item_id;
                     });
    if (out.size() > keep) out.resize(keep);
    return out;
}

namespace {

std::vector<double> type_probs(const std::vector<ir::RankedCandidate>& pool,
                               const cls::ClassDistribution& dist) {
    std::vector<double> p;
    p.reserve(pool.size());
    for (const auto& c : pool) p.push_back(dist.prob_of(c.mem_type));
    return p;
}

} // namespace

std::vector<ir::RankedCandidate> rerank(const std::vector<ir::RankedCandidate>& pool,
                                        const cls::ClassDistribution& dist,
                                        const RerankConfig& cfg) {
    return rerank_with_probs(pool, type_probs(pool, dist), cfg, cfg.k);
}

std::vector<ir::RankedCandidate> rerank_all(const std::vector<ir::RankedCandidate>& pool,
                                            const cls::ClassDistribution& dist,
                                            const RerankConfig& cfg) {
    return rerank_with_probs(pool, type_probs(pool, dist), cfg, pool.size());
}

} // namespace memq::rr
