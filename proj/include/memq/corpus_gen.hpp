#ifndef MEMQ_CORPUS_GEN_HPP
#define MEMQ_CORPUS_GEN_HPP

#include "memq/classifier.hpp"
#include "memq/store.hpp"

#include <cstdint>
#include <vector>

namespace memq::gen {

/// Deterministic corpus shape. Identical specs produce byte-identical corpora.
struct GenSpec {
    std::uint64_t seed = 42;
    int n_characters = 5;
    int relationships_per_char = 9;
    int events_per_char = 6;
    int dialogues_per_event = 1;
    int turns_per_dialogue = 4;
    int qa_per_char = 24;
    int anchor_per_qa = 3;

    void validate() const; // all counts >= 0
};

struct GeneratedCorpus {
    store::MemoryDatabase db;
    std::vector<store::QAItem> qa;
    std::vector<cls::LabeledQuestion> questions; // labeled by targeted subtype
};

/// Generate a corpus of templated characters whose memory items each embed
/// unique fact tokens; every QA item targets exactly one memory item, its
/// answer embeds the item's fact tokens, and its anchors are those tokens
/// with exact spans. Questions are phrased with type-indicative wording so
/// the corpus is classifier-separable.
GeneratedCorpus generate_corpus(const GenSpec& spec);

} // namespace memq::gen

#endif
