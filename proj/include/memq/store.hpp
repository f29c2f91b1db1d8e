#ifndef MEMQ_STORE_HPP
#define MEMQ_STORE_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace memq::store {

enum class MemType { semantic, episodic };
enum class Subtype { PRO, SR, EVT, DLG };

std::string to_string(MemType t);
std::string to_string(Subtype s);
MemType mem_type_of(Subtype s);

struct Relationship {
    std::string peer_name;
    std::string category;
    std::string description;
};

struct Event {
    std::string event_id;
    std::string topic;
    std::string narrative;
};

struct DialogueTurn {
    std::string speaker;
    std::string utterance;
};

struct Dialogue {
    std::string dialogue_id;
    std::optional<std::string> event_id; // references an Event when present
    std::vector<DialogueTurn> turns;
};

struct CharacterMemory {
    std::string character_id;
    std::map<std::string, std::string> profile; // attribute name -> value
    std::vector<Relationship> relationships;
    std::vector<Event> events;
    std::vector<Dialogue> dialogues;
};

/// One retrievable memory unit. `text` is normalized; `item_id` is a pure
/// function of (character_id, subtype, provenance).
struct MemoryItem {
    std::string item_id;
    std::string character_id;
    MemType mem_type = MemType::semantic;
    Subtype subtype = Subtype::PRO;
    std::string text;
    std::string provenance;
};

/// Anchor span into QAItem::answer, byte offsets: answer.substr(start, end-start) == text.
struct Anchor {
    std::string text;
    int start = 0;
    int end = 0;
};

struct QAItem {
    std::string qa_id;
    std::string character_id;
    std::string question;
    std::string answer;
    std::vector<std::string> reference_memory_texts;
    std::vector<std::string> reference_item_ids; // filled by align_references
    std::vector<Anchor> anchors;
};

struct IngestStats {
    std::size_t characters = 0;
    std::size_t profile_fields = 0; // non-empty attribute values
    std::size_t relationships = 0;
    std::size_t events = 0;
    std::size_t dialogues = 0;
    std::size_t utterances = 0;
};

class MemoryDatabase {
public:
    MemoryDatabase() = default;

    void add_character(CharacterMemory cm); // throws DuplicateCharacter
    const std::vector<CharacterMemory>& characters() const { return characters_; }
    const CharacterMemory* find(const std::string& character_id) const;
    bool empty() const { return characters_.empty(); }
    IngestStats stats() const;

private:
    std::vector<CharacterMemory> characters_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// Ingestion ------------------------------------------------------------------

/// Parse the canonical corpus format: a JSON array of character objects, or a
/// stream of concatenated character objects. Throws SchemaError / DuplicateCharacter.
MemoryDatabase ingest_database(std::istream& in);
MemoryDatabase ingest_database_file(const std::string& path);

/// Canonical serialization; serialize(ingest(x)) is a fixpoint.
std::string serialize_database(const MemoryDatabase& db);

/// Parse a QA file: JSON array of QA objects (or concatenated objects).
/// Anchor spans are validated against the answer. Throws SchemaError.
std::vector<QAItem> load_qa(std::istream& in);
std::vector<QAItem> load_qa_file(const std::string& path);
std::string serialize_qa(const std::vector<QAItem>& qa);

// Segmentation ----------------------------------------------------------------

std::string item_id_for(const std::string& character_id, Subtype subtype,
                        const std::string& provenance);

/// Deterministic segmentation into retrievable items: one PRO item per
/// non-empty profile attribute, one SR per relationship, one EVT per event,
/// one DLG per dialogue turn.
std::vector<MemoryItem> segment_memories(const MemoryDatabase& db);

// Reference alignment -----------------------------------------------------------

struct AlignReport {
    std::size_t resolved_exact = 0;
    std::size_t resolved_overlap = 0;
    std::vector<std::string> unaligned_qa_ids; // at least one unresolved reference
};

/// Fill reference_item_ids by normalized exact-text match, falling back to the
/// highest-token-overlap item of the same character (Jaccard >= 0.8).
/// Unresolved references are reported, not fatal.
AlignReport align_references(std::vector<QAItem>& qa, const std::vector<MemoryItem>& items,
                             double overlap_threshold = 0.8);

} // namespace memq::store

#endif
