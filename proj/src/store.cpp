#include "memq/store.hpp"

#include "memq/errors.hpp"
#include "memq/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

using nlohmann::json;

namespace memq::store {

std::string to_string(MemType t) {
    return t == MemType::semantic ? "semantic" : "episodic";
}

std::string to_string(Subtype s) {
    switch (s) {
        case Subtype::PRO: return "PRO";
        case Subtype::SR: return "SR";
        case Subtype::EVT: return "EVT";
        case Subtype::DLG: return "DLG";
    }
    return "PRO";
}

MemType mem_type_of(Subtype s) {
    return (s == Subtype::PRO || s == Subtype::SR) ? MemType::semantic : MemType::episodic;
}

void MemoryDatabase::add_character(CharacterMemory cm) {
    if (cm.character_id.empty()) throw SchemaError("character_id", "must be nonempty");
    if (by_id_.count(cm.character_id)) throw DuplicateCharacter(cm.character_id);
    by_id_[cm.character_id] = characters_.size();
    characters_.push_back(std::move(cm));
}

const CharacterMemory* MemoryDatabase::find(const std::string& character_id) const {
    auto it = by_id_.find(character_id);
    if (it == by_id_.end()) return nullptr;
    return &characters_[it->second];
}

IngestStats MemoryDatabase::stats() const {
    IngestStats s;
    s.characters = characters_.size();
    for (const auto& c : characters_) {
        for (const auto& [k, v] : c.profile)
            if (!v.empty()) ++s.profile_fields;
        s.relationships += c.relationships.size();
        s.events += c.events.size();
        s.dialogues += c.dialogues.size();
        for (const auto& d : c.dialogues) s.utterances += d.turns.size();
    }
    return s;
}

namespace {

std::string require_string(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw SchemaError(path + "." + key, "missing field");
    if (!j[key].is_string()) throw SchemaError(path + "." + key, "expected string");
    return j[key].get<std::string>();
}

CharacterMemory parse_character(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    CharacterMemory cm;
    cm.character_id = require_string(j, path, "character_id");
    if (j.contains("profile")) {
        if (!j["profile"].is_object()) throw SchemaError(path + ".profile", "expected object");
        for (auto it = j["profile"].begin(); it != j["profile"].end(); ++it) {
            if (!it.value().is_string())
                throw SchemaError(path + ".profile." + it.key(), "expected string");
            cm.profile[it.key()] = it.value().get<std::string>();
        }
    }
    if (j.contains("relationships")) {
        if (!j["relationships"].is_array())
            throw SchemaError(path + ".relationships", "expected array");
        size_t i = 0;
        for (const auto& r : j["relationships"]) {
            std::string rp = path + ".relationships[" + std::to_string(i++) + "]";
            Relationship rel;
            rel.peer_name = require_string(r, rp, "peer_name");
            rel.category = require_string(r, rp, "category");
            rel.description = require_string(r, rp, "description");
            cm.relationships.push_back(std::move(rel));
        }
    }
    std::set<std::string> event_ids;
    if (j.contains("events")) {
        if (!j["events"].is_array()) throw SchemaError(path + ".events", "expected array");
        size_t i = 0;
        for (const auto& e : j["events"]) {
            std::string ep = path + ".events[" + std::to_string(i++) + "]";
            Event ev;
            ev.event_id = require_string(e, ep, "event_id");
            ev.topic = require_string(e, ep, "topic");
            ev.narrative = require_string(e, ep, "narrative");
            if (!event_ids.insert(ev.event_id).second)
                throw SchemaError(ep + ".event_id", "duplicate event_id " + ev.event_id);
            cm.events.push_back(std::move(ev));
        }
    }
    if (j.contains("dialogues")) {
        if (!j["dialogues"].is_array()) throw SchemaError(path + ".dialogues", "expected array");
        size_t i = 0;
        for (const auto& d : j["dialogues"]) {
            std::string dp = path + ".dialogues[" + std::to_string(i++) + "]";
            Dialogue dlg;
            dlg.dialogue_id = require_string(d, dp, "dialogue_id");
            if (d.contains("event_id") && !d["event_id"].is_null()) {
                if (!d["event_id"].is_string())
                    throw SchemaError(dp + ".event_id", "expected string or null");
                dlg.event_id = d["event_id"].get<std::string>();
                if (!event_ids.count(*dlg.event_id))
                    throw SchemaError(dp + ".event_id",
                                      "references unknown event " + *dlg.event_id);
            }
            if (!d.contains("turns") || !d["turns"].is_array())
                throw SchemaError(dp + ".turns", "expected array");
            size_t t = 0;
            for (const auto& turn : d["turns"]) {
                std::string tp = dp + ".turns[" + std::to_string(t++) + "]";
                DialogueTurn dt;
                dt.speaker = require_string(turn, tp, "speaker");
                dt.utterance = require_string(turn, tp, "utterance");
                dlg.turns.push_back(std::move(dt));
            }
            cm.dialogues.push_back(std::move(dlg));
        }
    }
    return cm;
}

json character_to_json(const CharacterMemory& c) {
    json j;
    j["character_id"] = c.character_id;
    j["profile"] = json::object();
    for (const auto& [k, v] : c.profile) j["profile"][k] = v;
    j["relationships"] = json::array();
    for (const auto& r : c.relationships)
        j["relationships"].push_back(
            {{"peer_name", r.peer_name}, {"category", r.category}, {"description", r.description}});
    j["events"] = json::array();
    for (const auto& e : c.events)
        j["events"].push_back(
            {{"event_id", e.event_id}, {"topic", e.topic}, {"narrative", e.narrative}});
    j["dialogues"] = json::array();
    for (const auto& d : c.dialogues) {
        json dj;
        dj["dialogue_id"] = d.dialogue_id;
        dj["event_id"] = d.event_id ? json(*d.event_id) : json(nullptr);
        dj["turns"] = json::array();
        for (const auto& t : d.turns)
            dj["turns"].push_back({{"speaker", t.speaker}, {"utterance", t.utterance}});
        j["dialogues"].push_back(std::move(dj));
    }
    return j;
}

// Reads a JSON array or a stream of concatenated top-level values.
std::vector<json> read_json_values(std::istream& in) {
    std::vector<json> values;
    json v;
    while (true) {
        in >> std::ws;
        if (in.eof() || in.peek() == std::char_traits<char>::eof()) break;
        try {
            in >> v;
        } catch (const json::parse_error& e) {
            throw SchemaError("$", std::string("invalid JSON: ") + e.what());
        }
        if (v.is_array()) {
            for (auto& el : v) values.push_back(std::move(el));
        } else {
            values.push_back(std::move(v));
        }
    }
    return values;
}

} // namespace

MemoryDatabase ingest_database(std::istream& in) {
    MemoryDatabase db;
    size_t i = 0;
    for (const auto& v : read_json_values(in)) {
        db.add_character(parse_character(v, "$[" + std::to_string(i) + "]"));
        ++i;
    }
    return db;
}

MemoryDatabase ingest_database_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open corpus file: " + path);
    return ingest_database(f);
}

std::string serialize_database(const MemoryDatabase& db) {
    json arr = json::array();
    for (const auto& c : db.characters()) arr.push_back(character_to_json(c));
    return arr.dump(2) + "\n";
}

std::vector<QAItem> load_qa(std::istream& in) {
    std::vector<QAItem> out;
    size_t i = 0;
    for (const auto& v : read_json_values(in)) {
        std::string path = "$[" + std::to_string(i++) + "]";
        if (!v.is_object()) throw SchemaError(path, "expected object");
        QAItem qa;
        qa.qa_id = require_string(v, path, "qa_id");
        qa.character_id = require_string(v, path, "character_id");
        qa.question = require_string(v, path, "question");
        qa.answer = require_string(v, path, "answer");
        if (v.contains("reference_memory_texts")) {
            if (!v["reference_memory_texts"].is_array())
                throw SchemaError(path + ".reference_memory_texts", "expected array");
            for (const auto& r : v["reference_memory_texts"]) {
                if (!r.is_string())
                    throw SchemaError(path + ".reference_memory_texts", "expected strings");
                qa.reference_memory_texts.push_back(r.get<std::string>());
            }
        }
        if (v.contains("reference_item_ids")) {
            for (const auto& r : v["reference_item_ids"])
                qa.reference_item_ids.push_back(r.get<std::string>());
        }
        if (v.contains("anchors")) {
            if (!v["anchors"].is_array()) throw SchemaError(path + ".anchors", "expected array");
            size_t a = 0;
            for (const auto& aj : v["anchors"]) {
                std::string ap = path + ".anchors[" + std::to_string(a++) + "]";
                Anchor an;
                an.text = require_string(aj, ap, "text");
                if (!aj.contains("start") || !aj.contains("end") ||
                    !aj["start"].is_number_integer() || !aj["end"].is_number_integer())
                    throw SchemaError(ap, "start/end must be integers");
                an.start = aj["start"].get<int>();
                an.end = aj["end"].get<int>();
                if (an.start < 0 || an.end < an.start ||
                    static_cast<size_t>(an.end) > qa.answer.size() ||
                    qa.answer.substr(static_cast<size_t>(an.start),
                                     static_cast<size_t>(an.end - an.start)) != an.text)
                    throw SchemaError(ap, "anchor span does not match answer slice");
                qa.anchors.push_back(std::move(an));
            }
        }
        out.push_back(std::move(qa));
    }
    return out;
}

std::vector<QAItem> load_qa_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open qa file: " + path);
    return load_qa(f);
}

std::string serialize_qa(const std::vector<QAItem>& qa) {
    json arr = json::array();
    for (const auto& q : qa) {
        json j;
        j["qa_id"] = q.qa_id;
        j["character_id"] = q.character_id;
        j["question"] = q.question;
        j["answer"] = q.answer;
        j["reference_memory_texts"] = q.reference_memory_texts;
        j["reference_item_ids"] = q.reference_item_ids;
        j["anchors"] = json::array();
        for (const auto& a : q.anchors)
            j["anchors"].push_back({{"text", a.text}, {"start", a.start}, {"end", a.end}});
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string item_id_for(const std::string& character_id, Subtype subtype,
                        const std::string& provenance) {
    std::string key = character_id;
    key.push_back('\x1f');
    key += to_string(subtype);
    key.push_back('\x1f');
    key += provenance;
    return text::hex16(text::fnv1a64(key));
}

std::vector<MemoryItem> segment_memories(const MemoryDatabase& db) {
    std::vector<MemoryItem> items;
    auto emit = [&items](const std::string& cid, Subtype st, std::string provenance,
                         const std::string& raw_text) {
        std::string norm = text::normalize(raw_text);
        if (norm.empty()) return;
        MemoryItem it;
        it.item_id = item_id_for(cid, st, provenance);
        it.character_id = cid;
        it.subtype = st;
        it.mem_type = mem_type_of(st);
        it.text = std::move(norm);
        it.provenance = std::move(provenance);
        items.push_back(std::move(it));
    };

    for (const auto& c : db.characters()) {
        for (const auto& [attr, value] : c.profile) {
            if (text::normalize(value).empty()) continue;
            emit(c.character_id, Subtype::PRO, "profile/" + attr,
                 c.character_id + "的" + attr + ": " + value);
        }
        for (size_t i = 0; i < c.relationships.size(); ++i)
            emit(c.character_id, Subtype::SR, "relationship/" + std::to_string(i),
                 c.relationships[i].description);
        for (const auto& e : c.events)
            emit(c.character_id, Subtype::EVT, "event/" + e.event_id, e.narrative);
        for (const auto& d : c.dialogues)
            for (size_t t = 0; t < d.turns.size(); ++t)
                emit(c.character_id, Subtype::DLG,
                     "dialogue/" + d.dialogue_id + "/turn/" + std::to_string(t),
                     d.turns[t].speaker + ": " + d.turns[t].utterance);
    }
    return items;
}

namespace {

std::set<std::string> token_set(const std::string& normalized_text) {
    auto toks = text::tokenize(normalized_text);
    return {toks.tokens.begin(), toks.tokens.end()};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& t : a)
        if (b.count(t)) ++inter;
    size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace

AlignReport align_references(std::vector<QAItem>& qa, const std::vector<MemoryItem>& items,
                             double overlap_threshold) {
    AlignReport report;

    // per character: normalized text -> item ids (ascending for determinism)
    std::unordered_map<std::string, std::map<std::string, std::vector<std::string>>> exact;
    std::unordered_map<std::string, std::vector<const MemoryItem*>> by_char;
    for (const auto& it : items) {
        exact[it.character_id][it.text].push_back(it.item_id);
        by_char[it.character_id].push_back(&it);
    }
    for (auto& [cid, m] : exact)
        for (auto& [t, ids] : m) std::sort(ids.begin(), ids.end());

    for (auto& q : qa) {
        q.reference_item_ids.clear();
        bool any_unresolved = false;
        for (const auto& ref : q.reference_memory_texts) {
            std::string norm = text::normalize(ref);
            auto ce = exact.find(q.character_id);
            if (ce != exact.end()) {
                auto hit = ce->second.find(norm);
                if (hit != ce->second.end()) {
                    q.reference_item_ids.push_back(hit->second.front());
                    ++report.resolved_exact;
                    continue;
                }
            }
            // fallback: best token overlap among the character's items
            double best = 0.0;
            const MemoryItem* best_item = nullptr;
            auto cb = by_char.find(q.character_id);
            if (cb != by_char.end()) {
                auto ref_tokens = token_set(norm);
                for (const MemoryItem* it : cb->second) {
                    double ov = jaccard(ref_tokens, token_set(it->text));
                    if (ov > best || (ov == best && best_item && it->item_id < best_item->item_id)) {
                        best = ov;
                        best_item = it;
                    }
                }
            }
            if (best_item && best >= overlap_threshold) {
                q.reference_item_ids.push_back(best_item->item_id);
                ++report.resolved_overlap;
            } else {
                any_unresolved = true;
            }
        }
        if (any_unresolved) report.unaligned_qa_ids.push_back(q.qa_id);
    }
    return report;
}

} // namespace memq::store
