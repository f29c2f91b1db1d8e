#include "memq/corpus_gen.hpp"

#include "memq/errors.hpp"
#include "memq/text.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <unordered_map>

namespace memq::gen {

namespace {

// Deterministic and platform-independent; std distributions are not.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
};

const std::array<const char*, 10> kSurnames = {"王", "李", "张", "刘", "陈",
                                               "杨", "黄", "赵", "周", "吴"};
const std::array<const char*, 20> kGivens = {"伟", "芳", "娜", "敏", "静", "磊", "军",
                                             "洋", "勇", "杰", "涛", "明", "超", "秀",
                                             "兰", "霞", "平", "刚", "桂", "丽"};
const std::array<const char*, 14> kNicknames = {"alex", "ben",  "coco", "dora", "eli",
                                                "fay",  "gus",  "hana", "ivan", "judy",
                                                "kira", "liam", "mona", "nolan"};
const std::array<const char*, 6> kNationalities = {"中国", "新加坡", "马来西亚",
                                                   "泰国", "日本",   "韩国"};
const std::array<const char*, 6> kAppearances = {"高个子", "中等身材", "短发",
                                                 "长发",   "戴眼镜",   "爱笑"};
const std::array<const char*, 4> kAchievements = {"获得过行业新人奖", "主持过大型项目",
                                                  "发表过多篇文章", "组织过公益活动"};
const std::array<const char*, 3> kEducations = {"本科毕业", "硕士毕业", "博士毕业"};
const std::array<const char*, 10> kProfessions = {"摄影师", "教师",   "医生", "工程师",
                                                  "厨师",   "作家",   "律师", "音乐家",
                                                  "设计师", "记者"};
const std::array<const char*, 6> kEmployers = {"novastudio", "brightlab",  "sunmedia",
                                               "cityworks",  "greenhouse", "bluepeak"};
const std::array<const char*, 3> kAwards = {"年度优秀员工", "最佳团队奖", "创新贡献奖"};
const std::array<const char*, 3> kRoleModels = {"一位资深前辈", "一位著名学者", "一位老师"};
const std::array<const char*, 10> kCategories = {"朋友", "同事",     "邻居", "导师", "学生",
                                                 "表亲", "合作伙伴", "同学", "教练", "队友"};
const std::array<const char*, 10> kTopics = {"旅行", "音乐", "展览", "运动", "读书",
                                             "烹饪", "科技", "园艺", "电影", "美术"};

// Fact tokens are spelled from a dedicated alphabet that never occurs in the
// template prose or vocabularies above, so an anchor can only appear where a
// token was deliberately placed.
const std::array<const char*, 18> kFactAlphabet = {"甲", "乙", "丙", "丁", "戊", "己",
                                                   "庚", "辛", "壬", "癸", "寅", "卯",
                                                   "辰", "巳", "酉", "戌", "亥", "丑"};

/// Equal-length fact tokens, unique within one character. Equal length keeps
/// any token from being a substring of another.
class FactTokenAllocator {
public:
    FactTokenAllocator(std::size_t expected_need) {
        std::size_t cap = kFactAlphabet.size();
        len_ = 1;
        while (cap < expected_need) {
            cap *= kFactAlphabet.size();
            ++len_;
        }
        if (len_ < 2) len_ = 2;
    }

    std::string next() {
        std::size_t c = counter_++;
        std::string out;
        for (std::size_t i = 0; i < len_; ++i) {
            out = std::string(kFactAlphabet[c % kFactAlphabet.size()]) + out;
            c /= kFactAlphabet.size();
        }
        return out;
    }

private:
    std::size_t len_ = 2;
    std::size_t counter_ = 0;
};

std::string join_tokens(const std::vector<std::string>& toks) {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += "、";
        out += toks[i];
    }
    return out;
}

/// Accumulates an answer string while tracking anchor byte spans.
struct AnswerBuilder {
    std::string answer;
    std::vector<store::Anchor> anchors;

    void lit(const std::string& t) { answer += t; }
    void anchor(const std::string& t) {
        anchors.push_back({t, static_cast<int>(answer.size()),
                           static_cast<int>(answer.size() + t.size())});
        answer += t;
    }
    void anchored_join(const std::vector<std::string>& toks) {
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i) lit("、");
            anchor(toks[i]);
        }
    }
};

struct QATarget {
    store::Subtype subtype;
    std::string provenance;
    std::vector<std::string> tokens;
    // subtype-specific hooks for question/answer templates
    std::string attr, base, peer, category, topic;
};

} // namespace

void GenSpec::validate() const {
    if (n_characters < 0 || relationships_per_char < 0 || events_per_char < 0 ||
        dialogues_per_event < 0 || turns_per_dialogue < 0 || qa_per_char < 0 || anchor_per_qa < 0)
        throw SchemaError("gen_spec", "all counts must be >= 0");
}

GeneratedCorpus generate_corpus(const GenSpec& spec) {
    spec.validate();
    GeneratedCorpus out;
    SplitMix64 rng(spec.seed);

    const int tokens_per_item = std::max(1, spec.anchor_per_qa);

    for (int ci = 0; ci < spec.n_characters; ++ci) {
        const std::string name =
            std::string(kSurnames[ci % kSurnames.size()]) + kGivens[(ci / 10) % kGivens.size()];
        std::string nickname = kNicknames[ci % kNicknames.size()];
        if (ci >= static_cast<int>(kNicknames.size()))
            nickname += std::to_string(ci / kNicknames.size());

        const std::size_t expected_need =
            static_cast<std::size_t>(tokens_per_item) *
                (11 + spec.relationships_per_char +
                 spec.events_per_char * (1 + spec.dialogues_per_event * spec.turns_per_dialogue)) +
            spec.events_per_char;
        FactTokenAllocator tokens(expected_need);
        auto take_tokens = [&tokens, tokens_per_item]() {
            std::vector<std::string> t;
            for (int i = 0; i < tokens_per_item; ++i) t.push_back(tokens.next());
            return t;
        };

        store::CharacterMemory cm;
        cm.character_id = name;
        std::vector<QATarget> pro_targets, sr_targets, evt_targets, dlg_targets;

        // profile -------------------------------------------------------------
        std::vector<std::pair<std::string, std::string>> attrs = {
            {"性别", rng.below(2) ? "女" : "男"},
            {"昵称", nickname},
            {"年龄", std::to_string(20 + rng.below(40)) + "岁"},
            {"国籍", kNationalities[rng.below(kNationalities.size())]},
            {"外貌", kAppearances[rng.below(kAppearances.size())]},
            {"成就", kAchievements[rng.below(kAchievements.size())]},
            {"教育", kEducations[rng.below(kEducations.size())]},
            {"职业", kProfessions[rng.below(kProfessions.size())]},
            {"雇主", kEmployers[rng.below(kEmployers.size())]},
            {"奖项", kAwards[rng.below(kAwards.size())]},
            {"榜样", kRoleModels[rng.below(kRoleModels.size())]},
        };
        // leave a couple of fields empty on some characters
        if (ci % 3 == 1) attrs[9].second.clear();
        if (ci % 4 == 2) attrs[10].second.clear();
        for (auto& [attr, base] : attrs) {
            if (base.empty()) {
                cm.profile[attr] = "";
                continue;
            }
            auto toks = take_tokens();
            cm.profile[attr] = base + ", 标记" + join_tokens(toks);
            QATarget t;
            t.subtype = store::Subtype::PRO;
            t.provenance = "profile/" + attr;
            t.tokens = toks;
            t.attr = attr;
            t.base = base;
            pro_targets.push_back(std::move(t));
        }

        // relationships -------------------------------------------------------
        std::set<std::string> used_peers{name};
        for (int ri = 0; ri < spec.relationships_per_char; ++ri) {
            std::string peer;
            do {
                peer = std::string(kSurnames[rng.below(kSurnames.size())]) +
                       kGivens[rng.below(kGivens.size())];
            } while (used_peers.count(peer));
            used_peers.insert(peer);
            std::string category = kCategories[ri % kCategories.size()];
            auto toks = take_tokens();
            store::Relationship rel;
            rel.peer_name = peer;
            rel.category = category;
            rel.description =
                peer + "是" + name + "的" + category + ", 他们常讨论" + join_tokens(toks) + "。";
            cm.relationships.push_back(rel);
            QATarget t;
            t.subtype = store::Subtype::SR;
            t.provenance = "relationship/" + std::to_string(ri);
            t.tokens = toks;
            t.peer = peer;
            t.category = category;
            sr_targets.push_back(std::move(t));
        }

        // events + dialogues ---------------------------------------------------
        for (int ei = 0; ei < spec.events_per_char; ++ei) {
            std::string event_id = "evt" + std::to_string(ci) + "_" + std::to_string(ei);
            std::string topic = kTopics[rng.below(kTopics.size())];
            auto toks = take_tokens();
            std::string link = tokens.next();
            store::Event ev;
            ev.event_id = event_id;
            ev.topic = topic;
            ev.narrative = "关于" + topic + "的事, " + name + "参与其中, 要点包括" +
                           join_tokens(toks) + ", 记录编号" + link + "。";
            cm.events.push_back(ev);
            QATarget t;
            t.subtype = store::Subtype::EVT;
            t.provenance = "event/" + event_id;
            t.tokens = toks;
            t.topic = topic;
            evt_targets.push_back(std::move(t));

            for (int di = 0; di < spec.dialogues_per_event; ++di) {
                store::Dialogue dlg;
                dlg.dialogue_id = "dlg" + std::to_string(ci) + "_" + std::to_string(ei) + "_" +
                                  std::to_string(di);
                dlg.event_id = event_id;
                for (int ti = 0; ti < spec.turns_per_dialogue; ++ti) {
                    const bool own_turn = ti % 2 == 0;
                    auto turn_toks = take_tokens();
                    store::DialogueTurn turn;
                    turn.speaker = own_turn ? name : "AI助手";
                    turn.utterance =
                        own_turn ? "说起" + link + "的那次, 我记得的要点是" +
                                       join_tokens(turn_toks) + "。"
                                 : "请继续讲讲" + link + "那次, 特别是" +
                                       join_tokens(turn_toks) + "。";
                    dlg.turns.push_back(turn);
                    if (own_turn) {
                        QATarget dt;
                        dt.subtype = store::Subtype::DLG;
                        dt.provenance =
                            "dialogue/" + dlg.dialogue_id + "/turn/" + std::to_string(ti);
                        dt.tokens = turn_toks;
                        dlg_targets.push_back(std::move(dt));
                    }
                }
                cm.dialogues.push_back(std::move(dlg));
            }
        }

        out.db.add_character(std::move(cm));

        // QA items --------------------------------------------------------------
        std::array<std::vector<QATarget>*, 4> pools = {&pro_targets, &sr_targets, &evt_targets,
                                                       &dlg_targets};
        std::array<std::size_t, 4> cursor = {0, 0, 0, 0};
        for (int j = 0; j < spec.qa_per_char; ++j) {
            int pool_idx = j % 4;
            // fall through to the next subtype with available targets
            int probes = 0;
            while (pools[pool_idx]->empty() && probes < 4) {
                pool_idx = (pool_idx + 1) % 4;
                ++probes;
            }
            if (pools[pool_idx]->empty()) break;
            const QATarget& t = (*pools[pool_idx])[cursor[pool_idx] % pools[pool_idx]->size()];
            ++cursor[pool_idx];

            const std::size_t variant = rng.below(2);
            std::string question;
            AnswerBuilder ab;
            switch (t.subtype) {
                case store::Subtype::PRO:
                    question = variant == 0 ? name + "的" + t.attr + "是什么?"
                                            : "请介绍一下" + name + "的" + t.attr + "情况。";
                    ab.lit(name + "的" + t.attr + "是" + t.base + ", 标记");
                    ab.anchored_join(t.tokens);
                    ab.lit("。");
                    break;
                case store::Subtype::SR:
                    question = variant == 0 ? name + "和" + t.peer + "是什么关系?"
                                            : name + "与" + t.peer + "之间是什么关系?";
                    ab.lit(t.peer + "是" + name + "的" + t.category + ", 他们常讨论");
                    ab.anchored_join(t.tokens);
                    ab.lit("。");
                    break;
                case store::Subtype::EVT:
                    question = variant == 0
                                   ? name + "经历的关于" + t.tokens.front() + "的事件是什么?"
                                   : "那次涉及" + t.tokens.front() + "的活动中发生了什么事件?";
                    ab.lit(name + "参与了关于" + t.topic + "的事, 要点包括");
                    ab.anchored_join(t.tokens);
                    ab.lit("。");
                    break;
                case store::Subtype::DLG:
                    question = variant == 0
                                   ? "在提到" + t.tokens.front() + "的对话中" + name + "说了什么?"
                                   : "当对话谈到" + t.tokens.front() + "的时候" + name +
                                         "说了什么内容?";
                    ab.lit(name + "说起那次, 记得的要点是");
                    ab.anchored_join(t.tokens);
                    ab.lit("。");
                    break;
            }

            store::QAItem qa;
            char qa_id[32];
            std::snprintf(qa_id, sizeof(qa_id), "qa_c%03d_%04d", ci, j);
            qa.qa_id = qa_id;
            qa.character_id = name;
            qa.question = question;
            qa.answer = ab.answer;
            qa.anchors = ab.anchors;
            qa.reference_item_ids.push_back(
                store::item_id_for(name, t.subtype, t.provenance));
            out.qa.push_back(std::move(qa));
            out.questions.push_back({question, store::mem_type_of(t.subtype)});
        }
    }

    // Shuffle the labeled question list so contiguous or interleaved splits
    // are balanced across subtypes and characters (emission order is a
    // per-character subtype round-robin, which would make even/odd splits
    // degenerate).
    for (std::size_t i = out.questions.size(); i > 1; --i)
        std::swap(out.questions[i - 1], out.questions[rng.below(i)]);

    // Fill reference texts from the real segmentation so references align by
    // exact match.
    auto items = store::segment_memories(out.db);
    std::unordered_map<std::string, const store::MemoryItem*> by_id;
    for (const auto& it : items) by_id[it.item_id] = &it;
    for (auto& qa : out.qa) {
        qa.reference_memory_texts.clear();
        for (const auto& id : qa.reference_item_ids) {
            auto found = by_id.find(id);
            if (found == by_id.end())
                throw SchemaError("generate_corpus", "internal: unresolved reference " + id);
            qa.reference_memory_texts.push_back(found->second->text);
        }
    }
    return out;
}

} // namespace memq::gen
