#include "memq/classifier.hpp"

#include "memq/errors.hpp"
#include "memq/text.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

using nlohmann::json;

namespace memq::cls {

namespace {
constexpr int kModelFormatVersion = 1;
}

NaiveBayesClassifier NaiveBayesClassifier::train(const std::vector<LabeledQuestion>& examples,
                                                 double smoothing) {
    if (smoothing <= 0.0) throw SchemaError("smoothing", "must be positive");
    NaiveBayesClassifier m;
    m.smoothing_ = smoothing;
    for (const auto& ex : examples) {
        ClassStats& cs =
            ex.label == store::MemType::semantic ? m.semantic_ : m.episodic_;
        ++cs.example_count;
        for (const auto& tok : text::tokenize_normalized(ex.question).tokens) {
            ++cs.counts[tok];
            ++cs.token_total;
        }
    }
    if (m.semantic_.example_count == 0 || m.episodic_.example_count == 0)
        throw InsufficientData("need at least one training example per class");
    m.rebuild_vocab();
    if (m.vocabulary_.empty())
        throw InsufficientData("training produced an empty vocabulary");
    return m;
}

void NaiveBayesClassifier::rebuild_vocab() {
    vocabulary_.clear();
    for (const auto& [t, c] : semantic_.counts) vocabulary_[t] = 1;
    for (const auto& [t, c] : episodic_.counts) vocabulary_[t] = 1;
}

double NaiveBayesClassifier::token_likelihood(const std::string& token, store::MemType c) const {
    // Smoothed relative frequency: (freq + a/V) / (1 + a). Pure function of
    // count ratios, so duplicating the training data changes nothing.
    const ClassStats& cs = stats(c);
    const double v = static_cast<double>(vocabulary_.size());
    if (cs.token_total == 0) return 1.0 / v;
    double freq = 0.0;
    auto it = cs.counts.find(token);
    if (it != cs.counts.end())
        freq = static_cast<double>(it->second) / static_cast<double>(cs.token_total);
    return (freq + smoothing_ / v) / (1.0 + smoothing_);
}

double NaiveBayesClassifier::prior(store::MemType c) const {
    double total = static_cast<double>(semantic_.example_count + episodic_.example_count);
    return static_cast<double>(stats(c).example_count) / total;
}

ClassDistribution NaiveBayesClassifier::classify(const std::string& question) const {
    auto tokens = text::tokenize_normalized(question).tokens;
    double log_sem = std::log(prior(store::MemType::semantic));
    double log_epi = std::log(prior(store::MemType::episodic));
    for (const auto& t : tokens) {
        log_sem += std::log(token_likelihood(t, store::MemType::semantic));
        log_epi += std::log(token_likelihood(t, store::MemType::episodic));
    }
    // log-sum-exp normalization
    double mx = std::max(log_sem, log_epi);
    double zs = std::exp(log_sem - mx);
    double ze = std::exp(log_epi - mx);
    ClassDistribution d;
    d.p_semantic = zs / (zs + ze);
    d.p_episodic = ze / (zs + ze);
    return d;
}

namespace {

json stats_to_json(const char* label, const NaiveBayesClassifier&, std::uint64_t example_count,
                   std::uint64_t token_total, const std::map<std::string, std::uint64_t>& counts) {
    json j;
    j["label"] = label;
    j["example_count"] = example_count;
    j["token_total"] = token_total;
    j["counts"] = json::object();
    for (const auto& [t, c] : counts) j["counts"][t] = c;
    return j;
}

} // namespace

void NaiveBayesClassifier::save(std::ostream& out) const {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["model"] = "multinomial-nb";
    j["smoothing"] = smoothing_;
    j["semantic"] = stats_to_json("semantic", *this, semantic_.example_count,
                                  semantic_.token_total, semantic_.counts);
    j["episodic"] = stats_to_json("episodic", *this, episodic_.example_count,
                                  episodic_.token_total, episodic_.counts);
    out << j.dump(2) << "\n";
}

void NaiveBayesClassifier::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write model file: " + path);
    save(f);
}

NaiveBayesClassifier NaiveBayesClassifier::load(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid model file: ") + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion)
        throw SchemaError("$.format_version", "unsupported model format version");
    NaiveBayesClassifier m;
    m.smoothing_ = j.at("smoothing").get<double>();
    auto load_stats = [&j](const char* key, NaiveBayesClassifier::ClassStats& cs) {
        const json& s = j.at(key);
        cs.example_count = s.at("example_count").get<std::uint64_t>();
        cs.token_total = s.at("token_total").get<std::uint64_t>();
        for (auto it = s.at("counts").begin(); it != s.at("counts").end(); ++it)
            cs.counts[it.key()] = it.value().get<std::uint64_t>();
    };
    load_stats("semantic", m.semantic_);
    load_stats("episodic", m.episodic_);
    if (m.semantic_.example_count == 0 || m.episodic_.example_count == 0)
        throw SchemaError("$", "model has an empty class");
    m.rebuild_vocab();
    return m;
}

NaiveBayesClassifier NaiveBayesClassifier::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open model file: " + path);
    return load(f);
}

ClassMetrics evaluate_classifier(const QuestionClassifier& model,
                                 const std::vector<LabeledQuestion>& test) {
    if (test.empty()) throw InsufficientData("empty test set");
    // confusion[actual][predicted], 0 = semantic, 1 = episodic
    std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
    for (const auto& ex : test) {
        int actual = ex.label == store::MemType::semantic ? 0 : 1;
        int pred = model.classify(ex.question).argmax() == store::MemType::semantic ? 0 : 1;
        ++confusion[actual][pred];
    }
    auto per_class = [&confusion](int c) {
        PerClassMetrics pm;
        std::size_t tp = confusion[c][c];
        std::size_t fp = confusion[1 - c][c];
        std::size_t fn = confusion[c][1 - c];
        pm.support = tp + fn;
        pm.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        pm.recall = pm.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pm.support);
        pm.f1 = (pm.precision + pm.recall) == 0.0
                    ? 0.0
                    : 2.0 * pm.precision * pm.recall / (pm.precision + pm.recall);
        return pm;
    };
    ClassMetrics m;
    m.semantic = per_class(0);
    m.episodic = per_class(1);
    m.n = test.size();
    double ws = static_cast<double>(m.semantic.support) / static_cast<double>(m.n);
    double we = static_cast<double>(m.episodic.support) / static_cast<double>(m.n);
    m.precision = ws * m.semantic.precision + we * m.episodic.precision;
    m.recall = ws * m.semantic.recall + we * m.episodic.recall;
    m.f1 = ws * m.semantic.f1 + we * m.episodic.f1;
    m.accuracy = static_cast<double>(confusion[0][0] + confusion[1][1]) / static_cast<double>(m.n);
    return m;
}

} // namespace memq::cls
