#ifndef MEMQ_CLASSIFIER_HPP
#define MEMQ_CLASSIFIER_HPP

#include "memq/store.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace memq::cls {

/// Probability distribution over the two memory types for a question.
/// Components sum to 1; argmax tie-break goes to semantic.
struct ClassDistribution {
    double p_semantic = 0.5;
    double p_episodic = 0.5;

    store::MemType argmax() const {
        return p_semantic >= p_episodic ? store::MemType::semantic : store::MemType::episodic;
    }
    double prob_of(store::MemType t) const {
        return t == store::MemType::semantic ? p_semantic : p_episodic;
    }
};

struct LabeledQuestion {
    std::string question;
    store::MemType label = store::MemType::semantic;
};

/// Adapter slot: anything that maps a question to a type distribution can
/// drive re-ranking (an external model would plug in here).
class QuestionClassifier {
public:
    virtual ~QuestionClassifier() = default;
    virtual ClassDistribution classify(const std::string& question) const = 0;
    virtual std::string name() const = 0;
};

/// Returns the configured fixed distribution; classify-free baselines use the
/// default uniform instance.
class UniformClassifier : public QuestionClassifier {
public:
    explicit UniformClassifier(ClassDistribution d = {0.5, 0.5}) : dist_(d) {}
    ClassDistribution classify(const std::string&) const override { return dist_; }
    std::string name() const override { return "uniform"; }

private:
    ClassDistribution dist_;
};

/// Multinomial naive Bayes over the shared tokenizer vocabulary, with
/// additive smoothing applied to per-class token frequencies so that
/// duplicating the training set leaves the posterior unchanged.
class NaiveBayesClassifier : public QuestionClassifier {
public:
    /// Requires at least one example per class and a nonempty vocabulary.
    static NaiveBayesClassifier train(const std::vector<LabeledQuestion>& examples,
                                      double smoothing = 1.0);

    ClassDistribution classify(const std::string& question) const override;
    std::string name() const override { return "naive-bayes"; }

    double smoothing() const { return smoothing_; }
    std::size_t vocabulary_size() const { return vocabulary_.size(); }

    /// Smoothed P(token|class); tokens outside the vocabulary get the pure
    /// smoothing mass. Exposed for the oracle tests.
    double token_likelihood(const std::string& token, store::MemType c) const;
    double prior(store::MemType c) const;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static NaiveBayesClassifier load(std::istream& in);
    static NaiveBayesClassifier load_file(const std::string& path);

private:
    NaiveBayesClassifier() = default;

    struct ClassStats {
        std::uint64_t example_count = 0;
        std::uint64_t token_total = 0;
        std::map<std::string, std::uint64_t> counts;
    };

    double smoothing_ = 1.0;
    ClassStats semantic_;
    ClassStats episodic_;
    std::map<std::string, char> vocabulary_; // token -> presence

    const ClassStats& stats(store::MemType c) const {
        return c == store::MemType::semantic ? semantic_ : episodic_;
    }
    void rebuild_vocab();
};

struct PerClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Weighted-average classification metrics (weights = class support).
struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    PerClassMetrics semantic;
    PerClassMetrics episodic;
    std::size_t n = 0;
};

ClassMetrics evaluate_classifier(const QuestionClassifier& model,
                                 const std::vector<LabeledQuestion>& test);

} // namespace memq::cls

#endif
