#ifndef MEMQ_TEXT_HPP
#define MEMQ_TEXT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memq::text {

/// Tokenizer output. Latin/digit runs become single word tokens; each maximal
/// CJK run of length n contributes n unigrams followed by n-1 bigrams.
struct TokenList {
    std::vector<std::string> tokens;
    int source_len = 0; // code points of the normalized input
};

/// Canonical text normalization shared by the classifier, retriever and
/// exact-match evaluation: full-width forms folded to half-width, Latin
/// letters lowercased, all whitespace collapsed to single spaces, trimmed.
/// Idempotent.
std::string normalize(std::string_view s);

/// Tokenize already-normalized text. Punctuation is dropped.
TokenList tokenize(std::string_view normalized);

/// normalize + tokenize in one call.
TokenList tokenize_normalized(std::string_view raw);

bool is_cjk(char32_t cp);

// UTF-8 helpers. Invalid byte sequences decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::string utf8_encode_cp(char32_t cp);

// FNV-1a 64-bit hash, used for stable non-cryptographic ids.
std::uint64_t fnv1a64(std::string_view s);
std::string hex16(std::uint64_t v);

} // namespace memq::text

#endif
