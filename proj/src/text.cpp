#include "memq/text.hpp"


namespace memq::text {

namespace {

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0:
        case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
        case 0xFEFF:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

char32_t fold_cp(char32_t cp) {
    // Full-width ASCII variants -> ASCII (letters, digits, punctuation).
    if (cp >= 0xFF01 && cp <= 0xFF5E) cp -= 0xFEE0;
    // ASCII uppercase.
    if (cp >= 'A' && cp <= 'Z') cp += 0x20;
    // Latin-1 uppercase letters, excluding the multiplication sign.
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) cp += 0x20;
    return cp;
}

bool is_word_cp(char32_t cp) {
    if (cp >= 'a' && cp <= 'z') return true;
    if (cp >= '0' && cp <= '9') return true;
    // Lowercased Latin-1 letters.
    if (cp >= 0xDF && cp <= 0xFF && cp != 0xF7) return true;
    return false;
}

} // namespace

bool is_cjk(char32_t cp) {
    return (cp >= 0x3400 && cp <= 0x4DBF) ||   // CJK extension A
           (cp >= 0x4E00 && cp <= 0x9FFF) ||   // CJK unified
           (cp >= 0xF900 && cp <= 0xFAFF) ||   // compatibility ideographs
           (cp >= 0x20000 && cp <= 0x2A6DF);   // extension B
}

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        size_t len = 1;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
            cp = (c & 0x1F) << 6 | (s[i + 1] & 0x3F);
            len = 2;
            if ((s[i + 1] & 0xC0) != 0x80 || cp < 0x80) { cp = 0xFFFD; len = 1; }
        } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
            cp = (c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
            len = 3;
            if ((s[i + 1] & 0xC0) != 0x80 || (s[i + 2] & 0xC0) != 0x80 || cp < 0x800) {
                cp = 0xFFFD;
                len = 1;
            }
        } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
            cp = (c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 | (s[i + 2] & 0x3F) << 6 |
                 (s[i + 3] & 0x3F);
            len = 4;
            if ((s[i + 1] & 0xC0) != 0x80 || (s[i + 2] & 0xC0) != 0x80 ||
                (s[i + 3] & 0xC0) != 0x80 || cp < 0x10000 || cp > 0x10FFFF) {
                cp = 0xFFFD;
                len = 1;
            }
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode_cp(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

std::string utf8_encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size() * 3);
    for (char32_t cp : s) out += utf8_encode_cp(cp);
    return out;
}

std::string normalize(std::string_view s) {
    std::u32string cps = utf8_decode(s);
    std::u32string out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (char32_t cp : cps) {
        if (is_space_cp(cp)) {
            pending_space = !out.empty();
            continue;
        }
        cp = fold_cp(cp);
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return utf8_encode(out);
}

TokenList tokenize(std::string_view normalized) {
    std::u32string cps = utf8_decode(normalized);
    TokenList result;
    result.source_len = static_cast<int>(cps.size());

    size_t i = 0;
    const size_t n = cps.size();
    while (i < n) {
        if (is_word_cp(cps[i])) {
            size_t j = i;
            while (j < n && is_word_cp(cps[j])) ++j;
            result.tokens.push_back(utf8_encode(std::u32string_view(cps.data() + i, j - i)));
            i = j;
        } else if (is_cjk(cps[i])) {
            size_t j = i;
            while (j < n && is_cjk(cps[j])) ++j;
            for (size_t u = i; u < j; ++u) result.tokens.push_back(utf8_encode_cp(cps[u]));
            for (size_t u = i; u + 1 < j; ++u)
                result.tokens.push_back(utf8_encode_cp(cps[u]) + utf8_encode_cp(cps[u + 1]));
            i = j;
        } else {
            ++i; // separator: whitespace, punctuation, symbols
        }
    }
    return result;
}

TokenList tokenize_normalized(std::string_view raw) {
    return tokenize(normalize(raw));
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

} // namespace memq::text
