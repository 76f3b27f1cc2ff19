#include "fcr/text_preproc.hpp"

#include <cstdint>
#include <vector>

#include "fcr/error.hpp"

namespace fcr {

namespace {

// Undecodable bytes map into U+DC80..U+DCFF (lone low surrogates, which never
// appear in valid UTF-8) so they round-trip unchanged through encode().
constexpr char32_t kRawByteBase = 0xDC00;

bool is_raw_byte(char32_t cp) { return cp >= 0xDC80 && cp <= 0xDCFF; }

std::u32string decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        auto b0 = static_cast<unsigned char>(s[i]);
        int len = 0;
        char32_t cp = 0;
        char32_t min = 0;
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2, cp = b0 & 0x1F, min = 0x80;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3, cp = b0 & 0x0F, min = 0x800;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4, cp = b0 & 0x07, min = 0x10000;
        }
        bool ok = len > 0 && i + len <= s.size();
        for (int k = 1; ok && k < len; ++k) {
            auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (b & 0x3F);
        }
        ok = ok && cp >= min && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
        if (ok) {
            out.push_back(cp);
            i += len;
        } else {
            out.push_back(kRawByteBase + b0);
            ++i;
        }
    }
    return out;
}

std::string encode(const std::u32string& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (is_raw_byte(cp)) {
            out.push_back(static_cast<char>(cp - kRawByteBase));
        } else if (cp < 0x80) {
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
    }
    return out;
}

bool starts_with_at(const std::u32string& s, std::size_t pos, std::u32string_view prefix) {
    return s.compare(pos, prefix.size(), prefix) == 0;
}

void strip_urls(std::u32string& s) {
    static constexpr std::u32string_view prefixes[] = {U"http://", U"https://", U"www."};
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        bool hit = false;
        for (auto prefix : prefixes) {
            if (starts_with_at(s, i, prefix)) {
                hit = true;
                break;
            }
        }
        if (hit) {
            while (i < s.size() && !is_space_code_point(s[i])) ++i;
        } else {
            out.push_back(s[i++]);
        }
    }
    s = std::move(out);
}

void strip_hashtags(std::u32string& s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        bool token_start = i == 0 || is_space_code_point(s[i - 1]);
        if (token_start && s[i] == U'#') {
            while (i < s.size() && !is_space_code_point(s[i])) ++i;
        } else {
            out.push_back(s[i++]);
        }
    }
    s = std::move(out);
}

void collapse_spaces(std::u32string& s) {
    std::u32string out;
    out.reserve(s.size());
    bool pending = false;
    for (char32_t cp : s) {
        if (is_space_code_point(cp)) {
            pending = !out.empty();
        } else {
            if (pending) out.push_back(U' ');
            pending = false;
            out.push_back(cp);
        }
    }
    s = std::move(out);
}

}  // namespace

const char* to_string(Channel channel) {
    return channel == Channel::Original ? "original" : "english";
}

Channel parse_channel(std::string_view name) {
    if (name == "original") return Channel::Original;
    if (name == "english") return Channel::English;
    throw ConfigError("unknown channel '" + std::string(name) + "' (expected original|english)");
}

bool is_emoji_code_point(char32_t cp) {
    return (cp >= 0x1F300 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) ||
           cp == 0xFE0F || cp == 0x200D || (cp >= 0x1F1E6 && cp <= 0x1F1FF);
}

bool is_space_code_point(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::string clean_text(std::string_view raw, const CleaningConfig& cfg) {
    auto cps = decode(raw);
    if (cfg.strip_emoji) std::erase_if(cps, is_emoji_code_point);
    if (cfg.strip_urls) strip_urls(cps);
    if (cfg.strip_hashtags) strip_hashtags(cps);
    if (cfg.collapse_whitespace) collapse_spaces(cps);
    return encode(cps);
}

std::string combine_post(const Document& post, const CleaningConfig& cfg, Channel channel) {
    if (post.kind != DocKind::Post) {
        throw DataError("combine_post called on fact-check '" + post.id + "'");
    }
    const std::string* text = &post.text_original;
    if (channel == Channel::English) {
        if (!post.text_english) {
            throw DataError("post '" + post.id + "' has no English translation");
        }
        text = &*post.text_english;
    }
    std::string body = clean_text(*text, cfg);
    if (!post.ocr_text) return body;
    std::string ocr = clean_text(*post.ocr_text, cfg);
    if (ocr.empty()) return body;
    if (body.empty()) return ocr;
    return body + " " + ocr;
}

}  // namespace fcr
