#pragma once

#include <string>
#include <string_view>

#include "fcr/corpus.hpp"

namespace fcr {

enum class Channel { Original, English };

const char* to_string(Channel channel);
/// Accepts "original" / "english". Throws ConfigError otherwise.
Channel parse_channel(std::string_view name);

struct CleaningConfig {
    bool strip_urls = true;
    bool strip_hashtags = true;
    bool strip_emoji = true;
    /// Also trims leading and trailing whitespace.
    bool collapse_whitespace = true;

    bool operator==(const CleaningConfig&) const = default;
};

/// Code points removed by the emoji rule.
bool is_emoji_code_point(char32_t cp);
bool is_space_code_point(char32_t cp);

/// Removes URLs, `#`-prefixed tokens and emoji, then normalizes whitespace.
///
/// Rules are applied in that order so that removing an emoji can never leave a
/// URL or a hashtag behind, which makes the function idempotent. Bytes that
/// are not valid UTF-8 are kept verbatim and treated as ordinary characters.
std::string clean_text(std::string_view raw, const CleaningConfig& cfg);

/// Cleaned channel text followed by the cleaned OCR text, separated by a space.
/// Throws DataError if `channel` is English and the post has no translation.
std::string combine_post(const Document& post, const CleaningConfig& cfg, Channel channel);

}  // namespace fcr
