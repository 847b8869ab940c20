#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sublang::utf8 {

// Decodes the codepoint starting at byte offset i and advances i past it.
// Invalid bytes are passed through one at a time as their own "codepoints"
// so that arbitrary byte strings survive a lowercase round trip unchanged.
char32_t decode(std::string_view s, std::size_t& i);

void encode(char32_t cp, std::string& out);

// Simple (1:1) case mapping covering ASCII, Latin-1, Latin Extended-A,
// Greek, and Cyrillic; other codepoints map to themselves. Locale-free and
// identical on every platform.
char32_t to_lower(char32_t cp);

std::string lowercase(std::string_view s);

}  // namespace sublang::utf8
