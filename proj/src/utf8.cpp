#include "sublang/utf8.hpp"

namespace sublang::utf8 {

char32_t decode(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t off) -> int {
        if (i + off >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + off]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 >= 0) {
            const char32_t cp = ((b0 & 0x1Fu) << 6) | static_cast<unsigned>(c1);
            if (cp >= 0x80) {
                i += 2;
                return cp;
            }
        }
    } else if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1), c2 = cont(2);
        if (c1 >= 0 && c2 >= 0) {
            const char32_t cp = ((b0 & 0x0Fu) << 12) | (static_cast<unsigned>(c1) << 6) |
                                static_cast<unsigned>(c2);
            if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) {
                i += 3;
                return cp;
            }
        }
    } else if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
            const char32_t cp = ((b0 & 0x07u) << 18) | (static_cast<unsigned>(c1) << 12) |
                                (static_cast<unsigned>(c2) << 6) | static_cast<unsigned>(c3);
            if (cp >= 0x10000 && cp <= 0x10FFFF) {
                i += 4;
                return cp;
            }
        }
    }
    // invalid lead or truncated sequence: emit the raw byte
    ++i;
    return b0;
}

void encode(char32_t cp, std::string& out) {
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
}

char32_t to_lower(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 32;
    if (c < 0x80) return c;
    // Latin-1 supplement (0xD7 is the multiplication sign)
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    // Latin Extended-A
    if (c == 0x130) return 0x69;  // I-with-dot maps to plain i under simple folding
    if (c >= 0x100 && c <= 0x137) return c | 1;
    if (c >= 0x139 && c <= 0x148) return (c & 1) ? c + 1 : c;
    if (c >= 0x14A && c <= 0x177) return c | 1;
    if (c == 0x178) return 0xFF;
    if (c >= 0x179 && c <= 0x17D) return (c & 1) ? c + 1 : c;
    // Greek
    if (c == 0x386) return 0x3AC;
    if (c >= 0x388 && c <= 0x38A) return c + 37;
    if (c == 0x38C) return 0x3CC;
    if (c == 0x38E || c == 0x38F) return c + 63;
    if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
    // Cyrillic
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

std::string lowercase(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const std::size_t before = i;
        const char32_t cp = decode(s, i);
        // invalid byte passed through by decode: keep it untouched
        const bool raw = (i - before == 1) && static_cast<unsigned char>(s[before]) >= 0x80;
        const char32_t lo = raw ? cp : to_lower(cp);
        if (raw || lo == cp) {
            out.append(s.substr(before, i - before));
        } else {
            encode(lo, out);
        }
    }
    return out;
}

}  // namespace sublang::utf8
