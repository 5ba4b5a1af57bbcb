#pragma once

#include <string>
#include <string_view>

namespace tweetscope::unicode {

std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

// Throws InputError on invalid UTF-8.
void require_valid(std::string_view utf8);

std::string nfc(std::string_view utf8);
std::string fold_case(std::string_view utf8);

bool is_whitespace(char32_t cp);
bool is_punctuation(char32_t cp);
bool is_decimal_digit(char32_t cp);
// Emoji (non-ASCII), Extended_Pictographic, variation selectors, keycap,
// skin-tone modifiers and tag characters.
bool is_emoji_component(char32_t cp);

inline constexpr char32_t kZwnj = 0x200C;
inline constexpr char32_t kZwj = 0x200D;

}  // namespace tweetscope::unicode
