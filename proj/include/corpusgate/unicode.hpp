#pragma once

// Thin wrappers around ICU character properties. All text in corpusgate is
// UTF-8 at the API surface and decoded to scalar values where counting or
// classification happens.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace corpusgate::unicode {

// Decodes UTF-8 to scalar values. Throws DataError on ill-formed input,
// naming the byte offset.
std::u32string decode_utf8(std::string_view text);

// Byte offset of the first ill-formed sequence, or nullopt if `text` is valid.
std::optional<std::size_t> find_invalid_utf8(std::string_view text);

inline bool is_valid_utf8(std::string_view text) { return !find_invalid_utf8(text).has_value(); }

void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view text);

bool is_whitespace(char32_t cp);   // White_Space property
bool is_letter(char32_t cp);       // L*
bool is_mark(char32_t cp);         // M*
bool is_number(char32_t cp);       // N*
bool is_punctuation(char32_t cp);  // P*
bool is_uppercase(char32_t cp);    // Lu
bool is_decimal_digit(char32_t cp);  // Nd

// True for scripts Latin, Common and Inherited.
bool is_latin_compatible(char32_t cp);
std::string script_name(char32_t cp);

char32_t to_lower(char32_t cp);
std::u32string to_lower(std::u32string_view text);

// "U+0410"
std::string codepoint_label(char32_t cp);

}  // namespace corpusgate::unicode
