#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace corpusforge {

// UTF-8 helpers. Decoding is lossy: every invalid byte sequence (including
// encoded surrogates) becomes U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view codepoints);
void append_utf8(std::string& out, char32_t cp);

// Re-encodes `bytes` as valid UTF-8 and drops NUL characters.
std::string sanitize_utf8(std::string_view bytes);

std::size_t codepoint_count(std::string_view utf8);

bool is_space(char32_t cp);
bool is_letter(char32_t cp);
bool is_ethiopic(char32_t cp);
char32_t to_lower(char32_t cp);

// Splits on runs of ASCII space; empty tokens are never returned.
std::vector<std::string> split_words(std::string_view text);

std::string_view trim(std::string_view s);

// 64-bit FNV-1a. Stable across platforms and runs; used for ids and content
// hashes that end up in files.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace corpusforge
