// Copyright 2026 The Quake Triage Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// UTF-8 helpers with Turkish casing rules (I <-> ı, İ <-> i). Character
// offsets used throughout the project count Unicode scalar values.

#include <string>
#include <string_view>

namespace triage::unicode {

std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
std::string encode(char32_t c);

// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view utf8);

// Slice [start, end) in scalar-value offsets.
std::string substr(std::string_view utf8, std::size_t start, std::size_t end);

char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);

bool is_letter(char32_t c);
bool is_digit(char32_t c);
bool is_space(char32_t c);
bool is_upper(char32_t c);
bool is_lower(char32_t c);
inline bool is_alnum(char32_t c) { return is_letter(c) || is_digit(c); }
// Anything that is neither a letter, a digit, nor whitespace.
inline bool is_punct(char32_t c) {
  return !is_letter(c) && !is_digit(c) && !is_space(c);
}

std::u32string fold(std::u32string_view text);
std::string fold(std::string_view utf8);

// First letter upper-cased, the rest lower-cased.
std::u32string title_word(std::u32string_view word);

}  // namespace triage::unicode
