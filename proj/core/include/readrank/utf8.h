// Copyright 2026 The readrank Authors.
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

#ifndef READRANK_UTF8_H_
#define READRANK_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace readrank::utf8 {

// Splits a UTF-8 string into code-point substrings. Invalid bytes are
// returned as single-byte pieces.
std::vector<std::string_view> CodePoints(std::string_view s);

// Decodes the first code point of `piece`; returns U+FFFD when invalid.
char32_t Decode(std::string_view piece);

std::size_t Length(std::string_view s);

// CJK unified ideographs, extensions, compatibility ideographs, and CJK
// symbols/punctuation plus full-width forms.
bool IsCjk(char32_t c);

}  // namespace readrank::utf8

#endif  // READRANK_UTF8_H_
