/* Copyright 2026 The ATD Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATD_UTF8_HPP_
#define ATD_UTF8_HPP_

#include <optional>
#include <string>
#include <string_view>

namespace atd::utf8 {

// Strict decoder: rejects overlongs, surrogates and truncated sequences.
std::optional<std::u32string> TryDecode(std::string_view bytes);

// Throws Error(kMalformedUtf8) on invalid input.
std::u32string Decode(std::string_view bytes);

std::string Encode(std::u32string_view text);
void Append(std::string& out, char32_t cp);

}  // namespace atd::utf8

#endif  // ATD_UTF8_HPP_
