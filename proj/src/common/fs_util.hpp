// Copyright 2026 The AFCC Authors
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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace afcc {

// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Little-endian float32 (de)serialization.
void append_f32le(std::vector<std::uint8_t>& out, std::span<const float> v);
std::vector<float> parse_f32le(std::span<const std::uint8_t> bytes,
                               std::size_t offset, std::size_t count);

// 64-bit FNV-1a; used for content fingerprints in manifests and tests.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace afcc
