// Copyright 2026 The strided-tenet Authors.
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
#include <string>

#include "stenet/mps.hpp"

namespace stenet {

// Binary checkpoint layout (all integers little-endian):
//   8 bytes   magic "STNETMPS"
//   u32       format version
//   u32       header length L
//   L bytes   JSON header: stride, local_dim, bond_dim, n_sites, output_dim,
//             output_site, feature_map, seed, format_version, core shapes
//   f64 * P   core values in site order, each core row-major
//   u64       FNV-1a hash of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const MpsModel& model);
MpsModel deserialize_checkpoint(const std::string& bytes);

// Writes atomically via a sibling temporary file.
void save_checkpoint(const MpsModel& model, const std::filesystem::path& path);
MpsModel load_checkpoint(const std::filesystem::path& path);

}  // namespace stenet
