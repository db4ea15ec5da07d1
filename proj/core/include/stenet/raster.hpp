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
#include <vector>

namespace stenet {

// Decoded raster: interleaved samples, 1 (gray) or 3 (RGB) channels.
// Alpha is dropped and palettes are expanded on read.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  int max_value = 255;  // 255 for 8-bit, 65535 for 16-bit, PNM maxval otherwise
  std::vector<std::uint16_t> samples;
};

// Reads PNG or binary/ASCII PGM/PPM; format is detected from the content.
Raster read_raster(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Raster& raster);

}  // namespace stenet
