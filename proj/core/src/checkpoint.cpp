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

#include "stenet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "stenet/errors.hpp"

namespace stenet {
namespace {

constexpr char kMagic[8] = {'S', 'T', 'N', 'E', 'T', 'M', 'P', 'S'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string serialize_checkpoint(const MpsModel& model) {
  model.validate();
  nlohmann::json header = {
      {"format_version", kCheckpointVersion},
      {"stride", model.stride},
      {"local_dim", model.local_dim},
      {"bond_dim", model.bond_dim},
      {"n_sites", model.n_sites},
      {"output_dim", model.output_dim},
      {"output_site", model.output_site},
      {"feature_map", model.feature_map},
      {"seed", model.seed},
  };
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& core : model.cores) shapes.push_back(core.values.shape());
  header["core_shapes"] = shapes;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& core : model.cores) {
    for (double v : core.values.data()) put<double>(out, v);
  }
  put<std::uint64_t>(out, fnv1a(out));
  return out;
}

MpsModel deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a strided-tenet checkpoint");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint format version " + std::to_string(version) +
                       " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::size_t tail = body;
  const auto stored_hash = get<std::uint64_t>(bytes, tail);
  if (fnv1a(std::string_view(bytes).substr(0, body)) != stored_hash) {
    throw FormatError("checkpoint checksum mismatch (file corrupted)");
  }
  const auto header_len = get<std::uint32_t>(bytes, pos);
  if (pos + header_len > body) throw FormatError("checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  MpsModel model;
  try {
    if (header.at("format_version").get<std::uint32_t>() != version) {
      throw VersionError("checkpoint header version disagrees with preamble");
    }
    model.stride = header.at("stride").get<int>();
    model.local_dim = header.at("local_dim").get<int>();
    model.bond_dim = header.at("bond_dim").get<int>();
    model.n_sites = header.at("n_sites").get<int>();
    model.output_dim = header.at("output_dim").get<int>();
    model.output_site = header.at("output_site").get<int>();
    model.feature_map = header.at("feature_map").get<std::string>();
    model.seed = header.at("seed").get<std::uint64_t>();
    const auto shapes = header.at("core_shapes");
    if (!shapes.is_array() || shapes.size() != static_cast<std::size_t>(model.n_sites)) {
      throw FormatError("checkpoint core_shapes malformed");
    }
    for (const auto& s : shapes) {
      Shape shape = s.get<Shape>();
      const std::size_t count = shape_size(shape);
      if (pos + count * sizeof(double) > body) throw FormatError("checkpoint values truncated");
      std::vector<double> values(count);
      std::memcpy(values.data(), bytes.data() + pos, count * sizeof(double));
      pos += count * sizeof(double);
      model.cores.push_back(MpsCore{DenseTensor(std::move(shape), std::move(values))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint core: ") + e.what());
  }
  if (pos != body) throw FormatError("checkpoint has trailing bytes");
  try {
    model.validate();
  } catch (const StateError& e) {
    throw FormatError(std::string("checkpoint inconsistent: ") + e.what());
  }
  return model;
}

void save_checkpoint(const MpsModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

MpsModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace stenet
