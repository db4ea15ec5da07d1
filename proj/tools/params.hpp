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

// Flag/config-file binding. Every flag has a config key (the long flag name
// with '-' replaced by '_'). Values from a JSON config fill only the keys
// whose flags were not given on the command line.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stenet/errors.hpp"

namespace stenet::cli {

class ParamSet {
 public:
  template <typename T>
  CLI::Option* add(CLI::App& app, const std::string& flag, T& value, const std::string& help) {
    CLI::Option* opt = app.add_option(flag, value, help)->capture_default_str();
    bind(opt, key_of(flag), value);
    return opt;
  }

  CLI::Option* add_flag(CLI::App& app, const std::string& flag, bool& value,
                        const std::string& help) {
    CLI::Option* opt = app.add_flag(flag, value, help);
    bind(opt, key_of(flag), value);
    return opt;
  }

  // Fills values not given on the command line from `path`. Unknown keys are
  // a usage error so typos do not silently fall back to defaults.
  void apply_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("config " + path.string() + ": " + e.what());
    }
    if (!file.is_object()) throw FormatError("config " + path.string() + ": expected an object");
    for (const auto& [key, value] : file.items()) {
      const Entry* entry = find(key);
      if (!entry) throw UsageError("config " + path.string() + ": unknown key '" + key + "'");
      if (entry->option->count() > 0) continue;
      try {
        entry->set(value);
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("config key '" + key + "': " + e.what());
      }
    }
  }

  nlohmann::json resolved() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& e : entries_) out[e.key] = e.get();
    return out;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<nlohmann::json()> get;
    std::function<void(const nlohmann::json&)> set;
  };

  static std::string key_of(const std::string& flag) {
    std::string name = flag;
    // "-k,--stride" style: keep the long name.
    if (auto comma = name.rfind(','); comma != std::string::npos) name = name.substr(comma + 1);
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    for (char& c : name) {
      if (c == '-') c = '_';
    }
    return name;
  }

  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, T& value) {
    entries_.push_back({key, opt, [&value] { return nlohmann::json(value); },
                        [&value](const nlohmann::json& j) { value = j.get<T>(); }});
  }

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }

  std::vector<Entry> entries_;
};

}  // namespace stenet::cli
