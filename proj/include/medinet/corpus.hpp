// Copyright (c) the medinet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MEDINET_CORPUS_HPP_
#define MEDINET_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "medinet/degrade.hpp"

namespace medinet {

struct ManifestRow {
  std::string image_path;
  std::string config_json;
  std::string output_path;
  std::string sha256;
  // Non-empty when the image could not be read or written. The row is still
  // emitted with empty output_path and "error: <message>" in the hash column.
  std::string error;

  bool ok() const { return error.empty(); }
};

struct CorpusOptions {
  std::filesystem::path out_dir;
  std::size_t threads = 1;
  // Draw a fresh config per image with sample_grid_config instead of
  // applying the given one. The given config's seed still drives everything.
  bool random_grid = false;
};

// A single file, or every image below a directory in sorted path order.
std::vector<std::filesystem::path> collect_images(
    const std::filesystem::path& input);

// Image i (position in `inputs`) uses noise stream i, so results do not
// depend on the thread count. Outputs mirror each input's path relative to
// `input_root` under out_dir. An identity config copies the input bytes.
std::vector<ManifestRow> degrade_corpus(
    const std::vector<std::filesystem::path>& inputs,
    const std::filesystem::path& input_root, const DegradationConfig& cfg,
    const CorpusOptions& opts);

// Header: image_path,config_json,output_path,sha256
void write_manifest(std::ostream& out, const std::vector<ManifestRow>& rows);

}  // namespace medinet

#endif  // MEDINET_CORPUS_HPP_
