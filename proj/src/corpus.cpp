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

#include "medinet/corpus.hpp"

#include <algorithm>
#include <exception>
#include <ostream>

#include "medinet/io.hpp"
#include "medinet/net.hpp"
#include "medinet/tensor.hpp"

namespace medinet {

namespace fs = std::filesystem;

std::vector<fs::path> collect_images(const fs::path& input) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(input)) {
    out.push_back(input);
    return out;
  }
  if (!fs::is_directory(input)) {
    throw IoError("no such file or directory: " + input.string());
  }
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (e.is_regular_file() && is_image_path(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ManifestRow> degrade_corpus(const std::vector<fs::path>& inputs,
                                        const fs::path& input_root,
                                        const DegradationConfig& cfg,
                                        const CorpusOptions& opts) {
  cfg.validate();
  std::vector<ManifestRow> rows(inputs.size());
  parallel_for(inputs.size(), opts.threads, [&](std::size_t i) {
    ManifestRow& row = rows[i];
    const fs::path& in = inputs[i];
    row.image_path = in.string();
    row.config_json = to_json(cfg).dump();
    try {
      fs::path rel = fs::is_directory(input_root)
                         ? fs::relative(in, input_root)
                         : in.filename();
      if (rel.empty() || *rel.begin() == "..") rel = in.filename();
      const fs::path out = opts.out_dir / rel;
      const std::vector<std::uint8_t> bytes = read_file(in);
      Image img = image_format_for(in) == ImageFormat::kPng ? decode_png(bytes)
                                                            : decode_pnm(bytes);
      DegradationConfig used = cfg;
      if (opts.random_grid) {
        RngStream rng(cfg.seed, hash_combine(0x67726964ULL, i));
        used = sample_grid_config(rng, img.channels == 3, cfg.seed);
      }
      row.config_json = to_json(used).dump();
      fs::create_directories(out.parent_path());
      if (used.is_identity()) {
        write_file(out, bytes);
      } else {
        write_image(out, degrade(img, used, i));
      }
      row.output_path = out.string();
      row.sha256 = sha256_file(out);
    } catch (const std::exception& e) {
      row.error = e.what();
      row.output_path.clear();
      row.sha256 = "error: " + row.error;
    }
  });
  return rows;
}

void write_manifest(std::ostream& out, const std::vector<ManifestRow>& rows) {
  out << "image_path,config_json,output_path,sha256\n";
  for (const auto& r : rows) {
    out << csv_field(r.image_path) << ',' << csv_field(r.config_json) << ','
        << csv_field(r.output_path) << ',' << csv_field(r.sha256) << '\n';
  }
}

}  // namespace medinet
