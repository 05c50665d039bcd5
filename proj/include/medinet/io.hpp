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

#ifndef MEDINET_IO_HPP_
#define MEDINET_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "medinet/degrade.hpp"

namespace medinet {

enum class ImageFormat { kPng, kPnm };

// Picks the format from the extension: .png, or .pgm/.ppm/.pnm.
ImageFormat image_format_for(const std::filesystem::path& path);
bool is_image_path(const std::filesystem::path& path);

// 8-bit gray or RGB only. 16-bit PNG/PNM, palette-free alpha and interlaced
// PNG are rejected with IoError. Gray+alpha and RGBA drop the alpha plane.
Image read_image(const std::filesystem::path& path);
// Values are rounded and clamped to [0, 255]. One channel writes PGM / gray
// PNG, three channels PPM / RGB PNG.
void write_image(const std::filesystem::path& path, const Image& img);

std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pnm(const Image& img);
Image decode_pnm(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes);

// Lowercase hex.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

// Bilinear (half-pixel centers) resize, used when ingesting image folders.
Image resize_bilinear(const Image& img, std::size_t h, std::size_t w);
// 3 -> 1 via ITU-R BT.601 luma, 1 -> 3 by replication.
Image convert_channels(const Image& img, std::size_t channels);

}  // namespace medinet

#endif  // MEDINET_IO_HPP_
