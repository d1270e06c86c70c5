#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "winofi/model.hpp"

namespace winofi {

// Binary formats WFTM (model) and WFTD (dataset): little-endian, versioned,
// CRC32-trailed. Byte-exact layout documented in docs/formats.md.

uint32_t crc32(std::span<const uint8_t> bytes);

std::vector<uint8_t> serialize_model(const Model& model);
Model deserialize_model(std::span<const uint8_t> bytes);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

std::vector<uint8_t> serialize_dataset(const Dataset& dataset);
Dataset deserialize_dataset(std::span<const uint8_t> bytes);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace winofi
