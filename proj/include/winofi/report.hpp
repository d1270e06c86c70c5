#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace winofi {

inline constexpr int kOutputSchemaVersion = 1;

// Deterministic formatting: shortest round-trip representation, locale-free.
std::string format_double(double v);
std::string format_u64(uint64_t v);
std::string hex_hash(uint64_t v);

// Data tables with provenance comment lines. Byte-identical for identical
// (config, seed) regardless of worker count.
class DataTable {
 public:
  DataTable(std::string name, std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  const std::string& name() const { return name_; }

  std::string to_csv(uint64_t config_hash, uint64_t seed) const;
  std::string to_json(uint64_t config_hash, uint64_t seed) const;

  // Writes <out_dir>/<name>.<ext> in the requested format.
  std::string write(const std::string& out_dir, const std::string& format, uint64_t config_hash,
                    uint64_t seed) const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::string& path, const std::string& text);
void ensure_dir(const std::string& path);

}  // namespace winofi
