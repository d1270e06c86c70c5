#include "winofi/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "winofi/error.hpp"

namespace winofi {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

std::string format_u64(uint64_t v) { return std::to_string(v); }

std::string hex_hash(uint64_t v) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xF];
    v >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

DataTable::DataTable(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void DataTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    raise(ErrorCode::SHAPE_MISMATCH, name_ + ": row width does not match header");
  rows_.push_back(std::move(cells));
}

std::string DataTable::to_csv(uint64_t config_hash, uint64_t seed) const {
  std::string out;
  out += "# schema=winofi." + std::to_string(kOutputSchemaVersion) + "\n";
  out += "# config_hash=" + hex_hash(config_hash) + " seed=" + std::to_string(seed) + "\n";
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

std::string DataTable::to_json(uint64_t config_hash, uint64_t seed) const {
  nlohmann::json j;
  j["schema"] = "winofi." + std::to_string(kOutputSchemaVersion);
  j["config_hash"] = hex_hash(config_hash);
  j["seed"] = seed;
  j["columns"] = columns_;
  j["rows"] = rows_;
  return j.dump(2) + "\n";
}

std::string DataTable::write(const std::string& out_dir, const std::string& format,
                             uint64_t config_hash, uint64_t seed) const {
  ensure_dir(out_dir);
  std::string path = out_dir + "/" + name_ + (format == "json" ? ".json" : ".csv");
  write_text_file(path, format == "json" ? to_json(config_hash, seed)
                                         : to_csv(config_hash, seed));
  return path;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorCode::IO_FAILURE, "cannot write " + path);
  f << text;
  if (!f) raise(ErrorCode::IO_FAILURE, "short write to " + path);
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) raise(ErrorCode::IO_FAILURE, "cannot create directory " + path);
}

}  // namespace winofi
