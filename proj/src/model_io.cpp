#include "winofi/model_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace winofi {

namespace {

constexpr uint16_t kModelVersion = 1;
constexpr uint16_t kDatasetVersion = 1;

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> t{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    t[i] = c;
  }
  return t;
}

class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    u8(static_cast<uint8_t>(v));
    u8(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    u16(static_cast<uint16_t>(v));
    u16(static_cast<uint16_t>(v >> 16));
  }
  void u64(uint64_t v) {
    u32(static_cast<uint32_t>(v));
    u32(static_cast<uint32_t>(v >> 32));
  }
  void i16(int16_t v) { u16(static_cast<uint16_t>(v)); }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void str(const std::string& s) {
    u16(static_cast<uint16_t>(s.size()));
    for (char c : s) u8(static_cast<uint8_t>(c));
  }
  void magic(const char m[4]) {
    for (int i = 0; i < 4; ++i) u8(static_cast<uint8_t>(m[i]));
  }
  std::vector<uint8_t> finish() {
    uint32_t c = crc32(buf_);
    u32(c);
    return std::move(buf_);
  }

 private:
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> b) : b_(b) {}
  uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  uint16_t u16() {
    uint16_t lo = u8();
    return static_cast<uint16_t>(lo | (u8() << 8));
  }
  uint32_t u32() {
    uint32_t lo = u16();
    return lo | (static_cast<uint32_t>(u16()) << 16);
  }
  uint64_t u64() {
    uint64_t lo = u32();
    return lo | (static_cast<uint64_t>(u32()) << 32);
  }
  int16_t i16() { return static_cast<int16_t>(u16()); }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  std::string str() {
    uint16_t n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect_magic(const char m[4], const char* what) {
    need(4);
    if (std::memcmp(b_.data() + pos_, m, 4) != 0)
      raise(ErrorCode::FILE_FORMAT, std::string(what) + ": bad magic");
    pos_ += 4;
  }
  void done() {
    if (pos_ != b_.size()) raise(ErrorCode::FILE_FORMAT, "trailing bytes after payload");
  }

 private:
  void need(size_t n) {
    if (pos_ + n > b_.size()) raise(ErrorCode::FILE_FORMAT, "truncated file");
  }
  std::span<const uint8_t> b_;
  size_t pos_ = 0;
};

std::span<const uint8_t> checked_payload(std::span<const uint8_t> bytes, const char* what) {
  if (bytes.size() < 8) raise(ErrorCode::FILE_FORMAT, std::string(what) + ": truncated file");
  std::span<const uint8_t> payload = bytes.subspan(0, bytes.size() - 4);
  uint32_t stored = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                    (static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8) |
                    (static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16) |
                    (static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24);
  if (crc32(payload) != stored)
    raise(ErrorCode::FILE_FORMAT, std::string(what) + ": checksum mismatch");
  return payload;
}

}  // namespace

uint32_t crc32(std::span<const uint8_t> bytes) {
  static const std::array<uint32_t, 256> table = make_crc_table();
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : bytes) c = table[(c ^ b) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::vector<uint8_t> serialize_model(const Model& model) {
  Writer w;
  w.magic("WFTM");
  w.u16(kModelVersion);
  w.u8(static_cast<uint8_t>(model.format.word_bits));
  w.u8(static_cast<uint8_t>(model.format.frac_bits));
  w.u8(static_cast<uint8_t>(model.datapath.mul_out_bits));
  w.u8(static_cast<uint8_t>(model.datapath.acc_bits));
  w.u16(static_cast<uint16_t>(model.in_c));
  w.u16(static_cast<uint16_t>(model.in_h));
  w.u16(static_cast<uint16_t>(model.in_w));
  w.u64(model.seed);
  w.str(model.name);
  w.u16(static_cast<uint16_t>(model.layers.size()));
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    w.u8(static_cast<uint8_t>(l.kind));
    w.str(l.name);
    if (l.kind == LayerKind::CONV) {
      w.u8(static_cast<uint8_t>(l.engine));
      w.u16(static_cast<uint16_t>(l.conv.in_channels));
      w.u16(static_cast<uint16_t>(l.conv.out_channels));
      w.u8(static_cast<uint8_t>(l.conv.kernel));
      w.u8(static_cast<uint8_t>(l.conv.stride));
      w.u8(static_cast<uint8_t>(l.conv.padding));
      w.u16(static_cast<uint16_t>(l.conv.in_h));
      w.u16(static_cast<uint16_t>(l.conv.in_w));
    } else if (l.kind == LayerKind::FC) {
      w.u32(static_cast<uint32_t>(l.fc_in));
      w.u32(static_cast<uint32_t>(l.fc_out));
    }
    if (l.weighted()) {
      const FxpTensor& t = model.weights[i];
      w.u32(static_cast<uint32_t>(t.numel()));
      for (int32_t v : t.data) w.i16(static_cast<int16_t>(v));
    }
  }
  return w.finish();
}

Model deserialize_model(std::span<const uint8_t> bytes) {
  Reader r(checked_payload(bytes, "model"));
  r.expect_magic("WFTM", "model");
  uint16_t version = r.u16();
  if (version != kModelVersion)
    raise(ErrorCode::FILE_FORMAT, "model: unsupported version " + std::to_string(version));
  Model m;
  m.format.word_bits = r.u8();
  m.format.frac_bits = r.u8();
  m.datapath.mul_out_bits = r.u8();
  m.datapath.acc_bits = r.u8();
  m.in_c = r.u16();
  m.in_h = r.u16();
  m.in_w = r.u16();
  m.seed = r.u64();
  m.name = r.str();
  uint16_t n_layers = r.u16();
  m.layers.resize(n_layers);
  m.weights.resize(n_layers);
  for (uint16_t i = 0; i < n_layers; ++i) {
    LayerSpec& l = m.layers[i];
    l.kind = static_cast<LayerKind>(r.u8());
    l.name = r.str();
    if (l.kind == LayerKind::CONV) {
      l.engine = static_cast<ConvEngine>(r.u8());
      l.conv.in_channels = r.u16();
      l.conv.out_channels = r.u16();
      l.conv.kernel = r.u8();
      l.conv.stride = r.u8();
      l.conv.padding = r.u8();
      l.conv.in_h = r.u16();
      l.conv.in_w = r.u16();
    } else if (l.kind == LayerKind::FC) {
      l.fc_in = static_cast<int>(r.u32());
      l.fc_out = static_cast<int>(r.u32());
    }
    if (l.weighted()) {
      uint32_t n = r.u32();
      std::vector<int> shape = l.kind == LayerKind::CONV
                                   ? std::vector<int>{l.conv.out_channels, l.conv.in_channels,
                                                      l.conv.kernel, l.conv.kernel}
                                   : std::vector<int>{l.fc_out, l.fc_in};
      FxpTensor t(shape, m.format);
      if (t.numel() != n) raise(ErrorCode::FILE_FORMAT, "model: weight count mismatch");
      for (uint32_t k = 0; k < n; ++k) t.data[k] = r.i16();
      m.weights[i] = std::move(t);
    }
  }
  r.done();
  m.validate();
  return m;
}

std::vector<uint8_t> serialize_dataset(const Dataset& d) {
  Writer w;
  w.magic("WFTD");
  w.u16(kDatasetVersion);
  w.u8(static_cast<uint8_t>(d.format.word_bits));
  w.u8(static_cast<uint8_t>(d.format.frac_bits));
  w.u16(static_cast<uint16_t>(d.in_c));
  w.u16(static_cast<uint16_t>(d.in_h));
  w.u16(static_cast<uint16_t>(d.in_w));
  w.u16(static_cast<uint16_t>(d.num_classes));
  w.u8(static_cast<uint8_t>(d.provenance));
  w.u64(d.seed);
  w.u32(static_cast<uint32_t>(d.size()));
  for (int32_t l : d.labels) w.i32(l);
  for (const FxpTensor& t : d.inputs)
    for (int32_t v : t.data) w.i16(static_cast<int16_t>(v));
  return w.finish();
}

Dataset deserialize_dataset(std::span<const uint8_t> bytes) {
  Reader r(checked_payload(bytes, "dataset"));
  r.expect_magic("WFTD", "dataset");
  uint16_t version = r.u16();
  if (version != kDatasetVersion)
    raise(ErrorCode::FILE_FORMAT, "dataset: unsupported version " + std::to_string(version));
  Dataset d;
  d.format.word_bits = r.u8();
  d.format.frac_bits = r.u8();
  d.in_c = r.u16();
  d.in_h = r.u16();
  d.in_w = r.u16();
  d.num_classes = r.u16();
  d.provenance = static_cast<Dataset::Provenance>(r.u8());
  d.seed = r.u64();
  uint32_t n = r.u32();
  d.labels.resize(n);
  for (uint32_t i = 0; i < n; ++i) d.labels[i] = r.i32();
  size_t numel = static_cast<size_t>(d.in_c) * d.in_h * d.in_w;
  d.inputs.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    FxpTensor t({d.in_c, d.in_h, d.in_w}, d.format);
    for (size_t k = 0; k < numel; ++k) t.data[k] = r.i16();
    d.inputs.push_back(std::move(t));
  }
  r.done();
  d.validate();
  return d;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::IO_FAILURE, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorCode::IO_FAILURE, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) raise(ErrorCode::IO_FAILURE, "short write to " + path);
}

void save_model(const Model& model, const std::string& path) {
  auto bytes = serialize_model(model);
  write_file_bytes(path, bytes);
}

Model load_model(const std::string& path) { return deserialize_model(read_file_bytes(path)); }

void save_dataset(const Dataset& dataset, const std::string& path) {
  auto bytes = serialize_dataset(dataset);
  write_file_bytes(path, bytes);
}

Dataset load_dataset(const std::string& path) {
  return deserialize_dataset(read_file_bytes(path));
}

}  // namespace winofi
