#pragma once

// Minimal store-only ZIP reader/writer for checkpoint archives. No
// compression, fixed DOS timestamps (1980-01-01) so identical content yields
// byte-identical archives, CRC-32 verified on read. Archives are readable by
// standard zip tools.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "igcl/errors.hpp"

namespace igcl {

namespace zipdetail {

inline const uint32_t* crc_table() {
  static uint32_t table[256];
  static bool init = [] {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    return true;
  }();
  (void)init;
  return table;
}

inline uint32_t crc32(const std::string& data) {
  const uint32_t* table = crc_table();
  uint32_t c = 0xFFFFFFFFu;
  for (unsigned char ch : data) c = table[(c ^ ch) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

inline void put16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put32(std::string& out, uint32_t v) {
  put16(out, static_cast<uint16_t>(v & 0xFFFF));
  put16(out, static_cast<uint16_t>((v >> 16) & 0xFFFF));
}

inline uint16_t get16(const std::string& s, size_t off) {
  return static_cast<uint16_t>(static_cast<unsigned char>(s[off]) |
                               (static_cast<unsigned char>(s[off + 1]) << 8));
}

inline uint32_t get32(const std::string& s, size_t off) {
  return static_cast<uint32_t>(get16(s, off)) | (static_cast<uint32_t>(get16(s, off + 2)) << 16);
}

constexpr uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
constexpr uint16_t kDosTime = 0;

}  // namespace zipdetail

/// In-memory archive: ordered name -> bytes. Order is preserved on write so
/// output is deterministic.
struct ZipArchive {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& name, std::string data) { entries.emplace_back(name, std::move(data)); }

  const std::string* find(const std::string& name) const {
    for (const auto& [n, d] : entries)
      if (n == name) return &d;
    return nullptr;
  }
};

inline void write_zip(const ZipArchive& archive, const std::string& path) {
  using namespace zipdetail;
  std::string out;
  std::string central;
  for (const auto& [name, data] : archive.entries) {
    const uint32_t offset = static_cast<uint32_t>(out.size());
    const uint32_t crc = crc32(data);
    const uint32_t size = static_cast<uint32_t>(data.size());
    // local file header
    put32(out, 0x04034b50u);
    put16(out, 20);       // version needed
    put16(out, 0);        // flags
    put16(out, 0);        // method: store
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<uint16_t>(name.size()));
    put16(out, 0);  // extra length
    out += name;
    out += data;
    // central directory record
    put32(central, 0x02014b50u);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
  }
  const uint32_t central_offset = static_cast<uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50u);  // end of central directory
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<uint16_t>(archive.entries.size()));
  put16(out, static_cast<uint16_t>(archive.entries.size()));
  put32(out, static_cast<uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) throw IoError("failed writing " + path);
}

inline ZipArchive read_zip(const std::string& path) {
  using namespace zipdetail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 22) throw CorruptCheckpoint(path + " is too short to be an archive");

  // locate the end-of-central-directory signature
  size_t eocd = std::string::npos;
  const size_t lo = buf.size() >= 22 + 65536 ? buf.size() - 22 - 65536 : 0;
  for (size_t i = buf.size() - 22 + 1; i-- > lo;) {
    if (get32(buf, i) == 0x06054b50u) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos) throw CorruptCheckpoint(path + " has no central directory");
  const uint16_t count = get16(buf, eocd + 10);
  const uint32_t central_size = get32(buf, eocd + 12);
  const uint32_t central_offset = get32(buf, eocd + 16);
  if (static_cast<size_t>(central_offset) + central_size > buf.size())
    throw CorruptCheckpoint(path + " central directory out of bounds");

  ZipArchive archive;
  size_t pos = central_offset;
  for (int e = 0; e < count; ++e) {
    if (pos + 46 > buf.size() || get32(buf, pos) != 0x02014b50u)
      throw CorruptCheckpoint(path + " has a bad central directory record");
    const uint32_t crc = get32(buf, pos + 16);
    const uint32_t csize = get32(buf, pos + 20);
    const uint32_t usize = get32(buf, pos + 24);
    const uint16_t name_len = get16(buf, pos + 28);
    const uint16_t extra_len = get16(buf, pos + 30);
    const uint16_t comment_len = get16(buf, pos + 32);
    const uint32_t local_offset = get32(buf, pos + 42);
    if (pos + 46 + name_len > buf.size()) throw CorruptCheckpoint(path + " truncated name");
    std::string name = buf.substr(pos + 46, name_len);
    pos += 46 + name_len + extra_len + comment_len;

    if (static_cast<size_t>(local_offset) + 30 > buf.size() ||
        get32(buf, local_offset) != 0x04034b50u)
      throw CorruptCheckpoint(path + " has a bad local header for " + name);
    if (get16(buf, local_offset + 8) != 0)
      throw CorruptCheckpoint(path + " entry " + name + " is compressed; expected store");
    const uint16_t lname = get16(buf, local_offset + 26);
    const uint16_t lextra = get16(buf, local_offset + 28);
    const size_t data_off = static_cast<size_t>(local_offset) + 30 + lname + lextra;
    if (data_off + csize > buf.size())
      throw CorruptCheckpoint(path + " entry " + name + " is truncated");
    if (csize != usize) throw CorruptCheckpoint(path + " entry " + name + " has size mismatch");
    std::string data = buf.substr(data_off, csize);
    if (crc32(data) != crc)
      throw CorruptCheckpoint(path + " entry " + name + " fails its checksum");
    archive.add(name, std::move(data));
  }
  return archive;
}

}  // namespace igcl
