#include "dermabench/npz.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace dermabench::npz {

namespace {

constexpr uint32_t kLocalSig = 0x04034b50;
constexpr uint32_t kCentralSig = 0x02014b50;
constexpr uint32_t kEocdSig = 0x06054b50;

uint16_t rd16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t rd32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void wr16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void wr32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ZipEntry {
  std::string name;
  uint16_t method = 0;
  uint64_t compressed_size = 0;
  uint64_t uncompressed_size = 0;
  uint64_t local_offset = 0;
};

std::vector<unsigned char> read_file_tail(std::ifstream& f, uint64_t file_size, size_t max_len) {
  size_t len = static_cast<size_t>(std::min<uint64_t>(max_len, file_size));
  std::vector<unsigned char> buf(len);
  f.seekg(static_cast<std::streamoff>(file_size - len));
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len));
  if (!f) throw IoError("zip: failed reading archive tail");
  return buf;
}

std::vector<ZipEntry> read_central_directory(std::ifstream& f, const std::string& path) {
  f.seekg(0, std::ios::end);
  uint64_t file_size = static_cast<uint64_t>(f.tellg());
  if (file_size < 22) throw LoadError("zip: file too small to be an archive: " + path);

  // EOCD is at the end, possibly preceded by a comment (<= 64 KiB).
  auto tail = read_file_tail(f, file_size, 22 + 65536);
  size_t eocd = std::string::npos;
  for (size_t i = tail.size() - 22 + 1; i-- > 0;) {
    if (rd32(tail.data() + i) == kEocdSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos) throw LoadError("zip: end-of-central-directory not found: " + path);

  const unsigned char* p = tail.data() + eocd;
  uint16_t entry_count = rd16(p + 10);
  uint32_t cd_size = rd32(p + 12);
  uint32_t cd_offset = rd32(p + 16);

  std::vector<unsigned char> cd(cd_size);
  f.seekg(static_cast<std::streamoff>(cd_offset));
  f.read(reinterpret_cast<char*>(cd.data()), static_cast<std::streamsize>(cd_size));
  if (!f) throw LoadError("zip: truncated central directory: " + path);

  std::vector<ZipEntry> entries;
  size_t pos = 0;
  for (int i = 0; i < entry_count; ++i) {
    if (pos + 46 > cd.size() || rd32(cd.data() + pos) != kCentralSig)
      throw LoadError("zip: malformed central directory: " + path);
    const unsigned char* e = cd.data() + pos;
    ZipEntry z;
    z.method = rd16(e + 10);
    z.compressed_size = rd32(e + 20);
    z.uncompressed_size = rd32(e + 24);
    uint16_t name_len = rd16(e + 28);
    uint16_t extra_len = rd16(e + 30);
    uint16_t comment_len = rd16(e + 32);
    z.local_offset = rd32(e + 42);
    z.name.assign(reinterpret_cast<const char*>(e + 46), name_len);
    entries.push_back(std::move(z));
    pos += 46 + static_cast<size_t>(name_len) + extra_len + comment_len;
  }
  return entries;
}

std::vector<std::byte> read_entry_bytes(std::ifstream& f, const ZipEntry& e, const std::string& path) {
  unsigned char hdr[30];
  f.seekg(static_cast<std::streamoff>(e.local_offset));
  f.read(reinterpret_cast<char*>(hdr), 30);
  if (!f || rd32(hdr) != kLocalSig) throw LoadError("zip: bad local header for " + e.name + " in " + path);
  uint16_t name_len = rd16(hdr + 26);
  uint16_t extra_len = rd16(hdr + 28);
  f.seekg(static_cast<std::streamoff>(e.local_offset + 30 + name_len + extra_len));

  std::vector<std::byte> out(e.uncompressed_size);
  if (e.method == 0) {
    if (e.compressed_size != e.uncompressed_size)
      throw LoadError("zip: stored entry size mismatch for " + e.name);
    f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw LoadError("zip: truncated stored entry " + e.name);
    return out;
  }
  if (e.method != 8) throw LoadError("zip: unsupported compression method for " + e.name);

  // Zip32 entries are < 4 GiB, so one output window suffices.
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw IoError("zlib: inflateInit failed");
  std::vector<unsigned char> in_buf(1 << 16);
  uint64_t remaining = e.compressed_size;
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    if (zs.avail_in == 0) {
      if (remaining == 0) {
        inflateEnd(&zs);
        throw LoadError("zip: deflate stream ended prematurely for " + e.name);
      }
      size_t chunk = static_cast<size_t>(std::min<uint64_t>(in_buf.size(), remaining));
      f.read(reinterpret_cast<char*>(in_buf.data()), static_cast<std::streamsize>(chunk));
      if (!f) {
        inflateEnd(&zs);
        throw LoadError("zip: truncated deflate entry " + e.name);
      }
      remaining -= chunk;
      zs.next_in = in_buf.data();
      zs.avail_in = static_cast<uInt>(chunk);
    }
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw LoadError("zip: inflate error for " + e.name);
    }
  }
  uint64_t total_out = zs.total_out;
  inflateEnd(&zs);
  if (total_out != e.uncompressed_size)
    throw LoadError("zip: inflated size mismatch for " + e.name);
  return out;
}

// ---- npy ---------------------------------------------------------------

Dtype dtype_from_descr(const std::string& d, const std::string& context) {
  std::string s = d;
  if (!s.empty() && (s[0] == '<' || s[0] == '|' || s[0] == '=')) s = s.substr(1);
  else if (!s.empty() && s[0] == '>')
    throw LoadError("npy: big-endian arrays unsupported (" + context + ")");
  if (s == "u1") return Dtype::u8;
  if (s == "i1") return Dtype::i8;
  if (s == "i4") return Dtype::i32;
  if (s == "i8") return Dtype::i64;
  if (s == "f4") return Dtype::f32;
  if (s == "f8") return Dtype::f64;
  throw LoadError("npy: unsupported dtype '" + d + "' (" + context + ")");
}

Array parse_npy(std::vector<std::byte> bytes, const std::string& context) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0)
    throw LoadError("npy: bad magic (" + context + ")");
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  int major = p[6];
  size_t header_len;
  size_t header_off;
  if (major == 1) {
    header_len = rd16(p + 8);
    header_off = 10;
  } else if (major == 2 || major == 3) {
    header_len = rd32(p + 8);
    header_off = 12;
  } else {
    throw LoadError("npy: unsupported format version (" + context + ")");
  }
  if (header_off + header_len > bytes.size()) throw LoadError("npy: truncated header (" + context + ")");
  std::string header(reinterpret_cast<const char*>(p + header_off), header_len);

  auto find_value = [&](const std::string& key) -> std::string {
    size_t k = header.find("'" + key + "'");
    if (k == std::string::npos) throw LoadError("npy: header missing '" + key + "' (" + context + ")");
    size_t colon = header.find(':', k);
    size_t start = header.find_first_not_of(" \t", colon + 1);
    return header.substr(start);
  };

  std::string descr_tail = find_value("descr");
  if (descr_tail.empty() || descr_tail[0] != '\'')
    throw LoadError("npy: structured dtypes unsupported (" + context + ")");
  std::string descr_str = descr_tail.substr(1, descr_tail.find('\'', 1) - 1);

  std::string fortran_tail = find_value("fortran_order");
  if (fortran_tail.rfind("False", 0) != 0)
    throw LoadError("npy: fortran-order arrays unsupported (" + context + ")");

  std::string shape_tail = find_value("shape");
  if (shape_tail.empty() || shape_tail[0] != '(')
    throw LoadError("npy: malformed shape (" + context + ")");
  std::vector<int64_t> shape;
  size_t i = 1;
  while (i < shape_tail.size() && shape_tail[i] != ')') {
    while (i < shape_tail.size() && (shape_tail[i] == ' ' || shape_tail[i] == ','))
      ++i;
    if (i >= shape_tail.size() || shape_tail[i] == ')') break;
    size_t end;
    shape.push_back(std::stoll(shape_tail.substr(i), &end));
    i += end;
  }

  Array a;
  a.dtype = dtype_from_descr(descr_str, context);
  a.shape = std::move(shape);
  size_t expected = static_cast<size_t>(a.numel()) * itemsize(a.dtype);
  size_t data_off = header_off + header_len;
  if (bytes.size() - data_off < expected)
    throw LoadError("npy: data shorter than header shape implies (" + context + ")");
  a.data.assign(bytes.begin() + static_cast<ptrdiff_t>(data_off),
                bytes.begin() + static_cast<ptrdiff_t>(data_off + expected));
  return a;
}

std::string npy_header_bytes(const Array& a) {
  std::string dict = "{'descr': '" + descr(a.dtype) + "', 'fortran_order': False, 'shape': (";
  for (size_t i = 0; i < a.shape.size(); ++i) {
    dict += std::to_string(a.shape[i]);
    if (a.shape.size() == 1 || i + 1 < a.shape.size()) dict += ",";
    if (i + 1 < a.shape.size()) dict += " ";
  }
  dict += "), }";
  // Total header (magic..dict+padding) must be a multiple of 64.
  size_t base = 10;
  size_t total = base + dict.size() + 1;
  size_t padded = (total + 63) / 64 * 64;
  dict.append(padded - base - dict.size() - 1, ' ');
  dict.push_back('\n');

  std::string out;
  out.reserve(padded);
  out += "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  wr16(out, static_cast<uint16_t>(dict.size()));
  out += dict;
  return out;
}

struct WrittenEntry {
  std::string name;
  uint16_t method;
  uint32_t crc;
  uint64_t compressed_size;
  uint64_t uncompressed_size;
  uint64_t local_offset;
};

std::vector<unsigned char> deflate_bytes(const std::string& head, std::span<const std::byte> body,
                                         int level) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw IoError("zlib: deflateInit failed");
  std::vector<unsigned char> out;
  out.reserve(head.size() + body.size() / 4 + 64);
  std::vector<unsigned char> buf(1 << 16);

  auto pump = [&](const unsigned char* data, size_t len, int flush) {
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(len);
    do {
      zs.next_out = buf.data();
      zs.avail_out = static_cast<uInt>(buf.size());
      int ret = deflate(&zs, flush);
      if (ret == Z_STREAM_ERROR) {
        deflateEnd(&zs);
        throw IoError("zlib: deflate stream error");
      }
      out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (zs.avail_out == 0);
  };

  pump(reinterpret_cast<const unsigned char*>(head.data()), head.size(), Z_NO_FLUSH);
  // Large bodies fed in chunks; uInt is 32-bit.
  size_t off = 0;
  const unsigned char* bp = reinterpret_cast<const unsigned char*>(body.data());
  while (off < body.size()) {
    size_t chunk = std::min<size_t>(body.size() - off, 1u << 30);
    bool last = off + chunk == body.size();
    pump(bp + off, chunk, last ? Z_FINISH : Z_NO_FLUSH);
    off += chunk;
  }
  if (body.empty()) pump(nullptr, 0, Z_FINISH);
  deflateEnd(&zs);
  return out;
}

}  // namespace

size_t itemsize(Dtype d) {
  switch (d) {
    case Dtype::u8:
    case Dtype::i8: return 1;
    case Dtype::i32:
    case Dtype::f32: return 4;
    case Dtype::i64:
    case Dtype::f64: return 8;
  }
  throw ConfigError("npz: unknown dtype");
}

std::string descr(Dtype d) {
  switch (d) {
    case Dtype::u8: return "|u1";
    case Dtype::i8: return "|i1";
    case Dtype::i32: return "<i4";
    case Dtype::i64: return "<i8";
    case Dtype::f32: return "<f4";
    case Dtype::f64: return "<f8";
  }
  throw ConfigError("npz: unknown dtype");
}

int64_t Array::numel() const {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

void Array::check_type(size_t size) const {
  if (size != itemsize(dtype))
    throw ContractError("npz: array element size mismatch (have " + descr(dtype) + ")");
}

template <> Dtype dtype_of<uint8_t>() { return Dtype::u8; }
template <> Dtype dtype_of<int8_t>() { return Dtype::i8; }
template <> Dtype dtype_of<int32_t>() { return Dtype::i32; }
template <> Dtype dtype_of<int64_t>() { return Dtype::i64; }
template <> Dtype dtype_of<float>() { return Dtype::f32; }
template <> Dtype dtype_of<double>() { return Dtype::f64; }

static std::string entry_to_array_name(const std::string& entry) {
  if (entry.size() > 4 && entry.substr(entry.size() - 4) == ".npy") return entry.substr(0, entry.size() - 4);
  return entry;
}

ArrayMap load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("npz: cannot open " + path);
  auto entries = read_central_directory(f, path);
  ArrayMap out;
  for (const auto& e : entries) {
    auto bytes = read_entry_bytes(f, e, path);
    out.emplace(entry_to_array_name(e.name), parse_npy(std::move(bytes), path + ":" + e.name));
  }
  return out;
}

Array load_array(const std::string& path, const std::string& name) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("npz: cannot open " + path);
  auto entries = read_central_directory(f, path);
  for (const auto& e : entries) {
    if (entry_to_array_name(e.name) == name)
      return parse_npy(read_entry_bytes(f, e, path), path + ":" + e.name);
  }
  throw LoadError("npz: archive " + path + " has no array named '" + name + "'");
}

std::vector<std::string> entry_names(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("npz: cannot open " + path);
  auto entries = read_central_directory(f, path);
  std::vector<std::string> names;
  names.reserve(entries.size());
  for (const auto& e : entries) names.push_back(entry_to_array_name(e.name));
  return names;
}

void save(const std::string& path, const ArrayMap& arrays, int compression_level) {
  if (compression_level < 0 || compression_level > 9)
    throw ConfigError("npz: compression level must be in [0,9]");
  std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("npz: cannot create " + path);

  std::vector<WrittenEntry> written;
  uint64_t offset = 0;
  for (const auto& [name, array] : arrays) {
    std::string head = npy_header_bytes(array);
    uint64_t raw_size = head.size() + array.data.size();
    if (raw_size > 0xfffffff0ULL)
      throw IoError("npz: entry '" + name + "' exceeds the 4 GiB zip entry limit");

    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(head.data()), static_cast<uInt>(head.size()));
    {
      size_t off = 0;
      const Bytef* dp = reinterpret_cast<const Bytef*>(array.data.data());
      while (off < array.data.size()) {
        size_t chunk = std::min<size_t>(array.data.size() - off, 1u << 30);
        crc = crc32(crc, dp + off, static_cast<uInt>(chunk));
        off += chunk;
      }
    }

    WrittenEntry w;
    w.name = name + ".npy";
    w.crc = crc;
    w.uncompressed_size = raw_size;
    w.local_offset = offset;

    std::vector<unsigned char> compressed;
    if (compression_level > 0) {
      compressed = deflate_bytes(head, {array.data.data(), array.data.size()}, compression_level);
      if (compressed.size() < raw_size) {
        w.method = 8;
        w.compressed_size = compressed.size();
      } else {
        w.method = 0;
        w.compressed_size = raw_size;
        compressed.clear();
      }
    } else {
      w.method = 0;
      w.compressed_size = raw_size;
    }

    std::string hdr;
    wr32(hdr, kLocalSig);
    wr16(hdr, 20);                 // version needed
    wr16(hdr, 0);                  // flags
    wr16(hdr, w.method);
    wr16(hdr, 0);                  // mod time
    wr16(hdr, 0);                  // mod date
    wr32(hdr, w.crc);
    wr32(hdr, static_cast<uint32_t>(w.compressed_size));
    wr32(hdr, static_cast<uint32_t>(w.uncompressed_size));
    wr16(hdr, static_cast<uint16_t>(w.name.size()));
    wr16(hdr, 0);                  // extra len
    hdr += w.name;
    f.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

    if (w.method == 8) {
      f.write(reinterpret_cast<const char*>(compressed.data()),
              static_cast<std::streamsize>(compressed.size()));
    } else {
      f.write(head.data(), static_cast<std::streamsize>(head.size()));
      f.write(reinterpret_cast<const char*>(array.data.data()),
              static_cast<std::streamsize>(array.data.size()));
    }
    offset += hdr.size() + w.compressed_size;
    written.push_back(std::move(w));
  }

  uint64_t cd_start = offset;
  std::string cd;
  for (const auto& w : written) {
    wr32(cd, kCentralSig);
    wr16(cd, 20);  // version made by
    wr16(cd, 20);  // version needed
    wr16(cd, 0);   // flags
    wr16(cd, w.method);
    wr16(cd, 0);   // time
    wr16(cd, 0);   // date
    wr32(cd, w.crc);
    wr32(cd, static_cast<uint32_t>(w.compressed_size));
    wr32(cd, static_cast<uint32_t>(w.uncompressed_size));
    wr16(cd, static_cast<uint16_t>(w.name.size()));
    wr16(cd, 0);   // extra
    wr16(cd, 0);   // comment
    wr16(cd, 0);   // disk
    wr16(cd, 0);   // internal attrs
    wr32(cd, 0);   // external attrs
    wr32(cd, static_cast<uint32_t>(w.local_offset));
    cd += w.name;
  }
  f.write(cd.data(), static_cast<std::streamsize>(cd.size()));

  std::string eocd;
  wr32(eocd, kEocdSig);
  wr16(eocd, 0);
  wr16(eocd, 0);
  wr16(eocd, static_cast<uint16_t>(written.size()));
  wr16(eocd, static_cast<uint16_t>(written.size()));
  wr32(eocd, static_cast<uint32_t>(cd.size()));
  wr32(eocd, static_cast<uint32_t>(cd_start));
  wr16(eocd, 0);
  f.write(eocd.data(), static_cast<std::streamsize>(eocd.size()));
  if (!f) throw IoError("npz: write failed for " + path);
}

Array load_npy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("npy: cannot open " + path);
  f.seekg(0, std::ios::end);
  std::vector<std::byte> bytes(static_cast<size_t>(f.tellg()));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw LoadError("npy: read failed for " + path);
  return parse_npy(std::move(bytes), path);
}

void save_npy(const std::string& path, const Array& array) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("npy: cannot create " + path);
  std::string head = npy_header_bytes(array);
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  f.write(reinterpret_cast<const char*>(array.data.data()),
          static_cast<std::streamsize>(array.data.size()));
  if (!f) throw IoError("npy: write failed for " + path);
}

}  // namespace dermabench::npz
