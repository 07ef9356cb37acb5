#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dermabench/errors.hpp"

namespace dermabench::npz {

enum class Dtype { u8, i8, i32, i64, f32, f64 };

size_t itemsize(Dtype d);
std::string descr(Dtype d);  // numpy descr string, e.g. "|u1", "<f4"

/// One named array: little-endian raw bytes plus dtype and shape.
struct Array {
  Dtype dtype = Dtype::u8;
  std::vector<int64_t> shape;
  std::vector<std::byte> data;

  int64_t numel() const;

  template <typename T>
  std::span<const T> as() const {
    check_type(sizeof(T));
    return {reinterpret_cast<const T*>(data.data()), data.size() / sizeof(T)};
  }
  template <typename T>
  std::span<T> as() {
    check_type(sizeof(T));
    return {reinterpret_cast<T*>(data.data()), data.size() / sizeof(T)};
  }

 private:
  void check_type(size_t size) const;
};

template <typename T>
Dtype dtype_of();
template <> Dtype dtype_of<uint8_t>();
template <> Dtype dtype_of<int8_t>();
template <> Dtype dtype_of<int32_t>();
template <> Dtype dtype_of<int64_t>();
template <> Dtype dtype_of<float>();
template <> Dtype dtype_of<double>();

template <typename T>
Array make_array(std::vector<int64_t> shape, std::span<const T> values) {
  Array a;
  a.dtype = dtype_of<T>();
  a.shape = std::move(shape);
  a.data.resize(values.size() * sizeof(T));
  std::memcpy(a.data.data(), values.data(), a.data.size());
  return a;
}

/// Ordered map so that archive writes (and their checksums) are deterministic.
using ArrayMap = std::map<std::string, Array>;

/// Loads every array of a .npz archive (stored or deflate entries).
ArrayMap load(const std::string& path);

/// Loads a single named array.
Array load_array(const std::string& path, const std::string& name);

std::vector<std::string> entry_names(const std::string& path);

/// Writes a .npz archive. compression_level 0 stores entries uncompressed,
/// 1..9 uses raw deflate at that level.
void save(const std::string& path, const ArrayMap& arrays, int compression_level = 1);

/// Reads / writes a bare .npy file.
Array load_npy(const std::string& path);
void save_npy(const std::string& path, const Array& array);

}  // namespace dermabench::npz
