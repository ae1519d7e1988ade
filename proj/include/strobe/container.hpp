#pragma once

#include "strobe/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace strobe {

enum class DType : std::uint32_t { F64 = 1, I64 = 2 };

/// A dense array in row-major order.
struct Array {
  DType dtype = DType::F64;
  std::vector<std::int64_t> dims;
  std::vector<double> f64;
  std::vector<std::int64_t> i64;

  std::int64_t count() const;
};

/// Binary array file: 16-byte header (magic "STRB", dtype u32, rank u32,
/// reserved u32, all little-endian), rank int64 dims, then the data.
void write_array(const std::string& path, const Array& a);
Array read_array(const std::string& path);

Array to_array(const Matrix& m);
Array to_array(const Vector& v);
Array to_array(const std::vector<std::int64_t>& v);
Matrix as_matrix(const Array& a);
Vector as_vector(const Array& a);
std::vector<std::int64_t> as_ints(const Array& a);

/// Directory of named arrays plus manifest.json. Metadata is a JSON object
/// serialized as text so the header stays free of the JSON library.
class Container {
 public:
  static constexpr int kSchemaVersion = 1;

  Container() = default;

  void put(const std::string& name, Array a);
  void put(const std::string& name, const Matrix& m) { put(name, to_array(m)); }
  void put(const std::string& name, const Vector& v) { put(name, to_array(v)); }
  void put(const std::string& name, const std::vector<std::int64_t>& v) { put(name, to_array(v)); }
  bool has(const std::string& name) const { return arrays_.count(name) > 0; }
  const Array& get(const std::string& name) const;
  Matrix matrix(const std::string& name) const { return as_matrix(get(name)); }
  Vector vector(const std::string& name) const { return as_vector(get(name)); }
  std::vector<std::int64_t> ints(const std::string& name) const { return as_ints(get(name)); }
  std::vector<std::string> names() const;

  std::string model;
  std::uint64_t mesh_hash = 0;
  std::string metadata = "{}";  // JSON object text
  std::string created;           // timestamp, informative only

  /// Writes manifest.json and one .bin per array; creates the directory.
  void save(const std::string& dir) const;
  /// Throws FormatError on missing or corrupt files.
  static Container load(const std::string& dir);
  /// Verifies the mesh hash recorded in the manifest.
  void expect_mesh(std::uint64_t hash) const;

 private:
  std::map<std::string, Array> arrays_;
};

std::string timestamp_utc();

}  // namespace strobe
