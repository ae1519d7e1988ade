#include "strobe/container.hpp"

#include "json.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace strobe {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "array files are written in native little-endian order");

std::int64_t Array::count() const {
  std::int64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_array(const std::string& path, const Array& a) {
  const std::int64_t n = a.count();
  if (a.dtype == DType::F64 && static_cast<std::int64_t>(a.f64.size()) != n) throw InvalidArgument("array size mismatch");
  if (a.dtype == DType::I64 && static_cast<std::int64_t>(a.i64.size()) != n) throw InvalidArgument("array size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  const char magic[4] = {'S', 'T', 'R', 'B'};
  const std::uint32_t head[3] = {static_cast<std::uint32_t>(a.dtype), static_cast<std::uint32_t>(a.dims.size()), 0};
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(head), sizeof(head));
  out.write(reinterpret_cast<const char*>(a.dims.data()), static_cast<std::streamsize>(a.dims.size() * 8));
  if (a.dtype == DType::F64)
    out.write(reinterpret_cast<const char*>(a.f64.data()), static_cast<std::streamsize>(n * 8));
  else
    out.write(reinterpret_cast<const char*>(a.i64.data()), static_cast<std::streamsize>(n * 8));
  if (!out) throw FormatError("write failed for '" + path + "'");
}

Array read_array(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  char magic[4];
  std::uint32_t head[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(head), sizeof(head));
  if (!in || std::memcmp(magic, "STRB", 4) != 0) throw FormatError("'" + path + "' is not an array file (bad magic)");
  Array a;
  if (head[0] != 1 && head[0] != 2) throw FormatError("'" + path + "': unknown dtype code");
  if (head[1] > 8) throw FormatError("'" + path + "': implausible rank");
  a.dtype = static_cast<DType>(head[0]);
  a.dims.resize(head[1]);
  in.read(reinterpret_cast<char*>(a.dims.data()), static_cast<std::streamsize>(a.dims.size() * 8));
  for (auto d : a.dims)
    if (d < 0) throw FormatError("'" + path + "': negative dimension");
  const std::int64_t n = a.count();
  if (a.dtype == DType::F64) {
    a.f64.resize(n);
    in.read(reinterpret_cast<char*>(a.f64.data()), n * 8);
  } else {
    a.i64.resize(n);
    in.read(reinterpret_cast<char*>(a.i64.data()), n * 8);
  }
  if (!in) throw FormatError("'" + path + "' is truncated");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("'" + path + "' has trailing bytes");
  return a;
}

Array to_array(const Matrix& m) {
  Array a;
  a.dims = {m.rows(), m.cols()};
  a.f64.resize(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.f64[i * m.cols() + j] = m(i, j);
  return a;
}

Array to_array(const Vector& v) {
  Array a;
  a.dims = {v.size()};
  a.f64.assign(v.data(), v.data() + v.size());
  return a;
}

Array to_array(const std::vector<std::int64_t>& v) {
  Array a;
  a.dtype = DType::I64;
  a.dims = {static_cast<std::int64_t>(v.size())};
  a.i64 = v;
  return a;
}

Matrix as_matrix(const Array& a) {
  if (a.dtype != DType::F64 || a.dims.size() != 2) throw FormatError("array is not a real matrix");
  Matrix m(a.dims[0], a.dims[1]);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = a.f64[i * m.cols() + j];
  return m;
}

Vector as_vector(const Array& a) {
  if (a.dtype != DType::F64 || a.dims.size() != 1) throw FormatError("array is not a real vector");
  return Eigen::Map<const Vector>(a.f64.data(), static_cast<Eigen::Index>(a.f64.size()));
}

std::vector<std::int64_t> as_ints(const Array& a) {
  if (a.dtype != DType::I64) throw FormatError("array is not an integer array");
  return a.i64;
}

void Container::put(const std::string& name, Array a) {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos || name[0] == '.')
    throw InvalidArgument("invalid array name '" + name + "'");
  arrays_[name] = std::move(a);
}

const Array& Container::get(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw FormatError("container has no array '" + name + "'");
  return it->second;
}

std::vector<std::string> Container::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : arrays_) out.push_back(k);
  return out;
}

void Container::save(const std::string& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create '" + dir + "': " + ec.message());
  json m;
  m["schema_version"] = kSchemaVersion;
  m["model"] = model;
  m["mesh_hash"] = std::to_string(mesh_hash);
  m["created"] = created;
  try {
    m["metadata"] = json::parse(metadata);
  } catch (const json::exception&) {
    throw InvalidArgument("container metadata is not valid JSON");
  }
  json arrays = json::object();
  for (const auto& [name, a] : arrays_) {
    const std::string file = name + ".bin";
    write_array((fs::path(dir) / file).string(), a);
    arrays[name] = {{"file", file}, {"dtype", a.dtype == DType::F64 ? "f64" : "i64"}, {"dims", a.dims}};
  }
  m["arrays"] = arrays;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw FormatError("cannot write manifest in '" + dir + "'");
  out << m.dump(2) << "\n";
}

Container Container::load(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw FormatError("no manifest.json in '" + dir + "'");
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt manifest: ") + e.what());
  }
  Container c;
  try {
    if (m.at("schema_version").get<int>() != kSchemaVersion) throw FormatError("unsupported schema version");
    c.model = m.at("model").get<std::string>();
    c.mesh_hash = std::stoull(m.at("mesh_hash").get<std::string>());
    c.created = m.value("created", std::string());
    c.metadata = m.at("metadata").dump();
    for (auto it = m.at("arrays").begin(); it != m.at("arrays").end(); ++it) {
      Array a = read_array((fs::path(dir) / it.value().at("file").get<std::string>()).string());
      if (a.dims != it.value().at("dims").get<std::vector<std::int64_t>>())
        throw FormatError("array '" + it.key() + "' disagrees with the manifest");
      c.arrays_[it.key()] = std::move(a);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return c;
}

void Container::expect_mesh(std::uint64_t hash) const {
  if (hash != mesh_hash) throw FormatError("container was written for a different mesh");
}

std::string timestamp_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace strobe
