#pragma once

// Field files: one JSON header line {"type":"scalar"|"vector","n":N,"version":1}
// followed by little-endian float64 nodal values in row-major order. Vector
// fields store the x1 array then the x2 array.

#include <algorithm>
#include <bit>
#include <fstream>
#include <string>
#include <variant>

#include "json.hpp"

#include "eulerrough/errors.hpp"
#include "eulerrough/field.hpp"

namespace eulerrough::io {

using AnyField = std::variant<ScalarField, VectorField>;

namespace detail {

inline void swap_bytes(double& x) {
  char* p = reinterpret_cast<char*>(&x);
  std::reverse(p, p + sizeof(double));
}

inline void write_array(std::ostream& out, std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (double x : v) {
      swap_bytes(x);
      out.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
  }
}

inline void read_array(std::istream& in, std::span<double> v, const std::string& path) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != v.size() * sizeof(double)) {
    throw FormatError(path + ": truncated field data");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (double& x : v) swap_bytes(x);
  }
}

inline void write_header(std::ostream& out, const char* type, int n) {
  nlohmann::ordered_json h;
  h["type"] = type;
  h["n"] = n;
  h["version"] = 1;
  out << h.dump() << '\n';
}

}  // namespace detail

inline void write_field(const std::string& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  detail::write_header(out, "scalar", f.grid().n());
  detail::write_array(out, f.values());
  if (!out) throw Error("write failed for '" + path + "'");
}

inline void write_field(const std::string& path, const VectorField& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  detail::write_header(out, "vector", u.grid().n());
  detail::write_array(out, u.x1.values());
  detail::write_array(out, u.x2.values());
  if (!out) throw Error("write failed for '" + path + "'");
}

inline AnyField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": bad header: " + e.what());
  }
  if (!h.is_object() || !h.contains("type") || !h.contains("n") || !h.contains("version")) {
    throw FormatError(path + ": header needs type, n and version");
  }
  if (h["version"] != 1) throw FormatError(path + ": unsupported version");
  const Grid g(h["n"].get<int>());
  const std::string type = h["type"].get<std::string>();
  if (type == "scalar") {
    ScalarField f(g);
    detail::read_array(in, f.values(), path);
    return f;
  }
  if (type == "vector") {
    VectorField u(g);
    detail::read_array(in, u.x1.values(), path);
    detail::read_array(in, u.x2.values(), path);
    return u;
  }
  throw FormatError(path + ": unknown field type '" + type + "'");
}

inline ScalarField read_scalar(const std::string& path) {
  AnyField f = read_field(path);
  if (auto* s = std::get_if<ScalarField>(&f)) return std::move(*s);
  throw FormatError(path + ": expected a scalar field");
}

inline VectorField read_vector(const std::string& path) {
  AnyField f = read_field(path);
  if (auto* v = std::get_if<VectorField>(&f)) return std::move(*v);
  throw FormatError(path + ": expected a vector field");
}

}  // namespace eulerrough::io
