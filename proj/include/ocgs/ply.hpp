#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ocgs {

/// One element of a binary little-endian PLY file. Scalar properties are widened to double
/// (exact for every PLY scalar type); at most one list property is kept, as `lists`.
struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;  // scalar properties, in file order
  std::vector<double> values;           // count × properties.size()
  std::string list_name;
  std::vector<std::vector<std::int64_t>> lists;

  int property_index(const std::string& p) const;
  double value(std::size_t row, int prop) const { return values[row * properties.size() + prop]; }
};

struct PlyFile {
  std::vector<std::string> comments;
  std::vector<PlyElement> elements;
  std::size_t header_bytes = 0;

  const PlyElement* find(const std::string& name) const;
};

/// Throws FormatError (with byte offset) on malformed headers or truncated payloads.
PlyFile read_ply(const std::filesystem::path& path);

}  // namespace ocgs
