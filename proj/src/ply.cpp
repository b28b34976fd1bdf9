#include "ocgs/ply.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ocgs/error.hpp"

namespace ocgs {

namespace {

enum class Type { i8, u8, i16, u16, i32, u32, f32, f64 };

bool parse_type(const std::string& s, Type& t) {
  if (s == "char" || s == "int8") return t = Type::i8, true;
  if (s == "uchar" || s == "uint8") return t = Type::u8, true;
  if (s == "short" || s == "int16") return t = Type::i16, true;
  if (s == "ushort" || s == "uint16") return t = Type::u16, true;
  if (s == "int" || s == "int32") return t = Type::i32, true;
  if (s == "uint" || s == "uint32") return t = Type::u32, true;
  if (s == "float" || s == "float32") return t = Type::f32, true;
  if (s == "double" || s == "float64") return t = Type::f64, true;
  return false;
}

std::size_t type_size(Type t) {
  switch (t) {
    case Type::i8: case Type::u8: return 1;
    case Type::i16: case Type::u16: return 2;
    case Type::i32: case Type::u32: case Type::f32: return 4;
    case Type::f64: return 8;
  }
  return 0;
}

template <typename T>
double load(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double decode(Type t, const unsigned char* p) {
  switch (t) {
    case Type::i8: return load<std::int8_t>(p);
    case Type::u8: return load<std::uint8_t>(p);
    case Type::i16: return load<std::int16_t>(p);
    case Type::u16: return load<std::uint16_t>(p);
    case Type::i32: return load<std::int32_t>(p);
    case Type::u32: return load<std::uint32_t>(p);
    case Type::f32: return load<float>(p);
    case Type::f64: return load<double>(p);
  }
  return 0.0;
}

struct PropSpec {
  std::string name;
  bool is_list = false;
  Type type = Type::f64;
  Type count_type = Type::u8;
};

struct ElementSpec {
  std::string name;
  std::size_t count = 0;
  std::vector<PropSpec> props;
};

}  // namespace

int PlyElement::property_index(const std::string& p) const {
  for (std::size_t i = 0; i < properties.size(); ++i)
    if (properties[i] == p) return static_cast<int>(i);
  return -1;
}

const PlyElement* PlyFile::find(const std::string& name) const {
  for (const auto& e : elements)
    if (e.name == name) return &e;
  return nullptr;
}

PlyFile read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::format, "cannot open PLY file " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    if (pos >= bytes.size()) throw FormatError("PLY header is not terminated", start);
    line.assign(reinterpret_cast<const char*>(bytes.data()) + start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++pos;
  };

  PlyFile file;
  std::vector<ElementSpec> specs;
  std::string line;
  next_line(line);
  if (line != "ply") throw FormatError("missing 'ply' magic", 0);
  bool format_ok = false;
  while (true) {
    const std::size_t line_start = pos;
    next_line(line);
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "binary_little_endian") throw FormatError("unsupported PLY format '" + fmt + "'", line_start);
      format_ok = true;
    } else if (word == "comment" || word == "obj_info") {
      file.comments.push_back(line.size() > 8 ? line.substr(8) : std::string());
    } else if (word == "element") {
      ElementSpec e;
      if (!(ss >> e.name >> e.count)) throw FormatError("malformed element line", line_start);
      specs.push_back(e);
    } else if (word == "property") {
      if (specs.empty()) throw FormatError("property before any element", line_start);
      PropSpec p;
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        p.is_list = true;
        if (!parse_type(ct, p.count_type) || !parse_type(it, p.type) || p.name.empty())
          throw FormatError("malformed list property", line_start);
      } else {
        ss >> p.name;
        if (!parse_type(t, p.type) || p.name.empty()) throw FormatError("unknown property type '" + t + "'", line_start);
      }
      specs.back().props.push_back(p);
    } else if (!word.empty()) {
      throw FormatError("unexpected header keyword '" + word + "'", line_start);
    }
  }
  if (!format_ok) throw FormatError("PLY header lacks a format line", pos);
  file.header_bytes = pos;

  for (const ElementSpec& spec : specs) {
    PlyElement e;
    e.name = spec.name;
    e.count = spec.count;
    int lists = 0;
    for (const auto& p : spec.props) {
      if (p.is_list) {
        e.list_name = p.name;
        ++lists;
      } else {
        e.properties.push_back(p.name);
      }
    }
    if (lists > 1) throw FormatError("element '" + e.name + "' has more than one list property", pos);
    e.values.reserve(e.count * e.properties.size());
    if (lists) e.lists.reserve(e.count);
    for (std::size_t row = 0; row < e.count; ++row) {
      for (const auto& p : spec.props) {
        if (!p.is_list) {
          const std::size_t sz = type_size(p.type);
          if (pos + sz > bytes.size()) throw FormatError("truncated PLY payload in element '" + e.name + "'", pos);
          e.values.push_back(decode(p.type, bytes.data() + pos));
          pos += sz;
        } else {
          const std::size_t csz = type_size(p.count_type);
          if (pos + csz > bytes.size()) throw FormatError("truncated PLY list count", pos);
          const double n = decode(p.count_type, bytes.data() + pos);
          pos += csz;
          if (n < 0) throw FormatError("negative PLY list length", pos - csz);
          const std::size_t len = static_cast<std::size_t>(n), isz = type_size(p.type);
          if (pos + len * isz > bytes.size()) throw FormatError("truncated PLY list payload", pos);
          std::vector<std::int64_t> items(len);
          for (std::size_t k = 0; k < len; ++k, pos += isz)
            items[k] = static_cast<std::int64_t>(decode(p.type, bytes.data() + pos));
          e.lists.push_back(std::move(items));
        }
      }
    }
    file.elements.push_back(std::move(e));
  }
  return file;
}

}  // namespace ocgs
