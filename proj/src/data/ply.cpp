#include "tearing/data/ply.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tearing {

void write_ply(const std::filesystem::path& path, const PlyCloud& cloud) {
  const auto& pts = cloud.points.points;
  if (cloud.attribute_name && cloud.attribute.size() != pts.size()) {
    throw PlyError(path.string() + ": attribute has " + std::to_string(cloud.attribute.size()) + " values for " +
                   std::to_string(pts.size()) + " points");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw PlyError("cannot write " + path.string());
  os << "ply\nformat ascii 1.0\nelement vertex " << pts.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.attribute_name) os << "property int " << *cloud.attribute_name << "\n";
  os << "end_header\n";
  char buf[96];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int n = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g", static_cast<double>(static_cast<float>(pts[i][0])),
                          static_cast<double>(static_cast<float>(pts[i][1])),
                          static_cast<double>(static_cast<float>(pts[i][2])));
    os.write(buf, n);
    if (cloud.attribute_name) os << ' ' << cloud.attribute[i];
    os << '\n';
  }
  if (!os) throw PlyError("write failed for " + path.string());
}

void write_ply(const std::filesystem::path& path, const PointCloud3& points) {
  write_ply(path, PlyCloud{points, std::nullopt, {}});
}

PlyCloud read_ply(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PlyError("cannot open " + path.string());
  std::size_t line_no = 0;
  std::string line;
  auto fail = [&](const std::string& what) -> PlyError {
    return PlyError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  auto next = [&]() {
    if (!std::getline(is, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || line != "ply") throw fail("missing 'ply' magic");
  if (!next() || line != "format ascii 1.0") throw fail("only 'format ascii 1.0' is supported");
  std::optional<std::size_t> count;
  std::vector<std::string> props;
  bool in_vertex = false;
  PlyCloud out;
  for (;;) {
    if (!next()) throw fail("header ends without end_header");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "comment" || word == "obj_info") continue;
    if (word == "element") {
      std::string name;
      long long n = -1;
      ls >> name >> n;
      if (!ls || n < 0) throw fail("malformed element line");
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (count) throw fail("duplicate vertex element");
        count = static_cast<std::size_t>(n);
      } else if (n != 0) {
        throw fail("unsupported element '" + name + "' with entries");
      }
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!ls) throw fail("malformed property line");
      if (type == "list") throw fail("list properties are not supported");
      if (!in_vertex) continue;
      const std::size_t slot = props.size();
      if (slot < 3) {
        static const char* xyz[] = {"x", "y", "z"};
        if (name != xyz[slot]) throw fail("expected property " + std::string(xyz[slot]) + ", found " + name);
        if (type != "float" && type != "double" && type != "float32" && type != "float64") {
          throw fail("coordinate " + name + " must be float or double, found " + type);
        }
      } else if (slot == 3) {
        out.attribute_name = name;
      } else {
        throw fail("more than one extra vertex property");
      }
      props.push_back(name);
    } else {
      throw fail("unexpected header line '" + line + "'");
    }
  }
  if (!count) throw fail("no vertex element in header");
  if (props.size() < 3) throw fail("vertex element lacks x, y, z");

  out.points.points.reserve(*count);
  for (std::size_t i = 0; i < *count; ++i) {
    if (!next()) {
      throw PlyError(path.string() + ": expected " + std::to_string(*count) + " vertices, found " + std::to_string(i));
    }
    const char* p = line.data();
    const char* end = line.data() + line.size();
    // Values are f32 on disk; parsing as float makes round trips exact.
    float v[4] = {0, 0, 0, 0};
    for (std::size_t k = 0; k < props.size(); ++k) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      auto r = std::from_chars(p, end, v[k]);
      if (r.ec != std::errc()) throw fail("cannot parse value " + std::to_string(k + 1) + " of vertex " + std::to_string(i));
      p = r.ptr;
    }
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p != end) throw fail("trailing data after vertex " + std::to_string(i));
    out.points.points.push_back({v[0], v[1], v[2]});
    if (out.attribute_name) out.attribute.push_back(static_cast<int>(v[3]));
  }
  while (next()) {
    if (line.find_first_not_of(" \t") != std::string::npos) throw fail("data after the last vertex");
  }
  return out;
}

}  // namespace tearing
