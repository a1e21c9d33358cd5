#ifndef VKPLATE_MESH_IO_HPP
#define VKPLATE_MESH_IO_HPP

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "vkplate/mesh.hpp"

namespace vkplate {

// morleymesh 1
// vertices N
// x y            (N lines)
// triangles M
// v0 v1 v2 ref   (M lines, ref = local index of the refinement edge)

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "morleymesh 1\n";
  out << "vertices " << mesh.n_vertices() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Point& p : mesh.vertices()) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.n_triangles() << '\n';
  for (const Triangle& t : mesh.triangles())
    out << t.vertices[0] << ' ' << t.vertices[1] << ' ' << t.vertices[2] << ' ' << t.refinement_edge << '\n';
}

inline Mesh read_mesh(std::istream& in) {
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "morleymesh" || version != 1)
    throw MeshError("read_mesh: missing 'morleymesh 1' header");
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "vertices") throw MeshError("read_mesh: expected 'vertices N'");
  std::vector<Point> vertices(n);
  for (auto& p : vertices)
    if (!(in >> p.x >> p.y)) throw MeshError("read_mesh: truncated vertex list");
  if (!(in >> word >> n) || word != "triangles") throw MeshError("read_mesh: expected 'triangles M'");
  std::vector<std::array<std::size_t, 3>> triangles(n);
  std::vector<int> refs(n);
  for (std::size_t t = 0; t < n; ++t)
    if (!(in >> triangles[t][0] >> triangles[t][1] >> triangles[t][2] >> refs[t]))
      throw MeshError("read_mesh: truncated triangle list");
  return Mesh::from_lists(std::move(vertices), triangles, refs);
}

/// Wireframe SVG, one <path> per triangle, y axis pointing up.
inline void write_svg(std::ostream& out, const Mesh& mesh, double size_px = 800.0) {
  double xmin = std::numeric_limits<double>::max(), ymin = xmin;
  double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
  for (const Point& p : mesh.vertices()) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double span = std::max(xmax - xmin, ymax - ymin);
  const double margin = 10.0;
  const double s = (size_px - 2.0 * margin) / span;
  auto px = [&](Point p) {
    std::ostringstream os;
    os << std::setprecision(8) << margin + s * (p.x - xmin) << ',' << margin + s * (ymax - p.y);
    return os.str();
  };
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px << "\" height=\"" << size_px << "\">\n";
  out << "<g fill=\"none\" stroke=\"black\" stroke-width=\"0.5\">\n";
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto c = mesh.corners(t);
    out << "<path d=\"M" << px(c[0]) << " L" << px(c[1]) << " L" << px(c[2]) << " Z\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

}  // namespace vkplate

#endif  // VKPLATE_MESH_IO_HPP
