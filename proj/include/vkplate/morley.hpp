#ifndef VKPLATE_MORLEY_HPP
#define VKPLATE_MORLEY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "vkplate/geometry.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/quadrature.hpp"

namespace vkplate {

/// Morley shape functions on one triangle. Local DOFs 0-2 are the vertex
/// values, DOFs 3-5 the mean outward normal derivative over local edge 0-2
/// (edge k is opposite vertex k).
///
/// Each shape function is a quadratic stored by its coefficients over the
/// monomials {1, s, t, s^2, st, t^2} with s = (x - cx) / h, t = (y - cy) / h
/// centred at the centroid and scaled by the longest edge.
struct LocalBasis {
  Point center;
  double scale = 1.0;
  Eigen::Matrix<double, 6, 6> coefficients;  // column i = shape function i
  std::array<SymMatrix2, 6> hessians;
  std::array<double, 6> integrals{};  // integral of each shape function over K
  std::array<Point, 3> outward_normals;
  double duality_condition = 1.0;

  static std::array<double, 6> monomials(Point p, Point c, double h) {
    const double s = (p.x - c.x) / h;
    const double t = (p.y - c.y) / h;
    return {1.0, s, t, s * s, s * t, t * t};
  }
  static std::array<Point, 6> monomial_gradients(Point p, Point c, double h) {
    const double s = (p.x - c.x) / h;
    const double t = (p.y - c.y) / h;
    return {Point{0, 0}, Point{1 / h, 0}, Point{0, 1 / h}, Point{2 * s / h, 0}, Point{t / h, s / h},
            Point{0, 2 * t / h}};
  }

  double value(int i, Point p) const {
    const auto m = monomials(p, center, scale);
    double v = 0.0;
    for (int l = 0; l < 6; ++l) v += coefficients(l, i) * m[l];
    return v;
  }
  Point gradient(int i, Point p) const {
    const auto g = monomial_gradients(p, center, scale);
    Point r;
    for (int l = 0; l < 6; ++l) r = r + coefficients(l, i) * g[l];
    return r;
  }
};

/// Thrown for triangles whose duality system is too ill-conditioned.
class DegenerateElement : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline LocalBasis local_basis(const std::array<Point, 3>& p) {
  LocalBasis basis;
  basis.center = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
  basis.scale = std::max({norm(p[1] - p[0]), norm(p[2] - p[1]), norm(p[0] - p[2])});
  const double area = 0.5 * signed_area2(p[0], p[1], p[2]);
  if (!(area > 0.0)) throw DegenerateElement("local_basis: triangle is not counterclockwise");

  Eigen::Matrix<double, 6, 6> duality;  // duality(j, l) = DOF j applied to monomial l
  for (int k = 0; k < 3; ++k) {
    const auto m = LocalBasis::monomials(p[k], basis.center, basis.scale);
    for (int l = 0; l < 6; ++l) duality(k, l) = m[l];
  }
  for (int k = 0; k < 3; ++k) {
    const Point a = p[(k + 1) % 3];
    const Point b = p[(k + 2) % 3];
    const Point d = b - a;
    const Point n = (1.0 / norm(d)) * Point{d.y, -d.x};
    basis.outward_normals[k] = n;
    // Normal derivative of a quadratic is affine along the edge: its mean is
    // the midpoint value.
    const auto g = LocalBasis::monomial_gradients(midpoint(a, b), basis.center, basis.scale);
    for (int l = 0; l < 6; ++l) duality(3 + k, l) = dot(g[l], n);
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(duality);
  if (!lu.isInvertible()) throw DegenerateElement("local_basis: singular duality system");
  basis.coefficients = lu.inverse();
  basis.duality_condition = duality.cwiseAbs().colwise().sum().maxCoeff() *
                            basis.coefficients.cwiseAbs().colwise().sum().maxCoeff();
  if (basis.duality_condition > 1e12) throw DegenerateElement("local_basis: near-degenerate triangle");

  const double h2 = basis.scale * basis.scale;
  for (int i = 0; i < 6; ++i) {
    const auto& c = basis.coefficients.col(i);
    basis.hessians[i] = {2.0 * c(3) / h2, c(4) / h2, 2.0 * c(5) / h2};
    // Edge-midpoint rule, exact for quadratics.
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += basis.value(i, midpoint(p[(k + 1) % 3], p[(k + 2) % 3]));
    basis.integrals[i] = area * s / 3.0;
  }
  return basis;
}

/// A smooth scalar function with its gradient.
struct SmoothFunction {
  std::function<double(Point)> value;
  std::function<Point(Point)> gradient;
};

/// Number of Gauss points for edge means of smooth arguments.
inline constexpr int interpolation_edge_points = 5;

/// Local Morley DOFs (outward normals) of a smooth function on one triangle.
inline std::array<double, 6> local_interpolant(const std::array<Point, 3>& p, const LocalBasis& basis,
                                               const SmoothFunction& fn) {
  static const LineRule rule = gauss_legendre(interpolation_edge_points);
  std::array<double, 6> dofs{};
  for (int k = 0; k < 3; ++k) dofs[k] = fn.value(p[k]);
  for (int k = 0; k < 3; ++k) {
    const Point a = p[(k + 1) % 3];
    const Point b = p[(k + 2) % 3];
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      mean += rule.weights[q] * dot(fn.gradient(a + rule.nodes[q] * (b - a)), basis.outward_normals[k]);
    dofs[3 + k] = mean;
  }
  return dofs;
}

inline SymMatrix2 local_hessian(const LocalBasis& basis, const std::array<double, 6>& dofs) {
  SymMatrix2 h;
  for (int i = 0; i < 6; ++i) h += dofs[i] * basis.hessians[i];
  return h;
}

enum class EdgeOrientation { lower_to_higher, reversed };

/// Global DOF slots of one triangle; index is invalid_index for DOFs removed
/// by the clamped boundary condition.
struct LocalDofs {
  std::array<std::size_t, 6> index{};
  std::array<double, 6> sign{};
};

/// The clamped Morley space M(T): one DOF per interior vertex, then one per
/// interior edge (mean derivative along the global edge normal).
class MorleySpace {
 public:
  explicit MorleySpace(std::shared_ptr<const Mesh> mesh, EdgeOrientation orientation = EdgeOrientation::lower_to_higher)
      : mesh_(std::move(mesh)), orientation_(orientation) {
    const Mesh& m = *mesh_;
    vertex_dof_.assign(m.n_vertices(), invalid_index);
    edge_dof_.assign(m.n_edges(), invalid_index);
    std::size_t next = 0;
    for (std::size_t v = 0; v < m.n_vertices(); ++v)
      if (!m.is_boundary_vertex(v)) vertex_dof_[v] = next++;
    for (std::size_t e = 0; e < m.n_edges(); ++e)
      if (!m.edge(e).is_boundary) edge_dof_[e] = next++;
    n_dofs_ = next;

    local_.resize(m.n_triangles());
    basis_.resize(m.n_triangles());
    for (std::size_t t = 0; t < m.n_triangles(); ++t) {
      basis_[t] = local_basis(m.corners(t));
      LocalDofs& ld = local_[t];
      for (int k = 0; k < 3; ++k) {
        ld.index[k] = vertex_dof_[m.triangle(t).vertices[k]];
        ld.sign[k] = 1.0;
        const std::size_t e = m.triangle_edges(t)[k];
        ld.index[3 + k] = edge_dof_[e];
        ld.sign[3 + k] = dot(basis_[t].outward_normals[k], edge_normal(e)) > 0.0 ? 1.0 : -1.0;
      }
    }
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  std::size_t n_dofs() const { return n_dofs_; }
  std::size_t vertex_dof(std::size_t v) const { return vertex_dof_[v]; }
  std::size_t edge_dof(std::size_t e) const { return edge_dof_[e]; }
  EdgeOrientation orientation() const { return orientation_; }

  /// Global normal of edge e that the edge DOF refers to.
  Point edge_normal(std::size_t e) const {
    const Point n = mesh_->edge(e).normal;
    return orientation_ == EdgeOrientation::lower_to_higher ? n : -1.0 * n;
  }

  const LocalDofs& local_dofs(std::size_t t) const { return local_[t]; }
  const LocalBasis& basis(std::size_t t) const { return basis_[t]; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  EdgeOrientation orientation_;
  std::size_t n_dofs_ = 0;
  std::vector<std::size_t> vertex_dof_;
  std::vector<std::size_t> edge_dof_;
  std::vector<LocalDofs> local_;
  std::vector<LocalBasis> basis_;
};

inline std::shared_ptr<const MorleySpace> build_space(std::shared_ptr<const Mesh> mesh,
                                                      EdgeOrientation orientation = EdgeOrientation::lower_to_higher) {
  return std::make_shared<const MorleySpace>(std::move(mesh), orientation);
}

struct MorleyField {
  std::shared_ptr<const MorleySpace> space;
  Eigen::VectorXd coefficients;

  static MorleyField zero(std::shared_ptr<const MorleySpace> space) {
    const auto n = static_cast<Eigen::Index>(space->n_dofs());
    return {std::move(space), Eigen::VectorXd::Zero(n)};
  }

  /// Local DOF values on triangle t in the triangle's outward-normal convention.
  std::array<double, 6> local_values(std::size_t t) const {
    const LocalDofs& ld = space->local_dofs(t);
    std::array<double, 6> d{};
    for (int i = 0; i < 6; ++i)
      d[i] = ld.index[i] == invalid_index ? 0.0 : ld.sign[i] * coefficients[static_cast<Eigen::Index>(ld.index[i])];
    return d;
  }
  SymMatrix2 hessian(std::size_t t) const { return local_hessian(space->basis(t), local_values(t)); }
};

/// Psi_M = (u_M, v_M) on a shared space.
struct StatePair {
  MorleyField u;
  MorleyField v;

  static StatePair zero(const std::shared_ptr<const MorleySpace>& space) {
    return {MorleyField::zero(space), MorleyField::zero(space)};
  }
  const std::shared_ptr<const MorleySpace>& space() const { return u.space; }

  /// u-DOFs first, v-DOFs second.
  Eigen::VectorXd packed() const {
    Eigen::VectorXd x(u.coefficients.size() + v.coefficients.size());
    x << u.coefficients, v.coefficients;
    return x;
  }
  static StatePair unpack(const std::shared_ptr<const MorleySpace>& space, const Eigen::VectorXd& x) {
    const auto n = static_cast<Eigen::Index>(space->n_dofs());
    if (x.size() != 2 * n) throw std::invalid_argument("StatePair::unpack: size mismatch");
    return {{space, x.head(n)}, {space, x.tail(n)}};
  }
};

/// Morley interpolation I_M of a smooth function. Boundary DOFs are dropped,
/// so the result matches v only if v satisfies the clamped conditions.
inline MorleyField interpolate(const std::shared_ptr<const MorleySpace>& space, const SmoothFunction& fn) {
  static const LineRule rule = gauss_legendre(interpolation_edge_points);
  const Mesh& mesh = space->mesh();
  MorleyField field = MorleyField::zero(space);
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v)
    if (auto d = space->vertex_dof(v); d != invalid_index) field.coefficients[static_cast<Eigen::Index>(d)] = fn.value(mesh.vertex(v));
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    const std::size_t d = space->edge_dof(e);
    if (d == invalid_index) continue;
    const Edge& edge = mesh.edge(e);
    const Point a = mesh.vertex(edge.vertices[0]);
    const Point b = mesh.vertex(edge.vertices[1]);
    const Point n = space->edge_normal(e);
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) mean += rule.weights[q] * dot(fn.gradient(a + rule.nodes[q] * (b - a)), n);
    field.coefficients[static_cast<Eigen::Index>(d)] = mean;
  }
  return field;
}

struct PointEvaluation {
  double value = 0.0;
  Point gradient;
  SymMatrix2 hessian;
};

inline PointEvaluation evaluate(const MorleyField& field, std::size_t t, Point p) {
  const Mesh& mesh = field.space->mesh();
  if (t >= mesh.n_triangles()) throw std::out_of_range("evaluate: triangle id out of range");
  const auto c = mesh.corners(t);
  const auto lambda = barycentric(c[0], c[1], c[2], p);
  for (double l : lambda)
    if (l < -1e-10) throw std::domain_error("evaluate: point outside triangle " + std::to_string(t));
  const LocalBasis& basis = field.space->basis(t);
  const auto d = field.local_values(t);
  PointEvaluation r;
  for (int i = 0; i < 6; ++i) {
    r.value += d[i] * basis.value(i, p);
    r.gradient = r.gradient + d[i] * basis.gradient(i, p);
  }
  r.hessian = local_hessian(basis, d);
  return r;
}

/// Transfers a coarse Morley field to a refinement: every fine DOF is
/// evaluated from the coarse quadratic on each coarse ancestor touching it and
/// averaged over the distinct ancestors.
inline MorleyField prolongate(const MorleyField& coarse, const std::shared_ptr<const MorleySpace>& fine_space,
                              const MeshPartition& partition) {
  const Mesh& fine = fine_space->mesh();
  const MorleySpace& coarse_space = *coarse.space;
  if (partition.ancestor.size() != fine.n_triangles())
    throw std::invalid_argument("prolongate: partition does not match the fine mesh");

  struct Sample {
    std::size_t dof;
    std::size_t ancestor;
    double value;
  };
  std::vector<Sample> samples;
  samples.reserve(6 * fine.n_triangles());
  for (std::size_t t = 0; t < fine.n_triangles(); ++t) {
    const std::size_t k = partition.ancestor[t];
    if (k >= coarse_space.mesh().n_triangles()) throw std::invalid_argument("prolongate: ancestor out of range");
    const LocalBasis& cb = coarse_space.basis(k);
    const auto cd = coarse.local_values(k);
    const auto c = fine.corners(t);
    for (int j = 0; j < 3; ++j) {
      const std::size_t dof = fine_space->vertex_dof(fine.triangle(t).vertices[j]);
      if (dof == invalid_index) continue;
      double val = 0.0;
      for (int i = 0; i < 6; ++i) val += cd[i] * cb.value(i, c[j]);
      samples.push_back({dof, k, val});
    }
    for (int j = 0; j < 3; ++j) {
      const std::size_t e = fine.triangle_edges(t)[j];
      const std::size_t dof = fine_space->edge_dof(e);
      if (dof == invalid_index) continue;
      const Point m = midpoint(c[(j + 1) % 3], c[(j + 2) % 3]);
      Point g;
      for (int i = 0; i < 6; ++i) g = g + cd[i] * cb.gradient(i, m);
      samples.push_back({dof, k, dot(g, fine_space->edge_normal(e))});
    }
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return std::tie(a.dof, a.ancestor) < std::tie(b.dof, b.ancestor); });
  MorleyField out = MorleyField::zero(fine_space);
  std::vector<int> count(fine_space->n_dofs(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && samples[i].dof == samples[i - 1].dof && samples[i].ancestor == samples[i - 1].ancestor) continue;
    out.coefficients[static_cast<Eigen::Index>(samples[i].dof)] += samples[i].value;
    ++count[samples[i].dof];
  }
  for (std::size_t d = 0; d < count.size(); ++d)
    if (count[d] > 0) out.coefficients[static_cast<Eigen::Index>(d)] /= count[d];
  return out;
}

inline StatePair prolongate(const StatePair& coarse, const std::shared_ptr<const MorleySpace>& fine_space,
                            const MeshPartition& partition) {
  return {prolongate(coarse.u, fine_space, partition), prolongate(coarse.v, fine_space, partition)};
}

// morleyfield 1
// n_dofs
// c_0 ... c_{n-1}   (one per line, 17 significant digits)

inline void write_field(std::ostream& out, const MorleyField& field) {
  out << "morleyfield 1\n" << field.coefficients.size() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < field.coefficients.size(); ++i) out << field.coefficients[i] << '\n';
}

inline MorleyField read_field(std::istream& in, std::shared_ptr<const MorleySpace> space) {
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "morleyfield" || version != 1)
    throw std::runtime_error("read_field: missing 'morleyfield 1' header");
  std::size_t n = 0;
  if (!(in >> n)) throw std::runtime_error("read_field: missing DOF count");
  if (n != space->n_dofs()) throw std::runtime_error("read_field: DOF count does not match the space");
  MorleyField field = MorleyField::zero(std::move(space));
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> field.coefficients[static_cast<Eigen::Index>(i)])) throw std::runtime_error("read_field: truncated");
  return field;
}

}  // namespace vkplate

#endif  // VKPLATE_MORLEY_HPP
