#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace ilab {

using Point = std::array<double, 3>;
using Offset = std::array<int, 3>;

enum class Errc {
  shape_out_of_bounds,
  empty_interior,
  non_finite,
  invalid_argument,
  domain_error,
  non_monotone,
  invalid_bracket,
  precondition,
  certificate_failed,
  io
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::shape_out_of_bounds: return "shape-out-of-bounds";
    case Errc::empty_interior: return "empty-interior";
    case Errc::non_finite: return "non-finite";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::domain_error: return "domain-error";
    case Errc::non_monotone: return "non-monotone";
    case Errc::invalid_bracket: return "invalid-bracket";
    case Errc::precondition: return "precondition";
    case Errc::certificate_failed: return "certificate-failed";
    case Errc::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline double dot(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) s += a[c] * b[c];
  return s;
}

inline double norm(const Point& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline std::string format_point(const Point& x, int dim) {
  std::string s = "(";
  for (int c = 0; c < dim; ++c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x[c]);
    s += buf;
    if (c + 1 < dim) s += ", ";
  }
  return s + ")";
}

// Closed-form evaluator x -> value with a free-text note on support/smoothness.
struct Sampler {
  std::function<double(const Point&)> eval;
  std::string note;

  Sampler() = default;
  template <class F, class = std::enable_if_t<std::is_invocable_r_v<double, F, const Point&> &&
                                              !std::is_same_v<std::decay_t<F>, Sampler>>>
  Sampler(F f, std::string n = {}) : eval(std::move(f)), note(std::move(n)) {}

  explicit operator bool() const { return static_cast<bool>(eval); }
  double operator()(const Point& x) const { return eval ? eval(x) : 0.0; }

  static Sampler constant(double v) {
    return Sampler([v](const Point&) { return v; }, "constant");
  }
};

struct VectorSampler {
  std::function<Point(const Point&)> eval;
  std::string note;

  VectorSampler() = default;
  template <class F, class = std::enable_if_t<std::is_invocable_r_v<Point, F, const Point&> &&
                                              !std::is_same_v<std::decay_t<F>, VectorSampler>>>
  VectorSampler(F f, std::string n = {}) : eval(std::move(f)), note(std::move(n)) {}

  explicit operator bool() const { return static_cast<bool>(eval); }
  Point operator()(const Point& x) const { return eval ? eval(x) : Point{0, 0, 0}; }
};

enum class DirectionSet { Axis, AxisDiagonal, Full };

struct Grid {
  int dim = 1;
  double h = 0.1;
  Point origin{0, 0, 0};
  std::array<int, 3> extents{3, 1, 1};
  int stencil_radius = 1;
  DirectionSet directions = DirectionSet::AxisDiagonal;

  // Lattice covering [lo, hi]^dim with spacing h.
  static Grid cube(int dim, double lo, double hi, double h, int stencil_radius = 1,
                   DirectionSet dirs = DirectionSet::AxisDiagonal) {
    Grid g;
    g.dim = dim;
    g.h = h;
    g.stencil_radius = stencil_radius;
    g.directions = dirs;
    const int n = static_cast<int>(std::llround((hi - lo) / h)) + 1;
    for (int c = 0; c < 3; ++c) {
      g.origin[c] = c < dim ? lo : 0.0;
      g.extents[c] = c < dim ? n : 1;
    }
    g.validate();
    return g;
  }

  void validate() const {
    if (dim < 1 || dim > 3) throw Error(Errc::invalid_argument, "grid dim must be 1, 2 or 3");
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::invalid_argument, "grid spacing must be positive");
    if (stencil_radius < 1) throw Error(Errc::invalid_argument, "stencil_radius must be >= 1");
    for (int c = 0; c < dim; ++c)
      if (extents[c] < 3) throw Error(Errc::invalid_argument, "grid extents must be >= 3 per axis");
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int c = 0; c < dim; ++c) n *= static_cast<std::size_t>(extents[c]);
    return n;
  }

  // Row-major: the last active axis varies fastest.
  std::size_t index(const Offset& i) const {
    std::size_t idx = 0;
    for (int c = 0; c < dim; ++c) idx = idx * static_cast<std::size_t>(extents[c]) + static_cast<std::size_t>(i[c]);
    return idx;
  }

  Offset multi(std::size_t idx) const {
    Offset i{0, 0, 0};
    for (int c = dim - 1; c >= 0; --c) {
      i[c] = static_cast<int>(idx % static_cast<std::size_t>(extents[c]));
      idx /= static_cast<std::size_t>(extents[c]);
    }
    return i;
  }

  bool contains(const Offset& i) const {
    for (int c = 0; c < dim; ++c)
      if (i[c] < 0 || i[c] >= extents[c]) return false;
    return true;
  }

  Point coord(const Offset& i) const {
    Point x{0, 0, 0};
    for (int c = 0; c < dim; ++c) x[c] = origin[c] + i[c] * h;
    return x;
  }

  Point coord(std::size_t idx) const { return coord(multi(idx)); }

  Point lo() const { return origin; }
  Point hi() const {
    Point x = origin;
    for (int c = 0; c < dim; ++c) x[c] += (extents[c] - 1) * h;
    return x;
  }

  // Symmetric set of lattice arm vectors; the opposite of entry j is entry n-1-j.
  std::vector<Offset> stencil() const {
    const int k = stencil_radius;
    std::vector<Offset> out;
    const int r = directions == DirectionSet::Full ? k : 1;
    const int lo1 = dim > 1 ? -r : 0, lo2 = dim > 2 ? -r : 0;
    for (int a = -r; a <= r; ++a)
      for (int b = lo1; b <= -lo1; ++b)
        for (int c = lo2; c <= -lo2; ++c) {
          Offset v{a, b, c};
          int nz = 0, inf = 0;
          for (int d = 0; d < 3; ++d) {
            nz += v[d] != 0;
            inf = std::max(inf, std::abs(v[d]));
          }
          if (inf == 0) continue;
          if (directions == DirectionSet::Axis && nz != 1) continue;
          if (directions == DirectionSet::Full) {
            if (inf != k) continue;
          } else {
            for (auto& e : v) e *= k;
          }
          out.push_back(v);
        }
    return out;
  }
};

struct Ball {
  Point center{0, 0, 0};
  double radius = 1.0;
};

struct Annulus {
  Point center{0, 0, 0};
  double r_in = 0.5;
  double r_out = 1.0;
};

struct Box {
  Point lo{0, 0, 0};
  Point hi{1, 1, 1};
};

using Shape = std::variant<Ball, Annulus, Box>;

enum class NodeClass : std::uint8_t { Exterior = 0, Interior = 1, Boundary = 2 };

namespace detail {

inline bool strictly_inside(const Shape& s, const Point& x, int dim) {
  return std::visit(
      [&](const auto& sh) -> bool {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Ball>) {
          const double r2 = dot(sub(x, sh.center), sub(x, sh.center), dim);
          return r2 < sh.radius * sh.radius * (1.0 - 1e-12);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          const double r2 = dot(sub(x, sh.center), sub(x, sh.center), dim);
          return r2 < sh.r_out * sh.r_out * (1.0 - 1e-12) && r2 > sh.r_in * sh.r_in * (1.0 + 1e-12);
        } else {
          for (int c = 0; c < dim; ++c) {
            const double tol = 1e-12 * (1.0 + std::abs(sh.hi[c] - sh.lo[c]));
            if (!(x[c] > sh.lo[c] + tol && x[c] < sh.hi[c] - tol)) return false;
          }
          return true;
        }
      },
      s);
}

// First exit parameter t > 0 of y + t*w from the open shape (y strictly inside).
inline double exit_parameter(const Shape& s, const Point& y, const Point& w, int dim) {
  return std::visit(
      [&](const auto& sh) -> double {
        using T = std::decay_t<decltype(sh)>;
        auto sphere_out = [&](const Point& c, double r) {
          const Point p = sub(y, c);
          const double a = dot(w, w, dim), b = 2.0 * dot(p, w, dim), cc = dot(p, p, dim) - r * r;
          const double disc = std::max(0.0, b * b - 4.0 * a * cc);
          return (-b + std::sqrt(disc)) / (2.0 * a);
        };
        if constexpr (std::is_same_v<T, Ball>) {
          return sphere_out(sh.center, sh.radius);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          double t = sphere_out(sh.center, sh.r_out);
          const Point p = sub(y, sh.center);
          const double a = dot(w, w, dim), b = 2.0 * dot(p, w, dim), cc = dot(p, p, dim) - sh.r_in * sh.r_in;
          const double disc = b * b - 4.0 * a * cc;
          if (disc > 0.0) {
            const double t1 = (-b - std::sqrt(disc)) / (2.0 * a);
            if (t1 > 0.0) t = std::min(t, t1);
          }
          return t;
        } else {
          double t = INFINITY;
          for (int c = 0; c < dim; ++c) {
            if (w[c] > 0) t = std::min(t, (sh.hi[c] - y[c]) / w[c]);
            if (w[c] < 0) t = std::min(t, (sh.lo[c] - y[c]) / w[c]);
          }
          return t;
        }
      },
      s);
}

inline void shape_bbox(const Shape& s, int dim, Point& lo, Point& hi) {
  std::visit(
      [&](const auto& sh) {
        using T = std::decay_t<decltype(sh)>;
        for (int c = 0; c < dim; ++c) {
          if constexpr (std::is_same_v<T, Ball>) {
            lo[c] = sh.center[c] - sh.radius;
            hi[c] = sh.center[c] + sh.radius;
          } else if constexpr (std::is_same_v<T, Annulus>) {
            lo[c] = sh.center[c] - sh.r_out;
            hi[c] = sh.center[c] + sh.r_out;
          } else {
            lo[c] = sh.lo[c];
            hi[c] = sh.hi[c];
          }
        }
      },
      s);
}

inline bool shape_valid(const Shape& s) {
  return std::visit(
      [](const auto& sh) -> bool {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Ball>) return sh.radius > 0.0;
        else if constexpr (std::is_same_v<T, Annulus>) return sh.r_in >= 0.0 && sh.r_out > sh.r_in;
        else return true;
      },
      s);
}

}  // namespace detail

// One stencil arm of an Interior node: either a lattice node or a surface point.
struct Arm {
  std::int64_t ref = 0;  // >= 0: node index; < 0: surface point -ref-1
  double dist = 0.0;
};

struct DomainMask {
  Grid grid;
  Shape shape;
  std::vector<NodeClass> cls;
  std::vector<std::size_t> interior;   // node indices, ascending
  std::vector<std::int64_t> slot;      // node -> interior slot or -1
  std::vector<Offset> dirs;
  std::vector<Arm> arms;               // interior.size() * dirs.size()
  std::vector<Point> surface;          // clipped ray endpoints on the shape surface
  std::array<std::array<int, 2>, 3> axis_dir{};  // [axis][0: +, 1: -] -> direction index

  std::size_t ndir() const { return dirs.size(); }
  const Arm* arms_of(std::size_t s) const { return arms.data() + s * dirs.size(); }
  bool is_interior(std::size_t i) const { return cls[i] == NodeClass::Interior; }
  bool is_boundary(std::size_t i) const { return cls[i] == NodeClass::Boundary; }

  std::size_t count(NodeClass c) const {
    return static_cast<std::size_t>(std::count(cls.begin(), cls.end(), c));
  }

  // Interior ∪ Boundary nodes in row-major order.
  std::vector<std::size_t> active() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cls.size(); ++i)
      if (cls[i] != NodeClass::Exterior) out.push_back(i);
    return out;
  }
};

using MaskPtr = std::shared_ptr<const DomainMask>;

inline MaskPtr build_mask(const Grid& grid, const Shape& shape) {
  grid.validate();
  if (!detail::shape_valid(shape)) throw Error(Errc::invalid_argument, "degenerate shape parameters");
  const int dim = grid.dim;
  {
    Point slo{}, shi{};
    detail::shape_bbox(shape, dim, slo, shi);
    const Point glo = grid.lo(), ghi = grid.hi();
    const double tol = 1e-9 * grid.h;
    for (int c = 0; c < dim; ++c)
      if (slo[c] < glo[c] - tol || shi[c] > ghi[c] + tol)
        throw Error(Errc::shape_out_of_bounds, "shape extends beyond the grid bounding box on axis " + std::to_string(c));
  }

  auto m = std::make_shared<DomainMask>();
  m->grid = grid;
  m->shape = shape;
  const std::size_t n = grid.size();
  m->cls.assign(n, NodeClass::Exterior);
  m->slot.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (detail::strictly_inside(shape, grid.coord(i), dim)) {
      m->cls[i] = NodeClass::Interior;
      m->slot[i] = static_cast<std::int64_t>(m->interior.size());
      m->interior.push_back(i);
    }
  if (m->interior.empty()) throw Error(Errc::empty_interior, "no lattice node lies strictly inside the shape");

  m->dirs = grid.stencil();
  const std::size_t nd = m->dirs.size();
  for (int c = 0; c < 3; ++c) m->axis_dir[c] = {-1, -1};
  for (std::size_t j = 0; j < nd; ++j) {
    const Offset& v = m->dirs[j];
    int nz = 0, axis = -1;
    for (int c = 0; c < 3; ++c)
      if (v[c] != 0) {
        ++nz;
        axis = c;
      }
    if (nz == 1 && std::abs(v[axis]) == grid.stencil_radius) m->axis_dir[axis][v[axis] > 0 ? 0 : 1] = static_cast<int>(j);
  }

  m->arms.resize(m->interior.size() * nd);
  for (std::size_t s = 0; s < m->interior.size(); ++s) {
    const std::size_t node = m->interior[s];
    const Offset base = grid.multi(node);
    const Point y = grid.coord(base);
    for (std::size_t j = 0; j < nd; ++j) {
      const Offset& v = m->dirs[j];
      Point w{0, 0, 0};
      for (int c = 0; c < dim; ++c) w[c] = v[c] * grid.h;
      const double len = norm(w, dim);

      // Mark the first non-Interior lattice point along the arm as Boundary.
      int g = 0;
      for (int c = 0; c < dim; ++c) g = std::gcd(g, std::abs(v[c]));
      for (int step = 1; step <= g; ++step) {
        Offset z = base;
        for (int c = 0; c < dim; ++c) z[c] += v[c] / g * step;
        if (!grid.contains(z)) break;
        const std::size_t zi = grid.index(z);
        if (m->cls[zi] != NodeClass::Interior) {
          m->cls[zi] = NodeClass::Boundary;
          break;
        }
      }

      const double t = detail::exit_parameter(shape, y, w, dim);
      Arm arm;
      if (t >= 1.0 - 1e-12) {
        Offset z = base;
        for (int c = 0; c < dim; ++c) z[c] += v[c];
        arm.ref = static_cast<std::int64_t>(grid.index(z));
        arm.dist = len;
      } else {
        Point p = y;
        for (int c = 0; c < dim; ++c) p[c] += t * w[c];
        // Surface point that sits on a lattice node reuses that node.
        Offset z{0, 0, 0};
        bool on_node = true;
        for (int c = 0; c < dim; ++c) {
          const double f = (p[c] - grid.origin[c]) / grid.h;
          z[c] = static_cast<int>(std::llround(f));
          if (std::abs(f - z[c]) > 1e-9) on_node = false;
        }
        if (on_node && grid.contains(z)) {
          const std::size_t zi = grid.index(z);
          if (m->cls[zi] == NodeClass::Exterior) m->cls[zi] = NodeClass::Boundary;
          arm.ref = static_cast<std::int64_t>(zi);
        } else {
          arm.ref = -static_cast<std::int64_t>(m->surface.size()) - 1;
          m->surface.push_back(p);
        }
        arm.dist = t * len;
      }
      m->arms[s * nd + j] = arm;
    }
  }
  return m;
}

struct ScalarField {
  MaskPtr mask;
  std::vector<double> values;   // per node; Exterior entries unused
  std::vector<double> surface;  // per surface point of the mask

  ScalarField() = default;
  explicit ScalarField(MaskPtr m, double fill = 0.0)
      : mask(std::move(m)), values(mask->grid.size(), 0.0), surface(mask->surface.size(), fill) {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (mask->cls[i] != NodeClass::Exterior) values[i] = fill;
  }

  const Grid& grid() const { return mask->grid; }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  double ray_value(const Arm& a) const {
    return a.ref >= 0 ? values[static_cast<std::size_t>(a.ref)] : surface[static_cast<std::size_t>(-a.ref - 1)];
  }

  double interior_max() const {
    double m = -INFINITY;
    for (auto i : mask->interior) m = std::max(m, values[i]);
    return m;
  }
  double interior_min() const {
    double m = INFINITY;
    for (auto i : mask->interior) m = std::min(m, values[i]);
    return m;
  }

  // max - min over Interior, Boundary and surface values.
  double oscillation() const {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (mask->cls[i] != NodeClass::Exterior) {
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
      }
    for (double v : surface) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi >= lo ? hi - lo : 0.0;
  }
};

inline double checked_sample(const Sampler& s, const Point& x, int dim) {
  const double v = s(x);
  if (!std::isfinite(v)) throw Error(Errc::non_finite, "sampler is not finite at " + format_point(x, dim));
  return v;
}

inline ScalarField sample(const Sampler& sampler, const MaskPtr& mask) {
  ScalarField f(mask);
  const Grid& g = mask->grid;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (mask->cls[i] != NodeClass::Exterior) f.values[i] = checked_sample(sampler, g.coord(i), g.dim);
  for (std::size_t k = 0; k < mask->surface.size(); ++k) f.surface[k] = checked_sample(sampler, mask->surface[k], g.dim);
  return f;
}

inline ScalarField sample(const Sampler& sampler, const Grid& grid, const MaskPtr& mask) {
  if (mask->grid.size() != grid.size() || mask->grid.h != grid.h)
    throw Error(Errc::invalid_argument, "mask was built on a different grid");
  return sample(sampler, mask);
}

// Overwrite Boundary nodes and surface points with Dirichlet data g.
inline void set_boundary(ScalarField& f, const Sampler& g) {
  const auto& m = *f.mask;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (m.cls[i] == NodeClass::Boundary) f.values[i] = checked_sample(g, m.grid.coord(i), m.grid.dim);
  for (std::size_t k = 0; k < m.surface.size(); ++k) f.surface[k] = checked_sample(g, m.surface[k], m.grid.dim);
}

// Static-chunk parallel loop; each index is handled by exactly one worker.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  if (workers <= 1 || n < 2048) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t b = n * t / w, e = n * (t + 1) / w;
    pool.emplace_back([&fn, b, e] {
      for (std::size_t i = b; i < e; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ilab
