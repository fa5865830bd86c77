#include "bilevel/feasible_set.hpp"

#include <cmath>
#include <limits>

namespace bilevel {

std::string to_string(ConvexityClass c) {
  switch (c) {
    case ConvexityClass::strongly_convex:
      return "strongly_convex";
    case ConvexityClass::convex:
      return "convex";
    case ConvexityClass::nonconvex:
      return "nonconvex";
  }
  return "unknown";
}

ConvexityClass convexity_from_string(const std::string& s) {
  if (s == "strongly_convex") return ConvexityClass::strongly_convex;
  if (s == "convex") return ConvexityClass::convex;
  if (s == "nonconvex") return ConvexityClass::nonconvex;
  throw ConfigError("unknown convexity class '" + s + "'");
}

FeasibleSet FeasibleSet::all_space() { return FeasibleSet{}; }

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw ConfigError("box bounds must be nonempty and of equal dimension");
  }
  if ((lower.array() > upper.array()).any()) {
    throw ConfigError("box requires lower <= upper componentwise");
  }
  FeasibleSet s;
  s.shape_ = Box{std::move(lower), std::move(upper)};
  return s;
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("ball radius must be positive and finite");
  }
  FeasibleSet s;
  s.shape_ = Ball{std::move(center), radius};
  return s;
}

FeasibleSet::Kind FeasibleSet::kind() const {
  switch (shape_.index()) {
    case 1:
      return Kind::box;
    case 2:
      return Kind::ball;
    default:
      return Kind::all_space;
  }
}

Vector FeasibleSet::project(const Vector& p) const {
  switch (kind()) {
    case Kind::all_space:
      return p;
    case Kind::box: {
      const Box& b = as_box();
      return p.cwiseMax(b.lower).cwiseMin(b.upper);
    }
    case Kind::ball: {
      const Ball& b = as_ball();
      const Vector d = p - b.center;
      const double r = d.norm();
      if (r <= b.radius) return p;
      return b.center + (b.radius / r) * d;
    }
  }
  return p;
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  switch (kind()) {
    case Kind::all_space:
      return true;
    case Kind::box: {
      const Box& b = as_box();
      return ((x - b.lower).array() >= -tol).all() && ((b.upper - x).array() >= -tol).all();
    }
    case Kind::ball: {
      const Ball& b = as_ball();
      return (x - b.center).norm() <= b.radius + tol;
    }
  }
  return false;
}

double FeasibleSet::diameter() const {
  switch (kind()) {
    case Kind::all_space:
      return std::numeric_limits<double>::infinity();
    case Kind::box:
      return (as_box().upper - as_box().lower).norm();
    case Kind::ball:
      return 2.0 * as_ball().radius;
  }
  return 0.0;
}

std::vector<Vector> FeasibleSet::box_vertices() const {
  std::vector<Vector> out;
  if (kind() != Kind::box) return out;
  const Box& b = as_box();
  const auto n = static_cast<int>(b.lower.size());
  if (n > 20) return out;
  const std::size_t count = std::size_t{1} << n;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1U ? b.upper[i] : b.lower[i];
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace bilevel
