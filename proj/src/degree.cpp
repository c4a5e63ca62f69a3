#include "cmn/degree.hpp"

#include <cmath>
#include <sstream>

namespace cmn {

std::string_view to_string(DegreeMethod m) {
  switch (m) {
    case DegreeMethod::AffineDeterminant: return "affine-determinant";
    case DegreeMethod::OneDCrossing: return "one-d-crossing";
    case DegreeMethod::Product: return "product";
    case DegreeMethod::Composition: return "composition";
  }
  return "unknown";
}

namespace {

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

DegreeValue degree_affine(const Mat& linear, const Vec& offset, const Vec& q) {
  const auto n = linear.rows();
  if (linear.cols() != n || offset.size() != n || q.size() != n) throw DimensionError("degree_affine: dimensions");
  const double det = linear.determinant();
  if (!(std::abs(det) >= tol::kSingularDet)) throw Error("degree_affine: singular linear part");
  const Vec pre = linear.fullPivLu().solve(q - offset);
  const double r = inf_norm(pre);
  if (std::abs(r - 1.0) <= tol::kBoundary) throw BoundaryDegreeError("degree_affine: target lies on the image of the boundary");
  return {r < 1.0 ? sign(det) : 0, DegreeMethod::AffineDeterminant};
}

DegreeValue degree_1d(const PiecewiseAffineMap& u, double q) {
  if (u.dim_in() != 1 || u.dim_out() != 1) throw DimensionError("degree_1d: map must be R -> R");
  const double left = u(-1.0) - q;
  const double right = u(1.0) - q;
  const double scale = std::max(1.0, std::abs(q));
  if (std::abs(left) <= tol::kBoundary * scale || std::abs(right) <= tol::kBoundary * scale) {
    std::ostringstream msg;
    msg << "degree_1d: target " << q << " equals a boundary value";
    throw BoundaryDegreeError(msg.str());
  }
  return {(sign(right) - sign(left)) / 2, DegreeMethod::OneDCrossing};
}

DegreeValue degree_product(std::span<const DegreeValue> parts) {
  int v = 1;
  for (const auto& p : parts) v *= p.value;
  return {v, DegreeMethod::Product};
}

DegreeValue degree_compose_affine(const Mat& psi_linear, const DegreeValue& inner) {
  if (psi_linear.rows() != psi_linear.cols()) throw DimensionError("degree_compose_affine: square matrix required");
  const double det = psi_linear.determinant();
  if (!(std::abs(det) >= tol::kSingularDet)) throw Error("degree_compose_affine: singular outer map");
  return {sign(det) * inner.value, DegreeMethod::Composition};
}

std::optional<DegreeValue> degree_of(const PiecewiseAffineMap& f, const Vec& q) {
  if (f.dim_in() != f.dim_out() || q.size() != f.dim_out()) throw DimensionError("degree: dimensions");
  if (f.dim_in() == 1) return degree_1d(f, q(0));
  if (f.is_affine()) {
    const auto& p = f.cells().front().piece;
    return degree_affine(p.linear, p.offset, q);
  }
  return std::nullopt;
}

}  // namespace cmn
