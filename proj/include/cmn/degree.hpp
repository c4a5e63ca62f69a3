#pragma once

#include "cmn/geometry.hpp"

#include <span>
#include <string_view>

namespace cmn {

enum class DegreeMethod { AffineDeterminant, OneDCrossing, Product, Composition };

std::string_view to_string(DegreeMethod m);

// Local Brouwer degree of a map on the open unit ball at a target point.
struct DegreeValue {
  int value = 0;
  DegreeMethod method = DegreeMethod::AffineDeterminant;
};

// The target lies on the image of the boundary, where the degree is undefined.
class BoundaryDegreeError : public Error {
 public:
  using Error::Error;
};

// deg(x -> Lx + b, B^u, q): sgn det L when the preimage of q is inside the ball.
DegreeValue degree_affine(const Mat& linear, const Vec& offset, const Vec& q);

// deg(U, B^1, q) = (sgn(U(1) - q) - sgn(U(-1) - q)) / 2.
DegreeValue degree_1d(const PiecewiseAffineMap& u, double q);

DegreeValue degree_product(std::span<const DegreeValue> parts);

// deg(psi o phi) for a nonsingular affine psi whose preimage of the target
// lies in the component the inner degree was computed for.
DegreeValue degree_compose_affine(const Mat& psi_linear, const DegreeValue& inner);

// Dispatches to degree_1d or degree_affine; nullopt for the map classes the
// library cannot compute a degree for (non-affine, dimension >= 2).
std::optional<DegreeValue> degree_of(const PiecewiseAffineMap& f, const Vec& q);

}  // namespace cmn
