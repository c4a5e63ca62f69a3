#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Numerical thresholds shared by every module.
namespace tol {
inline constexpr double kSingularDet = 1e-10;   // |det| below this rejects a chart or coupling
inline constexpr double kContinuity = 1e-9;     // adjacent affine pieces must agree this closely
inline constexpr double kStrictMargin = 1e-12;  // a certificate inequality needs at least this slack
inline constexpr double kBoundary = 1e-12;      // h-set membership / boundary ties
inline constexpr double kConjugacy = 1e-9;      // conjugacy and chart-form audits
inline constexpr double kResidual = 1e-10;      // periodic orbit residual
inline constexpr double kVertex = 1e-10;        // feasibility slack in vertex enumeration
}  // namespace tol

// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A hypothesis of the operation is not met by its input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

double inf_norm(const Vec& v);
// Operator norm induced by the max-norm: the largest absolute row sum.
double op_inf_norm(const Mat& m);

Vec concat(const Vec& a, const Vec& b);
Mat block_diag(const std::vector<Mat>& blocks);
Mat kron(const Mat& a, const Mat& b);

// Closed half-space {x : normal . x <= bound}.
struct Halfspace {
  Vec normal;
  double bound = 0.0;
};

using Polytope = std::vector<Halfspace>;

// Constraints |x_i| <= 1, i.e. the closed unit ball of the max-norm.
Polytope unit_box(int dim);
// Constraints lo_i <= x_i <= hi_i; infinite bounds are skipped.
Polytope box(const Vec& lo, const Vec& hi);
bool contains(const Polytope& p, const Vec& x, double slack = tol::kVertex);

// Vertices of the bounded polytope {x : a_i . x <= b_i} in R^dim, found by
// solving every dim-subset of active constraints. Intended for the small
// dimensions this library works in; throws when the subset count explodes.
std::vector<Vec> enumerate_vertices(const Polytope& p, int dim, double slack = tol::kVertex);

// min over the polytope of max_i |rows_i . x + shift_i|, solved exactly as a
// linear program by vertex enumeration in (x, t). Returns nullopt when the
// polytope is empty.
std::optional<double> min_abs_max(const Polytope& p, int dim, const Mat& rows, const Vec& shift);

}  // namespace cmn
