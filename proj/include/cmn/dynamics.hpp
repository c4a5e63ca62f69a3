#pragma once

#include "cmn/network.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cmn {

// Bounded smooth perturbation of sup-norm exactly `amplitude`:
// T~_k = T_k + amplitude * alpha_k and A~ = A + amplitude * beta, where every
// output coordinate of alpha_k and beta is sin(w . x + phase) with seeded
// frequencies and phases.
struct Perturbation {
  double amplitude = 0.0;
  std::uint64_t seed = 0;

  Vec alpha(int node, const Vec& x) const;
  Vec beta(const Vec& z) const;
};

Vec perturbed_local(const NetworkSpec& spec, int node, const Vec& x, const Perturbation* pert);

// One application of A~ o T~; the plain A o T when pert is null or has zero amplitude.
Vec step(const NetworkSpec& spec, const Vec& x, const Perturbation* pert = nullptr);

// Index of the h-set containing each node block; nullopt when some block is in none.
// Boundary hits within 1e-12 count as ties and resolve to the lower index.
std::optional<std::vector<int>> locate_hsets(const NetworkSpec& spec, const Vec& x, int* ties = nullptr);

// Flat symbol of a multi-index in the Kronecker product (W_1 outermost).
int flat_symbol(const NetworkSpec& spec, const std::vector<int>& multi);

struct Itinerary {
  std::vector<std::vector<int>> steps;  // one multi-index per visited state
  std::optional<int> escape_step;       // first step whose state lies outside every product h-set
  int ties = 0;

  std::vector<int> flat(const NetworkSpec& spec) const;
};

Itinerary itinerary(const NetworkSpec& spec, const Vec& x0, int n, const Perturbation* pert = nullptr);

struct PeriodicOrbitCertificate {
  Vec point;
  int period = 0;
  double residual = 0.0;
  std::vector<double> interior_margins;
  std::vector<Vec> orbit;
  std::vector<std::vector<int>> loop;
};

// Closed loop through the first symbols of permutation transition matrices.
std::vector<std::vector<int>> canonical_loop(const NetworkSpec& spec);

// Fixed point of the composed affine branches along `loop`; perturbed maps are
// refined from the affine solution.
PeriodicOrbitCertificate periodic_point(const NetworkSpec& spec, const std::vector<std::vector<int>>& loop,
                                        const Perturbation* pert = nullptr);

struct EntropyEstimate {
  double value = 0.0;
  std::size_t distinct_words = 0;
  std::size_t surviving = 0;
  std::size_t samples = 0;
  int ties = 0;
};

EntropyEstimate empirical_entropy_detail(const NetworkSpec& spec, int depth, std::size_t samples, std::uint64_t seed,
                                         const Perturbation* pert = nullptr);
double empirical_entropy(const NetworkSpec& spec, int depth, std::size_t samples, std::uint64_t seed);

// Deviation bounds and exact perturbed local maps for a perturbation.
DeviationModel deviation_of(const NetworkSpec& spec, const Perturbation& pert);

// Reruns the theorem check matching the spec's coupling type on the perturbed network.
TheoremReport recertify(const NetworkSpec& spec, const Perturbation& pert, const CheckOptions& opts = {});

}  // namespace cmn
