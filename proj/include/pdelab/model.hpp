#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "pdelab/radial.hpp"
#include "pdelab/rng.hpp"
#include "pdelab/vec.hpp"

namespace pdelab {

/// Sampling model for (X, U, Y): a spherical density on R^{2d+k} centred at
/// (theta, 0, c*theta) with inverse squared scale eta,
///   eta^{d+k/2} f(eta (||x - theta||^2 + ||u||^2 + ||y - c theta||^2)).
struct ModelSpec {
  int d = 1;
  int k = 1;
  double c = 1.0;
  Vec theta{0.0};
  double eta = 1.0;
  RadialFamily radial = NormalRadial{};
};

/// Throws InvalidArgument when a field violates the model invariants.
void validate(const ModelSpec& spec);

/// Copy of `spec` with theta replaced by `norm` times the first basis vector.
ModelSpec with_theta_norm(ModelSpec spec, double norm);

struct SampleTriple {
  Vec x;
  Vec u;
  Vec y;
};

/// A validated model with its normalizing constants precomputed. Immutable
/// after construction and safe to share between threads.
class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  int d() const { return spec_.d; }
  int k() const { return spec_.k; }
  double c() const { return spec_.c; }
  double eta() const { return spec_.eta; }
  int total_dim() const { return 2 * spec_.d + spec_.k; }

  const RadialDensity& joint_radial() const { return *joint_; }

  /// Normalized log radial profile of the (X, U) marginal on R^{d+k} at eta = 1.
  double log_marginal_radial(double t) const;

  double joint_log_density(ConstSpan x, ConstSpan u, ConstSpan y) const;
  double marginal_log_density(ConstSpan x, ConstSpan u) const;
  /// log q(y | x, u): joint over the (x, u) marginal.
  double conditional_log_density(ConstSpan x, ConstSpan u, ConstSpan y) const;

  /// Mixing variance Z of one replicate (1 for the normal family).
  double draw_mixing(Rng& rng) const { return joint_->draw_mixing(rng); }

  /// Draws one replicate into preallocated storage.
  void sample_into(Rng& rng, SampleTriple& out) const;
  SampleTriple make_buffer() const;

 private:
  ModelSpec spec_;
  std::shared_ptr<const RadialDensity> joint_;
  std::shared_ptr<const RadialDensity> marginal_;  // null for numeric profiles
};

std::vector<SampleTriple> sample_triples(const ModelSpec& spec, std::size_t n, RngStream stream);

/// Draws of the mixing variance Z; rejects numeric profiles.
std::vector<double> sample_mixing(const ModelSpec& spec, std::size_t n, RngStream stream);

double joint_density(const ModelSpec& spec, const SampleTriple& t);

}  // namespace pdelab
