#pragma once

#include "tse/autodiff.hpp"
#include "tse/domain.hpp"
#include "tse/mlp.hpp"
#include "tse/physics.hpp"

namespace tse {

enum class ResidualKind { lwr3, arz, lwr_fdl };

struct LossWeights {
  double alpha = 100.0;
  double beta = 100.0;
  double gamma = 100.0;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
      throw std::invalid_argument("LossWeights: weights must be >= 0");
  }
};

struct PidlTerms {
  double total = 0.0;
  double data = 0.0;      // L_o
  double physics = 0.0;   // L_c
  double boundary = 0.0;  // L_b
};

/// Physics block of a training problem. For lwr3 the trainable lambda is
/// [delta, p, sigma, rho_max, log eps] (eps kept positive by training its
/// log); for arz it is [rho_max, u_max, tau]. For lwr_fdl the surrogate
/// weights are the physics side and are always trainable.
struct PhysicsSpec {
  ResidualKind kind = ResidualKind::lwr3;
  ThreeParamFD fd;
  GreenshieldsArzParams arz;
  Mlp surrogate;  // lwr_fdl only
  bool identify = false;

  size_t lambda_dim() const {
    switch (kind) {
      case ResidualKind::lwr3: return identify ? 5 : 0;
      case ResidualKind::arz: return identify ? 3 : 0;
      case ResidualKind::lwr_fdl: return surrogate.param_count();
    }
    return 0;
  }
  std::vector<double> lambda0() const;
  void load_lambda(std::span<const double> lambda);
};

/// Composite loss of Eq-12 shape: alpha*L_o + beta*L_c + gamma*L_b, where
/// L_o is the mean squared data misfit, L_c the mean squared residual over
/// collocation points, and L_b the mean squared periodic mismatch
/// |f(0,t)-f(L,t)|^2 over boundary times. Empty sets contribute zero.
///
/// The parameter vector is [theta | lambda]. value_and_grad runs the fused
/// kernel path; build_tape builds the same scalar on a tape and is used to
/// cross-check the fused gradients.
class DeterministicLoss final : public ad::LossFunction {
public:
  DeterministicLoss(const Mlp& net, PhysicsSpec phys, const ObservationSet& obs,
                    const CollocationSet& colloc,
                    const BoundaryCollocationSet& boundary, LossWeights weights);

  size_t dim() const override { return theta_dim_ + lambda_dim_; }
  size_t theta_dim() const { return theta_dim_; }
  size_t lambda_dim() const { return lambda_dim_; }

  std::vector<double> initial_params() const;

  double value(std::span<const double> params) override;
  double value_and_grad(std::span<const double> params,
                        std::span<double> grad) override;

  const PidlTerms& last_terms() const { return terms_; }

  /// Unpack a parameter vector into network + physics copies.
  void unpack(std::span<const double> params, Mlp& net, PhysicsSpec& phys) const;

  ad::Var build_tape(ad::Tape& tape, std::span<const ad::Var> params) const;

private:
  double evaluate(std::span<const double> params, std::span<double> grad,
                  bool with_grad);

  Mlp net_;           // structure template; params swapped in per call
  PhysicsSpec phys_;
  const ObservationSet& obs_;
  const CollocationSet& colloc_;
  const BoundaryCollocationSet& boundary_;
  LossWeights weights_;
  size_t theta_dim_;
  size_t lambda_dim_;
  PidlTerms terms_;
  QuadEval quad_;
  ValueEval val_left_, val_right_;
  QuadEval surr_quad_;
  std::vector<double> scratch_;
};

/// One-shot evaluation of the composite loss at the network's own
/// parameters (physics taken from `phys` as-is).
PidlTerms loss_deterministic(const Mlp& net, const PhysicsSpec& phys,
                             const ObservationSet& obs, const CollocationSet& colloc,
                             const BoundaryCollocationSet& boundary,
                             LossWeights weights);

}  // namespace tse
