#pragma once

#include <cmath>

#include "dualmatch/types.hpp"

namespace dualmatch {

// Step-size schedule for the multiplicative dual updates: either a
// fixed eta or the time-varying eta_t = k / sqrt(t).
struct EtaSchedule {
  enum class Kind { kFixed, kInverseSqrt } kind = Kind::kFixed;
  double value = 0.0;  // eta when fixed, k when time-varying

  static EtaSchedule fixed(double eta) { return {Kind::kFixed, eta}; }
  static EtaSchedule inverse_sqrt(double k) { return {Kind::kInverseSqrt, k}; }

  double at(int t) const {
    return kind == Kind::kFixed ? value : value / std::sqrt(static_cast<double>(t));
  }
};

// Learned dual variables for the static resources, shared by the
// base and generalized algorithms. theta lives in [0, alpha], lambda
// in [0, (1+2*alpha)/min rho]; both start at exp(-1).
struct DualState {
  Grid theta;
  Grid lambda;
  double zeta = 0.0;
  EtaSchedule eta;
  int t = 1;  // iteration counter for time-varying schedules
  double theta_cap = 0.0;
  double lambda_cap = 0.0;

  static DualState initial(const Instance& inst, EtaSchedule eta, double zeta) {
    DualState d;
    d.theta = Grid(inst.m, inst.l, std::exp(-1.0));
    d.lambda = Grid(inst.m, inst.l, std::exp(-1.0));
    d.zeta = zeta;
    d.eta = eta;
    d.theta_cap = inst.alpha;
    d.lambda_cap = inst.lambda_cap();
    return d;
  }

  // One multiplicative-weights step on resource (i,j) with gradient
  // component g = n*z - rho, then projection onto the box by the cap.
  void update_component(int i, int j, double gradient, double eta_t) {
    double f = std::exp(eta_t * gradient);
    double th = theta(i, j) * f;
    theta(i, j) = th < theta_cap ? th : theta_cap;
    double la = lambda(i, j) * f;
    lambda(i, j) = la < lambda_cap ? la : lambda_cap;
  }

  bool within_bounds(double tol = 0.0) const {
    for (int i = 0; i < theta.rows(); ++i) {
      for (int j = 0; j < theta.cols(); ++j) {
        if (theta(i, j) < -tol || theta(i, j) > theta_cap + tol) return false;
        if (lambda(i, j) < -tol || lambda(i, j) > lambda_cap + tol) return false;
      }
    }
    return true;
  }
};

}  // namespace dualmatch
