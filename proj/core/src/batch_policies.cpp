#include "dualmatch/batch_policies.hpp"

#include <cmath>
#include <stdexcept>

#include "dualmatch/simplex.hpp"

namespace dualmatch {

namespace {

// Large uniform bonus added to every assignment so the LP matches as
// many free cases as capacity allows before comparing scores, the way
// ro-learning always matches to an actual affiliate.
constexpr double kMatchBonus = 1e6;

// Free-case room left at affiliate i under the hard constraint.
double free_room(const Instance& inst, const PathState& state, int i, double tied_in_batch) {
  double room = inst.capacity(i, 0) - state.cum_tied_consumed(i, 0) - tied_in_batch;
  if (room < 0.0) room = 0.0;
  room -= state.cum_free_consumed(i, 0);
  return room < 0.0 ? 0.0 : room;
}

struct BatchLayout {
  std::vector<int> free_index;            // positions of free cases in the batch
  std::vector<double> tied_in_batch;      // per affiliate
  std::vector<std::vector<int>> zcol;     // per free case, per affiliate
};

}  // namespace

std::vector<Decision> RoLearningBatchPolicy::decide_batch(
    const Instance& inst, const PathState& state, const std::vector<ArrivalType>& batch) {
  if (inst.l != 1) throw std::invalid_argument("batched policies support the base model only");
  const int m = inst.m;
  const int B = static_cast<int>(batch.size());

  std::vector<Decision> decisions(B);
  BatchLayout lay;
  lay.tied_in_batch.assign(m, 0.0);
  for (int r = 0; r < B; ++r) {
    if (batch[r].tied()) {
      decisions[r] = Decision::match(batch[r].target);
      lay.tied_in_batch[batch[r].target - 1] += 1.0;
    } else {
      lay.free_index.push_back(r);
    }
  }

  if (!lay.free_index.empty()) {
    LpProblem lp;
    for (int r : lay.free_index) {
      std::vector<int> cols(m);
      for (int i = 0; i < m; ++i) {
        double adj = duals_.theta(i, 0) + duals_.lambda(i, 0) +
                     (r == 0 ? zeta_ * state.backlog(i, 0) : 0.0);
        cols[i] = lp.add_var(batch[r].reward[i] - adj + kMatchBonus);
      }
      lay.zcol.push_back(std::move(cols));
    }
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> terms;
      for (const auto& cols : lay.zcol) terms.emplace_back(cols[i], 1.0);
      lp.add_row(std::move(terms), free_room(inst, state, i, lay.tied_in_batch[i]));
    }
    for (const auto& cols : lay.zcol) {
      std::vector<std::pair<int, double>> terms;
      for (int i = 0; i < m; ++i) terms.emplace_back(cols[i], 1.0);
      lp.add_row(std::move(terms), 1.0);
    }
    LpSolution sol = solve_lp(lp);
    if (!sol.optimal) throw std::runtime_error("batch program failed: " + sol.error);

    std::vector<double> used(m, 0.0);
    for (size_t k = 0; k < lay.free_index.size(); ++k) {
      int best = -1;
      double best_z = 0.5;
      for (int i = 0; i < m; ++i) {
        double z = sol.x[lay.zcol[k][i]];
        if (z > best_z &&
            used[i] + 1.0 <= free_room(inst, state, i, lay.tied_in_batch[i]) + 1e-9) {
          best_z = z;
          best = i;
        }
      }
      if (best >= 0) {
        decisions[lay.free_index[k]] = Decision::match(best + 1);
        used[best] += 1.0;
      } else {
        decisions[lay.free_index[k]] = Decision::none();
      }
    }
  }

  // one batched multiplicative update from the realized decisions
  double eta_t = duals_.eta.at(duals_.t);
  for (int i = 0; i < m; ++i) {
    double g = 0.0;
    for (int r = 0; r < B; ++r) g += decisions[r].z(i + 1) - inst.rho(i, 0);
    duals_.update_component(i, 0, g, eta_t);
  }
  ++duals_.t;
  return decisions;
}

BatchInnerSolution solve_batch_iterate_inner(const Instance& inst, const PathState& state,
                                             const std::vector<ArrivalType>& batch,
                                             const DualState& duals, double zeta) {
  const int m = inst.m;
  const int B = static_cast<int>(batch.size());

  std::vector<int> free_index;
  std::vector<double> tied_in_batch(m, 0.0);
  for (int r = 0; r < B; ++r) {
    if (batch[r].tied())
      tied_in_batch[batch[r].target - 1] += 1.0;
    else
      free_index.push_back(r);
  }
  std::vector<int> free_pos(B, -1);
  for (size_t k = 0; k < free_index.size(); ++k) free_pos[free_index[k]] = static_cast<int>(k);

  // Adjusted scores with the current duals; the backlog entering the
  // batch is charged on the first case only. The uniform bonus keeps
  // every case matched to an actual affiliate whenever capacity
  // permits, matching the rounding step's intent.
  LpProblem lp;
  std::vector<std::vector<int>> zcol(free_index.size());
  for (size_t k = 0; k < free_index.size(); ++k) {
    int r = free_index[k];
    zcol[k].resize(m);
    for (int i = 0; i < m; ++i) {
      double adj = duals.theta(i, 0) + duals.lambda(i, 0) +
                   (r == 0 ? zeta * state.backlog(i, 0) : 0.0);
      zcol[k][i] = lp.add_var(batch[r].reward[i] - adj + kMatchBonus);
    }
  }
  // Backlog induced within the batch under the deterministic service
  // flow; the chain starts empty -- the backlog carried into the
  // batch is already priced through the first-case score.
  std::vector<std::vector<int>> bcol(B, std::vector<int>(m));
  for (int r = 0; r < B; ++r)
    for (int i = 0; i < m; ++i) bcol[r][i] = lp.add_var(-inst.gamma / B);
  std::vector<int> ocol(m);
  for (int i = 0; i < m; ++i) ocol[i] = lp.add_var(-inst.alpha);

  for (int r = 0; r < B; ++r) {
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> terms;
      terms.emplace_back(bcol[r][i], -1.0);
      double rhs = inst.rho(i, 0);
      if (r > 0) terms.emplace_back(bcol[r - 1][i], 1.0);
      if (batch[r].tied()) {
        if (batch[r].target == i + 1) rhs -= 1.0;
      } else {
        terms.emplace_back(zcol[free_pos[r]][i], 1.0);
      }
      lp.add_row(std::move(terms), rhs);
    }
  }
  for (int i = 0; i < m; ++i) {
    double room = free_room(inst, state, i, tied_in_batch[i]);
    std::vector<std::pair<int, double>> cap_terms;
    for (const auto& cols : zcol) cap_terms.emplace_back(cols[i], 1.0);
    std::vector<std::pair<int, double>> over_terms = cap_terms;
    over_terms.emplace_back(ocol[i], -1.0);
    lp.add_row(std::move(cap_terms), room);
    lp.add_row(std::move(over_terms), state.remaining(i, 0) - tied_in_batch[i]);
  }
  for (const auto& cols : zcol) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < m; ++i) terms.emplace_back(cols[i], 1.0);
    lp.add_row(std::move(terms), 1.0);
  }

  LpSolution sol = solve_lp(lp);
  if (!sol.optimal) {
    throw std::runtime_error("batch-iterate inner program failed (batch at t=" +
                             std::to_string(state.t + 1) + "): " + sol.error);
  }
  BatchInnerSolution inner;
  inner.z.assign(free_index.size(), std::vector<double>(m, 0.0));
  for (size_t k = 0; k < free_index.size(); ++k)
    for (int i = 0; i < m; ++i) inner.z[k][i] = sol.x[zcol[k][i]];
  inner.backlog.assign(B, std::vector<double>(m, 0.0));
  for (int r = 0; r < B; ++r)
    for (int i = 0; i < m; ++i) inner.backlog[r][i] = sol.x[bcol[r][i]];
  return inner;
}

std::vector<Decision> RoLearningBatchIteratePolicy::decide_batch(
    const Instance& inst, const PathState& state, const std::vector<ArrivalType>& batch) {
  if (inst.l != 1) throw std::invalid_argument("batched policies support the base model only");
  const int m = inst.m;
  const int B = static_cast<int>(batch.size());

  std::vector<Decision> decisions(B);
  std::vector<int> free_index;
  std::vector<double> tied_in_batch(m, 0.0);
  for (int r = 0; r < B; ++r) {
    if (batch[r].tied()) {
      decisions[r] = Decision::match(batch[r].target);
      tied_in_batch[batch[r].target - 1] += 1.0;
    } else {
      free_index.push_back(r);
    }
  }

  std::vector<double> last_iterate(free_index.size() * m, 0.0);
  const double eta_step = duals_.eta.at(duals_.t) / iterations_;

  for (int iter = 0; iter < iterations_; ++iter) {
    BatchInnerSolution inner = solve_batch_iterate_inner(inst, state, batch, duals_, zeta_);
    for (size_t k = 0; k < free_index.size(); ++k)
      for (int i = 0; i < m; ++i) last_iterate[k * m + i] = inner.z[k][i];

    // Dual phase with step eta/L on the fractional iterate.
    for (int i = 0; i < m; ++i) {
      double g = 0.0;
      size_t k = 0;
      for (int r = 0; r < B; ++r) {
        if (batch[r].tied()) {
          g += (batch[r].target == i + 1 ? 1.0 : 0.0) - inst.rho(i, 0);
        } else {
          g += inner.z[k][i] - inst.rho(i, 0);
          ++k;
        }
      }
      duals_.update_component(i, 0, g, eta_step);
    }
  }
  ++duals_.t;

  // Round the last iterate: each free case goes to its largest
  // fractional coordinate among affiliates that still have room,
  // lowest index on ties.
  std::vector<double> used(m, 0.0);
  for (size_t k = 0; k < free_index.size(); ++k) {
    int best = -1;
    double best_z = -1.0;
    for (int i = 0; i < m; ++i) {
      if (used[i] + 1.0 > free_room(inst, state, i, tied_in_batch[i]) + 1e-9) continue;
      double z = last_iterate[k * m + i];
      if (z > best_z + 1e-12) {
        best_z = z;
        best = i;
      }
    }
    if (best >= 0) {
      decisions[free_index[k]] = Decision::match(best + 1);
      used[best] += 1.0;
    } else {
      decisions[free_index[k]] = Decision::none();
    }
  }
  return decisions;
}

}  // namespace dualmatch
