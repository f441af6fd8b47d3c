#include <algorithm>
#include <bit>
#include <chrono>
#include <limits>

#include <fmt/format.h>

#include "signpred/error.hpp"
#include "signpred/qubo.hpp"
#include "signpred/random.hpp"

namespace signpred {

namespace {

// Dense symmetric copy of the pair coefficients, zero diagonal.
std::vector<double> dense_pairs(const QuboInstance& q) {
  const std::size_t m = q.size();
  std::vector<double> dense(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      dense[i * m + j] = dense[j * m + i] = q.quadratic(i, j);
  return dense;
}

Bits mask_to_bits(std::uint32_t mask, std::size_t m) {
  Bits bits(m, 0);
  for (std::size_t i = 0; i < m; ++i) bits[i] = (mask >> i) & 1u;
  return bits;
}

struct ExactBest {
  double tol;
  double objective = std::numeric_limits<double>::infinity();
  std::uint32_t mask = 0;

  void offer(double obj, std::uint32_t cand) {
    if (obj < objective - tol) {
      objective = obj;
      mask = cand;
      return;
    }
    if (obj > objective + tol) return;
    const int pc = std::popcount(cand), pb = std::popcount(mask);
    if (pc < pb || (pc == pb && cand < mask)) {
      objective = std::min(objective, obj);
      mask = cand;
    }
  }
};

}  // namespace

Assignment solve_exact(const QuboInstance& q) {
  const std::size_t m = q.size();
  if (m > kMaxExactVariables)
    throw ConfigError(fmt::format(
        "exact solver limited to {} variables (got {}); use the tabu solver",
        kMaxExactVariables, m));
  if (m == 0) return Assignment{{}, q.constant()};

  const auto pairs = dense_pairs(q);
  ExactBest best{1e-10 * std::max(1.0, q.magnitude())};

  // High bits are enumerated by counting with a fresh evaluation each time;
  // low bits by Gray code with incremental updates. Bounds rounding drift
  // to 2^low steps.
  const std::size_t low = std::min<std::size_t>(m, 12);
  const std::uint32_t high_count = 1u << (m - low);
  const std::uint32_t low_count = 1u << low;
  Bits bits(m, 0);
  std::vector<double> field(low);

  for (std::uint32_t hi = 0; hi < high_count; ++hi) {
    std::uint32_t mask = hi << low;
    for (std::size_t i = 0; i < m; ++i) bits[i] = (mask >> i) & 1u;
    double obj = evaluate_objective(q, bits);
    // field[i]: objective change from setting bit i (currently clear)
    for (std::size_t i = 0; i < low; ++i) {
      double f = q.linear(i);
      for (std::size_t j = low; j < m; ++j)
        if (bits[j]) f += pairs[i * m + j];
      field[i] = f;
    }
    best.offer(obj, mask);
    for (std::uint32_t step = 1; step < low_count; ++step) {
      const auto i = static_cast<std::size_t>(std::countr_zero(step));
      const double* row = &pairs[i * m];
      if (bits[i]) {
        obj -= field[i];
        bits[i] = 0;
        for (std::size_t j = 0; j < low; ++j) field[j] -= row[j];
      } else {
        obj += field[i];
        bits[i] = 1;
        for (std::size_t j = 0; j < low; ++j) field[j] += row[j];
      }
      mask ^= 1u << i;
      best.offer(obj, mask);
    }
  }

  Assignment out;
  out.bits = mask_to_bits(best.mask, m);
  out.objective = evaluate_objective(q, out.bits);
  return out;
}

Assignment solve_tabu(const QuboInstance& q, const TabuParams& params) {
  const std::size_t m = q.size();
  if (m == 0) return Assignment{{}, q.constant()};
  const std::size_t max_iterations =
      params.max_iterations > 0 ? params.max_iterations : 200 * m;
  // A tenure near m leaves almost no admissible move and the search cycles,
  // so the default is held to m/2 on small instances.
  const std::size_t tenure =
      params.tenure > 0
          ? params.tenure
          : std::min(std::max<std::size_t>(7, m / 4), std::max<std::size_t>(1, m / 2));
  const auto deadline = std::chrono::steady_clock::now() + params.time_limit;
  const double tol = 1e-12 * std::max(1.0, q.magnitude());

  const auto pairs = dense_pairs(q);
  Bits x(m, 0);
  std::vector<double> field(m);  // linear_i + sum_j Q_ij x_j
  for (std::size_t i = 0; i < m; ++i) field[i] = q.linear(i);
  std::vector<std::size_t> tabu_until(m, 0);
  double obj = q.constant();
  Bits best = x;
  double best_obj = obj;
  Rng rng(params.seed);

  bool budget_spent = false;
  for (std::size_t it = 1;; ++it) {
    if (!budget_spent) {
      budget_spent = it > max_iterations ||
                     (it % 16 == 0 && std::chrono::steady_clock::now() >= deadline);
    }

    std::size_t chosen = m;
    double chosen_delta = std::numeric_limits<double>::infinity();
    std::size_t ties = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double delta = x[i] ? -field[i] : field[i];
      const bool admissible =
          tabu_until[i] < it || obj + delta < best_obj - tol;
      if (!admissible) continue;
      if (delta < chosen_delta - tol) {
        chosen = i;
        chosen_delta = delta;
        ties = 1;
      } else if (delta <= chosen_delta + tol) {
        if (uniform_below(rng, ++ties) == 0) chosen = i;
      }
    }
    if (chosen == m) {
      // everything tabu: release the move whose tenure ends first
      chosen = static_cast<std::size_t>(
          std::min_element(tabu_until.begin(), tabu_until.end()) -
          tabu_until.begin());
      chosen_delta = x[chosen] ? -field[chosen] : field[chosen];
    }
    if (budget_spent && !(obj + chosen_delta < best_obj - tol)) break;

    const double* row = &pairs[chosen * m];
    const double dir = x[chosen] ? -1.0 : 1.0;
    x[chosen] ^= 1;
    for (std::size_t j = 0; j < m; ++j) field[j] += dir * row[j];
    obj += chosen_delta;
    tabu_until[chosen] = it + tenure;
    if (obj < best_obj - tol) {
      best_obj = obj;
      best = x;
    }
  }

  Assignment out{std::move(best), 0.0};
  out.objective = evaluate_objective(q, out.bits);
  return out;
}

}  // namespace signpred
