#pragma once

#include <vector>

namespace phasecrit {

// Ising model without field at Delta = 3 (d = 2), for 0 < B < 3 - 2 sqrt 2. The ratios
// r1 = R(--)/R(-+), r4 = R(++)/R(-+) and c1, c4 (columns) come from the 4x4 pair scaling
// problem at (alpha, beta) = (p+, p-) for every overlap pair (gamma, delta) on a grid.
struct IsingBiasReport {
  double b = 0;
  double alpha = 0, beta = 0;
  double odds = 0;           // alpha / (1 - alpha)
  double odds_mirror = 0;    // (1 - beta) / beta, equal to odds by symmetry
  double odds_bound = 0;     // (4/9) B^-3
  bool odds_ok = false;
  int points = 0;
  double min_r1 = 0, min_c4 = 0;  // over the whole grid
  double weak_bound = 0;          // (1/3) B^-2
  bool weak_ok = false;
  int points_above = 0;           // grid points with r1 r4 > 1 and c1 c4 > 1
  double min_r1_above = 0, min_c4_above = 0;
  double strong_bound = 0;        // (4/9) B^-2
  bool strong_ok = false;
  // min over the grid of (B r1 + B^2 + 1 + B r4)^2 - (1-B^2)^2 (r1 r4 - 1)/(sqrt(r1 r4) - 1),
  // and the same with c; positive means the strict inequality holds everywhere.
  double min_margin = 0;
  bool margin_ok = false;
  bool pass = false;
};

IsingBiasReport ising_bias_check(double b, int grid = 21);
std::vector<IsingBiasReport> ising_bias_sweep(double b_min, double b_max, int count, int grid = 21);

}  // namespace phasecrit
