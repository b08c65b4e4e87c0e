#pragma once

#include "igac/cli_io.hpp"

#include <gtest/gtest.h>

namespace igac::test {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline std::vector<double> grid_values(const std::vector<double>& v, size_t stride) {
  std::vector<double> out;
  for (size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
  return out;
}

// seeded random parameter point for a product model
inline Vector random_theta(const StatModel& m, CounterRng& rng) {
  Vector th = m.theta();
  for (int a = 0; a < th.size(); ++a) th(a) = m.scale_mask()[a] ? rng.uniform(0.5, 3.0) : rng.uniform(-2.0, 2.0);
  return th;
}

inline StatModel random_product(CounterRng& rng) {
  std::vector<StatModel> parts;
  int n = 1 + static_cast<int>(rng.uniform(0, 2.999));
  for (int i = 0; i < n; ++i) {
    int k = static_cast<int>(rng.uniform(0, 3.999));
    if (k == 0) parts.push_back(StatModel::gaussian_diag(0, 1));
    if (k == 1) parts.push_back(StatModel::exponential(1));
    if (k == 2) parts.push_back(StatModel::wigner_dyson(1));
    if (k == 3) parts.push_back(StatModel::gaussian_bivariate_corr(0, 0, 1, rng.uniform(-0.8, 0.8)));
  }
  StatModel m = parts.size() == 1 ? parts[0] : StatModel::product(parts);
  return m.with_theta(random_theta(m, rng));
}

}  // namespace igac::test
