#pragma once

#include <filesystem>
#include <fstream>
#include <cmath>
#include <iterator>
#include <vector>
#include <span>
#include <stdexcept>
#include <string>

#include "lf/metrics/metrics.hpp"

namespace test_support {

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
  return std::filesystem::exists(a) && std::filesystem::exists(b) && read_bytes(a) == read_bytes(b);
}

// All-pairs Mann-Whitney AUC, ties worth half. O(n^2) on purpose.
inline double brute_force_auc(std::span<const lf::metrics::Impression> set) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& p : set) {
    if (p.label != 1) continue;
    for (const auto& n : set) {
      if (n.label != 0) continue;
      pairs += 1.0;
      if (p.score > n.score) wins += 1.0;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  if (pairs == 0.0) throw std::invalid_argument("brute_force_auc: single-class set");
  return wins / pairs;
}

// Ridge-regularised logistic regression fitted by Newton steps on the train
// rows and scored on the test rows. Rows hold features only; the intercept
// is added here. Returns the held-out AUC.
inline double logistic_probe_auc(const std::vector<std::vector<double>>& train_x, const std::vector<int>& train_y,
                                 const std::vector<std::vector<double>>& test_x, const std::vector<int>& test_y) {
  const std::size_t d = train_x.front().size() + 1;
  auto row = [](const std::vector<double>& x) {
    std::vector<double> r = {1.0};
    r.insert(r.end(), x.begin(), x.end());
    return r;
  };
  std::vector<double> w(d, 0.0);
  for (int iter = 0; iter < 25; ++iter) {
    std::vector<double> g(d, 0.0);
    std::vector<std::vector<double>> h(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < train_x.size(); ++i) {
      const auto x = row(train_x[i]);
      double z = 0.0;
      for (std::size_t k = 0; k < d; ++k) z += w[k] * x[k];
      const double p = 1.0 / (1.0 + std::exp(-z));
      for (std::size_t a = 0; a < d; ++a) {
        g[a] += (p - train_y[i]) * x[a];
        for (std::size_t b = 0; b < d; ++b) h[a][b] += p * (1.0 - p) * x[a] * x[b];
      }
    }
    for (std::size_t a = 0; a < d; ++a) {
      g[a] += 1e-3 * w[a];
      h[a][a] += 1e-3;
    }
    // Solve h * step = g by Gaussian elimination with partial pivoting.
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < d; ++r)
        if (std::abs(h[r][c]) > std::abs(h[piv][c])) piv = r;
      std::swap(h[c], h[piv]);
      std::swap(g[c], g[piv]);
      for (std::size_t r = c + 1; r < d; ++r) {
        const double f = h[r][c] / h[c][c];
        for (std::size_t k = c; k < d; ++k) h[r][k] -= f * h[c][k];
        g[r] -= f * g[c];
      }
    }
    std::vector<double> step(d, 0.0);
    for (std::size_t c = d; c-- > 0;) {
      double v = g[c];
      for (std::size_t k = c + 1; k < d; ++k) v -= h[c][k] * step[k];
      step[c] = v / h[c][c];
    }
    for (std::size_t k = 0; k < d; ++k) w[k] -= step[k];
  }
  std::vector<lf::metrics::Impression> scored;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    const auto x = row(test_x[i]);
    double z = 0.0;
    for (std::size_t k = 0; k < d; ++k) z += w[k] * x[k];
    scored.push_back({0, z, test_y[i], 1.0});
  }
  return brute_force_auc(scored);
}

}  // namespace test_support
