#include "dsqn/sampling.hpp"

#include <numeric>

namespace dsqn {

double non_sampling_rate(const std::vector<int>& m, const std::vector<int>& b) {
  if (m.empty() || m.size() != b.size()) throw std::invalid_argument("non_sampling_rate: list sizes disagree");
  double rate = 0.0;
  for (size_t i = 0; i < m.size(); ++i) {
    if (b[i] < 1 || b[i] > m[i]) throw std::invalid_argument("non_sampling_rate: need 1 <= b_i <= m_i");
    if (b[i] == m[i]) continue;  // full batch contributes exactly zero
    if (m[i] < 2) throw std::invalid_argument("non_sampling_rate: m_i >= 2 required when b_i < m_i");
    const double term = static_cast<double>(m[i] - b[i]) / (static_cast<double>(m[i] - 1) * b[i]);
    rate = std::max(rate, term);
  }
  return rate;
}

std::vector<int> draw_batch(Rng& rng, int m, int b) {
  if (b < 1 || b > m) throw std::invalid_argument("draw_batch: need 1 <= b <= m");
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (int t = 0; t < b; ++t) {
    const int j = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - t)));
    std::swap(idx[t], idx[j]);
  }
  idx.resize(b);
  return idx;
}

}  // namespace dsqn
