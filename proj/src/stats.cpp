#include "winofi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace winofi {

Interval wilson_ci(uint64_t correct, uint64_t total, double z) {
  if (total == 0) return {0.0, 1.0};
  double n = static_cast<double>(total);
  double p = static_cast<double>(correct) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  double lo = std::max(0.0, center - half);
  double hi = std::min(1.0, center + half);
  return {lo, hi};
}

namespace {
std::vector<double> ranks_of(std::span<const double> v) {
  size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  size_t n = a.size();
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double num = 0, da = 0, db = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}
}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  std::vector<double> ra = ranks_of(a), rb = ranks_of(b);
  return pearson(ra, rb);
}

namespace {
// Regularized incomplete gamma, series and continued-fraction forms.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a, term = sum, ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}
}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi2_p_value(double chi2, int dof) {
  if (dof <= 0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * chi2);
}

double chi2_two_sample_p(std::span<const uint64_t> counts_a,
                         std::span<const uint64_t> counts_b) {
  size_t nb = std::min(counts_a.size(), counts_b.size());
  // Pool sparse tail buckets so every cell has a usable expected count.
  std::vector<std::pair<double, double>> cells;
  double pa = 0, pb = 0;
  for (size_t i = 0; i < nb; ++i) {
    pa += static_cast<double>(counts_a[i]);
    pb += static_cast<double>(counts_b[i]);
    if (pa + pb >= 10.0) {
      cells.emplace_back(pa, pb);
      pa = pb = 0;
    }
  }
  if (pa + pb > 0) {
    if (!cells.empty()) {
      cells.back().first += pa;
      cells.back().second += pb;
    } else {
      cells.emplace_back(pa, pb);
    }
  }
  if (cells.size() < 2) return 1.0;
  double na = 0, nbtot = 0;
  for (auto& [x, y] : cells) {
    na += x;
    nbtot += y;
  }
  if (na == 0 || nbtot == 0) return 1.0;
  double chi2 = 0.0;
  for (auto& [x, y] : cells) {
    double tot = x + y;
    double ea = tot * na / (na + nbtot);
    double eb = tot * nbtot / (na + nbtot);
    if (ea > 0) chi2 += (x - ea) * (x - ea) / ea;
    if (eb > 0) chi2 += (y - eb) * (y - eb) / eb;
  }
  return chi2_p_value(chi2, static_cast<int>(cells.size()) - 1);
}

}  // namespace winofi
