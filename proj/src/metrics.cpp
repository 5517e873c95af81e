#include "tristream/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tristream {

namespace {

void require_aligned(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) throw std::invalid_argument("empty node set");
  if (a.size() != b.size()) throw std::invalid_argument("truth and estimate lengths differ");
}

struct Aligned {
  std::vector<double> truth;
  std::vector<double> est;
};

Aligned align(const CountMap& truth, const EstimateMap& est) {
  Aligned out;
  out.truth.reserve(truth.size());
  out.est.reserve(truth.size());
  for (const auto& [u, x] : truth) {
    out.truth.push_back(static_cast<double>(x));
    auto it = est.find(u);
    out.est.push_back(it == est.end() ? 0.0 : it->second);
  }
  return out;
}

}  // namespace

double global_error(double truth, double est) {
  if (truth < 0.0) throw std::invalid_argument("true count must be non-negative");
  return std::abs(truth - est) / (1.0 + truth);
}

double local_error(std::span<const double> truth, std::span<const double> est) {
  require_aligned(truth, est);
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) sum += std::abs(truth[j] - est[j]) / (1.0 + truth[j]);
  return sum / static_cast<double>(truth.size());
}

double local_rmse(std::span<const double> truth, std::span<const double> est) {
  require_aligned(truth, est);
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double d = truth[j] - est[j];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t m = i; m < j; ++m) ranks[order[m]] = r;
    i = j;
  }
  return ranks;
}

Correlation rank_correlation(std::span<const double> truth, std::span<const double> est) {
  require_aligned(truth, est);
  if (truth.size() < 2) throw std::invalid_argument("rank correlation needs at least two nodes");
  const std::vector<double> rx = average_ranks(truth);
  const std::vector<double> ry = average_ranks(est);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < rx.size(); ++j) {
    const double dx = rx[j] - mx;
    const double dy = ry[j] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, false};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), true};
}

double local_error(const CountMap& truth, const EstimateMap& est) {
  const Aligned a = align(truth, est);
  return local_error(a.truth, a.est);
}

double local_rmse(const CountMap& truth, const EstimateMap& est) {
  const Aligned a = align(truth, est);
  return local_rmse(a.truth, a.est);
}

Correlation rank_correlation(const CountMap& truth, const EstimateMap& est) {
  const Aligned a = align(truth, est);
  return rank_correlation(a.truth, a.est);
}

AccuracyReport accuracy(std::uint64_t truth_global, const CountMap& truth_local, double est_global,
                        const EstimateMap& est_local) {
  const Aligned a = align(truth_local, est_local);
  AccuracyReport r;
  r.global_error = global_error(static_cast<double>(truth_global), est_global);
  r.local_error = local_error(a.truth, a.est);
  r.local_rmse = local_rmse(a.truth, a.est);
  if (a.truth.size() >= 2) r.rank_correlation = rank_correlation(a.truth, a.est);
  return r;
}

TrialStats trial_stats(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("need at least two samples");
  const double n = static_cast<double>(samples.size());
  TrialStats s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / (n - 1.0);
  s.std_error = std::sqrt(s.variance / n);
  return s;
}

double variance_std_error(std::span<const double> samples) {
  if (samples.size() < 4) throw std::invalid_argument("need at least four samples");
  const TrialStats s = trial_stats(samples);
  const double n = static_cast<double>(samples.size());
  double m4 = 0.0;
  for (double x : samples) {
    const double d = (x - s.mean) * (x - s.mean);
    m4 += d * d;
  }
  m4 /= n;
  const double v2 = s.variance * s.variance;
  const double var_of_var = (m4 - v2 * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(0.0, var_of_var));
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need two or more matched points");
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] > 0.0) || !(y[j] > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
    lx.push_back(std::log(x[j]));
    ly.push_back(std::log(y[j]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t j = 0; j < lx.size(); ++j) {
    sxy += (lx[j] - mx) * (ly[j] - my);
    sxx += (lx[j] - mx) * (lx[j] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("log-log fit needs distinct x values");
  return sxy / sxx;
}

}  // namespace tristream
