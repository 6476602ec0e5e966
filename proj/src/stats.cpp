#include "fimlab/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "fimlab/errors.hpp"

namespace fimlab {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw Error("mean: empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) throw Error("sample_variance: need at least 2 points");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double standard_error(const std::vector<double>& x) {
  return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

PairedTTest paired_t_test(const std::vector<double>& diffs) {
  PairedTTest out;
  out.n = static_cast<int>(diffs.size());
  out.mean_diff = mean(diffs);
  const double var = sample_variance(diffs);
  if (var <= 0.0) {
    out.degenerate = true;
    out.se_diff = 0.0;
    out.t_stat = 0.0;
    out.p_greater = out.p_less = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.degenerate = false;
  out.se_diff = std::sqrt(var / out.n);
  out.t_stat = out.mean_diff / out.se_diff;
  boost::math::students_t dist(out.n - 1);
  // p_greater: P(mean diff > 0 arose by chance), i.e. upper tail.
  out.p_greater = boost::math::cdf(boost::math::complement(dist, out.t_stat));
  out.p_less = boost::math::cdf(dist, out.t_stat);
  return out;
}

}  // namespace fimlab
