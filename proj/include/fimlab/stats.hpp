#pragma once

#include <limits>
#include <vector>

namespace fimlab {

double mean(const std::vector<double>& x);
double sample_variance(const std::vector<double>& x);  // unbiased
double standard_error(const std::vector<double>& x);

struct PairedTTest {
  int n = 0;
  double mean_diff = 0.0;
  double se_diff = 0.0;
  double t_stat = 0.0;
  double p_greater = 0.0;  // one-sided, H1: mean > 0
  double p_less = 0.0;     // one-sided, H1: mean < 0
  bool degenerate = false; // all differences identical
};

PairedTTest paired_t_test(const std::vector<double>& diffs);

}  // namespace fimlab
