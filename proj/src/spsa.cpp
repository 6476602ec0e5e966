#include "fimlab/spsa.hpp"

#include <cmath>
#include <vector>

#include "fimlab/errors.hpp"
#include "fimlab/parallel.hpp"

namespace fimlab {

double GainSchedule::ak(int k) const { return a / std::pow(k + 2.0, 0.602); }
double GainSchedule::ck(int k) const { return c / std::pow(k + 1.0, 0.101); }

PerturbationDist::PerturbationDist(Kind kind, std::function<double(RngStream&)> sampler,
                                   double variance, double inv_sq_moment)
    : kind_(kind), sampler_(std::move(sampler)), variance_(variance),
      inv_sq_moment_(inv_sq_moment) {}

PerturbationDist PerturbationDist::bernoulli_pm1() {
  return PerturbationDist(Kind::bernoulli,
                          [](RngStream& rng) { return rng.bernoulli_pm1(); }, 1.0, 1.0);
}

double PerturbationDist::segmented_uniform_lo() { return (19.0 - 3.0 * std::sqrt(13.0)) / 20.0; }
double PerturbationDist::segmented_uniform_hi() { return (19.0 + 3.0 * std::sqrt(13.0)) / 20.0; }

PerturbationDist PerturbationDist::segmented_uniform() {
  const double lo = segmented_uniform_lo();
  const double hi = segmented_uniform_hi();
  auto sampler = [lo, hi](RngStream& rng) {
    double u = rng.uniform();
    double sign = 1.0;
    if (u < 0.5) {
      sign = -1.0;
      u = 2.0 * u;
    } else {
      u = 2.0 * (u - 0.5);
    }
    return sign * (lo + (hi - lo) * u);
  };
  return PerturbationDist(Kind::segmented_uniform, std::move(sampler), 1.0, 100.0 / 61.0);
}

PerturbationDist PerturbationDist::custom(std::function<double(RngStream&)> sampler,
                                          double variance, double inv_sq_moment) {
  if (!(variance > 0.0) || !(inv_sq_moment > 0.0)) {
    throw InvalidDistribution("custom perturbation: moments must be positive");
  }
  // Empirical check of the stated moments before accepting the sampler.
  RngStream rng(0x5eedcafeULL, 0x7e57ULL);
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0, sum_inv_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double d = sampler(rng);
    if (d == 0.0) throw InvalidDistribution("custom perturbation: sampled exact zero");
    sum += d;
    sum_sq += d * d;
    sum_inv_sq += 1.0 / (d * d);
  }
  const double m = sum / draws;
  const double v = sum_sq / draws - m * m;
  const double inv2 = sum_inv_sq / draws;
  if (std::abs(m) > 0.05 * std::sqrt(variance) ||
      std::abs(v - variance) > 0.05 * variance ||
      std::abs(inv2 - inv_sq_moment) > 0.05 * inv_sq_moment) {
    throw InvalidDistribution("custom perturbation: empirical moments disagree with stated ones");
  }
  return PerturbationDist(Kind::custom, std::move(sampler), variance, inv_sq_moment);
}

Vector sample_perturbation(const PerturbationDist& dist, int p, RngStream& rng) {
  if (p < 1) throw Error("sample_perturbation: need p >= 1");
  Vector delta(p);
  for (int j = 0; j < p; ++j) {
    delta(j) = dist.draw(rng);
    if (delta(j) == 0.0) {
      throw ZeroPerturbationComponent("sample_perturbation: zero component");
    }
  }
  return delta;
}

Vector sp_gradient(const NoisyLoss& y, const Vector& theta, double ck, const Vector& delta) {
  if (!(ck > 0.0)) throw Error("sp_gradient: step must be positive");
  if ((delta.array() == 0.0).any()) {
    throw ZeroPerturbationComponent("sp_gradient: zero perturbation component");
  }
  const double yp = y(theta + ck * delta);
  const double ym = y(theta - ck * delta);
  if (!std::isfinite(yp) || !std::isfinite(ym)) {
    throw NonFiniteEvaluation("sp_gradient: non-finite measurement");
  }
  return (yp - ym) / (2.0 * ck) * delta.cwiseInverse();
}

Vector spsa_run(const NoisyLoss& y, const Vector& theta0, const GainSchedule& gains,
                const PerturbationDist& dist, int iters, RngStream& rng) {
  Vector theta = theta0;
  for (int k = 0; k < iters; ++k) {
    const Vector delta = sample_perturbation(dist, static_cast<int>(theta.size()), rng);
    const Vector ghat = sp_gradient(y, theta, gains.ck(k), delta);
    theta -= gains.ak(k) * ghat;
  }
  return theta;
}

double theorem_a1_lhs(const Vector& grad_at_start, const Vector& theta0,
                      const Vector& theta_star, double sigma2,
                      double a0_su, double a0_b, double c0_su, double c0_b) {
  const int p = static_cast<int>(grad_at_start.size());
  if (theta0.size() != p || theta_star.size() != p) {
    throw Error("theorem_a1_lhs: size mismatch");
  }
  const double sum_l_sq = grad_at_start.squaredNorm();
  const double sum_dev_l = (theta0 - theta_star).dot(grad_at_start);
  const double term1 = ((100.0 * p / 61.0 - 39.0 / 61.0) * a0_su * a0_su -
                        p * a0_b * a0_b) * sum_l_sq;
  const double term2 = (a0_su - a0_b) *
      (p * sigma2 * (a0_su + a0_b) / (2.0 * c0_b * c0_b) - 2.0 * sum_dev_l);
  const double term3 = -p * a0_su * a0_su * sigma2 *
      (1.0 / (2.0 * c0_b * c0_b) - 50.0 / (61.0 * c0_su * c0_su));
  return term1 + term2 + term3;
}

double corollary_a1_bound(double third_deriv_bound, const Vector& theta0,
                          const Vector& theta_star, const Vector& grad_at_start,
                          double a0_su, double a0_b, double c0_su, double c0_b) {
  const double p = static_cast<double>(theta0.size());
  const double m = third_deriv_bound;
  const double dev_l1 = (theta0 - theta_star).cwiseAbs().sum();
  const double max_l = grad_at_start.cwiseAbs().maxCoeff();
  const double t1 = (4.0 * a0_su * c0_su * c0_su + a0_b * c0_b * c0_b) * m * dev_l1 *
                    (p - 1.0) * (p - 1.0);
  const double t2 = (1.0 / 20.0) * a0_su * a0_su * std::pow(c0_su, 4) *
                    m * m * std::pow(p, 7) * a0_su;
  const double t3 = (1.0 / 3.0) * (a0_su * a0_su * std::pow(c0_su, 3) +
                                   a0_b * a0_b * std::pow(c0_b, 3)) *
                    m * std::pow(p, 5) * max_l;
  return t1 + t2 + t3;
}

SpsaComparison mse_compare(const std::function<double(const Vector&)>& loss,
                           const Vector& theta_star, const Vector& theta0,
                           double noise_var, const GainSchedule& gains_su,
                           const GainSchedule& gains_b, int iters, int reps,
                           RngStream rng, int threads) {
  if (reps < 2) throw Error("mse_compare: need at least 2 replications");
  const double noise_sd = std::sqrt(noise_var);
  const PerturbationDist su = PerturbationDist::segmented_uniform();
  const PerturbationDist bern = PerturbationDist::bernoulli_pm1();
  std::vector<double> err_su(reps), err_b(reps);
  parallel_for(reps, threads, [&](int r) {
    RngStream rep = rng.substream(static_cast<std::uint64_t>(r));
    RngStream pert_su = rep.substream("pert_su");
    RngStream pert_b = rep.substream("pert_b");
    // One noise stream per replication, replayed for both distributions, so
    // the measurement errors are common random numbers.
    RngStream noise_a = rep.substream("noise");
    RngStream noise_b = rep.substream("noise");
    auto make_oracle = [&](RngStream& noise) {
      return [&loss, &noise, noise_sd](const Vector& t) {
        return loss(t) + noise_sd * noise.normal();
      };
    };
    auto oracle_su = make_oracle(noise_a);
    auto oracle_b = make_oracle(noise_b);
    const Vector end_su = spsa_run(oracle_su, theta0, gains_su, su, iters, pert_su);
    const Vector end_b = spsa_run(oracle_b, theta0, gains_b, bern, iters, pert_b);
    err_su[r] = (end_su - theta_star).squaredNorm();
    err_b[r] = (end_b - theta_star).squaredNorm();
  });
  SpsaComparison out;
  out.reps = reps;
  out.iters = iters;
  out.mse_su = mean(err_su);
  out.mse_bernoulli = mean(err_b);
  std::vector<double> diffs(reps);
  for (int r = 0; r < reps; ++r) diffs[r] = err_b[r] - err_su[r];
  out.ttest = paired_t_test(diffs);
  out.mean_diff = out.ttest.mean_diff;
  out.se_diff = out.ttest.se_diff;
  return out;
}

}  // namespace fimlab
