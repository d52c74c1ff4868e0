#pragma once

// Entropy reference estimators and acceleration metrics.

#include <cmath>
#include <vector>

#include "belplan/belief.hpp"
#include "belplan/common.hpp"
#include "belplan/ledger.hpp"
#include "belplan/models.hpp"

namespace belplan {

// Discrete entropy over the particle weights: -sum_i w_i log w_i.
inline double discrete_weight_entropy(const WeightedParticleBelief& belief) {
  KahanSum acc;
  for (int i = 0; i < belief.size(); ++i) {
    const double w = belief.weight(i);
    if (w > 0.0) acc.add(-w * std::log(w));
  }
  return acc.value();
}

// Weighted Gaussian product-kernel KDE entropy with per-axis Silverman
// bandwidths h_j = sigma_j * (4 / ((d + 2) n))^(1 / (d + 4)).
inline double kde_entropy(const WeightedParticleBelief& belief) {
  const int n = belief.size();
  const int d = belief.dim;
  std::vector<double> mean(d, 0.0), var(d, 0.0), h(d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) mean[k] += belief.weight(i) * belief.state(i)[k];
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const double dev = belief.state(i)[k] - mean[k];
      var[k] += belief.weight(i) * dev * dev;
    }
  }
  const double factor = std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
  for (int k = 0; k < d; ++k) {
    if (!(var[k] > 0.0)) throw DegenerateBandwidth();
    h[k] = std::sqrt(var[k]) * factor;
  }
  double log_norm = 0.0;
  for (int k = 0; k < d; ++k) log_norm += -0.5 * kLog2Pi - std::log(h[k]);

  KahanSum acc;
  for (int i = 0; i < n; ++i) {
    KahanSum density;
    for (int j = 0; j < n; ++j) {
      double q = 0.0;
      for (int k = 0; k < d; ++k) {
        const double dev = (belief.state(i)[k] - belief.state(j)[k]) / h[k];
        q += dev * dev;
      }
      density.add(belief.weight(j) * std::exp(log_norm - 0.5 * q));
    }
    acc.add(-belief.weight(i) * floored_log(density.value()));
  }
  return acc.value();
}

// Isotropic 2D Kalman filter for the linear beacon models.  The motion and
// observation noises are isotropic, so an isotropic initial covariance stays
// isotropic and a scalar variance suffices; plugging the true state into the
// observation covariance keeps the update linear.
struct IsotropicKalman2D {
  double mean[2] = {0.0, 0.0};
  double var = 1.0;  // per-axis variance

  void predict(const double* a, double sigma_t) {
    mean[0] += a[0];
    mean[1] += a[1];
    var += sigma_t * sigma_t;
  }
  // z is measured relative to the given beacon; r_std is the per-axis
  // observation noise std evaluated at the true state.
  void update(const double* z, const double* beacon, double r_std) {
    const double r = r_std * r_std;
    const double gain = var / (var + r);
    mean[0] += gain * (z[0] - (mean[0] - beacon[0]));
    mean[1] += gain * (z[1] - (mean[1] - beacon[1]));
    var *= 1.0 - gain;
  }
  // Differential entropy of N(mean, var * I): log(2 pi e var) for d = 2.
  double entropy() const { return std::log(2.0 * M_PI * M_E * var); }
};

// Share of motion-kernel work avoided relative to full-level rewards,
// sum_i (n_x^2 - n^s n_x) / sum_i n_x^2 * 100, over recorded final levels.
inline double particle_speedup(const std::vector<LevelRecord>& final_levels) {
  double saved = 0.0, full = 0.0;
  for (const LevelRecord& rec : final_levels) {
    const double nx = rec.n_x;
    saved += nx * nx - static_cast<double>(rec.n_s) * nx;
    full += nx * nx;
  }
  return full > 0.0 ? saved / full * 100.0 : 0.0;
}

inline double time_speedup(double t_baseline, double t_ours) {
  return t_baseline > 0.0 ? (t_baseline - t_ours) / t_baseline * 100.0 : 0.0;
}

}  // namespace belplan
