#include "causalreach/shooting.hpp"

#include <algorithm>
#include <cmath>

#include "causalreach/errors.hpp"

namespace causalreach {

Shooter::Shooter(const SubSpaceTime& st, Vec origin, Direction dir, int intervals, int substeps,
                 double s_max)
    : st_(st),
      origin_(std::move(origin)),
      dir_(dir),
      m_(intervals),
      k_(st.rank()),
      substeps_(substeps),
      s_max_(s_max) {
  if (m_ < 1 || substeps_ < 1) throw ConfigError("shooter needs intervals and substeps >= 1");
}

Shooter::Params Shooter::from_controls(const ControlSignal& ctrl, double until) const {
  std::vector<double> tau;
  std::vector<Vec> s;
  double t = 0.0;
  for (int r = 0; r < ctrl.steps() && t < until; ++r) {
    const double d = std::min(ctrl.duration(r), until - t);
    if (d <= 0) continue;
    const Vec& row = ctrl.row(r);
    tau.push_back(d);
    s.push_back(row.tail(k_ - 1) / row[0]);
    t += d;
  }
  if (tau.empty()) {
    tau.push_back(0.0);
    s.push_back(Vec::Zero(k_ - 1));
  }
  // Merge the shortest neighbours until the count fits, then split the longest.
  while (static_cast<int>(tau.size()) > m_) {
    std::size_t i = 0;
    for (std::size_t j = 1; j + 1 < tau.size(); ++j)
      if (tau[j] + tau[j + 1] < tau[i] + tau[i + 1]) i = j;
    const double w = tau[i] + tau[i + 1];
    const Vec mix = w > 0 ? Vec((tau[i] * s[i] + tau[i + 1] * s[i + 1]) / w) : s[i];
    tau[i] = w;
    s[i] = mix;
    tau.erase(tau.begin() + i + 1);
    s.erase(s.begin() + i + 1);
  }
  while (static_cast<int>(tau.size()) < m_) {
    const auto it = std::max_element(tau.begin(), tau.end());
    const std::size_t i = it - tau.begin();
    tau[i] *= 0.5;
    tau.insert(tau.begin() + i, tau[i]);
    s.insert(s.begin() + i, s[i]);
  }
  Params theta(size());
  for (int j = 0; j < m_; ++j) {
    theta[j * k_] = tau[j];
    theta.segment(j * k_ + 1, k_ - 1) = s[j];
  }
  project(theta);
  return theta;
}

ControlSignal Shooter::to_controls(const Params& theta) const {
  std::vector<double> d;
  std::vector<Vec> rows;
  for (int j = 0; j < m_; ++j) {
    Vec row(k_);
    row[0] = 1.0;
    row.tail(k_ - 1) = theta.segment(j * k_ + 1, k_ - 1);
    d.push_back(theta[j * k_]);
    rows.push_back(row);
  }
  return ControlSignal(std::move(d), std::move(rows), Strictness::Nonspacelike);
}

void Shooter::project(Params& theta) const {
  for (int j = 0; j < m_; ++j) {
    theta[j * k_] = std::max(0.0, theta[j * k_]);
    auto s = theta.segment(j * k_ + 1, k_ - 1);
    const double n = s.norm();
    if (n > s_max_) s *= s_max_ / n;
  }
}

Vec Shooter::integrate_rows(const Params& theta, int from_row, Vec p,
                            std::vector<Vec>* states) const {
  const double sign = dir_ == Direction::Future ? 1.0 : -1.0;
  Vec u(k_);
  u[0] = 1.0;
  for (int j = from_row; j < m_; ++j) {
    if (states) (*states)[j] = p;
    const double tau = theta[j * k_];
    if (tau <= 0) continue;
    u.tail(k_ - 1) = theta.segment(j * k_ + 1, k_ - 1);
    const double h = tau / substeps_;
    for (int s = 0; s < substeps_; ++s) {
      const Vec k1 = sign * st_.velocity(p, u);
      const Vec k2 = sign * st_.velocity(p + 0.5 * h * k1, u);
      const Vec k3 = sign * st_.velocity(p + 0.5 * h * k2, u);
      const Vec k4 = sign * st_.velocity(p + h * k3, u);
      p += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  if (states) (*states)[m_] = p;
  return p;
}

Vec Shooter::endpoint(const Params& theta) const {
  return integrate_rows(theta, 0, origin_, nullptr);
}

std::vector<Vec> Shooter::boundary_states(const Params& theta) const {
  std::vector<Vec> states(m_ + 1);
  integrate_rows(theta, 0, origin_, &states);
  return states;
}

Vec Shooter::endpoint_from(const Params& theta, int row, const Vec& state) const {
  return integrate_rows(theta, row, state, nullptr);
}

namespace {
double block_length(const Shooter::Params& theta, int j, int k) {
  const double s2 = theta.segment(j * k + 1, k - 1).squaredNorm();
  return theta[j * k] * std::sqrt(std::max(0.0, 1.0 - s2));
}
}  // namespace

double Shooter::length(const Params& theta) const {
  double L = 0.0;
  for (int j = 0; j < m_; ++j) L += block_length(theta, j, k_);
  return L;
}

HorizontalCurve Shooter::curve(const Params& theta) const {
  IntegrateOptions opts;
  opts.substeps_per_row = substeps_;
  opts.direction = dir_;
  return integrate(st_, origin_, to_controls(theta), opts);
}

double Shooter::solve_endpoint(Params& theta, const Vec& target, int max_iter, double tol,
                               int* iterations) const {
  project(theta);
  Vec r = endpoint(theta) - target;
  double f = r.norm();
  const int n = static_cast<int>(target.size());
  const int P = size();
  double lambda = 1e-6;
  Eigen::MatrixXd J(n, P);
  for (int it = 0; it < max_iter && f > tol; ++it) {
    const Vec e0 = r + target;
    for (int i = 0; i < P; ++i) {
      Params t = theta;
      const double h = 1e-7 * (1.0 + std::abs(theta[i]));
      t[i] += h;
      J.col(i) = (endpoint(t) - e0) / h;
    }
    const Eigen::MatrixXd JJ = J * J.transpose();
    const double scale = std::max(1e-12, JJ.trace() / n);
    bool accepted = false;
    for (int tries = 0; tries < 10; ++tries) {
      Eigen::MatrixXd M = JJ;
      M.diagonal().array() += lambda * scale;
      const Eigen::VectorXd y = M.ldlt().solve(Eigen::VectorXd(r));
      Params cand = theta - J.transpose() * y;
      project(cand);
      const Vec rc = endpoint(cand) - target;
      const double fc = rc.norm();
      if (std::isfinite(fc) && fc < f) {
        theta = cand;
        r = rc;
        f = fc;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (iterations) ++*iterations;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  return f;
}

int Shooter::penalty_ascent(Params& theta, const Vec& target, int outer, double mu0,
                            double growth, int max_sweeps) const {
  int sweeps = 0;
  project(theta);
  double total = 0.0;
  for (int j = 0; j < m_; ++j) total += theta[j * k_];
  const double h_tau0 = 0.25 * std::max(total, 1e-3) / m_;
  const double h_s0 = 0.25 * s_max_;

  std::vector<Vec> states = boundary_states(theta);
  std::vector<Vec> trial(m_ + 1);
  double L = length(theta);
  double mu = mu0;
  for (int o = 0; o < outer; ++o, mu *= growth) {
    double f = L - mu * (states[m_] - target).squaredNorm();
    const double shrink = std::pow(0.5, o);
    double h_tau = h_tau0 * shrink, h_s = h_s0 * shrink;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      ++sweeps;
      bool improved = false;
      for (int j = 0; j < m_; ++j) {
        for (int v = 0; v < k_; ++v) {
          const double h = v == 0 ? h_tau : h_s;
          for (double sign : {1.0, -1.0}) {
            Params cand = theta;
            cand[j * k_ + v] += sign * h;
            project(cand);
            trial = states;
            const Vec end = integrate_rows(cand, j, states[j], &trial);
            const double Lc = L - block_length(theta, j, k_) + block_length(cand, j, k_);
            const double fc = Lc - mu * (end - target).squaredNorm();
            if (fc > f + 1e-15) {
              theta = cand;
              states.swap(trial);
              L = Lc;
              f = fc;
              improved = true;
              break;
            }
          }
        }
      }
      if (!improved) {
        h_tau *= 0.5;
        h_s *= 0.5;
        if (h_tau < 1e-7 && h_s < 1e-7) break;
      }
    }
  }
  return sweeps;
}

}  // namespace causalreach
