#include "citepref/fit/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace citepref::fit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double quad(const VectorXd& g, const MatrixXd& H, const VectorXd& d) { return g.dot(d) + 0.5 * d.dot(H * d); }

VectorXd clip(const VectorXd& d, const VectorXd& lo, const VectorXd& hi) { return d.cwiseMax(lo).cwiseMin(hi); }

// Piecewise search along the projected steepest-descent path, stopped at the ball.
VectorXd cauchy_step(const VectorXd& g, const MatrixXd& H, double radius, const VectorXd& lo, const VectorXd& hi) {
  const auto n = g.size();
  VectorXd d = VectorXd::Zero(n);
  std::vector<char> active(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g[i] == 0.0 || (g[i] > 0 && lo[i] >= 0) || (g[i] < 0 && hi[i] <= 0)) active[static_cast<std::size_t>(i)] = 1;
  }
  for (int segment = 0; segment <= n; ++segment) {
    VectorXd p = VectorXd::Zero(n);
    double seg_len = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[static_cast<std::size_t>(i)]) continue;
      p[i] = -g[i];
      const double room = p[i] > 0 ? hi[i] - d[i] : lo[i] - d[i];
      seg_len = std::min(seg_len, room / p[i]);
    }
    const double pp = p.squaredNorm();
    if (pp == 0.0) break;
    // Ball limit along d + t p.
    const double dp = d.dot(p);
    const double rest = radius * radius - d.squaredNorm();
    if (rest <= 0) break;
    const double t_ball = (-dp + std::sqrt(std::max(0.0, dp * dp + pp * rest))) / pp;
    const double t_max = std::min(seg_len, t_ball);
    const double slope = (g + H * d).dot(p);
    const double curv = p.dot(H * p);
    double t = t_max;
    if (curv > 0) t = std::clamp(-slope / curv, 0.0, t_max);
    else if (slope >= 0) t = 0.0;
    d += t * p;
    if (t < t_max || t_max == t_ball) break;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[static_cast<std::size_t>(i)]) continue;
      if (d[i] >= hi[i] - 1e-15 * std::max(1.0, std::abs(hi[i])) ||
          d[i] <= lo[i] + 1e-15 * std::max(1.0, std::abs(lo[i]))) {
        d[i] = std::clamp(d[i], lo[i], hi[i]);
        active[static_cast<std::size_t>(i)] = 1;
      }
    }
  }
  return clip(d, lo, hi);
}

}  // namespace

VectorXd ball_step(const VectorXd& g, const MatrixXd& H, double radius) {
  const auto n = g.size();
  if (n == 0) return VectorXd();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (H + H.transpose()));
  const VectorXd lam = eig.eigenvalues();
  const MatrixXd& Q = eig.eigenvectors();
  const VectorXd gt = Q.transpose() * g;
  const double gnorm = g.norm();
  if (gnorm == 0.0 && lam[0] >= 0) return VectorXd::Zero(n);

  auto step_for = [&](double mu) {
    VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c[i] = -gt[i] / (lam[i] + mu);
    return c;
  };
  if (lam[0] > 0) {
    const VectorXd c = step_for(0.0);
    if (c.norm() <= radius) return Q * c;
  }
  const double mu_lo = std::max(0.0, -lam[0]);
  // Hard case: gradient has no component along the lowest eigenvector.
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (std::abs(gt[0]) <= 1e-12 * std::max(gnorm, 1e-300) || gnorm == 0.0) {
    VectorXd c = VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double den = lam[i] + mu_lo;
      if (den > 1e-12 * scale) c[i] = -gt[i] / den;
    }
    if (c.norm() <= radius) {
      c[0] += std::sqrt(std::max(0.0, radius * radius - c.squaredNorm()));
      return Q * c;
    }
  }
  double lo = mu_lo;
  double hi = mu_lo + gnorm / radius;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double norm = step_for(mid).norm();
    if (std::abs(norm - radius) <= 1e-12 * radius) {
      lo = hi = mid;
      break;
    }
    if (norm > radius) lo = mid;
    else hi = mid;
  }
  VectorXd c = step_for(hi);
  const double norm = c.norm();
  if (norm > radius) c *= radius / norm;
  return Q * c;
}

VectorXd trust_region_step(const VectorXd& g, const MatrixXd& H, double radius, const VectorXd& lo, const VectorXd& hi) {
  const auto n = g.size();
  std::vector<VectorXd> candidates;
  candidates.push_back(VectorXd::Zero(n));
  candidates.push_back(cauchy_step(g, H, radius, lo, hi));

  // Active-set pass: solve on the free coordinates, pin violators at their bounds.
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  VectorXd d = VectorXd::Zero(n);
  for (Eigen::Index pass = 0; pass <= n; ++pass) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    if (free.empty()) break;
    double fixed_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fixed[static_cast<std::size_t>(i)]) fixed_sq += d[i] * d[i];
    }
    const double r = std::sqrt(std::max(0.0, radius * radius - fixed_sq));
    if (r <= 0.0) break;
    const auto m = static_cast<Eigen::Index>(free.size());
    VectorXd gf(m);
    MatrixXd hf(m, m);
    const VectorXd full_grad = g + H * d;  // d is zero on free coordinates
    for (Eigen::Index a = 0; a < m; ++a) {
      gf[a] = full_grad[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < m; ++b) hf(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    const VectorXd df = ball_step(gf, hf, r);
    bool violated = false;
    VectorXd trial = d;
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto i = free[static_cast<std::size_t>(a)];
      trial[i] = df[a];
      if (df[a] > hi[i] || df[a] < lo[i]) violated = true;
    }
    if (!violated) {
      candidates.push_back(trial);
      break;
    }
    trial = clip(trial, lo, hi);
    candidates.push_back(trial);
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto i = free[static_cast<std::size_t>(a)];
      if (df[a] > hi[i] || df[a] < lo[i]) {
        fixed[static_cast<std::size_t>(i)] = 1;
        d[i] = trial[i];
      }
    }
  }
  VectorXd best = candidates.front();
  double best_q = 0.0;
  for (const auto& c : candidates) {
    const double q = quad(g, H, c);
    if (q < best_q) {
      best_q = q;
      best = c;
    }
  }
  return best;
}

namespace {

class Solver {
 public:
  Solver(const Objective& f, VectorXd lower, VectorXd upper, const TrustRegionOptions& options)
      : f_(f), lower_(std::move(lower)), upper_(std::move(upper)), options_(options) {
    n_ = lower_.size();
    p_ = (n_ + 1) * (n_ + 2) / 2;
  }

  TrustRegionResult run(VectorXd x0) {
    double rho = options_.rho_begin;
    for (Eigen::Index i = 0; i < n_; ++i) rho = std::min(rho, 0.5 * (upper_[i] - lower_[i]));
    x0 = x0.cwiseMax(lower_).cwiseMin(upper_);
    // Keep the start point either on a bound or at least rho inside it.
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (x0[i] < lower_[i] + rho) x0[i] = x0[i] <= lower_[i] + 0.5 * rho ? lower_[i] : lower_[i] + rho;
      if (x0[i] > upper_[i] - rho) x0[i] = x0[i] >= upper_[i] - 0.5 * rho ? upper_[i] : upper_[i] - rho;
    }
    TrustRegionResult result;
    double delta = rho;
    if (!initialize(x0, rho)) return finish(result, rho, false);

    int rebuilds = 0;
    while (true) {
      if (evals_ >= options_.max_evaluations) return finish(result, rho, false);
      const Eigen::Index k = best_index();
      if (!build(k)) {
        if (++rebuilds > 50 || !initialize(points_[static_cast<std::size_t>(k)], rho)) return finish(result, rho, false);
        continue;
      }
      const VectorXd xk = points_[static_cast<std::size_t>(k)];
      const double fk = values_[static_cast<std::size_t>(k)];
      const VectorXd d = trust_region_step(grad_, hess_, delta, lower_ - xk, upper_ - xk);
      const double dnorm = d.norm();
      const double predicted = -quad(grad_, hess_, d);

      if (dnorm < 0.5 * rho || !(predicted > 1e-14 * std::max(1.0, std::abs(fk)))) {
        delta = 0.1 * delta;
        if (delta <= 1.5 * rho) delta = rho;
        const auto [far, dist] = farthest(xk);
        if (dist > 2.0 * delta) {
          if (!geometry_step(far, xk, std::max(std::min(0.1 * dist, delta), rho))) return finish(result, rho, false);
          continue;
        }
        if (delta > rho) continue;
        if (!reduce(rho, delta)) return finish(result, rho, true);
        continue;
      }

      const VectorXd x_new = (xk + d).cwiseMax(lower_).cwiseMin(upper_);
      const double f_new = evaluate(x_new);
      const double ratio = (fk - f_new) / predicted;
      if (ratio <= 0.1) delta = std::min(0.5 * delta, dnorm);
      else if (ratio <= 0.7) delta = std::max(0.5 * delta, dnorm);
      else delta = std::max(0.5 * delta, 2.0 * dnorm);
      if (delta <= 1.5 * rho) delta = rho;

      replace(x_new, f_new, k, delta);

      if (ratio < 0.1) {
        const Eigen::Index k2 = best_index();
        const VectorXd xb = points_[static_cast<std::size_t>(k2)];
        const auto [far, dist] = farthest(xb);
        if (dist > 2.0 * delta) {
          if (!build(k2)) continue;
          if (!geometry_step(far, xb, std::max(std::min(0.1 * dist, delta), rho))) return finish(result, rho, false);
          continue;
        }
        if (delta <= rho && ratio <= 0.0) {
          if (!reduce(rho, delta)) return finish(result, rho, true);
        }
      }
    }
  }

 private:
  double evaluate(const VectorXd& x) {
    ++evals_;
    const double v = f_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    return std::isfinite(v) ? v : std::numeric_limits<double>::max() / 4;
  }

  TrustRegionResult& finish(TrustRegionResult& r, double rho, bool converged) {
    if (!values_.empty()) {
      const Eigen::Index k = best_index();
      const VectorXd& x = points_[static_cast<std::size_t>(k)];
      r.x.assign(x.data(), x.data() + x.size());
      r.f = values_[static_cast<std::size_t>(k)];
    }
    r.evaluations = evals_;
    r.converged = converged;
    r.final_rho = rho;
    return r;
  }

  bool reduce(double& rho, double& delta) const {
    if (rho <= options_.rho_end) return false;
    const double ratio = rho / options_.rho_end;
    double next = 0.1 * rho;
    if (ratio <= 16.0) next = options_.rho_end;
    else if (ratio <= 250.0) next = std::sqrt(ratio) * options_.rho_end;
    delta = std::max(0.5 * rho, next);
    rho = next;
    return true;
  }

  // Offsets for the first and second sample along a coordinate, staying in the box.
  std::pair<double, double> offsets(double x, double lo, double hi, double r) const {
    const double plus = x + r <= hi ? r : (x - r >= lo ? -r : (hi - x >= x - lo ? hi - x : lo - x));
    for (double c : {-plus, 2.0 * plus, 0.5 * plus}) {
      if (x + c >= lo && x + c <= hi && c != 0.0 && c != plus) return {plus, c};
    }
    return {plus, 0.5 * plus};
  }

  bool initialize(const VectorXd& center, double r) {
    std::vector<VectorXd> pts;
    pts.push_back(center);
    std::vector<double> first(static_cast<std::size_t>(n_));
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto [a, b] = offsets(center[i], lower_[i], upper_[i], r);
      first[static_cast<std::size_t>(i)] = a;
      VectorXd pa = center, pb = center;
      pa[i] += a;
      pb[i] += b;
      pts.push_back(pa);
      pts.push_back(pb);
    }
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        VectorXd q = center;
        q[i] += first[static_cast<std::size_t>(i)];
        q[j] += first[static_cast<std::size_t>(j)];
        pts.push_back(q);
      }
    }
    // Reuse the value at the center when it is already known.
    double f_center = 0.0;
    bool known = false;
    for (std::size_t j = 0; j < points_.size(); ++j) {
      if (points_[j] == center) {
        f_center = values_[j];
        known = true;
        break;
      }
    }
    points_.clear();
    values_.clear();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (evals_ >= options_.max_evaluations) return false;
      points_.push_back(pts[j]);
      values_.push_back(j == 0 && known ? f_center : evaluate(pts[j]));
    }
    return true;
  }

  Eigen::Index best_index() const {
    Eigen::Index k = 0;
    for (std::size_t j = 1; j < values_.size(); ++j) {
      if (values_[j] < values_[static_cast<std::size_t>(k)]) k = static_cast<Eigen::Index>(j);
    }
    return k;
  }

  std::pair<Eigen::Index, double> farthest(const VectorXd& x) const {
    Eigen::Index far = 0;
    double dist = -1.0;
    for (std::size_t j = 0; j < points_.size(); ++j) {
      const double dj = (points_[j] - x).norm();
      if (dj > dist) {
        dist = dj;
        far = static_cast<Eigen::Index>(j);
      }
    }
    return {far, dist};
  }

  VectorXd basis(const VectorXd& d) const {
    VectorXd phi(p_);
    const VectorXd s = d / scale_;
    phi[0] = 1.0;
    Eigen::Index idx = 1;
    for (Eigen::Index i = 0; i < n_; ++i) phi[idx++] = s[i];
    for (Eigen::Index i = 0; i < n_; ++i) phi[idx++] = 0.5 * s[i] * s[i];
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = i + 1; j < n_; ++j) phi[idx++] = s[i] * s[j];
    }
    return phi;
  }

  // Maps monomial coefficients to (constant, gradient, Hessian) in unscaled offsets.
  void unpack(const VectorXd& alpha, double& c, VectorXd& g, MatrixXd& H) const {
    c = alpha[0];
    g.resize(n_);
    H.setZero(n_, n_);
    Eigen::Index idx = 1;
    for (Eigen::Index i = 0; i < n_; ++i) g[i] = alpha[idx++] / scale_;
    for (Eigen::Index i = 0; i < n_; ++i) H(i, i) = alpha[idx++] / (scale_ * scale_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        H(i, j) = H(j, i) = alpha[idx++] / (scale_ * scale_);
      }
    }
  }

  bool build(Eigen::Index k) {
    center_ = points_[static_cast<std::size_t>(k)];
    scale_ = 0.0;
    for (const auto& y : points_) scale_ = std::max(scale_, (y - center_).cwiseAbs().maxCoeff());
    if (!(scale_ > 0.0)) return false;
    MatrixXd M(p_, p_);
    for (Eigen::Index j = 0; j < p_; ++j) M.row(j) = basis(points_[static_cast<std::size_t>(j)] - center_).transpose();
    Eigen::FullPivLU<MatrixXd> lu(M);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) return false;
    inverse_ = lu.inverse();
    VectorXd rhs(p_);
    const double fk = values_[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < p_; ++j) rhs[j] = values_[static_cast<std::size_t>(j)] - fk;
    const VectorXd alpha = inverse_ * rhs;
    double c = 0.0;
    unpack(alpha, c, grad_, hess_);
    return grad_.allFinite() && hess_.allFinite();
  }

  // All Lagrange polynomial values at x for the current model basis.
  VectorXd lagrange_values(const VectorXd& x) const { return inverse_.transpose() * basis(x - center_); }

  void replace(const VectorXd& x_new, double f_new, Eigen::Index k, double delta) {
    const VectorXd& xk = points_[static_cast<std::size_t>(k)];
    const VectorXd ell = lagrange_values(x_new);
    const bool improved = f_new < values_[static_cast<std::size_t>(k)];
    Eigen::Index target = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < p_; ++j) {
      if (j == k && !improved) continue;
      const double dist = (points_[static_cast<std::size_t>(j)] - xk).norm() / delta;
      const double score = std::abs(ell[j]) * std::max(1.0, dist * dist * dist);
      if (score > best) {
        best = score;
        target = j;
      }
    }
    if (target < 0 || best < 1e-10) {
      // Replacing would degrade the interpolation set; keep it only if it improves.
      if (!improved) return;
      target = farthest(xk).first;
    }
    points_[static_cast<std::size_t>(target)] = x_new;
    values_[static_cast<std::size_t>(target)] = f_new;
  }

  bool geometry_step(Eigen::Index j, const VectorXd& xk, double radius) {
    VectorXd coeff = inverse_.col(j);
    double c = 0.0;
    VectorXd g;
    MatrixXd H;
    unpack(coeff, c, g, H);
    const double at_center = c + 0.0;
    const VectorXd lo = lower_ - xk, hi = upper_ - xk;
    // ell_j(xk + d) = ell_j(xk) + g'd + d'Hd/2; maximize its magnitude.
    const VectorXd d_min = trust_region_step(g, H, radius, lo, hi);
    const VectorXd d_max = trust_region_step(-g, -H, radius, lo, hi);
    const double v_min = std::abs(at_center + quad(g, H, d_min));
    const double v_max = std::abs(at_center + quad(g, H, d_max));
    VectorXd d = v_max >= v_min ? d_max : d_min;
    if (d.norm() == 0.0) {
      // Flat Lagrange function; fall back to a coordinate move.
      d = VectorXd::Zero(n_);
      const Eigen::Index i = j % n_;
      d[i] = offsets(xk[i], lower_[i], upper_[i], radius).first;
    }
    if (evals_ >= options_.max_evaluations) return false;
    const VectorXd x = (xk + d).cwiseMax(lower_).cwiseMin(upper_);
    points_[static_cast<std::size_t>(j)] = x;
    values_[static_cast<std::size_t>(j)] = evaluate(x);
    return true;
  }

  const Objective& f_;
  VectorXd lower_, upper_;
  TrustRegionOptions options_;
  Eigen::Index n_ = 0, p_ = 0;
  std::vector<VectorXd> points_;
  std::vector<double> values_;
  int evals_ = 0;
  VectorXd center_;
  double scale_ = 1.0;
  MatrixXd inverse_;
  VectorXd grad_;
  MatrixXd hess_;
};

}  // namespace

TrustRegionResult minimize_bounded(const Objective& f, std::span<const double> x0, std::span<const double> lower,
                                   std::span<const double> upper, const TrustRegionOptions& options) {
  const auto n = x0.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("bounds must match the start point size");
  if (n == 0) throw std::invalid_argument("nothing to optimize");
  if (!(options.rho_begin > 0) || !(options.rho_end > 0) || options.rho_end > options.rho_begin) {
    throw std::invalid_argument("need 0 < rho_end <= rho_begin");
  }
  if (options.max_evaluations < static_cast<int>((n + 1) * (n + 2) / 2) + 1) {
    throw std::invalid_argument("max_evaluations too small for the interpolation set");
  }
  VectorXd lo(static_cast<Eigen::Index>(n)), hi(static_cast<Eigen::Index>(n)), start(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] < upper[i])) throw std::invalid_argument("every coordinate needs lower < upper");
    lo[static_cast<Eigen::Index>(i)] = lower[i];
    hi[static_cast<Eigen::Index>(i)] = upper[i];
    start[static_cast<Eigen::Index>(i)] = x0[i];
  }
  Solver solver(f, lo, hi, options);
  return solver.run(start);
}

}  // namespace citepref::fit
