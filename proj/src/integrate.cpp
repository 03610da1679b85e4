#include "depthscan/integrate.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace ds {

namespace {

constexpr double kMomentum = 0.9;
// Loss increases within this relative slack are tolerated without rollback,
// letting momentum carry the iterate across flat L1 valleys; the returned
// depth is always the best-so-far state, so the slack never leaks into the
// result.
constexpr double kRollbackSlack = 1e-3;
constexpr double kMinDepth = 1e-9;  // keeps iterates in the valid-depth halfspace
constexpr double kMinNz = 1e-3;

// 4-connected component labels over the valid pixels; returns component count.
int label_components(const Mask& mask, Grid<int>& labels) {
  labels = Grid<int>(mask.width(), mask.height(), -1);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int v0 = 0; v0 < mask.height(); ++v0) {
    for (int u0 = 0; u0 < mask.width(); ++u0) {
      if (!mask(u0, v0) || labels(u0, v0) >= 0) continue;
      stack.push_back({u0, v0});
      labels(u0, v0) = next;
      while (!stack.empty()) {
        auto [u, v] = stack.back();
        stack.pop_back();
        const int du[4] = {1, -1, 0, 0};
        const int dv[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int uu = u + du[k];
          const int vv = v + dv[k];
          if (uu < 0 || uu >= mask.width() || vv < 0 || vv >= mask.height()) continue;
          if (!mask(uu, vv) || labels(uu, vv) >= 0) continue;
          labels(uu, vv) = next;
          stack.push_back({uu, vv});
        }
      }
      ++next;
    }
  }
  return next;
}

// One anchor pixel per component: the valid pixel closest to the component
// centroid, overridden by the configured anchor for its own component.
std::vector<std::pair<Eigen::Vector2i, double>> pick_anchors(
    const Mask& mask, const Grid<int>& labels, int n_components, const IntegratorConfig& cfg) {
  std::vector<double> sum_u(n_components, 0.0), sum_v(n_components, 0.0);
  std::vector<long> count(n_components, 0);
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      if (!mask(u, v)) continue;
      const int c = labels(u, v);
      sum_u[c] += u;
      sum_v[c] += v;
      ++count[c];
    }
  }

  std::vector<std::pair<Eigen::Vector2i, double>> anchors(
      n_components, {Eigen::Vector2i(-1, -1), cfg.init_depth});
  std::vector<double> best_d2(n_components, std::numeric_limits<double>::infinity());
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      if (!mask(u, v)) continue;
      const int c = labels(u, v);
      const double du = u - sum_u[c] / count[c];
      const double dv = v - sum_v[c] / count[c];
      const double d2 = du * du + dv * dv;
      if (d2 < best_d2[c]) {
        best_d2[c] = d2;
        anchors[c].first = {u, v};
      }
    }
  }

  if (cfg.anchor) {
    const auto [pix, depth] = *cfg.anchor;
    if (!mask.contains(pix.x(), pix.y()) || !mask(pix.x(), pix.y())) {
      throw ContractViolation("integrate_depth: anchor pixel is not a valid mask pixel");
    }
    if (depth <= 0.0) throw ContractViolation("integrate_depth: anchor depth must be positive");
    anchors[labels(pix.x(), pix.y())] = {pix, depth};
  }
  return anchors;
}

}  // namespace

IntegrationResult integrate_depth(const NormalMap& target, const Mask& mask, const Camera& cam,
                                  const IntegratorConfig& cfg) {
  cfg.validate();
  if (!mask.same_size(target.values)) {
    throw ContractViolation("integrate_depth: mask/target size mismatch");
  }
  if (count_valid(mask) == 0) throw EmptyDomainError("integrate_depth: empty mask");

  Grid<int> labels;
  const int n_components = label_components(mask, labels);
  const auto anchors = pick_anchors(mask, labels, n_components, cfg);

  DepthMap depth(Grid<double>(mask.width(), mask.height(), cfg.init_depth), mask);
  for (const auto& [pix, d] : anchors) depth.values(pix.x(), pix.y()) = d;

  auto pin_anchors = [&](Grid<double>& values) {
    for (const auto& [pix, d] : anchors) values(pix.x(), pix.y()) = d;
  };

  ScalarWithGrad lg = l1_normals_loss(depth, target, cam);
  Grid<double> best_values = depth.values;
  Grid<double> best_grad = lg.grad;
  double best_loss = lg.value;

  Grid<double> velocity(mask.width(), mask.height(), 0.0);
  double step = cfg.step_size;
  // Loss history over accepted steps; rollbacks retry an iteration at a
  // smaller step and do not advance the convergence window.
  std::deque<double> history{best_loss};
  int iterations = 0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    iterations = it;

    for (int v = 0; v < mask.height(); ++v) {
      for (int u = 0; u < mask.width(); ++u) {
        if (!mask(u, v)) continue;
        double& vel = velocity(u, v);
        vel = kMomentum * vel - step * lg.grad(u, v);
        double& d = depth.values(u, v);
        d = std::max(d + vel, kMinDepth);
      }
    }
    pin_anchors(depth.values);

    lg = l1_normals_loss(depth, target, cam);
    if (lg.value > best_loss * (1.0 + kRollbackSlack)) {
      depth.values = best_values;
      velocity.fill(0.0);
      step *= cfg.step_decay;
      lg.value = best_loss;
      lg.grad = best_grad;
      if (step < 1e-14 * cfg.step_size) break;  // annealed to nothing
      continue;
    }

    if (lg.value < best_loss) {
      best_loss = lg.value;
      best_values = depth.values;
      best_grad = lg.grad;
    }
    history.push_back(best_loss);
    if (history.size() > 11) history.pop_front();
    if (history.size() == 11 && history.front() - best_loss < cfg.convergence_tol) break;
  }

  IntegrationResult result;
  result.depth = DepthMap(std::move(best_values), mask);
  result.final_loss = best_loss;
  result.iterations = iterations;
  result.components = n_components;
  return result;
}

DepthMap poisson_integrate_ortho(const NormalMap& target, const Mask& mask, double pixel_pitch) {
  if (!mask.same_size(target.values)) {
    throw ContractViolation("poisson_integrate_ortho: mask/target size mismatch");
  }
  if (pixel_pitch <= 0.0) {
    throw ContractViolation("poisson_integrate_ortho: pixel pitch must be positive");
  }

  const int w = mask.width();
  const int h = mask.height();
  Mask valid(w, h, 0);
  std::vector<std::pair<int, int>> singular;
  long n_valid = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!mask(u, v) || !target.valid(u, v)) continue;
      valid(u, v) = 1;
      ++n_valid;
      if (std::abs(target.values(u, v).z()) < kMinNz) singular.push_back({u, v});
    }
  }
  if (n_valid == 0) throw EmptyDomainError("poisson_integrate_ortho: empty valid domain");
  if (!singular.empty()) {
    std::string msg = "poisson_integrate_ortho: normals too close to the view plane at " +
                      std::to_string(singular.size()) + " pixel(s), first (" +
                      std::to_string(singular.front().first) + ", " +
                      std::to_string(singular.front().second) + ")";
    throw SingularityError(msg, std::move(singular));
  }

  Grid<int> labels;
  const int n_components = label_components(valid, labels);

  // Gradient field implied by the normals: dz/dx = -nx/nz, dz/dy = -ny/nz.
  Grid<double> p(w, h, 0.0), q(w, h, 0.0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!valid(u, v)) continue;
      const Eigen::Vector3d& n = target.values(u, v);
      p(u, v) = -n.x() / n.z();
      q(u, v) = -n.y() / n.z();
    }
  }

  // One representative pixel per component is eliminated (held at z = 0) so
  // the reduced normal equations are strictly positive definite.
  Grid<int> var(w, h, -1);
  std::vector<char> seen(n_components, 0);
  int n_vars = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!valid(u, v)) continue;
      const int c = labels(u, v);
      if (!seen[c]) {
        seen[c] = 1;  // representative, no variable
      } else {
        var(u, v) = n_vars++;
      }
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(std::max(n_vars, 1));
  auto add_edge = [&](int ua, int va, int ub, int vb, double g) {
    // Row: z(b) - z(a) = g.
    const int ia = var(ua, va);
    const int ib = var(ub, vb);
    if (ia >= 0) {
      triplets.emplace_back(ia, ia, 1.0);
      rhs[ia] -= g;
      if (ib >= 0) {
        triplets.emplace_back(ia, ib, -1.0);
      }
    }
    if (ib >= 0) {
      triplets.emplace_back(ib, ib, 1.0);
      rhs[ib] += g;
      if (ia >= 0) {
        triplets.emplace_back(ib, ia, -1.0);
      }
    }
  };

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!valid(u, v)) continue;
      if (u + 1 < w && valid(u + 1, v)) {
        add_edge(u, v, u + 1, v, pixel_pitch * 0.5 * (p(u, v) + p(u + 1, v)));
      }
      if (v + 1 < h && valid(u, v + 1)) {
        add_edge(u, v, u, v + 1, pixel_pitch * 0.5 * (q(u, v) + q(u, v + 1)));
      }
    }
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(std::max(n_vars, 1));
  if (n_vars > 0) {
    Eigen::SparseMatrix<double> ata(n_vars, n_vars);
    ata.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(ata);
    if (solver.info() != Eigen::Success) {
      throw ValidationError("poisson_integrate_ortho: sparse factorization failed");
    }
    z = solver.solve(rhs.head(n_vars));
  }

  DepthMap out(Grid<double>(w, h, 0.0), valid);
  std::vector<double> comp_sum(n_components, 0.0);
  std::vector<long> comp_count(n_components, 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!valid(u, v)) continue;
      const double zi = var(u, v) >= 0 ? z[var(u, v)] : 0.0;
      out.values(u, v) = zi;
      comp_sum[labels(u, v)] += zi;
      ++comp_count[labels(u, v)];
    }
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!valid(u, v)) continue;
      out.values(u, v) -= comp_sum[labels(u, v)] / comp_count[labels(u, v)];
    }
  }
  return out;
}

}  // namespace ds
