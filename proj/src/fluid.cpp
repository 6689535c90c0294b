#include "slicesim/fluid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "slicesim/ctmc.hpp"

namespace slicesim {

std::vector<double> derivative(const CompiledModel& model, const std::vector<double>& x) {
  std::vector<double> dx(model.slot_count());
  model.derivative(x.data(), dx.data());
  return dx;
}

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

// Sets entries that went negative to zero and takes the difference from the
// rest of the same group, so group masses stay put.
void clamp_negatives(const CompiledModel& model, std::vector<double>& x) {
  for (const auto& leaf : model.leaves()) {
    double negative = 0.0, positive = 0.0;
    for (int s = 0; s < leaf.size(); ++s) {
      double& v = x[leaf.offset + s];
      if (v < 0.0) {
        negative += v;
        v = 0.0;
      } else {
        positive += v;
      }
    }
    if (negative == 0.0 || positive <= 0.0) continue;
    const double scale = (positive + negative) / positive;
    for (int s = 0; s < leaf.size(); ++s) x[leaf.offset + s] *= std::max(scale, 0.0);
  }
}

double relative_drift(const CompiledModel& model, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& leaf : model.leaves()) {
    double sum = 0.0;
    for (int s = 0; s < leaf.size(); ++s) sum += x[leaf.offset + s];
    const double pop = static_cast<double>(leaf.population);
    worst = std::max(worst, std::abs(sum - pop) / std::max(pop, 1.0));
  }
  return worst;
}

double largest_population(const CompiledModel& model) {
  double m = 1.0;
  for (const auto& leaf : model.leaves()) m = std::max(m, static_cast<double>(leaf.population));
  return m;
}

SteadyState make_state(std::shared_ptr<const CompiledModel> model, const std::vector<double>& x) {
  const CompiledModel& cm = *model;
  SteadyState out;
  out.engine = EngineKind::Fluid;
  out.model = model;
  out.occupancy = x;
  out.flow.assign(cm.enablings().size(), 0.0);
  out.action_rate.assign(cm.action_count(), 0.0);
  for (int a = 0; a < cm.action_count(); ++a) out.action_rate[a] = cm.distribute(a, x.data(), out.flow.data());
  return out;
}

}  // namespace

Trajectory integrate(const CompiledModel& model, std::vector<double> x0, double t_end,
                     const IntegrationOptions& options,
                     const std::function<bool(double, const std::vector<double>&)>& observer) {
  // Dormand-Prince 5(4) tableau.
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;  // autonomous system

  const std::size_t n = x0.size();
  const double atol = options.atol > 0.0 ? options.atol : options.rtol * largest_population(model);
  Trajectory out;
  out.x = std::move(x0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), tmp(n);
  auto f = [&](const std::vector<double>& in, std::vector<double>& d) { model.derivative(in.data(), d.data()); };

  f(out.x, k1);
  double h;
  {
    const double scale = std::max(inf_norm(out.x), 1.0);
    const double speed = inf_norm(k1);
    h = speed > 0.0 ? 1e-3 * scale / speed : t_end;
    h = std::min(h, t_end);
  }
  if (observer && !observer(0.0, out.x)) {
    out.stopped_early = true;
    return out;
  }

  while (out.t < t_end) {
    if (out.accepted + out.rejected >= options.max_steps) break;
    h = std::min(h, t_end - out.t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = out.x[i] + h * a21 * k1[i];
    f(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = out.x[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = out.x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = out.x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = out.x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = out.x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(y, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = atol + options.rtol * std::max(std::abs(out.x[i]), std::abs(y[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      out.t += h;
      out.x.swap(y);
      ++out.accepted;
      bool clamped = false;
      for (double v : out.x) clamped |= v < 0.0;
      if (clamped) {
        clamp_negatives(model, out.x);
        f(out.x, k1);
      } else {
        k1.swap(k7);  // first-same-as-last
      }
      out.max_relative_drift = std::max(out.max_relative_drift, relative_drift(model, out.x));
      if (observer && !observer(out.t, out.x)) {
        out.stopped_early = true;
        return out;
      }
    } else {
      ++out.rejected;
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < options.h_min) break;
  }
  return out;
}

namespace {

SteadyState explicit_fixed_point(std::shared_ptr<const CompiledModel> model, const FluidOptions& options) {
  const CompiledModel& cm = *model;
  std::vector<double> dx(cm.slot_count());
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  auto observer = [&](double, const std::vector<double>& x) {
    cm.derivative(x.data(), dx.data());
    residual = inf_norm(dx);
    converged = residual < options.epsilon * std::max(1.0, inf_norm(x));
    return !converged;
  };
  Trajectory tr = integrate(cm, cm.initial_occupancy(), options.t_max, {}, observer);
  SteadyState out = make_state(model, tr.x);
  out.converged = converged;
  out.residual = residual;
  out.time = tr.t;
  out.size = tr.accepted;
  return out;
}

// Orthonormal basis of the span of all state changes. Every linear
// invariant of the model (group masses and any synchronisation balance) is
// orthogonal to it, so steps taken inside it keep them exactly.
Eigen::MatrixXd change_basis(const CompiledModel& cm) {
  const int n = cm.slot_count();
  std::vector<double> ones(n, 1.0);
  std::vector<Eigen::VectorXd> cols;
  for (int a = 0; a < cm.action_count(); ++a)
    for (const auto& jm : cm.enumerate(a, ones.data())) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      for (const auto& m : jm.moves) {
        c[m.from] -= 1.0;
        c[m.to] += 1.0;
      }
      if (c.squaredNorm() > 0.0) cols.push_back(std::move(c));
    }
  if (cols.empty()) return Eigen::MatrixXd(n, 0);
  Eigen::MatrixXd s(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) s.col(static_cast<Eigen::Index>(k)) = cols[k];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU);
  svd.setThreshold(1e-10);
  return svd.matrixU().leftCols(svd.rank());
}

// Pseudo-transient continuation: linearly implicit Euler steps whose length
// grows as the residual falls, so the iteration turns into Newton's method
// near the fixed point. Steps live in the span of the state changes, so
// synchronisation invariants (which can hold two cooperating masses equal and
// pin a min on its corner) survive and the projected Jacobian is regular.
SteadyState pseudo_transient_fixed_point(std::shared_ptr<const CompiledModel> model, const FluidOptions& options) {
  const CompiledModel& cm = *model;
  const int n = cm.slot_count();
  const Eigen::MatrixXd z = change_basis(cm);
  const Eigen::Index d = z.cols();
  std::vector<double> x = cm.initial_occupancy(), fx(n), xp(n), fp(n), trial(n), ft(n);
  cm.derivative(x.data(), fx.data());
  double residual = inf_norm(fx);
  const double scale = largest_population(cm);
  auto tolerance = [&](const std::vector<double>& v) { return options.epsilon * std::max(1.0, inf_norm(v)); };

  double fastest = 0.0;
  for (const auto& e : cm.enablings()) fastest = std::max(fastest, e.rate);
  double dt = fastest > 0.0 ? 1.0 / fastest : 1.0;
  double pseudo_time = 0.0;
  std::size_t iterations = 0;

  Eigen::MatrixXd jac(n, n), a(d, d);
  Eigen::VectorXd g(d), fvec(n), delta(n);
  bool converged = residual < tolerance(x) || d == 0;
  while (!converged && iterations < options.max_iterations) {
    ++iterations;
    // Central differences where there is room, so a min sitting on its
    // corner gets half the slope from each side.
    for (int j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      const bool central = x[j] > h;
      xp = x;
      xp[j] += h;
      cm.derivative(xp.data(), fp.data());
      if (central) {
        xp[j] = x[j] - h;
        cm.derivative(xp.data(), ft.data());
        for (int i = 0; i < n; ++i) jac(i, j) = (fp[i] - ft[i]) / (2.0 * h);
      } else {
        for (int i = 0; i < n; ++i) jac(i, j) = (fp[i] - fx[i]) / h;
      }
    }
    for (int i = 0; i < n; ++i) fvec[i] = fx[i];
    const Eigen::MatrixXd jr = z.transpose() * jac * z;
    g = z.transpose() * fvec;

    bool accepted = false;
    double last_step = 1.0;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      a = -jr;
      a.diagonal().array() += 1.0 / dt;
      delta = z * a.partialPivLu().solve(g);
      double r_new = std::numeric_limits<double>::infinity();
      if (delta.allFinite()) {
        // Stop short of the boundary; entries already at zero may not move.
        double step = 1.0;
        const double floor = 1e-13 * scale;
        for (int i = 0; i < n; ++i)
          if (delta[i] < -floor && x[i] + delta[i] < 0.0) step = std::min(step, 0.99 * x[i] / -delta[i]);
        for (int i = 0; i < n; ++i) trial[i] = std::max(x[i] + step * delta[i], 0.0);
        last_step = step;
        cm.derivative(trial.data(), ft.data());
        r_new = inf_norm(ft);
      }
      if (std::isfinite(r_new) && r_new < 2.0 * residual + tolerance(x) && last_step >= 0.5) {
        pseudo_time += dt;
        double growth = r_new > 0.0 ? residual / r_new : 10.0;
        if (r_new < residual) growth = std::max(growth, 1.5);
        dt = std::min(dt * std::clamp(growth, 0.5, 10.0), 1e15);
        x.swap(trial);
        fx.swap(ft);
        residual = r_new;
        accepted = true;
      } else {
        dt *= 0.25;
      }
    }
    if (!accepted) break;
    converged = residual < tolerance(x);
  }

  SteadyState out = make_state(model, x);
  out.converged = converged;
  out.residual = residual;
  out.time = pseudo_time;
  out.size = iterations;
  return out;
}

}  // namespace

std::string_view to_string(FluidMethod m) { return m == FluidMethod::PseudoTransient ? "ptc" : "explicit"; }

FluidMethod fluid_method_from_string(std::string_view s) {
  if (s == "ptc") return FluidMethod::PseudoTransient;
  if (s == "explicit") return FluidMethod::Explicit;
  throw std::invalid_argument("unknown fluid method '" + std::string(s) + "'");
}

SteadyState solve_fixed_point(std::shared_ptr<const CompiledModel> model, const FluidOptions& options) {
  if (options.method == FluidMethod::Explicit) return explicit_fixed_point(std::move(model), options);
  return pseudo_transient_fixed_point(std::move(model), options);
}

std::map<std::string, double> fluid_vs_ctmc_gap(std::shared_ptr<const CompiledModel> model,
                                                 const FluidOptions& options) {
  SteadyState fluid = solve_fixed_point(model, options);
  SteadyState exact = solve_ctmc(model);
  std::map<std::string, double> gap;
  for (int a = 0; a < model->action_count(); ++a) {
    const double e = exact.action_rate[a], f = fluid.action_rate[a];
    gap[model->actions()[a]] = e == 0.0 ? (f == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                        : std::abs(f - e) / e;
  }
  return gap;
}

}  // namespace slicesim
