#include "chaoslink/observer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "chaoslink/control.hpp"
#include "chaoslink/error.hpp"

namespace chaoslink {

namespace {

constexpr int kRows = 4;

// Least squares for up to 3 columns through the normal equations; returns
// the residual sum of squares and writes the coefficients.
double fit(const std::vector<std::array<double, kRows>> &cols, const std::array<double, kRows> &rhs,
           std::array<double, 3> &coef) {
  const std::size_t n = cols.size();
  double a[3][4] = {};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c)
      for (int k = 0; k < kRows; ++k) a[r][c] += cols[r][k] * cols[c][k];
    for (int k = 0; k < kRows; ++k) a[r][n] += cols[r][k] * rhs[k];
  }
  for (std::size_t piv = 0; piv < n; ++piv) {
    std::size_t best = piv;
    for (std::size_t r = piv + 1; r < n; ++r)
      if (std::fabs(a[r][piv]) > std::fabs(a[best][piv])) best = r;
    for (std::size_t c = 0; c <= n; ++c) std::swap(a[piv][c], a[best][c]);
    if (std::fabs(a[piv][piv]) < 1e-12) return INFINITY;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == piv) continue;
      const double f = a[r][piv] / a[piv][piv];
      for (std::size_t c = piv; c <= n; ++c) a[r][c] -= f * a[piv][c];
    }
  }
  for (std::size_t r = 0; r < n; ++r) coef[r] = a[r][n] / a[r][r];
  double rss = 0.0;
  for (int k = 0; k < kRows; ++k) {
    double e = rhs[k];
    for (std::size_t c = 0; c < n; ++c) e -= coef[c] * cols[c][k];
    rss += e * e;
  }
  return rss;
}

} // namespace

TurnOffObserver::TurnOffObserver(const BoostParams &p, double gain, double step)
    : params_(p), step_(step), gain_(gain), kink_(gain * p.i_ref / p.c * step) {
  if (!(step > 0.0)) throw DomainError("TurnOffObserver: step must be > 0");
  if (!(p.t_clk >= 8.0 * step))
    throw DomainError("TurnOffObserver: clock period must span at least 8 steps");
  if (!(std::fabs(kink_) > 0.0)) throw DomainError("TurnOffObserver: masking gain is zero");
}

void TurnOffObserver::push(double y) {
  ring_[static_cast<std::size_t>(count_ % 8)] = y;
  ++count_;
  // Interval p needs samples p-2 .. p+3.
  while (next_p_ + 3 < count_) examine(next_p_++);
}

void TurnOffObserver::examine(std::int64_t p) {
  if (held_ && p > held_p_ + 1) {
    found_.push_back(held_time_);
    held_ = false;
  }
  const auto y = [&](std::int64_t j) { return ring_[static_cast<std::size_t>(j % 8)]; };
  const auto t = [&](std::int64_t j) { return static_cast<double>(j) * step_; };

  // Rows are second differences d2_j for j = p-1 .. p+2, scaled by the kink.
  std::array<double, kRows> d2{};
  for (int r = 0; r < kRows; ++r) {
    const std::int64_t j = p - 1 + r;
    d2[r] = (y(j + 1) - 2.0 * y(j) + y(j - 1)) / kink_;
  }

  std::vector<std::array<double, kRows>> cols{{1.0, 1.0, 1.0, 1.0}};
  // A kink at t* in [t_q, t_q+1) enters d2_q with weight 1 - theta and
  // d2_q+1 with weight theta.
  std::int64_t n = clock_edges_through(t(p - 2), params_);
  if (n > 0 && static_cast<double>(n - 1) * params_.t_clk == t(p - 2)) --n;
  for (;; ++n) {
    const double te = static_cast<double>(n) * params_.t_clk;
    if (te >= t(p + 3)) break;
    // Edges that fall on the grid up to rounding are put exactly on it.
    const double pos = te / step_;
    const double snapped = std::round(pos);
    const double at = std::fabs(pos - snapped) < 1e-6 ? snapped : pos;
    const auto q = static_cast<std::int64_t>(std::floor(at));
    const double theta = at - static_cast<double>(q);
    std::array<double, kRows> col{};
    for (int r = 0; r < kRows; ++r) {
      const std::int64_t j = p - 1 + r;
      if (j == q) col[r] = 1.0 - theta;
      if (j == q + 1) col[r] = theta;
    }
    // An edge loading only rows outside the window has no column.
    if (*std::max_element(col.begin(), col.end()) < 1e-6) continue;
    cols.push_back(col);
    if (cols.size() > 2) return; // two edges in the window: too close to resolve
  }

  std::array<double, 3> coef{};
  const double rss_null = fit(cols, d2, coef);
  if (!(rss_null >= kMinNullRms * kMinNullRms * kRows)) return;

  cols.push_back({0.0, -1.0, 1.0, 0.0});
  // The switch-off also steps the curvature of v_c, by
  // ((v_in - v_c) / L - i_ref / (R C)) / C; left in the rows it biases theta
  // by about 1e-4. Its size follows from v_c ~ y / gain, its shape from
  // theta, so theta is refined with that term removed.
  const double v_c = y(p) / gain_;
  const double jump = ((params_.v_in - v_c) / params_.l - params_.i_ref / (params_.r * params_.c)) /
                      params_.c * gain_ / kink_;
  double theta = 0.5;
  double rss = INFINITY;
  for (int pass = 0; pass < 3; ++pass) {
    std::array<double, kRows> rhs = d2;
    rhs[1] -= 1.0; // the kink's full weight placed at d2_p, moved by theta
    if (pass > 0) {
      const double t_off = t(p) + std::clamp(theta, 0.0, 1.0) * step_;
      const auto bend = [&](std::int64_t j) {
        const double dt = std::max(0.0, t(j) - t_off);
        return 0.5 * jump * dt * dt;
      };
      for (int r = 0; r < kRows; ++r) {
        const std::int64_t j = p - 1 + r;
        rhs[r] -= bend(j + 1) - 2.0 * bend(j) + bend(j - 1);
      }
    }
    rss = fit(cols, rhs, coef);
    if (!std::isfinite(rss)) return;
    theta = coef[cols.size() - 1];
  }
  if (!(rss <= kMaxFitRms * kMaxFitRms * kRows)) return;
  // A kink just outside the interval also fits with theta slightly beyond
  // [0, 1]; leave it to the neighbouring interval.
  if (theta < -kThetaSlack || theta > 1.0 + kThetaSlack) return;
  const double when = t(p) + std::clamp(theta, 0.0, 1.0) * step_;
  // Neighbouring intervals can both fit a kink near their shared end; the
  // better fit wins.
  if (held_ && when - held_time_ < step_) {
    if (rss < held_rss_) {
      held_time_ = when;
      held_rss_ = rss;
    }
    return;
  }
  if (held_) found_.push_back(held_time_);
  held_ = true;
  held_time_ = when;
  held_rss_ = rss;
  held_p_ = p;
}

} // namespace chaoslink
