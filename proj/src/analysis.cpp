// Copyright 2026 The qtele Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtele/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace qtele::analysis {

Offsets Offsets::uniform(double v) {
  Offsets o;
  for (auto& r : o.ns) r.fill(v);
  return o;
}

Histogram2D::Histogram2D(const HistParams& p, int det)
    : bin_ns(p.bin_ns), half(static_cast<int>(std::lround(p.range_ns / p.bin_ns))), detector(det) {
  if (!(p.bin_ns > 0) || !(p.range_ns > 0)) throw AnalysisError("histogram bin and range must be positive");
  counts.assign(static_cast<size_t>(size()) * size(), 0);
}

uint64_t Histogram2D::total() const { return std::accumulate(counts.begin(), counts.end(), uint64_t{0}); }

void for_each_threefold(const EventLog& log, int det, const Offsets& off, double range_ns, double bin_ns,
                        const ThreefoldVisitor& visit) {
  if (det != 3 && det != 4) throw AnalysisError("analyzer detector must be D3 or D4");
  const auto& ta = log.times(det);
  const auto& ia = log.indices(det);
  const auto& t1 = log.times(1);
  const auto& i1 = log.indices(1);
  const auto& t2 = log.times(2);
  const auto& i2 = log.indices(2);
  const int64_t reach = std::llround((range_ns + 0.5 * bin_ns) * 1000.0) + 1;
  const int64_t o1 = std::llround(off.get(det, 1) * 1000.0), o2 = std::llround(off.get(det, 2) * 1000.0);
  for (size_t a = 0; a < ta.size(); ++a) {
    int64_t c1 = ta[a] - o1, c2 = ta[a] - o2;
    auto b1 = std::lower_bound(t1.begin(), t1.end(), c1 - reach);
    auto e1 = std::upper_bound(t1.begin(), t1.end(), c1 + reach);
    if (b1 == e1) continue;
    auto b2 = std::lower_bound(t2.begin(), t2.end(), c2 - reach);
    auto e2 = std::upper_bound(t2.begin(), t2.end(), c2 + reach);
    for (auto p1 = b1; p1 != e1; ++p1)
      for (auto p2 = b2; p2 != e2; ++p2)
        visit(ia[a], i1[p1 - t1.begin()], i2[p2 - t2.begin()], static_cast<double>(c1 - *p1) / 1000.0,
              static_cast<double>(c2 - *p2) / 1000.0);
  }
}

namespace {

int bin_index(double delay_ns, double bin_ns, int half) {
  return static_cast<int>(std::floor(delay_ns / bin_ns + 0.5)) + half;
}

}  // namespace

Histogram2D build_threefold_histogram(const EventLog& log, int det, const Offsets& off, const HistParams& p) {
  Histogram2D h(p, det);
  const int n = h.size();
  // the outer bins reach (half + 1/2) bins, slightly beyond range_ns when it is not a whole number of bins
  for_each_threefold(log, det, off, h.half * h.bin_ns, h.bin_ns, [&](size_t, size_t, size_t, double d1, double d2) {
    int r = bin_index(d1, h.bin_ns, h.half), c = bin_index(d2, h.bin_ns, h.half);
    if (r >= 0 && r < n && c >= 0 && c < n) ++h.at(r, c);
  });
  return h;
}

std::pair<Histogram2D, Histogram2D> build_threefold_histograms(const EventLog& log, const Offsets& off,
                                                               const HistParams& p) {
  return {build_threefold_histogram(log, 3, off, p), build_threefold_histogram(log, 4, off, p)};
}

Slice slice(const Histogram2D& h, SliceAxis which, double centre_ns) {
  int idx = bin_index(centre_ns, h.bin_ns, h.half);
  if (idx < 0 || idx >= h.size()) throw AnalysisError("slice centre outside the histogram range");
  Slice s;
  for (int k = 0; k < h.size(); ++k) {
    s.delay_ns.push_back(h.delay(k));
    s.counts.push_back(which == SliceAxis::row ? h.at(idx, k) : h.at(k, idx));
  }
  return s;
}

uint64_t centre_counts(const Histogram2D& h, int hw) {
  uint64_t n = 0;
  for (int c = std::max(0, h.half - hw); c <= std::min(h.size() - 1, h.half + hw); ++c) n += h.at(h.half, c);
  return n;
}

namespace {

void arm_bins(const Histogram2D& h, double tau_ns, double& row_sum, int& row_n, double& col_sum, int& col_n) {
  row_sum = col_sum = 0;
  row_n = col_n = 0;
  for (int k = 0; k < h.size(); ++k) {
    double d = std::abs(h.delay(k));
    if (d < 5.0 * tau_ns) continue;
    row_sum += static_cast<double>(h.at(h.half, k));
    ++row_n;
    col_sum += static_cast<double>(h.at(k, h.half));
    ++col_n;
  }
}

}  // namespace

RatioResult centre_to_arm_ratio(const Histogram2D& h, double tau_ns) {
  double rs, cs;
  int rn, cn;
  arm_bins(h, tau_ns, rs, rn, cs, cn);
  if (rn + cn == 0) throw AnalysisError("histogram range too small for arm bins");
  double arm = (rs + cs) / (rn + cn);
  double centre = static_cast<double>(h.at(h.half, h.half));
  if (arm <= 0) throw AnalysisError("no counts in the arm bins");
  double ratio = centre / arm;
  double rel2 = (centre > 0 ? 1.0 / centre : 0.0) + 1.0 / (arm * (rn + cn));
  return {centre, arm, ratio, ratio > 0 ? ratio * std::sqrt(rel2) : std::sqrt(1.0 / centre + 1.0) / arm};
}

BandProfile band_profile(const Histogram2D& h, double tau_ns) {
  double rs, cs;
  int rn, cn;
  arm_bins(h, tau_ns, rs, rn, cs, cn);
  double bg = 0;
  int bn = 0;
  for (int r = 0; r < h.size(); ++r)
    for (int c = 0; c < h.size(); ++c)
      if (std::abs(h.delay(r)) >= 5 * tau_ns && std::abs(h.delay(c)) >= 5 * tau_ns &&
          std::abs(h.delay(r) - h.delay(c)) >= 5 * tau_ns) {
        bg += static_cast<double>(h.at(r, c));
        ++bn;
      }
  return {rn ? rs / rn : 0.0, cn ? cs / cn : 0.0, bn ? bg / bn : 0.0};
}

double slice_level(const Slice& s, double min_abs, double max_abs) {
  double sum = 0;
  int n = 0;
  for (size_t i = 0; i < s.counts.size(); ++i) {
    double d = std::abs(s.delay_ns[i]);
    if (d >= min_abs && d <= max_abs) {
      sum += static_cast<double>(s.counts[i]);
      ++n;
    }
  }
  if (n == 0) throw AnalysisError("no slice bins in the requested delay band");
  return sum / n;
}

double fwhm(const Slice& s, double baseline) {
  if (s.counts.empty()) throw AnalysisError("empty slice");
  size_t peak = static_cast<size_t>(std::max_element(s.counts.begin(), s.counts.end()) - s.counts.begin());
  double top = static_cast<double>(s.counts[peak]) - baseline;
  if (top <= 0) throw AnalysisError("no peak above the baseline");
  double half = baseline + 0.5 * top;
  auto level = [&](size_t i) { return static_cast<double>(s.counts[i]); };
  double left = s.delay_ns.front(), right = s.delay_ns.back();
  for (size_t i = peak; i > 0; --i)
    if (level(i - 1) < half) {
      double f = (level(i) - half) / (level(i) - level(i - 1));
      left = s.delay_ns[i] - f * (s.delay_ns[i] - s.delay_ns[i - 1]);
      break;
    }
  for (size_t i = peak; i + 1 < s.counts.size(); ++i)
    if (level(i + 1) < half) {
      double f = (level(i) - half) / (level(i) - level(i + 1));
      right = s.delay_ns[i] + f * (s.delay_ns[i + 1] - s.delay_ns[i]);
      break;
    }
  return right - left;
}

uint64_t count_twofolds(const EventLog& log, int det_a, int det_b, int64_t centre_ps, int64_t half_ps) {
  const auto& ta = log.times(det_a);
  const auto& tb = log.times(det_b);
  uint64_t n = 0;
  for (int64_t t : ta) {
    auto lo = std::lower_bound(tb.begin(), tb.end(), t - centre_ps - half_ps);
    auto hi = std::upper_bound(tb.begin(), tb.end(), t - centre_ps + half_ps);
    n += static_cast<uint64_t>(hi - lo);
  }
  return n;
}

PeakFit fit_twofold_peak(const EventLog& log, int det_a, int det_b, double expected_ns, double search_half_ns,
                         double bin_ns) {
  const int nb = static_cast<int>(std::lround(2 * search_half_ns / bin_ns));
  if (nb < 8) throw CalibrationError("calibration search window too narrow");
  std::vector<double> x(nb), y(nb, 0.0);
  for (int i = 0; i < nb; ++i) x[i] = expected_ns - search_half_ns + (i + 0.5) * bin_ns;
  const auto& ta = log.times(det_a);
  const auto& tb = log.times(det_b);
  const int64_t lo_ps = std::llround((expected_ns - search_half_ns) * 1000.0);
  const int64_t hi_ps = std::llround((expected_ns + search_half_ns) * 1000.0);
  for (int64_t t : ta) {
    auto b = std::lower_bound(tb.begin(), tb.end(), t - hi_ps);
    auto e = std::upper_bound(tb.begin(), tb.end(), t - lo_ps);
    for (auto it = b; it != e; ++it) {
      double d = static_cast<double>(t - *it) / 1000.0;
      int i = static_cast<int>(std::floor((d - (expected_ns - search_half_ns)) / bin_ns));
      if (i >= 0 && i < nb) y[i] += 1;
    }
  }
  // background from the outer quarter on each side
  std::vector<double> side;
  for (int i = 0; i < nb; ++i)
    if (i < nb / 4 || i >= nb - nb / 4) side.push_back(y[i]);
  double bg = std::accumulate(side.begin(), side.end(), 0.0) / static_cast<double>(side.size());
  int imax = static_cast<int>(std::max_element(y.begin(), y.end()) - y.begin());
  // Background-subtracted centroid over +-1 ns around the maximum. Bins below
  // the background keep their negative weight: with jitter-free data all
  // delays sit on the slot lattice and dropping the empty bins in between
  // would leave the neighbouring accidentals in as excess.
  double sw = 0, sx = 0, sxx = 0, excess = 0;
  int win = std::max(1, static_cast<int>(std::lround(1.0 / bin_ns)));
  int n_win = 0;
  for (int i = std::max(0, imax - win); i <= std::min(nb - 1, imax + win); ++i) {
    double v = y[i] - bg;
    excess += v;
    ++n_win;
    sw += v;
    sx += v * x[i];
    sxx += v * x[i] * x[i];
  }
  PeakFit fit;
  fit.background = bg;
  double noise = std::sqrt(std::max(1.0, bg * n_win));
  fit.significance = excess / noise;
  if (fit.significance < 5.0 || sw <= 0)
    throw CalibrationError("twofold peak D" + std::to_string(det_a) + "-D" + std::to_string(det_b) +
                           " below 5 sigma of the background");
  fit.centre_ns = sx / sw;
  fit.sigma_ns = std::sqrt(std::max(0.0, sxx / sw - fit.centre_ns * fit.centre_ns));
  fit.amplitude = y[imax] - bg;
  // Unresolved peak: keep the centroid. Jitter-free delays fall on the slot
  // lattice, so the bins next to the maximum are empty and a Gaussian fit
  // would chase the comb.
  const bool spread = imax > 0 && imax < nb - 1 && y[imax - 1] > bg && y[imax + 1] > bg;
  if (fit.sigma_ns < 2 * bin_ns || !spread) return fit;
  // Levenberg-Marquardt on A exp(-(x-c)^2 / 2 s^2) + B
  Eigen::Vector4d p(fit.amplitude, fit.centre_ns, fit.sigma_ns, bg);
  auto residuals = [&](const Eigen::Vector4d& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(nb);
    if (J) J->resize(nb, 4);
    for (int i = 0; i < nb; ++i) {
      double z = (x[i] - q[1]) / q[2];
      double e = std::exp(-0.5 * z * z);
      double wgt = 1.0 / std::sqrt(std::max(1.0, y[i]));
      r[i] = (q[0] * e + q[3] - y[i]) * wgt;
      if (J) {
        (*J)(i, 0) = e * wgt;
        (*J)(i, 1) = q[0] * e * z / q[2] * wgt;
        (*J)(i, 2) = q[0] * e * z * z / q[2] * wgt;
        (*J)(i, 3) = wgt;
      }
    }
  };
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residuals(p, r, &J);
  double cost = r.squaredNorm(), lambda = 1e-3;
  bool ok = false;
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix4d A = J.transpose() * J;
    Eigen::Vector4d g = J.transpose() * r;
    Eigen::Matrix4d D = A.diagonal().asDiagonal();
    Eigen::Vector4d step = (A + lambda * D).ldlt().solve(-g);
    Eigen::Vector4d q = p + step;
    if (!(q[2] > 0) || !step.allFinite()) {
      lambda *= 10;
      continue;
    }
    Eigen::VectorXd r2;
    residuals(q, r2, nullptr);
    double c2 = r2.squaredNorm();
    if (c2 < cost) {
      bool small = std::abs(cost - c2) < 1e-10 * (1 + cost);
      p = q;
      cost = c2;
      lambda = std::max(1e-12, lambda / 10);
      residuals(p, r, &J);
      if (small) {
        ok = true;
        break;
      }
    } else {
      lambda *= 10;
      if (lambda > 1e12) {
        ok = true;
        break;
      }
    }
  }
  if (ok && std::abs(p[1] - fit.centre_ns) < std::max(fit.sigma_ns, 2 * bin_ns) && p[0] > 0) {
    fit.amplitude = p[0];
    fit.centre_ns = p[1];
    fit.sigma_ns = p[2];
    fit.background = p[3];
    fit.gaussian = true;
  }
  return fit;
}

Offsets calibrate_offsets(const EventLog& log, double expected_ns, double search_half_ns) {
  Offsets o;
  for (int a = 3; a <= 4; ++a)
    for (int b = 1; b <= 2; ++b) o.set(a, b, fit_twofold_peak(log, a, b, expected_ns, search_half_ns).centre_ns);
  return o;
}

GsiEstimate estimate_gsi(const EventLog& log, double window_ns, Peak peak, double storage_ns, double period_ns,
                         int displaced) {
  if (!(window_ns > 0) || window_ns > period_ns) throw AnalysisError("g_si window must lie in (0, period]");
  if (displaced < 1) throw AnalysisError("g_si needs at least one displaced window per side");
  const double centre = peak == Peak::stored ? storage_ns : 0.0;
  const int64_t half = std::llround(window_ns * 500.0);
  auto sum = [&](double c_ns) {
    uint64_t n = 0;
    for (int a = 3; a <= 4; ++a)
      for (int b = 1; b <= 2; ++b) n += count_twofolds(log, a, b, std::llround(c_ns * 1000.0), half);
    return n;
  };
  uint64_t np = sum(centre);
  uint64_t rs = 0;
  for (int k = 1; k <= displaced; ++k) rs += sum(centre - k * period_ns) + sum(centre + k * period_ns);
  double ref = static_cast<double>(rs) / (2.0 * displaced);
  if (rs == 0) throw AnalysisError("g_si undefined: no counts in the reference windows");
  double g = static_cast<double>(np) / ref;
  double rel2 = (np ? 1.0 / static_cast<double>(np) : 0.0) + 1.0 / static_cast<double>(rs);
  return {g, g * std::sqrt(rel2), np, ref};
}

namespace {

double wrap(double a) { return std::remainder(a, 2.0 * M_PI); }

}  // namespace

VisibilityFit fit_visibility_curves(const std::vector<VisibilityCounts>& data) {
  if (data.size() < 8) throw AnalysisError("visibility fit needs at least 8 angles");
  double amin = data[0].angle_rad, amax = amin;
  for (const auto& d : data) {
    amin = std::min(amin, d.angle_rad);
    amax = std::max(amax, d.angle_rad);
  }
  if (amax - amin < 3.0 * M_PI / 8.0 - 1e-9) throw AnalysisError("visibility angles must span a full period");
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd X(n, 3);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::cos(4 * data[i].angle_rad);
    X(i, 2) = std::sin(4 * data[i].angle_rad);
  }
  auto qr = X.colPivHouseholderQr();
  if (qr.rank() < 3) throw AnalysisError("visibility fit: singular design matrix");
  // phase each curve should show for an entanglement phase phi: curve phase = sign * pi/2 - phi
  const double sign[4] = {1, -1, -1, 1};
  VisibilityFit fit;
  double res2 = 0, s = 0, c = 0;
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = static_cast<double>(data[i].counts[k]);
    Eigen::Vector3d beta = qr.solve(y);
    res2 += (X * beta - y).squaredNorm();
    double B = std::hypot(beta[1], beta[2]);
    double ph = std::atan2(beta[2], beta[1]);
    if (!(beta[0] > 0)) throw AnalysisError("visibility fit: non-positive mean count, residual " + std::to_string(std::sqrt(res2 / n)));
    fit.curves[k] = {beta[0], B, ph, B / beta[0]};
    double est = wrap(sign[k] * M_PI / 2 - ph);
    s += std::sin(est);
    c += std::cos(est);
  }
  fit.phi = std::atan2(s, c);
  fit.visibility = 0.25 * (fit.curves[0].V + fit.curves[1].V + fit.curves[2].V + fit.curves[3].V);
  fit.rms_residual = std::sqrt(res2 / (4.0 * n));
  return fit;
}

double efficiency_ratio_from_visibility(const VisibilityFit& f) {
  double d3 = f.curves[0].A + f.curves[0].B + f.curves[2].A + f.curves[2].B;
  double d4 = f.curves[1].A + f.curves[1].B + f.curves[3].A + f.curves[3].B;
  if (d3 <= 0) throw AnalysisError("no D3 counts in the visibility curves");
  return d4 / d3;
}

}  // namespace qtele::analysis
