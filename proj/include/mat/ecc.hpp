#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mat/core.hpp"
#include "mat/image.hpp"
#include "mat/warp.hpp"

namespace mat {

struct EccParams {
  int max_iterations = 50;
  double epsilon = 1e-5;  // stop when the parameter increment norm drops below this
  int pyramid_levels = 3;
  int working_width = 640;

  void validate() const {
    if (max_iterations <= 0 || !(epsilon > 0.0) || pyramid_levels <= 0 || working_width <= 0) {
      throw InvalidArgument("EccParams: all fields must be strictly positive");
    }
  }
};

enum class EccStatus {
  kConverged,      // increment fell below epsilon, or the objective stopped improving
  kMaxIterations,  // iteration budget exhausted at the finest level
  kSingular,       // normal equations singular or support too small
  kImplausible,    // result outside the warp sanity bound
};

struct EccResult {
  AffineWarp warp;
  double correlation = 0.0;
  EccStatus status = EccStatus::kSingular;
  int iterations = 0;
  // Finest-level correlation at the start and after every accepted step; non-decreasing.
  std::vector<double> trace;

  bool ok() const { return status == EccStatus::kConverged; }
};

namespace detail {

struct FloatImage {
  int w = 0;
  int h = 0;
  std::vector<float> px;

  float at(int x, int y) const { return px[static_cast<std::size_t>(y) * w + x]; }
  float& at(int x, int y) { return px[static_cast<std::size_t>(y) * w + x]; }

  // Caller guarantees 0 <= x <= w-1 and 0 <= y <= h-1.
  float bilinear(double x, double y) const {
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    x0 = std::min(x0, w - 2);
    y0 = std::min(y0, h - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    const float* r0 = &px[static_cast<std::size_t>(y0) * w + x0];
    const float* r1 = r0 + w;
    const double top = r0[0] + fx * (r0[1] - r0[0]);
    const double bot = r1[0] + fx * (r1[1] - r1[0]);
    return static_cast<float>(top + fy * (bot - top));
  }
};

inline FloatImage to_float(const GrayImage& img) {
  FloatImage f{img.width(), img.height(), {}};
  f.px.assign(img.pixels().begin(), img.pixels().end());
  return f;
}

// Separable 5-tap binomial smoothing with clamped borders.
inline FloatImage smooth(const FloatImage& in) {
  static constexpr float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  FloatImage tmp = in;
  FloatImage out = in;
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      float acc = 0.f;
      for (int d = -2; d <= 2; ++d) acc += k[d + 2] * in.at(std::clamp(x + d, 0, in.w - 1), y);
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      float acc = 0.f;
      for (int d = -2; d <= 2; ++d) acc += k[d + 2] * tmp.at(x, std::clamp(y + d, 0, in.h - 1));
      out.at(x, y) = acc;
    }
  }
  return out;
}

// 2x2 box decimation; output pixel k covers input pixels 2k and 2k+1.
inline FloatImage halve(const FloatImage& in) {
  FloatImage out{in.w / 2, in.h / 2, {}};
  out.px.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(x, y) = 0.25f * (in.at(2 * x, 2 * y) + in.at(2 * x + 1, 2 * y) +
                              in.at(2 * x, 2 * y + 1) + in.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

inline void gradients(const FloatImage& in, FloatImage& gx, FloatImage& gy) {
  gx = FloatImage{in.w, in.h, std::vector<float>(in.px.size())};
  gy = gx;
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, in.w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, in.h - 1);
      gx.at(x, y) = (in.at(xr, y) - in.at(xl, y)) / static_cast<float>(xr - xl);
      gy.at(x, y) = (in.at(x, yd) - in.at(x, yu)) / static_cast<float>(yd - yu);
    }
  }
}

// Coordinates of a level-(l+1) pixel expressed at level l: x_l = 2 x_{l+1} + 0.5.
inline AffineWarp level_up() { return {{2.0, 0.0, 0.5, 0.0, 2.0, 0.5}}; }

// Rescales a warp expressed in coarse coordinates to the next finer level.
inline AffineWarp to_finer(const AffineWarp& coarse) {
  const AffineWarp s = level_up();
  return compose(compose(s, coarse), invert_warp(s));
}

inline AffineWarp to_coarser(const AffineWarp& fine) {
  const AffineWarp s = level_up();
  return compose(compose(invert_warp(s), fine), s);
}

struct LevelOutcome {
  EccStatus status = EccStatus::kSingular;
  double correlation = 0.0;
  int iterations = 0;
};

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Forward-additive ECC iterations at one pyramid level. `warp` is refined in place.
// Steps that do not raise the correlation are halved up to kBacktracks times.
inline LevelOutcome align_level(const FloatImage& tmpl, const FloatImage& input, AffineWarp& warp,
                                const EccParams& params, std::vector<double>* trace) {
  FloatImage gx, gy;
  gradients(input, gx, gy);

  constexpr int kMargin = 1;
  constexpr int kBacktracks = 6;
  constexpr std::size_t kMinSupport = 36;
  const double max_x = input.w - 1.0;
  const double max_y = input.h - 1.0;

  std::vector<double> t_vals, i_vals;
  std::vector<Vector6d> jac;
  const std::size_t cap = static_cast<std::size_t>(tmpl.w) * tmpl.h;
  t_vals.reserve(cap);
  i_vals.reserve(cap);
  jac.reserve(cap);

  auto inside = [&](const std::array<double, 2>& p) {
    return p[0] >= 0.0 && p[0] <= max_x && p[1] >= 0.0 && p[1] <= max_y;
  };

  // Samples the warped input (and its Jacobian) over the valid support.
  auto sample = [&](const AffineWarp& w) {
    t_vals.clear();
    i_vals.clear();
    jac.clear();
    for (int y = kMargin; y < tmpl.h - kMargin; ++y) {
      for (int x = kMargin; x < tmpl.w - kMargin; ++x) {
        const auto p = w.apply(x, y);
        if (!inside(p)) continue;
        const double gxv = gx.bilinear(p[0], p[1]);
        const double gyv = gy.bilinear(p[0], p[1]);
        t_vals.push_back(tmpl.at(x, y));
        i_vals.push_back(input.bilinear(p[0], p[1]));
        Vector6d j;
        j << gxv * x, gxv * y, gxv, gyv * x, gyv * y, gyv;
        jac.push_back(j);
      }
    }
  };

  // Correlation at `w`, or NaN when the support is too small or flat.
  auto correlation = [&](const AffineWarp& w) {
    double st = 0.0, si = 0.0, stt = 0.0, sii = 0.0, sti = 0.0;
    std::size_t n = 0;
    for (int y = kMargin; y < tmpl.h - kMargin; ++y) {
      for (int x = kMargin; x < tmpl.w - kMargin; ++x) {
        const auto p = w.apply(x, y);
        if (!inside(p)) continue;
        const double tv = tmpl.at(x, y);
        const double iv = input.bilinear(p[0], p[1]);
        st += tv;
        si += iv;
        stt += tv * tv;
        sii += iv * iv;
        sti += tv * iv;
        ++n;
      }
    }
    if (n < kMinSupport) return std::numeric_limits<double>::quiet_NaN();
    const double dn = static_cast<double>(n);
    const double tn = stt - st * st / dn;
    const double in = sii - si * si / dn;
    if (!(tn > 0.0) || !(in > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (sti - st * si / dn) / std::sqrt(tn * in);
  };

  LevelOutcome outcome;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    sample(warp);
    const std::size_t n = t_vals.size();
    if (n < kMinSupport) {
      outcome.status = EccStatus::kSingular;
      return outcome;
    }
    double t_mean = 0.0, i_mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      t_mean += t_vals[k];
      i_mean += i_vals[k];
    }
    t_mean /= static_cast<double>(n);
    i_mean /= static_cast<double>(n);

    Matrix6d hessian = Matrix6d::Zero();
    Vector6d img_proj = Vector6d::Zero();
    Vector6d tmpl_proj = Vector6d::Zero();
    double t_norm2 = 0.0, i_norm2 = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double tz = t_vals[k] - t_mean;
      const double iz = i_vals[k] - i_mean;
      t_norm2 += tz * tz;
      i_norm2 += iz * iz;
      cross += tz * iz;
      hessian.selfadjointView<Eigen::Lower>().rankUpdate(jac[k]);
      img_proj += iz * jac[k];
      tmpl_proj += tz * jac[k];
    }
    hessian = hessian.selfadjointView<Eigen::Lower>();
    if (!(t_norm2 > 0.0) || !(i_norm2 > 0.0)) {
      outcome.status = EccStatus::kSingular;
      return outcome;
    }
    const double rho = cross / std::sqrt(t_norm2 * i_norm2);
    if (iter == 0 && trace != nullptr) trace->push_back(rho);
    outcome.correlation = rho;
    outcome.iterations = iter + 1;

    Eigen::LDLT<Matrix6d> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
      outcome.status = EccStatus::kSingular;
      return outcome;
    }
    const Vector6d hinv_img = ldlt.solve(img_proj);
    const Vector6d hinv_tmpl = ldlt.solve(tmpl_proj);

    double lambda = 0.0;
    const double lambda_n = i_norm2 - img_proj.dot(hinv_img);
    const double lambda_d = cross - tmpl_proj.dot(hinv_img);
    if (lambda_d > 0.0) {
      lambda = lambda_n / lambda_d;
    } else {
      // Far from the optimum: pick the step that still increases the correlation.
      const double tpt = tmpl_proj.dot(hinv_tmpl);
      if (!(tpt > 0.0)) {
        outcome.status = EccStatus::kSingular;
        return outcome;
      }
      const double l1 = std::sqrt(std::max(img_proj.dot(hinv_img), 0.0) / tpt);
      const double l2 = (img_proj.dot(hinv_tmpl) - cross) / tpt;
      lambda = std::max(l1, l2);
    }

    Vector6d delta = lambda * hinv_tmpl - hinv_img;
    if (!delta.allFinite()) {
      outcome.status = EccStatus::kSingular;
      return outcome;
    }

    bool accepted = false;
    for (int b = 0; b <= kBacktracks; ++b, delta *= 0.5) {
      AffineWarp candidate = warp;
      for (int k = 0; k < 6; ++k) candidate.m[k] += delta(k);
      const double next = correlation(candidate);
      if (next > rho) {
        warp = candidate;
        outcome.correlation = next;
        if (trace != nullptr) trace->push_back(next);
        accepted = true;
        break;
      }
      if (delta.norm() < params.epsilon) break;
    }
    if (!accepted || delta.norm() < params.epsilon) {
      outcome.status = EccStatus::kConverged;
      return outcome;
    }
  }
  outcome.status = EccStatus::kMaxIterations;
  return outcome;
}

}  // namespace detail

// Estimates the affine warp W with cur(W(x)) ≈ prev(x), i.e. W maps previous-frame
// coordinates to current-frame coordinates, by maximizing the enhanced correlation
// coefficient coarse-to-fine. Callers should treat any non-converged status as a
// static camera.
inline EccResult ecc_align(const GrayImage& prev, const GrayImage& cur, const EccParams& params = {}) {
  params.validate();
  if (prev.width() != cur.width() || prev.height() != cur.height()) {
    throw InvalidArgument("ecc_align: images differ in size");
  }
  if (prev.width() < 8 || prev.height() < 8) throw InvalidArgument("ecc_align: images smaller than 8x8");

  std::vector<detail::FloatImage> tmpl_pyr{detail::smooth(detail::to_float(prev))};
  std::vector<detail::FloatImage> input_pyr{detail::smooth(detail::to_float(cur))};

  // Decimate until the working width cap holds; these levels are not optimized.
  int skipped = 0;
  while (tmpl_pyr.back().w > params.working_width && tmpl_pyr.back().h >= 16) {
    tmpl_pyr.back() = detail::smooth(detail::halve(tmpl_pyr.back()));
    input_pyr.back() = detail::smooth(detail::halve(input_pyr.back()));
    ++skipped;
  }
  for (int l = 1; l < params.pyramid_levels; ++l) {
    const auto& t = tmpl_pyr.back();
    if (std::min(t.w, t.h) / 2 < 8) break;
    tmpl_pyr.push_back(detail::smooth(detail::halve(t)));
    input_pyr.push_back(detail::smooth(detail::halve(input_pyr.back())));
  }

  EccResult result;
  AffineWarp warp = AffineWarp::identity();
  for (std::size_t l = tmpl_pyr.size(); l-- > 0;) {
    const bool finest = (l == 0);
    const AffineWarp start = warp;
    const auto outcome = detail::align_level(tmpl_pyr[l], input_pyr[l], warp, params,
                                             finest ? &result.trace : nullptr);
    result.iterations += outcome.iterations;
    if (outcome.status == EccStatus::kSingular) {
      if (finest) {
        result.status = EccStatus::kSingular;
        return result;
      }
      // A coarse level that breaks down hands its starting estimate to the next level.
      warp = start;
    }
    if (finest) {
      result.status = outcome.status;
      result.correlation = outcome.correlation;
    } else {
      warp = detail::to_finer(warp);
    }
  }
  for (int s = 0; s < skipped; ++s) warp = detail::to_finer(warp);

  result.warp = warp;
  if (!warp.plausible()) result.status = EccStatus::kImplausible;
  return result;
}

}  // namespace mat
