#include "ramp/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ramp {

namespace {

double simplex_diameter(const std::vector<VecX>& pts) {
  double d = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    d = std::max(d, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
  }
  return d;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const VecX&)>& f, const VecX& x0,
                             const NelderMeadOptions& o) {
  const int n = static_cast<int>(x0.size());
  NelderMeadResult res;
  auto eval = [&](const VecX& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  std::vector<VecX> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += o.initial_step;
  for (int i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<int> order(n + 1);
  auto sort = [&] {
    std::iota(order.begin(), order.end(), 0);
    // stable so that ties keep the earlier vertex first
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    std::vector<VecX> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[order[i]];
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  sort();
  for (res.iterations = 0; res.iterations < o.max_iterations; ++res.iterations) {
    if (simplex_diameter(pts) < o.diameter_tolerance) {
      res.converged = true;
      break;
    }
    VecX centroid = VecX::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    const VecX xr = centroid + o.reflection * (centroid - pts[n]);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const VecX xe = centroid + o.expansion * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const bool outside = fr < vals[n];
      const VecX xc = outside ? VecX(centroid + o.contraction * (xr - centroid))
                              : VecX(centroid + o.contraction * (pts[n] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[n])) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + o.shrink * (pts[i] - pts[0]);
          vals[i] = eval(pts[i]);
        }
      }
    }
    sort();
    res.history.push_back(vals[0]);
  }
  if (!res.converged && simplex_diameter(pts) < o.diameter_tolerance) res.converged = true;
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

}  // namespace ramp
