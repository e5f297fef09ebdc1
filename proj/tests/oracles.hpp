#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's numerical code; plain loops and a naive Gaussian solver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "clubconv/panel.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting, in long double.
inline Vec solve(Mat a, Vec b) {
  const std::size_t n = b.size();
  std::vector<std::vector<long double>> m(n, std::vector<long double>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a[i][j];
    m[i][n] = b[i];
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = m[r][c] / m[c][c];
      for (std::size_t j = c; j <= n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = m[i][n];
    for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * x[j];
    x[i] = static_cast<double>(s / m[i][i]);
  }
  return x;
}

// H(t) straight from the definition.
inline Vec cross_variance(const clubconv::Panel& p) {
  const auto& v = p.values();
  Vec H(v.cols());
  for (Eigen::Index t = 0; t < v.cols(); ++t) {
    double mean = 0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) mean += v(i, t);
    mean /= static_cast<double>(v.rows());
    double s = 0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) s += (v(i, t) / mean - 1) * (v(i, t) / mean - 1);
    H[t] = s / static_cast<double>(v.rows());
  }
  return H;
}

struct Line {
  double a;
  double b;
};

// log(H1/Ht) - 2 log log t on log t for t = start..T via the 2x2 normal equations.
inline Line logt_normal_equations(const Vec& H, int start) {
  const int T = static_cast<int>(H.size());
  double n = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (int t = start; t <= T; ++t) {
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(H[0] / H[t - 1]) - 2 * std::log(std::log(static_cast<double>(t)));
    n += 1;
    sx += x;
    sxx += x * x;
    sy += y;
    sxy += x * y;
  }
  const Vec coef = solve({{n, sx}, {sx, sxx}}, {sy, sxy});
  return {coef[0], coef[1]};
}

// Minimiser of |y - tau|^2 + lambda |D2 tau|^2, built densely.
inline Vec hp_dense(const Vec& y, double lambda) {
  const std::size_t n = y.size();
  Mat a(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  for (std::size_t r = 0; r + 2 < n; ++r) {
    const double d[3] = {1.0, -2.0, 1.0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a[r + i][r + j] += lambda * d[i] * d[j];
  }
  return solve(a, y);
}

inline Line ols_line(const Vec& y) {
  const std::size_t n = y.size();
  double sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sxx += x * x;
    sy += y[i];
    sxy += x * y[i];
  }
  const Vec c = solve({{static_cast<double>(n), sx}, {sx, sxx}}, {sy, sxy});
  return {c[0], c[1]};
}

// Composite Simpson rule on the standard normal density from -12 to z.
inline double normal_cdf_integral(double z, int panels = 20000) {
  const double lo = -12.0;
  const double h = (z - lo) / panels;
  auto f = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); };
  double s = f(lo) + f(z);
  for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double probit_loglik(const Mat& X, const Vec& y, const Vec& beta) {
  double ll = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double xb = 0;
    for (std::size_t j = 0; j < beta.size(); ++j) xb += X[i][j] * beta[j];
    const double p = 0.5 * std::erfc(-xb / std::sqrt(2.0));
    ll += y[i] > 0.5 ? std::log(p) : std::log1p(-p);
  }
  return ll;
}

// Nelder-Mead minimiser with restarts.
inline Vec nelder_mead(const std::function<double(const Vec&)>& f, Vec x0, double step = 0.5, int restarts = 6,
                       int max_iter = 20000, double ftol = 1e-15) {
  const std::size_t n = x0.size();
  for (int rs = 0; rs < restarts; ++rs) {
    std::vector<Vec> s(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) s[i + 1][i] += step;
    Vec fs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fs[i] = f(s[i]);
    for (int it = 0; it < max_iter; ++it) {
      std::vector<std::size_t> idx(n + 1);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
      std::vector<Vec> s2;
      Vec f2;
      for (auto k : idx) {
        s2.push_back(s[k]);
        f2.push_back(fs[k]);
      }
      s = s2;
      fs = f2;
      if (std::fabs(fs[n] - fs[0]) <= ftol * (std::fabs(fs[0]) + 1e-300)) break;
      Vec c(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c[j] += s[i][j] / static_cast<double>(n);
      auto along = [&](double t) {
        Vec p(n);
        for (std::size_t j = 0; j < n; ++j) p[j] = c[j] + t * (s[n][j] - c[j]);
        return p;
      };
      const Vec xr = along(-1.0);
      const double fr = f(xr);
      if (fr < fs[0]) {
        const Vec xe = along(-2.0);
        const double fe = f(xe);
        if (fe < fr) {
          s[n] = xe;
          fs[n] = fe;
        } else {
          s[n] = xr;
          fs[n] = fr;
        }
      } else if (fr < fs[n - 1]) {
        s[n] = xr;
        fs[n] = fr;
      } else {
        const Vec xc = fr < fs[n] ? along(-0.5) : along(0.5);
        const double fc = f(xc);
        if (fc < std::min(fr, fs[n])) {
          s[n] = xc;
          fs[n] = fc;
        } else {
          for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) s[i][j] = s[0][j] + 0.5 * (s[i][j] - s[0][j]);
            fs[i] = f(s[i]);
          }
        }
      }
    }
    x0 = s[0];
    step *= 0.1;
  }
  return x0;
}

// Random strictly positive panel with N units over T years.
inline clubconv::Panel random_panel(std::mt19937_64& rng, int N, int T) {
  std::uniform_real_distribution<double> level(1.0, 10.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd v(N, T);
  for (int i = 0; i < N; ++i) {
    double x = level(rng);
    const double drift = 0.05 * z(rng);
    for (int t = 0; t < T; ++t) {
      x *= std::exp(drift + 0.1 * z(rng));
      v(i, t) = x;
    }
  }
  std::vector<clubconv::UnitId> units;
  for (int i = 0; i < N; ++i) units.push_back({"U" + std::to_string(i), ""});
  std::vector<int> years(T);
  std::iota(years.begin(), years.end(), 2000);
  return clubconv::Panel(units, years, v);
}

inline clubconv::Panel make_panel(const Mat& rows, int first_year = 2000) {
  Eigen::MatrixXd v(rows.size(), rows.front().size());
  std::vector<clubconv::UnitId> units;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    units.push_back({"U" + std::to_string(i), ""});
    for (std::size_t t = 0; t < rows[i].size(); ++t) v(i, t) = rows[i][t];
  }
  std::vector<int> years(rows.front().size());
  std::iota(years.begin(), years.end(), first_year);
  return clubconv::Panel(units, years, v);
}

}  // namespace oracle
