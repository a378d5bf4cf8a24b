#pragma once

// Independent reference computations. Nothing here calls into the library
// under test; these use plain loops and textbook formulas.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix invert(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw std::runtime_error("singular");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

struct OlsResult {
  std::vector<double> beta;
  Matrix hc1;
  double rss = 0.0;
};

// Normal equations plus the explicit sandwich n/(n-p) B M B.
inline OlsResult brute_force_ols(const std::vector<double>& y, const Matrix& x) {
  const std::size_t n = y.size(), p = x.front().size();
  Matrix xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) {
      xty[a] += x[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b) xtx[a][b] += x[i][a] * x[i][b];
    }
  const Matrix bread = invert(xtx);
  OlsResult r;
  r.beta.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) r.beta[a] += bread[a][b] * xty[b];
  Matrix meat(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t a = 0; a < p; ++a) fit += x[i][a] * r.beta[a];
    const double e = y[i] - fit;
    r.rss += e * e;
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) meat[a][b] += e * e * x[i][a] * x[i][b];
  }
  Matrix tmp(p, std::vector<double>(p, 0.0));
  r.hc1.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      for (std::size_t k = 0; k < p; ++k) tmp[a][b] += bread[a][k] * meat[k][b];
  const double scale = static_cast<double>(n) / static_cast<double>(n - p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      for (std::size_t k = 0; k < p; ++k) r.hc1[a][b] += tmp[a][k] * bread[k][b];
      r.hc1[a][b] *= scale;
    }
  return r;
}

// K0(x) = int_0^inf exp(-x cosh t) dt, composite Simpson.
inline double k0_integral(double x) {
  const double upper = std::acosh(std::max(1.0, 750.0 / x)) + 1.0;
  const int n = 200000;
  const double h = upper / n;
  double s = std::exp(-x) + std::exp(-x * std::cosh(upper));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * std::exp(-x * std::cosh(i * h));
  return s * h / 3.0;
}

// Great-circle distance via the Vincenty special case for a sphere (atan2 form).
inline double sphere_distance(double lat1, double lon1, double lat2, double lon2) {
  const double d2r = std::numbers::pi / 180.0;
  const double p1 = lat1 * d2r, p2 = lat2 * d2r, dl = (lon2 - lon1) * d2r;
  const double a = std::cos(p2) * std::sin(dl);
  const double b = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  const double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return 6371.0 * std::atan2(std::hypot(a, b), c);
}

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
