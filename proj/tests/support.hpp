#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "qdyn/grid.hpp"

namespace qdyn::testing {

// Closed-form Hermite polynomials, kept independent of the library's
// recurrence.
inline double hermite_closed(int v, double x) {
  switch (v) {
    case 0: return 1.0;
    case 1: return 2 * x;
    case 2: return 4 * x * x - 2;
    case 3: return 8 * x * x * x - 12 * x;
    case 4: return 16 * std::pow(x, 4) - 48 * x * x + 12;
    case 5: return 32 * std::pow(x, 5) - 160 * std::pow(x, 3) + 120 * x;
    default: return std::nan("");
  }
}

// Harmonic-oscillator eigenfunction value (continuum normalization).
inline double ho_eigenfunction(int v, double x, double mass, double omega) {
  const double a = std::sqrt(mass * omega);
  double fact = 1.0;
  for (int k = 2; k <= v; ++k) fact *= k;
  const double norm = std::pow(mass * omega / std::numbers::pi, 0.25) / std::sqrt(std::pow(2.0, v) * fact);
  return norm * hermite_closed(v, a * x) * std::exp(-0.5 * a * a * x * x);
}

// Grid amplitudes of the eigenfunction, sqrt(dx)-weighted, not renormalized.
inline std::vector<Complex> ho_grid(const GridSpec& g, int v, double mass, double omega, double shift = 0.0) {
  std::vector<Complex> a(g.size());
  const double w = std::sqrt(g.spacing(0));
  for (std::size_t i = 0; i < g.size(); ++i) a[i] = w * ho_eigenfunction(v, g.coordinate(0, i) - shift, mass, omega);
  return a;
}

inline Complex dot(const std::vector<Complex>& a, std::span<const Complex> b) {
  Complex s{0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline std::vector<Complex> random_state(std::size_t size, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<Complex> v(size);
  double n = 0;
  for (auto& x : v) {
    x = {g(rng), g(rng)};
    n += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Closed-form transmission through V0 sech^2(x / a) at energy E (hbar = 1).
inline double eckart_transmission(double E, double V0, double a, double mass) {
  const double k = std::sqrt(2 * mass * E);
  const double s = std::pow(std::sinh(std::numbers::pi * k * a), 2);
  const double q = 8 * mass * V0 * a * a;
  const double c = q > 1 ? std::pow(std::cosh(std::numbers::pi / 2 * std::sqrt(q - 1)), 2)
                         : std::pow(std::cos(std::numbers::pi / 2 * std::sqrt(1 - q)), 2);
  return s / (s + c);
}

// Position-space standard deviation along axis 0 of a 1D state.
inline double position_spread(const GridWavefunction& psi) {
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double x = psi.spec().coordinate(0, i), p = std::norm(psi[i]);
    m1 += p * x, m2 += p * x * x;
  }
  return std::sqrt(m2 - m1 * m1);
}

// Momentum moments of a 1D state through a plain DFT (independent of FFTW).
inline std::pair<double, double> momentum_moments(const GridWavefunction& psi) {
  const auto& g = psi.spec();
  const std::size_t N = g.size();
  double m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < N; ++k) {
    Complex c{0, 0};
    for (std::size_t x = 0; x < N; ++x) c += psi[x] * std::polar(1.0, -2 * std::numbers::pi * double(k * x % N) / N);
    const double p = std::norm(c) / N, mom = g.momentum(0, k);
    m1 += p * mom, m2 += p * mom * mom;
  }
  return {m1, m2};
}

}  // namespace qdyn::testing
