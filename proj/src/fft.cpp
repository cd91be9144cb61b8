#include <cmath>
#include <numbers>

#include "mtsq/dft.hpp"

namespace mtsq::dft {

namespace {

constexpr std::size_t kNaiveBelow = 64;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle table e^{sign * 2 pi i k / n}, k < n, each entry computed directly.
std::vector<Complex> twiddles(std::size_t n, double sign) {
  std::vector<Complex> tw(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    tw[k] = {std::cos(angle), std::sin(angle)};
  }
  return tw;
}

void radix2(std::vector<Complex>& a, double sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const std::vector<Complex> tw = twiddles(n, sign);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[start + k];
        const Complex v = a[start + k + half] * tw[k * step];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

void naive(std::vector<Complex>& a, double sign) {
  const std::size_t n = a.size();
  const std::vector<Complex> tw = twiddles(n, sign);
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) acc += a[j] * tw[(j * k) % n];
    out[k] = acc;
  }
  a.swap(out);
}

void bluestein(std::vector<Complex>& a, double sign) {
  const std::size_t n = a.size();
  const std::size_t m = next_power_of_two(2 * n - 1);
  // chirp[k] = e^{sign * i pi k^2 / n}; k^2 reduced mod 2n to keep the angle small.
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n);
    const double angle = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<Complex> x(m), y(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    y[k] = std::conj(chirp[k]);
    y[m - k] = std::conj(chirp[k]);
  }
  radix2(x, -1.0);
  radix2(y, -1.0);
  for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
  radix2(x, 1.0);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

}  // namespace

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<Complex>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  const double sign = inverse ? 1.0 : -1.0;
  if (is_power_of_two(n)) {
    radix2(data, sign);
  } else if (n < kNaiveBelow) {
    naive(data, sign);
  } else {
    bluestein(data, sign);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : data) v *= scale;
  }
}

std::vector<Complex> forward(std::span<const double> x) {
  std::vector<Complex> out(x.begin(), x.end());
  fft(out, false);
  return out;
}

std::vector<Complex> forward(std::span<const Complex> x) {
  std::vector<Complex> out(x.begin(), x.end());
  fft(out, false);
  return out;
}

std::vector<Complex> inverse(std::span<const Complex> spectrum) {
  std::vector<Complex> out(spectrum.begin(), spectrum.end());
  fft(out, true);
  return out;
}

}  // namespace mtsq::dft
