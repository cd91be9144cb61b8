#include "mtsq/dft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace mtsq::dft {

namespace {

double twiddle_angle(std::size_t r, std::size_t n) {
  return 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
}

// e^{-2 pi i r / n}
std::vector<Complex> forward_table(std::size_t n) {
  std::vector<Complex> t(n);
  for (std::size_t r = 0; r < n; ++r) t[r] = std::polar(1.0, -twiddle_angle(r, n));
  return t;
}

Complex direct_coefficient(std::span<const double> x, std::size_t j, std::span<const Complex> table) {
  const std::size_t n = x.size();
  Complex acc{0.0, 0.0};
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += x[i] * table[r];
    r += j;
    if (r >= n) r %= n;
  }
  return acc;
}

}  // namespace

std::size_t coefficient_count(std::size_t qlen) { return qlen / 2 + 1; }

std::size_t first_admissible(Mode mode) { return mode == Mode::znorm ? 1 : 0; }

double fold_weight(std::size_t j, std::size_t qlen) {
  if (j == 0) return 1.0;
  if (qlen % 2 == 0 && j == qlen / 2) return 1.0;
  return 2.0;
}

ArdcTable uniform_ardc(std::size_t channels, std::size_t qlen, Mode mode) {
  ArdcTable table;
  table.channels = channels;
  table.qlen = qlen;
  table.mode = mode;
  table.uniform_fallback = true;
  const std::size_t count = coefficient_count(qlen);
  table.values.assign(channels * count, 0.0);
  const std::size_t first = first_admissible(mode);
  if (count <= first) return table;
  const double share = 1.0 / static_cast<double>(count - first);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = first; j < count; ++j) table.values[c * count + j] = share;
  }
  return table;
}

ArdcTable estimate_ardc(std::span<const Window> sample, std::size_t qlen, Mode mode) {
  if (qlen == 0) throw InvalidInput("estimate_ardc: qlen must be positive");
  const std::size_t channels = sample.empty() ? 0 : sample.front().channels;
  for (const auto& w : sample) {
    if (w.length != qlen || w.channels != channels) {
      throw InvalidInput("estimate_ardc: sample windows must share shape channels x qlen");
    }
  }
  if (sample.size() < 2) return uniform_ardc(channels, qlen, mode);

  const std::size_t count = coefficient_count(qlen);
  const std::size_t first = first_admissible(mode);
  // spectra[s][c][j] for admissible j
  std::vector<std::vector<Complex>> spectra(sample.size() * channels);
  for (std::size_t s = 0; s < sample.size(); ++s) {
    Window w = sample[s];
    normalize_window(w, mode);
    for (std::size_t c = 0; c < channels; ++c) {
      auto full = forward(w.channel(c));
      full.resize(count);
      spectra[s * channels + c] = std::move(full);
    }
  }

  ArdcTable table;
  table.channels = channels;
  table.qlen = qlen;
  table.mode = mode;
  table.values.assign(channels * count, 0.0);
  std::vector<double> contrib(count);
  for (std::size_t c = 0; c < channels; ++c) {
    std::size_t pairs = 0;
    double* row = table.values.data() + c * count;
    for (std::size_t a = 0; a < sample.size(); ++a) {
      for (std::size_t b = a + 1; b < sample.size(); ++b) {
        const auto& xa = spectra[a * channels + c];
        const auto& xb = spectra[b * channels + c];
        double total = 0.0;
        for (std::size_t j = first; j < count; ++j) {
          contrib[j] = fold_weight(j, qlen) * std::norm(xa[j] - xb[j]);
          total += contrib[j];
        }
        if (!(total > 0.0)) continue;
        for (std::size_t j = first; j < count; ++j) row[j] += contrib[j] / total;
        ++pairs;
      }
    }
    if (pairs == 0) {
      const ArdcTable uniform = uniform_ardc(1, qlen, mode);
      std::copy(uniform.values.begin(), uniform.values.end(), row);
      table.uniform_fallback = true;
      continue;
    }
    for (std::size_t j = 0; j < count; ++j) row[j] /= static_cast<double>(pairs);
  }
  return table;
}

CoefficientPlan::CoefficientPlan(ArdcTable ardc, double d_target,
                                 std::vector<std::vector<std::uint32_t>> selected)
    : ardc_(std::move(ardc)), d_target_(d_target), selected_(std::move(selected)) {
  if (selected_.size() != ardc_.channels) {
    throw InvalidInput("coefficient plan: channel count mismatch");
  }
  offsets_.assign(selected_.size() + 1, 0);
  const std::size_t count = coefficient_count(ardc_.qlen);
  for (std::size_t c = 0; c < selected_.size(); ++c) {
    const auto& sel = selected_[c];
    for (std::size_t i = 0; i < sel.size(); ++i) {
      if (sel[i] >= count || sel[i] < first_admissible(ardc_.mode) || (i > 0 && sel[i] <= sel[i - 1])) {
        throw InvalidInput("coefficient plan: channel " + std::to_string(c) +
                           " has invalid or unsorted coefficient indices");
      }
    }
    offsets_[c + 1] = offsets_[c] + 2 * sel.size();
  }
}

std::vector<std::size_t> CoefficientPlan::dimensions_for(std::span<const std::size_t> channel_ids) const {
  std::vector<std::size_t> dims;
  for (std::size_t ch : channel_ids) {
    if (ch >= channels()) throw InvalidInput("coefficient plan: channel out of range");
    for (std::size_t d = offsets_[ch]; d < offsets_[ch + 1]; ++d) dims.push_back(d);
  }
  return dims;
}

CoefficientPlan select_coefficients(const ArdcTable& ardc, double d_target) {
  if (!(d_target > 0.0 && d_target <= 1.0)) {
    throw InvalidInput("d_target must lie in (0, 1]");
  }
  const std::size_t count = ardc.coefficients();
  const std::size_t first = first_admissible(ardc.mode);
  if (count <= first) {
    throw InvalidInput("qlen " + std::to_string(ardc.qlen) + " leaves no admissible coefficient in " +
                       std::string(to_string(ardc.mode)) + " mode");
  }
  std::vector<std::vector<std::uint32_t>> selected(ardc.channels);
  for (std::size_t c = 0; c < ardc.channels; ++c) {
    std::vector<std::uint32_t> order(count - first);
    std::iota(order.begin(), order.end(), static_cast<std::uint32_t>(first));
    if (d_target >= 1.0) {
      selected[c] = std::move(order);
      continue;
    }
    const auto row = ardc.channel(c);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return row[a] > row[b]; });
    double cumulative = 0.0;
    auto& sel = selected[c];
    for (std::uint32_t j : order) {
      sel.push_back(j);
      cumulative += row[j];
      if (cumulative >= d_target - 1e-12) break;
    }
    std::sort(sel.begin(), sel.end());
  }
  return CoefficientPlan(ardc, d_target, std::move(selected));
}

FeatureVector extract_features(const Window& normalized, const CoefficientPlan& plan,
                               std::span<const std::size_t> channel_ids) {
  const std::size_t qlen = plan.qlen();
  if (normalized.length != qlen) throw InvalidInput("extract_features: window length != qlen");
  const std::size_t rows = channel_ids.empty() ? plan.channels() : channel_ids.size();
  if (normalized.channels != rows) throw InvalidInput("extract_features: row count mismatch");
  const auto table = forward_table(qlen);
  FeatureVector out(plan.dimensions(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t ch = channel_ids.empty() ? r : channel_ids[r];
    if (ch >= plan.channels()) throw InvalidInput("extract_features: channel out of range");
    std::size_t d = plan.channel_offset(ch);
    for (std::uint32_t j : plan.selected(ch)) {
      const Complex x = direct_coefficient(normalized.channel(r), j, table);
      const double scale = std::sqrt(fold_weight(j, qlen));
      out[d++] = scale * x.real();
      out[d++] = scale * x.imag();
    }
  }
  return out;
}

FeatureTable sliding_features(const MultivariateTimeSeries& series, const CoefficientPlan& plan,
                              const std::vector<SlidingStats>* stats) {
  const std::size_t qlen = plan.qlen();
  const std::size_t m = series.length();
  if (m < qlen) {
    throw InvalidInput("series " + std::to_string(series.id()) + " shorter than qlen");
  }
  if (series.channel_count() != plan.channels()) {
    throw InvalidInput("sliding_features: channel count differs from plan");
  }
  const bool znorm = plan.mode() == Mode::znorm;
  std::vector<SlidingStats> local_stats;
  if (znorm && stats == nullptr) {
    for (std::size_t c = 0; c < series.channel_count(); ++c) {
      local_stats.push_back(sliding_stats(series.channel(c), qlen));
    }
    stats = &local_stats;
  }

  FeatureTable table;
  table.rows = m - qlen + 1;
  table.dims = plan.dimensions();
  table.data.assign(table.rows * table.dims, 0.0);
  const auto fwd = forward_table(qlen);
  std::vector<double> centered(m);

  for (std::size_t c = 0; c < series.channel_count(); ++c) {
    const auto& sel = plan.selected(c);
    if (sel.empty()) continue;
    const auto x = series.channel(c);
    const double mu = moments(x).mean;
    for (std::size_t i = 0; i < m; ++i) centered[i] = x[i] - mu;
    const std::span<const double> u(centered);

    std::vector<Complex> rotate(sel.size());
    std::vector<double> scale(sel.size());
    for (std::size_t s = 0; s < sel.size(); ++s) {
      rotate[s] = std::polar(1.0, twiddle_angle(sel[s], qlen));
      scale[s] = std::sqrt(fold_weight(sel[s], qlen));
    }
    std::vector<Complex> coeffs(sel.size());
    const std::size_t base = plan.channel_offset(c);

    for (std::size_t i = 0; i < table.rows; ++i) {
      if (i % kSlidingRefreshInterval == 0) {
        for (std::size_t s = 0; s < sel.size(); ++s) {
          coeffs[s] = direct_coefficient(u.subspan(i, qlen), sel[s], fwd);
        }
      } else {
        const double delta = u[i + qlen - 1] - u[i - 1];
        for (std::size_t s = 0; s < sel.size(); ++s) coeffs[s] = (coeffs[s] + delta) * rotate[s];
      }
      auto row = table.row(i);
      double inv_sigma = 1.0;
      if (znorm) {
        const double sigma = (*stats)[c].stddev[i];
        inv_sigma = sigma <= kZeroVarianceEpsilon ? 0.0 : 1.0 / sigma;
      }
      for (std::size_t s = 0; s < sel.size(); ++s) {
        Complex v = coeffs[s];
        if (sel[s] == 0) v += static_cast<double>(qlen) * mu;  // only reachable in raw mode
        v *= inv_sigma;
        row[base + 2 * s] = scale[s] * v.real();
        row[base + 2 * s + 1] = scale[s] * v.imag();
      }
    }
  }
  return table;
}

double dft_lower_bound(std::span<const double> fa, std::span<const double> fb,
                       const CoefficientPlan& plan, std::span<const std::size_t> channel_ids) {
  if (fa.size() != plan.dimensions() || fb.size() != plan.dimensions()) {
    throw InvalidInput("dft_lower_bound: feature vectors do not match the plan");
  }
  double sum = 0.0;
  for (std::size_t ch : channel_ids) {
    if (ch >= plan.channels()) throw InvalidInput("dft_lower_bound: channel out of range");
    const std::size_t end = plan.channel_offset(ch) + plan.channel_dimensions(ch);
    for (std::size_t d = plan.channel_offset(ch); d < end; ++d) {
      const double diff = fa[d] - fb[d];
      sum += diff * diff;
    }
  }
  return std::sqrt(sum / static_cast<double>(plan.qlen()));
}

Reconstructor::Reconstructor(const CoefficientPlan& plan) : plan_(&plan) {
  const std::size_t qlen = plan.qlen();
  cos_.resize(plan.channels());
  sin_.resize(plan.channels());
  for (std::size_t c = 0; c < plan.channels(); ++c) {
    const auto& sel = plan.selected(c);
    cos_[c].resize(sel.size() * qlen);
    sin_[c].resize(sel.size() * qlen);
    for (std::size_t s = 0; s < sel.size(); ++s) {
      // Feature slots carry sqrt(w) X; the pair (j, qlen - j) contributes w Re(X e^{+i theta}) / qlen.
      const double amp = std::sqrt(fold_weight(sel[s], qlen)) / static_cast<double>(qlen);
      for (std::size_t n = 0; n < qlen; ++n) {
        const double angle = twiddle_angle((static_cast<std::size_t>(sel[s]) * n) % qlen, qlen);
        cos_[c][s * qlen + n] = amp * std::cos(angle);
        sin_[c][s * qlen + n] = amp * std::sin(angle);
      }
    }
  }
}

void Reconstructor::reconstruct(std::span<const double> feature, std::size_t channel,
                                std::span<double> out) const {
  const std::size_t qlen = plan_->qlen();
  std::fill(out.begin(), out.end(), 0.0);
  const auto& sel = plan_->selected(channel);
  const std::size_t base = plan_->channel_offset(channel);
  for (std::size_t s = 0; s < sel.size(); ++s) {
    const double re = feature[base + 2 * s];
    const double im = feature[base + 2 * s + 1];
    const double* cs = cos_[channel].data() + s * qlen;
    const double* sn = sin_[channel].data() + s * qlen;
    for (std::size_t n = 0; n < qlen; ++n) out[n] += re * cs[n] - im * sn[n];
  }
}

Window remainder_from_features(const Window& normalized, std::span<const double> feature,
                               const Reconstructor& reconstructor,
                               std::span<const std::size_t> channel_ids) {
  Window rem = normalized;
  std::vector<double> recon(normalized.length);
  for (std::size_t r = 0; r < normalized.channels; ++r) {
    const std::size_t ch = channel_ids.empty() ? r : channel_ids[r];
    reconstructor.reconstruct(feature, ch, recon);
    auto row = rem.channel(r);
    for (std::size_t n = 0; n < row.size(); ++n) row[n] -= recon[n];
  }
  return rem;
}

Window compute_remainder(const Window& normalized, const CoefficientPlan& plan) {
  const FeatureVector f = extract_features(normalized, plan);
  const Reconstructor reconstructor(plan);
  return remainder_from_features(normalized, f, reconstructor);
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

PivotSet build_pivots(std::span<const Window> remainders, std::size_t pivot_count, std::uint64_t seed,
                      Mode mode, std::size_t max_iterations) {
  PivotSet set;
  set.mode = mode;
  if (pivot_count == 0) return set;
  if (remainders.empty()) throw InvalidInput("build_pivots: empty remainder sample");
  const std::size_t n = remainders.size();
  if (pivot_count > n) {
    warn("pivot count " + std::to_string(pivot_count) + " exceeds sample size " + std::to_string(n) +
         "; clamping");
    pivot_count = n;
  }
  const std::size_t dim = remainders.front().values.size();
  for (const auto& r : remainders) {
    if (r.values.size() != dim) throw InvalidInput("build_pivots: remainders differ in shape");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding
  std::vector<std::size_t> chosen;
  chosen.push_back(static_cast<std::size_t>(unit(rng) * static_cast<double>(n)) % n);
  std::vector<double> nearest(n, kInfinity);
  while (chosen.size() < pivot_count) {
    const auto& last = remainders[chosen.back()].values;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(remainders[i].values, last));
      total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (nearest[i] > 0.0 && acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a chosen centre; take the first unused index.
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
  }

  std::vector<std::vector<double>> centres;
  for (std::size_t idx : chosen) centres.push_back(remainders[idx].values);

  std::vector<std::size_t> assignment(n, pivot_count);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = kInfinity;
      for (std::size_t k = 0; k < centres.size(); ++k) {
        const double d = squared_distance(remainders[i].values, centres[k]);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    std::vector<std::vector<double>> sums(centres.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(centres.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += remainders[i].values[d];
      ++counts[assignment[i]];
    }
    for (std::size_t k = 0; k < centres.size(); ++k) {
      if (counts[k] == 0) continue;  // empty cluster keeps its centre
      for (std::size_t d = 0; d < dim; ++d) centres[k][d] = sums[k][d] / static_cast<double>(counts[k]);
    }
  }

  for (auto& c : centres) {
    Window w(remainders.front().channels, remainders.front().length);
    w.values = std::move(c);
    set.pivots.push_back(std::move(w));
  }
  return set;
}

std::vector<double> pivot_channel_distances(const Window& remainder, const PivotSet& pivots,
                                            std::span<const std::size_t> channel_ids) {
  const std::size_t rows = remainder.channels;
  std::vector<double> out(pivots.size() * rows);
  for (std::size_t p = 0; p < pivots.size(); ++p) {
    const Window& pivot = pivots.pivots[p];
    if (pivot.length != remainder.length) {
      throw InvalidInput("pivot_channel_distances: length mismatch");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t ch = channel_ids.empty() ? r : channel_ids[r];
      out[p * rows + r] = std::sqrt(squared_distance(remainder.channel(r), pivot.channel(ch)));
    }
  }
  return out;
}

double corrected_lower_bound(double feature_dist_sq, std::span<const Interval> pivot_intervals,
                             std::span<const double> query_pivot_dist, std::size_t qlen) {
  if (pivot_intervals.size() != query_pivot_dist.size()) {
    throw InvalidInput("corrected_lower_bound: one query distance per pivot interval required");
  }
  double correction = 0.0;
  for (std::size_t p = 0; p < pivot_intervals.size(); ++p) {
    const double gap = interval_gap(query_pivot_dist[p], pivot_intervals[p]);
    correction = std::max(correction, gap * gap);
  }
  return feature_dist_sq / static_cast<double>(qlen) + correction;
}

double pivot_correction(std::span<const double> intervals, std::size_t channel_count,
                        std::span<const double> query_dists, std::span<const std::size_t> channel_ids) {
  const std::size_t rows = channel_ids.size();
  if (rows == 0) return 0.0;
  const std::size_t pivots = query_dists.size() / rows;
  double best = 0.0;
  for (std::size_t p = 0; p < pivots; ++p) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* iv = intervals.data() + 2 * (p * channel_count + channel_ids[r]);
      const double gap = interval_gap(query_dists[p * rows + r], Interval{iv[0], iv[1]});
      sum += gap * gap;
    }
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace mtsq::dft
