#include "owaic/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "owaic/errors.hpp"
#include "owaic/stream.hpp"

namespace owaic {

std::vector<double> HMatrix::column(std::size_t s) const {
  std::vector<double> h(elements_);
  for (std::size_t m = 0; m < elements_; ++m) h[m] = at(m, s);
  return h;
}

double batch_log_mean_exp(std::span<const double> row) {
  if (row.empty()) throw InsufficientSamplesError("log-mean-exp of an empty row");
  const double mx = *std::max_element(row.begin(), row.end());
  if (std::isinf(mx)) return mx;
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - mx);
  return mx + std::log(sum) - std::log(static_cast<double>(row.size()));
}

double two_pass_variance(std::span<const double> row) {
  if (row.size() < 2) throw InsufficientSamplesError("variance needs at least 2 values");
  double mean = 0.0;
  for (double v : row) {
    if (std::isinf(v)) return std::numeric_limits<double>::infinity();
    mean += v;
  }
  mean /= static_cast<double>(row.size());
  double ss = 0.0;
  for (double v : row) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(row.size() - 1);
}

namespace {

FractionResult offline_fraction(const HMatrix& h, double fraction) {
  FractionResult r;
  r.fraction = fraction;
  r.lppd_elements.resize(h.elements());
  r.p_waic_elements.resize(h.elements());
  for (std::size_t m = 0; m < h.elements(); ++m) {
    r.lppd_elements[m] = batch_log_mean_exp(h.row(m));
    r.p_waic_elements[m] = two_pass_variance(h.row(m));
  }
  for (std::size_t m = 0; m < h.elements(); ++m) {
    r.lppd += r.lppd_elements[m];
    r.p_waic += r.p_waic_elements[m];
  }
  r.waic = -2.0 * (r.lppd - r.p_waic) + 0.0;  // no -0
  return r;
}

}  // namespace

WaicResult offline_waic(const HMatrix& h) {
  if (h.samples() < 2) {
    throw InsufficientSamplesError("WAIC needs at least 2 posterior samples");
  }
  WaicResult result;
  result.elements = h.elements();
  result.samples = h.samples();
  result.mode = PredictiveMode::conditional;
  result.inner_draws = 1;
  result.fractions.push_back(offline_fraction(h, 1.0));
  return result;
}

WaicResult offline_waic_stream(std::istream& in) {
  StreamReader reader(in);
  const std::size_t M = reader.header().elements;
  const std::size_t width = reader.header().values_per_line();
  std::vector<std::vector<double>> lines;
  std::vector<double> h;
  while (reader.next(h)) lines.push_back(h);
  if (lines.size() < 2) throw InsufficientSamplesError("WAIC needs at least 2 posterior samples");

  const auto fractions = PredictiveConfig{reader.header().mode, 1}.fractions();
  WaicResult result;
  result.elements = M;
  result.samples = lines.size();
  result.mode = reader.header().mode;
  result.inner_draws = 0;  // not recorded in streams
  for (std::size_t f = 0; f < width / M; ++f) {
    HMatrix mat(M, lines.size());
    for (std::size_t s = 0; s < lines.size(); ++s) {
      for (std::size_t m = 0; m < M; ++m) mat.at(m, s) = lines[s][f * M + m];
    }
    result.fractions.push_back(offline_fraction(mat, fractions[f]));
  }
  return result;
}

}  // namespace owaic
