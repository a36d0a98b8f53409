#include <cmath>
#include <stdexcept>

#include "seqcoord/rd_solver.hpp"

namespace seqcoord {

namespace {

// P(a < Z <= b) for standard normal Z, using the tail on the far side of 0
// to keep small probabilities accurate.
double normal_mass(double a, double b) {
  if (b <= 0.0) return 0.5 * (std::erfc(-b / std::sqrt(2.0)) - std::erfc(-a / std::sqrt(2.0)));
  if (a >= 0.0) return 0.5 * (std::erfc(a / std::sqrt(2.0)) - std::erfc(b / std::sqrt(2.0)));
  return 1.0 - 0.5 * std::erfc(-a / std::sqrt(2.0)) - 0.5 * std::erfc(b / std::sqrt(2.0));
}

// Rows: input grid points; columns: the two tails and `bins` equal cells.
Eigen::MatrixXd binned_channel(double s, const Eigen::VectorXd& inputs, int bins, double tail) {
  const double gain = std::sqrt(s);
  const double lo = -gain - tail;
  const double hi = gain + tail;
  const double width = (hi - lo) / bins;
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd w(inputs.size(), bins + 2);
  for (Index i = 0; i < inputs.size(); ++i) {
    const double m = gain * inputs[i];
    w(i, 0) = normal_mass(-inf, lo - m);
    for (int j = 0; j < bins; ++j) w(i, j + 1) = normal_mass(lo + j * width - m, lo + (j + 1) * width - m);
    w(i, bins + 1) = normal_mass(hi - m, inf);
  }
  return w;
}

}  // namespace

double awgn_capacity_avg(double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("awgn_capacity_avg: snr must be >= 0");
  return 0.5 * std::log1p(s);
}

PeakCapacity awgn_capacity_peak(double s, const PeakGrid& grid) {
  if (!(s >= 0.0)) throw std::invalid_argument("awgn_capacity_peak: snr must be >= 0");
  if (grid.input_points < 2 || grid.output_bins < 2 || !(grid.tail_width > 0.0)) {
    throw std::invalid_argument("awgn_capacity_peak: degenerate grid");
  }
  const int k = grid.input_points;
  const Eigen::VectorXd inputs = Eigen::VectorXd::LinSpaced(k, -1.0, 1.0);
  const Eigen::MatrixXd w = binned_channel(s, inputs, grid.output_bins, grid.tail_width);

  // Blahut-Arimoto with the standard capacity bracket.
  Eigen::VectorXd neg_h = Eigen::VectorXd::Zero(k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      if (w(i, j) > 0.0) neg_h[i] += w(i, j) * std::log(w(i, j));
    }
  }
  Eigen::VectorXd p = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::VectorXd c(k);
  PeakCapacity out;
  double lower = 0.0, upper = 0.0;
  for (out.iterations = 0; out.iterations < grid.max_iterations; ++out.iterations) {
    const Eigen::VectorXd log_q = (w.transpose() * p).array().max(1e-300).log().matrix();
    c = (neg_h - w * log_q).array().exp().matrix();
    const double z = p.dot(c);
    lower = std::log(z);
    upper = std::log(c.maxCoeff());
    if (upper - lower <= grid.tolerance) break;
    p = p.cwiseProduct(c) / z;
  }
  out.value = mutual_information(p, w);
  out.ba_gap = upper - lower;
  const Eigen::MatrixXd coarse = binned_channel(s, inputs, grid.output_bins / 2, grid.tail_width);
  out.bin_error = std::abs(out.value - mutual_information(p, coarse));
  return out;
}

}  // namespace seqcoord
