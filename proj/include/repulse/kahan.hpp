#pragma once

namespace repulse {

// Kahan compensated accumulator. Used for the running time integrals, which
// add thousands of small panels over long horizons; plain summation would
// leak O(n*eps) there.
class KahanAccumulator {
 public:
  KahanAccumulator() = default;
  explicit KahanAccumulator(double initial) : sum_(initial) {}

  void add(double value) {
    const double y = value - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }

  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace repulse
