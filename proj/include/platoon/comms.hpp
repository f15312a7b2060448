#pragma once

// V2V network model: one delayed, possibly lossy channel per directed link.
// Time is quantized to integer multiples of the simulation step so that a
// delay of k steps is realized exactly, without interpolation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <string>

#include "platoon/dynamics.hpp"
#include "platoon/error.hpp"

namespace platoon {

struct ChannelParams {
  double delta = 0.05;     // uniform delay [s]
  double loss_prob = 0.0;  // per-message drop probability
  std::uint64_t seed = 0;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

// Converts a time in seconds to an integer step count, requiring that it is
// an integer multiple of dt (to within a relative 1e-9).
inline std::int64_t to_steps(double seconds, double dt, const char* what = "time") {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("to_steps: dt must be positive");
  const double ratio = seconds / dt;
  const double rounded = std::round(ratio);
  if (!std::isfinite(ratio) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw InvalidArgument(std::string(what) + " must be an integer multiple of dt");
  }
  return static_cast<std::int64_t>(rounded);
}

struct TimedSample {
  std::int64_t step;
  VehicleState state;
};

// History of delivered samples from one sender, as seen by one receiver.
// Pre-filled with the initial state, which stands for every t < 0.
class HistoryBuffer {
 public:
  static constexpr std::int64_t kPrefillStep = std::numeric_limits<std::int64_t>::min();

  HistoryBuffer(double dt, std::int64_t delay_steps, const VehicleState& initial)
      : dt_(dt), delay_steps_(delay_steps) {
    if (!(dt > 0.0)) throw InvalidArgument("HistoryBuffer: dt must be positive");
    if (delay_steps < 0) throw InvalidArgument("HistoryBuffer: delay must be non-negative");
    samples_.push_back({kPrefillStep, initial});
  }

  double dt() const noexcept { return dt_; }
  std::int64_t delay_steps() const noexcept { return delay_steps_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const std::deque<TimedSample>& samples() const noexcept { return samples_; }
  std::int64_t last_step() const noexcept { return samples_.back().step; }

  // Appends a sample taken at `step`. Samples older than the oldest one any
  // future delayed query can reach are discarded.
  void append(std::int64_t step, const VehicleState& state) {
    if (step <= samples_.back().step) {
      throw InvalidArgument("HistoryBuffer: out-of-order sample at step " + std::to_string(step));
    }
    samples_.push_back({step, state});
    const std::int64_t horizon = step - delay_steps_;
    while (samples_.size() >= 2 && samples_[1].step <= horizon) samples_.pop_front();
  }

  // Newest sample with step <= `step`; zero-order hold across gaps.
  const VehicleState& at_or_before(std::int64_t step) const {
    if (step < samples_.front().step) {
      throw InvalidArgument("HistoryBuffer: requested sample is no longer retained");
    }
    for (auto it = samples_.rbegin(); it != samples_.rend(); ++it) {
      if (it->step <= step) return it->state;
    }
    return samples_.front().state;  // unreachable: front covers everything above
  }

 private:
  double dt_;
  std::int64_t delay_steps_;
  std::deque<TimedSample> samples_;
};

inline VehicleState sample_delayed(const HistoryBuffer& buffer, double t, double delta) {
  const auto now = to_steps(t, buffer.dt(), "query time");
  const auto lag = to_steps(delta, buffer.dt(), "delay");
  return buffer.at_or_before(now - lag);
}

// A directed sender -> receiver link. Each link draws drops from its own
// random stream, derived from the master seed and the link endpoints.
class DelayedChannel {
 public:
  DelayedChannel(const ChannelParams& params, double dt, const VehicleState& initial,
                 std::size_t sender, std::size_t receiver)
      : params_(params),
        buffer_(dt, to_steps(params.delta, dt, "delay"), initial),
        rng_(make_stream(params.seed, sender, receiver)),
        drop_(clamp_probability(params.loss_prob)),
        lossless_(sender == receiver || params.loss_prob <= 0.0) {}

  // Returns true when the sample was delivered.
  bool publish(double t, const VehicleState& state) {
    const auto step = to_steps(t, buffer_.dt(), "publish time");
    if (step <= last_published_) {
      throw InvalidArgument("publish: timestamp not after the previous sample");
    }
    last_published_ = step;
    const bool dropped = !lossless_ && drop_(rng_);
    if (dropped) return false;
    buffer_.append(step, state);
    return true;
  }

  VehicleState sample_delayed(double t) const {
    return platoon::sample_delayed(buffer_, t, params_.delta);
  }

  const HistoryBuffer& buffer() const noexcept { return buffer_; }
  const ChannelParams& params() const noexcept { return params_; }

 private:
  static std::mt19937_64 make_stream(std::uint64_t seed, std::size_t sender, std::size_t receiver) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(sender), static_cast<std::uint32_t>(receiver)};
    return std::mt19937_64(seq);
  }

  static double clamp_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("loss_prob must lie in [0, 1]");
    return p;
  }

  ChannelParams params_;
  HistoryBuffer buffer_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution drop_;
  bool lossless_;
  std::int64_t last_published_ = HistoryBuffer::kPrefillStep;
};

}  // namespace platoon
