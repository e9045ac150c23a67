// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vmouse/kinematics.hpp"

namespace vmouse::fusion {

using kinematics::CountVec;
using kinematics::Pose;

/// One sample of the two-sensor device: raw front and rear readings at the
/// base resolution plus button state.
struct DualSample {
  std::uint64_t t_us = 0;
  bool btn_left = false;
  bool btn_right = false;
  CountVec front;
  CountVec rear;
};

/// Virtual sensor position and output resolution. The position is held as
/// an integer percent (the device's 1% granularity).
class VirtualConfig {
 public:
  VirtualConfig() = default;

  /// Throws ValidationError unless 0 <= p_percent <= 100 and
  /// 0 < user_cpi <= 12000.
  static VirtualConfig make(int p_percent, double user_cpi);

  int p_percent() const { return p_percent_; }
  double p() const { return p_percent_ / 100.0; }
  double user_cpi() const { return user_cpi_; }
  /// CPI multiplier user_cpi / 12000.
  double k() const { return user_cpi_ / kinematics::kBaseCpi; }

  friend bool operator==(const VirtualConfig&, const VirtualConfig&) = default;

 private:
  VirtualConfig(int p_percent, double user_cpi) : p_percent_(p_percent), user_cpi_(user_cpi) {}

  int p_percent_ = 50;
  double user_cpi_ = kinematics::kBaseCpi;
};

/// Integer cursor report at the user resolution.
struct CursorDelta {
  std::int64_t mx = 0;
  std::int64_t my = 0;

  friend bool operator==(CursorDelta, CursorDelta) = default;
};

/// Virtual-sensor reading: dx interpolates front and rear by p, dy averages
/// both sensors; both are scaled by k. Not yet quantized.
CountVec virtual_fuse(const DualSample& sample, const VirtualConfig& cfg);

/// Same fusion at an arbitrary real-valued position and multiplier.
CountVec virtual_fuse(const DualSample& sample, double p, double k);

/// Rotation between two samples recovered from the dx difference,
/// (front.dx - rear.dx) / r_counts. Positive means clockwise, i.e. the front
/// sensor swept towards device +x.
double estimate_rotation(const DualSample& sample, double r_counts);

/// Truncation-with-carry quantizer. Each axis keeps an accumulator; the
/// report is the accumulator truncated toward zero and the remainder stays.
class CarryQuantizer {
 public:
  CursorDelta push(CountVec value);
  void reset() { acc_ = {}; }
  CountVec remainder() const { return acc_; }

 private:
  CountVec acc_;
};

std::vector<CursorDelta> quantize_carry(std::span<const CountVec> stream);

/// Stateful device pipeline: fuse each sample at the current configuration
/// and quantize with carry. The accumulator survives configuration changes
/// and is cleared only by reset() (session boundary).
class Pipeline {
 public:
  explicit Pipeline(VirtualConfig cfg = {}) : cfg_(cfg) {}

  CursorDelta process(const DualSample& sample) { return quantizer_.push(virtual_fuse(sample, cfg_)); }
  void set_config(VirtualConfig cfg) { cfg_ = cfg; }
  const VirtualConfig& config() const { return cfg_; }
  void reset() { quantizer_.reset(); }

 private:
  VirtualConfig cfg_;
  CarryQuantizer quantizer_;
};

struct EmulatedStream {
  std::vector<DualSample> dual;     // front (p=0) and rear (p=1) at base CPI
  std::vector<CountVec> fused;      // virtual_fuse output, pre-quantization
  std::vector<CursorDelta> cursor;  // quantized HID stream
  std::vector<CountVec> direct;     // ideal sensor physically placed at p, scaled by k
};

/// Runs a pose sequence through both sensors, the fusion and the quantizer,
/// and also emulates a single physical sensor at p for comparison.
EmulatedStream emulate_stream(std::span<const Pose> poses, const VirtualConfig& cfg, double r_mm,
                              double sample_rate_hz = kinematics::kDefaultSampleRateHz);

}  // namespace vmouse::fusion
