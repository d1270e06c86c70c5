#include "winofi/fxp.hpp"

#include <cmath>

namespace winofi {

FxpTensor::FxpTensor(std::vector<int> s, FxpFormat f) : shape(std::move(s)), format(f) {
  data.assign(numel(), 0);
}

size_t FxpTensor::numel() const {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

int32_t quantize_value(double value, const FxpFormat& fmt, uint64_t* saturations) {
  double scaled = value * fmt.scale();
  // rint under the default FE_TONEAREST mode is round-half-to-even.
  double rounded = std::rint(scaled);
  int64_t raw;
  if (rounded <= static_cast<double>(fmt.raw_min())) {
    raw = fmt.raw_min();
    if (rounded < static_cast<double>(fmt.raw_min()) && saturations) ++*saturations;
  } else if (rounded >= static_cast<double>(fmt.raw_max())) {
    raw = fmt.raw_max();
    if (rounded > static_cast<double>(fmt.raw_max()) && saturations) ++*saturations;
  } else {
    raw = static_cast<int64_t>(rounded);
  }
  return static_cast<int32_t>(raw);
}

FxpTensor quantize(std::span<const double> values, std::vector<int> shape,
                   const FxpFormat& fmt, uint64_t* saturations) {
  FxpTensor t(std::move(shape), fmt);
  if (values.size() != t.numel())
    raise(ErrorCode::SHAPE_MISMATCH, "quantize: value count does not match shape");
  for (size_t i = 0; i < values.size(); ++i)
    t.data[i] = quantize_value(values[i], fmt, saturations);
  return t;
}

double dequantize_value(int64_t raw, const FxpFormat& fmt) {
  return static_cast<double>(raw) / fmt.scale();
}

std::vector<double> dequantize(const FxpTensor& t) {
  std::vector<double> out(t.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = dequantize_value(t.data[i], t.format);
  return out;
}

int32_t requantize(int64_t v, int in_frac, const FxpFormat& out, uint64_t* saturations) {
  int shift = in_frac - out.frac_bits;
  int64_t shifted;
  if (shift > 0) {
    shifted = (v + (int64_t{1} << (shift - 1))) >> shift;
  } else {
    shifted = v;  // in_frac >= out.frac_bits is a precondition; shift==0 passes through
  }
  if (shifted < out.raw_min()) {
    if (saturations) ++*saturations;
    return static_cast<int32_t>(out.raw_min());
  }
  if (shifted > out.raw_max()) {
    if (saturations) ++*saturations;
    return static_cast<int32_t>(out.raw_max());
  }
  return static_cast<int32_t>(shifted);
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CONFIG_NOT_FOUND: return "CONFIG_NOT_FOUND";
    case ErrorCode::CONFIG_INVALID: return "CONFIG_INVALID";
    case ErrorCode::FILE_FORMAT: return "FILE_FORMAT";
    case ErrorCode::SHAPE_MISMATCH: return "SHAPE_MISMATCH";
    case ErrorCode::INELIGIBLE_SPEC: return "INELIGIBLE_SPEC";
    case ErrorCode::OUT_OF_RANGE: return "OUT_OF_RANGE";
    case ErrorCode::INFEASIBLE_BUDGET: return "INFEASIBLE_BUDGET";
    case ErrorCode::GOAL_UNREACHABLE: return "GOAL_UNREACHABLE";
    case ErrorCode::IO_FAILURE: return "IO_FAILURE";
  }
  return "UNKNOWN";
}

}  // namespace winofi
