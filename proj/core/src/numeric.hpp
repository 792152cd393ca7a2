#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Arithmetic shared by the native template engine and the interpreter so the
// two agree bit-for-bit. Integers are 64-bit and promote to float on overflow.
namespace chartpot::detail {

// Exact intermediate for 64-bit range and parse arithmetic.
__extension__ typedef __int128 Int128;

struct Num {
  bool is_int = true;
  std::int64_t i = 0;
  double f = 0.0;

  static Num of_int(std::int64_t v) { return {true, v, 0.0}; }
  static Num of_float(double v) { return {false, 0, v}; }
  double as_double() const { return is_int ? static_cast<double>(i) : f; }
};

Num num_add(Num a, Num b);
Num num_sub(Num a, Num b);
Num num_mul(Num a, Num b);

// Exact comparison across int and float (no rounding of the int side).
// Returns -1, 0 or 1, or 2 when unordered (NaN involved).
int num_compare(Num a, Num b);
inline bool num_lt(Num a, Num b) { return num_compare(a, b) == -1; }
inline bool num_gt(Num a, Num b) { return num_compare(a, b) == 1; }
inline bool num_eq(Num a, Num b) { return num_compare(a, b) == 0; }

// Compares an int64 with a double exactly.
int compare_int_double(std::int64_t a, double b);

// The object language's sum() over numbers starting from int 0: exact int
// accumulation until a float appears, then compensated (Neumaier) float
// accumulation.
class PySum {
 public:
  void add(Num x);
  Num result() const;

 private:
  bool float_mode_ = false;
  std::int64_t i_ = 0;
  double f_ = 0.0;
  double c_ = 0.0;
};

Num py_sum(std::span<const Num> values);

// Exact float summation (Shewchuk), as math.fsum.
double fsum(std::span<const double> values);

// statistics-module shims; callers guarantee the minimum data size.
double stat_mean(std::span<const Num> values);
double stat_median(std::span<const Num> values);
double stat_variance(std::span<const Num> values, bool sample);

// max()/min() selection rule: first element wins unless a later one compares
// strictly greater (resp. less).
Num py_max(std::span<const Num> values);
Num py_min(std::span<const Num> values);

}  // namespace chartpot::detail
