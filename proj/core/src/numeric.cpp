#include "numeric.hpp"

#include <algorithm>
#include <cmath>

namespace chartpot::detail {

Num num_add(Num a, Num b) {
  if (a.is_int && b.is_int) {
    std::int64_t r = 0;
    if (!__builtin_add_overflow(a.i, b.i, &r)) return Num::of_int(r);
  }
  return Num::of_float(a.as_double() + b.as_double());
}

Num num_sub(Num a, Num b) {
  if (a.is_int && b.is_int) {
    std::int64_t r = 0;
    if (!__builtin_sub_overflow(a.i, b.i, &r)) return Num::of_int(r);
  }
  return Num::of_float(a.as_double() - b.as_double());
}

Num num_mul(Num a, Num b) {
  if (a.is_int && b.is_int) {
    std::int64_t r = 0;
    if (!__builtin_mul_overflow(a.i, b.i, &r)) return Num::of_int(r);
  }
  return Num::of_float(a.as_double() * b.as_double());
}

int compare_int_double(std::int64_t a, double b) {
  if (std::isnan(b)) return 2;
  if (b >= 9223372036854775808.0) return -1;
  if (b < -9223372036854775808.0) return 1;
  const double t = std::trunc(b);
  const auto ti = static_cast<std::int64_t>(t);
  if (a < ti) return -1;
  if (a > ti) return 1;
  const double frac = b - t;
  if (frac > 0) return -1;
  if (frac < 0) return 1;
  return 0;
}

int num_compare(Num a, Num b) {
  if (a.is_int && b.is_int) return a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
  if (a.is_int) return compare_int_double(a.i, b.f);
  if (b.is_int) {
    const int r = compare_int_double(b.i, a.f);
    return r == 2 ? 2 : -r;
  }
  if (std::isnan(a.f) || std::isnan(b.f)) return 2;
  return a.f < b.f ? -1 : (a.f > b.f ? 1 : 0);
}

void PySum::add(Num x) {
  if (!float_mode_) {
    if (x.is_int) {
      std::int64_t r = 0;
      if (!__builtin_add_overflow(i_, x.i, &r)) {
        i_ = r;
        return;
      }
      float_mode_ = true;
      f_ = static_cast<double>(i_) + static_cast<double>(x.i);
      return;
    }
    float_mode_ = true;
    f_ = static_cast<double>(i_) + x.f;
    return;
  }
  if (x.is_int) {
    f_ += static_cast<double>(x.i);
    return;
  }
  const double t = f_ + x.f;
  if (std::fabs(f_) >= std::fabs(x.f)) {
    c_ += (f_ - t) + x.f;
  } else {
    c_ += (x.f - t) + f_;
  }
  f_ = t;
}

Num PySum::result() const {
  if (!float_mode_) return Num::of_int(i_);
  double r = f_;
  if (c_ != 0.0 && std::isfinite(c_)) r += c_;
  return Num::of_float(r);
}

Num py_sum(std::span<const Num> values) {
  PySum s;
  for (const Num& v : values) s.add(v);
  return s.result();
}

double fsum(std::span<const double> values) {
  std::vector<double> p;
  double special_sum = 0.0;
  double inf_sum = 0.0;
  double lo = 0.0;
  bool overflow = false;
  for (double x : values) {
    const double xsave = x;
    std::size_t i = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      double y = p[j];
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) p[i++] = lo;
      x = hi;
    }
    p.resize(i);
    if (x != 0.0) {
      if (!std::isfinite(x)) {
        if (std::isfinite(xsave)) overflow = true;
        if (std::isinf(xsave)) inf_sum += xsave;
        special_sum += xsave;
        p.clear();
      } else {
        p.push_back(x);
      }
    }
  }
  if (special_sum != 0.0) return std::isnan(inf_sum) ? std::nan("") : special_sum;
  if (overflow) return HUGE_VAL;
  double hi = 0.0;
  std::size_t n = p.size();
  if (n > 0) {
    hi = p[--n];
    while (n > 0) {
      const double x = hi;
      const double y = p[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
  }
  return hi;
}

double stat_mean(std::span<const Num> values) {
  std::vector<double> d;
  d.reserve(values.size());
  for (const Num& v : values) d.push_back(v.as_double());
  return fsum(d) / static_cast<double>(values.size());
}

double stat_median(std::span<const Num> values) {
  std::vector<Num> sorted(values.begin(), values.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Num& a, const Num& b) { return num_lt(a, b); });
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2].as_double();
  return num_add(sorted[n / 2 - 1], sorted[n / 2]).as_double() / 2.0;
}

double stat_variance(std::span<const Num> values, bool sample) {
  const double m = stat_mean(values);
  std::vector<double> dev;
  std::vector<double> sq;
  dev.reserve(values.size());
  sq.reserve(values.size());
  for (const Num& v : values) {
    const double d = v.as_double() - m;
    dev.push_back(d);
    sq.push_back(d * d);
  }
  const double n = static_cast<double>(values.size());
  const double total = fsum(dev);
  const double ss = fsum(sq) - total * total / n;
  return ss / (sample ? n - 1.0 : n);
}

Num py_max(std::span<const Num> values) {
  Num best = values.front();
  for (const Num& v : values.subspan(1)) {
    if (num_gt(v, best)) best = v;
  }
  return best;
}

Num py_min(std::span<const Num> values) {
  Num best = values.front();
  for (const Num& v : values.subspan(1)) {
    if (num_lt(v, best)) best = v;
  }
  return best;
}

}  // namespace chartpot::detail
