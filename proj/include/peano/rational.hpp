#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace peano {

// Exact rational arithmetic for all lengths, offsets and speeds.
// mpq_class keeps values canonical (reduced, positive denominator).
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rat: zero denominator");
  Rat r(num, den);
  r.canonicalize();
  return r;
}

inline bool is_integer(const Rat& r) { return r.get_den() == 1; }

// Parses "p/q", "p", or a decimal string like "0.25", all exactly.
inline Rat parse_rat(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("parse_rat: empty string");
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    if (s.find('/') != std::string::npos)
      throw std::invalid_argument("parse_rat: mixed decimal and fraction: " + s);
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("parse_rat: bad decimal: " + s);
    bool neg = !head.empty() && head[0] == '-';
    if (neg) head = head.substr(1);
    if (head.empty()) head = "0";
    mpz_class ipart(head), frac(tail);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, tail.size());
    Rat r = Rat(ipart) + Rat(frac) / Rat(den);
    return neg ? Rat(-r) : r;
  }
  Rat r;
  if (r.set_str(s, 10) != 0)
    throw std::invalid_argument("parse_rat: bad rational: " + s);
  r.canonicalize();
  return r;
}

// Canonical form "p/q", or "p" when the denominator is 1.
inline std::string rat_str(const Rat& r) { return r.get_str(); }

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }
inline const Rat& rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }
inline const Rat& rat_max(const Rat& a, const Rat& b) { return a < b ? b : a; }

// Smallest integer k with k*unit >= value; requires unit > 0.
inline long ceil_div(const Rat& value, const Rat& unit) {
  Rat q = value / unit;
  mpz_class z;
  mpz_cdiv_q(z.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  if (!z.fits_slong_p()) throw std::overflow_error("ceil_div: result too large");
  return z.get_si();
}

inline double rat_double(const Rat& r) { return r.get_d(); }

}  // namespace peano
