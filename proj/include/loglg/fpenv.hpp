#ifndef LOGLG_FPENV_HPP_
#define LOGLG_FPENV_HPP_

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define LOGLG_HAS_MXCSR 1
#endif

namespace loglg {

/// Flush subnormal results and operands to zero for the lifetime of the
/// guard. Near-converged training pushes gradients and Adam moments into the
/// subnormal range, where x86 arithmetic is two orders of magnitude slower.
/// No-op on targets without MXCSR.
class FlushDenormals {
 public:
  FlushDenormals() {
#ifdef LOGLG_HAS_MXCSR
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040u);  // FTZ | DAZ
#endif
  }
  ~FlushDenormals() {
#ifdef LOGLG_HAS_MXCSR
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_ = 0;
};

}  // namespace loglg

#endif  // LOGLG_FPENV_HPP_
