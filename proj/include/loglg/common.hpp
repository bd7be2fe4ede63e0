#ifndef LOGLG_COMMON_HPP_
#define LOGLG_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace loglg {

typedef double Scalar;
typedef Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Matrix;
typedef Eigen::Matrix<Scalar, Eigen::Dynamic, 1> Vector;
typedef Eigen::Matrix<Scalar, 1, Eigen::Dynamic> RowVector;
typedef Eigen::Matrix<Scalar, 2, 1> Logits;

/// Class index shared by keyword lists, voting, pseudo labels and predictions.
enum class Label : std::uint8_t { Normal = 0, Anomaly = 1 };

inline int to_index(Label l) { return static_cast<int>(l); }
inline Label label_from_index(int t) { return t == 0 ? Label::Normal : Label::Anomaly; }

/// Error categories. The CLI maps these onto stable exit codes.
enum class Errc {
  invalid_argument,
  empty_sequence,
  empty_graph,
  missing_file,
  bad_format,
  vocab_mismatch,
  non_finite,
  degenerate,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// 64-bit FNV-1a. Stable across platforms, used for vocabulary and corpus fingerprints.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  void update_separator() { update(std::string_view("\x1f", 1)); }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace loglg

#endif  // LOGLG_COMMON_HPP_
