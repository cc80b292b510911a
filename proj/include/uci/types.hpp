#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace uci {

// All pixel data is double precision and row-major, so flattened views match
// the on-disk layouts byte for byte after the float32 narrowing.
template <typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Grid = GridT<double>;

struct Dims {
  int width = 0;
  int height = 0;

  bool operator==(const Dims&) const = default;
};

inline Dims dims_of(const Grid& g) {
  return Dims{static_cast<int>(g.cols()), static_cast<int>(g.rows())};
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UCI_DEFINE_ERROR(Name)                      \
  class Name : public Error {                       \
   public:                                          \
    using Error::Error;                             \
    Name() : Error(#Name) {}                        \
  }

UCI_DEFINE_ERROR(InvalidImage);
UCI_DEFINE_ERROR(ImageTooSmall);
UCI_DEFINE_ERROR(InvalidDecomposition);
UCI_DEFINE_ERROR(EmptyGroup);
UCI_DEFINE_ERROR(DimensionMismatch);
UCI_DEFINE_ERROR(UndefinedCorrelation);
UCI_DEFINE_ERROR(CorruptFingerprintFile);
UCI_DEFINE_ERROR(NotEnoughImages);
UCI_DEFINE_ERROR(UnknownAccount);
UCI_DEFINE_ERROR(EmptyEvaluation);
UCI_DEFINE_ERROR(DegenerateRoc);
UCI_DEFINE_ERROR(GenerationError);
UCI_DEFINE_ERROR(ConfigError);

#undef UCI_DEFINE_ERROR

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace uci
