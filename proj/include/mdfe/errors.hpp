#pragma once

#include <stdexcept>
#include <string>

namespace mdfe {

/// Rejected geometric input. `segment_index` is the offending input segment, or -1.
class GeometryError : public std::runtime_error {
public:
  GeometryError(const std::string& what, int segment_index = -1)
      : std::runtime_error(what), segment_index_(segment_index) {}
  int segment_index() const noexcept { return segment_index_; }

private:
  int segment_index_;
};

class MeshingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Assembly rejected its input (bad coefficients, empty free set, size mismatch).
class AssemblyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A matrix that must be symmetric positive definite was found not to be.
/// `block` identifies the region or subspace where it was detected, or -1.
class SpdViolation : public std::runtime_error {
public:
  SpdViolation(const std::string& what, int block = -1) : std::runtime_error(what), block_(block) {}
  int block() const noexcept { return block_; }

private:
  int block_;
};

} // namespace mdfe
