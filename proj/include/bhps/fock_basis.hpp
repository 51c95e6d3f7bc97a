#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "bhps/core.hpp"

namespace bhps {

using Occupation = std::array<int, 3>;

/// Number-conserving Fock basis for two or three modes.
///
/// States are enumerated lexicographically descending: for two modes
/// (N,0), (N-1,1), ..., (0,N), so the index equals n2; for three modes
/// (N,0,0), (N-1,1,0), (N-1,0,1), (N-2,2,0), ...
class FockBasis {
 public:
  FockBasis(int modes, int particles) : modes_(modes), particles_(particles) {
    require(modes == 2 || modes == 3, "FockBasis: modes must be 2 or 3, got " + std::to_string(modes));
    require(particles >= 1, "FockBasis: particles must be >= 1, got " + std::to_string(particles));
    const int n = particles;
    if (modes == 2) {
      states_.reserve(n + 1);
      for (int n2 = 0; n2 <= n; ++n2) states_.push_back({n - n2, n2, 0});
    } else {
      states_.reserve(static_cast<std::size_t>(n + 1) * (n + 2) / 2);
      for (int n1 = n; n1 >= 0; --n1)
        for (int n2 = n - n1; n2 >= 0; --n2) states_.push_back({n1, n2, n - n1 - n2});
    }
  }

  int modes() const { return modes_; }
  int particles() const { return particles_; }
  int dim() const { return static_cast<int>(states_.size()); }
  const Occupation& state(int index) const { return states_.at(static_cast<std::size_t>(index)); }
  const std::vector<Occupation>& states() const { return states_; }

  /// Index of an occupation tuple, or -1 if it is not in the basis.
  int index(const Occupation& occ) const {
    int total = 0;
    for (int j = 0; j < modes_; ++j) {
      if (occ[j] < 0) return -1;
      total += occ[j];
    }
    if (total != particles_) return -1;
    if (modes_ == 2) {
      if (occ[2] != 0) return -1;
      return occ[1];
    }
    const int k = particles_ - occ[0];
    return k * (k + 1) / 2 + occ[2];
  }

  bool operator==(const FockBasis& o) const { return modes_ == o.modes_ && particles_ == o.particles_; }

 private:
  int modes_;
  int particles_;
  std::vector<Occupation> states_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

inline BasisPtr build_fock_basis(int modes, int particles) {
  return std::make_shared<const FockBasis>(modes, particles);
}

}  // namespace bhps
