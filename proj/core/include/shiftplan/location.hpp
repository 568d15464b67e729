#ifndef SHIFTPLAN_LOCATION_HPP
#define SHIFTPLAN_LOCATION_HPP

#include "shiftplan/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace shiftplan {

/// Binary siting decision z over the buses, plus the order in which buses
/// were selected along the tree path.
class LocationVector {
 public:
  LocationVector() = default;
  explicit LocationVector(std::size_t n_buses) : z_(n_buses, 0) {}

  static LocationVector from_mask(const std::vector<std::uint8_t>& mask);
  static LocationVector from_buses(std::size_t n_buses, const std::vector<BusIndex>& buses);

  std::size_t size() const noexcept { return z_.size(); }
  std::size_t count() const noexcept { return selected_.size(); }
  bool selected(BusIndex bus) const { return z_.at(bus) != 0; }
  const std::vector<std::uint8_t>& mask() const noexcept { return z_; }
  const std::vector<BusIndex>& buses() const noexcept { return selected_; }

  /// Copy with `bus` added; the bus must not already be selected.
  LocationVector with(BusIndex bus) const;

  /// Compact "0110..." text; also used as a hash key.
  std::string key() const;

  friend bool operator==(const LocationVector& a, const LocationVector& b) { return a.z_ == b.z_; }

 private:
  std::vector<std::uint8_t> z_;
  std::vector<BusIndex> selected_;
};

}  // namespace shiftplan

#endif  // SHIFTPLAN_LOCATION_HPP
