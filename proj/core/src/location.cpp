#include "shiftplan/location.hpp"

#include "shiftplan/error.hpp"

namespace shiftplan {

LocationVector LocationVector::from_mask(const std::vector<std::uint8_t>& mask) {
  LocationVector z(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) z = z.with(i);
  }
  return z;
}

LocationVector LocationVector::from_buses(std::size_t n_buses, const std::vector<BusIndex>& buses) {
  LocationVector z(n_buses);
  for (BusIndex b : buses) z = z.with(b);
  return z;
}

LocationVector LocationVector::with(BusIndex bus) const {
  if (bus >= z_.size()) {
    throw Error(ErrorKind::InvalidIndex, "bus " + std::to_string(bus) + " out of range", "z");
  }
  if (z_[bus] != 0) {
    throw Error(ErrorKind::InvalidParams, "bus " + std::to_string(bus) + " already selected", "z");
  }
  LocationVector out = *this;
  out.z_[bus] = 1;
  out.selected_.push_back(bus);
  return out;
}

std::string LocationVector::key() const {
  std::string s(z_.size(), '0');
  for (std::size_t i = 0; i < z_.size(); ++i) {
    if (z_[i] != 0) s[i] = '1';
  }
  return s;
}

}  // namespace shiftplan
