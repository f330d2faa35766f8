#pragma once

// Induced line voltages from a uniform geoelectric field. Lines are straight
// segments between substation coordinates in an equirectangular projection.
// A lone segment is projected about its own mean latitude; a network uses one
// reference latitude for every line so that loop sums vanish.

#include <vector>

#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"

namespace gicopt {

inline constexpr double kEarthRadiusKm = 6371.0;

struct LineDisplacement {
  double northward_km = 0.0;
  double eastward_km = 0.0;

  LineDisplacement operator-() const { return {-northward_km, -eastward_km}; }
};

LineDisplacement displacement(double lat_from, double lon_from, double lat_to, double lon_to);
LineDisplacement displacement(double lat_from, double lon_from, double lat_to, double lon_to,
                              double reference_lat);

// Mean latitude of the substations that have coordinates (0 if none).
double reference_latitude(const std::vector<Substation>& subs);

// Throws std::invalid_argument when either substation lacks coordinates.
LineDisplacement displacement(const Substation& from, const Substation& to);

// Volts driven along the displacement, positive in its direction.
double induced_voltage(const GmdField& field, const LineDisplacement& d);

// Fills induced_v on every line edge, projecting about the network's
// reference latitude; winding edges are set to zero.
// Throws BuildError (module field-coupling) naming the branch whose endpoint
// substations lack coordinates.
DcNetwork apply_field(DcNetwork net, const GmdField& field);

}  // namespace gicopt
