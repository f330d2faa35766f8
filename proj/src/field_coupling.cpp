#include "gicopt/field_coupling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gicopt/error.hpp"

namespace gicopt {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;

const Substation* substation_of(const DcNetwork& net, const DcNode& node) {
  for (const auto& s : net.substations)
    if (s.id == node.substation) return &s;
  return nullptr;
}
}  // namespace

LineDisplacement displacement(double lat_from, double lon_from, double lat_to, double lon_to) {
  return displacement(lat_from, lon_from, lat_to, lon_to, 0.5 * (lat_to + lat_from));
}

LineDisplacement displacement(double lat_from, double lon_from, double lat_to, double lon_to,
                              double reference_lat) {
  const double dlat = (lat_to - lat_from) * kDegToRad;
  const double dlon = (lon_to - lon_from) * kDegToRad;
  return {kEarthRadiusKm * dlat, kEarthRadiusKm * dlon * std::cos(reference_lat * kDegToRad)};
}

double reference_latitude(const std::vector<Substation>& subs) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : subs) {
    if (!s.latitude || !s.longitude) continue;
    sum += *s.latitude;
    ++n;
  }
  return n ? sum / n : 0.0;
}

LineDisplacement displacement(const Substation& from, const Substation& to) {
  if (!from.latitude || !from.longitude || !to.latitude || !to.longitude)
    throw std::invalid_argument("substation without coordinates");
  return displacement(*from.latitude, *from.longitude, *to.latitude, *to.longitude);
}

double induced_voltage(const GmdField& field, const LineDisplacement& d) {
  const double dir = field.direction * kDegToRad;
  return field.magnitude * (std::cos(dir) * d.northward_km + std::sin(dir) * d.eastward_km);
}

DcNetwork apply_field(DcNetwork net, const GmdField& field) {
  const double ref = reference_latitude(net.substations);
  for (auto& e : net.edges) {
    e.induced_v = 0.0;
    if (e.kind != DcEdgeKind::Line) continue;
    const Substation* from = substation_of(net, net.nodes[e.from_node]);
    const Substation* to = substation_of(net, net.nodes[e.to_node]);
    if (!from || !to || !from->latitude || !from->longitude || !to->latitude || !to->longitude)
      throw BuildError("branch '" + e.ac_link + "': endpoint substation lacks coordinates",
                       "field-coupling");
    e.induced_v = induced_voltage(
        field, displacement(*from->latitude, *from->longitude, *to->latitude, *to->longitude, ref));
  }
  return net;
}

}  // namespace gicopt
