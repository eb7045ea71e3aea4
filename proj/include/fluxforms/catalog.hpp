#pragma once

#include <map>
#include <string>
#include <vector>

#include "fluxforms/domain.hpp"
#include "fluxforms/fields.hpp"

namespace fluxforms {

// Named analytic fields with closed-form jacobians, plus the metric and
// domain each one is naturally paired with. Parameters not present in the
// map take documented defaults.
struct CatalogEntry {
  std::string name;
  std::string summary;
  int dimension = 0;
  FieldKind kind = FieldKind::Vector;
  std::vector<std::string> params;
};

const std::vector<CatalogEntry>& catalog_entries();

SmoothField catalog_field(const std::string& name,
                          const std::map<std::string, double>& params = {});
MetricField catalog_metric(const std::string& name,
                           const std::map<std::string, double>& params = {});
ChartDomain catalog_domain(const std::string& name,
                           const std::map<std::string, double>& params = {});

}  // namespace fluxforms
