#include "flalloc/units.hpp"

#include <cmath>

namespace flalloc {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double dbm_to_watts(double dbm) { return 1e-3 * db_to_linear(dbm); }

double watts_to_dbm(double watts) { return linear_to_db(watts * 1e3); }

}  // namespace flalloc
