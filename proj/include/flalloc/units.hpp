#pragma once

namespace flalloc {

inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kE = 2.71828182845904523536;

double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

}  // namespace flalloc
