#pragma once

#include <cstdint>

namespace risee {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

// Power conversions. dBm is referenced to 1 mW, dBW to 1 W.
double dbm_to_watt(double dbm);
double dbw_to_watt(double dbw);
double watt_to_dbm(double watt);
double db_to_linear(double db);

// SplitMix64 step; used to derive independent child seeds from one master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace risee
