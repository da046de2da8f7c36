#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace conet {

using NodeId = std::string;

/// Virtual simulation clock.
using SimTime = std::chrono::microseconds;

inline double
toSeconds(SimTime t) noexcept
{
  return std::chrono::duration<double>(t).count();
}

} // namespace conet
