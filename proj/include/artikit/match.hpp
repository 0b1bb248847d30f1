#pragma once

#include "artikit/geometry.hpp"

namespace ak {

/// Cross-state pixel correspondence: pixel p of view v at state t matches
/// pixel q of view u at state 1 - t.
struct MatchPair {
  int t = 0;
  int v = 0;
  int u = 0;
  Vec2 p = Vec2::Zero();
  Vec2 q = Vec2::Zero();
};

}  // namespace ak
