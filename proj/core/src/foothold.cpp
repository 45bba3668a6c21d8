#include "stonewalk/foothold.hpp"

#include <cmath>

#include "stonewalk/common.hpp"

namespace stonewalk {

FootPrint FootPrint::default_grid() {
  FootPrint print;
  print.sample_offsets.reserve(kGridSide * kGridSide);
  for (int a = 0; a < kGridSide; ++a) {
    for (int b = 0; b < kGridSide; ++b) {
      const double fx = -kLength / 2.0 + kLength * a / (kGridSide - 1);
      const double fy = -kWidth / 2.0 + kWidth * b / (kGridSide - 1);
      print.sample_offsets.push_back({fx, fy});
    }
  }
  return print;
}

void FootholdConfig::validate() const {
  if (!(epsilon < 0.0)) {
    throw ConfigError("foothold epsilon must be negative");
  }
  if (binary_pct <= 0 || binary_pct >= 100) {
    throw ConfigError("foothold binary_pct must lie in (0, 100)");
  }
  if (!(support_threshold > 0.0) || support_threshold > 1.0) {
    throw ConfigError("foothold support_threshold must lie in (0, 1]");
  }
}

int bad_sample_count(const FootState& foot, const FootPrint& print, const HeightField& field,
                     double epsilon) {
  const double cy = std::cos(foot.yaw);
  const double sy = std::sin(foot.yaw);
  int bad = 0;
  for (const auto& off : print.sample_offsets) {
    const double wx = foot.x + cy * off[0] - sy * off[1];
    const double wy = foot.y + sy * off[0] + cy * off[1];
    if (field.height_at(wx, wy) < epsilon) {
      ++bad;
    }
  }
  return bad;
}

double foothold_reward(const std::array<FootState, 2>& feet, const FootPrint& print,
                       const HeightField& field, const FootholdConfig& cfg) {
  double reward = 0.0;
  for (const FootState& foot : feet) {
    if (!foot.contact) continue;
    const int bad = bad_sample_count(foot, print, field, cfg.epsilon);
    if (cfg.mode == FootholdMode::kContinuous) {
      reward -= bad;
    } else {
      // Full penalty once the bad fraction reaches p% of the sole samples.
      if (100 * bad >= cfg.binary_pct * print.count()) {
        reward -= 1.0;
      }
    }
  }
  return reward;
}

double support_fraction(const FootState& foot, const FootPrint& print, const HeightField& field,
                        double epsilon) {
  const int n = print.count();
  if (n == 0) {
    throw ContractError("support_fraction requires a non-empty footprint");
  }
  return 1.0 - static_cast<double>(bad_sample_count(foot, print, field, epsilon)) / n;
}

FootholdErrorResult foothold_error(const std::vector<TouchdownEvent>& touchdowns) {
  if (touchdowns.empty()) {
    return FootholdErrorResult{0.0, true};
  }
  double sum = 0.0;
  for (const TouchdownEvent& t : touchdowns) {
    sum += static_cast<double>(t.bad_count) / t.sample_count;
  }
  return FootholdErrorResult{sum / touchdowns.size(), false};
}

}  // namespace stonewalk
