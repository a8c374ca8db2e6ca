#pragma once

#include <string>

#include "demandcast/eval.hpp"

namespace demandcast {

/// Standalone 960x480 SVG line chart of actual vs predicted kWh. A single
/// point is drawn with markers instead of polylines. Throws DataError when empty.
std::string render_forecast_svg(const ForecastResult& forecast, const std::string& title = "");

}  // namespace demandcast
