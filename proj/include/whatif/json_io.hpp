#pragma once

#include <json.hpp>

#include "whatif/classifier.hpp"
#include "whatif/service.hpp"

namespace whatif {

/// {"topk": [{"class_id", "label", "probability"}...], "distribution": [...]}
nlohmann::json scores_to_json(const ClassScores& scores);

/// Overrides on top of the defaults. Keys: radius, patch_size, iterations,
/// pyramid_min, search_decay, seed. Unknown keys or bad types throw ApiError(400).
InpaintParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const InpaintParams& params);

} // namespace whatif
