#pragma once

// Behavior-model persistence. JSON Lines: a header line (kind, bid space,
// bandwidth or smoothing) followed by one line per advertiser. Doubles are
// written in shortest round-trip form, so save/load is lossless.

#include <filesystem>
#include <iosfwd>

#include "mechlearn/behavior.hpp"

namespace mechlearn {

void save_model(std::ostream& out, const BehaviorModel& model);
BehaviorModel load_model(std::istream& in);

void save_model(const std::filesystem::path& path, const BehaviorModel& model);
BehaviorModel load_model(const std::filesystem::path& path);

}  // namespace mechlearn
