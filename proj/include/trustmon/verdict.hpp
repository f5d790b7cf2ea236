#pragma once

#include <string_view>

namespace trustmon {

/// A detector's opinion about one model prediction.
enum class Verdict { kCorrect, kIncorrect, kUncertain };

std::string_view to_string(Verdict verdict);

/// Parses "correct" / "incorrect" / "uncertain"; throws ParseError otherwise.
Verdict parse_verdict(std::string_view text);

}  // namespace trustmon
