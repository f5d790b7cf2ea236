#include "trustmon/verdict.hpp"

#include <string>

#include "trustmon/error.hpp"

namespace trustmon {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kCorrect:
      return "correct";
    case Verdict::kIncorrect:
      return "incorrect";
    case Verdict::kUncertain:
      return "uncertain";
  }
  return "correct";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "correct") return Verdict::kCorrect;
  if (text == "incorrect") return Verdict::kIncorrect;
  if (text == "uncertain") return Verdict::kUncertain;
  throw ParseError("unknown verdict '" + std::string(text) + "'");
}

}  // namespace trustmon
